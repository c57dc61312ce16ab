use std::fmt;

/// A generator label with an orientation.
///
/// `sign` is `+1`/`-1` for a free generator and its inverse, and `0` for an
/// involution (a generator equal to its own inverse).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub gen: u16,
    pub sign: i8,
}

impl Letter {
    pub const UNLABELED: Letter = Letter { gen: 0, sign: 0 };

    pub fn new(gen: u16, sign: i8) -> Self {
        Letter { gen, sign }
    }

    pub fn inverse(self) -> Self {
        Letter {
            gen: self.gen,
            sign: -self.sign,
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.gen, self.sign)
    }
}

/// A word of at most [`PackedWord::MAX_LEN`] letter indices (each `< 16`)
/// packed into a `u128`: four bits per letter, length in the top byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PackedWord(u128);

impl PackedWord {
    pub const MAX_LEN: usize = 30;
    pub const MAX_LETTERS: usize = 16;

    pub const EMPTY: PackedWord = PackedWord(0);

    #[inline]
    pub fn len(self) -> usize {
        (self.0 >> 120) as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn get(self, i: usize) -> usize {
        debug_assert!(i < self.len());
        ((self.0 >> (4 * i)) & 0xf) as usize
    }

    #[inline]
    pub fn last(self) -> Option<usize> {
        match self.len() {
            0 => None,
            n => Some(self.get(n - 1)),
        }
    }

    #[inline]
    pub fn push(self, letter: usize) -> Self {
        let n = self.len();
        assert!(n < Self::MAX_LEN, "packed word overflow");
        debug_assert!(letter < Self::MAX_LETTERS);
        let body = self.0 & ((1u128 << 120) - 1);
        PackedWord(body | ((letter as u128) << (4 * n)) | (((n + 1) as u128) << 120))
    }

    #[inline]
    pub fn pop(self) -> Self {
        let n = self.len();
        debug_assert!(n > 0);
        let body = self.0 & ((1u128 << (4 * (n - 1))) - 1);
        PackedWord(body | (((n - 1) as u128) << 120))
    }

    pub fn from_letters(letters: &[usize]) -> Self {
        letters.iter().fold(Self::EMPTY, |w, &l| w.push(l))
    }

    pub fn to_vec(self) -> Vec<usize> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    #[inline]
    pub fn raw(self) -> u128 {
        self.0
    }
}

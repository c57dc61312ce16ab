use std::fmt;
use std::str::FromStr;

use super::family::GroupFamily;
use super::word::PackedWord;
use crate::error::{Error, Result};

/// Subgroup `H` of a free group, given by a decidable membership rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubgroupOracle {
    Trivial,
    Whole,
    /// `⟨w⟩` for a cyclically reduced word `w` (letter indices, see
    /// [`GroupFamily::letters`]).
    Cyclic(Vec<usize>),
    /// Finite-index subgroup given by the right action of each generator on
    /// the cosets; coset 0 is `H`.
    CosetTable(CosetTable),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CosetTable {
    /// `perms[g][c]` is the coset `c·g` for the positive generator `g`.
    pub perms: Vec<Vec<u32>>,
}

impl CosetTable {
    pub fn index(&self) -> usize {
        self.perms.first().map_or(1, Vec::len)
    }

    /// Coset reached from `coset` by letter index `letter` of a free group.
    pub fn act(&self, coset: u32, letter: usize) -> u32 {
        let perm = &self.perms[letter / 2];
        if letter.is_multiple_of(2) {
            perm[coset as usize]
        } else {
            perm.iter().position(|&c| c == coset).unwrap() as u32
        }
    }
}

/// Letter index of `a`, `A`, `b`, ... (lower case positive, upper case inverse).
pub fn parse_word(s: &str) -> Result<Vec<usize>> {
    s.chars()
        .map(|c| {
            let lower = c.to_ascii_lowercase();
            if !lower.is_ascii_lowercase() || lower > 'h' {
                return Err(Error::Parameter(format!("bad letter `{c}` in word `{s}`")));
            }
            let g = (lower as u8 - b'a') as usize;
            Ok(2 * g + usize::from(c.is_ascii_uppercase()))
        })
        .collect()
}

pub fn format_word(word: &[usize]) -> String {
    word.iter()
        .map(|&l| {
            let c = (b'a' + (l / 2) as u8) as char;
            if l % 2 == 1 {
                c.to_ascii_uppercase()
            } else {
                c
            }
        })
        .collect()
}

/// Free reduction in a free group (inverse of letter `l` is `l ^ 1`).
pub fn free_reduce(word: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(word.len());
    for &l in word {
        if out.last() == Some(&(l ^ 1)) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

pub fn invert(word: &[usize]) -> Vec<usize> {
    word.iter().rev().map(|&l| l ^ 1).collect()
}

/// Canonical name of a right coset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CosetId {
    /// Reduced word itself (trivial subgroup).
    Word(PackedWord),
    Whole,
    /// Position on the cycle read by `w`, plus the reduced tail after
    /// leaving the cycle.
    Cycle { pos: u32, tail: PackedWord },
    Table(u32),
}

impl SubgroupOracle {
    pub fn validate(&self, family: &GroupFamily) -> Result<()> {
        let rank = match *family {
            GroupFamily::Free { rank } => rank,
            _ => {
                return Err(Error::Undecidable(format!(
                    "subgroup oracles are defined for free groups, not {family}"
                )))
            }
        };
        match self {
            SubgroupOracle::Trivial | SubgroupOracle::Whole => Ok(()),
            SubgroupOracle::Cyclic(w) => {
                if w.is_empty() || w.iter().any(|&l| l >= 2 * rank) {
                    return Err(Error::Undecidable(format!(
                        "cyclic generator `{}` is empty or uses letters outside {family}",
                        format_word(w)
                    )));
                }
                let cyclic_reduced = free_reduce(w).len() == w.len()
                    && (w.len() == 1 || w[0] != (w[w.len() - 1] ^ 1));
                if !cyclic_reduced {
                    return Err(Error::Undecidable(format!(
                        "`{}` is not cyclically reduced",
                        format_word(w)
                    )));
                }
                if w.len() > 255 {
                    return Err(Error::Undecidable("cyclic generator longer than 255".into()));
                }
                Ok(())
            }
            SubgroupOracle::CosetTable(t) => {
                let n = t.index();
                if t.perms.len() != rank || n == 0 {
                    return Err(Error::Undecidable(
                        "coset table must give one permutation per generator".into(),
                    ));
                }
                for perm in &t.perms {
                    let mut seen = vec![false; n];
                    if perm.len() != n {
                        return Err(Error::Undecidable("ragged coset table".into()));
                    }
                    for &c in perm {
                        let c = c as usize;
                        if c >= n || std::mem::replace(&mut seen[c], true) {
                            return Err(Error::Undecidable(
                                "coset table row is not a permutation".into(),
                            ));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// Membership of the element represented by `word`.
    pub fn contains(&self, word: &[usize]) -> bool {
        match self {
            SubgroupOracle::Trivial => free_reduce(word).is_empty(),
            SubgroupOracle::Whole => true,
            SubgroupOracle::Cyclic(w) => {
                // u ∈ ⟨w⟩ iff the free reduction of u is w^m for some m ∈ ℤ
                let u = free_reduce(word);
                if u.is_empty() {
                    return true;
                }
                if !u.len().is_multiple_of(w.len()) {
                    return false;
                }
                let winv = invert(w);
                [w, &winv]
                    .iter()
                    .any(|base| u.chunks(base.len()).all(|chunk| chunk == base.as_slice()))
            }
            SubgroupOracle::CosetTable(t) => {
                word.iter().fold(0u32, |c, &l| t.act(c, l)) == 0
            }
        }
    }

    pub fn coset_of_identity(&self) -> CosetId {
        match self {
            SubgroupOracle::Trivial => CosetId::Word(PackedWord::EMPTY),
            SubgroupOracle::Whole => CosetId::Whole,
            SubgroupOracle::Cyclic(_) => CosetId::Cycle {
                pos: 0,
                tail: PackedWord::EMPTY,
            },
            SubgroupOracle::CosetTable(_) => CosetId::Table(0),
        }
    }

    /// The coset `H·u` reached from `coset` by letter `letter`.
    pub fn coset_step(&self, coset: CosetId, letter: usize) -> CosetId {
        match (self, coset) {
            (SubgroupOracle::Trivial, CosetId::Word(w)) => {
                CosetId::Word(if w.last() == Some(letter ^ 1) {
                    w.pop()
                } else {
                    w.push(letter)
                })
            }
            (SubgroupOracle::Whole, _) => CosetId::Whole,
            (SubgroupOracle::Cyclic(w), CosetId::Cycle { pos, tail }) => {
                let n = w.len() as u32;
                if tail.is_empty() {
                    if letter == w[pos as usize] {
                        CosetId::Cycle {
                            pos: (pos + 1) % n,
                            tail,
                        }
                    } else if letter == w[((pos + n - 1) % n) as usize] ^ 1 {
                        CosetId::Cycle {
                            pos: (pos + n - 1) % n,
                            tail,
                        }
                    } else {
                        CosetId::Cycle {
                            pos,
                            tail: tail.push(letter),
                        }
                    }
                } else if tail.last() == Some(letter ^ 1) {
                    CosetId::Cycle {
                        pos,
                        tail: tail.pop(),
                    }
                } else {
                    CosetId::Cycle {
                        pos,
                        tail: tail.push(letter),
                    }
                }
            }
            (SubgroupOracle::CosetTable(t), CosetId::Table(c)) => CosetId::Table(t.act(c, letter)),
            _ => unreachable!("coset id does not belong to this oracle"),
        }
    }

    /// Canonical id of the right coset `H·u`; constant on each right coset.
    pub fn coset_id(&self, word: &[usize]) -> CosetId {
        word.iter()
            .fold(self.coset_of_identity(), |c, &l| self.coset_step(c, l))
    }
}

impl fmt::Display for SubgroupOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubgroupOracle::Trivial => write!(f, "trivial"),
            SubgroupOracle::Whole => write!(f, "whole"),
            SubgroupOracle::Cyclic(w) => write!(f, "cyclic({})", format_word(w)),
            SubgroupOracle::CosetTable(t) => {
                let rows: Vec<String> = t
                    .perms
                    .iter()
                    .map(|p| p.iter().map(u32::to_string).collect::<Vec<_>>().join(" "))
                    .collect();
                write!(f, "table({})", rows.join(";"))
            }
        }
    }
}

impl FromStr for SubgroupOracle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "trivial" => return Ok(SubgroupOracle::Trivial),
            "whole" => return Ok(SubgroupOracle::Whole),
            _ => {}
        }
        let inner = |prefix: &str| {
            s.strip_prefix(prefix)
                .and_then(|r| r.strip_prefix('('))
                .and_then(|r| r.strip_suffix(')'))
        };
        if let Some(w) = inner("cyclic") {
            return Ok(SubgroupOracle::Cyclic(parse_word(w.trim())?));
        }
        if let Some(body) = inner("table") {
            let perms = body
                .split(';')
                .map(|row| {
                    row.split_whitespace()
                        .map(|c| {
                            c.parse::<u32>()
                                .map_err(|_| Error::Parameter(format!("bad coset `{c}`")))
                        })
                        .collect::<Result<Vec<u32>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(SubgroupOracle::CosetTable(CosetTable { perms }));
        }
        Err(Error::Parameter(format!("unknown subgroup `{s}`")))
    }
}

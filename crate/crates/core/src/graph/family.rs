use std::fmt;
use std::str::FromStr;

use super::word::Letter;
use crate::error::{Error, Result};

/// Concrete vertex-transitive families whose balls we can generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupFamily {
    /// Free group on `rank` generators; letters are `a, a⁻¹, b, b⁻¹, ...`.
    Free { rank: usize },
    /// `ℤ^dim` with the standard basis; letters `e1, -e1, e2, -e2, ...`.
    FreeAbelian { dim: usize },
    /// The `degree`-regular tree, as the Cayley graph of a free product of
    /// `degree` copies of ℤ/2; every letter is an involution.
    RegularTree { degree: usize },
}

impl GroupFamily {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            GroupFamily::Free { rank } => (1..=8).contains(&rank),
            GroupFamily::FreeAbelian { dim } => (1..=16).contains(&dim),
            GroupFamily::RegularTree { degree } => (2..=16).contains(&degree),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("unsupported family {self}")))
        }
    }

    /// Letter table; slot `i` of every vertex carries letter `letters()[i]`.
    pub fn letters(&self) -> Vec<Letter> {
        match *self {
            GroupFamily::Free { rank } => (0..rank)
                .flat_map(|g| [Letter::new(g as u16, 1), Letter::new(g as u16, -1)])
                .collect(),
            GroupFamily::FreeAbelian { dim } => (0..dim)
                .flat_map(|g| [Letter::new(g as u16, 1), Letter::new(g as u16, -1)])
                .collect(),
            GroupFamily::RegularTree { degree } => {
                (0..degree).map(|g| Letter::new(g as u16, 0)).collect()
            }
        }
    }

    pub fn degree(&self) -> usize {
        match *self {
            GroupFamily::Free { rank } => 2 * rank,
            GroupFamily::FreeAbelian { dim } => 2 * dim,
            GroupFamily::RegularTree { degree } => degree,
        }
    }

    /// Index of the inverse letter.
    pub fn inverse_index(&self, letter: usize) -> usize {
        match self {
            GroupFamily::Free { .. } | GroupFamily::FreeAbelian { .. } => letter ^ 1,
            GroupFamily::RegularTree { .. } => letter,
        }
    }

    pub fn is_tree(&self) -> bool {
        !matches!(self, GroupFamily::FreeAbelian { dim } if *dim > 1)
    }

    /// Number of vertices in the ball of radius `radius`.
    pub fn ball_volume(&self, radius: usize) -> u128 {
        match *self {
            GroupFamily::Free { .. } | GroupFamily::RegularTree { .. } => {
                let d = self.degree() as u128;
                let mut total: u128 = 1;
                let mut sphere: u128 = d;
                for _ in 0..radius {
                    total = total.saturating_add(sphere);
                    sphere = sphere.saturating_mul(d - 1);
                }
                total
            }
            GroupFamily::FreeAbelian { dim } => {
                // Σ_i 2^i C(dim, i) C(radius, i)
                (0..=dim.min(radius))
                    .map(|i| (1u128 << i) * binom(dim, i) * binom(radius, i))
                    .sum()
            }
        }
    }
}

fn binom(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

impl fmt::Display for GroupFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupFamily::Free { rank } => write!(f, "free({rank})"),
            GroupFamily::FreeAbelian { dim } => write!(f, "free-abelian({dim})"),
            GroupFamily::RegularTree { degree } => write!(f, "regular-tree({degree})"),
        }
    }
}

impl FromStr for GroupFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parameter(format!("unknown family `{s}`"));
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let n: usize = s[open + 1..s.len() - 1].trim().parse().map_err(|_| bad())?;
        let family = match &s[..open] {
            "free" => GroupFamily::Free { rank: n },
            "free-abelian" => GroupFamily::FreeAbelian { dim: n },
            "regular-tree" | "tree" => GroupFamily::RegularTree { degree: n },
            _ => return Err(bad()),
        };
        family.validate()?;
        Ok(family)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_volumes() {
        assert_eq!(GroupFamily::RegularTree { degree: 3 }.ball_volume(2), 10);
        assert_eq!(GroupFamily::Free { rank: 2 }.ball_volume(1), 5);
        assert_eq!(GroupFamily::FreeAbelian { dim: 2 }.ball_volume(1), 5);
        // centred square numbers 2R² + 2R + 1
        for r in 0..10 {
            let r128 = r as u128;
            assert_eq!(
                GroupFamily::FreeAbelian { dim: 2 }.ball_volume(r),
                2 * r128 * r128 + 2 * r128 + 1
            );
        }
    }

    #[test]
    fn parse_display() {
        for s in ["free(2)", "free-abelian(3)", "regular-tree(4)"] {
            let f: GroupFamily = s.parse().unwrap();
            assert_eq!(f.to_string(), s);
        }
        assert!("free(0)".parse::<GroupFamily>().is_err());
        assert!("lattice(2)".parse::<GroupFamily>().is_err());
    }
}

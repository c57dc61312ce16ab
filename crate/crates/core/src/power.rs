//! Power iteration for symmetric nonnegative operators.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralRadiusResult {
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Largest eigenvalue modulus of a symmetric operator on `R^n`.
///
/// Iterates `f ← Kf / ‖Kf‖` from the all-ones vector and reports `‖Kf‖` for
/// unit `f`. Each iterate is a lower bound on `‖K‖` and the sequence is
/// nondecreasing, so `±λ` pairs of bipartite operators cause no oscillation.
/// The residual is the change of the estimate over the last iteration.
pub fn power_iteration(
    n: usize,
    apply: impl Fn(&[f64], &mut [f64]),
    max_iters: usize,
    tol: f64,
) -> Result<SpectralRadiusResult> {
    if n == 0 {
        return Err(Error::Parameter("operator on an empty space".into()));
    }
    let mut f = vec![1.0 / (n as f64).sqrt(); n];
    let mut g = vec![0.0; n];
    let mut value = 0.0;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iters {
        apply(&f, &mut g);
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(SpectralRadiusResult {
                value: 0.0,
                iterations: it,
                residual: 0.0,
            });
        }
        residual = (norm - value).abs();
        value = norm;
        for (fi, gi) in f.iter_mut().zip(&g) {
            *fi = gi / norm;
        }
        if it > 1 && residual < tol {
            return Ok(SpectralRadiusResult {
                value,
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iters,
        residual,
    })
}

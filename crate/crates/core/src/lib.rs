//! Random walks, co-spectral radii and percolation exponents on truncated
//! Cayley graphs, regular trees and Schreier graphs.

pub mod cospectral;
pub mod error;
pub mod exponents;
pub mod graph;
pub mod percolation;
pub mod power;
pub mod rng;
pub mod two_three;
pub mod walk;
pub mod walk_growth;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use graph::{build_ball, build_schreier, GroupFamily, Letter, RootedGraph, SubgroupOracle};
pub use walk::{Distribution, WalkKernel};

/// Runs `f` on a rayon pool with `workers` threads (0 = rayon default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Parameter(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

//! Walk counts `w_n(o)` and their exponential growth.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Letter, RootedGraph};
use crate::power::{power_iteration, SpectralRadiusResult};
use crate::rng;
use crate::walk::Neumaier;

/// `log w_n(o)` for `n = 0..=n_max` (`-inf` once no walk of that length exists).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkCountSequence {
    pub log_w: Vec<f64>,
    pub n_max: usize,
    pub exact: bool,
}

/// Counts walks from the root by iterating `x_{k+1}(v) = Σ_{u∼v} x_k(u)`,
/// renormalising by the maximum after every step.
pub fn count_walks(g: &RootedGraph, n_max: usize) -> WalkCountSequence {
    let n = g.vertex_count();
    let mut x = vec![0.0; n];
    let mut next = vec![0.0; n];
    x[0] = 1.0;
    let mut log_scale = 0.0;
    let mut log_w = Vec::with_capacity(n_max + 1);
    log_w.push(0.0);
    for k in 1..=n_max {
        // after k steps the walk is within distance k
        let active = g.layer_end(k);
        let mut max = 0.0f64;
        for v in 0..active {
            let mut s = 0.0;
            for e in g.edges(v as u32) {
                s += x[e.to as usize];
            }
            next[v] = s;
            max = max.max(s);
        }
        std::mem::swap(&mut x, &mut next);
        if max == 0.0 {
            log_w.resize(n_max + 1, f64::NEG_INFINITY);
            break;
        }
        let mut total = Neumaier::default();
        for xv in &mut x[..active] {
            *xv /= max;
            total.add(*xv);
        }
        log_scale += max.ln();
        log_w.push(log_scale + total.value().ln());
    }
    WalkCountSequence {
        log_w,
        n_max,
        exact: n_max <= g.safe_horizon(g.root()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthEstimate {
    /// `(1/2) log(w_n / w_{n−2})` at `n = n_max`.
    pub ratio: f64,
    /// `(1/n) log w_n` at `n = n_max`.
    pub root: f64,
    /// `exp(ratio)`, the growth base; 0 when walks die out.
    pub base: f64,
    pub n: usize,
    pub exact: bool,
    pub warnings: Vec<String>,
}

pub fn walk_growth_rate(seq: &WalkCountSequence) -> Result<GrowthEstimate> {
    let n = seq.n_max;
    if n < 4 {
        return Err(Error::Parameter("walk growth needs n_max >= 4".into()));
    }
    let (a, b) = (seq.log_w[n], seq.log_w[n - 2]);
    let mut warnings = Vec::new();
    let ratio = if a == f64::NEG_INFINITY {
        warnings.push("no walks of length n_max: the root is isolated".into());
        f64::NEG_INFINITY
    } else {
        0.5 * (a - b)
    };
    if !seq.exact {
        warnings.push("counts are truncated by the ball boundary (lower bounds)".into());
    }
    Ok(GrowthEstimate {
        ratio,
        root: a / n as f64,
        base: ratio.exp(),
        n,
        exact: seq.exact,
        warnings,
    })
}

impl WalkCountSequence {
    /// Rows `n,log_w,ratio_est,root_est` with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,log_w,ratio_est,root_est\n");
        for (n, &lw) in self.log_w.iter().enumerate() {
            let ratio = if n >= 2 { (0.5 * (lw - self.log_w[n - 2])).to_string() } else { String::new() };
            let root = if n >= 1 { (lw / n as f64).to_string() } else { String::new() };
            let _ = writeln!(out, "{n},{lw},{ratio},{root}");
        }
        out
    }
}

/// `‖A‖` of the adjacency operator of a finite connected graph.
pub fn finite_urg_operator_norm(g: &RootedGraph) -> Result<SpectralRadiusResult> {
    if g.has_boundary() {
        return Err(Error::Parameter("operator norm needs a finite graph without boundary".into()));
    }
    power_iteration(
        g.vertex_count(),
        |f, out| {
            for (v, o) in out.iter_mut().enumerate() {
                *o = g.edges(v as u32).map(|e| f[e.to as usize]).sum();
            }
        },
        1_000_000,
        1e-14,
    )
}

/// Random connected simple graph: a uniform recursive spanning tree plus
/// `extra` distinct random edges.
pub fn random_connected_graph(vertices: usize, extra: usize, seed: u64, index: u64) -> Result<RootedGraph> {
    if vertices == 0 {
        return Err(Error::Parameter("graph needs a vertex".into()));
    }
    let mut rng = rng::stream(seed, "random-graph", index);
    let mut edges = BTreeSet::new();
    for v in 1..vertices as u32 {
        let u = rng.random_range(0..v);
        edges.insert((u, v));
    }
    let possible = vertices * (vertices - 1) / 2;
    let target = (edges.len() + extra).min(possible);
    while edges.len() < target {
        let u = rng.random_range(0..vertices as u32);
        let v = rng.random_range(0..vertices as u32);
        if u != v {
            edges.insert((u.min(v), u.max(v)));
        }
    }
    let list: Vec<(u32, u32, Letter)> = edges.into_iter().map(|(u, v)| (u, v, Letter::UNLABELED)).collect();
    RootedGraph::from_edges(vertices, 0, &list, "random")
}

//! Symmetric step distributions and their n-step distributions on a
//! [`RootedGraph`], computed exactly or sampled.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{GraphOrigin, Letter, RootedGraph};
use crate::rng;

const MASS_TOL: f64 = 1e-12;
/// Prefix length above which a dense step runs on the rayon pool.
const PARALLEL_CHUNK: usize = 1 << 16;

/// Finitely supported symmetric step law with a holding probability.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkKernel {
    steps: Vec<(Letter, f64)>,
    hold: f64,
}

impl WalkKernel {
    pub fn new(steps: Vec<(Letter, f64)>, hold: f64) -> Result<Self> {
        let k = WalkKernel { steps, hold };
        k.validate()?;
        Ok(k)
    }

    /// Simple random walk: uniform over `letters`.
    pub fn simple(letters: &[Letter]) -> Self {
        let w = 1.0 / letters.len() as f64;
        WalkKernel {
            steps: letters.iter().map(|&l| (l, w)).collect(),
            hold: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.hold) {
            return Err(Error::Parameter(format!("hold {} outside [0, 1]", self.hold)));
        }
        let mut total = self.hold;
        for &(l, w) in &self.steps {
            if !(w >= 0.0) {
                return Err(Error::Parameter(format!("negative weight {w} on {l}")));
            }
            total += w;
            let back = self.weight(l.inverse());
            if (back - self.weight(l)).abs() > MASS_TOL {
                return Err(Error::Parameter(format!(
                    "kernel is not symmetric: weight({l}) != weight of its inverse"
                )));
            }
        }
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::Parameter(format!("kernel mass is {total}, not 1")));
        }
        Ok(())
    }

    pub fn hold(&self) -> f64 {
        self.hold
    }

    pub fn steps(&self) -> &[(Letter, f64)] {
        &self.steps
    }

    /// Total weight on `letter` (0 when absent).
    pub fn weight(&self, letter: Letter) -> f64 {
        self.steps
            .iter()
            .filter(|(l, _)| *l == letter)
            .map(|(_, w)| w)
            .sum()
    }

    /// The holding probability when the kernel is uniform over exactly
    /// `letters` apart from holding.
    pub fn uniform_hold(&self, letters: &[Letter]) -> Option<f64> {
        let w = (1.0 - self.hold) / letters.len() as f64;
        let covers = letters.iter().all(|&l| (self.weight(l) - w).abs() <= MASS_TOL);
        let only = self.steps.iter().all(|(l, x)| *x == 0.0 || letters.contains(l));
        (covers && only).then_some(self.hold)
    }

    /// `(1 - t) ν + t δ_id`.
    pub fn lazify(&self, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Parameter(format!("laziness {t} outside [0, 1]")));
        }
        Ok(WalkKernel {
            steps: self.steps.iter().map(|&(l, w)| (l, (1.0 - t) * w)).collect(),
            hold: t + (1.0 - t) * self.hold,
        })
    }

    fn slot_weights(&self, g: &RootedGraph) -> SlotWeights {
        match g.uniform_letters() {
            Some(letters) => SlotWeights::Uniform(letters.iter().map(|&l| self.weight(l)).collect()),
            None => SlotWeights::PerSlot(
                (0..g.vertex_count() as u32)
                    .flat_map(|v| (0..g.width()).map(move |s| (v, s)))
                    .map(|(v, s)| self.weight(g.slot_letter(v, s)))
                    .collect(),
            ),
        }
    }
}

enum SlotWeights {
    Uniform(Vec<f64>),
    PerSlot(Vec<f64>),
}

impl SlotWeights {
    #[inline]
    fn get(&self, width: usize, v: usize, slot: usize) -> f64 {
        match self {
            SlotWeights::Uniform(w) => w[slot],
            SlotWeights::PerSlot(w) => w[v * width + slot],
        }
    }
}

/// One pull step `next[v] = hold p[v] + Σ_slots w p[target]` on `[0, len)`.
/// Kernel symmetry makes pulling along a slot equal to pushing back along it.
fn pull_step(
    g: &RootedGraph,
    weights: &SlotWeights,
    hold: f64,
    cur: &[f64],
    next: &mut [f64],
    len: usize,
) {
    let width = g.width();
    let body = |(offset, chunk): (usize, &mut [f64])| {
        for (i, out) in chunk.iter_mut().enumerate() {
            let v = offset + i;
            let mut acc = hold * cur[v];
            for (slot, &t) in g.raw_slots(v as u32).iter().enumerate() {
                if t != u32::MAX {
                    acc += weights.get(width, v, slot) * cur[t as usize];
                }
            }
            *out = acc;
        }
    };
    if len > PARALLEL_CHUNK {
        next[..len]
            .par_chunks_mut(PARALLEL_CHUNK)
            .enumerate()
            .map(|(i, c)| (i * PARALLEL_CHUNK, c))
            .for_each(body);
    } else {
        body((0, &mut next[..len]));
    }
}

/// The walk's Markov operator on the ball, with zero (Dirichlet) values
/// outside it.
pub struct MarkovOperator<'g> {
    g: &'g RootedGraph,
    weights: SlotWeights,
    hold: f64,
}

impl<'g> MarkovOperator<'g> {
    pub fn new(g: &'g RootedGraph, k: &WalkKernel) -> Self {
        MarkovOperator {
            g,
            weights: k.slot_weights(g),
            hold: k.hold,
        }
    }

    pub fn dim(&self) -> usize {
        self.g.vertex_count()
    }

    pub fn apply(&self, f: &[f64], out: &mut [f64]) {
        pull_step(self.g, &self.weights, self.hold, f, out, self.g.vertex_count());
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    /// Sorted by vertex id.
    Sparse(Vec<(u32, f64)>),
    Dense(Vec<f64>),
}

/// Law of the walk after `steps_taken` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    storage: Storage,
    steps_taken: usize,
    exact: bool,
}

impl Distribution {
    pub fn point(v: u32) -> Self {
        Distribution {
            storage: Storage::Sparse(vec![(v, 1.0)]),
            steps_taken: 0,
            exact: true,
        }
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    /// True when no mass can have left the ball.
    pub fn exact_flag(&self) -> bool {
        self.exact
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    pub fn get(&self, v: u32) -> f64 {
        match &self.storage {
            Storage::Sparse(s) => s
                .binary_search_by_key(&v, |&(u, _)| u)
                .map(|i| s[i].1)
                .unwrap_or(0.0),
            Storage::Dense(d) => d.get(v as usize).copied().unwrap_or(0.0),
        }
    }

    /// Vertices with positive mass, in id order.
    pub fn iter(&self) -> Box<dyn Iterator<Item = (u32, f64)> + '_> {
        match &self.storage {
            Storage::Sparse(s) => Box::new(s.iter().copied().filter(|&(_, p)| p > 0.0)),
            Storage::Dense(d) => Box::new(
                d.iter()
                    .enumerate()
                    .filter(|&(_, &p)| p > 0.0)
                    .map(|(v, &p)| (v as u32, p)),
            ),
        }
    }

    pub fn support_len(&self) -> usize {
        self.iter().count()
    }

    pub fn total_mass(&self) -> f64 {
        hit_probability(self, |_| true)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("vertex,probability\n");
        for (v, p) in self.iter() {
            let _ = writeln!(out, "{v},{p:e}");
        }
        out
    }
}

/// Exact law after `n` steps from `start`, with mass leaving the ball dropped.
pub fn evolve(g: &RootedGraph, k: &WalkKernel, start: u32, n: usize) -> Distribution {
    let weights = k.slot_weights(g);
    let width = g.width();
    let dense_threshold = g.vertex_count() / 4;
    let mut dist = Distribution::point(start);
    let start_dist = g.dist(start);
    for t in 0..n {
        let storage = match std::mem::replace(&mut dist.storage, Storage::Sparse(Vec::new())) {
            Storage::Sparse(cur) => {
                let mut pushed: Vec<(u32, f64)> = Vec::with_capacity(cur.len() * (width + 1));
                for &(v, p) in &cur {
                    if k.hold > 0.0 {
                        pushed.push((v, k.hold * p));
                    }
                    for (slot, &to) in g.raw_slots(v).iter().enumerate() {
                        let w = weights.get(width, v as usize, slot);
                        if to != u32::MAX && w > 0.0 {
                            pushed.push((to, w * p));
                        }
                    }
                }
                pushed.sort_by_key(|&(v, _)| v);
                let mut merged: Vec<(u32, f64)> = Vec::with_capacity(pushed.len());
                for (v, p) in pushed {
                    match merged.last_mut() {
                        Some((u, q)) if *u == v => *q += p,
                        _ => merged.push((v, p)),
                    }
                }
                if merged.len() > dense_threshold {
                    let mut d = vec![0.0; g.vertex_count()];
                    for (v, p) in merged {
                        d[v as usize] = p;
                    }
                    Storage::Dense(d)
                } else {
                    Storage::Sparse(merged)
                }
            }
            Storage::Dense(cur) => {
                let len = g.layer_end(start_dist + t + 1);
                let mut next = vec![0.0; g.vertex_count()];
                pull_step(g, &weights, k.hold, &cur, &mut next, len);
                Storage::Dense(next)
            }
        };
        dist.storage = storage;
    }
    dist.steps_taken = n;
    dist.exact = n <= g.safe_horizon(start);
    dist
}

/// `Σ_{v ∈ target} dist(v)` with Neumaier compensation, in vertex order.
pub fn hit_probability(dist: &Distribution, target: impl Fn(u32) -> bool) -> f64 {
    let mut sum = Neumaier::default();
    for (v, p) in dist.iter() {
        if target(v) {
            sum.add(p);
        }
    }
    sum.value()
}

#[derive(Debug, Default, Clone, Copy)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `P(X_{2m} ∈ target)` for one even time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitPoint {
    pub steps: usize,
    pub probability: f64,
    pub exact: bool,
}

/// Hit probabilities `p_{2m, start, target}` for `m = 0..=n_max` from one
/// dense DP. When every target vertex lies within `target_radius` of the root,
/// vertices that cannot reach the target in the remaining time are pruned and
/// the exactness window on balls grows to `2m ≤ 2R + 1 − dist(start) − r_T`.
pub fn even_hit_sequence(
    g: &RootedGraph,
    k: &WalkKernel,
    start: u32,
    n_max: usize,
    target: &(dyn Fn(u32) -> bool + Sync),
    target_radius: Option<usize>,
) -> Vec<HitPoint> {
    let weights = k.slot_weights(g);
    let horizon = 2 * n_max;
    let start_dist = g.dist(start);
    let keep_radius = |t: usize| {
        let mut k = start_dist + t;
        if let Some(rt) = target_radius {
            k = k.min(horizon - t + rt);
        }
        k
    };
    let exact_until = exactness_horizon(g, start, target_radius);
    // pulls read one layer past the kept prefix, which must read as zero
    let buf_len = (0..=horizon)
        .map(|t| g.layer_end(keep_radius(t) + 1))
        .max()
        .unwrap_or(1);
    let mut cur = vec![0.0; buf_len];
    let mut next = vec![0.0; buf_len];
    cur[start as usize] = 1.0;
    let (mut cur_ext, mut next_ext) = (start as usize + 1, 0);
    let target_end = target_radius.map_or(usize::MAX, |rt| g.layer_end(rt));
    let evaluate = |p: &[f64], ext: usize| {
        let mut sum = Neumaier::default();
        for (v, &x) in p[..ext.min(target_end)].iter().enumerate() {
            if x != 0.0 && target(v as u32) {
                sum.add(x);
            }
        }
        sum.value()
    };
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(HitPoint {
        steps: 0,
        probability: evaluate(&cur, cur_ext),
        exact: true,
    });
    for t in 1..=horizon {
        let len = g.layer_end(keep_radius(t));
        pull_step(g, &weights, k.hold, &cur, &mut next, len);
        if next_ext > len {
            next[len..next_ext].fill(0.0);
        }
        next_ext = len;
        std::mem::swap(&mut cur, &mut next);
        std::mem::swap(&mut cur_ext, &mut next_ext);
        if t % 2 == 0 {
            out.push(HitPoint {
                steps: t,
                probability: evaluate(&cur, cur_ext),
                exact: t <= exact_until,
            });
        }
    }
    out
}

/// Dense laws at the even times `0, 2, …, 2 n_max` from `start`, each
/// truncated to the ids it can reach. Entry `m` is exact when
/// `2m ≤ safe_horizon(start)`.
pub fn even_snapshots(
    g: &RootedGraph,
    k: &WalkKernel,
    start: u32,
    n_max: usize,
    cap: u128,
) -> Result<Vec<Vec<f64>>> {
    let start_dist = g.dist(start);
    let requested: u128 = (0..=n_max).map(|m| g.layer_end(start_dist + 2 * m) as u128).sum();
    crate::graph::check_snapshot_cap(requested, cap)?;
    let weights = k.slot_weights(g);
    let full = g.layer_end(start_dist + 2 * n_max + 1);
    let mut cur = vec![0.0; full];
    let mut next = vec![0.0; full];
    cur[start as usize] = 1.0;
    let mut out = vec![vec![1.0]];
    out[0] = cur[..g.layer_end(start_dist)].to_vec();
    for t in 1..=2 * n_max {
        let len = g.layer_end(start_dist + t);
        pull_step(g, &weights, k.hold, &cur, &mut next, len);
        std::mem::swap(&mut cur, &mut next);
        if t % 2 == 0 {
            out.push(cur[..len].to_vec());
        }
    }
    Ok(out)
}

/// Largest step count for which hit probabilities of targets within
/// `target_radius` of the root are unaffected by truncation.
pub fn exactness_horizon(g: &RootedGraph, start: u32, target_radius: Option<usize>) -> usize {
    let safe = g.safe_horizon(start);
    if safe == usize::MAX {
        return usize::MAX;
    }
    match (g.origin(), target_radius) {
        (GraphOrigin::Ball(_) | GraphOrigin::Schreier(..), Some(rt)) if rt <= g.radius() => {
            // a lost path must climb to distance R + 1 and come back to r_T
            (2 * g.radius() + 1).saturating_sub(g.dist(start) + rt).max(safe)
        }
        _ => safe,
    }
}

/// Endpoint of one sampled trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trajectory {
    pub end: u32,
    /// False when the walk tried to leave the ball and was held instead.
    pub valid: bool,
}

/// Samples trajectory number `index` of the stream keyed by `seed`.
pub fn sample_walk(
    g: &RootedGraph,
    k: &WalkKernel,
    start: u32,
    n: usize,
    seed: u64,
    index: u64,
) -> Trajectory {
    let mut rng = rng::stream(seed, "walk", index);
    let mut v = start;
    let mut valid = true;
    for _ in 0..n {
        let mut u: f64 = rng.random();
        if u < k.hold {
            continue;
        }
        u -= k.hold;
        let mut chosen = None;
        for &(l, w) in &k.steps {
            if u < w {
                chosen = Some(l);
                break;
            }
            u -= w;
        }
        // rounding can leave u just above the last weight
        let letter = chosen.unwrap_or_else(|| k.steps.last().map(|s| s.0).unwrap_or(Letter::UNLABELED));
        match (0..g.width()).find(|&s| g.slot_letter(v, s) == letter).and_then(|s| g.slot(v, s)) {
            Some(to) => v = to,
            None => valid = false,
        }
    }
    Trajectory { end: v, valid }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkBatch {
    pub endpoints: Vec<u32>,
    pub invalid: usize,
}

impl WalkBatch {
    pub fn invalid_fraction(&self) -> f64 {
        self.invalid as f64 / self.endpoints.len().max(1) as f64
    }

    pub fn frequency(&self, target: impl Fn(u32) -> bool) -> f64 {
        self.endpoints.iter().filter(|&&v| target(v)).count() as f64 / self.endpoints.len().max(1) as f64
    }
}

/// `count` independent trajectories; results do not depend on `workers`.
pub fn sample_batch(
    g: &RootedGraph,
    k: &WalkKernel,
    start: u32,
    n: usize,
    count: usize,
    seed: u64,
    workers: usize,
) -> Result<WalkBatch> {
    let run = || {
        (0..count as u64)
            .into_par_iter()
            .map(|i| sample_walk(g, k, start, n, seed, i))
            .collect::<Vec<_>>()
    };
    let trajectories = crate::with_workers(workers, run)?;
    Ok(WalkBatch {
        invalid: trajectories.iter().filter(|t| !t.valid).count(),
        endpoints: trajectories.into_iter().map(|t| t.end).collect(),
    })
}

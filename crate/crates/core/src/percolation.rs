//! Bernoulli bond percolation on truncated graphs.
//!
//! Edge labels `U_e` are hashes of the seed and the canonical keys of the two
//! endpoints, so the same group element pair gets the same label in every
//! ball that contains it, and thresholding at `p ≤ q` gives nested open sets.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::error::{Error, Result};
use crate::graph::{GraphOrigin, GroupFamily, Letter, RootedGraph};
use crate::rng;

/// Deterministic uniform label per edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeCoupling {
    seed: u64,
}

impl EdgeCoupling {
    pub fn new(seed: u64) -> Self {
        EdgeCoupling { seed }
    }

    pub fn derived(seed: u64, tag: &str, index: u64) -> Self {
        EdgeCoupling {
            seed: rng::derive_seed(seed, tag, index),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Label of the edge between the vertices with keys `a` and `b`, carrying
    /// `letter` when read from `a`; the letter separates parallel edges.
    pub fn label(&self, a: u128, b: u128, letter: Letter) -> f64 {
        let (lo, hi, l) = if a <= b { (a, b, letter) } else { (b, a, letter.inverse()) };
        let l = if a == b && l.sign < 0 { l.inverse() } else { l };
        let letter_bits = (u64::from(l.gen) << 8) | u64::from(l.sign as u8);
        let h = rng::hash_u128(self.seed ^ rng::mix64(letter_bits), lo);
        rng::unit_from_bits(rng::hash_u128(h, hi))
    }
}

/// Undirected edges of a graph, each listed once.
#[derive(Debug, Clone)]
pub struct EdgeSet {
    edges: Vec<(u32, u32, Letter)>,
}

impl EdgeSet {
    pub fn of(g: &RootedGraph) -> Self {
        let mut edges = Vec::new();
        for u in 0..g.vertex_count() as u32 {
            for e in g.edges(u) {
                if e.to > u || (e.to == u && e.letter.sign >= 0) {
                    edges.push((u, e.to, e.letter));
                }
            }
        }
        EdgeSet { edges }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn get(&self, i: usize) -> (u32, u32, Letter) {
        self.edges[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &(u32, u32, Letter)> {
        self.edges.iter()
    }
}

/// A graph with its edge labels under one coupling; thresholding is cheap.
#[derive(Debug, Clone)]
pub struct CoupledGraph<'g> {
    graph: &'g RootedGraph,
    edges: EdgeSet,
    labels: Vec<f64>,
}

impl<'g> CoupledGraph<'g> {
    pub fn new(graph: &'g RootedGraph, coupling: &EdgeCoupling) -> Self {
        let edges = EdgeSet::of(graph);
        let keys = graph.vertex_keys();
        let labels = edges
            .iter()
            .map(|&(u, v, l)| coupling.label(keys[u as usize], keys[v as usize], l))
            .collect();
        CoupledGraph { graph, edges, labels }
    }

    pub fn graph(&self) -> &'g RootedGraph {
        self.graph
    }

    pub fn edges(&self) -> &EdgeSet {
        &self.edges
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn percolate(&self, p: f64) -> Result<PercolationSample> {
        check_probability(p)?;
        let open = self.labels.iter().map(|&u| u <= p && p > 0.0).collect();
        Ok(PercolationSample::from_open(self.graph, &self.edges, open, p))
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("probability {p} outside [0, 1]")))
    }
}

/// `U_e ≤ p` sample; `p = 0` opens nothing even for a label of exactly 0.
pub fn percolate(g: &RootedGraph, coupling: &EdgeCoupling, p: f64) -> Result<PercolationSample> {
    CoupledGraph::new(g, coupling).percolate(p)
}

/// Open edges and cluster labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PercolationSample {
    p: f64,
    edges: Vec<(u32, u32, Letter)>,
    open: Vec<u64>,
    cluster: Vec<u32>,
    approximate: bool,
}

impl PercolationSample {
    fn from_open(g: &RootedGraph, edges: &EdgeSet, open: Vec<bool>, p: f64) -> Self {
        let mut uf = UnionFind::new(g.vertex_count());
        for (i, &(u, v, _)) in edges.iter().enumerate() {
            if open[i] {
                uf.union(u, v);
            }
        }
        // label each cluster by its smallest vertex
        let n = g.vertex_count();
        let mut smallest = vec![u32::MAX; n];
        let mut cluster = vec![0u32; n];
        for v in 0..n as u32 {
            let r = uf.find(v) as usize;
            if smallest[r] == u32::MAX {
                smallest[r] = v;
            }
            cluster[v as usize] = smallest[r];
        }
        let mut bits = vec![0u64; open.len().div_ceil(64)];
        for (i, _) in open.iter().enumerate().filter(|(_, &o)| o) {
            bits[i / 64] |= 1 << (i % 64);
        }
        PercolationSample {
            p,
            edges: edges.edges.clone(),
            open: bits,
            cluster,
            approximate: !cluster_is_exact(g),
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_open(&self, edge: usize) -> bool {
        self.open[edge / 64] >> (edge % 64) & 1 == 1
    }

    pub fn open_count(&self) -> usize {
        self.open.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn cluster_id(&self, v: u32) -> u32 {
        self.cluster[v as usize]
    }

    /// True when clusters in the ball may miss connections through vertices
    /// outside it.
    pub fn approximate(&self) -> bool {
        self.approximate
    }

    pub fn cluster_of_root(&self) -> ClusterPredicate {
        let root = self.cluster[0];
        ClusterPredicate {
            members: self.cluster.iter().map(|&c| c == root).collect(),
            approximate: self.approximate,
        }
    }

    /// Map from cluster size to number of clusters.
    pub fn cluster_size_histogram(&self) -> BTreeMap<usize, usize> {
        let mut sizes: BTreeMap<u32, usize> = BTreeMap::new();
        for &c in &self.cluster {
            *sizes.entry(c).or_default() += 1;
        }
        let mut hist = BTreeMap::new();
        for s in sizes.into_values() {
            *hist.entry(s).or_default() += 1;
        }
        hist
    }

    pub fn edges_csv(&self) -> String {
        let mut out = String::from("u,v,gen,sign,open\n");
        for (i, &(u, v, l)) in self.edges.iter().enumerate() {
            let _ = writeln!(out, "{u},{v},{},{},{}", l.gen, l.sign, u8::from(self.is_open(i)));
        }
        out
    }

    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("size,count\n");
        for (s, c) in self.cluster_size_histogram() {
            let _ = writeln!(out, "{s},{c}");
        }
        out
    }

    /// True when every open edge of `self` is open in `other`.
    pub fn is_subset_of(&self, other: &PercolationSample) -> bool {
        self.open.len() == other.open.len()
            && self.open.iter().zip(&other.open).all(|(a, b)| a & !b == 0)
    }
}

fn cluster_is_exact(g: &RootedGraph) -> bool {
    match g.origin() {
        GraphOrigin::Ball(GroupFamily::FreeAbelian { .. }) => false,
        GraphOrigin::Ball(_) => true,
        GraphOrigin::Schreier(_, h) => matches!(h, crate::graph::SubgroupOracle::Trivial) || !g.has_boundary(),
        GraphOrigin::Restricted => false,
        GraphOrigin::Custom => !g.has_boundary(),
    }
}

/// Membership in the root's open cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterPredicate {
    members: Vec<bool>,
    pub approximate: bool,
}

impl ClusterPredicate {
    #[inline]
    pub fn contains(&self, v: u32) -> bool {
        self.members[v as usize]
    }

    pub fn size(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }
}

struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut v: u32) -> u32 {
        while self.parent[v as usize] != v {
            let p = self.parent[v as usize];
            self.parent[v as usize] = self.parent[p as usize];
            v = p;
        }
        v
    }

    fn union(&mut self, a: u32, b: u32) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a as usize] < self.size[b as usize] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b as usize] = a;
        self.size[a as usize] += self.size[b as usize];
    }
}

/// `(P, Q)` with `P ~ Bernoulli(p)`, `Q = P ∪ Bernoulli((q - p)/(1 - p))`
/// drawn independently.
pub fn union_coupling(
    g: &RootedGraph,
    p: f64,
    q: f64,
    seed: u64,
) -> Result<(PercolationSample, PercolationSample)> {
    check_probability(p)?;
    check_probability(q)?;
    if q < p {
        return Err(Error::Parameter(format!("union coupling needs p <= q, got {p} > {q}")));
    }
    if q >= 1.0 {
        return Err(Error::Parameter("union coupling needs q < 1".into()));
    }
    let base = CoupledGraph::new(g, &EdgeCoupling::derived(seed, "union-base", 0));
    let extra = CoupledGraph::new(g, &EdgeCoupling::derived(seed, "union-extra", 0));
    let r = (q - p) / (1.0 - p);
    let lower = base.percolate(p)?;
    let open = (0..base.edges.len())
        .map(|i| lower.is_open(i) || (r > 0.0 && extra.labels[i] <= r))
        .collect();
    let upper = PercolationSample::from_open(g, &base.edges, open, q);
    Ok((lower, upper))
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl McEstimate {
    pub fn from_bernoulli(hits: usize, samples: usize) -> Self {
        let value = hits as f64 / samples as f64;
        McEstimate {
            value,
            std_error: (value * (1.0 - value) / samples as f64).sqrt(),
            samples,
        }
    }

    pub fn ci_halfwidth(&self, z: f64) -> f64 {
        z * self.std_error
    }
}

/// Monte Carlo estimate of `τ_p(u, v)` within the ball.
pub fn tau_estimate(
    g: &RootedGraph,
    p: f64,
    u: u32,
    v: u32,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_probability(p)?;
    if samples == 0 {
        return Err(Error::Parameter("samples must be positive".into()));
    }
    if u == v {
        return Ok(McEstimate {
            value: 1.0,
            std_error: 0.0,
            samples,
        });
    }
    let edges = EdgeSet::of(g);
    let keys = g.vertex_keys();
    let hits: usize = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let c = EdgeCoupling::derived(seed, "tau", i);
            let mut uf = UnionFind::new(g.vertex_count());
            for &(a, b, l) in edges.iter() {
                if p > 0.0 && c.label(keys[a as usize], keys[b as usize], l) <= p {
                    uf.union(a, b);
                }
            }
            usize::from(uf.find(u) == uf.find(v))
        })
        .sum();
    Ok(McEstimate::from_bernoulli(hits, samples))
}

/// Sphere counts `|C ∩ S_k|` of the root cluster on the `d`-regular tree.
///
/// The cluster is a branching process: the root keeps each of its `d` edges
/// with probability `p`, every later cluster vertex each of its `d − 1`
/// outward edges. Generation sizes are drawn as binomial quantiles of one
/// uniform per (sample, generation), so for a fixed seed the counts are
/// nondecreasing in `p`.
#[derive(Debug, Clone)]
pub struct TreeClusterSampler {
    degree: usize,
    generations: usize,
    seed: u64,
}

impl TreeClusterSampler {
    pub fn new(degree: usize, generations: usize, seed: u64) -> Result<Self> {
        if degree < 2 {
            return Err(Error::Parameter("tree degree must be at least 2".into()));
        }
        Ok(TreeClusterSampler {
            degree,
            generations,
            seed,
        })
    }

    /// `Z_0 = 1, Z_1, …, Z_generations` for sample `index`.
    pub fn sphere_counts(&self, p: f64, index: u64) -> Result<Vec<f64>> {
        check_probability(p)?;
        let mut rng = rng::stream(self.seed, "tree-cluster", index);
        let mut z = vec![1.0f64];
        let mut current: u64 = 1;
        for k in 0..self.generations {
            let u: f64 = rng.random();
            let trials = if k == 0 {
                self.degree as u64
            } else {
                current.saturating_mul(self.degree as u64 - 1)
            };
            current = binomial_quantile(trials, p, u)?;
            z.push(current as f64);
        }
        Ok(z)
    }

    /// Sphere sizes `|S_k|` of the tree.
    pub fn sphere_sizes(&self) -> Vec<f64> {
        let mut s = vec![1.0];
        let mut size = self.degree as f64;
        for _ in 0..self.generations {
            s.push(size);
            size *= (self.degree - 1) as f64;
        }
        s
    }
}

fn binomial_quantile(trials: u64, p: f64, u: f64) -> Result<u64> {
    if trials == 0 || p == 0.0 {
        return Ok(0);
    }
    if p == 1.0 {
        return Ok(trials);
    }
    let b = Binomial::new(p, trials).map_err(|e| Error::Parameter(format!("binomial: {e}")))?;
    // smallest k with cdf(k) >= u; the generic statrs search can fail when
    // the cdf saturates below u in floating point
    let (mut lo, mut hi) = (0u64, trials);
    if b.cdf(0) >= u {
        return Ok(0);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if b.cdf(mid) >= u {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_ball;

    fn tree(d: usize, r: usize) -> RootedGraph {
        build_ball(GroupFamily::RegularTree { degree: d }, r).unwrap()
    }

    #[test]
    fn extreme_probabilities() {
        let g = tree(3, 4);
        let c = EdgeCoupling::new(11);
        let s0 = percolate(&g, &c, 0.0).unwrap();
        assert_eq!(s0.open_count(), 0);
        assert_eq!(s0.cluster_of_root().size(), 1);
        assert_eq!(s0.cluster_size_histogram().get(&1), Some(&g.vertex_count()));
        let s1 = percolate(&g, &c, 1.0).unwrap();
        assert_eq!(s1.open_count(), g.vertex_count() - 1);
        assert_eq!(s1.cluster_of_root().size(), g.vertex_count());
        assert!(percolate(&g, &c, 1.5).is_err());
    }

    #[test]
    fn threshold_monotone() {
        let g = build_ball(GroupFamily::FreeAbelian { dim: 2 }, 6).unwrap();
        let cg = CoupledGraph::new(&g, &EdgeCoupling::new(5));
        let a = cg.percolate(0.3).unwrap();
        let b = cg.percolate(0.6).unwrap();
        assert!(a.is_subset_of(&b));
        assert!(a.approximate());
    }

    #[test]
    fn labels_consistent_across_radii() {
        let f = GroupFamily::Free { rank: 2 };
        let small = build_ball(f, 3).unwrap();
        let large = build_ball(f, 5).unwrap();
        let c = EdgeCoupling::new(3);
        let a = CoupledGraph::new(&small, &c);
        let b = CoupledGraph::new(&large, &c);
        // ids of a smaller ball are a prefix of the larger one
        for (i, e) in a.edges().iter().enumerate() {
            let j = b.edges().iter().position(|f| f == e).unwrap();
            assert_eq!(a.labels()[i], b.labels()[j]);
        }
    }

    #[test]
    fn tree_cluster_is_path_product() {
        let g = tree(3, 4);
        for seed in 0..50 {
            let cg = CoupledGraph::new(&g, &EdgeCoupling::new(seed));
            let s = cg.percolate(0.6).unwrap();
            let c = s.cluster_of_root();
            assert!(!c.approximate);
            for v in 0..g.vertex_count() as u32 {
                // walk the BFS tree path to the root
                let mut all_open = true;
                let mut x = v;
                while x != 0 {
                    let word = g.word(x);
                    let parent = g.follow(0, &word[..word.len() - 1]).unwrap();
                    let (lo, hi) = (parent.min(x), parent.max(x));
                    let e = cg.edges().iter().position(|&(a, b, _)| a == lo && b == hi).unwrap();
                    all_open &= s.is_open(e);
                    x = parent;
                }
                assert_eq!(c.contains(v), all_open);
            }
        }
    }

    /// Open-subgraph BFS as an independent check of the union-find labels.
    #[test]
    fn cluster_labels_match_bfs() {
        let g = build_ball(GroupFamily::FreeAbelian { dim: 2 }, 10).unwrap();
        for seed in 0..5 {
            let s = percolate(&g, &EdgeCoupling::new(seed), 0.5).unwrap();
            let mut adj = vec![Vec::new(); g.vertex_count()];
            for i in 0..s.edge_count() {
                if s.is_open(i) {
                    let (u, v, _) = s.edges[i];
                    adj[u as usize].push(v);
                    adj[v as usize].push(u);
                }
            }
            let mut comp = vec![u32::MAX; g.vertex_count()];
            for start in 0..g.vertex_count() {
                if comp[start] != u32::MAX {
                    continue;
                }
                comp[start] = start as u32;
                let mut stack = vec![start as u32];
                while let Some(x) = stack.pop() {
                    for &y in &adj[x as usize] {
                        if comp[y as usize] == u32::MAX {
                            comp[y as usize] = start as u32;
                            stack.push(y);
                        }
                    }
                }
            }
            for v in 0..g.vertex_count() as u32 {
                assert_eq!(s.cluster_id(v), comp[v as usize]);
            }
        }
    }

    #[test]
    fn union_coupling_examples() {
        let g = tree(4, 5);
        let (p, q) = union_coupling(&g, 0.4, 0.4, 1).unwrap();
        assert_eq!(p.open, q.open);
        let (p, q) = union_coupling(&g, 0.5, 0.75, 1).unwrap();
        assert!(p.is_subset_of(&q));
        assert!(union_coupling(&g, 0.6, 0.5, 1).is_err());
    }

    #[test]
    fn tau_examples() {
        let g = tree(3, 4);
        assert_eq!(tau_estimate(&g, 0.5, 2, 2, 10, 1).unwrap().value, 1.0);
        let v = g.follow(0, &[0, 1]).unwrap();
        let est = tau_estimate(&g, 0.5, 0, v, 20_000, 9).unwrap();
        assert!((est.value - 0.25).abs() <= 4.0 * (0.25f64 * 0.75 / 20_000.0).sqrt());
    }

    #[test]
    fn tau_on_lattice_box_matches_enumeration() {
        // 3 x 3 box of Z^2: 9 vertices, 12 edges
        let g = build_ball(GroupFamily::FreeAbelian { dim: 2 }, 2).unwrap();
        let boxed = g
            .cluster_restricted_subgraph(|v| g.lattice_coords(v).unwrap().iter().all(|c| c.abs() <= 1))
            .unwrap();
        let edges = EdgeSet::of(&boxed);
        assert_eq!(edges.len(), 12);
        let keys = boxed.vertex_keys();
        let find = |coords: [i64; 2]| {
            (0..g.vertex_count() as u32)
                .find(|&v| g.lattice_coords(v).unwrap() == coords)
                .map(|v| g.vertex_keys()[v as usize])
                .and_then(|k| keys.iter().position(|&x| x == k))
                .unwrap() as u32
        };
        let (u, v) = (find([-1, 0]), find([1, 0]));
        let mut exact = 0.0;
        for mask in 0u32..1 << 12 {
            let mut uf = UnionFind::new(boxed.vertex_count());
            for (i, &(a, b, _)) in edges.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    uf.union(a, b);
                }
            }
            if uf.find(u) == uf.find(v) {
                exact += 1.0 / 4096.0;
            }
        }
        let est = tau_estimate(&boxed, 0.5, u, v, 100_000, 4).unwrap();
        assert!((est.value - exact).abs() <= 4.0 * est.std_error, "{} vs {exact}", est.value);
    }

    #[test]
    fn tree_sampler_is_monotone_and_unbiased() {
        let s = TreeClusterSampler::new(4, 8, 1).unwrap();
        for i in 0..50 {
            let a = s.sphere_counts(0.3, i).unwrap();
            let b = s.sphere_counts(0.6, i).unwrap();
            let c = s.sphere_counts(1.0, i).unwrap();
            assert!(a.iter().zip(&b).all(|(x, y)| x <= y));
            assert_eq!(c, s.sphere_sizes());
        }
        assert!(s.sphere_counts(0.0, 0).unwrap()[1..].iter().all(|&z| z == 0.0));
        // E Z_3 = 4 * 3^2 * p^3
        let n = 20_000;
        let p: f64 = 0.5;
        let mean: f64 = (0..n).map(|i| s.sphere_counts(p, i).unwrap()[3]).sum::<f64>() / n as f64;
        let expected = 36.0 * p.powi(3);
        assert!((mean - expected).abs() < 0.1 * expected, "{mean} vs {expected}");
    }

    #[test]
    fn exports() {
        let g = tree(3, 1);
        let s = percolate(&g, &EdgeCoupling::new(2), 1.0).unwrap();
        assert_eq!(s.edges_csv().lines().count(), 4);
        assert_eq!(s.histogram_csv(), "size,count\n4,1\n");
    }
}

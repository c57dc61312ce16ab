//! Quenched and annealed co-spectral radii.
//!
//! Every estimate comes from even-time hitting probabilities `p_{2n}`. The
//! ratio `(p_{2n}/p_{2n−2})^{1/2}` is the point estimate; the root
//! `p_{2n}^{1/2n}` is reported alongside and its monotonicity in `n` is
//! checked.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{build_ball, build_schreier, GroupFamily, RootedGraph, SubgroupOracle};
use crate::percolation::{CoupledGraph, EdgeCoupling, TreeClusterSampler};
use crate::power::{power_iteration, SpectralRadiusResult};
use crate::walk::{even_hit_sequence, even_snapshots, MarkovOperator, Neumaier, WalkKernel};

/// Slack used when comparing extrapolated exponents.
pub const EXTRAPOLATION_SLACK: f64 = 1e-2;
/// Residual tolerance for power iteration.
pub const POWER_TOL: f64 = 1e-8;
/// Relative slack for monotonicity of exact sequences.
pub const EXACT_SLACK: f64 = 1e-12;
/// Standard errors allowed in Monte Carlo comparisons.
pub const CI_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ratio,
    Root,
}

/// `p_{2n}` with its standard error (0 when computed exactly).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SequencePoint {
    pub n: usize,
    pub p: f64,
    pub std_error: f64,
    pub root: f64,
    pub ratio: Option<f64>,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentEstimate {
    pub value: f64,
    pub method: Method,
    pub ratio: f64,
    pub root: f64,
    pub n_range: (usize, usize),
    pub ci_halfwidth: f64,
    pub monotone_certificate: bool,
    pub exact: bool,
    pub points: Vec<SequencePoint>,
    pub warnings: Vec<String>,
}

impl ExponentEstimate {
    /// Builds both extrapolations from `(p_{2n}, std_error, exact)` for
    /// `n = 0..=n_max`.
    pub fn from_sequence(seq: &[(f64, f64, bool)]) -> Result<Self> {
        let n_max = seq.len().saturating_sub(1);
        if n_max < 1 {
            return Err(Error::Parameter("need at least n_max = 1".into()));
        }
        let mut points = Vec::with_capacity(seq.len());
        for (n, &(p, se, exact)) in seq.iter().enumerate() {
            let root = if n == 0 { p } else { p.max(0.0).powf(1.0 / (2 * n) as f64) };
            let ratio = (n > 0 && seq[n - 1].0 > 0.0).then(|| (p / seq[n - 1].0).sqrt());
            points.push(SequencePoint {
                n,
                p,
                std_error: se,
                root,
                ratio,
                exact,
            });
        }
        let last = points[n_max];
        let prev = points[n_max - 1];
        let mut warnings = Vec::new();
        let ratio = last.ratio.unwrap_or(0.0);
        if last.p == 0.0 {
            warnings.push("hitting probability is zero at every computed time".into());
        }
        // delta method for the ratio, independent errors assumed
        let rel = |pt: &SequencePoint| if pt.p > 0.0 { pt.std_error / pt.p } else { 0.0 };
        let ci = CI_SIGMAS * 0.5 * ratio * (rel(&last).powi(2) + rel(&prev).powi(2)).sqrt();
        let monotone = (2..=n_max).all(|n| {
            let (a, b) = (&points[n - 1], &points[n]);
            let slack = if a.std_error == 0.0 && b.std_error == 0.0 {
                EXACT_SLACK * a.root
            } else {
                CI_SIGMAS * (root_error(a) + root_error(b))
            };
            b.root >= a.root - slack
        });
        Ok(ExponentEstimate {
            value: ratio,
            method: Method::Ratio,
            ratio,
            root: last.root,
            n_range: (1, n_max),
            ci_halfwidth: ci,
            monotone_certificate: monotone,
            exact: points.iter().all(|p| p.exact),
            points,
            warnings,
        })
    }

    /// Rows `instance,n,p_2n,root_est,ratio_est` (no header).
    pub fn csv_rows(&self, instance: &str) -> String {
        let mut out = String::new();
        for pt in &self.points[1..] {
            let ratio = pt.ratio.map(|r| r.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{instance},{},{:e},{},{}", pt.n, pt.p, pt.root, ratio);
        }
        out
    }
}

pub const CSV_HEADER: &str = "instance,n,p_2n,root_est,ratio_est\n";

fn root_error(pt: &SequencePoint) -> f64 {
    if pt.p <= 0.0 || pt.n == 0 {
        return 0.0;
    }
    pt.root * pt.std_error / (pt.p * (2 * pt.n) as f64)
}

/// `ρ^S(root)` from exact hitting probabilities of `target`.
///
/// `target_radius` bounds the distance of target vertices from the root and
/// widens the exactness window (see [`crate::walk::exactness_horizon`]).
/// With `strict`, any inexact time is an error instead of a flag.
pub fn quenched_exponent(
    g: &RootedGraph,
    k: &WalkKernel,
    target: &(dyn Fn(u32) -> bool + Sync),
    target_radius: Option<usize>,
    n_max: usize,
    strict: bool,
) -> Result<ExponentEstimate> {
    k.validate()?;
    let seq = even_hit_sequence(g, k, g.root(), n_max, target, target_radius);
    if strict {
        if let Some(bad) = seq.iter().find(|h| !h.exact) {
            return Err(Error::Truncation(format!(
                "p_{} is affected by the radius-{} truncation",
                bad.steps,
                g.radius()
            )));
        }
    }
    ExponentEstimate::from_sequence(
        &seq.iter().map(|h| (h.probability, 0.0, h.exact)).collect::<Vec<_>>(),
    )
}

/// `ρ^S_E(root)`: hits of `s_target ∧ e` by the unrestricted walk.
pub fn local_exponent(
    g: &RootedGraph,
    k: &WalkKernel,
    s_target: &(dyn Fn(u32) -> bool + Sync),
    e: &(dyn Fn(u32) -> bool + Sync),
    target_radius: Option<usize>,
    n_max: usize,
) -> Result<ExponentEstimate> {
    let both = |v: u32| s_target(v) && e(v);
    quenched_exponent(g, k, &both, target_radius, n_max, false)
}

/// Power iteration on the walk operator of the ball with Dirichlet boundary.
pub fn schreier_spectral_radius(
    g: &RootedGraph,
    k: &WalkKernel,
    max_iters: usize,
    tol: f64,
) -> Result<SpectralRadiusResult> {
    k.validate()?;
    let op = MarkovOperator::new(g, k);
    power_iteration(op.dim(), |f, out| op.apply(f, out), max_iters, tol)
}

/// Law of the distance from the root of the walk on the `d`-regular tree,
/// at times `0, 2, …, 2 n_max`; uniform steps with holding probability `hold`.
pub fn radial_even_laws(degree: usize, hold: f64, n_max: usize) -> Vec<Vec<f64>> {
    let d = degree as f64;
    let steps = 2 * n_max;
    let mut p = vec![0.0; steps + 2];
    p[0] = 1.0;
    let mut out = vec![p[..1].to_vec()];
    for t in 1..=steps {
        let mut q = vec![0.0; steps + 2];
        q[0] += hold * p[0];
        q[1] += (1.0 - hold) * p[0];
        for r in 1..t {
            q[r] += hold * p[r];
            q[r - 1] += (1.0 - hold) / d * p[r];
            q[r + 1] += (1.0 - hold) * (d - 1.0) / d * p[r];
        }
        p = q;
        if t % 2 == 0 {
            out.push(p[..=t].to_vec());
        }
    }
    out
}

/// Exact annealed return-to-cluster probabilities on the `d`-regular tree:
/// `Σ_k P(D_{2n} = k) p^k`.
pub fn annealed_tree_exact(degree: usize, hold: f64, p: f64, n_max: usize) -> Result<ExponentEstimate> {
    let laws = radial_even_laws(degree, hold, n_max);
    let seq: Vec<(f64, f64, bool)> = laws
        .iter()
        .map(|law| {
            let mut s = Neumaier::default();
            for (k, &x) in law.iter().enumerate() {
                s.add(x * p.powi(k as i32));
            }
            (s.value(), 0.0, true)
        })
        .collect();
    ExponentEstimate::from_sequence(&seq)
}

/// How the annealed average is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnnealedRoute {
    /// Tree families with a uniform kernel: only the sphere counts of the
    /// cluster matter, so no ball is built.
    SphereProfile,
    /// Percolate an explicit ball of the given radius.
    Ball { radius: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealedConfig {
    pub p: f64,
    pub seed: u64,
    pub samples: usize,
    pub n_max: usize,
    pub route: AnnealedRoute,
}

/// Route used when none is requested: sphere profiles whenever they apply.
pub fn default_route(family: GroupFamily, k: &WalkKernel, radius: usize) -> AnnealedRoute {
    let tree_like = matches!(family, GroupFamily::RegularTree { .. } | GroupFamily::Free { .. });
    if tree_like && k.uniform_hold(&family.letters()).is_some() {
        AnnealedRoute::SphereProfile
    } else {
        AnnealedRoute::Ball { radius }
    }
}

/// `ρ(R/S)` for the root cluster of Bernoulli(p) percolation: the average
/// over samples of exact per-sample values `p_{2n,o,C}`.
pub fn annealed_exponent(
    family: GroupFamily,
    k: &WalkKernel,
    cfg: &AnnealedConfig,
) -> Result<ExponentEstimate> {
    family.validate()?;
    k.validate()?;
    if cfg.samples == 0 {
        return Err(Error::Parameter("samples must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&cfg.p) {
        return Err(Error::Parameter(format!("probability {} outside [0, 1]", cfg.p)));
    }
    let per_sample: Vec<Vec<f64>> = match cfg.route {
        AnnealedRoute::SphereProfile => sphere_profile_samples(family, k, cfg)?,
        AnnealedRoute::Ball { radius } => ball_samples(family, k, cfg, radius)?,
    };
    let exact_until = match cfg.route {
        AnnealedRoute::SphereProfile => usize::MAX,
        AnnealedRoute::Ball { radius } => radius,
    };
    let s = per_sample.len() as f64;
    let seq: Vec<(f64, f64, bool)> = (0..=cfg.n_max)
        .map(|n| {
            let mut sum = Neumaier::default();
            for v in &per_sample {
                sum.add(v[n]);
            }
            let mean = sum.value() / s;
            let var = if per_sample.len() > 1 {
                per_sample.iter().map(|v| (v[n] - mean).powi(2)).sum::<f64>() / (s - 1.0)
            } else {
                0.0
            };
            (mean, (var / s).sqrt(), 2 * n <= exact_until)
        })
        .collect();
    let mut est = ExponentEstimate::from_sequence(&seq)?;
    est.ci_halfwidth = CI_SIGMAS * paired_ratio_error(&per_sample, cfg.n_max);
    Ok(est)
}

/// Standard error of `(m_n/m_{n−1})^{1/2}` for sample means `m` of paired
/// per-sample sequences (delta method with the sample covariance).
fn paired_ratio_error(per_sample: &[Vec<f64>], n: usize) -> f64 {
    let s = per_sample.len() as f64;
    if per_sample.len() < 2 || n == 0 {
        return 0.0;
    }
    let mean = |i: usize| per_sample.iter().map(|v| v[i]).sum::<f64>() / s;
    let (a, b) = (mean(n), mean(n - 1));
    if a <= 0.0 || b <= 0.0 {
        return 0.0;
    }
    // log ratio = (log m_n − log m_{n−1}) / 2, linearised per sample
    let d: Vec<f64> = per_sample.iter().map(|v| v[n] / a - v[n - 1] / b).collect();
    let dm = d.iter().sum::<f64>() / s;
    let var = d.iter().map(|x| (x - dm).powi(2)).sum::<f64>() / (s - 1.0);
    0.5 * (a / b).sqrt() * (var / s).sqrt()
}

fn sphere_profile_samples(
    family: GroupFamily,
    k: &WalkKernel,
    cfg: &AnnealedConfig,
) -> Result<Vec<Vec<f64>>> {
    let letters = family.letters();
    let hold = k.uniform_hold(&letters).ok_or_else(|| {
        Error::Parameter("sphere profiles need a kernel uniform over the generators".into())
    })?;
    if !matches!(family, GroupFamily::RegularTree { .. } | GroupFamily::Free { .. }) {
        return Err(Error::Parameter(format!("{family} is not a tree")));
    }
    let degree = family.degree();
    let laws = radial_even_laws(degree, hold, cfg.n_max);
    let sampler = TreeClusterSampler::new(degree, 2 * cfg.n_max, cfg.seed)?;
    let sizes = sampler.sphere_sizes();
    (0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| {
            let z = sampler.sphere_counts(cfg.p, i)?;
            Ok(laws
                .iter()
                .map(|law| {
                    let mut s = Neumaier::default();
                    for (r, &x) in law.iter().enumerate() {
                        s.add(x * z[r] / sizes[r]);
                    }
                    s.value()
                })
                .collect())
        })
        .collect()
}

fn ball_samples(
    family: GroupFamily,
    k: &WalkKernel,
    cfg: &AnnealedConfig,
    radius: usize,
) -> Result<Vec<Vec<f64>>> {
    let g = build_ball(family, radius)?;
    let snapshots = even_snapshots(&g, k, g.root(), cfg.n_max, 500_000_000)?;
    (0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| {
            let coupling = EdgeCoupling::derived(cfg.seed, "annealed", i);
            let cluster = CoupledGraph::new(&g, &coupling).percolate(cfg.p)?.cluster_of_root();
            Ok(snapshots
                .iter()
                .map(|law| {
                    let mut s = Neumaier::default();
                    for (v, &x) in law.iter().enumerate() {
                        if x != 0.0 && cluster.contains(v as u32) {
                            s.add(x);
                        }
                    }
                    s.value()
                })
                .collect())
        })
        .collect()
}

/// One row of a laziness comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LazinessRow {
    pub t: f64,
    pub rho_lazy: f64,
    pub difference: f64,
    pub bound: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LazinessReport {
    pub rho: f64,
    pub slack: f64,
    pub rows: Vec<LazinessRow>,
}

impl LazinessReport {
    pub fn violations(&self) -> Vec<f64> {
        self.rows.iter().filter(|r| !r.ok).map(|r| r.t).collect()
    }
}

/// Checks `|ρ̂_{ν_t} − ρ̂_ν| ≤ t(1 + ρ̂_ν) + slack` over `t_grid`.
pub fn laziness_bound_check(
    g: &RootedGraph,
    k: &WalkKernel,
    target: &(dyn Fn(u32) -> bool + Sync),
    target_radius: Option<usize>,
    t_grid: &[f64],
    n_max: usize,
    slack: f64,
) -> Result<LazinessReport> {
    let base = quenched_exponent(g, k, target, target_radius, n_max, false)?.value;
    let rows = t_grid
        .iter()
        .map(|&t| {
            let lazy = k.lazify(t)?;
            let rho_lazy = quenched_exponent(g, &lazy, target, target_radius, n_max, false)?.value;
            let difference = (rho_lazy - base).abs();
            let bound = t * (1.0 + base) + slack;
            Ok(LazinessRow {
                t,
                rho_lazy,
                difference,
                bound,
                ok: difference <= bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LazinessReport {
        rho: base,
        slack,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemicontinuityReport {
    /// `(m, spectral radius of the ⟨a^m⟩ Schreier ball)`.
    pub rows: Vec<(usize, f64)>,
    /// The same radius ball of the Cayley graph (trivial subgroup).
    pub limit: f64,
    /// Minimum over the upper half of the grid.
    pub tail_min: f64,
    pub ok: bool,
}

/// Spectral radii of `Sch(F_k, ⟨a^m⟩)` balls against the trivial-subgroup
/// limit, all at the same radius and with the same Dirichlet truncation.
pub fn semicontinuity_check(
    rank: usize,
    m_grid: &[usize],
    radius: usize,
    tol: f64,
) -> Result<SemicontinuityReport> {
    if m_grid.is_empty() || m_grid.windows(2).any(|w| w[0] >= w[1]) || m_grid[0] == 0 {
        return Err(Error::Parameter("m_grid must be positive and increasing".into()));
    }
    let family = GroupFamily::Free { rank };
    let k = WalkKernel::simple(&family.letters());
    let radius_of = |h: &SubgroupOracle| -> Result<f64> {
        let g = build_schreier(family, h, radius)?;
        Ok(schreier_spectral_radius(&g, &k, 100_000, POWER_TOL)?.value)
    };
    let limit = radius_of(&SubgroupOracle::Trivial)?;
    let rows = m_grid
        .iter()
        .map(|&m| Ok((m, radius_of(&SubgroupOracle::Cyclic(vec![0; m]))?)))
        .collect::<Result<Vec<_>>>()?;
    let tail = &rows[rows.len() / 2..];
    let tail_min = tail.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Ok(SemicontinuityReport {
        ok: tail_min >= limit - tol,
        rows,
        limit,
        tail_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::subgroup::parse_word;
    use crate::walk::evolve;

    fn free2() -> (GroupFamily, WalkKernel) {
        let f = GroupFamily::Free { rank: 2 };
        (f, WalkKernel::simple(&f.letters()))
    }

    /// Return probabilities of the simple walk on the 2k-regular tree, by a
    /// distance-only recursion with its own bookkeeping.
    fn radial_oracle(degree: usize, n_max: usize) -> Vec<f64> {
        let d = degree as f64;
        let mut dist = vec![1.0];
        let mut out = vec![1.0];
        for t in 1..=2 * n_max {
            let mut next = vec![0.0; dist.len() + 1];
            for (r, &x) in dist.iter().enumerate() {
                if r == 0 {
                    next[1] += x;
                } else {
                    next[r - 1] += x / d;
                    next[r + 1] += x * (d - 1.0) / d;
                }
            }
            dist = next;
            if t % 2 == 0 {
                out.push(dist[0]);
            }
        }
        out
    }

    #[test]
    fn finite_connected_graph_everything() {
        let (f, k) = free2();
        let g = build_schreier(f, &"table(1 2 0;1 0 2)".parse().unwrap(), 3).unwrap();
        let e = quenched_exponent(&g, &k, &|_| true, None, 6, true).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
        assert!(e.exact);
    }

    #[test]
    fn identity_target_matches_radial_oracle() {
        let (f, k) = free2();
        let g = build_ball(f, 8).unwrap();
        let e = quenched_exponent(&g, &k, &|v| v == 0, Some(0), 8, true).unwrap();
        let oracle = radial_oracle(4, 8);
        for pt in &e.points {
            assert!((pt.p - oracle[pt.n]).abs() < 1e-15);
        }
        assert!(e.monotone_certificate);
        assert_eq!(e.n_range, (1, 8));
        // beyond the window the strict mode refuses
        assert!(matches!(
            quenched_exponent(&g, &k, &|v| v == 0, Some(0), 9, true),
            Err(Error::Truncation(_))
        ));
    }

    #[test]
    fn subgroup_target_equals_schreier_return() {
        let (f, k) = free2();
        let h = SubgroupOracle::Cyclic(parse_word("a").unwrap());
        let g = build_ball(f, 8).unwrap();
        let mask = g.membership_mask(&h).unwrap();
        let cayley = quenched_exponent(&g, &k, &|v| mask[v as usize], None, 4, true).unwrap();
        let s = build_schreier(f, &h, 8).unwrap();
        let schreier = quenched_exponent(&s, &k, &|v| v == 0, Some(0), 4, true).unwrap();
        for (a, b) in cayley.points.iter().zip(&schreier.points) {
            assert!((a.p - b.p).abs() < 1e-14, "{a:?} {b:?}");
        }
    }

    #[test]
    fn spectral_radius_examples() {
        let (f, k) = free2();
        let one = build_schreier(f, &SubgroupOracle::Whole, 2).unwrap();
        let r = schreier_spectral_radius(&one, &k, 100, POWER_TOL).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert!(r.residual <= POWER_TOL);
    }

    /// Largest eigenvalue of the walk killed outside the radius-R ball,
    /// restricted to radial functions: a tridiagonal problem solved densely.
    fn radial_dirichlet_oracle(degree: usize, radius: usize) -> f64 {
        let d = degree as f64;
        // symmetrize with the sphere sizes
        let sizes: Vec<f64> = (0..=radius)
            .map(|r| if r == 0 { 1.0 } else { d * (d - 1.0).powi(r as i32 - 1) })
            .collect();
        let mut m = nalgebra::DMatrix::<f64>::zeros(radius + 1, radius + 1);
        for r in 0..radius {
            // flow between spheres r and r+1 along edges, per unit stationary mass
            let edges = sizes[r + 1];
            let w = edges / d / (sizes[r] * sizes[r + 1]).sqrt();
            m[(r, r + 1)] = w;
            m[(r + 1, r)] = w;
        }
        let eig = m.symmetric_eigen();
        eig.eigenvalues.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
    }

    #[test]
    fn dirichlet_ball_radius_matches_radial_oracle() {
        let (f, k) = free2();
        for r in [3, 6, 9] {
            let g = build_ball(f, r).unwrap();
            let est = schreier_spectral_radius(&g, &k, 10_000, 1e-12).unwrap();
            let oracle = radial_dirichlet_oracle(4, r);
            assert!((est.value - oracle).abs() < 1e-6, "R={r}: {} vs {oracle}", est.value);
        }
    }

    #[test]
    fn annealed_extremes() {
        let (f, k) = free2();
        let t4 = GroupFamily::RegularTree { degree: 4 };
        let k4 = WalkKernel::simple(&t4.letters());
        let cfg = AnnealedConfig {
            p: 1.0,
            seed: 1,
            samples: 3,
            n_max: 6,
            route: AnnealedRoute::SphereProfile,
        };
        let one = annealed_exponent(t4, &k4, &cfg).unwrap();
        assert!(one.points.iter().all(|pt| (pt.p - 1.0).abs() < 1e-12));
        let zero = annealed_exponent(t4, &k4, &AnnealedConfig { p: 0.0, ..cfg }).unwrap();
        let oracle = radial_oracle(4, 6);
        for pt in &zero.points {
            assert!((pt.p - oracle[pt.n]).abs() < 1e-15);
        }
        // graph route at p = 0 is the quenched diagonal
        let z2 = GroupFamily::FreeAbelian { dim: 2 };
        let kz = WalkKernel::simple(&z2.letters());
        let g = build_ball(z2, 12).unwrap();
        let diag = quenched_exponent(&g, &kz, &|v| v == 0, Some(0), 6, true).unwrap();
        let ann = annealed_exponent(
            z2,
            &kz,
            &AnnealedConfig { p: 0.0, route: AnnealedRoute::Ball { radius: 12 }, ..cfg },
        )
        .unwrap();
        for (a, b) in ann.points.iter().zip(&diag.points) {
            assert!((a.p - b.p).abs() < 1e-15);
        }
        let _ = (f, k);
    }

    /// Σ_v p_{2n}(o, v) p^{|v|} computed on an explicit ball.
    fn annealed_by_ball_sum(degree: usize, p: f64, n: usize) -> f64 {
        let t = GroupFamily::RegularTree { degree };
        let g = build_ball(t, 2 * n).unwrap();
        let d = evolve(&g, &WalkKernel::simple(&t.letters()), 0, 2 * n);
        d.iter().map(|(v, x)| x * p.powi(g.dist(v) as i32)).sum()
    }

    #[test]
    fn annealed_tree_monte_carlo_agrees_with_exact_sum() {
        let t4 = GroupFamily::RegularTree { degree: 4 };
        let k4 = WalkKernel::simple(&t4.letters());
        let exact = annealed_tree_exact(4, 0.0, 0.3, 5).unwrap();
        for pt in &exact.points {
            let b = annealed_by_ball_sum(4, 0.3, pt.n);
            assert!((pt.p - b).abs() <= 1e-10 * b, "{} {} {b}", pt.n, pt.p);
        }
        let mc = annealed_exponent(
            t4,
            &k4,
            &AnnealedConfig {
                p: 0.3,
                seed: 5,
                samples: 4000,
                n_max: 5,
                route: AnnealedRoute::SphereProfile,
            },
        )
        .unwrap();
        for (a, b) in mc.points.iter().zip(&exact.points).skip(1) {
            assert!((a.p - b.p).abs() <= CI_SIGMAS * a.std_error, "{a:?} vs {b:?}");
        }
        assert!(exact.monotone_certificate);
        assert!(mc.monotone_certificate);
    }

    #[test]
    fn annealed_routes_agree_on_trees() {
        let t3 = GroupFamily::RegularTree { degree: 3 };
        let k3 = WalkKernel::simple(&t3.letters());
        let cfg = AnnealedConfig {
            p: 0.6,
            seed: 2,
            samples: 3000,
            n_max: 4,
            route: AnnealedRoute::Ball { radius: 8 },
        };
        let ball = annealed_exponent(t3, &k3, &cfg).unwrap();
        let exact = annealed_tree_exact(3, 0.0, 0.6, 4).unwrap();
        for (a, b) in ball.points.iter().zip(&exact.points).skip(1) {
            assert!((a.p - b.p).abs() <= CI_SIGMAS * a.std_error, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn local_exponent_examples() {
        let (f, k) = free2();
        let g = build_ball(f, 6).unwrap();
        let all = local_exponent(&g, &k, &|v| v == 0, &|_| true, Some(0), 6).unwrap();
        let q = quenched_exponent(&g, &k, &|v| v == 0, Some(0), 6, false).unwrap();
        assert_eq!(all, q);
        // odd-distance vertices are never occupied at even times
        let odd = local_exponent(&g, &k, &|_| true, &|v| g.dist(v) % 2 == 1, None, 3).unwrap();
        assert_eq!(odd.value, 0.0);
        assert!(!odd.warnings.is_empty());
    }

    #[test]
    fn laziness_examples() {
        let (f, k) = free2();
        let g = build_ball(f, 8).unwrap();
        let rep = laziness_bound_check(&g, &k, &|v| v == 0, Some(0), &[0.0, 0.1, 1.0], 8, EXTRAPOLATION_SLACK)
            .unwrap();
        assert_eq!(rep.rows[0].difference, 0.0);
        assert!((rep.rows[2].rho_lazy - 1.0).abs() < 1e-12);
        assert!(rep.violations().is_empty());
    }

    #[test]
    fn semicontinuity_examples() {
        let rep = semicontinuity_check(2, &[1, 2, 3, 4], 7, 0.0).unwrap();
        assert!(rep.ok, "{rep:?}");
        let (f, k) = free2();
        let whole = build_schreier(f, &SubgroupOracle::Whole, 7).unwrap();
        assert!((schreier_spectral_radius(&whole, &k, 100, POWER_TOL).unwrap().value - 1.0).abs() < 1e-12);
        assert!(semicontinuity_check(2, &[3, 2], 4, 0.0).is_err());
    }

    #[test]
    fn csv_rows_have_one_line_per_time() {
        let (f, k) = free2();
        let g = build_ball(f, 4).unwrap();
        let e = quenched_exponent(&g, &k, &|v| v == 0, Some(0), 4, true).unwrap();
        assert_eq!(e.csv_rows("x").lines().count(), 4);
    }
}

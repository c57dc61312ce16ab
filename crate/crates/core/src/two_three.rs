//! The 2-3 method on finite weighted relations.
//!
//! Points carry an `R`-class, a finer `S`-class and a weight `π > 0`; the
//! measure on points is uniform, so every integral is a finite mean.
//! Kernels `f_k` are dense `N × N` matrices supported on `R`.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng;
use crate::walk::Neumaier;

const SYMMETRY_TOL: f64 = 1e-12;
/// Allowed relative slack in the inequalities of the 2-3 lemma.
pub const INEQUALITY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteRelation {
    r_class: Vec<u32>,
    s_class: Vec<u32>,
    pi: Vec<f64>,
}

impl FiniteRelation {
    pub fn new(r_class: Vec<u32>, s_class: Vec<u32>, pi: Vec<f64>) -> Result<Self> {
        let n = r_class.len();
        if n == 0 || s_class.len() != n || pi.len() != n {
            return Err(Error::Parameter("relation needs matching nonempty columns".into()));
        }
        if let Some(x) = pi.iter().position(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::Parameter(format!("pi({x}) = {} is not in (0, inf)", pi[x])));
        }
        let rel = FiniteRelation { r_class, s_class, pi };
        for x in 0..n {
            for y in 0..n {
                if rel.s_class[x] == rel.s_class[y] && rel.r_class[x] != rel.r_class[y] {
                    return Err(Error::Parameter(format!(
                        "S does not refine R: points {x} and {y}"
                    )));
                }
            }
        }
        Ok(rel)
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn same_r(&self, x: usize, y: usize) -> bool {
        self.r_class[x] == self.r_class[y]
    }

    pub fn same_s(&self, x: usize, y: usize) -> bool {
        self.s_class[x] == self.s_class[y]
    }

    /// `∫ g dμ` for the uniform probability on points.
    pub fn integral(&self, g: impl Fn(usize) -> f64) -> f64 {
        let mut s = Neumaier::default();
        for x in 0..self.len() {
            s.add(g(x));
        }
        s.value() / self.len() as f64
    }

    /// Text format: one line `point_id r_class s_class pi_weight` per point.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for x in 0..self.len() {
            let _ = writeln!(out, "{x} {} {} {:e}", self.r_class[x], self.s_class[x], self.pi[x]);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rows: Vec<(usize, u32, u32, f64)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: String| Error::Parse { line: i + 1, message: m };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(err(format!("expected 4 fields, got {}", f.len())));
            }
            let id = f[0].parse().map_err(|e| err(format!("point id: {e}")))?;
            let r = f[1].parse().map_err(|e| err(format!("r_class: {e}")))?;
            let s = f[2].parse().map_err(|e| err(format!("s_class: {e}")))?;
            let p = f[3].parse().map_err(|e| err(format!("pi_weight: {e}")))?;
            rows.push((id, r, s, p));
        }
        rows.sort_by_key(|r| r.0);
        if rows.iter().enumerate().any(|(i, r)| r.0 != i) {
            return Err(Error::Parse {
                line: 0,
                message: "point ids must be 0..N without gaps".into(),
            });
        }
        FiniteRelation::new(
            rows.iter().map(|r| r.1).collect(),
            rows.iter().map(|r| r.2).collect(),
            rows.iter().map(|r| r.3).collect(),
        )
    }
}

/// `f_1, …, f_{k_max}`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSequence {
    mats: Vec<DMatrix<f64>>,
}

impl KernelSequence {
    pub fn new(mats: Vec<DMatrix<f64>>) -> Self {
        KernelSequence { mats }
    }

    pub fn k_max(&self) -> usize {
        self.mats.len()
    }

    /// `f_k` for `1 ≤ k ≤ k_max`.
    pub fn get(&self, k: usize) -> &DMatrix<f64> {
        &self.mats[k - 1]
    }

    pub fn get_mut(&mut self, k: usize) -> &mut DMatrix<f64> {
        &mut self.mats[k - 1]
    }

    /// `f̃_k(x) = Σ_y f_k(x, y)`.
    pub fn row_sums(&self, k: usize) -> Vec<f64> {
        let m = self.get(k);
        (0..m.nrows()).map(|x| row_sum(m, x)).collect()
    }

    pub fn to_csv(&self, k: usize) -> String {
        let m = self.get(k);
        let mut out = String::new();
        for x in 0..m.nrows() {
            let row: Vec<String> = (0..m.ncols()).map(|y| format!("{:e}", m[(x, y)])).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

fn row_sum(m: &DMatrix<f64>, x: usize) -> f64 {
    let mut s = Neumaier::default();
    for y in 0..m.ncols() {
        s.add(m[(x, y)]);
    }
    s.value()
}

fn check_support(rel: &FiniteRelation, m: &DMatrix<f64>) -> Result<()> {
    let n = rel.len();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::Parameter(format!("matrix is {}x{}, relation has {n} points", m.nrows(), m.ncols())));
    }
    for x in 0..n {
        for y in 0..n {
            if m[(x, y)] != 0.0 && !rel.same_r(x, y) {
                return Err(Error::Parameter(format!("entry ({x}, {y}) leaves the R-class")));
            }
        }
    }
    Ok(())
}

fn check_reversible(rel: &FiniteRelation, m: &DMatrix<f64>) -> Result<()> {
    let n = rel.len();
    for x in 0..n {
        for y in x + 1..n {
            let a = rel.pi[x] * m[(x, y)];
            let b = rel.pi[y] * m[(y, x)];
            let defect = a - b;
            if defect.abs() > SYMMETRY_TOL * a.abs().max(b.abs()).max(1.0) {
                return Err(Error::Reversibility { x, y, defect });
            }
        }
    }
    Ok(())
}

/// `f_k = P^{2k} 1_S` for a π-reversible stochastic `P` supported on `R`.
pub fn build_kernels_from_walk(
    rel: &FiniteRelation,
    transition: &DMatrix<f64>,
    k_max: usize,
) -> Result<KernelSequence> {
    check_support(rel, transition)?;
    for x in 0..rel.len() {
        let s = row_sum(transition, x);
        if (s - 1.0).abs() > SYMMETRY_TOL || (0..rel.len()).any(|y| transition[(x, y)] < 0.0) {
            return Err(Error::Parameter(format!("row {x} is not a probability vector")));
        }
    }
    check_reversible(rel, transition)?;
    Ok(powers_on_s(rel, transition, k_max))
}

/// `f_k = M^{2k} 1_S` for a nonnegative π-symmetric weight matrix `M`.
pub fn build_kernels_from_weights(
    rel: &FiniteRelation,
    weights: &DMatrix<f64>,
    k_max: usize,
) -> Result<KernelSequence> {
    check_support(rel, weights)?;
    if weights.iter().any(|&w| w < 0.0) {
        return Err(Error::Parameter("weights must be nonnegative".into()));
    }
    check_reversible(rel, weights)?;
    Ok(powers_on_s(rel, weights, k_max))
}

fn powers_on_s(rel: &FiniteRelation, m: &DMatrix<f64>, k_max: usize) -> KernelSequence {
    let two = m * m;
    let mut power = DMatrix::<f64>::identity(rel.len(), rel.len());
    let mut mats = Vec::with_capacity(k_max);
    for _ in 0..k_max {
        power = &power * &two;
        let mut f = power.clone();
        for x in 0..rel.len() {
            for y in 0..rel.len() {
                if !rel.same_s(x, y) {
                    f[(x, y)] = 0.0;
                }
            }
        }
        mats.push(f);
    }
    KernelSequence::new(mats)
}

/// Outcome of one hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub status: Status,
    /// Largest violation found (0 when none), in the units of the check.
    pub worst: f64,
    pub witness: Option<String>,
}

impl Check {
    fn from_worst(worst: f64, witness: Option<String>) -> Self {
        Check {
            status: if worst > 0.0 { Status::Fail } else { Status::Pass },
            worst: worst.max(0.0),
            witness: if worst > 0.0 { witness } else { None },
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub a: Check,
    pub b: Check,
    pub c: Check,
    pub d: Check,
    /// Witness `D(x) = min_j f̃_{j+1}(x)/f̃_j(x)`.
    pub d_witness: Vec<f64>,
}

impl HypothesisReport {
    pub fn all_pass(&self) -> bool {
        [&self.a, &self.b, &self.c, &self.d].iter().all(|c| c.passed())
    }
}

/// Checks hypotheses (a)-(d) over every computed `k` and `l + k ≤ k_max`.
pub fn check_hypotheses(rel: &FiniteRelation, ks: &KernelSequence) -> HypothesisReport {
    let n = rel.len();
    let k_max = ks.k_max();
    // (a) nonnegative, supported on R, π-symmetric
    let mut worst_a = 0.0f64;
    let mut wit_a = None;
    for k in 1..=k_max {
        let f = ks.get(k);
        for x in 0..n {
            for y in 0..n {
                let v = f[(x, y)];
                let bad = if v < 0.0 {
                    -v
                } else if v != 0.0 && !rel.same_r(x, y) {
                    v
                } else {
                    let a = rel.pi[x] * v;
                    let b = rel.pi[y] * f[(y, x)];
                    let d = (a - b).abs();
                    if d > SYMMETRY_TOL * a.abs().max(b.abs()) { d } else { 0.0 }
                };
                if bad > worst_a {
                    worst_a = bad;
                    wit_a = Some(format!("k={k} x={x} y={y} f={v:e}"));
                }
            }
        }
    }
    let sums: Vec<Vec<f64>> = (1..=k_max).map(|k| ks.row_sums(k)).collect();
    let tilde = |k: usize, x: usize| sums[k - 1][x];
    // (b) Σ_y (f_l * f_k)(x, y) ≤ f̃_{l+k}(x)
    let mut worst_b = 0.0f64;
    let mut wit_b = None;
    for l in 1..k_max {
        for k in 1..=k_max - l {
            // Σ_y (f_l f_k)(x, y) = Σ_z f_l(x, z) f̃_k(z)
            let fl = ks.get(l);
            for x in 0..n {
                let mut s = Neumaier::default();
                for z in 0..n {
                    s.add(fl[(x, z)] * tilde(k, z));
                }
                let lhs = s.value();
                let rhs = tilde(l + k, x);
                let excess = (lhs - rhs) / rhs.abs().max(f64::MIN_POSITIVE);
                if excess > INEQUALITY_SLACK && excess > worst_b {
                    worst_b = excess;
                    wit_b = Some(format!("l={l} k={k} x={x} lhs={lhs:e} rhs={rhs:e}"));
                }
            }
        }
    }
    // (c) 0 < f̃_k < ∞
    let mut worst_c = 0.0f64;
    let mut wit_c = None;
    for k in 1..=k_max {
        for x in 0..n {
            let t = tilde(k, x);
            if !(t > 0.0 && t.is_finite()) && worst_c == 0.0 {
                worst_c = 1.0;
                wit_c = Some(format!("k={k} x={x} f~={t:e}"));
            }
        }
    }
    // (d) best witness D(x) = min_j f̃_{j+1}/f̃_j; then f̃_{l+k} ≥ D^l f̃_k by telescoping
    let d_witness: Vec<f64> = (0..n)
        .map(|x| {
            (1..k_max)
                .map(|j| tilde(j + 1, x) / tilde(j, x))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let d = if k_max < 2 || d_witness.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        Check {
            status: Status::Inconclusive,
            worst: 0.0,
            witness: d_witness
                .iter()
                .position(|&v| !(v > 0.0 && v.is_finite()))
                .map(|x| format!("no positive witness at x={x}")),
        }
    } else {
        Check::from_worst(0.0, None)
    };
    HypothesisReport {
        a: Check::from_worst(worst_a, wit_a),
        b: Check::from_worst(worst_b, wit_b),
        c: Check::from_worst(worst_c, wit_c),
        d,
        d_witness,
    }
}

/// `φ_k` and `ψ_k` of the 2-3 lemma.
pub fn phi_psi(rel: &FiniteRelation, ks: &KernelSequence, k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rel.len();
    let f = ks.get(k);
    let t = ks.row_sums(k);
    if let Some(point) = t.iter().position(|&v| v <= 0.0) {
        return Err(Error::DivisionByZero { point });
    }
    let phi: Vec<f64> = (0..n)
        .map(|x| {
            let mut s = Neumaier::default();
            for y in 0..n {
                s.add(f[(x, y)] / t[y]);
            }
            s.value()
        })
        .collect();
    // inner(y) = Σ_z f_k(y, z) f̃_k(z)
    let inner: Vec<f64> = (0..n)
        .map(|y| {
            let mut s = Neumaier::default();
            for z in 0..n {
                s.add(f[(y, z)] * t[z]);
            }
            s.value()
        })
        .collect();
    if let Some(point) = inner.iter().position(|&v| v <= 0.0) {
        return Err(Error::DivisionByZero { point });
    }
    let psi = (0..n)
        .map(|x| {
            let mut s = Neumaier::default();
            for y in 0..n {
                s.add(f[(x, y)] / inner[y]);
            }
            t[x] * s.value()
        })
        .collect();
    Ok((phi, psi))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub k: usize,
    /// `max_x (f̃_k² − φ_k f̃_{2k}) / f̃_k²`, clipped at 0.
    pub square_violation: f64,
    /// `max_x (f̃_k³ − ψ_k f̃_{3k}) / f̃_k³`, clipped at 0.
    pub cube_violation: f64,
    pub square_witness: Option<usize>,
    pub cube_witness: Option<usize>,
    pub pass: bool,
}

/// Pointwise `f̃_k² ≤ φ_k f̃_{2k}` and `f̃_k³ ≤ ψ_k f̃_{3k}`.
pub fn check_23_inequalities(
    rel: &FiniteRelation,
    ks: &KernelSequence,
    k: usize,
) -> Result<InequalityReport> {
    if 3 * k > ks.k_max() || k == 0 {
        return Err(Error::Parameter(format!("need 1 <= k and 3k <= k_max = {}", ks.k_max())));
    }
    let (phi, psi) = phi_psi(rel, ks, k)?;
    let (t1, t2, t3) = (ks.row_sums(k), ks.row_sums(2 * k), ks.row_sums(3 * k));
    let mut sq = (0.0f64, None);
    let mut cu = (0.0f64, None);
    for x in 0..rel.len() {
        let a = (t1[x].powi(2) - phi[x] * t2[x]) / t1[x].powi(2);
        if a > sq.0 {
            sq = (a, Some(x));
        }
        let b = (t1[x].powi(3) - psi[x] * t3[x]) / t1[x].powi(3);
        if b > cu.0 {
            cu = (b, Some(x));
        }
    }
    Ok(InequalityReport {
        k,
        square_violation: sq.0,
        cube_violation: cu.0,
        square_witness: sq.1,
        cube_witness: cu.1,
        pass: sq.0 <= INEQUALITY_SLACK && cu.0 <= INEQUALITY_SLACK,
    })
}

/// Relative defects of `∫πφ_k = ∫π` and `∫πψ_k = ∫π`.
pub fn mass_transport_defects(rel: &FiniteRelation, ks: &KernelSequence, k: usize) -> Result<(f64, f64)> {
    let (phi, psi) = phi_psi(rel, ks, k)?;
    let total = rel.integral(|x| rel.pi[x]);
    let a = rel.integral(|x| rel.pi[x] * phi[x]);
    let b = rel.integral(|x| rel.pi[x] * psi[x]);
    Ok(((a - total).abs() / total, (b - total).abs() / total))
}

/// `|Σ_x Σ_{y ~R x} F(x, y) − Σ_x Σ_{y ~R x} F(y, x)|`.
pub fn mass_transport_defect(rel: &FiniteRelation, f: impl Fn(usize, usize) -> f64) -> f64 {
    let (mut out, mut inn) = (Neumaier::default(), Neumaier::default());
    for x in 0..rel.len() {
        for y in 0..rel.len() {
            if rel.same_r(x, y) {
                out.add(f(x, y));
                inn.add(f(y, x));
            }
        }
    }
    (out.value() - inn.value()).abs()
}

/// `f̃(x) = lim f̃_k(x)^{1/k}` for kernels `M^{2k} 1_S`: the squared spectral
/// radius of `M` on the connected component of its support containing `x`.
pub fn limit_f_tilde(rel: &FiniteRelation, m: &DMatrix<f64>) -> Vec<f64> {
    let n = rel.len();
    let comp = components(m);
    let mut out = vec![0.0; n];
    let mut done = vec![false; n];
    for x in 0..n {
        if done[x] {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&y| comp[y] == comp[x]).collect();
        let s = members.len();
        // D^{1/2} M D^{-1/2} is symmetric for π-symmetric M
        let block = DMatrix::from_fn(s, s, |i, j| {
            let (a, b) = (members[i], members[j]);
            m[(a, b)] * (rel.pi[a] / rel.pi[b]).sqrt()
        });
        let sym = (&block + block.transpose()) * 0.5;
        let lambda = sym
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(0.0f64, |acc, &v| acc.max(v.abs()));
        for &y in &members {
            out[y] = lambda * lambda;
            done[y] = true;
        }
    }
    out
}

fn components(m: &DMatrix<f64>) -> Vec<usize> {
    let n = m.nrows();
    let mut comp = vec![usize::MAX; n];
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        comp[start] = start;
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            for y in 0..n {
                if comp[y] == usize::MAX && (m[(x, y)] != 0.0 || m[(y, x)] != 0.0) {
                    comp[y] = start;
                    stack.push(y);
                }
            }
        }
    }
    comp
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConclusionReport {
    /// `(k, ∫π f̃_k / f̃^k, ∫π)`.
    pub first: Vec<(usize, f64, f64)>,
    pub first_holds: bool,
    pub sup_f_tilde: f64,
    /// `(k, |(∫π' f̃_k)^{1/k} − ‖f̃‖_∞|)` with `π'` normalised to mean 1.
    pub gaps: Vec<(usize, f64)>,
    pub gaps_nonincreasing: bool,
}

/// Conclusions (i) and (ii) given the limit `f_tilde`; gaps are reported for
/// `k ≥ k_gap_min`.
pub fn check_conclusions(
    rel: &FiniteRelation,
    ks: &KernelSequence,
    f_tilde: &[f64],
    k_gap_min: usize,
) -> ConclusionReport {
    let total = rel.integral(|x| rel.pi[x]);
    let mut first = Vec::new();
    for k in 1..=ks.k_max() {
        let t = ks.row_sums(k);
        let lhs = rel.integral(|x| rel.pi[x] * t[x] / f_tilde[x].powi(k as i32));
        first.push((k, lhs, total));
    }
    let first_holds = first.iter().all(|&(_, l, r)| l <= r * (1.0 + INEQUALITY_SLACK));
    let sup = f_tilde.iter().copied().fold(0.0, f64::max);
    let gaps: Vec<(usize, f64)> = (k_gap_min.max(1)..=ks.k_max())
        .map(|k| {
            let t = ks.row_sums(k);
            let mean = rel.integral(|x| rel.pi[x] * t[x]) / total;
            (k, (mean.powf(1.0 / k as f64) - sup).abs())
        })
        .collect();
    let gaps_nonincreasing = gaps.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12);
    ConclusionReport {
        first,
        first_holds,
        sup_f_tilde: sup,
        gaps,
        gaps_nonincreasing,
    }
}

/// Random relation with a lazy π-reversible walk: `π` is the weighted
/// degree of a random symmetric weight matrix with positive diagonal.
pub fn random_walk_instance(
    n: usize,
    seed: u64,
    index: u64,
    hold: f64,
) -> (FiniteRelation, DMatrix<f64>) {
    let mut rng = rng::stream(seed, "two-three-relation", index);
    let (r, s) = random_classes(n, 1, &mut rng);
    let mut w = DMatrix::<f64>::zeros(n, n);
    for x in 0..n {
        w[(x, x)] = rng.random_range(0.1..1.0);
        for y in x + 1..n {
            if r[x] == r[y] && rng.random_bool(0.3) {
                let v = rng.random_range(0.1..1.0);
                w[(x, y)] = v;
                w[(y, x)] = v;
            }
        }
    }
    let deg: Vec<f64> = (0..n).map(|x| row_sum(&w, x)).collect();
    let p = DMatrix::from_fn(n, n, |x, y| {
        let step = w[(x, y)] / deg[x];
        if x == y { hold + (1.0 - hold) * step } else { (1.0 - hold) * step }
    });
    let rel = FiniteRelation::new(r, s, deg).expect("valid by construction");
    (rel, p)
}

/// Random relation with a symmetric, non-stochastic weight matrix whose
/// support components have different spectral radii; `π ≡ 1`.
pub fn random_weight_instance(n: usize, seed: u64, index: u64) -> (FiniteRelation, DMatrix<f64>) {
    let mut rng = rng::stream(seed, "two-three-weights", index);
    let (r, s) = random_classes(n, 2, &mut rng);
    let mut w = DMatrix::<f64>::zeros(n, n);
    let scale: Vec<f64> = (0..=n).map(|_| rng.random_range(0.2..1.5)).collect();
    for x in 0..n {
        let c = scale[r[x] as usize];
        w[(x, x)] = c * rng.random_range(0.1..0.5);
        for y in x + 1..n {
            if r[x] == r[y] && rng.random_bool(0.4) {
                let v = c * rng.random_range(0.05..0.5);
                w[(x, y)] = v;
                w[(y, x)] = v;
            }
        }
    }
    let rel = FiniteRelation::new(r, s, vec![1.0; n]).expect("valid by construction");
    (rel, w)
}

fn random_classes(n: usize, min: usize, rng: &mut impl Rng) -> (Vec<u32>, Vec<u32>) {
    let lo = min.min(n).max(1);
    let r_count = rng.random_range(lo..=n.clamp(lo, 6));
    let mut r: Vec<u32> = (0..n).map(|x| (x % r_count) as u32).collect();
    r.shuffle(rng);
    // refine each R-class into up to three S-classes
    let s = r
        .iter()
        .map(|&c| c * 3 + rng.random_range(0..3u32))
        .collect();
    (r, s)
}

/// Sets one entry of `f_k` to a negative value; returns `(k, x, y)`.
pub fn inject_negative(ks: &mut KernelSequence, seed: u64, index: u64) -> (usize, usize, usize) {
    let mut rng = rng::stream(seed, "two-three-negative", index);
    let k = rng.random_range(1..=ks.k_max());
    let n = ks.get(k).nrows();
    let (x, y) = (rng.random_range(0..n), rng.random_range(0..n));
    let f = ks.get_mut(k);
    f[(x, y)] = -(f[(x, y)].abs() + 1e-3);
    (k, x, y)
}

/// Scales `f_2` so that `Σ_y (f_1 * f_1)(x, y) > f̃_2(x)` at every point.
pub fn break_convolution(ks: &mut KernelSequence) {
    let n = ks.get(1).nrows();
    let t1 = ks.row_sums(1);
    let t2 = ks.row_sums(2);
    let f1 = ks.get(1).clone();
    let c = (0..n)
        .map(|x| {
            let lhs: f64 = (0..n).map(|z| f1[(x, z)] * t1[z]).sum();
            lhs / t2[x]
        })
        .fold(f64::INFINITY, f64::min)
        * 0.5;
    *ks.get_mut(2) *= c;
}

/// Scales `f_{2k}` and `f_{3k}` so both inequalities of the 2-3 lemma fail
/// at every point; `φ_k, ψ_k` are unchanged.
pub fn break_23(ks: &mut KernelSequence, rel: &FiniteRelation, k: usize) -> Result<()> {
    let (phi, psi) = phi_psi(rel, ks, k)?;
    let (t1, t2, t3) = (ks.row_sums(k), ks.row_sums(2 * k), ks.row_sums(3 * k));
    let n = rel.len();
    let c2 = (0..n).map(|x| t1[x].powi(2) / (phi[x] * t2[x])).fold(f64::INFINITY, f64::min) * 0.5;
    let c3 = (0..n).map(|x| t1[x].powi(3) / (psi[x] * t3[x])).fold(f64::INFINITY, f64::min) * 0.5;
    *ks.get_mut(2 * k) *= c2;
    *ks.get_mut(3 * k) *= c3;
    Ok(())
}

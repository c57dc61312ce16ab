//! Scans of the annealed exponent `ρ̂(p)` of percolation clusters, and the
//! critical values `p_Ram` and `p_ca`.

use std::fmt::Write as _;

use serde::Serialize;

use crate::cospectral::{annealed_exponent, AnnealedConfig, AnnealedRoute, ExponentEstimate};
use crate::error::{Error, Result};
use crate::graph::{build_ball, GroupFamily};
use crate::percolation::tau_estimate;
use crate::walk::WalkKernel;

/// Tolerance for `ρ̂(p) = ρ_G`.
pub const RAM_TOL: f64 = 0.02;
/// Tolerance for `ρ̂(p) = 1`, added to the Monte Carlo CI of `ρ̂(p)`.
pub const CA_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    pub family: GroupFamily,
    pub n_max: usize,
    pub samples: usize,
    pub seed: u64,
    pub route: AnnealedRoute,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub p: f64,
    pub estimate: ExponentEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentScan {
    pub family: String,
    pub n_max: usize,
    pub samples: usize,
    pub rho_ambient: ExponentEstimate,
    pub rows: Vec<ScanRow>,
    pub p_ram_hat: (f64, f64),
    pub p_ca_hat: (f64, f64),
    /// Grid points `p` where `ρ̂` dropped by more than the combined CI.
    pub monotonicity_violations: Vec<f64>,
}

/// `ρ̂_G`: the cluster at `p = 0` is the root alone.
pub fn ambient(cfg: &ScanConfig, k: &WalkKernel) -> Result<ExponentEstimate> {
    estimate_at(cfg, k, 0.0)
}

fn estimate_at(cfg: &ScanConfig, k: &WalkKernel, p: f64) -> Result<ExponentEstimate> {
    // the same seed at every p: one coupling for the whole scan
    annealed_exponent(
        cfg.family,
        k,
        &AnnealedConfig {
            p,
            seed: cfg.seed,
            samples: cfg.samples,
            n_max: cfg.n_max,
            route: cfg.route,
        },
    )
}

fn is_ramanujan(est: &ExponentEstimate, ambient: f64) -> bool {
    est.value <= ambient + RAM_TOL
}

fn is_coamenable(est: &ExponentEstimate) -> bool {
    est.value >= 1.0 - CA_TOL - est.ci_halfwidth
}

pub fn scan(cfg: &ScanConfig, k: &WalkKernel, p_grid: &[f64]) -> Result<ExponentScan> {
    if p_grid.is_empty() {
        return Err(Error::Parameter("empty p grid".into()));
    }
    if p_grid.iter().any(|p| !(0.0..=1.0).contains(p)) || p_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter("p grid must be increasing within [0, 1]".into()));
    }
    let rho_ambient = ambient(cfg, k)?;
    let rows = p_grid
        .iter()
        .map(|&p| Ok(ScanRow { p, estimate: estimate_at(cfg, k, p)? }))
        .collect::<Result<Vec<_>>>()?;
    let amb = rho_ambient.value;
    let p_ram_hat = match rows.iter().rposition(|r| is_ramanujan(&r.estimate, amb)) {
        None => (0.0, rows[0].p),
        Some(i) if i + 1 == rows.len() => (rows[i].p, 1.0),
        Some(i) => (rows[i].p, rows[i + 1].p),
    };
    let p_ca_hat = match rows.iter().position(|r| is_coamenable(&r.estimate)) {
        None => (rows[rows.len() - 1].p, 1.0),
        Some(0) => (0.0, rows[0].p),
        Some(j) => (rows[j - 1].p, rows[j].p),
    };
    let monotonicity_violations = rows
        .windows(2)
        .filter(|w| {
            let (a, b) = (&w[0].estimate, &w[1].estimate);
            b.value < a.value - a.ci_halfwidth - b.ci_halfwidth
        })
        .map(|w| w[1].p)
        .collect();
    Ok(ExponentScan {
        family: cfg.family.to_string(),
        n_max: cfg.n_max,
        samples: cfg.samples,
        rho_ambient,
        rows,
        p_ram_hat,
        p_ca_hat,
        monotonicity_violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Ram,
    Ca,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Endpoint {
    pub p: f64,
    pub value: f64,
    pub ci_halfwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinedInterval {
    pub target: Target,
    pub lo: Endpoint,
    pub hi: Endpoint,
    pub steps: usize,
}

impl RefinedInterval {
    pub fn width(&self) -> f64 {
        self.hi.p - self.lo.p
    }

    pub fn contains(&self, p: f64) -> bool {
        self.lo.p <= p && p <= self.hi.p
    }
}

/// Bisection of `bracket` for `target`. The lower endpoint stays on the
/// `ρ̂ = ρ_G` side (for `Ram`) or the `ρ̂ < 1` side (for `Ca`).
pub fn refine(
    cfg: &ScanConfig,
    k: &WalkKernel,
    ambient: f64,
    target: Target,
    bracket: (f64, f64),
    steps: usize,
) -> Result<RefinedInterval> {
    let (lo, hi) = bracket;
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        return Err(Error::Parameter(format!("invalid bracket [{lo}, {hi}]")));
    }
    let endpoint = |p: f64| -> Result<(Endpoint, bool)> {
        let est = estimate_at(cfg, k, p)?;
        let upper_side = match target {
            Target::Ram => !is_ramanujan(&est, ambient),
            Target::Ca => is_coamenable(&est),
        };
        Ok((
            Endpoint {
                p,
                value: est.value,
                ci_halfwidth: est.ci_halfwidth,
            },
            upper_side,
        ))
    };
    let (mut a, a_upper) = endpoint(lo)?;
    if lo == hi {
        return Ok(RefinedInterval {
            target,
            lo: a.clone(),
            hi: a,
            steps: 0,
        });
    }
    let (mut b, b_upper) = endpoint(hi)?;
    if a_upper || !b_upper {
        return Err(Error::BracketLost {
            p: if a_upper { lo } else { hi },
            message: format!("[{lo}, {hi}] does not bracket the {target:?} transition"),
        });
    }
    for _ in 0..steps {
        let (m, m_upper) = endpoint(0.5 * (a.p + b.p))?;
        let below = m.value < a.value - a.ci_halfwidth - m.ci_halfwidth;
        let above = m.value > b.value + b.ci_halfwidth + m.ci_halfwidth;
        if below || above {
            return Err(Error::BracketLost {
                p: m.p,
                message: format!(
                    "rho({}) = {} is not between rho({}) = {} and rho({}) = {}",
                    m.p, m.value, a.p, a.value, b.p, b.value
                ),
            });
        }
        if m_upper {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(RefinedInterval { target, lo: a, hi: b, steps })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XiEstimate {
    pub p: f64,
    pub value: f64,
    pub std_error: f64,
    /// `(distance, τ̂, standard error)`.
    pub points: Vec<(usize, f64, f64)>,
    pub exact: bool,
}

/// `ξ_p` as the slope of `−log τ_p(o, v_n)` against `n`.
///
/// On trees `τ_p(o, v) = p^{dist(o, v)}` exactly. Elsewhere `v_n` is the
/// `n`-th power of the first generator and `τ̂_p` is sampled on a ball.
pub fn xi_estimate(
    family: GroupFamily,
    p: f64,
    dist_grid: &[usize],
    samples: usize,
    seed: u64,
) -> Result<XiEstimate> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Parameter(format!("xi needs 0 <= p < 1, got {p}")));
    }
    if dist_grid.len() < 2 || dist_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter("dist grid needs two increasing distances".into()));
    }
    if family.is_tree() {
        if p == 0.0 {
            return Err(Error::ZeroConnectivity);
        }
        let points: Vec<_> = dist_grid.iter().map(|&n| (n, p.powi(n as i32), 0.0)).collect();
        return Ok(XiEstimate {
            p,
            value: -p.ln(),
            std_error: 0.0,
            points,
            exact: true,
        });
    }
    let radius = dist_grid[dist_grid.len() - 1] + 4;
    let g = build_ball(family, radius)?;
    let mut points = Vec::new();
    for (i, &n) in dist_grid.iter().enumerate() {
        let v = g
            .follow(g.root(), &vec![0; n])
            .ok_or_else(|| Error::Parameter(format!("distance {n} leaves the ball")))?;
        let est = tau_estimate(&g, p, g.root(), v, samples, crate::rng::derive_seed(seed, "xi", i as u64))?;
        points.push((n, est.value, est.std_error));
    }
    // weighted least squares of log τ̂ on n, weights 1/var(log τ̂)
    let used: Vec<(f64, f64, f64)> = points
        .iter()
        .filter(|pt| pt.1 > 0.0)
        .map(|&(n, t, se)| {
            let var = (se / t).powi(2).max(1e-300);
            (n as f64, t.ln(), 1.0 / var)
        })
        .collect();
    if used.is_empty() {
        return Err(Error::ZeroConnectivity);
    }
    if used.len() < 2 {
        return Err(Error::Parameter("need two distances with positive connectivity".into()));
    }
    let sw: f64 = used.iter().map(|u| u.2).sum();
    let mx = used.iter().map(|u| u.2 * u.0).sum::<f64>() / sw;
    let my = used.iter().map(|u| u.2 * u.1).sum::<f64>() / sw;
    let sxx: f64 = used.iter().map(|u| u.2 * (u.0 - mx).powi(2)).sum();
    let sxy: f64 = used.iter().map(|u| u.2 * (u.0 - mx) * (u.1 - my)).sum();
    let slope = sxy / sxx;
    Ok(XiEstimate {
        p,
        value: -slope,
        std_error: (1.0 / sxx).sqrt(),
        points,
        exact: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnownConstant {
    pub name: String,
    pub value: f64,
    pub provenance: String,
}

/// Known critical values of the family, with where they come from.
pub fn known_constants(family: GroupFamily) -> Vec<KnownConstant> {
    match family {
        GroupFamily::RegularTree { degree } | GroupFamily::Free { rank: degree } => {
            let d = match family {
                GroupFamily::Free { .. } => 2 * degree,
                _ => degree,
            };
            vec![
                KnownConstant {
                    name: "p_c".into(),
                    value: 1.0 / (d as f64 - 1.0),
                    provenance: "closed form 1/(d-1) for the d-regular tree".into(),
                },
                KnownConstant {
                    name: "p_u".into(),
                    value: 1.0,
                    provenance: "trees have infinitely many infinite clusters for every p < 1".into(),
                },
                KnownConstant {
                    name: "p_exp".into(),
                    value: 1.0,
                    provenance: "tau_p = p^dist on trees, so xi_p = -log p > 0 for all p < 1".into(),
                },
            ]
        }
        GroupFamily::FreeAbelian { dim: 2 } => vec![KnownConstant {
            name: "p_c".into(),
            value: 0.5,
            provenance: "Kesten's theorem for bond percolation on Z^2".into(),
        }],
        GroupFamily::FreeAbelian { .. } => Vec::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowStatus {
    Holds,
    Violated,
    NotComputed,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityRow {
    pub name: String,
    pub lhs: Option<(f64, f64)>,
    pub rhs: Option<(f64, f64)>,
    pub status: RowStatus,
    pub note: String,
}

/// Compares intervals: `lhs ≤ rhs` holds unless `lhs` lies entirely above.
fn compare(name: &str, lhs: Option<(f64, f64)>, rhs: Option<(f64, f64)>, note: &str) -> InequalityRow {
    let status = match (lhs, rhs) {
        (Some(l), Some(r)) if l.0 <= r.1 => RowStatus::Holds,
        (Some(_), Some(_)) => RowStatus::Violated,
        _ => RowStatus::NotComputed,
    };
    InequalityRow {
        name: name.into(),
        lhs,
        rhs,
        status,
        note: note.into(),
    }
}

pub fn inequality_report(
    family: GroupFamily,
    scan: &ExponentScan,
    known: &[KnownConstant],
) -> Vec<InequalityRow> {
    let get = |n: &str| known.iter().find(|c| c.name == n).map(|c| (c.value, c.value));
    let non_amenable = match family {
        GroupFamily::Free { rank } => rank >= 2,
        GroupFamily::RegularTree { degree } => degree >= 3,
        GroupFamily::FreeAbelian { .. } => false,
    };
    let mut rows = Vec::new();
    let mut first = compare("p_Ram <= p_ca", Some(scan.p_ram_hat), Some(scan.p_ca_hat), "scan brackets");
    if !non_amenable {
        first.status = RowStatus::NotApplicable;
        first.note = "the group is amenable".into();
    }
    rows.push(first);
    rows.push(compare("p_ca <= p_u", Some(scan.p_ca_hat), get("p_u"), "p_u from known constants"));
    rows.push(compare("p_exp <= p_ca", get("p_exp"), Some(scan.p_ca_hat), "p_exp from known constants"));
    rows.push(InequalityRow {
        name: "p_[2->2] <= p_Ram".into(),
        lhs: None,
        rhs: Some(scan.p_ram_hat),
        status: RowStatus::NotComputed,
        note: "no estimator for l2-boundedness of the connectivity operator".into(),
    });
    let amb = &scan.rho_ambient;
    let worst = scan
        .rows
        .iter()
        .map(|r| amb.value - r.estimate.value - amb.ci_halfwidth - r.estimate.ci_halfwidth)
        .fold(f64::NEG_INFINITY, f64::max);
    rows.push(InequalityRow {
        name: "rho_G <= rho(B_p) for all p".into(),
        lhs: Some((amb.value, amb.value)),
        rhs: scan
            .rows
            .iter()
            .map(|r| r.estimate.value)
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))))
            .map(|v| (v, v)),
        status: if worst <= 0.0 { RowStatus::Holds } else { RowStatus::Violated },
        note: "smallest rho_hat over the grid, CI-aware".into(),
    });
    rows
}

impl ExponentScan {
    /// Rows `p,rho_hat,ci_halfwidth,ratio,root,n_max,monotone` with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,rho_hat,ci_halfwidth,ratio,root,n_max,monotone\n");
        for r in &self.rows {
            let e = &r.estimate;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.p, e.value, e.ci_halfwidth, e.ratio, e.root, self.n_max, e.monotone_certificate
            );
        }
        out
    }

    /// Static plot of `ρ̂` against `p` with the `ρ̂_G` and `1` reference lines.
    pub fn to_svg(&self) -> String {
        let (w, h, m) = (640.0, 420.0, 50.0);
        let lo = (self.rho_ambient.value - 0.05).min(
            self.rows.iter().map(|r| r.estimate.value).fold(1.0, f64::min) - 0.05,
        );
        let x = |p: f64| m + p * (w - 2.0 * m);
        let y = |r: f64| h - m - (r - lo) / (1.0 - lo + 0.02) * (h - 2.0 * m);
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<path d="M{:.2} {:.2} H{:.2} M{:.2} {:.2} V{:.2}" stroke="black" fill="none"/>"#,
            m, h - m, w - m, m, h - m, m
        );
        for (val, label, colour) in [(1.0, "1", "grey"), (self.rho_ambient.value, "rho_G", "blue")] {
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{colour}" stroke-dasharray="4 3"/><text x="{:.2}" y="{:.2}" font-size="11">{label}</text>"#,
                m, y(val), w - m, y(val), w - m + 4.0, y(val) + 4.0
            );
        }
        let pts: Vec<String> = self
            .rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", x(r.p), y(r.estimate.value)))
            .collect();
        let _ = writeln!(s, r#"<polyline points="{}" stroke="red" fill="none"/>"#, pts.join(" "));
        for r in &self.rows {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="red"/>"#, x(r.p), y(r.estimate.value));
        }
        for t in 0..=4 {
            let p = t as f64 / 4.0;
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{p}</text>"#, x(p), h - m + 16.0);
        }
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">p</text>"#, w / 2.0, h - 8.0);
        s.push_str("</svg>\n");
        s
    }
}

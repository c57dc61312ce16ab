//! Subcommands: each resolves its parameters into a plan, then executes it
//! into a list of named artifacts.

use cospectra::cospectral::{
    annealed_exponent, default_route, quenched_exponent, schreier_spectral_radius, AnnealedConfig,
    AnnealedRoute, ExponentEstimate, CSV_HEADER, POWER_TOL,
};
use cospectra::exponents::{
    inequality_report, known_constants, refine, scan, xi_estimate, ScanConfig, Target,
};
use cospectra::graph::io::write_graph;
use cospectra::graph::{build_ball_capped, build_schreier_capped, Letter};
use cospectra::percolation::{CoupledGraph, EdgeCoupling};
use cospectra::two_three::{
    build_kernels_from_walk, check_23_inequalities, check_conclusions, check_hypotheses,
    limit_f_tilde, mass_transport_defects, random_walk_instance, FiniteRelation,
};
use cospectra::walk::{evolve, sample_batch};
use cospectra::walk_growth::{count_walks, finite_urg_operator_norm, random_connected_graph, walk_growth_rate};
use cospectra::{GroupFamily, RootedGraph, SubgroupOracle, WalkKernel};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;

pub type Artifacts = Vec<(String, Vec<u8>)>;

fn json_bytes(v: &impl Serialize) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s.into_bytes()
}

#[derive(Debug, Clone, Serialize)]
struct GraphPlan {
    #[serde(serialize_with = "display")]
    family: GroupFamily,
    radius: usize,
    #[serde(serialize_with = "display_opt")]
    subgroup: Option<SubgroupOracle>,
    vertex_cap: u128,
    predicted_vertices: Option<u128>,
}

fn display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn display_opt<T: std::fmt::Display, S: serde::Serializer>(v: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.collect_str(v),
        None => s.serialize_none(),
    }
}

fn graph_plan(cfg: &RunConfig, default_radius: usize) -> Result<GraphPlan, CliError> {
    let family: GroupFamily = cfg.require("graph", "family")?;
    family.validate()?;
    let radius = cfg.get_or("graph", "radius", default_radius)?;
    let subgroup: Option<SubgroupOracle> = cfg.get("graph", "subgroup")?;
    if let Some(h) = &subgroup {
        h.validate(&family)?;
    }
    let vertex_cap = cfg.get_or("graph", "vertex_cap", 50_000_000u128)?;
    let predicted_vertices = subgroup.is_none().then(|| family.ball_volume(radius));
    Ok(GraphPlan {
        family,
        radius,
        subgroup,
        vertex_cap,
        predicted_vertices,
    })
}

fn build(plan: &GraphPlan) -> Result<RootedGraph, CliError> {
    Ok(match &plan.subgroup {
        Some(h) => build_schreier_capped(plan.family, h, plan.radius, plan.vertex_cap)?,
        None => build_ball_capped(plan.family, plan.radius, plan.vertex_cap)?,
    })
}

/// Kernel from `[kernel] hold` and optional per-generator `weights`.
fn kernel(cfg: &RunConfig, family: GroupFamily) -> Result<WalkKernel, CliError> {
    let hold: f64 = cfg.get_or("kernel", "hold", 0.0)?;
    let letters = family.letters();
    let gens = letters.iter().map(|l| l.gen).max().map_or(0, |g| g as usize + 1);
    let weights: Vec<f64> = cfg.list("kernel", "weights")?.unwrap_or_else(|| vec![1.0; gens]);
    if weights.len() != gens {
        return Err(CliError::Config {
            line: 0,
            message: format!("[kernel] weights needs {gens} entries, one per generator"),
        });
    }
    let total: f64 = letters.iter().map(|l| weights[l.gen as usize]).sum();
    if !(total > 0.0) {
        return Err(CliError::Config {
            line: 0,
            message: "[kernel] weights must have positive total".into(),
        });
    }
    let steps: Vec<(Letter, f64)> = letters
        .iter()
        .map(|&l| (l, (1.0 - hold) * weights[l.gen as usize] / total))
        .collect();
    Ok(WalkKernel::new(steps, hold)?)
}

pub fn gen_graph(cfg: &RunConfig, dry: bool) -> Result<(Value, Artifacts), CliError> {
    let plan = graph_plan(cfg, 6)?;
    if dry {
        return Ok((json!({ "subcommand": "gen-graph", "graph": plan }), Vec::new()));
    }
    let g = build(&plan)?;
    let summary = json!({
        "family": g.family_tag(),
        "radius": g.radius(),
        "degree": g.degree_bound(),
        "vertices": g.vertex_count(),
        "boundary_vertices": (0..g.vertex_count() as u32).filter(|&v| g.is_boundary(v)).count(),
    });
    Ok((
        summary.clone(),
        vec![
            ("graph.txt".into(), write_graph(&g).into_bytes()),
            ("graph.json".into(), json_bytes(&summary)),
        ],
    ))
}

pub fn walk(cfg: &RunConfig, dry: bool) -> Result<(Value, Artifacts), CliError> {
    let plan = graph_plan(cfg, 8)?;
    let k = kernel(cfg, plan.family)?;
    let n: usize = cfg.get_or("walk", "n_max", plan.radius)?;
    let samples: usize = cfg.get_or("walk", "samples", 0)?;
    let seed = if samples > 0 { Some(cfg.require_seed("walk sampling")?) } else { None };
    let workers: usize = cfg.get_or("run", "workers", 0)?;
    if dry {
        return Ok((
            json!({ "subcommand": "walk", "graph": plan, "steps": n, "samples": samples }),
            Vec::new(),
        ));
    }
    let g = build(&plan)?;
    let d = evolve(&g, &k, g.root(), n);
    let mut summary = json!({
        "steps": n,
        "exact": d.exact_flag(),
        "total_mass": d.total_mass(),
        "return_probability": d.get(g.root()),
        "support": d.support_len(),
    });
    if let Some(seed) = seed {
        let batch = sample_batch(&g, &k, g.root(), n, samples, seed, workers)?;
        summary["monte_carlo"] = json!({
            "samples": samples,
            "return_frequency": batch.frequency(|v| v == g.root()),
            "invalid_fraction": batch.invalid_fraction(),
        });
    }
    Ok((
        summary.clone(),
        vec![
            ("distribution.csv".into(), d.to_csv().into_bytes()),
            ("walk.json".into(), json_bytes(&summary)),
        ],
    ))
}

pub fn percolate(cfg: &RunConfig, dry: bool) -> Result<(Value, Artifacts), CliError> {
    let plan = graph_plan(cfg, 6)?;
    let p: f64 = cfg.require("percolation", "p")?;
    let seed = cfg.require_seed("percolate")?;
    if dry {
        return Ok((json!({ "subcommand": "percolate", "graph": plan, "p": p }), Vec::new()));
    }
    let g = build(&plan)?;
    let sample = CoupledGraph::new(&g, &EdgeCoupling::derived(seed, "percolate", 0)).percolate(p)?;
    let summary = json!({
        "p": p,
        "edges": sample.edge_count(),
        "open_edges": sample.open_count(),
        "root_cluster_size": sample.cluster_of_root().size(),
        "approximate": sample.approximate(),
    });
    Ok((
        summary.clone(),
        vec![
            ("edges.csv".into(), sample.edges_csv().into_bytes()),
            ("histogram.csv".into(), sample.histogram_csv().into_bytes()),
            ("percolate.json".into(), json_bytes(&summary)),
        ],
    ))
}

pub fn cospectral(cfg: &RunConfig, dry: bool) -> Result<(Value, Artifacts), CliError> {
    let target: String = cfg.get_or("cospectral", "target", "identity".to_string())?;
    let strict: bool = cfg.get_or("run", "strict", false)?;
    let power: bool = cfg.get_or("cospectral", "power", false)?;
    let power_iters: usize = cfg.get_or("cospectral", "power_iters", 100_000)?;
    let plan = graph_plan(cfg, 12)?;
    let k = kernel(cfg, plan.family)?;
    let n_max: usize = cfg.get_or("cospectral", "n_max", plan.radius)?;
    match target.as_str() {
        "identity" | "subgroup" => {
            if target == "subgroup" && plan.subgroup.is_none() {
                return Err(CliError::Config {
                    line: 0,
                    message: "target = subgroup needs [graph] subgroup".into(),
                });
            }
            if dry {
                return Ok((
                    json!({ "subcommand": "cospectral", "target": target, "graph": plan, "n_max": n_max, "power": power }),
                    Vec::new(),
                ));
            }
            let mut plan = plan;
            if target == "identity" {
                plan.subgroup = None;
            }
            // for subgroup targets the root coset of the Schreier ball is the target
            let g = build(&plan)?;
            let est = quenched_exponent(&g, &k, &|v| v == 0, Some(0), n_max, strict)?;
            let power_result = if power {
                Some(schreier_spectral_radius(&g, &k, power_iters, POWER_TOL)?)
            } else {
                None
            };
            let summary = json!({
                "target": target,
                "family": g.family_tag(),
                "radius": plan.radius,
                "vertices": g.vertex_count(),
                "estimate": est,
                "spectral_radius": power_result,
            });
            Ok(cospectral_artifacts(&target, &est, summary))
        }
        "cluster" => {
            let p: f64 = cfg.require("cospectral", "p")?;
            let samples: usize = cfg.get_or("cospectral", "samples", 100)?;
            let seed = cfg.require_seed("annealed cospectral")?;
            let route = match cfg.raw("cospectral", "route") {
                None => default_route(plan.family, &k, plan.radius),
                Some("sphere") => AnnealedRoute::SphereProfile,
                Some("ball") => AnnealedRoute::Ball { radius: plan.radius },
                Some(other) => {
                    return Err(CliError::Config {
                        line: 0,
                        message: format!("[cospectral] route must be sphere or ball, got `{other}`"),
                    })
                }
            };
            if dry {
                return Ok((
                    json!({ "subcommand": "cospectral", "target": target, "graph": plan, "n_max": n_max,
                            "p": p, "samples": samples, "route": format!("{route:?}") }),
                    Vec::new(),
                ));
            }
            let est = annealed_exponent(
                plan.family,
                &k,
                &AnnealedConfig {
                    p,
                    seed,
                    samples,
                    n_max,
                    route,
                },
            )?;
            let summary = json!({
                "target": target,
                "family": plan.family.to_string(),
                "p": p,
                "samples": samples,
                "route": format!("{route:?}"),
                "estimate": est,
            });
            Ok(cospectral_artifacts(&target, &est, summary))
        }
        other => Err(CliError::Config {
            line: 0,
            message: format!("[cospectral] target must be identity, subgroup or cluster, got `{other}`"),
        }),
    }
}

fn cospectral_artifacts(target: &str, est: &ExponentEstimate, summary: Value) -> (Value, Artifacts) {
    let csv = format!("{CSV_HEADER}{}", est.csv_rows(target));
    let brief = json!({
        "target": target,
        "value": est.value,
        "ratio": est.ratio,
        "root": est.root,
        "exact": est.exact,
        "spectral_radius": summary.get("spectral_radius"),
    });
    (
        brief,
        vec![
            ("sequence.csv".into(), csv.into_bytes()),
            ("cospectral.json".into(), json_bytes(&summary)),
        ],
    )
}

fn parse_matrix(text: &str, path: &str) -> Result<DMatrix<f64>, CliError> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.split(',')
                .map(|x| {
                    x.trim().parse::<f64>().map_err(|e| CliError::Config {
                        line: i + 1,
                        message: format!("{path}: `{}`: {e}", x.trim()),
                    })
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Config {
            line: 0,
            message: format!("{path}: transition matrix must be square"),
        });
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// A result that is reported either way: failures are findings.
fn finding<T: Serialize>(r: cospectra::Result<T>) -> Value {
    match r {
        Ok(v) => json!(v),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn read(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn two_three(cfg: &RunConfig, dry: bool) -> Result<(Value, Artifacts), CliError> {
    let k_max: usize = cfg.get_or("two-three", "k_max", 9)?;
    if k_max < 3 {
        return Err(CliError::Config {
            line: 0,
            message: "[two-three] k_max must be at least 3".into(),
        });
    }
    let files = match (cfg.raw("two-three", "relation"), cfg.raw("two-three", "transition")) {
        (Some(r), Some(t)) => Some((r.to_string(), t.to_string())),
        (None, None) => None,
        _ => {
            return Err(CliError::Config {
                line: 0,
                message: "[two-three] relation and transition must be given together".into(),
            })
        }
    };
    let points: usize = cfg.get_or("two-three", "points", 20)?;
    let instances: usize = cfg.get_or("two-three", "instances", 1)?;
    let hold: f64 = cfg.get_or("two-three", "hold", 0.5)?;
    let seed = if files.is_none() { Some(cfg.require_seed("random relations")?) } else { None };
    if dry {
        return Ok((
            json!({ "subcommand": "two-three", "k_max": k_max, "files": files,
                    "points": points, "instances": instances, "hold": hold }),
            Vec::new(),
        ));
    }
    let cases: Vec<(FiniteRelation, DMatrix<f64>)> = match (&files, seed) {
        (Some((r, t)), _) => {
            let rel = FiniteRelation::parse(&read(r)?)?;
            vec![(rel, parse_matrix(&read(t)?, t)?)]
        }
        (None, Some(seed)) => (0..instances as u64)
            .map(|i| random_walk_instance(points, seed, i, hold))
            .collect(),
        (None, None) => unreachable!("seed required above"),
    };
    let mut reports = Vec::new();
    let mut artifacts = Vec::new();
    let mut all_pass = true;
    for (i, (rel, p)) in cases.iter().enumerate() {
        let ks = build_kernels_from_walk(rel, p, k_max)?;
        let hyp = check_hypotheses(rel, &ks);
        let mut ineq = Vec::new();
        let mut transport = Vec::new();
        for k in 1..=k_max / 3 {
            ineq.push(check_23_inequalities(rel, &ks, k)?);
            let (a, b) = mass_transport_defects(rel, &ks, k)?;
            transport.push(json!({ "k": k, "phi_defect": a, "psi_defect": b }));
        }
        let conc = check_conclusions(rel, &ks, &limit_f_tilde(rel, p), 4.min(k_max));
        let pass = hyp.all_pass()
            && ineq.iter().all(|r| r.pass)
            && transport.iter().all(|t| t["phi_defect"].as_f64() <= Some(1e-9) && t["psi_defect"].as_f64() <= Some(1e-9))
            && conc.first_holds
            && conc.gaps_nonincreasing;
        all_pass &= pass;
        reports.push(json!({
            "instance": i,
            "points": rel.len(),
            "pass": pass,
            "hypotheses": hyp,
            "inequalities": ineq,
            "mass_transport": transport,
            "conclusions": conc,
        }));
        artifacts.push((format!("relation_{i:04}.txt"), rel.to_text().into_bytes()));
    }
    let summary = json!({ "all_pass": all_pass, "k_max": k_max, "instances": reports });
    artifacts.push(("two_three.json".into(), json_bytes(&summary)));
    Ok((json!({ "all_pass": all_pass, "instances": cases.len() }), artifacts))
}

pub fn walk_growth(cfg: &RunConfig, dry: bool) -> Result<(Value, Artifacts), CliError> {
    let from_family = cfg.raw("graph", "family").is_some();
    if from_family {
        let plan = graph_plan(cfg, 8)?;
        let n_max: usize = cfg.get_or("walk-growth", "n_max", plan.radius)?;
        if dry {
            return Ok((json!({ "subcommand": "walk-growth", "graph": plan, "n_max": n_max }), Vec::new()));
        }
        let g = build(&plan)?;
        let seq = count_walks(&g, n_max);
        let est = walk_growth_rate(&seq)?;
        let summary = json!({ "graphs": [{ "instance": 0, "vertices": g.vertex_count(), "estimate": est }] });
        return Ok((
            summary.clone(),
            vec![
                ("growth_0000.csv".into(), seq.to_csv().into_bytes()),
                ("walk_growth.json".into(), json_bytes(&summary)),
            ],
        ));
    }
    let graphs: usize = cfg.get_or("walk-growth", "graphs", 1)?;
    let vertices: usize = cfg.get_or("graph", "vertices", 100)?;
    let extra: usize = cfg.get_or("graph", "extra", 2 * vertices)?;
    let n_max: usize = cfg.get_or("walk-growth", "n_max", 200)?;
    let seed = cfg.require_seed("random graphs")?;
    if dry {
        return Ok((
            json!({ "subcommand": "walk-growth", "graphs": graphs, "vertices": vertices, "extra": extra, "n_max": n_max }),
            Vec::new(),
        ));
    }
    let mut rows = Vec::new();
    let mut artifacts = Vec::new();
    for i in 0..graphs {
        let g = random_connected_graph(vertices, extra, seed, i as u64)?;
        let seq = count_walks(&g, n_max);
        let est = walk_growth_rate(&seq)?;
        let norm = finite_urg_operator_norm(&g)?;
        rows.push(json!({
            "instance": i,
            "vertices": g.vertex_count(),
            "estimate": est,
            "operator_norm": norm,
            "log_norm": norm.value.ln(),
            "difference": (est.ratio - norm.value.ln()).abs(),
        }));
        artifacts.push((format!("growth_{i:04}.csv"), seq.to_csv().into_bytes()));
    }
    let summary = json!({ "graphs": rows });
    artifacts.push(("walk_growth.json".into(), json_bytes(&summary)));
    Ok((json!({ "graphs": graphs }), artifacts))
}

pub fn scan_exponents(cfg: &RunConfig, dry: bool) -> Result<(Value, Artifacts), CliError> {
    let family: GroupFamily = cfg.require("graph", "family")?;
    family.validate()?;
    let k = kernel(cfg, family)?;
    let p_grid: Vec<f64> = cfg
        .list("scan", "p_grid")?
        .unwrap_or_else(|| vec![0.0, 0.25, 0.5, 0.75, 0.9, 0.95, 1.0]);
    let n_max: usize = cfg.get_or("scan", "n_max", 10)?;
    let samples: usize = cfg.get_or("scan", "samples", 200)?;
    let radius: usize = cfg.get_or("graph", "radius", 2 * n_max)?;
    let route = match cfg.raw("scan", "route") {
        None => default_route(family, &k, radius),
        Some("sphere") => AnnealedRoute::SphereProfile,
        Some("ball") => AnnealedRoute::Ball { radius },
        Some(other) => {
            return Err(CliError::Config {
                line: 0,
                message: format!("[scan] route must be sphere or ball, got `{other}`"),
            })
        }
    };
    let ram_bracket: Option<Vec<f64>> = cfg.list("scan", "ram_bracket")?;
    if ram_bracket.as_ref().is_some_and(|b| b.len() != 2) {
        return Err(CliError::Config {
            line: 0,
            message: "[scan] ram_bracket needs two values".into(),
        });
    }
    let steps: usize = cfg.get_or("scan", "steps", 4)?;
    let xi_p: Vec<f64> = cfg.list("scan", "xi_p")?.unwrap_or_default();
    let xi_dist: Vec<usize> = cfg.list("scan", "xi_dist")?.unwrap_or_else(|| vec![1, 2, 3, 4]);
    let xi_samples: usize = cfg.get_or("scan", "xi_samples", 10_000)?;
    let seed = cfg.require_seed("scan-exponents")?;
    if dry {
        return Ok((
            json!({ "subcommand": "scan-exponents", "family": family.to_string(), "p_grid": p_grid,
                    "n_max": n_max, "samples": samples, "route": format!("{route:?}"),
                    "ram_bracket": ram_bracket, "steps": steps, "xi_p": xi_p }),
            Vec::new(),
        ));
    }
    let sc = ScanConfig {
        family,
        n_max,
        samples,
        seed,
        route,
    };
    let result = scan(&sc, &k, &p_grid)?;
    let amb = result.rho_ambient.value;
    let bracket = ram_bracket.map(|b| (b[0], b[1])).unwrap_or(result.p_ram_hat);
    let ram = finding(refine(&sc, &k, amb, Target::Ram, bracket, steps));
    let ca = finding(refine(&sc, &k, amb, Target::Ca, result.p_ca_hat, steps));
    let xi: Vec<Value> = xi_p
        .iter()
        .enumerate()
        .map(|(i, &p)| finding(xi_estimate(family, p, &xi_dist, xi_samples, seed.wrapping_add(i as u64))))
        .collect();
    let known = known_constants(family);
    let report = inequality_report(family, &result, &known);
    let summary = json!({
        "scan": result,
        "refined_ram": ram,
        "refined_ca": ca,
        "xi": xi,
        "known_constants": known,
        "inequalities": report,
    });
    Ok((
        json!({ "p_ram_hat": result.p_ram_hat, "p_ca_hat": result.p_ca_hat }),
        vec![
            ("scan.csv".into(), result.to_csv().into_bytes()),
            ("scan.json".into(), json_bytes(&summary)),
            ("scan.svg".into(), result.to_svg().into_bytes()),
        ],
    ))
}

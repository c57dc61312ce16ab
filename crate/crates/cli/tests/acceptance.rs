//! Acceptance suite: one pass/fail line per criterion.
//!
//! Everything runs inside one test so the large graphs are built one at a
//! time. Run with `cargo test --test acceptance -- --nocapture` to see the
//! lines.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use cospectra::cospectral::{quenched_exponent, schreier_spectral_radius, laziness_bound_check, AnnealedRoute, ExponentEstimate, POWER_TOL};
use cospectra::exponents::{inequality_report, known_constants, refine, scan, xi_estimate, RowStatus, ScanConfig, Target};
use cospectra::graph::subgroup::parse_word;
use cospectra::percolation::{union_coupling, CoupledGraph, EdgeCoupling};
use cospectra::rng;
use cospectra::two_three::{
    break_23, break_convolution, build_kernels_from_walk, check_23_inequalities, check_conclusions,
    check_hypotheses, inject_negative, limit_f_tilde, mass_transport_defects, random_walk_instance,
    Status,
};
use cospectra::walk_growth::{count_walks, random_connected_graph, walk_growth_rate};
use cospectra::{build_ball, build_schreier, GroupFamily, SubgroupOracle, WalkKernel};
use nalgebra::DMatrix;

// tolerances
const TOL_FREE_GROUP: f64 = 1e-2;
const TOL_SUBGROUP: f64 = 2e-2;
const SLACK_23: f64 = 1e-9;
const WIDTH_RAM: f64 = 0.1;
const RHO_095_MIN: f64 = 0.97;
const TOL_XI: f64 = 1e-12;
const SLACK_LAZY: f64 = 0.02;
const TOL_GROWTH: f64 = 1e-4;
const TOL_REGULAR: f64 = 1e-12;
const SIGMAS: f64 = 4.0;

struct Outcome {
    lines: Vec<String>,
    failed: Vec<usize>,
}

impl Outcome {
    fn record(&mut self, criterion: usize, pass: bool, detail: String) {
        let line = format!(
            "criterion {criterion:>2}: {} : {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
        println!("{line}");
        self.lines.push(line);
        if !pass {
            self.failed.push(criterion);
        }
    }
}

/// `p_2n(o, o)` on the `d`-regular tree from the birth-death chain of the
/// distance to the root.
fn radial_return(d: f64, n_max: usize) -> Vec<f64> {
    let steps = 2 * n_max;
    let mut p = vec![0.0; steps + 2];
    p[0] = 1.0;
    let mut out = vec![1.0];
    for t in 1..=steps {
        let mut q = vec![0.0; steps + 2];
        q[1] += p[0];
        for r in 1..=t.min(steps) {
            q[r - 1] += p[r] / d;
            if r + 1 < q.len() {
                q[r + 1] += p[r] * (d - 1.0) / d;
            }
        }
        p = q;
        if t % 2 == 0 {
            out.push(p[0]);
        }
    }
    out
}

fn monotone(label: &str, e: &ExponentEstimate, bad: &mut Vec<String>) {
    if !e.monotone_certificate {
        bad.push(label.to_string());
    }
}

#[test]
fn acceptance() {
    let mut out = Outcome {
        lines: Vec::new(),
        failed: Vec::new(),
    };
    let mut monotone_failures = Vec::new();
    let mut monotone_count = 0usize;

    let family = GroupFamily::Free { rank: 2 };
    let srw = WalkKernel::simple(&family.letters());
    let is_root = |v: u32| v == 0;

    // 1: free-group spectral radius on the radius-15 ball, n_max = 15
    let t = Instant::now();
    let ball = build_ball(family, 15).unwrap();
    let e1 = quenched_exponent(&ball, &srw, &is_root, Some(0), 15, true).unwrap();
    let oracle = radial_return(4.0, 15);
    let oracle_ratio = (oracle[15] / oracle[14]).sqrt();
    let elapsed = t.elapsed().as_secs_f64();
    out.record(
        1,
        (e1.value - oracle_ratio).abs() <= TOL_FREE_GROUP && e1.exact && elapsed <= 60.0,
        format!(
            "ratio {:.6} vs radial oracle {:.6} (|diff| {:.1e} <= {TOL_FREE_GROUP}); sqrt(3)/2 - ratio = {:.4}; R=15, {elapsed:.1}s",
            e1.value,
            oracle_ratio,
            (e1.value - oracle_ratio).abs(),
            3f64.sqrt() / 2.0 - e1.value
        ),
    );
    monotone("criterion 1", &e1, &mut monotone_failures);
    monotone_count += 1;

    // 8 (first half): laziness on the same instance
    let lazy_grid = [0.05, 0.1, 0.25];
    let lazy1 = laziness_bound_check(&ball, &srw, &is_root, Some(0), &lazy_grid, 15, SLACK_LAZY).unwrap();
    drop(ball);

    // 2: <a>-membership through the Schreier graph
    let t = Instant::now();
    let h = SubgroupOracle::Cyclic(parse_word("a").unwrap());
    let sch = build_schreier(family, &h, 16).unwrap();
    let e2 = quenched_exponent(&sch, &srw, &is_root, Some(0), 16, true).unwrap();
    monotone("criterion 2", &e2, &mut monotone_failures);
    monotone_count += 1;
    let lazy2 = laziness_bound_check(&sch, &srw, &is_root, Some(0), &lazy_grid, 16, SLACK_LAZY).unwrap();
    drop(sch);
    let sch14 = build_schreier(family, &h, 14).unwrap();
    let power = schreier_spectral_radius(&sch14, &srw, 100_000, POWER_TOL).unwrap();
    drop(sch14);
    let d_a = (e2.value - e1.value).abs();
    let d_b = (e2.value - power.value).abs();
    out.record(
        2,
        d_a <= TOL_SUBGROUP && d_b <= TOL_SUBGROUP,
        format!(
            "<a> ratio {:.6}: vs criterion 1 |diff| {d_a:.4}, vs Schreier power iteration R=14 {:.6} |diff| {d_b:.4} (tol {TOL_SUBGROUP}); {:.1}s",
            e2.value,
            power.value,
            t.elapsed().as_secs_f64()
        ),
    );

    // 3 and 4: 200 random relations
    let t = Instant::now();
    let mut worst_ineq = 0.0f64;
    let mut worst_transport = 0.0f64;
    let mut injected = 0usize;
    let mut detected = 0usize;
    let mut conclusion_i_ok = true;
    let mut multi = 0usize;
    let mut gaps_ok = true;
    let holds = [0.1, 0.25, 0.5, 0.75];
    let mut sizes = rng::stream(2024, "acceptance-sizes", 0);
    for i in 0..200u64 {
        let n = 2 + (rand::Rng::random_range(&mut sizes, 0..199usize));
        let (rel, p) = random_walk_instance(n, 2024, i, holds[i as usize % 4]);
        let ks = build_kernels_from_walk(&rel, &p, 10).unwrap();
        for k in 1..=3 {
            let r = check_23_inequalities(&rel, &ks, k).unwrap();
            worst_ineq = worst_ineq.max(r.square_violation).max(r.cube_violation);
            let (a, b) = mass_transport_defects(&rel, &ks, k).unwrap();
            worst_transport = worst_transport.max(a).max(b);
        }
        let ft = limit_f_tilde(&rel, &p);
        let c = check_conclusions(&rel, &ks, &ft, 4);
        conclusion_i_ok &= c.first_holds;
        // support components of the transition matrix
        let components = {
            let n = rel.len();
            let mut seen = vec![false; n];
            let mut count = 0;
            for s in 0..n {
                if seen[s] {
                    continue;
                }
                count += 1;
                let mut stack = vec![s];
                seen[s] = true;
                while let Some(x) = stack.pop() {
                    for y in 0..n {
                        if !seen[y] && p[(x, y)] > 0.0 {
                            seen[y] = true;
                            stack.push(y);
                        }
                    }
                }
            }
            count
        };
        if components > 1 {
            multi += 1;
            gaps_ok &= c.gaps_nonincreasing;
        }
        // adversarial instances
        let mut neg = ks.clone();
        inject_negative(&mut neg, 2024, i);
        injected += 1;
        detected += usize::from(check_hypotheses(&rel, &neg).a.status == Status::Fail);
        let mut conv = ks.clone();
        break_convolution(&mut conv);
        injected += 1;
        detected += usize::from(check_hypotheses(&rel, &conv).b.status == Status::Fail);
        let mut bad = ks.clone();
        break_23(&mut bad, &rel, 2).unwrap();
        injected += 1;
        detected += usize::from(!check_23_inequalities(&rel, &bad, 2).unwrap().pass);
    }
    let elapsed = t.elapsed().as_secs_f64();
    out.record(
        3,
        worst_ineq <= SLACK_23 && worst_transport <= SLACK_23 && detected == injected && elapsed <= 120.0,
        format!(
            "worst inequality violation {worst_ineq:.1e}, worst mass-transport defect {worst_transport:.1e} (slack {SLACK_23}); adversarial detected {detected}/{injected}; {elapsed:.1}s"
        ),
    );
    out.record(
        4,
        conclusion_i_ok && gaps_ok && multi > 0,
        format!("(i) holds for k <= 10 on all 200: {conclusion_i_ok}; (ii) gap non-increasing over k = 4..10 on {multi} multi-component instances: {gaps_ok}"),
    );

    // 6 and 7: tree exponents
    let t = Instant::now();
    let tree = GroupFamily::RegularTree { degree: 4 };
    let k4 = WalkKernel::simple(&tree.letters());
    let cfg6 = ScanConfig {
        family: tree,
        n_max: 10,
        samples: 200,
        seed: 6,
        route: AnnealedRoute::SphereProfile,
    };
    let scan6 = scan(&cfg6, &k4, &[0.0, 0.25, 0.5, 0.75, 0.8, 0.9, 0.95, 1.0]).unwrap();
    let ram = refine(&cfg6, &k4, scan6.rho_ambient.value, Target::Ram, (0.25, 0.75), 4).unwrap();
    let rho = |p: f64| scan6.rows.iter().find(|r| r.p == p).unwrap().estimate.value;
    let increasing = rho(0.8) < rho(0.9) && rho(0.9) < rho(0.95);
    out.record(
        6,
        ram.width() <= WIDTH_RAM && ram.contains(0.5) && rho(0.95) >= RHO_095_MIN && increasing,
        format!(
            "p_Ram in [{}, {}] (width {} <= {WIDTH_RAM}); rho(0.8, 0.9, 0.95) = {:.4}, {:.4}, {:.4}; {:.1}s",
            ram.lo.p,
            ram.hi.p,
            ram.width(),
            rho(0.8),
            rho(0.9),
            rho(0.95),
            t.elapsed().as_secs_f64()
        ),
    );
    let mut scans = vec![(tree, scan6)];
    for (fam, route, n_max, samples) in [
        (GroupFamily::Free { rank: 3 }, AnnealedRoute::SphereProfile, 10, 200),
        (family, AnnealedRoute::Ball { radius: 10 }, 5, 100),
    ] {
        let k = WalkKernel::simple(&fam.letters());
        let cfg = ScanConfig {
            family: fam,
            n_max,
            samples,
            seed: 7,
            route,
        };
        scans.push((fam, scan(&cfg, &k, &[0.0, 0.25, 0.5, 0.75, 0.9, 1.0]).unwrap()));
    }
    let mut chain_ok = true;
    let mut details = Vec::new();
    for (fam, s) in &scans {
        let rows = inequality_report(*fam, s, &known_constants(*fam));
        let status = |n: &str| rows.iter().find(|r| r.name == n).unwrap().status;
        let ok = status("p_Ram <= p_ca") == RowStatus::Holds
            && status("rho_G <= rho(B_p) for all p") == RowStatus::Holds;
        chain_ok &= ok;
        details.push(format!("{fam}: ram {:?} ca {:?}", s.p_ram_hat, s.p_ca_hat));
        monotone_count += 1 + s.rows.len();
        monotone(&format!("{fam} ambient"), &s.rho_ambient, &mut monotone_failures);
        for r in &s.rows {
            monotone(&format!("{fam} p={}", r.p), &r.estimate, &mut monotone_failures);
        }
    }
    let mut worst_xi = 0.0f64;
    for p in [0.05, 0.3, 0.5, 0.7, 0.95] {
        let xi = xi_estimate(tree, p, &[1, 2, 5, 10], 1, 0).unwrap();
        worst_xi = worst_xi.max((xi.value + p.ln()).abs());
    }
    out.record(
        7,
        chain_ok && worst_xi <= TOL_XI,
        format!("{}; tree |xi_p + log p| <= {worst_xi:.1e}", details.join("; ")),
    );

    // 5: root sequences nondecreasing on every instance above
    out.record(
        5,
        monotone_failures.is_empty(),
        format!("{} estimates checked, failures: {:?}", monotone_count, monotone_failures),
    );

    // 8: laziness bound
    let lazy_ok = lazy1.violations().is_empty() && lazy2.violations().is_empty();
    let fmt = |r: &cospectra::cospectral::LazinessReport| {
        r.rows
            .iter()
            .map(|x| format!("t={} diff {:.4} <= {:.4}", x.t, x.difference, x.bound))
            .collect::<Vec<_>>()
            .join(", ")
    };
    out.record(8, lazy_ok, format!("free(2): {}; <a>: {}", fmt(&lazy1), fmt(&lazy2)));

    // 9: walk growth
    let t = Instant::now();
    let mut worst_growth = 0.0f64;
    let mut sizes = rng::stream(9, "acceptance-graphs", 0);
    for i in 0..50u64 {
        let n = rand::Rng::random_range(&mut sizes, 20..=500usize);
        let g = random_connected_graph(n, n, 9, i).unwrap();
        let mut a = DMatrix::<f64>::zeros(n, n);
        for v in 0..n {
            for e in g.edges(v as u32) {
                a[(v, e.to as usize)] += 1.0;
            }
        }
        let top = a.symmetric_eigen().eigenvalues.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        let est = walk_growth_rate(&count_walks(&g, 200)).unwrap();
        worst_growth = worst_growth.max((est.ratio - top.ln()).abs());
    }
    let mut worst_regular = 0.0f64;
    for (fam, d) in [(family, 4.0f64), (tree, 4.0), (GroupFamily::FreeAbelian { dim: 3 }, 6.0)] {
        let g = build_ball(fam, 10).unwrap();
        let s = count_walks(&g, 10);
        for (n, lw) in s.log_w.iter().enumerate() {
            worst_regular = worst_regular.max((lw - n as f64 * d.ln()).abs());
        }
    }
    out.record(
        9,
        worst_growth <= TOL_GROWTH && worst_regular <= TOL_REGULAR,
        format!(
            "50 random graphs: worst |rate - log lambda| {worst_growth:.1e} <= {TOL_GROWTH}; regular balls |log w_n - n log d| <= {worst_regular:.1e}; {:.1}s",
            t.elapsed().as_secs_f64()
        ),
    );

    // 10: couplings
    let small = build_ball(family, 4).unwrap();
    let cg = CoupledGraph::new(&small, &EdgeCoupling::new(10));
    let mut pair_rng = rng::stream(10, "acceptance-pairs", 0);
    let mut violations = 0usize;
    for i in 0..10_000u64 {
        let a: f64 = rand::Rng::random(&mut pair_rng);
        let b: f64 = rand::Rng::random(&mut pair_rng);
        let (p, q) = (a.min(b), a.max(b).min(0.999));
        let p = p.min(q);
        if !cg.percolate(p).unwrap().is_subset_of(&cg.percolate(q).unwrap()) {
            violations += 1;
        }
        let (lo, hi) = union_coupling(&small, p, q, i).unwrap();
        if !lo.is_subset_of(&hi) {
            violations += 1;
        }
    }
    let lattice = build_ball(GroupFamily::FreeAbelian { dim: 3 }, 32).unwrap();
    let q = 0.6;
    let (_, upper) = union_coupling(&lattice, 0.3, q, 10).unwrap();
    let m = upper.edge_count() as f64;
    let freq = upper.open_count() as f64 / m;
    let sigma = (q * (1.0 - q) / m).sqrt();
    out.record(
        10,
        violations == 0 && (freq - q).abs() <= SIGMAS * sigma && m >= 1e5,
        format!(
            "2 x 10^4 coupled pairs, {violations} violations; union marginal {freq:.5} vs q = {q} over {m} edges (|diff| {:.1e} <= 4 sigma = {:.1e})",
            (freq - q).abs(),
            SIGMAS * sigma
        ),
    );

    // 11: byte-identical artifacts across two CLI runs
    let dir = tempfile::tempdir().unwrap();
    let configs = [
        ("cospectral", "[graph]\nfamily = free(2)\nradius = 8\n[cospectral]\ntarget = cluster\np = 0.5\nsamples = 50\n"),
        ("scan-exponents", "[graph]\nfamily = regular-tree(4)\n[scan]\nn_max = 6\nsamples = 50\np_grid = 0,0.5,0.9,1\nxi_p = 0.5\n"),
        ("percolate", "[graph]\nfamily = free-abelian(2)\nradius = 10\n[percolation]\np = 0.5\n"),
        ("two-three", "[two-three]\ninstances = 3\npoints = 15\n"),
        ("walk-growth", "[graph]\nvertices = 60\n[walk-growth]\ngraphs = 3\nn_max = 50\n"),
        ("walk", "[graph]\nfamily = free(2)\nradius = 6\n[walk]\nsamples = 500\n"),
        ("gen-graph", "[graph]\nfamily = free(2)\nsubgroup = cyclic(ab)\nradius = 5\n"),
    ];
    let bin = env!("CARGO_BIN_EXE_cospectra");
    let mut identical = true;
    let mut compared = 0usize;
    for (cmd, text) in configs {
        let cfg_path = dir.path().join(format!("{cmd}.cfg"));
        std::fs::write(&cfg_path, text).unwrap();
        let mut outs = Vec::new();
        for run in 0..2 {
            let o = dir.path().join(format!("{cmd}-{run}"));
            let status = Command::new(bin)
                .args([cmd, "--config", cfg_path.to_str().unwrap(), "--seed", "11", "--out", o.to_str().unwrap()])
                .output()
                .unwrap();
            identical &= status.status.success();
            outs.push(o);
        }
        for entry in std::fs::read_dir(&outs[0]).unwrap() {
            let name = entry.unwrap().file_name();
            let name = name.to_str().unwrap().to_string();
            // the run record names its own output directory
            if name == "manifest.txt" || name == "config.txt" {
                continue;
            }
            let a = std::fs::read(outs[0].join(&name)).unwrap();
            let b = std::fs::read(Path::new(&outs[1]).join(&name)).unwrap_or_default();
            identical &= a == b;
            compared += 1;
        }
    }
    out.record(
        11,
        identical,
        format!("{compared} artifacts from 7 subcommands compared across two runs"),
    );

    println!("\n{}", out.lines.join("\n"));
    assert!(out.failed.is_empty(), "failed criteria: {:?}", out.failed);
}

//! Exit criteria. Each check prints one PASS/FAIL line; the process fails if
//! any check fails. Dataset-backed checks read `$MOGC_DATA_DIR` (default
//! `data/` at the workspace root):
//!
//! * `polbooks.gml`, `football.gml`, `polblogs.gml` with the class in `value`
//! * `cora.edges` and `cora.labels` (`node label` per line)

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use common::*;
use mogc::experiment::{
    alpha_sweep_on, default_alpha_grid, prepare, run_baseline_motif_sc, run_baseline_sc, run_mogc_on, ExperimentConfig,
    GraphFormat,
};
use mogc::motif::{builtin_motif, motif_adjacency, CATALOG};
use mogc::solver::{
    build_lambda_problem_with, fuse_adjacency, mogc_solve, solve_lambda_with, solve_u, LambdaOptions, MOGCConfig,
    MotifBundle, OrthoConstraints, SolverState,
};

type Outcome = Result<String, String>;

fn dataset(file: &str) -> Result<PathBuf, String> {
    let p = data_dir().join(file);
    if p.exists() {
        Ok(p)
    } else {
        Err(format!("dataset missing: {}", p.display()))
    }
}

fn gml_config(file: &str, motifs: &[&str], k: usize) -> Result<ExperimentConfig, String> {
    let mut cfg = ExperimentConfig::new(dataset(file)?, GraphFormat::Gml, motifs, k);
    cfg.trials = 20;
    cfg.alphas = default_alpha_grid();
    Ok(cfg)
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn check_state(state: &SolverState, bundle: &MotifBundle) -> Result<(), String> {
    let inc = state.max_objective_increase();
    if inc > 1e-8 {
        return Err(format!("objective increased by {inc:e}"));
    }
    if let Some(d) = state.diagnostics.iter().find(|d| d.trace_identity_gap > 1e-10) {
        return Err(format!("trace identity gap {:e}", d.trace_identity_gap));
    }
    let feas = state.lambda.feasibility_violation(bundle);
    if feas > 1e-8 {
        return Err(format!("weights infeasible by {feas:e}"));
    }
    Ok(())
}

fn motif_oracle() -> Outcome {
    let start = Instant::now();
    let mut graphs = 0;
    for seed in 0..200u64 {
        let n = 4 + (seed % 9) as usize;
        let p = [0.2, 0.4, 0.6][(seed / 9 % 3) as usize];
        let g = random_graph(n, p, 1000 + seed);
        for name in CATALOG {
            let spec = builtin_motif(name).unwrap();
            let fast = motif_adjacency(&g, &spec).map_err(|e| e.to_string())?;
            if fast.matrix != brute_force_motif(&g, &spec) {
                return Err(format!("motif {name} differs on graph seed {seed} (n={n}, p={p})"));
            }
        }
        graphs += 1;
    }
    let t = start.elapsed();
    if t > Duration::from_secs(60) {
        return Err(format!("took {t:.1?}"));
    }
    Ok(format!("{graphs} graphs x {} motifs exact in {t:.2?}", CATALOG.len()))
}

fn lambda_oracle() -> Outcome {
    let start = Instant::now();
    let mut done = 0;
    let mut clipped = 0;
    let mut worst_gap: f64 = 0.0;
    let mut worst_feas: f64 = 0.0;
    let mut seed = 0u64;
    while done < 50 {
        seed += 1;
        let n = 6 + (seed % 5) as usize;
        let m = 2 + (seed % 2) as usize;
        let k = 2 + (seed / 2 % 2) as usize;
        let alpha = [0.5, 1.0, 5.0][(seed % 3) as usize];
        let names: &[&str] = if m == 2 { &["edge", "m3_3"] } else { &["edge", "m3_3", "m3_2"] };
        let g = random_graph(n, 0.6, 5000 + seed);
        let b = bundle(&g, names);
        if b.covered_nodes().len() != n || g.num_edges() < k + 1 {
            continue;
        }
        let lam = random_weights(&b, seed);
        let Ok((u, _)) = solve_u(&fuse_adjacency(&b, &lam).unwrap(), k, 1e-8) else { continue };
        let prob = build_lambda_problem_with(&b, &u, OrthoConstraints::Full).unwrap();
        let sol = solve_lambda_with(&prob, alpha, &LambdaOptions::default(), Some(&lam)).map_err(|e| e.to_string())?;
        let oracle = qp_oracle(&prob, alpha);
        let gap = (sol.objective - prob.objective(&oracle, alpha)).abs();
        let feas = sol.equality_residual.max(sol.weights.feasibility_violation(&b));
        worst_gap = worst_gap.max(gap);
        worst_feas = worst_feas.max(feas);
        clipped += sol.clipped as usize;
        done += 1;
    }
    let t = start.elapsed();
    let detail = format!("50 instances, {clipped} with active bounds, max |f - f_oracle| {worst_gap:.2e}, max residual {worst_feas:.2e}, {t:.2?}");
    if worst_gap <= 1e-4 && worst_feas <= 1e-8 && t <= Duration::from_secs(120) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn toy_runs() -> Result<(usize, f64, usize), String> {
    let mut runs = 0;
    let mut worst: f64 = 0.0;
    let mut max_iter = 0;
    for toy in toy_suite() {
        let b = bundle(&toy.graph, toy.motifs);
        for alpha in [0.1, 1.0, 5.0] {
            let state = mogc_solve(&b, &MOGCConfig::new(alpha, toy.k)).map_err(|e| format!("{}: {e}", toy.name))?;
            check_state(&state, &b).map_err(|e| format!("{} alpha={alpha}: {e}", toy.name))?;
            if !state.converged {
                return Err(format!("{} alpha={alpha}: no convergence in {} iterations", toy.name, state.iterations));
            }
            worst = worst.max(state.max_objective_increase());
            max_iter = max_iter.max(state.iterations);
            runs += 1;
        }
    }
    Ok((runs, worst, max_iter))
}

fn monotone_convergence() -> Outcome {
    let (runs, worst, iters) = toy_runs()?;
    let toy = format!("toy suite: {runs} runs monotone (max increase {worst:.1e}), converged within {iters} iterations");
    let cfg = gml_config("polbooks.gml", &["edge", "m3_3", "m3_2"], 3).map_err(|e| format!("{toy}; polbooks: {e}"))?;
    let data = prepare(&cfg).map_err(|e| e.to_string())?;
    let bundle = MotifBundle::new(data.motifs.clone()).unwrap();
    let bundle = bundle.restrict(&bundle.covered_nodes()).unwrap();
    for &alpha in &cfg.alphas {
        let state = mogc_solve(&bundle, &cfg.solver_config(alpha)).map_err(|e| e.to_string())?;
        check_state(&state, &bundle).map_err(|e| format!("polbooks alpha={alpha}: {e}"))?;
        if !state.converged {
            return Err(format!("polbooks alpha={alpha}: not converged"));
        }
    }
    Ok(format!("{toy}; polbooks monotone and converged over the grid"))
}

fn trace_identity() -> Outcome {
    let mut iterations = 0;
    let mut worst: f64 = 0.0;
    let mut cases: Vec<(MotifBundle, usize)> = toy_suite().into_iter().map(|t| (bundle(&t.graph, t.motifs), t.k)).collect();
    for seed in 0..10 {
        let g = random_graph(14, 0.45, 77 + seed);
        let b = bundle(&g, &["edge", "m3_3", "m3_2"]);
        let keep = b.covered_nodes();
        cases.push((b.restrict(&keep).unwrap(), 3));
    }
    for (b, k) in &cases {
        for alpha in [0.05, 1.0] {
            let state = mogc_solve(b, &MOGCConfig::new(alpha, *k)).map_err(|e| e.to_string())?;
            for d in &state.diagnostics {
                worst = worst.max(d.trace_identity_gap);
                iterations += 1;
            }
        }
    }
    let detail = format!("{iterations} iterations over {} runs, max relative gap {worst:.1e}", cases.len() * 2);
    if worst <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn table_reproduction() -> Outcome {
    let mut lines = Vec::new();
    let mut failed = false;
    let cases: [(&str, &[&str], usize, f64, Option<f64>, u64); 3] = [
        ("polbooks.gml", &["edge", "m3_3", "m3_2"], 3, 0.8548, Some(0.5881), 120),
        ("football.gml", &["edge", "m3_2"], 12, 0.9858, None, 60),
        ("polblogs.gml", &["edge", "m3_2"], 2, 0.9110, None, 600),
    ];
    for (file, motifs, k, ari_target, nmi_target, limit) in cases {
        let cfg = match gml_config(file, motifs, k) {
            Ok(c) => c,
            Err(e) => {
                failed = true;
                lines.push(e);
                continue;
            }
        };
        let start = Instant::now();
        let data = prepare(&cfg).map_err(|e| e.to_string())?;
        let sweep = alpha_sweep_on(&cfg, &data).map_err(|e| e.to_string())?;
        let t = start.elapsed();
        let ari = sweep.best_ari();
        let nmi = sweep.best_nmi();
        let mut ok = within(ari.mean_ari, ari_target, 0.05) && t <= Duration::from_secs(limit);
        if let Some(nt) = nmi_target {
            ok &= within(nmi.mean_nmi, nt, 0.05);
        }
        failed |= !ok;
        lines.push(format!(
            "{file}: best ARI {:.4} (alpha {}), best NMI {:.4} (alpha {}), RI {:.4}, {t:.1?}{}",
            ari.mean_ari,
            ari.alpha,
            nmi.mean_nmi,
            nmi.alpha,
            ari.mean_ri,
            if ok { "" } else { " [out of tolerance]" }
        ));
    }
    if failed {
        Err(lines.join("; "))
    } else {
        Ok(lines.join("; "))
    }
}

fn baselines() -> Outcome {
    let mut cfg = gml_config("football.gml", &["edge"], 12)?;
    let sc = run_baseline_sc(&cfg).map_err(|e| e.to_string())?;
    cfg.motifs = vec!["m3_3".into()];
    let msc = run_baseline_motif_sc(&cfg).map_err(|e| e.to_string())?;
    let detail = format!(
        "football SC NMI {:.4}; Motif_SC(m3_3) ARI {:.4} ({} isolated)",
        sc.nmi.mean, msc.ari.mean, msc.excluded_nodes
    );
    if within(sc.nmi.mean, 0.9242, 0.05) && within(msc.ari.mean, 0.8967, 0.07) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn weight_analysis() -> Outcome {
    let cfg = gml_config("polbooks.gml", &["edge", "m3_3", "m3_2"], 3)?;
    let data = prepare(&cfg).map_err(|e| e.to_string())?;
    let sweep = alpha_sweep_on(&cfg, &data).map_err(|e| e.to_string())?;
    let run = run_mogc_on(&cfg, &data, sweep.best_ari_alpha).map_err(|e| e.to_string())?;
    let means = run.report.lambda_column_means.clone().unwrap();
    let target = [0.1784, 0.2532, 0.5684];
    let close = means.iter().zip(target).all(|(m, t)| within(*m, t, 0.10));
    let tri = &data.motifs[1];
    let mut zero_ok = true;
    let mut isolated = 0;
    for (local, &node) in run.kept.iter().enumerate() {
        if !tri.mask[node] {
            isolated += 1;
            zero_ok &= run.state.lambda.get(local, 1) == 0.0;
        }
    }
    let detail = format!(
        "column means {:?} at alpha {}; {isolated} nodes isolated under m3_3, zero weight: {zero_ok}",
        means.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(),
        sweep.best_ari_alpha
    );
    if close && zero_ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn alpha_sensitivity() -> Outcome {
    let mut cfg = gml_config("polblogs.gml", &["edge", "m3_3", "m3_2"], 2)?;
    let grid = default_alpha_grid();
    cfg.alphas = grid.into_iter().filter(|&a| a <= 15.0).collect();
    let data = prepare(&cfg).map_err(|e| e.to_string())?;
    let sweep = alpha_sweep_on(&cfg, &data).map_err(|e| e.to_string())?;
    let best = sweep.best_nmi_alpha;
    let spread = |a: f64| sweep.rows.iter().find(|r| r.alpha == a).map(|r| r.lambda_spread).unwrap();
    let (lo, hi) = (spread(0.1), spread(15.0));
    let detail = format!("NMI peaks at alpha {best}; spread {lo:.4} at 0.1, {hi:.4} at 15");
    if (1.0..=5.0).contains(&best) && lo > hi {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn higher_order_motifs() -> Outcome {
    let (g, _) = sbm(&[25, 25, 25], 0.35, 0.05, 21);
    let mut runs = 0;
    for extra in ["m4_1", "m4_2", "m5_1", "m5_2", "m5_3"] {
        let b = bundle(&g, &["edge", extra]);
        let b = b.restrict(&b.covered_nodes()).unwrap();
        for alpha in [0.5, 2.0] {
            let state = mogc_solve(&b, &MOGCConfig::new(alpha, 3)).map_err(|e| format!("{extra}: {e}"))?;
            check_state(&state, &b).map_err(|e| format!("{extra} alpha={alpha}: {e}"))?;
            runs += 1;
        }
    }
    Ok(format!("{runs} runs with 4- and 5-node motifs crash-free with invariants holding"))
}

fn cora_smoke() -> Outcome {
    // synthetic graph of the same size for a timing reference
    let start = Instant::now();
    let (g, _) = sbm(&[387, 387, 387, 387, 387, 387, 386], 0.0105, 0.0004, 31);
    let b = bundle(&g, &["edge", "m3_3"]);
    let b = b.restrict(&b.covered_nodes()).unwrap();
    let state = mogc_solve(&b, &MOGCConfig::new(1.0, 7)).map_err(|e| e.to_string())?;
    check_state(&state, &b)?;
    let synthetic = format!("synthetic n={} m={} in {:.1?}", g.n(), g.num_edges(), start.elapsed());

    let edges = dataset("cora.edges").map_err(|e| format!("{synthetic}; {e}"))?;
    let labels = dataset("cora.labels").map_err(|e| format!("{synthetic}; {e}"))?;
    let mut cfg = ExperimentConfig::new(edges, GraphFormat::EdgeList, &["edge", "m3_3"], 7);
    cfg.labels = Some(labels);
    cfg.trials = 20;
    let start = Instant::now();
    let data = prepare(&cfg).map_err(|e| e.to_string())?;
    let run = run_mogc_on(&cfg, &data, 1.0).map_err(|e| e.to_string())?;
    let kept_bundle = MotifBundle::new(data.motifs.clone()).unwrap().restrict(&run.kept).unwrap();
    check_state(&run.state, &kept_bundle)?;
    let t = start.elapsed();
    let detail = format!("{synthetic}; Cora ARI {:.4} NMI {:.4} in {t:.1?}", run.report.ari.mean, run.report.nmi.mean);
    if t <= Duration::from_secs(900) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let checks: [(&str, &str, fn() -> Outcome); 10] = [
        ("1", "motif engine equals brute-force oracle", motif_oracle),
        ("2", "weight subproblem equals QP oracle", lambda_oracle),
        ("3", "monotone objective and convergence", monotone_convergence),
        ("4", "trace identity on every iteration", trace_identity),
        ("5", "table reproduction with 3-node motifs", table_reproduction),
        ("6", "baseline sanity on football", baselines),
        ("7", "node-level weight analysis on polbooks", weight_analysis),
        ("8", "alpha sensitivity shape on polblogs", alpha_sensitivity),
        ("9", "4- and 5-node motifs (ungated results)", higher_order_motifs),
        ("10", "Cora-scale smoke", cora_smoke),
    ];
    let mut failures = 0;
    for (id, name, check) in checks {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS  {name} ({t:.1?}): {detail}"),
            Err(detail) => {
                failures += 1;
                println!("criterion {id:>2} FAIL  {name} ({t:.1?}): {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", 10 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}

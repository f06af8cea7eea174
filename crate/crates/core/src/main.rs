use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mogc::experiment::{
    alpha_sweep, build_motifs, dump_weights, default_alpha_grid, parse_alpha_grid, run_experiment, Algorithm,
    ExperimentConfig, GraphFormat,
};
use mogc::graph_io::{load_edge_list, load_gml, load_labels, MotifCache};
use mogc::metrics::{adjusted_rand_index, nmi, rand_index};
use mogc::Error;

#[derive(Parser)]
#[command(name = "mogc", version, about = "Multi-order graph clustering with per-node motif weights")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build motif adjacency matrices and store them in the cache.
    BuildMotifs(GraphArgs),
    /// Cluster with MOGC or a baseline and write a JSON report.
    Cluster(RunArgs),
    /// Run a spectral baseline (`--algo sc` or `--algo motif_sc`).
    Baseline(RunArgs),
    /// Run MOGC over an alpha grid and write a CSV table.
    SweepAlpha(RunArgs),
    /// Write the final per-node motif weights as CSV.
    DumpWeights(RunArgs),
    /// Score a predicted `node label` file against the ground truth.
    Eval(EvalArgs),
}

#[derive(Args, Clone)]
struct GraphArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value = "edgelist", value_parser = ["edgelist", "gml"])]
    format: String,
    /// `node label` file (required for edge lists, overrides GML labels).
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, default_value = "value")]
    label_key: String,
    /// Read a third column of edge weights.
    #[arg(long)]
    weighted: bool,
    /// Comma-separated motif names or `pattern:<p>:<a-b,...>` specs.
    #[arg(long, default_value = "edge,m3_3,m3_2")]
    motifs: String,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value = "mogc", value_parser = ["mogc", "sc", "motif_sc"])]
    algo: String,
    #[arg(long, conflicts_with = "alpha_grid")]
    alpha: Option<f64>,
    /// `lo:hi:step`, or `default` for the standard 47-point grid.
    #[arg(long)]
    alpha_grid: Option<String>,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    #[arg(long, default_value_t = 10)]
    kmeans_restarts: usize,
    /// Scale embedding rows to unit length before k-means.
    #[arg(long)]
    row_normalize: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value = "edgelist", value_parser = ["edgelist", "gml"])]
    format: String,
    /// Ground truth; GML files may carry it in `--label-key` instead.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, default_value = "value")]
    label_key: String,
    #[arg(long)]
    pred: PathBuf,
}

fn to_config(a: &RunArgs, default_grid: bool) -> Result<ExperimentConfig, Error> {
    let g = &a.graph;
    let motifs: Vec<&str> = g.motifs.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    let mut cfg = ExperimentConfig::new(&g.graph, g.format.parse::<GraphFormat>()?, &motifs, a.k);
    cfg.labels = g.labels.clone();
    cfg.label_key = g.label_key.clone();
    cfg.weighted = g.weighted;
    cfg.cache_dir = g.cache_dir.clone();
    cfg.algorithm = a.algo.parse::<Algorithm>()?;
    cfg.alphas = match (&a.alpha, &a.alpha_grid) {
        (Some(x), _) => vec![*x],
        (None, Some(s)) if s == "default" => default_alpha_grid(),
        (None, Some(s)) => parse_alpha_grid(s)?,
        (None, None) if default_grid => default_alpha_grid(),
        (None, None) => vec![1.0],
    };
    cfg.trials = a.trials;
    cfg.seed = a.seed;
    cfg.tol = a.tol;
    cfg.max_iter = a.max_iter;
    cfg.kmeans_restarts = a.kmeans_restarts;
    cfg.row_normalize = a.row_normalize;
    cfg.out = a.out.clone();
    cfg.validate()?;
    Ok(cfg)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 1,
        Error::NotConverged(..) => 3,
        _ => 2,
    }
}

fn with_extension(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::BuildMotifs(g) => {
            let format: GraphFormat = g.format.parse()?;
            let graph = match format {
                GraphFormat::Gml => load_gml(&g.graph, &g.label_key)?.0,
                GraphFormat::EdgeList => load_edge_list(&g.graph, g.weighted)?,
            };
            let dir = g.cache_dir.clone().unwrap_or_else(|| PathBuf::from(".mogc-cache"));
            let cache = MotifCache::new(dir)?;
            let names: Vec<String> = g.motifs.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            let motifs = build_motifs(&graph, &names, Some(&cache))?;
            println!("nodes {} edges {} hash {}", graph.n(), graph.num_edges(), graph.content_hash());
            for m in &motifs {
                println!(
                    "{}: instances {} nonzeros {} isolated {}",
                    m.spec.name(),
                    m.instance_count,
                    m.matrix.nnz(),
                    m.isolated_count()
                );
            }
            println!("cache: {}", cache.dir().display());
            Ok(0)
        }
        Command::Cluster(a) | Command::Baseline(a) => {
            let cfg = to_config(&a, false)?;
            let report = run_experiment(&cfg)?;
            let json = report.to_json()?;
            match &cfg.out {
                Some(p) => {
                    report.write_json(p)?;
                    report.write_trials_csv(&with_extension(p, "trials.csv"))?;
                }
                None => println!("{json}"),
            }
            eprintln!(
                "{}: ARI {:.4}±{:.4} RI {:.4}±{:.4} NMI {:.4}±{:.4}{}",
                report.algorithm,
                report.ari.mean,
                report.ari.std,
                report.ri.mean,
                report.ri.std,
                report.nmi.mean,
                report.nmi.std,
                report.alpha.map(|a| format!(" (alpha {a})")).unwrap_or_default()
            );
            Ok(if report.converged { 0 } else { 3 })
        }
        Command::SweepAlpha(a) => {
            let cfg = to_config(&a, true)?;
            let sweep = alpha_sweep(&cfg)?;
            match &cfg.out {
                Some(p) => {
                    sweep.write_csv(p)?;
                    sweep.write_json(&with_extension(p, "json"))?;
                }
                None => {
                    for r in &sweep.rows {
                        println!(
                            "{}\t{:.4}\t{:.4}\t{:?}",
                            r.alpha, r.mean_ari, r.mean_nmi, r.lambda_column_means
                        );
                    }
                }
            }
            let best = sweep.best_ari();
            eprintln!(
                "best ARI {:.4} at alpha {}; best NMI {:.4} at alpha {}",
                best.mean_ari,
                best.alpha,
                sweep.best_nmi().mean_nmi,
                sweep.best_nmi_alpha
            );
            Ok(if sweep.rows.iter().all(|r| r.converged) { 0 } else { 3 })
        }
        Command::DumpWeights(a) => {
            let cfg = to_config(&a, false)?;
            let table = dump_weights(&cfg)?;
            let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("weights.csv"));
            table.write_csv(&out)?;
            eprintln!("column means {:?} -> {}", table.column_means(), out.display());
            Ok(0)
        }
        Command::Eval(e) => {
            let format: GraphFormat = e.format.parse()?;
            let (graph, truth) = match (format, &e.labels) {
                (GraphFormat::Gml, None) => load_gml(&e.graph, &e.label_key)?,
                (GraphFormat::Gml, Some(l)) => {
                    let g = load_gml(&e.graph, &e.label_key)?.0;
                    let t = load_labels(l, &g)?;
                    (g, t)
                }
                (GraphFormat::EdgeList, Some(l)) => {
                    let g = load_edge_list(&e.graph, false)?;
                    let t = load_labels(l, &g)?;
                    (g, t)
                }
                (GraphFormat::EdgeList, None) => {
                    return Err(Error::Config("edge-list graphs need --labels".into()));
                }
            };
            let pred = load_labels(&e.pred, &graph)?;
            println!(
                "ARI {:.6}\nRI {:.6}\nNMI {:.6}",
                adjusted_rand_index(&truth, &pred)?,
                rand_index(&truth, &pred)?,
                nmi(&truth, &pred)?
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

//! Command-line front-end. One-shot subcommands cover graph generation,
//! simulation, fitting, forecasting, evaluation, sparsification, residual
//! diagnostics and the named replication experiments; every output file is
//! accompanied by a manifest recording resolved parameters, the seed, the
//! RNG and input digests, so reruns with the same arguments are
//! byte-identical.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::baselines::{fit_ar_per_edge, fit_var};
use crate::diagnostics::residual_report;
use crate::error::{Error, Result};
use crate::experiments::{
    coverage_experiment, misspecification_suite, CoverageOutcome, Misspecification,
};
use crate::gnar::{fit_gnar_edge, AlphaMode, GnarCoefficients, GnarEdgeSpec};
use crate::graph::DirectedGraph;
use crate::io::{
    load_graph, load_model, load_panel, plot_document, regime_manifest, save_graph, save_model,
    save_panel, write_acf_csv, write_forecast, write_leadingness, write_normality_csv,
    write_parameter_summaries, write_qq_csv, write_replication_rows, write_residual_summary,
    ModelDocument, RunManifest,
};
use crate::leadlag::{ranked_labels, sparsify_top_k};
use crate::panel::{preprocess, EdgePanel};
use crate::simulate::{
    gen_er_m, gen_er_p, gen_rdp, gen_sbm, regime, simulate_gnar_edge, standard_recipe, GraphModel,
    InnovationModel, SimulationRegime,
};

#[derive(Parser)]
#[command(name = "gnar-edge", version, about = "Network autoregression for edge time series")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random graph and write it as an edge-list CSV.
    GraphGen(GraphGenArgs),
    /// Simulate an edge panel on an existing graph.
    Simulate(SimulateArgs),
    /// Fit a model to a panel and write a model document.
    Fit(FitArgs),
    /// One-step forecast from a fitted model document.
    Predict(PredictArgs),
    /// Compare fitted models by one-step RMSE on held-out columns.
    Evaluate(EvaluateArgs),
    /// Keep the top-k leading edges of a panel.
    Sparsify(SparsifyArgs),
    /// Residual diagnostics for a fitted model on a panel.
    Diagnose(DiagnoseArgs),
    /// Run a named replication experiment.
    Experiment(ExperimentArgs),
    /// Write the built-in regime manifest.
    Regimes(RegimesArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphModelArg {
    Er,
    Sbm,
    Rdp,
}

impl From<GraphModelArg> for GraphModel {
    fn from(m: GraphModelArg) -> GraphModel {
        match m {
            GraphModelArg::Er => GraphModel::Er,
            GraphModelArg::Sbm => GraphModel::Sbm,
            GraphModelArg::Rdp => GraphModel::Rdp,
        }
    }
}

#[derive(Args)]
struct GraphGenArgs {
    /// Random graph family.
    #[arg(long, value_enum)]
    model: GraphModelArg,
    /// Number of nodes.
    #[arg(long, default_value_t = 20)]
    nodes: usize,
    /// Exact edge count (Erdos-Renyi).
    #[arg(long, conflicts_with_all = ["density", "prob"])]
    edges: Option<usize>,
    /// Target density, converted to an exact edge count (Erdos-Renyi).
    #[arg(long, conflicts_with = "prob")]
    density: Option<f64>,
    /// Independent edge probability (Erdos-Renyi).
    #[arg(long)]
    prob: Option<f64>,
    /// Comma-separated block sizes (stochastic block model).
    #[arg(long)]
    block_sizes: Option<String>,
    /// Semicolon-separated rows of comma-separated block probabilities.
    #[arg(long)]
    probs: Option<String>,
    /// Radius parameter (random dot product).
    #[arg(long)]
    radius: Option<f64>,
    /// Allow self-loops.
    #[arg(long)]
    self_loops: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Edge-list CSV of the graph to simulate on.
    #[arg(long)]
    graph: PathBuf,
    /// Built-in regime supplying coefficients, innovation and length.
    #[arg(long, conflicts_with_all = ["lag", "stages", "alphas", "betas"])]
    regime: Option<String>,
    /// Maximum lag of a custom model.
    #[arg(long)]
    lag: Option<usize>,
    /// Comma-separated neighbor stages, one per lag.
    #[arg(long)]
    stages: Option<String>,
    /// Comma-separated alpha coefficients, one per lag.
    #[arg(long)]
    alphas: Option<String>,
    /// Semicolon-separated per-lag groups of comma-separated betas.
    #[arg(long)]
    betas: Option<String>,
    /// Override the panel length.
    #[arg(long)]
    t_len: Option<usize>,
    #[arg(long, default_value_t = 50)]
    burn_in: usize,
    /// Innovation family for custom models.
    #[arg(long, value_enum, default_value_t = InnovationArg::Gaussian)]
    innovation: InnovationArg,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 3.0)]
    df: f64,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Rescale Student-t draws to unit variance.
    #[arg(long)]
    rescale: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum InnovationArg {
    Gaussian,
    StudentT,
    TimeCorr,
    EdgeCorr,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum FamilyArg {
    Gnar,
    Ar,
    Var,
}

#[derive(Args)]
struct FitArgs {
    /// Optional edge-list CSV checked against the panel's own edge rows.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    panel: PathBuf,
    /// Model family to fit.
    #[arg(long, value_enum, default_value_t = FamilyArg::Gnar)]
    family: FamilyArg,
    #[arg(long)]
    lag: usize,
    /// Comma-separated neighbor stages, one per lag (network model only).
    #[arg(long)]
    stages: Option<String>,
    /// Edge-specific own-lag coefficients instead of global ones.
    #[arg(long)]
    edge_alpha: bool,
    #[arg(long)]
    intercept: bool,
    /// Difference and scale the panel first, embedding the scaling record.
    #[arg(long)]
    preprocess: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Fitted model document.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    panel: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Comma-separated list of fitted model documents.
    #[arg(long, value_delimiter = ',')]
    models: Vec<PathBuf>,
    #[arg(long)]
    panel: PathBuf,
    /// Number of trailing columns held out for one-step evaluation.
    #[arg(long, default_value_t = 1)]
    holdout: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SparsifyArgs {
    /// Optional edge-list CSV checked against the panel's own edge rows.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    panel: PathBuf,
    #[arg(long)]
    top_k: usize,
    #[arg(long)]
    out_graph: PathBuf,
    #[arg(long)]
    out_panel: PathBuf,
    /// Optional leadingness ranking CSV.
    #[arg(long)]
    out_scores: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    panel: PathBuf,
    /// Largest autocorrelation lag in the report.
    #[arg(long, default_value_t = 20)]
    max_lag: usize,
    /// Report directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// regime1..regime5, large1, large2, misspec-heavy-tail,
    /// misspec-corr-innov or misspec-rewire.
    #[arg(long)]
    name: String,
    /// Override the regime's replication count.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Swap the regime's graph model (moderate regimes).
    #[arg(long, value_enum)]
    graph_model: Option<GraphModelArg>,
    /// Base regime for the misspecification suites.
    #[arg(long, default_value = "regime1")]
    regime: String,
    /// Worker threads for replications; defaults to GNAR_EDGE_JOBS or all cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RegimesArgs {
    /// Manifest path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}

fn parse_usize_list(text: &str, name: &'static str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| invalid(name, format!("bad entry '{s}'"))))
        .collect()
}

fn parse_f64_list(text: &str, name: &'static str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| invalid(name, format!("bad entry '{s}'"))))
        .collect()
}

/// Semicolon-separated groups of comma-separated numbers; an empty group
/// stands for a lag with no neighbor terms.
fn parse_beta_groups(text: &str) -> Result<Vec<Vec<f64>>> {
    text.split(';')
        .map(|group| {
            let group = group.trim();
            if group.is_empty() {
                Ok(Vec::new())
            } else {
                parse_f64_list(group, "betas")
            }
        })
        .collect()
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn check_graph_matches(graph: &DirectedGraph, panel: &EdgePanel) -> Result<()> {
    let from_panel = panel.graph().as_ref();
    if graph.node_count() != from_panel.node_count() {
        return Err(Error::NodeCountMismatch(graph.node_count(), from_panel.node_count()));
    }
    if graph.edges() != from_panel.edges() {
        return Err(Error::PanelShapeMismatch { rows: from_panel.edge_count(), k: graph.edge_count() });
    }
    Ok(())
}

fn run_graph_gen(args: &GraphGenArgs) -> Result<()> {
    let n = args.nodes;
    let graph = match args.model {
        GraphModelArg::Er => {
            let slots = if args.self_loops { n * n } else { n * (n - 1) };
            if let Some(p) = args.prob {
                gen_er_p(n, p, args.self_loops, args.seed)?
            } else {
                let m = match (args.edges, args.density) {
                    (Some(m), _) => m,
                    (None, Some(d)) => (d * slots as f64).round() as usize,
                    (None, None) => return Err(invalid("edges", "er needs --edges, --density or --prob")),
                };
                gen_er_m(n, m, args.self_loops, args.seed)?
            }
        }
        GraphModelArg::Sbm => {
            let sizes = args
                .block_sizes
                .as_deref()
                .ok_or_else(|| invalid("block_sizes", "sbm needs --block-sizes"))?;
            let probs = args.probs.as_deref().ok_or_else(|| invalid("probs", "sbm needs --probs"))?;
            let sizes = parse_usize_list(sizes, "block_sizes")?;
            let probs: Vec<Vec<f64>> = probs
                .split(';')
                .map(|row| parse_f64_list(row, "probs"))
                .collect::<Result<_>>()?;
            gen_sbm(&sizes, &probs, args.self_loops, args.seed)?
        }
        GraphModelArg::Rdp => {
            let radius = args.radius.ok_or_else(|| invalid("radius", "rdp needs --radius"))?;
            gen_rdp(n, radius, args.seed)?
        }
    };
    save_graph(&graph, &args.out)?;
    let mut m = RunManifest::new("graph-gen");
    m.seed = Some(args.seed);
    m.set("model", match args.model {
        GraphModelArg::Er => "er",
        GraphModelArg::Sbm => "sbm",
        GraphModelArg::Rdp => "rdp",
    });
    m.set("nodes", n);
    m.set("edges", graph.edge_count());
    m.set("self_loops", args.self_loops);
    m.set("out", args.out.display());
    m.save(&manifest_path(&args.out))
}

fn custom_regime(args: &SimulateArgs) -> Result<(GnarEdgeSpec, GnarCoefficients, InnovationModel, usize)> {
    let lag = args.lag.ok_or_else(|| invalid("lag", "custom simulation needs --lag"))?;
    let stages = args
        .stages
        .as_deref()
        .ok_or_else(|| invalid("stages", "custom simulation needs --stages"))?;
    let alphas = args
        .alphas
        .as_deref()
        .ok_or_else(|| invalid("alphas", "custom simulation needs --alphas"))?;
    let betas = args
        .betas
        .as_deref()
        .ok_or_else(|| invalid("betas", "custom simulation needs --betas"))?;
    let spec = GnarEdgeSpec::global(lag, parse_usize_list(stages, "stages")?)?;
    let coeffs =
        GnarCoefficients::global(parse_f64_list(alphas, "alphas")?, parse_beta_groups(betas)?);
    let innovation = match args.innovation {
        InnovationArg::Gaussian => InnovationModel::Gaussian { sigma: args.sigma },
        InnovationArg::StudentT => InnovationModel::StudentT { df: args.df, rescale: args.rescale },
        InnovationArg::TimeCorr => InnovationModel::TimeEquicorrelated { rho: args.rho, sigma: args.sigma },
        InnovationArg::EdgeCorr => InnovationModel::EdgeEquicorrelated { rho: args.rho, sigma: args.sigma },
    };
    Ok((spec, coeffs, innovation, args.t_len.unwrap_or(200)))
}

fn run_simulate(args: &SimulateArgs) -> Result<()> {
    let graph = Arc::new(load_graph(&args.graph)?);
    let (spec, coeffs, innovation, t_len, regime_name) = match &args.regime {
        Some(name) => {
            let r = regime(name)?;
            let t = args.t_len.unwrap_or(r.t_len);
            (r.spec, r.coefficients, r.innovation, t, Some(r.name))
        }
        None => {
            let (spec, coeffs, innovation, t) = custom_regime(args)?;
            (spec, coeffs, innovation, t, None)
        }
    };
    let panel = simulate_gnar_edge(&graph, &spec, &coeffs, t_len, &innovation, args.burn_in, args.seed)?;
    save_panel(&panel, &args.out)?;
    let mut m = RunManifest::new("simulate");
    m.seed = Some(args.seed);
    m.add_input(&args.graph)?;
    if let Some(name) = regime_name {
        m.set("regime", name);
    } else {
        m.set("spec", serde_json::to_string(&spec)?);
        m.set("coefficients", serde_json::to_string(&coeffs)?);
        m.set("innovation", serde_json::to_string(&innovation)?);
    }
    m.set("t_len", t_len);
    m.set("burn_in", args.burn_in);
    m.set("out", args.out.display());
    m.save(&manifest_path(&args.out))
}

fn run_fit(args: &FitArgs) -> Result<()> {
    let raw = load_panel(&args.panel)?;
    if let Some(path) = &args.graph {
        check_graph_matches(&load_graph(path)?, &raw)?;
    }
    let (panel, scaling) = if args.preprocess {
        let (scaled, record) = preprocess(&raw)?;
        (scaled, Some(record))
    } else {
        (raw, None)
    };
    let doc = match args.family {
        FamilyArg::Gnar => {
            let stages = args
                .stages
                .as_deref()
                .ok_or_else(|| invalid("stages", "the network model needs --stages"))?;
            let spec = GnarEdgeSpec {
                max_lag: args.lag,
                neighbor_stages: parse_usize_list(stages, "stages")?,
                alpha_mode: if args.edge_alpha { AlphaMode::EdgeSpecific } else { AlphaMode::Global },
                intercept: args.intercept,
            };
            ModelDocument::from_gnar(&fit_gnar_edge(&panel, &spec)?, scaling)
        }
        FamilyArg::Ar => {
            if args.stages.is_some() {
                return Err(invalid("stages", "--stages only applies to the network model"));
            }
            ModelDocument::from_ar(&fit_ar_per_edge(&panel, args.lag, args.intercept)?, scaling)
        }
        FamilyArg::Var => {
            if args.stages.is_some() {
                return Err(invalid("stages", "--stages only applies to the network model"));
            }
            ModelDocument::from_var(&fit_var(&panel, args.lag, args.intercept)?, scaling)
        }
    };
    save_model(&doc, &args.out)?;
    let mut m = RunManifest::new("fit");
    m.add_input(&args.panel)?;
    if let Some(path) = &args.graph {
        m.add_input(path)?;
    }
    m.set("family", match args.family {
        FamilyArg::Gnar => "gnar",
        FamilyArg::Ar => "ar",
        FamilyArg::Var => "var",
    });
    m.set("lag", args.lag);
    if let Some(stages) = &args.stages {
        m.set("stages", stages);
    }
    m.set("edge_alpha", args.edge_alpha);
    m.set("intercept", args.intercept);
    m.set("preprocess", args.preprocess);
    m.set("out", args.out.display());
    m.save(&manifest_path(&args.out))
}

/// One-step forecast honoring an embedded scaling record: the panel is
/// treated as raw levels, rescaled with the stored statistics, and the
/// scaled forecast is mapped back to the level of the last column.
fn forecast_raw(doc: &ModelDocument, panel: &EdgePanel) -> Result<Vec<f64>> {
    match doc.scaling() {
        Some(record) => {
            let scaled = record.rescale(panel)?;
            let f = doc.forecast_one_step(&scaled)?;
            let last: Vec<f64> = panel.column(panel.t_len() - 1).to_vec();
            record.to_raw_forecast(&f, &last)
        }
        None => doc.forecast_one_step(panel),
    }
}

fn run_predict(args: &PredictArgs) -> Result<()> {
    let doc = load_model(&args.model)?;
    let panel = load_panel(&args.panel)?;
    let forecast = forecast_raw(&doc, &panel)?;
    fs::write(&args.out, write_forecast(panel.graph(), &forecast))?;
    let mut m = RunManifest::new("predict");
    m.add_input(&args.model)?;
    m.add_input(&args.panel)?;
    m.set("out", args.out.display());
    m.save(&manifest_path(&args.out))
}

fn run_evaluate(args: &EvaluateArgs) -> Result<()> {
    if args.models.is_empty() {
        return Err(invalid("models", "need at least one model document"));
    }
    if args.holdout == 0 {
        return Err(invalid("holdout", "must be at least 1"));
    }
    let panel = load_panel(&args.panel)?;
    let t = panel.t_len();
    if t <= args.holdout {
        return Err(Error::SeriesTooShort { t, min: args.holdout + 1 });
    }
    let mut out = String::from("model,path,rmse\n");
    let mut m = RunManifest::new("evaluate");
    m.add_input(&args.panel)?;
    for path in &args.models {
        let doc = load_model(path)?;
        let mut sq = 0.0;
        let mut count = 0usize;
        for i in 0..args.holdout {
            let split = t - args.holdout + i;
            let prefix = panel.truncate(split)?;
            let forecast = forecast_raw(&doc, &prefix)?;
            for (e, f) in forecast.iter().enumerate() {
                let err = f - panel.values()[(e, split)];
                sq += err * err;
                count += 1;
            }
        }
        let rmse = (sq / count as f64).sqrt();
        use std::fmt::Write as _;
        let _ = writeln!(out, "{},{},{rmse}", doc.model_name(), path.display());
        m.add_input(path)?;
    }
    fs::write(&args.out, out)?;
    m.set("holdout", args.holdout);
    m.set("out", args.out.display());
    m.save(&manifest_path(&args.out))
}

fn run_sparsify(args: &SparsifyArgs) -> Result<()> {
    let panel = load_panel(&args.panel)?;
    if let Some(path) = &args.graph {
        check_graph_matches(&load_graph(path)?, &panel)?;
    }
    let outcome = sparsify_top_k(&panel, args.top_k)?;
    save_graph(&outcome.graph, &args.out_graph)?;
    save_panel(&outcome.panel, &args.out_panel)?;
    if let Some(path) = &args.out_scores {
        let ranked = ranked_labels(&outcome.scores);
        fs::write(path, write_leadingness(panel.graph(), &outcome.scores, &ranked))?;
    }
    let mut m = RunManifest::new("sparsify");
    m.add_input(&args.panel)?;
    if let Some(path) = &args.graph {
        m.add_input(path)?;
    }
    m.set("top_k", args.top_k);
    m.set("out_graph", args.out_graph.display());
    m.set("out_panel", args.out_panel.display());
    m.save(&manifest_path(&args.out_panel))
}

fn run_diagnose(args: &DiagnoseArgs) -> Result<()> {
    let doc = load_model(&args.model)?;
    let panel = load_panel(&args.panel)?;
    let residuals = doc.residual_panel(&panel)?;
    let max_lag = args.max_lag.min(residuals.ncols().saturating_sub(1));
    let report = residual_report(&residuals, max_lag)?;
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("summary.csv"), write_residual_summary(&report, doc.max_lag()))?;
    fs::write(args.out.join("acf.csv"), write_acf_csv(&report))?;
    fs::write(args.out.join("qq.csv"), write_qq_csv(&report))?;
    fs::write(args.out.join("normality.csv"), write_normality_csv(&report))?;
    let mut plot = serde_json::to_string_pretty(&plot_document(&report))?;
    plot.push('\n');
    fs::write(args.out.join("plot.json"), plot)?;
    let mut m = RunManifest::new("diagnose");
    m.add_input(&args.model)?;
    m.add_input(&args.panel)?;
    m.set("max_lag", max_lag);
    m.set("out", args.out.display());
    m.save(&args.out.join("manifest.json"))
}

fn resolve_jobs(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| std::env::var("GNAR_EDGE_JOBS").ok().and_then(|v| v.parse().ok()))
}

fn with_jobs<T: Send>(jobs: Option<usize>, work: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(work()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| invalid("jobs", e.to_string()))?;
            Ok(pool.install(work))
        }
    }
}

fn apply_graph_model(regime: &mut SimulationRegime, model: Option<GraphModelArg>) -> Result<()> {
    let Some(model) = model else { return Ok(()) };
    if regime.name.starts_with("large") {
        if !matches!(model, GraphModelArg::Er) {
            return Err(invalid("graph_model", "large regimes only support er"));
        }
        return Ok(());
    }
    regime.graph = standard_recipe(model.into());
    Ok(())
}

fn write_coverage_outputs(dir: &Path, label: &str, outcome: &CoverageOutcome) -> Result<()> {
    fs::write(dir.join("replications.csv"), write_replication_rows(label, &outcome.rows))?;
    fs::write(dir.join("summary.csv"), write_parameter_summaries(label, &outcome.summary))?;
    if !outcome.failures.is_empty() {
        let mut text = String::from("replication,error\n");
        use std::fmt::Write as _;
        for (rep, reason) in &outcome.failures {
            let _ = writeln!(text, "{rep},{reason}");
        }
        fs::write(dir.join("failures.csv"), text)?;
    }
    Ok(())
}

fn run_experiment(args: &ExperimentArgs) -> Result<()> {
    fs::create_dir_all(&args.out)?;
    let jobs = resolve_jobs(args.jobs);
    let mut m = RunManifest::new("experiment");
    m.seed = Some(args.seed);
    m.set("name", &args.name);
    m.set("out", args.out.display());

    if let Some(kind_name) = args.name.strip_prefix("misspec-") {
        let mut base = regime(&args.regime)?;
        if let Some(reps) = args.reps {
            base.replications = reps;
        }
        apply_graph_model(&mut base, args.graph_model)?;
        m.set("regime", &base.name);
        m.set("reps", base.replications);
        let kinds: Vec<Misspecification> = match kind_name {
            "heavy-tail" => vec![Misspecification::HeavyTail { df: 3.0 }],
            "corr-innov" => vec![Misspecification::CorrInnov { rho: 0.5 }],
            "rewire" => [0.0, 0.05, 0.1, 0.15, 0.2]
                .iter()
                .map(|&p| Misspecification::Rewire { p })
                .collect(),
            other => return Err(Error::UnknownRegime(format!("misspec-{other}"))),
        };
        let outcomes = with_jobs(jobs, || {
            kinds
                .iter()
                .map(|kind| misspecification_suite(&base, *kind, args.seed))
                .collect::<Vec<_>>()
        })?;
        let mut replications = String::new();
        let mut summary = String::new();
        let mut extras = String::from("regime,kind,mean_prediction_rmse,mean_hamming\n");
        use std::fmt::Write as _;
        for outcome in &outcomes {
            let label = format!("{}+{}", outcome.regime, outcome.kind);
            let rows = write_replication_rows(&label, &outcome.rows);
            let sums = write_parameter_summaries(&label, &outcome.summary);
            if replications.is_empty() {
                replications = rows;
                summary = sums;
            } else {
                replications.push_str(rows.splitn(2, '\n').nth(1).unwrap_or(""));
                summary.push_str(sums.splitn(2, '\n').nth(1).unwrap_or(""));
            }
            let mean_pred = if outcome.prediction_rmse.is_empty() {
                f64::NAN
            } else {
                outcome.prediction_rmse.iter().sum::<f64>() / outcome.prediction_rmse.len() as f64
            };
            let _ = writeln!(
                extras,
                "{},{},{mean_pred},{}",
                outcome.regime,
                outcome.kind,
                outcome.mean_hamming.map_or("".to_string(), |h| h.to_string())
            );
        }
        fs::write(args.out.join("replications.csv"), replications)?;
        fs::write(args.out.join("summary.csv"), summary)?;
        fs::write(args.out.join("misspec.csv"), extras)?;
    } else {
        let mut r = regime(&args.name)?;
        if let Some(reps) = args.reps {
            r.replications = reps;
        }
        apply_graph_model(&mut r, args.graph_model)?;
        m.set("reps", r.replications);
        m.set("graph", serde_json::to_string(&r.graph)?);
        let outcome = with_jobs(jobs, || coverage_experiment(&r, args.seed))?;
        write_coverage_outputs(&args.out, &r.name, &outcome)?;
    }
    m.save(&args.out.join("manifest.json"))
}

fn run_regimes(args: &RegimesArgs) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&regime_manifest())?;
    text.push('\n');
    match &args.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Entry point used by the binary; errors bubble up for single-line
/// reporting on stderr.
pub fn run() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::GraphGen(args) => run_graph_gen(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Fit(args) => run_fit(args),
        Command::Predict(args) => run_predict(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::Sparsify(args) => run_sparsify(args),
        Command::Diagnose(args) => run_diagnose(args),
        Command::Experiment(args) => run_experiment(args),
        Command::Regimes(args) => run_regimes(args),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_parsers_handle_groups_and_errors() {
        assert_eq!(parse_usize_list("1, 2,3", "stages").unwrap(), vec![1, 2, 3]);
        assert!(parse_usize_list("1,x", "stages").is_err());
        assert_eq!(
            parse_beta_groups("0.3,0.4;;-0.2").unwrap(),
            vec![vec![0.3, 0.4], vec![], vec![-0.2]]
        );
        assert_eq!(parse_f64_list("0.5", "alphas").unwrap(), vec![0.5]);
    }

    #[test]
    fn manifest_paths_sit_next_to_outputs() {
        assert_eq!(
            manifest_path(Path::new("out/panel.csv")),
            Path::new("out/panel.csv.manifest.json")
        );
    }

    #[test]
    fn cli_declares_all_subcommands() {
        use clap::CommandFactory;
        let cmd = Cli::command();
        let names: Vec<&str> = cmd.get_subcommands().map(|c| c.get_name()).collect();
        for expected in [
            "graph-gen",
            "simulate",
            "fit",
            "predict",
            "evaluate",
            "sparsify",
            "diagnose",
            "experiment",
            "regimes",
        ] {
            assert!(names.contains(&expected), "missing {expected}");
        }
        cmd.debug_assert();
    }
}

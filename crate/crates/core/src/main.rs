//! Command-line driver: condense a graph, run the evolving pipeline,
//! evaluate condensed artifacts, sweep theorem bounds, run selection
//! baselines, generate synthetic datasets, and roll ledgers into plot data.

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use gecc::clustering::{ClusterMode, SeedLaw};
use gecc::condense::{condense, CondensedGraph};
use gecc::config::{DataPaths, RunConfig};
use gecc::error::{Error, Result};
use gecc::eval::{coreset_baselines, downstream_accuracy, run_bound_sweep, BaselineMethod};
use gecc::evolve::{run_stream, EvolveInputs};
use gecc::features::FeatureMatrix;
use gecc::graph::StreamMode;
use gecc::io::{self, Dataset};
use gecc::propagation::{normalize, propagate};
use gecc::report::run_report;
use gecc::synth::{generate, SyntheticSpec};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "gecc",
    version,
    about = "Training-free graph condensation via propagated-feature class-wise clustering"
)]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CliClusterMode {
    Hard,
    Fuzzy,
}

impl From<CliClusterMode> for ClusterMode {
    fn from(m: CliClusterMode) -> Self {
        match m {
            CliClusterMode::Hard => ClusterMode::Hard,
            CliClusterMode::Fuzzy => ClusterMode::Fuzzy,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CliSeedLaw {
    Paper,
    Classic,
}

impl From<CliSeedLaw> for SeedLaw {
    fn from(l: CliSeedLaw) -> Self {
        match l {
            CliSeedLaw::Paper => SeedLaw::Paper,
            CliSeedLaw::Classic => SeedLaw::Classic,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CliBaselineMethod {
    Random,
    Kcenter,
    Herding,
}

impl From<CliBaselineMethod> for BaselineMethod {
    fn from(m: CliBaselineMethod) -> Self {
        match m {
            CliBaselineMethod::Random => BaselineMethod::Random,
            CliBaselineMethod::Kcenter => BaselineMethod::KCenter,
            CliBaselineMethod::Herding => BaselineMethod::Herding,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CliStreamMode {
    Transductive,
    Inductive,
}

impl From<CliStreamMode> for StreamMode {
    fn from(m: CliStreamMode) -> Self {
        match m {
            CliStreamMode::Transductive => StreamMode::Transductive,
            CliStreamMode::Inductive => StreamMode::Inductive,
        }
    }
}

/// Configuration sources shared by the dataset-consuming subcommands: a JSON
/// config file, then individual flag overrides on top.
#[derive(Args, Debug, Default)]
struct ConfigOpts {
    /// JSON run configuration; the flags below override its fields
    #[arg(long)]
    config: Option<PathBuf>,

    /// Dataset directory holding graph.edges, features.csv, labels.txt,
    /// splits.json, stream.json (overrides the individual path flags)
    #[arg(long)]
    data: Option<PathBuf>,

    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    splits: Option<PathBuf>,
    #[arg(long)]
    stream: Option<PathBuf>,

    /// Output directory for artifacts
    #[arg(long)]
    out_dir: Option<PathBuf>,

    /// Propagation depth K
    #[arg(long)]
    max_depth: Option<usize>,
    /// Comma-separated hop weights a_0..a_K (length K+1)
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    alphas: Option<Vec<f64>>,

    /// Condensed-to-training size ratio r in (0, 1]
    #[arg(short = 'r', long)]
    reduction_rate: Option<f64>,
    /// Clustering mode
    #[arg(long, value_enum)]
    mode: Option<CliClusterMode>,
    /// Fuzzy c-means exponent (1 = hard limit)
    #[arg(long)]
    fuzziness: Option<f64>,
    /// Independent restarts per class
    #[arg(long)]
    repeats: Option<usize>,
    /// Master seed for all RNG streams
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Weight of the cluster-size balance penalty
    #[arg(long)]
    balance_weight: Option<f64>,
    /// Seeding distance law for incremental k-means++
    #[arg(long, value_enum)]
    seed_law: Option<CliSeedLaw>,

    /// Ridge term for the downstream linear fit
    #[arg(long)]
    epsilon: Option<f64>,
}

impl ConfigOpts {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(dir) = &self.data {
            cfg.data = DataPaths::in_dir(dir);
        }
        if let Some(p) = &self.graph {
            cfg.data.graph = p.clone();
        }
        if let Some(p) = &self.features {
            cfg.data.features = p.clone();
        }
        if let Some(p) = &self.labels {
            cfg.data.labels = p.clone();
        }
        if let Some(p) = &self.splits {
            cfg.data.splits = p.clone();
        }
        if let Some(p) = &self.stream {
            cfg.data.stream = Some(p.clone());
        }
        if let Some(p) = &self.out_dir {
            cfg.out_dir = p.clone();
        }
        if let Some(k) = self.max_depth {
            cfg.propagation.max_depth = k;
        }
        if let Some(a) = &self.alphas {
            cfg.propagation.alphas = a.clone();
            // A bare --alphas list also fixes the depth unless overridden.
            if self.max_depth.is_none() {
                cfg.propagation.max_depth = a.len().saturating_sub(1);
            }
        }
        if let Some(r) = self.reduction_rate {
            cfg.clustering.reduction_rate = r;
        }
        if let Some(m) = self.mode {
            cfg.clustering.mode = m.into();
        }
        if let Some(f) = self.fuzziness {
            cfg.clustering.fuzziness = f;
        }
        if let Some(n) = self.repeats {
            cfg.clustering.repeats = n;
        }
        if let Some(s) = self.seed {
            cfg.clustering.seed = s;
        }
        if let Some(n) = self.max_iter {
            cfg.clustering.max_iter = n;
        }
        if let Some(t) = self.tol {
            cfg.clustering.tol = t;
        }
        if let Some(w) = self.balance_weight {
            cfg.clustering.balance_weight = w;
        }
        if let Some(l) = self.seed_law {
            cfg.clustering.seed_law = l.into();
        }
        if let Some(e) = self.epsilon {
            cfg.eval.epsilon = e;
        }
        for warning in cfg.validate()? {
            eprintln!("warning: {warning}");
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Commands {
    /// Condense one static graph into class-labeled centroid nodes
    Condense {
        #[command(flatten)]
        opts: ConfigOpts,
    },

    /// Run the batch-stream pipeline, one condensation per snapshot
    Evolve {
        #[command(flatten)]
        opts: ConfigOpts,

        /// Inherit prior centroids across steps (false = cold start each step)
        #[arg(long, action = ArgAction::Set, default_value_t = true)]
        warm_start: bool,
    },

    /// Evaluate a condensed artifact set with the closed-form linear model
    Eval {
        /// Directory holding condensed_features.csv / condensed_labels.txt /
        /// provenance.jsonl
        #[arg(long)]
        condensed: PathBuf,

        #[command(flatten)]
        opts: ConfigOpts,
    },

    /// Check one bound inequality on seeded random instances
    Bounds {
        /// Which bound to sweep
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        theorem: u8,

        #[arg(long, default_value_t = 1000)]
        instances: usize,

        #[arg(long, default_value_t = 0)]
        seed: u64,

        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },

    /// Condense by node selection instead of clustering
    Baseline {
        /// Selection strategy
        #[arg(long, value_enum)]
        method: CliBaselineMethod,

        #[command(flatten)]
        opts: ConfigOpts,
    },

    /// Generate a stochastic-block-model dataset with a batch stream
    Synth {
        /// JSON spec file; omitted fields take defaults
        #[arg(long)]
        spec: Option<PathBuf>,

        #[arg(long)]
        seed: Option<u64>,

        #[arg(long)]
        batches: Option<usize>,

        #[arg(long, value_enum)]
        mode: Option<CliStreamMode>,

        #[arg(long, default_value = "dataset")]
        out_dir: PathBuf,
    },

    /// Roll a run ledger into plot-data tables and a summary
    Report {
        /// Primary run ledger (ledger.csv)
        #[arg(long)]
        ledger: PathBuf,

        /// Cold-run ledger supplying the cold column of the iteration table
        #[arg(long)]
        cold_ledger: Option<PathBuf>,

        /// Per-step accuracy table (eval.csv)
        #[arg(long)]
        eval: Option<PathBuf>,

        /// Bound-check table (bounds.csv) to fold into the summary
        #[arg(long)]
        bounds: Option<PathBuf>,

        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
}

/// Applies the GECC_THREADS cap before any parallel work starts.
fn init_thread_pool() -> Result<()> {
    let Ok(raw) = std::env::var("GECC_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .map_err(|e| Error::Config(format!("GECC_THREADS={raw:?} is not a thread count: {e}")))?;
    if n == 0 {
        return Ok(()); // 0 = let the runtime decide
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("GECC_THREADS={n}: {e}")))
}

fn load_without_stream(cfg: &RunConfig) -> Result<Dataset> {
    io::load_dataset(
        &cfg.data.graph,
        &cfg.data.features,
        &cfg.data.labels,
        &cfg.data.splits,
        None,
    )
}

/// Propagated features of the full graph — the fixed evaluation
/// representation shared by every step and method.
fn propagated(ds: &Dataset, cfg: &RunConfig) -> Result<FeatureMatrix> {
    propagate(&normalize(&ds.graph), &ds.features, &cfg.propagation)
}

/// Fits on the condensed set and scores the full test split, when one exists.
fn test_accuracy(ds: &Dataset, cfg: &RunConfig, cg: &CondensedGraph) -> Result<Option<f64>> {
    if ds.labels.test_idx.is_empty() {
        return Ok(None);
    }
    let f = propagated(ds, cfg)?;
    downstream_accuracy(cg, &f, &ds.labels, &ds.labels.test_idx, cfg.eval.epsilon).map(Some)
}

fn cmd_condense(opts: &ConfigOpts) -> Result<()> {
    let cfg = opts.resolve()?;
    let ds = load_without_stream(&cfg)?;
    let started = Instant::now();
    let (cg, report) = condense(
        &ds.graph,
        &ds.features,
        &ds.labels,
        &cfg.propagation,
        &cfg.clustering,
    )?;
    let seconds = started.elapsed().as_secs_f64();

    cfg.echo(&cfg.out_dir)?;
    io::write_condensed(&cfg.out_dir, &cg)?;
    io::write_report_csv(&cfg.out_dir.join("report.csv"), &report)?;
    println!(
        "condensed {} training nodes into {} centroids (r = {}) in {seconds:.3}s",
        ds.labels.train_idx.len(),
        cg.size(),
        cfg.clustering.reduction_rate,
    );
    if let Some(acc) = test_accuracy(&ds, &cfg, &cg)? {
        io::write_eval_csv(&cfg.out_dir.join("eval.csv"), &[(1, acc)])?;
        println!("test accuracy: {acc:.4}");
    }
    println!("artifacts: {}", cfg.out_dir.display());
    Ok(())
}

fn cmd_evolve(opts: &ConfigOpts, warm_start: bool) -> Result<()> {
    let cfg = opts.resolve()?;
    let Some(stream_path) = cfg.data.stream.clone() else {
        return Err(Error::Config(
            "evolve needs a batch stream (--stream or --data)".into(),
        ));
    };
    let ds = io::load_dataset(
        &cfg.data.graph,
        &cfg.data.features,
        &cfg.data.labels,
        &cfg.data.splits,
        Some(&stream_path),
    )?;
    let stream = ds.stream.as_ref().ok_or_else(|| {
        Error::Config(format!("no batch stream at {}", stream_path.display()))
    })?;

    let inputs = EvolveInputs {
        graph: &ds.graph,
        features: &ds.features,
        labels: &ds.labels,
        stream,
    };
    let started = Instant::now();
    let (step_outputs, state) = run_stream(&inputs, &cfg.propagation, &cfg.clustering, warm_start)?;
    let seconds = started.elapsed().as_secs_f64();

    cfg.echo(&cfg.out_dir)?;
    io::write_ledger_csv(&cfg.out_dir.join("ledger.csv"), &state.ledger)?;
    for (i, cg) in step_outputs.iter().enumerate() {
        io::write_condensed(&cfg.out_dir.join(format!("step_{}", i + 1)), cg)?;
    }

    let mut eval_rows = Vec::new();
    if !ds.labels.test_idx.is_empty() {
        let f = propagated(&ds, &cfg)?;
        for (i, cg) in step_outputs.iter().enumerate() {
            let acc =
                downstream_accuracy(cg, &f, &ds.labels, &ds.labels.test_idx, cfg.eval.epsilon)?;
            eval_rows.push((i + 1, acc));
        }
        io::write_eval_csv(&cfg.out_dir.join("eval.csv"), &eval_rows)?;
    }

    println!(
        "{} steps ({}) in {seconds:.3}s; final condensed size {}",
        step_outputs.len(),
        if warm_start { "warm-start" } else { "cold-start" },
        step_outputs.last().map_or(0, CondensedGraph::size),
    );
    for (t, acc) in &eval_rows {
        println!("step {t}: accuracy {acc:.4}");
    }
    println!("artifacts: {}", cfg.out_dir.display());
    Ok(())
}

fn cmd_eval(condensed: &Path, opts: &ConfigOpts) -> Result<()> {
    let cfg = opts.resolve()?;
    let ds = load_without_stream(&cfg)?;
    let cg = io::read_condensed(condensed)?;
    if ds.labels.test_idx.is_empty() {
        return Err(Error::Config("dataset has an empty test split".into()));
    }
    let f = propagated(&ds, &cfg)?;
    let acc = downstream_accuracy(&cg, &f, &ds.labels, &ds.labels.test_idx, cfg.eval.epsilon)?;
    println!(
        "test accuracy of {} ({} centroids): {acc:.4}",
        condensed.display(),
        cg.size(),
    );
    Ok(())
}

fn cmd_bounds(theorem: u8, instances: usize, seed: u64, out_dir: &Path) -> Result<()> {
    let started = Instant::now();
    let report = run_bound_sweep(theorem as usize, instances, seed)?;
    let seconds = started.elapsed().as_secs_f64();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    io::write_bounds_csv(&out_dir.join("bounds.csv"), &report)?;
    io::write_bounds_skipped_csv(&out_dir.join("bounds_skipped.csv"), &report.skipped)?;
    println!(
        "theorem {theorem}: {} checked, {} skipped, {} violations in {seconds:.2}s",
        report.checks.len(),
        report.skipped.len(),
        report.violations(),
    );
    if report.violations() > 0 {
        return Err(Error::Internal(format!(
            "{} bound violations — see {}",
            report.violations(),
            out_dir.join("bounds.csv").display()
        )));
    }
    Ok(())
}

fn cmd_baseline(method: BaselineMethod, opts: &ConfigOpts) -> Result<()> {
    let cfg = opts.resolve()?;
    let ds = load_without_stream(&cfg)?;
    let f = propagated(&ds, &cfg)?;
    let cg = coreset_baselines(
        &f,
        &ds.labels,
        cfg.clustering.reduction_rate,
        method,
        cfg.clustering.seed,
    )?;
    cfg.echo(&cfg.out_dir)?;
    io::write_condensed(&cfg.out_dir, &cg)?;
    println!(
        "{} selected {} of {} training nodes (r = {})",
        method.as_str(),
        cg.size(),
        ds.labels.train_idx.len(),
        cfg.clustering.reduction_rate,
    );
    if !ds.labels.test_idx.is_empty() {
        let acc =
            downstream_accuracy(&cg, &f, &ds.labels, &ds.labels.test_idx, cfg.eval.epsilon)?;
        io::write_eval_csv(&cfg.out_dir.join("eval.csv"), &[(1, acc)])?;
        println!("test accuracy: {acc:.4}");
    }
    println!("artifacts: {}", cfg.out_dir.display());
    Ok(())
}

fn cmd_synth(
    spec_path: Option<&Path>,
    seed: Option<u64>,
    batches: Option<usize>,
    mode: Option<CliStreamMode>,
    out_dir: &Path,
) -> Result<()> {
    let mut spec = match spec_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str::<SyntheticSpec>(&text)
                .map_err(|e| Error::parse(path, e.line(), e.to_string()))?
        }
        None => SyntheticSpec::default(),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    if let Some(m) = batches {
        spec.batches = m;
    }
    if let Some(m) = mode {
        spec.mode = m.into();
    }
    let ds = generate(&spec)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    io::write_edges(&out_dir.join("graph.edges"), &ds.graph)?;
    io::write_features_csv(&out_dir.join("features.csv"), &ds.features)?;
    io::write_labels(&out_dir.join("labels.txt"), &ds.labels.labels)?;
    io::write_splits(&out_dir.join("splits.json"), &ds.labels)?;
    io::write_stream(&out_dir.join("stream.json"), &ds.stream)?;
    println!(
        "generated {} nodes, {} edges, {} classes, {} batches ({:?}) into {}",
        ds.graph.num_nodes(),
        ds.graph.num_edges(),
        ds.labels.num_classes,
        ds.stream.len(),
        ds.stream.mode,
        out_dir.display(),
    );
    Ok(())
}

fn cmd_report(
    ledger: &Path,
    cold_ledger: Option<&Path>,
    eval: Option<&Path>,
    bounds: Option<&Path>,
    out_dir: &Path,
) -> Result<()> {
    let bundle = run_report(ledger, cold_ledger, eval, bounds, out_dir)?;
    for line in &bundle.summary {
        println!("{line}");
    }
    println!("plot data: {}", out_dir.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Commands::Condense { opts } => cmd_condense(opts),
        Commands::Evolve { opts, warm_start } => cmd_evolve(opts, *warm_start),
        Commands::Eval { condensed, opts } => cmd_eval(condensed, opts),
        Commands::Bounds {
            theorem,
            instances,
            seed,
            out_dir,
        } => cmd_bounds(*theorem, *instances, *seed, out_dir),
        Commands::Baseline { method, opts } => cmd_baseline((*method).into(), opts),
        Commands::Synth {
            spec,
            seed,
            batches,
            mode,
            out_dir,
        } => cmd_synth(spec.as_deref(), *seed, *batches, *mode, out_dir),
        Commands::Report {
            ledger,
            cold_ledger,
            eval,
            bounds,
            out_dir,
        } => cmd_report(
            ledger,
            cold_ledger.as_deref(),
            eval.as_deref(),
            bounds.as_deref(),
            out_dir,
        ),
    }
}

fn main() {
    let cli = Cli::parse();
    let status = init_thread_pool().and_then(|()| run(cli));
    if let Err(e) = status {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

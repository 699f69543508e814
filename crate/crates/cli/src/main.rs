//! `hina`: build interaction networks from logs and analyze them.
//!
//! Exit status is 0 on success, 1 when the data cannot be processed and 2
//! on usage errors.

mod config;
mod output;

use std::fmt;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use hina_core::ingest::{ingest_with_report, AttributeColumn, RowFilter};
use hina_core::mdl::{ClusterResult, SearchRegistry};
use hina_core::metrics::metrics_csv;
use hina_core::{
    metrics_table, null_simulation, project_cluster, prune, FixDeg, Hin, HinMeta, HinSpec,
    NullModelSpec, Partition, PruneResult, SetSide, Table, WeightMode,
};
use hina_service::ServiceConfig;
use serde::Serialize;

use config::{ClusteringConfig, PipelineConfig};
use output::{destination, emit, write_atomic, Format};

#[derive(Parser)]
#[command(name = "hina", version, about = "Heterogeneous interaction network analysis")]
struct Cli {
    /// Default directory for artifacts when `--out` is not given.
    #[arg(long, global = true, env = "HINA_OUT_DIR")]
    out_dir: Option<PathBuf>,

    /// Log progress to standard error (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a network from a delimiter-separated interaction log.
    Build(BuildArgs),
    /// Per-node quantity and diversity for Set1.
    Metrics(MetricsArgs),
    /// Mark edges that are significant under a binomial null model.
    Prune(PruneArgs),
    /// Cluster Set1 nodes by minimum description length.
    Cluster(ClusterArgs),
    /// Aggregate one cluster onto Set2 as a network of its own.
    Project(ProjectArgs),
    /// Monte Carlo check of pruning thresholds against their null model.
    SimulateNull(SimulateArgs),
    /// Serve the HTTP API (and an optional UI bundle).
    Serve(ServeArgs),
    /// Run the whole pipeline from a JSON configuration file.
    Run(RunArgs),
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    input: PathBuf,
    /// Set1 column(s), comma separated; several columns form composite labels.
    #[arg(long, value_delimiter = ',', required = true)]
    set1: Vec<String>,
    /// Set2 column(s), comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    set2: Vec<String>,
    /// Sum this integer column instead of counting rows.
    #[arg(long)]
    weight_column: Option<String>,
    /// Attach a column to nodes as `COLUMN` (Set1) or `COLUMN:set2`.
    #[arg(long = "attr")]
    attributes: Vec<String>,
    /// Keep only rows where `COLUMN=VALUE`; repeat to require several.
    #[arg(long = "filter")]
    filters: Vec<String>,
    /// Keep rows whose Set1 label also names the Set2 partner.
    #[arg(long)]
    allow_self_pairs: bool,
    /// Field delimiter: `tab`, `comma` or a single character.
    #[arg(long, value_parser = parse_delimiter)]
    delimiter: Option<u8>,
    #[arg(long)]
    name: Option<String>,
    /// Write the ingestion report here as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    hin: PathBuf,
    /// Set1 attribute defining groups for group-relative quantity.
    #[arg(long)]
    group_attr: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct NullArgs {
    #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
    alpha: f64,
    /// Null model: none, set1 or set2.
    #[arg(long, default_value = "none", value_parser = parse_fix_deg)]
    fix_deg: FixDeg,
    /// Divide alpha by the number of cells N1 * N2.
    #[arg(long)]
    bonferroni: bool,
}

impl NullArgs {
    fn spec(&self) -> NullModelSpec {
        NullModelSpec {
            fix_deg: self.fix_deg,
            alpha: self.alpha,
            bonferroni: self.bonferroni,
        }
    }
}

#[derive(Args)]
struct PruneArgs {
    #[arg(long)]
    hin: PathBuf,
    #[command(flatten)]
    null: NullArgs,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SearchArgs {
    /// Search strategy.
    #[arg(long, default_value = "greedy", value_parser = parse_method)]
    method: String,
    /// Seed for shuffled restarts.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    /// Largest Set1 the exhaustive strategy accepts.
    #[arg(long, default_value_t = hina_core::mdl::DEFAULT_MAX_N1)]
    max_n1: usize,
}

impl SearchArgs {
    fn config(&self) -> ClusteringConfig {
        ClusteringConfig {
            method: self.method.clone(),
            seed: self.seed,
            restarts: self.restarts,
            max_n1: self.max_n1,
        }
    }
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    hin: PathBuf,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProjectArgs {
    #[arg(long)]
    hin: PathBuf,
    /// Cluster id in the partition.
    #[arg(long)]
    cluster: usize,
    /// Reuse the output of `hina cluster` instead of clustering again.
    #[arg(long)]
    clustering: Option<PathBuf>,
    #[command(flatten)]
    search: SearchArgs,
    /// Also write the row-level projection (with code/partner split) here.
    #[arg(long)]
    details: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    hin: PathBuf,
    #[command(flatten)]
    null: NullArgs,
    #[arg(long, default_value_t = 10_000)]
    draws: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "HINA_ADDR", default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Save datasets and networks here and restore them on start.
    #[arg(long, env = "HINA_PERSIST_DIR")]
    persist_dir: Option<PathBuf>,
    /// Built UI bundle to serve under `/`.
    #[arg(long, env = "HINA_STATIC_DIR")]
    static_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 60)]
    cluster_budget_secs: u64,
}

#[derive(Args)]
struct RunArgs {
    /// Pipeline configuration; relative paths inside resolve against its
    /// directory.
    #[arg(long)]
    config: PathBuf,
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let alpha: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if alpha > 0.0 && alpha < 1.0 {
        Ok(alpha)
    } else {
        Err("alpha must lie strictly between 0 and 1".into())
    }
}

fn parse_fix_deg(s: &str) -> Result<FixDeg, String> {
    s.parse::<FixDeg>().map_err(|e| e.to_string())
}

fn parse_method(s: &str) -> Result<String, String> {
    SearchRegistry::get(s)
        .map(|m| m.name().to_owned())
        .map_err(|_| format!("expected one of {}", SearchRegistry::names().join(", ")))
}

fn parse_delimiter(s: &str) -> Result<u8, String> {
    match s {
        "tab" | "\\t" | "\t" => Ok(b'\t'),
        "comma" => Ok(b','),
        _ if s.len() == 1 => Ok(s.as_bytes()[0]),
        _ => Err("use tab, comma or a single ASCII character".into()),
    }
}

/// A command line that parses but cannot be honored.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("artifact types serialize")
}

fn load_hin(path: &Path) -> Result<Hin> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Hin::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_table(path: &Path, delimiter: Option<u8>) -> Result<Table> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Table::parse(&text, delimiter).with_context(|| format!("parsing {}", path.display()))
}

fn build_spec(args: &BuildArgs) -> Result<HinSpec> {
    let mut spec = HinSpec::new(args.set1.clone(), args.set2.clone());
    if let Some(col) = &args.weight_column {
        spec.weight_mode = WeightMode::SumColumn(col.clone());
    }
    for attr in &args.attributes {
        let (column, side) = match attr.rsplit_once(':') {
            Some((c, "set1")) => (c, SetSide::Set1),
            Some((c, "set2")) => (c, SetSide::Set2),
            _ => (attr.as_str(), SetSide::Set1),
        };
        spec.attribute_columns.push(AttributeColumn {
            column: column.to_owned(),
            attach_to: side,
        });
    }
    for filter in &args.filters {
        let (column, value) = filter
            .split_once('=')
            .ok_or_else(|| usage(format!("--filter expects COLUMN=VALUE, got {filter:?}")))?;
        spec.row_filter.push(RowFilter {
            column: column.to_owned(),
            value: value.to_owned(),
        });
    }
    spec.allow_self_pairs = args.allow_self_pairs;
    spec.validate().map_err(|e| usage(e.to_string()))?;
    Ok(spec)
}

fn cmd_build(args: BuildArgs, out_dir: Option<&Path>) -> Result<()> {
    let spec = build_spec(&args)?;
    let table = load_table(&args.input, args.delimiter)?;
    let (hin, report) = ingest_with_report(&table, &spec)?;
    let hin = match args.name {
        Some(name) => {
            let meta = HinMeta {
                name: Some(name),
                ..hin.meta().clone()
            };
            hin.with_meta(meta)
        }
        None => hin,
    };
    eprintln!(
        "kept {} of {} rows: N1 = {}, N2 = {}, W = {}",
        report.kept, report.rows, report.n1, report.n2, report.total_weight
    );
    if let Some(path) = &args.report {
        emit(Some(path), &to_json(&report))?;
    }
    emit(destination(args.out, out_dir, "hin.json").as_deref(), &hin.to_json())
}

fn cmd_metrics(args: MetricsArgs, out_dir: Option<&Path>) -> Result<()> {
    let dest = destination(args.out, out_dir, "metrics.csv");
    let format = Format::resolve(args.format, dest.as_deref());
    let hin = load_hin(&args.hin)?;
    let rows = metrics_table(&hin, args.group_attr.as_deref())?;
    let text = match format {
        Format::Csv => metrics_csv(&rows),
        Format::Json => to_json(&rows),
    };
    emit(dest.as_deref(), &text)
}

fn prune_csv(hin: &Hin, result: &PruneResult) -> String {
    let mut out = String::from("source,target,weight,threshold,n,rho,kept\n");
    let quote = |s: String| {
        if s.contains([',', '"', '\n']) {
            format!("\"{}\"", s.replace('"', "\"\""))
        } else {
            s
        }
    };
    for e in &result.edges {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            quote(hin.set1()[e.source].label().to_string()),
            quote(hin.set2()[e.target].label().to_string()),
            e.weight,
            e.threshold,
            e.n,
            e.rho,
            e.kept
        ));
    }
    out
}

fn cmd_prune(args: PruneArgs, out_dir: Option<&Path>) -> Result<()> {
    let dest = destination(args.out, out_dir, "prune.json");
    let format = Format::resolve(args.format, dest.as_deref());
    let hin = load_hin(&args.hin)?;
    let result = prune(&hin, &args.null.spec())?;
    eprintln!("kept {} of {} edges", result.kept_count(), result.edges.len());
    let text = match format {
        Format::Csv => prune_csv(&hin, &result),
        Format::Json => to_json(&result),
    };
    emit(dest.as_deref(), &text)
}

fn run_search(hin: &Hin, config: &ClusteringConfig) -> Result<ClusterResult> {
    let strategy = SearchRegistry::get(&config.method).map_err(|e| usage(e.to_string()))?;
    Ok(strategy.search(hin, &config.options())?)
}

fn cmd_cluster(args: ClusterArgs, out_dir: Option<&Path>) -> Result<()> {
    let hin = load_hin(&args.hin)?;
    let result = run_search(&hin, &args.search.config())?;
    eprintln!("B = {} at {:.4} bits", result.best_partition.num_groups(), result.best_dl);
    emit(destination(args.out, out_dir, "cluster.json").as_deref(), &to_json(&result))
}

fn load_partition(path: &Path) -> Result<Partition> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    // accepts both a full clustering result and a bare partition
    serde_json::from_str::<Partition>(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_project(args: ProjectArgs, out_dir: Option<&Path>) -> Result<()> {
    let hin = load_hin(&args.hin)?;
    let partition = match &args.clustering {
        Some(path) => load_partition(path)?,
        None => run_search(&hin, &args.search.config())?.best_partition,
    };
    let projection = project_cluster(&hin, &partition, args.cluster)?;
    if let Some(path) = &args.details {
        emit(Some(path), &to_json(&projection))?;
    }
    let graph = projection.to_hin()?;
    let name = format!("cluster_{}_projection.json", args.cluster);
    emit(destination(args.out, out_dir, &name).as_deref(), &graph.to_json())
}

fn cmd_simulate(args: SimulateArgs, out_dir: Option<&Path>) -> Result<()> {
    let hin = load_hin(&args.hin)?;
    let report = null_simulation(&hin, &args.null.spec(), args.draws, args.seed)?;
    eprintln!(
        "exceedance {:.5} (bound {:.5}), keep rate {:.5}",
        report.exceedance_rate, report.bound, report.keep_rate
    );
    emit(destination(args.out, out_dir, "calibration.json").as_deref(), &to_json(&report))
}

fn cmd_serve(args: ServeArgs) -> Result<()> {
    let config = ServiceConfig {
        persist_dir: args.persist_dir,
        static_dir: args.static_dir,
        cluster_budget: Duration::from_secs(args.cluster_budget_secs),
    };
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(hina_service::serve(args.addr, config))?;
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let config: PipelineConfig =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", args.config.display())))?;
    let base = args.config.parent().unwrap_or(Path::new("."));
    let delimiter = match config.delimiter {
        None => None,
        Some(c) if c.is_ascii() => Some(c as u8),
        Some(c) => return Err(usage(format!("delimiter {c:?} is not ASCII"))),
    };
    config.hin.validate().map_err(|e| usage(e.to_string()))?;
    SearchRegistry::get(&config.clustering.method).map_err(|e| usage(e.to_string()))?;
    for spec in [&config.null_model, &config.projection] {
        spec.validate().map_err(|e| usage(e.to_string()))?;
    }
    let out = base.join(&config.out_dir);

    let table = load_table(&base.join(&config.input), delimiter)?;
    let (hin, report) = ingest_with_report(&table, &config.hin)?;
    let metrics = metrics_table(&hin, config.group_attr.as_deref())?;
    let pruned = prune(&hin, &config.null_model)?;
    let clustering = run_search(&hin, &config.clustering)?;
    let mut artifacts: Vec<(String, String)> = vec![
        ("hin.json".into(), hin.to_json()),
        ("ingest_report.json".into(), to_json(&report)),
        ("metrics.csv".into(), metrics_csv(&metrics)),
        ("prune.json".into(), to_json(&pruned)),
        ("cluster.json".into(), to_json(&clustering)),
    ];
    for r in 0..clustering.best_partition.num_groups() {
        let projection = project_cluster(&hin, &clustering.best_partition, r)?;
        let graph = projection.to_hin()?;
        let significant = prune(&graph, &config.projection)?;
        artifacts.push((format!("cluster_{r}_projection.json"), graph.to_json()));
        artifacts.push((format!("cluster_{r}_projection_prune.json"), to_json(&significant)));
    }
    if let Some(sim) = &config.simulate {
        let report = null_simulation(&hin, &config.null_model, sim.draws, sim.seed)?;
        artifacts.push(("calibration.json".into(), to_json(&report)));
    }
    // every artifact is computed before the first one is written
    for (name, text) in &artifacts {
        write_atomic(&out.join(name), format!("{text}\n").as_bytes())?;
    }
    eprintln!(
        "wrote {} artifacts to {}: B = {}, {} of {} edges significant",
        artifacts.len(),
        out.display(),
        clustering.best_partition.num_groups(),
        pruned.kept_count(),
        pruned.edges.len()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let level = match cli.verbose {
        0 => tracing_subscriber::filter::LevelFilter::WARN,
        1 => tracing_subscriber::filter::LevelFilter::INFO,
        _ => tracing_subscriber::filter::LevelFilter::DEBUG,
    };
    tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .init();

    let out_dir = cli.out_dir.as_deref();
    let result = match cli.command {
        Command::Build(a) => cmd_build(a, out_dir),
        Command::Metrics(a) => cmd_metrics(a, out_dir),
        Command::Prune(a) => cmd_prune(a, out_dir),
        Command::Cluster(a) => cmd_cluster(a, out_dir),
        Command::Project(a) => cmd_project(a, out_dir),
        Command::SimulateNull(a) => cmd_simulate(a, out_dir),
        Command::Serve(a) => cmd_serve(a),
        Command::Run(a) => cmd_run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

//! Experiment harness: configuration parsing, problem assembly, solver and
//! simulator orchestration, and machine-readable artifacts.
//!
//! Artifacts written per run:
//!
//! * `trace.csv` — `sweep,block,objective`, one row per block update
//! * `stages.csv` — `round,frobenius_error,relative_error`
//! * `seq_<i>.mat` — operator dumps, 1-based, matrix text format
//! * `summary.json` — final objective, effective rounds, storage stats,
//!   wall time, config echo, library version
//! * `signal_trace.csv` / `signal.sig` — when a signal is supplied or
//!   generated, plus the simulator-vs-centralized deviation in the summary
//!
//! CSV values carry 17 significant digits; identical configs reproduce
//! identical CSV bytes.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::design::{
    bcd_design, make_weights, DesignProblem, ShiftSequence, SolveReport, SolverConfig, WeightScheme,
};
use crate::error::{Error, Result};
use crate::graph::{er_random_graph, read_edge_list, Graph};
use crate::sim::{
    compare_centralized, read_signal, run_rounds, storage_per_node, write_signal, RoundTrace,
};
use crate::targets::{random_subspace_basis, save_matrix, TargetKind, TargetSpec};

/// Where the graph comes from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphSource {
    Er { n: usize, p: f64 },
    File(PathBuf),
}

impl fmt::Display for GraphSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSource::Er { n, p } => write!(f, "er:{n},{p}"),
            GraphSource::File(path) => write!(f, "{}", path.display()),
        }
    }
}

impl FromStr for GraphSource {
    type Err = Error;

    /// Accepts `er:N,P`, `file:PATH`, or a bare path.
    fn from_str(s: &str) -> Result<Self> {
        if let Some(rest) = s.strip_prefix("er:") {
            let (n, p) = rest
                .split_once(',')
                .ok_or_else(|| Error::InvalidParameter(format!("expected er:N,P, got `{s}`")))?;
            let n: usize = n
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("invalid vertex count `{n}`")))?;
            let p: f64 = p
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("invalid edge probability `{p}`")))?;
            return Ok(GraphSource::Er { n, p });
        }
        let path = s.strip_prefix("file:").unwrap_or(s);
        Ok(GraphSource::File(PathBuf::from(path)))
    }
}

/// Which pipeline a config drives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Solve only.
    Design,
    /// Solve, then simulate on a supplied or generated signal.
    Experiment,
}

/// A fully validated experiment configuration with defaults applied.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub graph: GraphSource,
    pub directed: bool,
    pub self_loops: bool,
    pub target: TargetKind,
    pub rounds: usize,
    pub weights: WeightScheme,
    pub i_max: usize,
    pub rel_tol: f64,
    pub ridge: f64,
    pub delta: f64,
    pub seed: u64,
    pub noise_std: f64,
    pub symmetric: bool,
    pub signal: Option<PathBuf>,
    pub out_dir: PathBuf,
}

/// Validated configuration for replaying a saved sequence.
#[derive(Debug, Clone, Serialize)]
pub struct SimulateConfig {
    pub graph: GraphSource,
    pub directed: bool,
    pub self_loops: bool,
    pub seed: u64,
    pub seq_dir: PathBuf,
    pub signal: PathBuf,
    pub out_dir: PathBuf,
}

#[derive(Debug, Parser)]
#[command(
    name = "shiftseq",
    version,
    about = "Successive graph shift-operator design and simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a design problem and write solver artifacts.
    Design(DesignArgs),
    /// Run a saved operator sequence on a signal file.
    Simulate(SimulateArgs),
    /// Design, then simulate on a supplied or generated noisy signal.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Standard deviation of the additive noise on generated signals.
    #[arg(long, default_value_t = 0.1)]
    pub noise_std: f64,

    /// Use this signal file instead of generating one.
    #[arg(long)]
    pub signal: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Graph source: `er:N,P` or an edge-list file.
    #[arg(long)]
    pub graph: String,

    /// Generate the ER graph directed (ER sources only).
    #[arg(long)]
    pub directed: bool,

    /// Skip the all-self-loops default (ER sources only).
    #[arg(long)]
    pub no_self_loops: bool,

    /// Seed for ER graph generation.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Directory holding seq_1.mat, seq_2.mat, ...
    #[arg(long)]
    pub seq_dir: PathBuf,

    /// Signal file, one value per line.
    #[arg(long)]
    pub signal: PathBuf,

    /// Output directory for artifacts.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Graph source: `er:N,P` or an edge-list file.
    #[arg(long)]
    pub graph: String,

    /// Generate the ER graph directed (ER sources only).
    #[arg(long)]
    pub directed: bool,

    /// Skip the all-self-loops default (ER sources only).
    #[arg(long)]
    pub no_self_loops: bool,

    /// Target: consensus | projection:R | file:PATH.
    #[arg(long)]
    pub target: String,

    /// Number of rounds, i.e. operators to design.
    #[arg(long = "L", value_name = "L")]
    pub rounds: usize,

    /// Stage-weight scheme: uniform | linear | geometric:RATIO | final-only.
    #[arg(long, default_value = "linear")]
    pub weights: String,

    /// Maximum number of outer sweeps.
    #[arg(long, default_value_t = 50)]
    pub i_max: usize,

    /// Early-stop threshold on the relative per-sweep objective decrease.
    #[arg(long, default_value_t = 1e-9)]
    pub rel_tol: f64,

    /// Tikhonov term added to every block solve.
    #[arg(long, default_value_t = 0.0)]
    pub ridge: f64,

    /// Relative stage-error threshold behind the effective-rounds metric.
    #[arg(long, default_value_t = 1e-3)]
    pub delta: f64,

    /// Seed for graph, target, and signal generation.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Constrain every operator to be symmetric (undirected graphs only).
    #[arg(long)]
    pub symmetric: bool,

    /// Output directory for artifacts.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// A parsed and validated CLI invocation.
#[derive(Debug)]
pub enum ParsedCommand {
    Design(ExperimentConfig),
    Simulate(SimulateConfig),
    Experiment(ExperimentConfig),
}

/// Parses CLI arguments (without the binary name) into a validated
/// command, applying defaults. Help and version requests surface as
/// validation errors here; the binary handles them before calling this.
pub fn parse_config<I, T>(args: I) -> Result<ParsedCommand>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv = std::iter::once(OsString::from("shiftseq")).chain(args.into_iter().map(Into::into));
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    validate_cli(cli)
}

/// Validates an already-parsed CLI invocation.
pub fn validate_cli(cli: Cli) -> Result<ParsedCommand> {
    match cli.command {
        Command::Design(args) => Ok(ParsedCommand::Design(validate_common(
            args.common,
            Mode::Design,
            0.0,
            None,
        )?)),
        Command::Experiment(args) => Ok(ParsedCommand::Experiment(validate_common(
            args.common,
            Mode::Experiment,
            args.noise_std,
            args.signal,
        )?)),
        Command::Simulate(args) => {
            let graph: GraphSource = args.graph.parse()?;
            validate_graph_source(&graph)?;
            if !args.signal.exists() {
                return Err(Error::MissingFile(args.signal));
            }
            Ok(ParsedCommand::Simulate(SimulateConfig {
                graph,
                directed: args.directed,
                self_loops: !args.no_self_loops,
                seed: args.seed,
                seq_dir: args.seq_dir,
                signal: args.signal,
                out_dir: args.out,
            }))
        }
    }
}

fn validate_common(
    args: CommonArgs,
    mode: Mode,
    noise_std: f64,
    signal: Option<PathBuf>,
) -> Result<ExperimentConfig> {
    if args.rounds == 0 {
        return Err(Error::InvalidParameter("--L must be at least 1".into()));
    }
    if args.i_max == 0 {
        return Err(Error::InvalidParameter("--i-max must be at least 1".into()));
    }
    if args.rel_tol < 0.0 || args.ridge < 0.0 {
        return Err(Error::InvalidParameter(
            "--rel-tol and --ridge must be nonnegative".into(),
        ));
    }
    if args.delta <= 0.0 {
        return Err(Error::InvalidParameter("--delta must be positive".into()));
    }
    if noise_std < 0.0 {
        return Err(Error::InvalidParameter(
            "--noise-std must be nonnegative".into(),
        ));
    }
    let graph: GraphSource = args.graph.parse()?;
    validate_graph_source(&graph)?;
    let mut target: TargetKind = args.target.parse()?;
    if let TargetKind::Projection { seed, .. } = &mut target {
        // sub-seed so the projector draw does not collide with the graph draw
        *seed = args.seed.wrapping_add(1);
    }
    if let TargetKind::File(path) = &target {
        if !path.exists() {
            return Err(Error::MissingFile(path.clone()));
        }
    }
    let weights: WeightScheme = args.weights.parse()?;
    make_weights(weights, args.rounds)?;
    if let Some(path) = &signal {
        if !path.exists() {
            return Err(Error::MissingFile(path.clone()));
        }
    }
    Ok(ExperimentConfig {
        mode,
        graph,
        directed: args.directed,
        self_loops: !args.no_self_loops,
        target,
        rounds: args.rounds,
        weights,
        i_max: args.i_max,
        rel_tol: args.rel_tol,
        ridge: args.ridge,
        delta: args.delta,
        seed: args.seed,
        noise_std,
        symmetric: args.symmetric,
        signal,
        out_dir: args.out,
    })
}

fn validate_graph_source(graph: &GraphSource) -> Result<()> {
    match graph {
        GraphSource::Er { n, p } => {
            if *n == 0 {
                return Err(Error::InvalidParameter(
                    "er graph needs at least one vertex".into(),
                ));
            }
            if !(0.0..=1.0).contains(p) {
                return Err(Error::InvalidParameter(format!(
                    "er edge probability must lie in [0, 1], got {p}"
                )));
            }
        }
        GraphSource::File(path) => {
            if !path.exists() {
                return Err(Error::MissingFile(path.clone()));
            }
        }
    }
    Ok(())
}

/// Min/max/mean/total of the per-node coefficient storage.
#[derive(Debug, Clone, Serialize)]
pub struct StorageStats {
    pub min: usize,
    pub max: usize,
    pub mean: f64,
    pub total: usize,
}

impl StorageStats {
    fn from_counts(counts: &[usize]) -> Self {
        let total: usize = counts.iter().sum();
        StorageStats {
            min: counts.iter().copied().min().unwrap_or(0),
            max: counts.iter().copied().max().unwrap_or(0),
            mean: total as f64 / counts.len().max(1) as f64,
            total,
        }
    }
}

/// Everything `summary.json` records for a design/experiment run.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub version: String,
    pub config: ExperimentConfig,
    pub final_objective: f64,
    pub effective_rounds: Option<usize>,
    pub storage: StorageStats,
    pub wall_time_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sim_max_deviation: Option<f64>,
}

/// Everything `summary.json` records for a simulate run.
#[derive(Debug, Clone, Serialize)]
pub struct SimulateSummary {
    pub version: String,
    pub config: SimulateConfig,
    pub rounds: usize,
    pub messages_per_round: usize,
    pub max_deviation: f64,
    pub storage: StorageStats,
    pub wall_time_seconds: f64,
}

/// Builds the graph a config describes. ER graphs are resampled until
/// strongly connected; file graphs are taken verbatim.
pub fn resolve_graph(
    source: &GraphSource,
    directed: bool,
    self_loops: bool,
    seed: u64,
) -> Result<Graph> {
    match source {
        GraphSource::Er { n, p } => er_random_graph(*n, *p, directed, self_loops, seed, true),
        GraphSource::File(path) => read_edge_list(path),
    }
}

/// Runs the full design pipeline (and, in experiment mode, the
/// simulation) and writes all artifacts into `cfg.out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Summary> {
    let start = Instant::now();
    let graph = resolve_graph(&cfg.graph, cfg.directed, cfg.self_loops, cfg.seed)?;
    let n = graph.n_vertices();
    let target = TargetSpec::resolve(cfg.target.clone(), n)?;
    let weights = make_weights(cfg.weights, cfg.rounds)?;
    let problem = DesignProblem::new(
        target.resolved.clone(),
        graph.clone(),
        weights,
        cfg.symmetric,
    )?;
    let solver_cfg = SolverConfig {
        i_max: cfg.i_max,
        rel_tol: cfg.rel_tol,
        ridge: cfg.ridge,
        delta: cfg.delta,
    };
    log::info!(
        "designing {} operators on {} vertices ({} edges)",
        cfg.rounds,
        n,
        graph.n_edges()
    );
    let (seq, report) = bcd_design(&problem, &solver_cfg)?;

    std::fs::create_dir_all(&cfg.out_dir)?;
    write_trace_csv(cfg.out_dir.join("trace.csv"), &report)?;
    let target_norm = problem.target().norm();
    write_stages_csv(
        cfg.out_dir.join("stages.csv"),
        &report.stage_errors,
        target_norm,
    )?;
    for i in 0..seq.len() {
        save_matrix(
            cfg.out_dir.join(format!("seq_{}.mat", i + 1)),
            &seq.dense(i),
        )?;
    }

    let sim_max_deviation = match cfg.mode {
        Mode::Design => None,
        Mode::Experiment => {
            let signal = match &cfg.signal {
                Some(path) => read_signal(path)?,
                None => generate_signal(cfg, &target, n)?,
            };
            if signal.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "signal has {} entries but the graph has {n} vertices",
                    signal.len()
                )));
            }
            write_signal(cfg.out_dir.join("signal.sig"), &signal)?;
            let trace = run_rounds(&graph, &seq, &signal)?;
            write_signal_trace_csv(cfg.out_dir.join("signal_trace.csv"), &trace)?;
            let deviations = compare_centralized(&trace, &seq, &signal);
            Some(deviations.iter().cloned().fold(0.0f64, f64::max))
        }
    };

    let final_objective = report
        .objective_trace
        .last()
        .map(|p| p.objective)
        .unwrap_or(f64::NAN);
    let summary = Summary {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        final_objective,
        effective_rounds: report.effective_rounds,
        storage: StorageStats::from_counts(&storage_per_node(&graph, cfg.rounds)),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        sim_max_deviation,
    };
    write_json(cfg.out_dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Replays a saved sequence on a signal and writes `signal_trace.csv`
/// plus `summary.json`.
pub fn run_simulate(cfg: &SimulateConfig) -> Result<SimulateSummary> {
    let start = Instant::now();
    let graph = resolve_graph(&cfg.graph, cfg.directed, cfg.self_loops, cfg.seed)?;
    let seq = load_sequence(&graph, &cfg.seq_dir)?;
    let signal = read_signal(&cfg.signal)?;
    let trace = run_rounds(&graph, &seq, &signal)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    write_signal_trace_csv(cfg.out_dir.join("signal_trace.csv"), &trace)?;
    let deviations = compare_centralized(&trace, &seq, &signal);
    let summary = SimulateSummary {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        rounds: seq.len(),
        messages_per_round: trace.messages_sent.first().copied().unwrap_or(0),
        max_deviation: deviations.iter().cloned().fold(0.0f64, f64::max),
        storage: StorageStats::from_counts(&storage_per_node(&graph, seq.len())),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    write_json(cfg.out_dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Loads `seq_1.mat`, `seq_2.mat`, ... until the first missing index.
pub fn load_sequence(graph: &Graph, dir: &Path) -> Result<ShiftSequence> {
    let mut mats: Vec<DMatrix<f64>> = Vec::new();
    loop {
        let path = dir.join(format!("seq_{}.mat", mats.len() + 1));
        if !path.exists() {
            break;
        }
        mats.push(crate::targets::load_matrix(path)?);
    }
    if mats.is_empty() {
        return Err(Error::MissingFile(dir.join("seq_1.mat")));
    }
    ShiftSequence::from_dense(graph, &mats)
}

/// Dispatches a validated command and prints a short human summary.
pub fn execute(cmd: &ParsedCommand) -> Result<()> {
    match cmd {
        ParsedCommand::Design(cfg) | ParsedCommand::Experiment(cfg) => {
            let summary = run_experiment(cfg)?;
            println!("final objective {:.6e}", summary.final_objective);
            match summary.effective_rounds {
                Some(l) => println!("effective rounds {l}"),
                None => println!("effective rounds: threshold not reached"),
            }
            if let Some(dev) = summary.sim_max_deviation {
                println!("simulator max deviation {dev:.3e}");
            }
            println!("artifacts in {}", cfg.out_dir.display());
            Ok(())
        }
        ParsedCommand::Simulate(cfg) => {
            let summary = run_simulate(cfg)?;
            println!(
                "ran {} rounds, max deviation {:.3e}",
                summary.rounds, summary.max_deviation
            );
            println!("artifacts in {}", cfg.out_dir.display());
            Ok(())
        }
    }
}

/// Draws the experiment input signal. Targets with a known basis follow
/// the subspace model (basis times standard-normal coefficients plus
/// noise); file targets fall back to a standard-normal signal plus noise.
fn generate_signal(cfg: &ExperimentConfig, target: &TargetSpec, n: usize) -> Result<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(2));
    let clean: DVector<f64> = match &target.kind {
        TargetKind::Consensus => {
            let scale = 1.0 / (n as f64).sqrt();
            let coeff: f64 = StandardNormal.sample(&mut rng);
            DVector::from_element(n, scale * coeff)
        }
        TargetKind::Projection { r, seed } => {
            let basis = random_subspace_basis(n, *r, *seed)?;
            let coeffs = DVector::from_fn(*r, |_, _| StandardNormal.sample(&mut rng));
            basis * coeffs
        }
        TargetKind::File(_) => DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng)),
    };
    let noise = DVector::from_fn(n, |_, _| {
        let v: f64 = StandardNormal.sample(&mut rng);
        cfg.noise_std * v
    });
    Ok(clean + noise)
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_trace_csv(path: PathBuf, report: &SolveReport) -> Result<()> {
    let mut out = String::from("sweep,block,objective\n");
    for point in &report.objective_trace {
        out.push_str(&format!(
            "{},{},{}\n",
            point.sweep,
            point.block,
            fmt17(point.objective)
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn write_stages_csv(path: PathBuf, stage_errors: &[f64], target_norm: f64) -> Result<()> {
    let denom = if target_norm > 0.0 { target_norm } else { 1.0 };
    let mut out = String::from("round,frobenius_error,relative_error\n");
    for (l, err) in stage_errors.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{}\n",
            l + 1,
            fmt17(*err),
            fmt17(err / denom)
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn write_signal_trace_csv(path: PathBuf, trace: &RoundTrace) -> Result<()> {
    let n = trace.states[0].len();
    let mut out = String::from("round");
    for i in 0..n {
        out.push_str(&format!(",node_{i}"));
    }
    out.push('\n');
    for (round, state) in trace.states.iter().enumerate() {
        out.push_str(&round.to_string());
        for v in state.iter() {
            out.push(',');
            out.push_str(&fmt17(*v));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn write_json<T: Serialize>(path: PathBuf, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable summary");
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

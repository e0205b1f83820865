//! Command-line front end: `evaluate`, `sweep`, `check-ordering`, `validate`.
//!
//! Exit codes: 0 success, 2 config error, 3 model or domain error, 4 I/O error.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::{evaluate, gs_inner_terms, Model, RatePoint, Side};
use crate::channel::CostFunction;
use crate::error::Error;
use crate::mc::{validate_terms, write_validation_csv};
use crate::ordering::{check_degraded, cln_search, ClnDirection, ClnSearch, DegradednessCertificate};
use crate::prob::{JointTensor, Var};
use crate::sweep::{
    concave_envelope, frontier_summary, gain_report, sweep_each, write_frontier_csv, write_point_row, AxisRange,
    Frontier, FrontierBuilder, FrontierSummary, Gains, SweepGrid, DEFAULT_RESOLUTION, POINTS_HEADER,
};
use crate::system::{binary_example_joint, build_joint, BinaryExampleConfig, SystemFactors};

pub const TOOL: &str = "keyregion";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_MODEL: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Model(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Model(_) => EXIT_MODEL,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Model(m) => write!(f, "model error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Validation(m) => CliError::Config(m),
            Error::Domain(m) | Error::Model(m) => CliError::Model(m),
            Error::Io(e) => CliError::Io(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// A system given factor by factor, with per-action costs (zero when absent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub factors: SystemFactors,
    #[serde(default)]
    pub costs: Option<CostFunction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// Also write every evaluated grid point.
    #[serde(default = "yes")]
    pub write_points: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: None, write_points: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderingConfig {
    #[serde(default = "default_direction")]
    pub direction: ClnDirection,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub l_size: Option<usize>,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

fn default_direction() -> ClnDirection {
    ClnDirection::XGeZ
}

fn default_restarts() -> usize {
    50
}

fn default_max_iters() -> usize {
    400
}

impl Default for OrderingConfig {
    fn default() -> Self {
        OrderingConfig {
            direction: default_direction(),
            restarts: default_restarts(),
            l_size: None,
            max_iters: default_max_iters(),
        }
    }
}

/// Everything a run depends on. Command-line flags override these fields; the
/// effective config is what gets hashed into output provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub example: Option<BinaryExampleConfig>,
    #[serde(default)]
    pub system: Option<SystemSpec>,
    #[serde(default = "SweepGrid::fine")]
    pub grid: SweepGrid,
    #[serde(default = "default_budgets")]
    pub budgets: Vec<f64>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub envelope: bool,
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    #[serde(default)]
    pub ordering: OrderingConfig,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_budgets() -> Vec<f64> {
    vec![0.001, 0.050, 0.250]
}

fn default_resolution() -> f64 {
    DEFAULT_RESOLUTION
}

fn default_samples() -> usize {
    1_000_000
}

impl RunConfig {
    /// Parses JSON, reporting the field path and position of the first error.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            CliError::Config(format!("at `{path}` (line {}, column {}): {inner}", inner.line(), inner.column()))
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        RunConfig::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> CliResult<()> {
        match (&self.example, &self.system) {
            (Some(_), Some(_)) => return Err(CliError::Config("give either `example` or `system`, not both".into())),
            (None, None) => return Err(CliError::Config("config needs an `example` or a `system`".into())),
            (Some(ex), None) => ex.validate()?,
            (None, Some(s)) => {
                s.factors.validate()?;
                if let Some(c) = &s.costs {
                    if c.len() != s.factors.action.output_size() {
                        return Err(CliError::Config(format!(
                            "system.costs lists {} actions, the action alphabet has {}",
                            c.len(),
                            s.factors.action.output_size()
                        )));
                    }
                }
            }
        }
        self.grid.validate()?;
        if self.budgets.is_empty() {
            return Err(CliError::Config("budgets must not be empty".into()));
        }
        if let Some(b) = self.budgets.iter().find(|b| b.is_nan() || **b <= 0.0) {
            return Err(CliError::Config(format!("budgets must be positive, got {b}")));
        }
        if !self.resolution.is_finite() || self.resolution <= 0.0 {
            return Err(CliError::Config(format!("resolution must be positive, got {}", self.resolution)));
        }
        if self.workers == Some(0) {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        if self.ordering.restarts == 0 {
            return Err(CliError::Config("ordering.restarts must be at least 1".into()));
        }
        if self.ordering.l_size == Some(0) {
            return Err(CliError::Config("ordering.l_size must be at least 1".into()));
        }
        if self.samples == 0 {
            return Err(CliError::Config("samples must be positive".into()));
        }
        Ok(())
    }

    /// Joint and cost function of the configured system.
    pub fn joint(&self) -> CliResult<(JointTensor, CostFunction)> {
        if let Some(ex) = &self.example {
            return Ok((binary_example_joint(ex)?, ex.cost_function()?));
        }
        let s = self.system.as_ref().ok_or_else(|| CliError::Config("no system configured".into()))?;
        let joint = build_joint(&s.factors)?;
        let costs = match &s.costs {
            Some(c) => c.clone(),
            None => CostFunction::new(vec![0.0; joint.size_of(Var::A).unwrap_or(1)])?,
        };
        Ok((joint, costs))
    }

    /// Hex SHA-256 of the canonical JSON form. The worker count is left out
    /// since it does not affect results.
    pub fn sha256(&self) -> String {
        let text = serde_json::to_string(&RunConfig { workers: None, ..self.clone() }).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
}

impl Provenance {
    pub fn of(cfg: &RunConfig) -> Self {
        Provenance { tool: TOOL.into(), version: VERSION.into(), config_sha256: cfg.sha256() }
    }

    /// Comment line for CSV outputs (without the leading `#`).
    pub fn line(&self) -> String {
        format!("{} {} config_sha256={}", self.tool, self.version, self.config_sha256)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "keyregion",
    version,
    about = "Rate regions for secret-key generation with action-dependent measurements"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one bound at the configured parameters and print it as JSON.
    Evaluate(EvalArgs),
    /// Sweep the grid and write points, frontiers and a summary.
    Sweep(SweepArgs),
    /// Test physical degradedness and search for less-noisy violations.
    CheckOrdering(OrderingArgs),
    /// Compare exact information terms with Monte Carlo plug-in estimates.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_parser = parse_model, default_value = "gs")]
    pub model: Model,
    #[arg(long, value_parser = parse_side, default_value = "inner")]
    pub side: Side,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_parser = parse_model)]
    pub model: Option<Model>,
    #[arg(long, value_parser = parse_side)]
    pub side: Option<Side>,
    /// Comma-separated storage budgets in bits.
    #[arg(long, value_delimiter = ',')]
    pub budgets: Option<Vec<f64>>,
    /// Replace the configured grid by the full grid at this step.
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Also write the upper concave envelope of each frontier.
    #[arg(long)]
    pub envelope: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OrderingArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_parser = parse_direction)]
    pub direction: Option<ClnDirection>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub l_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Sample size.
    #[arg(long)]
    pub n: Option<usize>,
}

fn parse_model(s: &str) -> Result<Model, String> {
    match s {
        "gs" => Ok(Model::Gs),
        "cs" => Ok(Model::Cs),
        _ => Err(format!("expected gs or cs, got {s}")),
    }
}

fn parse_side(s: &str) -> Result<Side, String> {
    match s {
        "inner" => Ok(Side::Inner),
        "outer" => Ok(Side::Outer),
        _ => Err(format!("expected inner or outer, got {s}")),
    }
}

fn parse_direction(s: &str) -> Result<ClnDirection, String> {
    match s {
        "x-ge-z" => Ok(ClnDirection::XGeZ),
        "z-ge-y" => Ok(ClnDirection::ZGeY),
        _ => Err(format!("expected x-ge-z or z-ge-y, got {s}")),
    }
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = write!(if code == EXIT_OK { out as &mut dyn Write } else { err as &mut dyn Write }, "{e}");
            return code;
        }
    };
    match run(cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}

fn apply_common(cfg: &mut RunConfig, c: &CommonArgs) {
    if c.workers.is_some() {
        cfg.workers = c.workers;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
}

pub fn run(cli: Cli, out: &mut impl Write) -> CliResult<()> {
    let (common, mut cfg) = match &cli.command {
        Command::Evaluate(a) => (&a.common, RunConfig::load(&a.common.config)?),
        Command::Sweep(a) => (&a.common, RunConfig::load(&a.common.config)?),
        Command::CheckOrdering(a) => (&a.common, RunConfig::load(&a.common.config)?),
        Command::Validate(a) => (&a.common, RunConfig::load(&a.common.config)?),
    };
    apply_common(&mut cfg, common);
    match &cli.command {
        Command::Sweep(a) => {
            if let Some(m) = a.model {
                cfg.grid.model = m;
            }
            if let Some(s) = a.side {
                cfg.grid.side = s;
            }
            if let Some(b) = &a.budgets {
                cfg.budgets = b.clone();
            }
            if let Some(step) = a.grid_step {
                let model = cfg.grid.model;
                let side = cfg.grid.side;
                cfg.grid = SweepGrid { model, side, ..SweepGrid::uniform(step) };
            }
            if a.envelope {
                cfg.envelope = true;
            }
            if a.out.is_some() {
                cfg.output.dir = a.out.clone();
            }
        }
        Command::CheckOrdering(a) => {
            if let Some(d) = a.direction {
                cfg.ordering.direction = d;
            }
            if let Some(r) = a.restarts {
                cfg.ordering.restarts = r;
            }
            if a.l_size.is_some() {
                cfg.ordering.l_size = a.l_size;
            }
        }
        Command::Validate(a) => {
            if let Some(n) = a.n {
                cfg.samples = n;
            }
        }
        Command::Evaluate(_) => {}
    }
    cfg.validate()?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        pool = pool.num_threads(w);
    }
    let pool = pool.build().map_err(|e| CliError::Config(format!("cannot start {:?} workers: {e}", cfg.workers)))?;

    let mut buf = Vec::new();
    pool.install(|| match &cli.command {
        Command::Evaluate(a) => cmd_evaluate(&cfg, a.model, a.side, &mut buf),
        Command::Sweep(_) => cmd_sweep(&cfg).and_then(|s| write_json(&mut buf, &s)),
        Command::CheckOrdering(_) => cmd_check_ordering(&cfg, &mut buf),
        Command::Validate(_) => cmd_validate(&cfg, &mut buf),
    })?;
    out.write_all(&buf).and_then(|_| out.flush()).map_err(|e| CliError::Io(e.to_string()))
}

fn write_json(out: &mut impl Write, v: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(v).expect("output serializes");
    writeln!(out, "{text}").map_err(|e| CliError::Io(e.to_string()))
}

#[derive(Debug, Serialize)]
struct EvaluateReport<'a> {
    provenance: Provenance,
    point: &'a RatePoint,
}

pub fn cmd_evaluate(cfg: &RunConfig, model: Model, side: Side, out: &mut impl Write) -> CliResult<()> {
    let (joint, costs) = cfg.joint()?;
    let mut point = evaluate(&joint, &costs, model, side)?;
    if let Some(ex) = &cfg.example {
        point.params = Some(crate::bounds::AuxParams { alpha0: ex.alpha0, alpha1: ex.alpha1, p0: ex.p0, p1: ex.p1 });
    }
    write_json(out, &EvaluateReport { provenance: Provenance::of(cfg), point: &point })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BudgetSummary {
    pub budget: f64,
    pub frontier_file: String,
    pub frontier_points: usize,
    /// Absent when no point meets the budget.
    pub summary: Option<FrontierSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GainSummary {
    pub low_budget: f64,
    pub high_budget: f64,
    pub gains: Option<Gains>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSummary {
    pub provenance: Provenance,
    pub model: Model,
    pub side: Side,
    pub grid_points: usize,
    pub budgets: Vec<BudgetSummary>,
    pub gains: Option<GainSummary>,
}

fn frontier_name(prefix: &str, budget: f64) -> String {
    format!("{prefix}_{budget}.csv")
}

fn create(dir: &Path, name: &str) -> CliResult<BufWriter<File>> {
    let path = dir.join(name);
    File::create(&path).map(BufWriter::new).map_err(|e| io_err(&path, e))
}

/// Runs the configured sweep, writing into `cfg.output.dir`. All output files
/// are created before any point is evaluated.
pub fn cmd_sweep(cfg: &RunConfig) -> CliResult<SweepSummary> {
    let ex = cfg.example.as_ref().ok_or_else(|| CliError::Config("sweep needs an `example` config".into()))?;
    let dir = cfg.output.dir.clone().ok_or_else(|| CliError::Config("no output directory (use --out)".into()))?;
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let prov = Provenance::of(cfg);

    let mut budgets = cfg.budgets.clone();
    budgets.sort_by(f64::total_cmp);
    budgets.dedup();

    let mut frontier_files = budgets
        .iter()
        .map(|&b| Ok((create(&dir, &frontier_name("frontier", b))?, b)))
        .collect::<CliResult<Vec<_>>>()?;
    let mut envelope_files = if cfg.envelope {
        budgets.iter().map(|&b| create(&dir, &frontier_name("envelope", b))).collect::<CliResult<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let summary_path = dir.join("summary.json");
    let mut summary_file = File::create(&summary_path).map(BufWriter::new).map_err(|e| io_err(&summary_path, e))?;
    let points_path = dir.join("points.csv");
    let mut points = if cfg.output.write_points {
        let mut w = create(&dir, "points.csv")?;
        writeln!(w, "# {}", prov.line()).map_err(|e| io_err(&points_path, e))?;
        writeln!(w, "{POINTS_HEADER}").map_err(|e| io_err(&points_path, e))?;
        Some(w)
    } else {
        None
    };

    let mut builders =
        budgets.iter().map(|&b| FrontierBuilder::new(b, cfg.resolution)).collect::<crate::Result<Vec<_>>>()?;
    let grid_points = sweep_each(ex, &cfg.grid, |p| {
        for b in builders.iter_mut() {
            b.push(&p);
        }
        if let Some(w) = points.as_mut() {
            write_point_row(w, &p)?;
        }
        Ok(())
    })
    .map_err(|e| match e {
        Error::Io(e) => io_err(&points_path, e),
        other => other.into(),
    })?;
    if let Some(mut w) = points {
        w.flush().map_err(|e| io_err(&points_path, e))?;
    }

    let frontiers: Vec<Frontier> = builders.into_iter().map(FrontierBuilder::finish).collect();
    let mut entries = Vec::new();
    for (i, f) in frontiers.iter().enumerate() {
        let (w, b) = &mut frontier_files[i];
        let name = frontier_name("frontier", *b);
        write_frontier_csv(w, f, &prov.line()).and_then(|_| w.flush()).map_err(|e| io_err(&dir.join(&name), e))?;
        if let Some(ew) = envelope_files.get_mut(i) {
            let env = concave_envelope(f);
            write_frontier_csv(ew, &env, &prov.line())
                .and_then(|_| ew.flush())
                .map_err(|e| io_err(&dir.join(frontier_name("envelope", *b)), e))?;
        }
        entries.push(BudgetSummary {
            budget: *b,
            frontier_file: name,
            frontier_points: f.points.len(),
            summary: frontier_summary(f).ok(),
        });
    }

    let gains = if entries.len() >= 2 {
        let (lo, hi) = (&entries[0], &entries[entries.len() - 1]);
        let (gains, note) = match (&lo.summary, &hi.summary) {
            (Some(a), Some(b)) => match gain_report(a, b) {
                Ok(g) => (Some(g), None),
                Err(e) => (None, Some(e.to_string())),
            },
            _ => (None, Some("a frontier is empty".to_string())),
        };
        Some(GainSummary { low_budget: lo.budget, high_budget: hi.budget, gains, note })
    } else {
        None
    };

    let summary = SweepSummary {
        provenance: prov,
        model: cfg.grid.model,
        side: cfg.grid.side,
        grid_points,
        budgets: entries,
        gains,
    };
    write_json(&mut summary_file, &summary)
        .and_then(|_| summary_file.flush().map_err(|e| CliError::Io(e.to_string())))
        .map_err(|e| match e {
            CliError::Io(m) => CliError::Io(format!("{}: {m}", summary_path.display())),
            other => other,
        })?;
    Ok(summary)
}

#[derive(Debug, Serialize)]
struct DegradedReport<'a> {
    certificate: Option<&'a DegradednessCertificate>,
    /// `W(1|0)` of a binary witness.
    crossover: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ClnReport {
    direction: ClnDirection,
    statement: &'static str,
    restarts: usize,
    seed: u64,
    best_gap: f64,
    violation: bool,
    witness: Option<crate::channel::CondChannel>,
}

#[derive(Debug, Serialize)]
struct OrderingReport<'a> {
    provenance: Provenance,
    degraded: DegradedReport<'a>,
    cln: ClnReport,
}

pub fn cmd_check_ordering(cfg: &RunConfig, out: &mut impl Write) -> CliResult<()> {
    let (joint, _) = cfg.joint()?;
    let cert = check_degraded(&joint)?;
    let crossover = cert
        .as_ref()
        .and_then(|c| (c.witness.input_size() == 2 && c.witness.output_size() == 2).then(|| c.witness.prob(0, 1)));
    let o = &cfg.ordering;
    let search = ClnSearch {
        direction: o.direction,
        restarts: o.restarts,
        l_size: o.l_size,
        seed: cfg.seed,
        max_iters: o.max_iters,
    };
    let best = cln_search(&joint, &search)?;
    let violation = best.is_violation();
    let report = OrderingReport {
        provenance: Provenance::of(cfg),
        degraded: DegradedReport { certificate: cert.as_ref(), crossover },
        cln: ClnReport {
            direction: o.direction,
            statement: o.direction.label(),
            restarts: o.restarts,
            seed: cfg.seed,
            best_gap: best.gap,
            violation,
            witness: violation.then_some(best.l_channel),
        },
    };
    write_json(out, &report)
}

pub fn cmd_validate(cfg: &RunConfig, out: &mut impl Write) -> CliResult<()> {
    let (joint, _) = cfg.joint()?;
    let rows = validate_terms(&joint, &gs_inner_terms(&joint), cfg.samples, cfg.seed)?;
    write_validation_csv(out, &rows, &Provenance::of(cfg).line()).map_err(|e| CliError::Io(e.to_string()))
}

/// Complete run configuration of the worked example.
pub fn example_config() -> RunConfig {
    RunConfig {
        example: Some(BinaryExampleConfig::reference()),
        system: None,
        grid: SweepGrid::fine(),
        budgets: default_budgets(),
        output: OutputConfig { dir: Some(PathBuf::from("out")), write_points: true },
        seed: 0,
        workers: None,
        envelope: false,
        resolution: DEFAULT_RESOLUTION,
        ordering: OrderingConfig::default(),
        samples: default_samples(),
    }
}

/// Grid consisting of the single auxiliary choice of `ex`.
pub fn point_grid(ex: &BinaryExampleConfig, model: Model, side: Side) -> SweepGrid {
    SweepGrid {
        alpha0: AxisRange::single(ex.alpha0),
        alpha1: AxisRange::single(ex.alpha1),
        p0: AxisRange::single(ex.p0),
        p1: AxisRange::single(ex.p1),
        model,
        side,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_config_round_trips() {
        let cfg = example_config();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back = RunConfig::from_json(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.sha256(), cfg.sha256());
        back.validate().unwrap();
    }

    #[test]
    fn error_paths_are_reported() {
        let text = r#"{"example": {"p_enc": 0.05, "q": {"q00": 0.01, "q01": "x", "q10": 0.03, "q11": 0.06},
            "alpha0": 0.5, "alpha1": 0.5, "p0": 0.1, "p1": 0.1}}"#;
        let CliError::Config(m) = RunConfig::from_json(text).unwrap_err() else { panic!() };
        assert!(m.contains("example.q.q01"), "{m}");
        assert!(m.contains("line 1"), "{m}");
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(RunConfig::from_json(r#"{"budget": [1.0]}"#).is_err());
    }

    #[test]
    fn invalid_channel_rows_rejected_at_parse() {
        let text = r#"{"system": {"factors": {"source": [0.5, 0.5],
            "enc_meas": {"inputs": [{"var": "X", "size": 2}], "outputs": [{"var": "Xt", "size": 2}], "rows": [0.9, 0.2, 0.0, 1.0]},
            "action": {"inputs": [], "outputs": [], "rows": []}, "meas": {"inputs": [], "outputs": [], "rows": []},
            "aux_v": {"inputs": [], "outputs": [], "rows": []}, "aux_u": {"inputs": [], "outputs": [], "rows": []}}}}"#;
        let CliError::Config(m) = RunConfig::from_json(text).unwrap_err() else { panic!() };
        assert!(m.contains("system.factors.enc_meas"), "{m}");
    }

    #[test]
    fn config_checks() {
        let mut c = example_config();
        c.budgets = vec![0.0];
        assert!(c.validate().is_err());
        let mut c = example_config();
        c.ordering.restarts = 0;
        assert!(c.validate().is_err());
        let mut c = example_config();
        c.example = None;
        assert!(c.validate().is_err());
        let mut c = example_config();
        c.grid.p0.end = 0.9;
        assert!(c.validate().is_err());
    }

    #[test]
    fn hash_tracks_changes() {
        let a = example_config();
        let mut b = example_config();
        b.workers = Some(3);
        assert_eq!(a.sha256(), b.sha256());
        b.seed = 1;
        assert_ne!(a.sha256(), b.sha256());
        assert_eq!(a.sha256().len(), 64);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from(Error::Validation(String::new())).exit_code(), 2);
        assert_eq!(CliError::from(Error::Model(String::new())).exit_code(), 3);
        assert_eq!(CliError::from(Error::Domain(String::new())).exit_code(), 3);
        assert_eq!(CliError::from(Error::Io(io::Error::other("x"))).exit_code(), 4);
    }
}

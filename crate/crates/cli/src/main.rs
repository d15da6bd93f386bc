//! `scpn`: run degradation-aware scheduling experiments from the command line.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scpn_core::config::{ConfigError, ScenarioConfig, UniformRange};
use scpn_core::oracle::{self, OracleOptions};
use scpn_core::output::{self, ExperimentRecord, OutputError, RunManifest};
use scpn_core::sched::{GridSpec, HeuristicKind};
use scpn_core::sim::{self, AggregateRow, ExperimentReport, RunOptions, Scenario, SimError, SweepParameter, SweepSpec};

const SEED_ENV: &str = "SCPN_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "scpn",
    version,
    about = "Battery-aware task placement experiments for LEO constellations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compare heuristics on randomly generated tasks for one efficiency regime.
    Regime(RegimeArgs),
    /// Sweep the task workload (log-spaced grid) at a fixed time budget.
    SweepWorkload(SweepWorkloadArgs),
    /// Sweep the time budget (linear grid) at a fixed workload.
    SweepBudget(SweepBudgetArgs),
    /// Check a config file and print the resolved scenario.
    Validate(ValidateArgs),
    /// Run the numerical self-checks on a small seeded instance.
    OracleCheck(OracleArgs),
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Scenario config file (TOML); defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config and the SCPN_SEED variable.
    #[arg(long)]
    seed: Option<u64>,
    /// Integration step in seconds.
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory, created if absent.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Heuristics to run (repeatable or comma-separated): random, dod-first,
    /// min-power-deficit, min-net-energy, grid. Defaults to the first four.
    #[arg(long = "heuristic", value_delimiter = ',')]
    heuristics: Vec<String>,
    /// Start times per satellite searched by the grid baseline.
    #[arg(long, default_value_t = 5)]
    grid_starts: usize,
    /// Frequencies per start time searched by the grid baseline.
    #[arg(long, default_value_t = 5)]
    grid_freqs: usize,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    threads: Option<usize>,
    /// Overwrite an existing run in the output directory.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct RegimeArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Panel efficiency range `lo:hi`; defaults to the configured range.
    #[arg(long)]
    efficiency: Option<String>,
    /// Number of tasks; defaults to the configured count.
    #[arg(long)]
    tasks: Option<usize>,
}

#[derive(Debug, Args)]
struct SweepWorkloadArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Workload grid `lo:hi:n` in cycles, log-spaced.
    #[arg(long, default_value = "1e11:3e12:8")]
    grid: String,
    /// Fixed time budget in seconds.
    #[arg(long, default_value_t = 1500.0)]
    budget: f64,
    /// Arrival times per grid point; defaults to the configured count.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Debug, Args)]
struct SweepBudgetArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Time-budget grid `lo:hi:n` in seconds, linear.
    #[arg(long, default_value = "400:2000:9")]
    grid: String,
    /// Fixed workload in cycles.
    #[arg(long, default_value_t = 1e12)]
    workload: f64,
    /// Arrival times per grid point; defaults to the configured count.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Tasks in the grid-dominance check.
    #[arg(long, default_value_t = 50)]
    tasks: usize,
    /// Random power profiles in the analytic check.
    #[arg(long, default_value_t = 100)]
    profiles: usize,
    #[arg(long, hide = true)]
    inject_sign_flip: bool,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Io(String),
    Invariant(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Io(_) => 2,
            Failure::Invariant(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Io(m) | Failure::Invariant(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::Io(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<OutputError> for Failure {
    fn from(e: OutputError) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(c) => c.into(),
            SimError::Invariant { .. } => Failure::Invariant(e.to_string()),
            SimError::Pool(_) => Failure::Io(e.to_string()),
        }
    }
}

fn invalid(key: &str, reason: impl Into<String>) -> Failure {
    ConfigError::invalid(key, reason).into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let command_line: Vec<String> = std::env::args().collect();
    let result = match cli.command {
        Command::Regime(args) => cmd_regime(args, command_line),
        Command::SweepWorkload(args) => {
            let sweep = SweepRequest {
                parameter: SweepParameter::Workload,
                grid: args.grid,
                fixed: args.budget,
                trials: args.trials,
            };
            cmd_sweep(args.run, sweep, command_line)
        }
        Command::SweepBudget(args) => {
            let sweep = SweepRequest {
                parameter: SweepParameter::Budget,
                grid: args.grid,
                fixed: args.workload,
                trials: args.trials,
            };
            cmd_sweep(args.run, sweep, command_line)
        }
        Command::Validate(args) => cmd_validate(args),
        Command::OracleCheck(args) => cmd_oracle_check(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}

/// Loads the config and applies command-line overrides. Seed precedence:
/// `--seed`, then the config file, then `SCPN_SEED`.
fn resolve_config(args: &ConfigArgs) -> Result<ScenarioConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.simulation.master_seed = Some(seed);
    } else if cfg.simulation.master_seed.is_none() {
        if let Ok(text) = std::env::var(SEED_ENV) {
            let seed = text
                .trim()
                .parse()
                .map_err(|_| invalid(SEED_ENV, format!("`{text}` is not an unsigned integer")))?;
            cfg.simulation.master_seed = Some(seed);
        }
    }
    cfg.simulation.master_seed = Some(cfg.seed());
    if let Some(dt) = args.dt {
        cfg.simulation.integration_dt_s = dt;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_options(args: &RunArgs) -> Result<RunOptions, Failure> {
    let heuristics = if args.heuristics.is_empty() {
        HeuristicKind::SELECTORS.to_vec()
    } else {
        let mut kinds = Vec::new();
        for name in &args.heuristics {
            let kind: HeuristicKind = name.trim().parse().map_err(|e| invalid("heuristic", format!("{e}")))?;
            if !kinds.contains(&kind) {
                kinds.push(kind);
            }
        }
        kinds
    };
    if args.grid_starts == 0 {
        return Err(invalid("grid-starts", "must be at least 1"));
    }
    if args.grid_freqs == 0 {
        return Err(invalid("grid-freqs", "must be at least 1"));
    }
    if args.threads == Some(0) {
        return Err(invalid("threads", "must be at least 1"));
    }
    Ok(RunOptions {
        heuristics,
        grid: GridSpec {
            n_start: args.grid_starts,
            n_freq: args.grid_freqs,
        },
        threads: args.threads,
    })
}

fn parse_number(key: &str, text: &str) -> Result<f64, Failure> {
    text.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| invalid(key, format!("`{text}` is not a finite number")))
}

fn parse_efficiency(text: &str) -> Result<UniformRange, Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi] = parts.as_slice() else {
        return Err(invalid("efficiency", format!("expected `lo:hi`, got `{text}`")));
    };
    let range = UniformRange(parse_number("efficiency", lo)?, parse_number("efficiency", hi)?);
    if !(range.lo() > 0.0 && range.lo() <= range.hi() && range.hi() < 1.0) {
        return Err(invalid("efficiency", format!("need 0 < lo <= hi < 1, got `{text}`")));
    }
    Ok(range)
}

fn parse_grid(text: &str, log: bool) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(invalid("grid", format!("expected `lo:hi:n`, got `{text}`")));
    };
    let lo = parse_number("grid", lo)?;
    let hi = parse_number("grid", hi)?;
    let n: usize = n
        .trim()
        .parse()
        .map_err(|_| invalid("grid", format!("point count `{n}` is not a non-negative integer")))?;
    if n == 0 {
        return Err(invalid("grid", "grid is empty"));
    }
    if !(lo > 0.0 && lo <= hi) {
        return Err(invalid("grid", format!("need 0 < lo <= hi, got `{text}`")));
    }
    Ok(if log {
        sim::log_grid(lo, hi, n)
    } else {
        sim::linear_grid(lo, hi, n)
    })
}

fn cmd_regime(args: RegimeArgs, command_line: Vec<String>) -> Result<(), Failure> {
    let mut cfg = resolve_config(&args.run.config)?;
    let opts = run_options(&args.run)?;
    let efficiency = match &args.efficiency {
        Some(text) => parse_efficiency(text)?,
        None => cfg.satellite.panel_efficiency,
    };
    cfg.satellite.panel_efficiency = efficiency;
    if let Some(n) = args.tasks {
        if n == 0 {
            return Err(invalid("tasks", "must be positive"));
        }
        cfg.tasks.count = n;
    }
    cfg.validate()?;
    output::prepare_dir(&args.run.out, args.run.force)?;

    let span = cfg.simulation.horizon_s + cfg.tasks.budget_s.hi();
    let scenario = Scenario::build(&cfg, span)?;
    let report = sim::run_regime_on(&scenario, cfg.tasks.count, efficiency.midpoint(), &opts)?;
    let experiment = ExperimentRecord::Regime {
        efficiency,
        tasks: cfg.tasks.count,
    };
    finish(
        &args.run,
        &cfg,
        &scenario,
        experiment,
        &opts,
        &report,
        command_line,
        "efficiency",
    )
}

struct SweepRequest {
    parameter: SweepParameter,
    grid: String,
    fixed: f64,
    trials: Option<usize>,
}

fn cmd_sweep(run: RunArgs, request: SweepRequest, command_line: Vec<String>) -> Result<(), Failure> {
    let mut cfg = resolve_config(&run.config)?;
    let opts = run_options(&run)?;
    let values = parse_grid(&request.grid, request.parameter == SweepParameter::Workload)?;
    if let Some(n) = request.trials {
        cfg.simulation.trials_per_point = n;
    }
    let sweep = SweepSpec {
        parameter: request.parameter,
        values,
        trials_per_point: cfg.simulation.trials_per_point,
        fixed: request.fixed,
    };
    sweep.validate()?;
    cfg.validate()?;
    output::prepare_dir(&run.out, run.force)?;

    let scenario = Scenario::build(&cfg, cfg.simulation.horizon_s + sweep.max_budget())?;
    let report = sim::run_sweep_on(&scenario, &sweep, &opts)?;
    let label = match request.parameter {
        SweepParameter::Workload => "workload",
        SweepParameter::Budget => "budget",
    };
    finish(
        &run,
        &cfg,
        &scenario,
        ExperimentRecord::Sweep(sweep),
        &opts,
        &report,
        command_line,
        label,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish(
    run: &RunArgs,
    cfg: &ScenarioConfig,
    scenario: &Scenario,
    experiment: ExperimentRecord,
    opts: &RunOptions,
    report: &ExperimentReport,
    command_line: Vec<String>,
    sweep_label: &str,
) -> Result<(), Failure> {
    let manifest = RunManifest::new(
        command_line,
        cfg,
        experiment,
        &opts.heuristics,
        opts.grid,
        &scenario.constellation,
    );
    output::write_run(&run.out, &report.trials, &report.aggregate, &manifest, run.force)?;
    print_summary(&report.aggregate, sweep_label);
    println!("wrote {}", run.out.display());
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4e}")).unwrap_or_else(|| "-".into())
}

fn print_summary(rows: &[AggregateRow], sweep_label: &str) {
    println!(
        "{:>12}  {:<18} {:>12} {:>12} {:>9} {:>11}",
        sweep_label, "heuristic", "mean", "std", "feasible", "infeasible"
    );
    for r in rows {
        println!(
            "{:>12}  {:<18} {:>12} {:>12} {:>9} {:>11}",
            format!("{:.4e}", r.sweep_value),
            r.heuristic.name(),
            fmt_opt(r.mean_degradation),
            fmt_opt(r.std_degradation),
            r.n_feasible,
            r.n_infeasible
        );
    }
}

fn cmd_validate(args: ValidateArgs) -> Result<(), Failure> {
    let cfg = resolve_config(&args.config)?;
    let constellation = sim::instantiate(&cfg)?;
    print!("{}", cfg.to_toml_string());
    println!("# ok: {} satellites, seed {}", constellation.len(), cfg.seed());
    Ok(())
}

fn cmd_oracle_check(args: OracleArgs) -> Result<(), Failure> {
    let cfg = resolve_config(&args.config)?;
    let opts = OracleOptions {
        seed: cfg.seed(),
        dt_s: cfg.simulation.integration_dt_s,
        profiles: args.profiles,
        tasks: args.tasks,
        inject_sign_flip: args.inject_sign_flip,
    };
    let report = oracle::run_all(&cfg, &opts);
    for c in &report.checks {
        let residual = match (c.residual, c.tolerance) {
            (Some(r), Some(t)) => format!(" residual {r:.3e} (tolerance {t:.1e})"),
            (Some(r), None) => format!(" residual {r:.3e}"),
            _ => String::new(),
        };
        println!(
            "{} {}:{residual} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    match report.first_failure() {
        None => Ok(()),
        Some(c) => Err(Failure::Invariant(format!("check `{}` failed: {}", c.name, c.detail))),
    }
}

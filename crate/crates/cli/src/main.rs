use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use ge_aloha::delay::{average_delay, lambda_max, optimal_q11, SymmetricParams};
use ge_aloha::export::{self, DelayRow};
use ge_aloha::model::Scenario;
use ge_aloha::oracle::grid_union_boundary;
use ge_aloha::sim::{self, SimConfig, SimMode, TraceOptions};
use ge_aloha::stability::{closed_form_boundary, ShapeClass};
use ge_aloha::verify::{self, Budget, Suite};

#[derive(Parser)]
#[command(name = "ge-aloha", version, about = "Two-user slotted ALOHA over Gilbert-Elliott channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stability-region boundary as CSV, with optional baselines and grid oracle.
    Region {
        scenario: PathBuf,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Add TDMA and channel-blind ALOHA boundaries.
        #[arg(long)]
        baselines: bool,
        /// Add the brute-force policy-grid boundary.
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 400)]
        grid_n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override a scenario field, e.g. `--set channel1.p_g2b=0.3`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Delay-optimal transmission probability and delay over an arrival-rate sweep.
    Delay {
        scenario: PathBuf,
        /// `start:end:count`, both ends included.
        #[arg(long, value_parser = parse_sweep)]
        lambda_sweep: Sweep,
        /// Also simulate each stable row.
        #[arg(long)]
        simulate: bool,
        #[arg(long, default_value_t = 2_000_000)]
        horizon: u64,
        #[arg(long, default_value_t = 100_000)]
        warmup: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// One simulation run; prints statistics as JSON.
    Simulate {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Original)]
        mode: Mode,
        #[arg(long, default_value_t = 1_000_000)]
        horizon: u64,
        #[arg(long, default_value_t = 100_000)]
        warmup: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-slot CSV log (one line per slot).
        #[arg(long)]
        event_log: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Runs the acceptance battery and prints a JSON report.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        #[arg(long, value_enum, default_value_t = BudgetArg::Full)]
        budget: BudgetArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Original,
    DominantS1,
    DominantS2,
    SaturatedBoth,
}

impl From<Mode> for SimMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Original => SimMode::Original,
            Mode::DominantS1 => SimMode::DominantS1,
            Mode::DominantS2 => SimMode::DominantS2,
            Mode::SaturatedBoth => SimMode::SaturatedBoth,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Region,
    Delay,
    Sim,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum BudgetArg {
    Quick,
    Full,
}

#[derive(Clone, Copy, Debug)]
struct Sweep {
    start: f64,
    end: f64,
    count: usize,
}

impl Sweep {
    fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.end - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.start + step * i as f64).collect()
    }
}

fn parse_sweep(s: &str) -> Result<Sweep, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err("expected start:end:count".into());
    };
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
    let (start, end) = (num(a)?, num(b)?);
    let count: usize = n.trim().parse().map_err(|e| format!("`{n}`: {e}"))?;
    if count == 0 || !(start.is_finite() && end.is_finite()) || end < start {
        return Err("need finite start <= end and count >= 1".into());
    }
    Ok(Sweep { start, end, count })
}

enum Failure {
    Verify,
    Input(String),
    Write(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verify => 1,
            Failure::Input(_) => 2,
            Failure::Write(_) => 3,
        }
    }
}

impl From<ge_aloha::Error> for Failure {
    fn from(e: ge_aloha::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn write_failure(path: &Path) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| Failure::Write(format!("{}: {e}", path.display()))
}

fn load(path: &Path, overrides: &[String]) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let mut scenario = Scenario::from_json(&text)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    for assignment in overrides {
        scenario = scenario.apply_override(assignment)?;
    }
    Ok(scenario)
}

/// Sends `body` to `out`, or to stdout when no path is given.
fn emit(out: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), Failure> {
    match out {
        Some(path) => {
            let file = File::create(path).map_err(write_failure(path))?;
            let mut w = BufWriter::new(file);
            body(&mut w).and_then(|_| w.flush()).map_err(write_failure(path))
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            body(&mut w).map_err(|e| Failure::Write(format!("stdout: {e}")))
        }
    }
}

/// JSON summaries go to stdout unless stdout already carries the data.
fn summary(out: Option<&Path>, value: serde_json::Value) {
    let text = serde_json::to_string_pretty(&value).expect("summary serializes");
    if out.is_some() {
        println!("{text}");
    } else {
        eprintln!("{text}");
    }
}

fn cmd_region(
    scenario: &Path,
    samples: usize,
    baselines: bool,
    oracle: bool,
    grid_n: usize,
    out: Option<&Path>,
    overrides: &[String],
) -> Result<(), Failure> {
    let params = load(scenario, overrides)?.system();
    let boundary = closed_form_boundary(&params)?;
    let mut rows = export::controlled_rows(&boundary, samples);
    if baselines {
        rows.extend(export::baseline_rows(&params, samples)?);
    }
    if oracle {
        rows.extend(export::grid_rows(&grid_union_boundary(&params, grid_n, samples)?));
    }
    emit(out, |w| export::write_boundary_csv(w, &rows))?;
    summary(
        out,
        json!({
            "shape_class": match boundary.shape_class {
                ShapeClass::ThreePiece => "ThreePiece",
                ShapeClass::Polygon => "Polygon",
            },
            "shape_value": boundary.shape_value,
            "lambda1_max": boundary.lambda1_max,
            "segments": boundary.segments.iter().map(|s| json!({
                "kind": s.kind.label(),
                "start": s.start,
                "end": s.end,
            })).collect::<Vec<_>>(),
            "rows": rows.len(),
        }),
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_delay(
    scenario: &Path,
    sweep: Sweep,
    simulate: bool,
    horizon: u64,
    warmup: u64,
    seed: u64,
    out: Option<&Path>,
    overrides: &[String],
) -> Result<(), Failure> {
    let system = load(scenario, overrides)?.system();
    let base = SymmetricParams::from_system(&system, 0.0)?;
    if simulate && (system.channel1.memory() != 0.0 || system.channel2.memory() != 0.0) {
        eprintln!("note: the analytic delay assumes memoryless channels; simulated values include channel memory");
    }
    let lambdas = sweep.values();
    let rows: Vec<DelayRow> = lambdas
        .par_iter()
        .map(|&lambda| -> Result<DelayRow, Failure> {
            let p = base.with_lambda(lambda)?;
            let mut row = DelayRow {
                lambda,
                q_star: None,
                delay_analytic: None,
                delay_simulated: None,
                ci95: None,
                status: "ok".into(),
            };
            if lambda >= lambda_max(&p) {
                row.status = "unstable".into();
                return Ok(row);
            }
            let q = optimal_q11(&p)?;
            row.q_star = Some(q);
            row.delay_analytic = Some(average_delay(&p, q)?);
            if simulate {
                let mut config = SimConfig::new(
                    system,
                    ge_aloha::model::Policy::good_only(q, q),
                    ge_aloha::model::ArrivalRates::new(lambda, lambda),
                );
                config.horizon = horizon;
                config.warmup = warmup;
                config.seed = seed;
                let stats = sim::run(&config)?;
                row.delay_simulated = stats.mean_delay;
                row.ci95 = stats.delay_ci95;
            }
            Ok(row)
        })
        .collect::<Result<_, _>>()?;
    emit(out, |w| export::write_delay_csv(w, &rows))?;
    summary(
        out,
        json!({
            "pi1": base.pi1,
            "f11": base.f11,
            "lambda_max": lambda_max(&base),
            "rows": rows.len(),
            "unstable_rows": rows.iter().filter(|r| r.status != "ok").count(),
        }),
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    scenario: &Path,
    mode: Mode,
    horizon: u64,
    warmup: u64,
    seed: u64,
    out: Option<&Path>,
    event_log: Option<&Path>,
    overrides: &[String],
) -> Result<(), Failure> {
    let scenario = load(scenario, overrides)?;
    let mut config = SimConfig::new(scenario.system(), scenario.policy(), scenario.arrivals());
    config.mode = mode.into();
    config.horizon = horizon;
    config.warmup = warmup;
    config.seed = seed;
    let opts = TraceOptions { events: event_log.is_some(), windows: 20, ..Default::default() };
    let (stats, trace) = sim::run_traced(&config, opts)?;
    if let (Some(path), Some(events)) = (event_log, trace.events.as_deref()) {
        emit(Some(path), |w| sim::write_event_log(w, events))?;
    }
    let text = serde_json::to_string_pretty(&stats).expect("stats serialize");
    emit(out, |w| writeln!(w, "{text}"))
}

fn cmd_verify(suite: SuiteArg, budget: BudgetArg) -> Result<(), Failure> {
    let suite = match suite {
        SuiteArg::Region => Suite::Region,
        SuiteArg::Delay => Suite::Delay,
        SuiteArg::Sim => Suite::Sim,
        SuiteArg::All => Suite::All,
    };
    let budget = match budget {
        BudgetArg::Quick => Budget::Quick,
        BudgetArg::Full => Budget::Full,
    };
    let report = verify::run_suite(suite, budget);
    for c in &report.criteria {
        eprintln!("{c}");
    }
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("ALOHA_GE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let result = match cli.command {
        Command::Region { scenario, samples, baselines, oracle, grid_n, out, overrides } => {
            cmd_region(&scenario, samples, baselines, oracle, grid_n, out.as_deref(), &overrides)
        }
        Command::Delay { scenario, lambda_sweep, simulate, horizon, warmup, seed, out, overrides } => {
            cmd_delay(&scenario, lambda_sweep, simulate, horizon, warmup, seed, out.as_deref(), &overrides)
        }
        Command::Simulate { scenario, mode, horizon, warmup, seed, out, event_log, overrides } => {
            cmd_simulate(
                &scenario,
                mode,
                horizon,
                warmup,
                seed,
                out.as_deref(),
                event_log.as_deref(),
                &overrides,
            )
        }
        Command::Verify { suite, budget } => cmd_verify(suite, budget),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Verify => eprintln!("error: acceptance criteria failed"),
                Failure::Input(msg) | Failure::Write(msg) => eprintln!("error: {msg}"),
            }
            ExitCode::from(failure.code())
        }
    }
}

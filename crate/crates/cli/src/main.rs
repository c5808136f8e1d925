use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pqv2x_core::bench::{bench_crypto, BenchError, BenchReport, DEFAULT_ITERATIONS};
use pqv2x_core::metrics::report::{emit_report, MetricsReport, EVENTS, REPORT_FILES};
use pqv2x_core::metrics::stats::TimingStats;
use pqv2x_core::{load_scenario, run, BackendKind, RunError, ScenarioConfig};

const EXIT_OK: u8 = 0;
const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_SECURITY: u8 = 3;

#[derive(Parser)]
#[command(name = "pqv2x", version, about = "C-V2X intersection warning testbed with Falcon-512 signatures")]
struct Cli {
    #[arg(long, value_enum, default_value_t = LogLevel::Info, global = true)]
    log_level: LogLevel,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
enum LogLevel {
    Quiet,
    Info,
    Debug,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write the report set.
    Run(RunArgs),
    /// Check a scenario file without running it.
    Validate(ScenarioArgs),
    /// Time signing and verification with the real backend.
    BenchCrypto(BenchArgs),
    /// Run a scenario with attacks and fail if anything adversarial got through.
    AttackSuite(RunArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long)]
    scenario: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
    /// Replace an existing report set.
    #[arg(long)]
    force: bool,
    #[arg(long)]
    no_events: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    iterations: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }
}

struct Log(LogLevel);

impl Log {
    fn info(&self, msg: impl AsRef<str>) {
        if self.0 >= LogLevel::Info {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn debug(&self, msg: impl AsRef<str>) {
        if self.0 >= LogLevel::Debug {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let log = Log(cli.log_level);
    let result = match cli.command {
        Command::Run(args) => cmd_run(&args, &log),
        Command::Validate(args) => cmd_validate(&args, &log),
        Command::BenchCrypto(args) => cmd_bench(&args, &log),
        Command::AttackSuite(args) => cmd_attack_suite(&args, &log),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn backend() -> Result<BackendKind, Failure> {
    BackendKind::from_env().map_err(|e| Failure::runtime(format!("{}: {e}", BackendKind::ENV_VAR)))
}

fn load(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig, Failure> {
    let mut cfg = load_scenario(path).map_err(|e| Failure::config(e.to_string()))?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|e| Failure::config(e.to_string()))?;
    Ok(cfg)
}

fn guard_output(dir: &Path, force: bool) -> Result<(), Failure> {
    if force {
        return Ok(());
    }
    let existing: Vec<&str> = REPORT_FILES
        .iter()
        .chain([EVENTS].iter())
        .copied()
        .filter(|name| dir.join(name).exists())
        .collect();
    if existing.is_empty() {
        Ok(())
    } else {
        Err(Failure::config(format!(
            "{} already holds a report ({}); pass --force to replace it",
            dir.display(),
            existing.join(", ")
        )))
    }
}

fn execute(args: &RunArgs, log: &Log) -> Result<MetricsReport, Failure> {
    let cfg = load(&args.scenario, args.seed)?;
    guard_output(&args.output_dir, args.force)?;
    let kind = backend()?;
    log.debug(format!("backend {}, seed {}, digest {}", kind.as_str(), cfg.seed, cfg.digest()));
    let outcome = run(&cfg, kind).map_err(|e| match e {
        RunError::Config(c) => Failure::config(c.to_string()),
        other => Failure::runtime(other.to_string()),
    })?;
    let events = (!args.no_events).then(|| outcome.events.to_ndjson());
    let written = emit_report(&outcome.report, &args.output_dir, events.as_deref())
        .map_err(|e| Failure::runtime(e.to_string()))?;
    for path in &written {
        log.info(format!("wrote {}", path.display()));
    }
    Ok(outcome.report)
}

fn cmd_run(args: &RunArgs, log: &Log) -> Result<u8, Failure> {
    let report = execute(args, log)?;
    if let Some(pdr) = report.overall_pdr() {
        log.info(format!("overall PDR {pdr:.2}"));
    }
    Ok(EXIT_OK)
}

fn cmd_validate(args: &ScenarioArgs, log: &Log) -> Result<u8, Failure> {
    let cfg = load(&args.scenario, None)?;
    log.info(format!(
        "{}: ok ({} vehicles, {} attacks, digest {})",
        args.scenario.display(),
        cfg.vehicles.len(),
        cfg.attacks.len(),
        cfg.digest()
    ));
    Ok(EXIT_OK)
}

fn fmt_stats(s: &TimingStats) -> (String, String) {
    let std = s.std.map_or_else(|| "none".to_owned(), |d| format!("{:.3}", d.0));
    (format!("{:.3}", s.mean.0), std)
}

fn bench_table(r: &BenchReport) -> String {
    let (sm, ss) = fmt_stats(&r.sign);
    let (vm, vs) = fmt_stats(&r.verify);
    let mut out = format!("{:<24} {:>10} {:>15}\n", "Operation", "Mean (ms)", "Std. dev. (ms)");
    out.push_str(&format!("{:<24} {:>10} {:>15}\n", "Signature generation", sm, ss));
    out.push_str(&format!("{:<24} {:>10} {:>15}\n", "Signature verification", vm, vs));
    out
}

fn cmd_bench(args: &BenchArgs, log: &Log) -> Result<u8, Failure> {
    let kind = backend()?;
    let report = bench_crypto(kind, args.iterations, args.seed).map_err(|e| match e {
        BenchError::TooFewIterations => Failure::config(e.to_string()),
        other => Failure::runtime(other.to_string()),
    })?;
    print!("{}", bench_table(&report));
    log.info(format!(
        "{} x {} iterations, verification key {} bytes, longest signature {} bytes",
        report.backend, report.iterations, report.verification_key_len, report.signature_len_max
    ));
    Ok(EXIT_OK)
}

fn cmd_attack_suite(args: &RunArgs, log: &Log) -> Result<u8, Failure> {
    let report = execute(args, log)?;
    println!("{:<8} {:>9} {:>9} {:>9}", "attack", "injected", "accepted", "rejected");
    for row in &report.attack_rows {
        println!(
            "{:<8} {:>9} {:>9} {:>9}",
            row.kind.as_str(),
            row.injected,
            row.accepted,
            row.rejected
        );
    }
    let accepted = report.adversarial_accepted();
    if accepted > 0 {
        eprintln!("security regression: {accepted} adversarial envelope receptions accepted");
        return Ok(EXIT_SECURITY);
    }
    log.info(format!(
        "all adversarial envelopes rejected; genuine {}/{} accepted",
        report.genuine.accepted, report.genuine.delivered
    ));
    Ok(EXIT_OK)
}

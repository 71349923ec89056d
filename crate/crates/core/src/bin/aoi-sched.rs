use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use aoi_sched::experiment::{
    emit_csv, run_framelength_sweep, run_greedy_comparison, run_property_suite, run_solve,
    run_tradeoff_sweep, Command, ExperimentError, ExperimentSpec,
};

/// Age-of-information scheduling over a Gilbert-Elliott channel.
#[derive(Parser)]
#[command(name = "aoi-sched", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Average AoI against the energy budget.
    Tradeoff(Opts),
    /// Average AoI against the frame length.
    Framelength(Opts),
    /// Optimal policies against the greedy baseline.
    GreedyCompare(Opts),
    /// Structural and numerical property checks; exits 4 on any failure.
    Properties(Opts),
    /// Thresholds of the constrained-optimal policy.
    Solve(Opts),
}

/// Every flag is optional and overrides the config file, which overrides
/// the command defaults. Lists are comma separated.
#[derive(Args, Default)]
struct Opts {
    /// no_sensing, delayed_sensing or both.
    #[arg(long)]
    case: Option<String>,
    #[arg(long = "frame-K", value_name = "K")]
    frame_k: Option<String>,
    #[arg(long)]
    p11: Option<String>,
    #[arg(long)]
    p01: Option<String>,
    #[arg(long)]
    emax: Option<String>,
    #[arg(long = "bound-N", value_name = "N")]
    bound_n: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long = "eps-lambda")]
    eps_lambda: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    warmup: Option<String>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for all cores.
    #[arg(long)]
    workers: Option<String>,
    /// `key = value` file using the flag names as keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// initial or per_slot.
    #[arg(long = "mixture-mode")]
    mixture_mode: Option<String>,
    /// Flip the tie-break of the structured solvers (properties only).
    #[arg(long = "inject-bug")]
    inject_bug: bool,
}

fn build_spec(command: Command, o: &Opts) -> Result<ExperimentSpec, ExperimentError> {
    let mut spec = ExperimentSpec::defaults(command);
    if let Some(path) = &o.config {
        spec.load_file(path)?;
    }
    let settings = [
        ("case", &o.case),
        ("frame_k", &o.frame_k),
        ("p11", &o.p11),
        ("p01", &o.p01),
        ("emax", &o.emax),
        ("bound_n", &o.bound_n),
        ("eps", &o.eps),
        ("eps_lambda", &o.eps_lambda),
        ("horizon", &o.horizon),
        ("seed", &o.seed),
        ("warmup", &o.warmup),
        ("workers", &o.workers),
        ("mixture_mode", &o.mixture_mode),
    ];
    for (key, value) in settings {
        if let Some(v) = value {
            spec.set(key, v)?;
        }
    }
    if let Some(out) = &o.out {
        spec.out = Some(out.clone());
    }
    if o.inject_bug {
        spec.inject_bug = true;
    }
    spec.validate()?;
    Ok(spec)
}

fn run(cli: Cli) -> Result<(), ExperimentError> {
    let (command, opts) = match &cli.command {
        Sub::Tradeoff(o) => (Command::Tradeoff, o),
        Sub::Framelength(o) => (Command::FrameLength, o),
        Sub::GreedyCompare(o) => (Command::GreedyCompare, o),
        Sub::Properties(o) => (Command::Properties, o),
        Sub::Solve(o) => (Command::Solve, o),
    };
    let spec = build_spec(command, opts)?;
    let out = spec.out.as_deref();
    match command {
        Command::Tradeoff => emit_csv(out, &run_tradeoff_sweep(&spec)?),
        Command::FrameLength => emit_csv(out, &run_framelength_sweep(&spec)?),
        Command::GreedyCompare => emit_csv(out, &run_greedy_comparison(&spec)?),
        Command::Solve => emit_csv(out, &run_solve(&spec)?),
        Command::Properties => {
            let rows = run_property_suite(&spec)?;
            emit_csv(out, &rows)?;
            let failed = rows.iter().filter(|r| !r.passed).count();
            if failed > 0 {
                return Err(ExperimentError::PropertyFailure {
                    failed,
                    total: rows.len(),
                });
            }
            Ok(())
        }
    }
}

fn broken_pipe(e: &ExperimentError) -> bool {
    let io = match e {
        ExperimentError::Io(io) => Some(io),
        ExperimentError::Csv(c) => match c.kind() {
            csv::ErrorKind::Io(io) => Some(io),
            _ => None,
        },
        _ => None,
    };
    io.is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        // `aoi-sched ... | head` closing the pipe early is not a failure
        Err(e) if broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("aoi-sched: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use exchlab::config::{parse_config, Config};
use exchlab::report::quad_variant;
use exchlab::runner::{override_seed, run_suite, write_outputs, Mode, SuiteOutcome};
use exchlab::RayonExecutor;
use exchlab_core::engine::{identity_sweep, ExperimentReport};

const CONFIG_ERROR: u8 = 2;
const IDENTITY_TOL: f64 = 1e-12;

#[derive(Parser)]
#[command(name = "exchlab", version, about = "Monte Carlo checks of CLTs for exchangeable arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment and write report.csv (plus optional sample files).
    Run(RunArgs),
    /// Estimate the conditions only; GoF columns are left empty.
    Check(RunArgs),
    /// Check the sign-flip identity on random standard normal rows.
    Identity(IdentityArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Defaults to the config's output_dir.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Overrides the config's master_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
}

#[derive(Args)]
struct IdentityArgs {
    #[arg(long, default_value_t = 10_000)]
    m_max: usize,
    #[arg(long, default_value_t = 10_000)]
    n_rep: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => cmd_run(args, Mode::Run),
        Command::Check(args) => cmd_run(args, Mode::Check),
        Command::Identity(args) => cmd_identity(args),
    }
}

fn executor(threads: Option<u64>) -> Result<RayonExecutor, ExitCode> {
    RayonExecutor::new(threads.map(|t| t as usize)).map_err(|e| {
        eprintln!("error: cannot start thread pool: {e}");
        ExitCode::FAILURE
    })
}

fn load(args: &RunArgs) -> Result<Config, ExitCode> {
    let mut config = parse_config(&args.config).map_err(|e| {
        eprintln!("error: {}: {e}", args.config.display());
        ExitCode::from(CONFIG_ERROR)
    })?;
    if let Some(seed) = args.seed {
        override_seed(&mut config, seed);
    }
    Ok(config)
}

fn cmd_run(args: RunArgs, mode: Mode) -> ExitCode {
    let config = match load(&args) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let exec = match executor(args.threads.or(config.threads.map(|t| t as u64))) {
        Ok(e) => e,
        Err(code) => return code,
    };
    let out_dir = args.out_dir.unwrap_or_else(|| config.output_dir.clone());
    let SuiteOutcome { reports, failure } = run_suite(&config, &exec, mode, |name, cell| {
        let secs = cell.wall_time.map_or(0.0, |t| t.as_secs_f64());
        match &cell.gof {
            Some(g) => eprintln!("{name} m={} ks={} w1={} ({secs:.2}s)", cell.m, g.ks, g.wasserstein1),
            None => eprintln!("{name} m={} ({secs:.2}s)", cell.m),
        }
    });
    if mode == Mode::Check {
        for report in &reports {
            print_verdicts(report);
        }
    }
    if let Err(e) = write_outputs(&out_dir, &reports) {
        eprintln!("error: writing to {}: {e}", out_dir.display());
        return ExitCode::FAILURE;
    }
    match failure {
        Some(f) => {
            eprintln!("error: experiment `{}`: {}", f.experiment, f.error);
            ExitCode::FAILURE
        }
        None => ExitCode::SUCCESS,
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn print_verdicts(report: &ExperimentReport) {
    let spec = &report.spec;
    let variant = quad_variant(spec.statistic);
    for cell in &report.cells {
        let v = cell.conditions.verdicts(&spec.thresholds);
        let cond3 = match variant {
            exchlab_core::checks::QuadVariant::LemmaK => v.cond3_lemma,
            exchlab_core::checks::QuadVariant::TheoremM => v.cond3_theorem,
        };
        let sym = |s: Option<bool>| s.map_or("n/a", verdict);
        println!(
            "{} m={} k={} cond1={} cond2={} cond3[{}]={} exchangeable={} marginal_symmetry={} joint_sign_symmetry={}",
            spec.name,
            cell.m,
            cell.k,
            verdict(v.cond1),
            verdict(v.cond2),
            variant.name(),
            verdict(cond3),
            verdict(v.exchangeable),
            sym(v.marginal_symmetric),
            sym(v.jointly_sign_symmetric),
        );
    }
}

fn cmd_identity(args: IdentityArgs) -> ExitCode {
    if args.m_max < 2 || !args.m_max.is_multiple_of(2) {
        eprintln!("error: --m-max must be even and >= 2");
        return ExitCode::from(CONFIG_ERROR);
    }
    if args.n_rep == 0 {
        eprintln!("error: --n-rep must be >= 1");
        return ExitCode::from(CONFIG_ERROR);
    }
    let exec = match executor(args.threads) {
        Ok(e) => e,
        Err(code) => return code,
    };
    let start = Instant::now();
    let summary = match identity_sweep(args.m_max, args.n_rep, args.seed, &exec) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    println!("rows={}", summary.rows);
    println!("max_residual={:e}", summary.max_residual);
    println!("max_ratio={:e} at m={}", summary.max_ratio, summary.worst_m);
    eprintln!("({:.2}s)", start.elapsed().as_secs_f64());
    if summary.passes(IDENTITY_TOL) {
        println!("PASS");
        ExitCode::SUCCESS
    } else {
        println!("FAIL: residual exceeds {IDENTITY_TOL:e} * (1 + mean|row|)");
        ExitCode::FAILURE
    }
}

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rarepdmp::oracle::cold_standby_exact_p;
use rarepdmp::potentials::PotentialSpec;
use rarepdmp::samplers::{replicated_experiment, Method, MethodConfig, Problem};
use rarepdmp::PdmpModel;
use rarepdmp_cli::config::{ExperimentConfig, Format, Resolved};
use rarepdmp_cli::experiment::{run_all, worker_count};
use rarepdmp_cli::output::{render, write_manifest, Sink};
use rarepdmp_cli::selfcheck::{self, Faults};
use rarepdmp_cli::tables::{self, Budget};

#[derive(Parser)]
#[command(name = "rarepdmp", version, about = "Rare-event estimation for piecewise deterministic Markov processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// Experiment seed; rows without their own seed use seed + row index.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads [default: config, then $RAREPDMP_WORKERS, then all cores].
    #[arg(long)]
    workers: Option<usize>,
    /// Result file [default: config, then results.<format>].
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Print the results on standard output instead of writing a file.
    #[arg(long)]
    stdout: bool,
    /// Record wall times (the output is then no longer reproducible).
    #[arg(long)]
    timing: bool,
    /// No progress on standard error.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML configuration file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run the fast oracle checks.
    Selfcheck {
        #[arg(long, hide = true)]
        inject_kernel_bug: bool,
        #[arg(long, hide = true)]
        rejection_fallback: bool,
    },
    /// Reproduce one of the two benchmark tables at desk scale.
    Tables {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        paper: u8,
        #[arg(long, default_value_t = 10_000)]
        particles: usize,
        #[arg(long)]
        replications: Option<usize>,
        #[command(flatten)]
        out: OutputArgs,
    },
    #[command(hide = true)]
    Oracle {
        #[command(subcommand)]
        which: OracleCommand,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Closed-form failure probability of the cold-standby pair.
    ColdStandby {
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        #[arg(long, default_value_t = 10.0)]
        tf: f64,
    },
    /// Plain Monte Carlo estimate for a configuration's system.
    Pilot {
        config: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config, out } => {
            let (cfg, text) = ExperimentConfig::load(&config)?;
            let explicit: Vec<bool> = cfg.methods.iter().map(|m| m.seed.is_some()).collect();
            let mut res = cfg.resolve(&text).with_context(|| format!("invalid configuration {}", config.display()))?;
            if let Some(seed) = out.seed {
                res.reseed(seed, &explicit);
            }
            execute(&res, &out)
        }
        Command::Tables { paper, particles, replications, out } => {
            let res = tables::table(paper, out.seed.unwrap_or(0), Budget { particles, replications })?;
            let mut out = out;
            if out.out.is_none() && !out.stdout {
                let ext = out.format.unwrap_or_default().extension();
                out.out = Some(PathBuf::from(format!("table{paper}.{ext}")));
            }
            execute(&res, &out)
        }
        Command::Selfcheck { inject_kernel_bug, rejection_fallback } => {
            let checks = selfcheck::run(Faults { kernel_bug: inject_kernel_bug, rejection_fallback });
            let mut failed = 0;
            for c in &checks {
                println!("{} {:<28} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                failed += usize::from(!c.passed);
            }
            println!("{}/{} checks passed", checks.len() - failed, checks.len());
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Oracle { which } => oracle(which),
    }
}

fn execute(res: &Resolved, args: &OutputArgs) -> Result<ExitCode> {
    let format = args.format.unwrap_or(res.output.format);
    let path = args.out.clone().or_else(|| res.output.path.clone()).unwrap_or_else(|| PathBuf::from(format!("results.{}", format.extension())));
    let sink = if args.stdout { None } else { Some(Sink::create(&path)?) };
    let workers = worker_count(args.workers, res.workers)?;
    if !args.quiet {
        eprintln!("{} method rows on {workers} worker(s)", res.methods.len());
    }
    let rows = run_all(res, workers, args.timing, args.quiet)?;
    let bytes = render(&rows, format)?;
    match sink {
        Some(sink) => {
            let manifest = write_manifest(sink.path(), res, &rows)?;
            let shown = sink.path().display().to_string();
            sink.finish(&bytes)?;
            if !args.quiet {
                eprintln!("wrote {shown} and {}", manifest.display());
            }
        }
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn oracle(which: OracleCommand) -> Result<ExitCode> {
    match which {
        OracleCommand::ColdStandby { lambda, tf } => println!("{:.10e}", cold_standby_exact_p(lambda, tf)),
        OracleCommand::Pilot { config, runs, seed } => pilot(&config, runs, seed)?,
    }
    Ok(ExitCode::SUCCESS)
}

/// MC in batches of 10⁴ runs, reporting p and its standard error.
fn pilot(config: &Path, runs: usize, seed: u64) -> Result<()> {
    let (cfg, text) = ExperimentConfig::load(config)?;
    let res = cfg.resolve(&text)?;
    let workers = worker_count(None, res.workers)?;
    let batch = 10_000.min(runs);
    let batches = runs.div_ceil(batch).max(2);
    let flat = PotentialSpec::Constant { value: 1.0 };
    let z0 = res.system.initial_state();
    let problem = Problem::new(&res.system, &flat, &z0);
    let mc = MethodConfig { seed, replications: batches, ..MethodConfig::new(Method::Mc, batch, 1) };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    let rep = pool.install(|| replicated_experiment(&problem, &mc))?;
    let total = (batch * batches) as f64;
    let se = (rep.mean * (1.0 - rep.mean) / total).sqrt();
    println!("{} runs={} p={:.4e} se={se:.2e}", res.kind.table(), batch * batches, rep.mean);
    Ok(())
}

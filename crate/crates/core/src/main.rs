use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use kerr_dg::cli::{cmd_converge, cmd_run, error_exit_code, exit};
use kerr_dg::config::parse_config;
use kerr_dg::constitutive::identity_sweep;
use kerr_dg::driver::ConvergenceAxis;
use kerr_dg::Result;

#[derive(Parser)]
#[command(
    name = "kerr-dg",
    version,
    about = "DG time-domain solver for TE_z Maxwell with Kerr nonlinearity"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Space,
    Time,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration to its final time.
    Run { config: PathBuf },
    /// Refinement study in space or time.
    Converge {
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: Axis,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Random spot checks of the pointwise energy identities.
    CheckIdentities {
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
}

fn load(path: &PathBuf) -> Result<kerr_dg::config::RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg = parse_config(&text)?;
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    println!("# effective configuration");
    for line in cfg.echo().lines() {
        println!("#   {line}");
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<i32> {
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Run { config } => {
            let cfg = load(&config)?;
            let outcome = cmd_run(&cfg, &mut stdout)?;
            if outcome.unstable {
                eprintln!("energy exceeded the stability bound");
            }
            Ok(outcome.exit_code())
        }
        Command::Converge {
            config,
            axis,
            levels,
        } => {
            let cfg = load(&config)?;
            let axis = match axis {
                Axis::Space => ConvergenceAxis::Space,
                Axis::Time => ConvergenceAxis::Time,
            };
            cmd_converge(&cfg, axis, levels, &mut stdout)?;
            Ok(exit::OK)
        }
        Command::CheckIdentities { samples } => {
            let r = identity_sweep(samples, cli.seed);
            println!(
                "{} samples (seed {}): cubic defect {:.3e}, telescoping defect {:.3e}",
                r.samples, cli.seed, r.cubic, r.telescoping
            );
            Ok(if r.cubic.max(r.telescoping) <= 1e-11 {
                exit::OK
            } else {
                exit::NUMERICAL
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                exit::USAGE as u8
            } else {
                exit::OK as u8
            });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(exit::USAGE as u8);
        }
    }
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use quench_core::harness::{self, exit_code_for, Overrides, RunConfig, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "quench", version, about = "Flame quenching experiments on shear flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and write snapshots and the sup-norm history.
    Simulate(Common),
    /// Bracket the critical amplitude A₀(L).
    CriticalAmplitude(Common),
    /// Bracket the largest quenched half-width at fixed amplitude.
    #[command(name = "max-l", alias = "max-L")]
    MaxL(Common),
    /// Critical plateau length, time map, and Dirichlet strip runs.
    CriticalLength(Common),
    /// Monte Carlo checks.
    McVerify(Common),
    /// Critical brackets across the profile scaling α.
    AlphaSweep(Common),
    /// Plateau dichotomy table.
    Dichotomy(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run config; the built-in example for this command if omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Accepted for compatibility; runs are single-threaded.
    #[arg(long)]
    threads: Option<usize>,
    /// Time horizon in units of 1/M.
    #[arg(long)]
    horizon: Option<f64>,
    /// Amplitude cap for searches.
    #[arg(long)]
    cap: Option<f64>,
    /// Print the resolved config and exit without running.
    #[arg(long)]
    print_config: bool,
}

impl Command {
    fn split(&self) -> (&'static str, &Common) {
        match self {
            Self::Simulate(c) => ("simulate", c),
            Self::CriticalAmplitude(c) => ("critical-amplitude", c),
            Self::MaxL(c) => ("max-L", c),
            Self::CriticalLength(c) => ("critical-length", c),
            Self::McVerify(c) => ("mc-verify", c),
            Self::AlphaSweep(c) => ("alpha-sweep", c),
            Self::Dichotomy(c) => ("dichotomy", c),
        }
    }
}

fn load(tag: &str, args: &Common) -> quench_core::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => harness::example_config(tag).expect("every tag has an example"),
    };
    if cfg.experiment.tag() != tag {
        return Err(quench_core::Error::Config(format!(
            "config runs `{}`, not `{tag}`",
            cfg.experiment.tag()
        )));
    }
    Overrides {
        output_dir: args.out.clone(),
        seed: args.seed,
        horizon: args.horizon,
        cap: args.cap,
    }
    .apply(&mut cfg);
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (tag, args) = cli.command.split();
    if let Some(0) = args.threads {
        eprintln!("error: --threads must be positive");
        return ExitCode::from(EXIT_CONFIG as u8);
    }
    let cfg = match load(tag, args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code_for(&e) as u8);
        }
    };
    if args.print_config {
        return match cfg.resolved().and_then(|c| c.to_json()) {
            Ok(s) => {
                println!("{s}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(exit_code_for(&e) as u8)
            }
        };
    }
    match harness::run(&cfg) {
        Ok(report) => {
            for name in &report.outputs {
                println!("{}", cfg.output_dir.join(name).display());
            }
            println!("{}", cfg.output_dir.join("manifest.json").display());
            if report.exit_code != 0 {
                eprintln!("status: {:?}", report.status);
            }
            ExitCode::from(report.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}

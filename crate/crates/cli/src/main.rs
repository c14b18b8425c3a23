use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use v2v_sf::experiments::{
    run_named, run_sweep, ExperimentConfig, ExperimentOutput, NamedExperiment,
};
use v2v_sf::Error;

const SEED_ENV: &str = "V2V_SF_SEED";

#[derive(Parser)]
#[command(
    name = "v2v-sf",
    version,
    about = "Signal-fraction analysis of inter-lane V2V links"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// SF CCDF: analytic, Monte Carlo and Poisson baseline for both antenna cases.
    Fig1(FigureArgs),
    /// Small- and large-threshold approximations with the relative-error probe.
    Fig2(FigureArgs),
    /// SF CCDF versus transmit power with the noise-free ceiling.
    Fig3(FigureArgs),
    /// Single-key parameter sweep driven by a config file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct FigureArgs {
    /// Base seed; falls back to $V2V_SF_SEED, then to the built-in default.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Parameter override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config { .. } | Error::Parameter { .. } | Error::Io(_) | Error::Json(_) => 2,
        Error::Numerical { .. } | Error::Sampling(_) | Error::Contract(_) => 3,
    }
}

fn figure_config(args: &FigureArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::default();
    for o in &args.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(seed) = args.seed {
        cfg.set("seed", &seed.to_string())?;
    } else if !cfg.is_explicit("seed") {
        if let Ok(env) = std::env::var(SEED_ENV) {
            cfg.set("seed", env.trim()).map_err(|_| Error::Config {
                line: 0,
                message: format!("{SEED_ENV} must be an unsigned integer, got `{env}`"),
            })?;
        }
    }
    if let Some(trials) = args.trials {
        cfg.set("trials", &trials.to_string())?;
    }
    Ok(cfg)
}

fn report(output: &ExperimentOutput, dir: &std::path::Path) -> Result<(), Error> {
    for path in output.write_to(dir)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Fig1(a) => report(
            &run_named(NamedExperiment::Fig1, &figure_config(&a)?)?,
            &a.out,
        ),
        Command::Fig2(a) => report(
            &run_named(NamedExperiment::Fig2, &figure_config(&a)?)?,
            &a.out,
        ),
        Command::Fig3(a) => report(
            &run_named(NamedExperiment::Fig3, &figure_config(&a)?)?,
            &a.out,
        ),
        Command::Sweep { config, out } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            report(&run_sweep(&cfg)?, &out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

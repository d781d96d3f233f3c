//! `sdc`: design, certify and simulate delay-compensated boundary feedback.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Failure, SimFlags};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "sdc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the truncation and controllability assumptions.
    Validate(Common),
    /// Place the closed-loop spectrum and report `K`, `A_cl` and `P`.
    Design(Common),
    /// Compute the Lyapunov/ISS constants and the small-gain margin.
    Certify(Common),
    /// Simulate the closed loop and write the trajectory CSV.
    Simulate(SimArgs),
    /// Run the whole pipeline on the built-in case study.
    CaseStudy(CaseArgs),
}

#[derive(Args)]
struct Common {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Directory for the written artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct Flags {
    /// Drop the external input of the ODE.
    #[arg(long)]
    no_disturbance: bool,
    /// Simulate with `K = 0`.
    #[arg(long)]
    open_loop: bool,
}

impl From<&Flags> for SimFlags {
    fn from(f: &Flags) -> Self {
        SimFlags { no_disturbance: f.no_disturbance, open_loop: f.open_loop }
    }
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args)]
struct CaseArgs {
    /// Directory for the written artifacts.
    #[arg(long, default_value = "case_study")]
    out: PathBuf,
    #[command(flatten)]
    flags: Flags,
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Validate(c) => commands::cmd_validate(&RunConfig::load(&c.config)?, &c.out),
        Command::Design(c) => commands::cmd_design(&RunConfig::load(&c.config)?, &c.out),
        Command::Certify(c) => commands::cmd_certify(&RunConfig::load(&c.config)?, &c.out),
        Command::Simulate(s) => {
            commands::cmd_simulate(&RunConfig::load(&s.common.config)?, &s.common.out, (&s.flags).into())
        }
        Command::CaseStudy(s) => commands::cmd_case_study(&RunConfig::case_study(), &s.out, (&s.flags).into()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SDC_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

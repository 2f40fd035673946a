//! Command-line front end for `fbm-stm-core`: TOML run configs, a rayon path
//! executor, CSV emission and the subcommand implementations.

pub mod app;
pub mod commands;
pub mod config;
pub mod error;
pub mod exec;
pub mod output;

use app::{Cli, Command, RunArgs};
use config::RunConfig;
use error::CliResult;
use exec::RayonExecutor;

/// What a subcommand prints and whether it succeeded.
pub struct Outcome {
    pub stdout: String,
    /// Non-zero only for a failing self-test.
    pub exit_code: u8,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self { stdout, exit_code: 0 }
    }
}

fn load(args: &RunArgs) -> CliResult<RunConfig> {
    RunConfig::load_with_overrides(args.config.as_deref(), &args.all_overrides())
}

pub fn run(cli: &Cli) -> CliResult<Outcome> {
    match &cli.command {
        Command::SampleFbm(args) | Command::Simulate(args) if args.dump_config => {
            Ok(Outcome::ok(load(args)?.to_toml_string()))
        }
        Command::Scan(s) if s.run.dump_config => Ok(Outcome::ok(load(&s.run)?.to_toml_string())),
        Command::SampleFbm(args) => {
            let cfg = load(args)?;
            cfg.sampling()?;
            let exec = RayonExecutor::from_env(cli.threads)?;
            Ok(Outcome::ok(commands::sample_fbm::run(&cfg, &exec)?.stdout))
        }
        Command::Simulate(args) => {
            let cfg = load(args)?;
            cfg.simulation()?;
            let exec = RayonExecutor::from_env(cli.threads)?;
            let report = commands::simulate::run(&cfg, &exec)?;
            Ok(Outcome::ok(report.record))
        }
        Command::Scan(s) => {
            let cfg = load(&s.run)?;
            let grid = commands::scan::ScanGrid {
                theta: s.theta.clone(),
                hurst: s.hurst.clone(),
                kappa: s.kappa.clone(),
                dt: s.dt.clone(),
            };
            let exec = RayonExecutor::from_env(cli.threads)?;
            Ok(Outcome::ok(commands::scan::run(&cfg, &grid, &exec)?))
        }
        Command::Theory(cmd) => Ok(Outcome::ok(commands::theory::run(cmd)?)),
        Command::Special(cmd) => Ok(Outcome::ok(commands::special::run(cmd)?)),
        Command::Selftest => {
            let exec = RayonExecutor::from_env(cli.threads)?;
            let report = commands::selftest::run(&exec)?;
            let mut stdout = report.lines.join("\n");
            stdout.push('\n');
            Ok(Outcome {
                stdout,
                exit_code: if report.passed { 0 } else { 3 },
            })
        }
    }
}

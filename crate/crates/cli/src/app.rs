use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::Kappa;

#[derive(Debug, Parser)]
#[command(
    name = "fbm-stm",
    version,
    about = "Stochastic theta method for fBm-driven SDEs: simulation and stability analysis"
)]
pub struct Cli {
    /// Worker threads (0 = automatic); overrides FBM_STM_THREADS.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample fBm increments, write CSVs and print summary statistics.
    SampleFbm(RunArgs),
    /// Run an STM ensemble and classify its mean-square behaviour.
    Simulate(RunArgs),
    /// Sweep theta / hurst / kappa / dt and tabulate verdicts.
    Scan(ScanArgs),
    /// Stability theorems and thresholds.
    #[command(subcommand)]
    Theory(TheoryCmd),
    /// Special functions.
    #[command(subcommand)]
    Special(SpecialCmd),
    /// Quick internal consistency checks.
    Selftest,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(short, long)]
    pub config: Option<PathBuf>,

    /// Override a config value, e.g. `--set scheme.theta=0.6`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Shortcut for `--set output.directory=DIR`.
    #[arg(short, long)]
    pub output: Option<PathBuf>,

    /// Print the effective configuration and exit.
    #[arg(long)]
    pub dump_config: bool,
}

impl RunArgs {
    pub fn all_overrides(&self) -> Vec<String> {
        let mut o = self.overrides.clone();
        if let Some(dir) = &self.output {
            o.push(format!("output.directory={}", toml_string(&dir.display().to_string())));
        }
        o
    }
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub run: RunArgs,

    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub theta: Vec<f64>,

    #[arg(long, value_delimiter = ',')]
    pub hurst: Vec<f64>,

    /// Numbers or `2H`.
    #[arg(long, value_delimiter = ',')]
    pub kappa: Vec<Kappa>,

    #[arg(long, value_delimiter = ',')]
    pub dt: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Convention {
    /// `dX = -lambda t^{kappa-1} X dt + ...`
    #[default]
    Canonical,
    /// `dX = lambda t^{kappa-1} X dt + ...`
    PlusLambda,
}

#[derive(Debug, Subcommand)]
pub enum TheoryCmd {
    /// Theorem classification for the linear test equation.
    Classify {
        #[arg(long)]
        kappa: Kappa,
        #[arg(long)]
        hurst: f64,
        #[arg(long)]
        theta: f64,
        #[arg(long, allow_negative_numbers = true)]
        lambda: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        mu: Option<f64>,
        /// Step size, used when hurst = 0.5.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, value_enum, default_value_t)]
        convention: Convention,
    },
    /// Moment-order threshold m_p and the matching theta.
    RemarkP { p: u32 },
    /// Brownian-noise step-size threshold.
    Brownian {
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        /// Squared diffusion coefficient.
        #[arg(long)]
        mu2: f64,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
    },
    /// Guarantee for nonlinear equations given their constants.
    Theorem2 {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        lambda_bar: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        hurst: f64,
    },
    /// Mean-square stability of the exact linear solution.
    Continuous {
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long, allow_negative_numbers = true)]
        mu: f64,
        #[arg(long)]
        kappa: Kappa,
        #[arg(long)]
        hurst: f64,
        #[arg(long, value_enum, default_value_t)]
        convention: Convention,
    },
    /// Log of the Stirling envelope after n steps.
    Envelope {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        theta: f64,
    },
    /// Variance of a signed sum of the STM noise terms.
    SigmaTilde {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long, allow_negative_numbers = true)]
        mu: f64,
        #[arg(long)]
        kappa: Kappa,
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        hurst: f64,
        /// Comma-separated signs in {-1, 0, 1}; defaults to all ones.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        signs: Vec<i8>,
    },
}

#[derive(Debug, Subcommand)]
pub enum SpecialCmd {
    /// Kummer confluent hypergeometric function Phi(a, b, z).
    #[command(allow_negative_numbers = true)]
    Phi { a: f64, b: f64, z: f64 },
    /// Parabolic cylinder function U(a, z).
    #[command(allow_negative_numbers = true)]
    U { a: f64, z: f64 },
    /// ln |Gamma(x)|.
    #[command(allow_negative_numbers = true)]
    Lgamma { x: f64 },
    /// E[X^order] for X ~ N(mean, std^2).
    Moment {
        #[arg(long, allow_negative_numbers = true)]
        mean: f64,
        #[arg(long)]
        std: f64,
        #[arg(long)]
        order: u32,
    },
}

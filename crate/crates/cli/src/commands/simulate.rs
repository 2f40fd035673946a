use fbm_stm_core::fbm::FbmSampler;
use fbm_stm_core::lab::{classify, run_ensemble, MeanSquareSeries, PathExecutor, StabilityVerdict};
use fbm_stm_core::models::exact_log_mean_square_linear;
use fbm_stm_core::stm::{simulate_linear, simulate_nonlinear, ThetaScheme};
use fbm_stm_core::theory::{
    brownian_classify, continuous_stability, theorem1_classify, theorem2_classify, TheoremVerdict,
};

use crate::config::{ModelSpec, RunConfig, SimulationSetup};
use crate::error::CliResult;
use crate::output::{exact_mean_square_csv, gnuplot_script, mean_square_csv, trajectory_csv, write_file, Record};

/// Trajectory CSVs are written for this many leading streams.
pub const MAX_TRAJECTORY_FILES: usize = 4;

/// Theorem-based expectation for a model and scheme.
pub fn theory_for(model: &ModelSpec, scheme: &ThetaScheme, hurst: f64) -> TheoremVerdict {
    match model {
        ModelSpec::Linear(m) if hurst == 0.5 => brownian_classify(m.lambda, m.mu, m.kappa, scheme.theta, scheme.dt),
        ModelSpec::Linear(m) => theorem1_classify(m.kappa, hurst, scheme.theta),
        ModelSpec::Nonlinear(m) => theorem2_classify(&m.constants, scheme.theta, hurst),
    }
}

pub fn continuous_for(model: &ModelSpec, hurst: f64) -> bool {
    match model {
        ModelSpec::Linear(m) => continuous_stability(m.lambda, m.mu, m.kappa, hurst),
        ModelSpec::Nonlinear(m) => continuous_stability(m.constants.lambda, m.constants.mu, m.constants.kappa, hurst),
    }
}

pub fn ensemble<E: PathExecutor>(setup: &SimulationSetup, exec: &E) -> CliResult<MeanSquareSeries> {
    let s = &setup.sampling;
    Ok(match &setup.model {
        ModelSpec::Linear(m) => run_ensemble(exec, m, &setup.scheme, &s.grid, &s.ensemble)?,
        ModelSpec::Nonlinear(m) => run_ensemble(exec, m, &setup.scheme, &s.grid, &s.ensemble)?,
    })
}

pub struct SimulationReport {
    pub series: MeanSquareSeries,
    pub verdict: StabilityVerdict,
    pub theory: TheoremVerdict,
    pub continuous_stable: bool,
    pub mean_square_csv: String,
    pub exact_csv: Option<String>,
    pub record: String,
}

/// Runs the ensemble and renders every output without touching the disk.
pub fn simulate<E: PathExecutor>(setup: &SimulationSetup, exec: &E) -> CliResult<SimulationReport> {
    let series = ensemble(setup, exec)?;
    let verdict = classify(&series, setup.slope_tol, setup.drop_margin)?;
    let hurst = setup.sampling.grid.hurst();
    let theory = theory_for(&setup.model, &setup.scheme, hurst);
    let continuous_stable = continuous_for(&setup.model, hurst);
    let exact_csv = match &setup.model {
        ModelSpec::Linear(m) => {
            let mut rows = Vec::with_capacity(series.len());
            for (i, &k) in series.steps.iter().enumerate() {
                let t = series.t(i);
                rows.push((k, t, exact_log_mean_square_linear(m, hurst, t)?));
            }
            Some(exact_mean_square_csv(&rows))
        }
        ModelSpec::Nonlinear(_) => None,
    };
    let mut rec = Record::new();
    rec.empirical(&verdict, &series)
        .theory(&theory)
        .push("continuous_stable", continuous_stable);
    Ok(SimulationReport {
        mean_square_csv: mean_square_csv(&series),
        record: rec.render(),
        series,
        verdict,
        theory,
        continuous_stable,
        exact_csv,
    })
}

pub fn run<E: PathExecutor>(cfg: &RunConfig, exec: &E) -> CliResult<SimulationReport> {
    let setup = cfg.simulation()?;
    let report = simulate(&setup, exec)?;
    let dir = &setup.sampling.output_dir;
    write_file(dir, "mean_square.csv", &report.mean_square_csv)?;
    if let Some(exact) = &report.exact_csv {
        write_file(dir, "exact_mean_square.csv", exact)?;
    }
    write_file(dir, "verdict.txt", &report.record)?;
    let e = &setup.sampling.ensemble;
    let sampler = FbmSampler::new(setup.sampling.grid, e.sampler)?;
    for p in 0..e.n_paths.min(MAX_TRAJECTORY_FILES) {
        let block = sampler.sample(e.master_seed, p as u64);
        let traj = match &setup.model {
            ModelSpec::Linear(m) => simulate_linear(m, &setup.scheme, &block)?,
            ModelSpec::Nonlinear(m) => simulate_nonlinear(m, &setup.scheme, &block)?,
        };
        write_file(dir, &format!("trajectory_{p}.csv"), &trajectory_csv(&traj))?;
    }
    let title = format!(
        "theta={} dt={} H={} kappa={}",
        setup.scheme.theta,
        setup.scheme.dt,
        setup.sampling.grid.hurst(),
        setup.model.kappa()
    );
    write_file(dir, "plot.gp", &gnuplot_script(&title, report.exact_csv.is_some()))?;
    Ok(report)
}

use std::f64::consts::{E, PI};

use fbm_stm_core::fbm::{FbmGrid, SamplerMethod};
use fbm_stm_core::lab::{product_moment_exact, run_ensemble, EnsembleConfig, PathExecutor, Sequential};
use fbm_stm_core::models::LinearTestModel;
use fbm_stm_core::special::{kummer_phi, log_gamma, parabolic_u};
use fbm_stm_core::stm::{alpha_n, beta_n, ThetaScheme};
use fbm_stm_core::theory::{brownian_dt_threshold, theorem1_threshold};

use crate::commands::sample_fbm::increment_statistics;
use crate::error::CliResult;

pub struct SelftestReport {
    pub lines: Vec<String>,
    pub passed: bool,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// A handful of fast identities plus a small determinism check against the
/// sequential executor.
pub fn run<E: PathExecutor>(exec: &E) -> CliResult<SelftestReport> {
    let mut checks: Vec<(&str, bool)> = Vec::new();

    checks.push(("kummer_phi(1,1,1) = e", rel(kummer_phi(1.0, 1.0, 1.0)?, E) < 1e-14));

    // U/Phi identity at a = 0.3, z = 1.2
    let (a, z) = (0.3, 1.2);
    let lhs = kummer_phi(a / 2.0 + 0.25, 0.5, z * z / 2.0)?;
    let pref = (2f64).powf(a / 2.0 - 0.75) * log_gamma(a / 2.0 + 0.75)?.exp() * (z * z / 4.0).exp() / PI.sqrt();
    let rhs = pref * (parabolic_u(a, z)? + parabolic_u(a, -z)?);
    checks.push(("parabolic U / Kummer identity", rel(lhs, rhs) < 1e-7));

    checks.push((
        "theta threshold 0.769011",
        (theorem1_threshold() - 0.769_010_532_948_973).abs() < 1e-12,
    ));
    checks.push((
        "brownian dt* = 4/9",
        brownian_dt_threshold(3.0, 2f64.sqrt(), 0.0).is_some_and(|d| (d - 4.0 / 9.0).abs() < 1e-12),
    ));

    let grid = FbmGrid::new(0.7, 0.5, 64)?;
    let stats = increment_statistics(exec, &grid, SamplerMethod::CirculantEmbedding, 2000, 11, &[1])?;
    checks.push((
        "fGn variance and lag-1 covariance",
        stats.variance.z_score() < 4.0 && stats.lag_covariance[0].1.z_score() < 4.0,
    ));

    let model = LinearTestModel::new(9.0, 2.0, 1.4, 3.0)?;
    let scheme = ThetaScheme::new(0.8, 0.5, 64)?;
    let one = product_moment_exact(1, &model, &scheme, 0.7)?;
    let (a0, b0) = (alpha_n(0, 0.8, 9.0, 1.4, 0.5)?, beta_n(0, 0.8, 9.0, 2.0, 1.4, 0.5)?);
    checks.push((
        "one-step second moment",
        rel(one, a0 * a0 + b0 * b0 * 0.5f64.powf(1.4)) < 1e-12,
    ));

    let config = EnsembleConfig::new(200, 3, 1, 0.2)?;
    let par = run_ensemble(exec, &model, &scheme, &grid, &config)?;
    let seq = run_ensemble(&Sequential, &model, &scheme, &grid, &config)?;
    checks.push(("ensemble independent of thread count", par == seq));

    let passed = checks.iter().all(|(_, ok)| *ok);
    let lines = checks
        .iter()
        .map(|(name, ok)| format!("{} {name}", if *ok { "PASS" } else { "FAIL" }))
        .collect();
    Ok(SelftestReport { lines, passed })
}

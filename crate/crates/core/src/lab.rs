//! Monte Carlo ensembles of STM paths, reduced to `ln E|X_n|^2` in the log
//! domain, plus a finite-horizon stability classifier and exact small-`n`
//! second moments.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fbm::{increment_covariance, FbmGrid, FbmSampler, SamplerMethod};
use crate::linalg::linear_fit;
use crate::models::{LinearTestModel, NonlinearModel};
use crate::rng::{standard_normal, stream_rng};
use crate::special::{gaussian_raw_moment, GaussianScalar};
use crate::stats::LogPowerSums;
use crate::stm::{alpha_n, beta_n, simulate_nonlinear_with, StepFactors, ThetaScheme};

/// Paths per work item. Fixed so that the reduction tree does not depend on
/// how many workers execute the blocks.
pub const BLOCK_PATHS: usize = 64;
pub const DEFAULT_SLOPE_TOL: f64 = 0.0;
pub const DEFAULT_DROP_MARGIN: f64 = 2.0;
pub const MIN_FIT_POINTS: usize = 10;
pub const PRODUCT_MOMENT_CAP: usize = 10;

/// Runs independent work items and returns their results in index order.
pub trait PathExecutor {
    fn map_blocks<T, F>(&self, n_blocks: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Single-threaded executor.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl PathExecutor for Sequential {
    fn map_blocks<T, F>(&self, n_blocks: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n_blocks).map(f).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub n_paths: usize,
    pub master_seed: u64,
    pub record_stride: usize,
    pub burn_in_fraction: f64,
    pub sampler: SamplerMethod,
}

impl EnsembleConfig {
    pub fn new(n_paths: usize, master_seed: u64, record_stride: usize, burn_in_fraction: f64) -> Result<Self> {
        let cfg = Self {
            n_paths,
            master_seed,
            record_stride,
            burn_in_fraction,
            sampler: default_sampler(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Stride `max(1, n_steps / 1024)` and 20% burn-in.
    pub fn with_defaults(n_paths: usize, master_seed: u64, n_steps: usize) -> Result<Self> {
        Self::new(n_paths, master_seed, default_stride(n_steps), 0.2)
    }

    pub fn with_sampler(mut self, sampler: SamplerMethod) -> Self {
        self.sampler = sampler;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 2 {
            return Err(Error::Domain("n_paths must be at least 2"));
        }
        if self.record_stride == 0 {
            return Err(Error::Domain("record_stride must be positive"));
        }
        if !(0.0..0.5).contains(&self.burn_in_fraction) {
            return Err(Error::Domain("burn_in_fraction must lie in [0, 0.5)"));
        }
        Ok(())
    }
}

pub fn default_stride(n_steps: usize) -> usize {
    (n_steps / 1024).max(1)
}

/// Circulant embedding when an FFT is available, exact Cholesky otherwise.
pub fn default_sampler() -> SamplerMethod {
    if cfg!(feature = "std") {
        SamplerMethod::CirculantEmbedding
    } else {
        SamplerMethod::ExactCholesky
    }
}

/// Steps `0, s, 2s, ...` and always the final step.
pub fn recorded_steps(n_steps: usize, stride: usize) -> Vec<usize> {
    let mut steps: Vec<usize> = (0..=n_steps).step_by(stride).collect();
    if *steps.last().unwrap() != n_steps {
        steps.push(n_steps);
    }
    steps
}

fn slot_of(n: usize, n_steps: usize, stride: usize, n_slots: usize) -> Option<usize> {
    if n.is_multiple_of(stride) {
        Some(n / stride)
    } else if n == n_steps {
        Some(n_slots - 1)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanSquareSeries {
    pub steps: Vec<usize>,
    pub dt: f64,
    pub log_mean_square: Vec<f64>,
    pub log_std_error: Vec<f64>,
    pub n_paths: usize,
    pub diverged_fraction: f64,
    pub burn_in_fraction: f64,
}

impl MeanSquareSeries {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn t(&self, i: usize) -> f64 {
        self.steps[i] as f64 * self.dt
    }
}

/// Model driven through an ensemble.
#[derive(Debug, Clone, Copy)]
pub enum EnsembleModel<'a> {
    Linear(&'a LinearTestModel),
    Nonlinear(&'a NonlinearModel),
}

impl<'a> From<&'a LinearTestModel> for EnsembleModel<'a> {
    fn from(m: &'a LinearTestModel) -> Self {
        EnsembleModel::Linear(m)
    }
}

impl<'a> From<&'a NonlinearModel> for EnsembleModel<'a> {
    fn from(m: &'a NonlinearModel) -> Self {
        EnsembleModel::Nonlinear(m)
    }
}

struct BlockSums {
    sums: Vec<LogPowerSums>,
    diverged: usize,
}

/// Shared driver: `path(increments, out)` fills `out[slot] = ln X^2` at each
/// recorded slot and reports whether the path diverged.
fn accumulate<E, P>(
    exec: &E,
    sampler: &FbmSampler,
    config: &EnsembleConfig,
    n_slots: usize,
    path: P,
) -> Result<(Vec<LogPowerSums>, usize)>
where
    E: PathExecutor,
    P: Fn(&[f64], &mut [f64]) -> Result<bool> + Sync + Send,
{
    let n_steps = sampler.grid().n_steps();
    let n_blocks = config.n_paths.div_ceil(BLOCK_PATHS);
    let blocks = exec.map_blocks(n_blocks, |b| -> Result<BlockSums> {
        let mut acc = BlockSums {
            sums: vec![LogPowerSums::default(); n_slots],
            diverged: 0,
        };
        let mut increments = vec![0.0; n_steps];
        let mut logs = vec![0.0; n_slots];
        let end = ((b + 1) * BLOCK_PATHS).min(config.n_paths);
        for p in b * BLOCK_PATHS..end {
            let stream_id = p as u64;
            let mut rng = stream_rng(config.master_seed, stream_id);
            sampler.sample_with(&mut rng, &mut increments);
            let diverged = path(&increments, &mut logs).map_err(|e| Error::PathFailure {
                stream_id,
                source: alloc::boxed::Box::new(e),
            })?;
            if diverged {
                acc.diverged += 1;
            }
            for (s, &l) in acc.sums.iter_mut().zip(&logs) {
                s.push(l);
            }
        }
        Ok(acc)
    });
    let mut total = vec![LogPowerSums::default(); n_slots];
    let mut diverged = 0;
    for block in blocks {
        let block = block?;
        for (t, s) in total.iter_mut().zip(&block.sums) {
            t.merge(s);
        }
        diverged += block.diverged;
    }
    Ok((total, diverged))
}

fn finish(
    steps: Vec<usize>,
    dt: f64,
    sums: Vec<LogPowerSums>,
    diverged: usize,
    config: &EnsembleConfig,
) -> MeanSquareSeries {
    MeanSquareSeries {
        steps,
        dt,
        log_mean_square: sums.iter().map(LogPowerSums::log_mean).collect(),
        log_std_error: sums.iter().map(LogPowerSums::log_std_error).collect(),
        n_paths: config.n_paths,
        diverged_fraction: diverged as f64 / config.n_paths as f64,
        burn_in_fraction: config.burn_in_fraction,
    }
}

/// `ln((1/P) sum_p X_n(p)^2)` at the recorded steps. Paths run in blocks of
/// [`BLOCK_PATHS`] on independent streams and are merged in block order, so
/// the result is bit-identical for any executor.
pub fn run_ensemble<'a, E: PathExecutor>(
    exec: &E,
    model: impl Into<EnsembleModel<'a>>,
    scheme: &ThetaScheme,
    fbm: &FbmGrid,
    config: &EnsembleConfig,
) -> Result<MeanSquareSeries> {
    config.validate()?;
    scheme.check_grid(fbm)?;
    let sampler = FbmSampler::new(*fbm, config.sampler)?;
    let n = scheme.n_steps;
    let stride = config.record_stride;
    let steps = recorded_steps(n, stride);
    let n_slots = steps.len();
    let (sums, diverged) = match model.into() {
        EnsembleModel::Linear(m) => {
            let factors = StepFactors::new(m, scheme)?;
            accumulate(exec, &sampler, config, n_slots, |inc, out| {
                factors.propagate(m.x0, inc, |k, s| {
                    if let Some(slot) = slot_of(k, n, stride, n_slots) {
                        out[slot] = s.log_square();
                    }
                });
                Ok(false)
            })?
        }
        EnsembleModel::Nonlinear(m) => accumulate(exec, &sampler, config, n_slots, |inc, out| {
            let mut diverged = false;
            simulate_nonlinear_with(m, scheme, inc, |k, x| {
                if x.is_infinite() {
                    diverged = true;
                }
                if let Some(slot) = slot_of(k, n, stride, n_slots) {
                    out[slot] = if x == 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        2.0 * x.abs().ln()
                    };
                }
            })?;
            Ok(diverged)
        })?,
    };
    Ok(finish(steps, scheme.dt, sums, diverged, config))
}

/// Same reduction applied to the exact linear solution
/// `X(t) = x0 exp(-lambda t^kappa + mu B^H(t))` along sampled fBm paths.
pub fn run_exact_ensemble<E: PathExecutor>(
    exec: &E,
    model: &LinearTestModel,
    fbm: &FbmGrid,
    config: &EnsembleConfig,
) -> Result<MeanSquareSeries> {
    config.validate()?;
    let sampler = FbmSampler::new(*fbm, config.sampler)?;
    let n = fbm.n_steps();
    let stride = config.record_stride;
    let steps = recorded_steps(n, stride);
    let n_slots = steps.len();
    let log_x0_sq = 2.0 * model.x0.abs().ln();
    let (sums, diverged) = accumulate(exec, &sampler, config, n_slots, |inc, out| {
        let mut b = 0.0;
        for k in 0..=n {
            if k > 0 {
                b += inc[k - 1];
            }
            if let Some(slot) = slot_of(k, n, stride, n_slots) {
                let t = fbm.t(k);
                out[slot] = log_x0_sq + 2.0 * (-model.lambda * t.powf(model.kappa) + model.mu * b);
            }
        }
        Ok(false)
    })?;
    Ok(finish(steps, fbm.dt(), sums, diverged, config))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityLabel {
    Stable,
    Unstable,
    Inconclusive,
}

impl StabilityLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            StabilityLabel::Stable => "Stable",
            StabilityLabel::Unstable => "Unstable",
            StabilityLabel::Inconclusive => "Inconclusive",
        }
    }
}

impl core::fmt::Display for StabilityLabel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityVerdict {
    pub label: StabilityLabel,
    /// Fitted `d ln E|X_n|^2 / dn` past burn-in.
    pub slope: f64,
    /// Half-width of the 95% interval on `slope`.
    pub slope_ci: f64,
    /// `ln E|X_N|^2 - ln E|X_0|^2`.
    pub drop: f64,
}

/// Stable iff `slope + ci < -slope_tol` and `drop < -drop_margin`; Unstable
/// iff `slope - ci > slope_tol` or more than half the paths diverged;
/// otherwise Inconclusive.
///
/// A `+inf` entry in the fit window makes the slope `+inf`. Entries equal to
/// `-inf` (every path exactly zero) are left out of the fit, and a window
/// with fewer than two finite points left gets slope `-inf`.
pub fn classify(series: &MeanSquareSeries, slope_tol: f64, drop_margin: f64) -> Result<StabilityVerdict> {
    let len = series.len();
    let skip = (series.burn_in_fraction * len as f64).floor() as usize;
    let available = len.saturating_sub(skip);
    if available < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            available,
            required: MIN_FIT_POINTS,
        });
    }
    let window = skip..len;
    let (slope, slope_ci) = if series.log_mean_square[window.clone()]
        .iter()
        .any(|&v| v == f64::INFINITY || v.is_nan())
    {
        (f64::INFINITY, 0.0)
    } else {
        let (xs, ys): (Vec<f64>, Vec<f64>) = window
            .filter(|&i| series.log_mean_square[i].is_finite())
            .map(|i| (series.steps[i] as f64, series.log_mean_square[i]))
            .unzip();
        if xs.len() < 2 {
            (f64::NEG_INFINITY, 0.0)
        } else {
            let (slope, _, se) = linear_fit(&xs, &ys);
            (slope, 1.96 * se)
        }
    };
    let first = series.log_mean_square[0];
    let last = series.log_mean_square[len - 1];
    let drop = if last == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        last - first
    };
    let label = if series.diverged_fraction > 0.5 || slope - slope_ci > slope_tol {
        StabilityLabel::Unstable
    } else if slope + slope_ci < -slope_tol && drop < -drop_margin {
        StabilityLabel::Stable
    } else {
        StabilityLabel::Inconclusive
    };
    Ok(StabilityVerdict {
        label,
        slope,
        slope_ci,
        drop,
    })
}

/// Exact `E[prod_{k<n} Z_k^2]` by polarization: with `h_i = 1 - v_i` over
/// `v in {0,1,2}^n`, `Q = sum h_i Z_i` is Gaussian and
/// `prod Z_i^2 = (1/(2n)!) sum_v (-1)^{|v|} prod C(2, v_i) Q^{2n}`.
pub fn product_moment_exact(n: usize, model: &LinearTestModel, scheme: &ThetaScheme, hurst: f64) -> Result<f64> {
    if n > PRODUCT_MOMENT_CAP {
        return Err(Error::CapExceeded {
            what: "product moment factors",
            requested: n,
            cap: PRODUCT_MOMENT_CAP,
        });
    }
    if n == 0 {
        return Err(Error::Domain("product moment needs at least one factor"));
    }
    if !(model.lambda > 0.0) {
        return Err(Error::Domain("product moment requires lambda > 0"));
    }
    let (theta, dt) = (scheme.theta, scheme.dt);
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    for k in 0..n {
        alpha.push(alpha_n(k, theta, model.lambda, model.kappa, dt)?);
        beta.push(beta_n(k, theta, model.lambda, model.mu, model.kappa, dt)?);
    }
    let mut weighted_cov = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            weighted_cov[i * n + j] = beta[i] * beta[j] * increment_covariance(i.abs_diff(j), dt, hurst)?;
        }
    }
    let order = 2 * n as u32;
    let log_fact: f64 = (1..=2 * n).map(|k| (k as f64).ln()).sum();
    let mut v = vec![0u8; n];
    let mut h = vec![0.0; n];
    // Neumaier-compensated sum of the signed terms
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    loop {
        let mut sign_odd = false;
        let mut mult = 1.0;
        for i in 0..n {
            h[i] = 1.0 - v[i] as f64;
            if v[i] == 1 {
                sign_odd = !sign_odd;
                mult *= 2.0;
            }
        }
        let mean: f64 = h.iter().zip(&alpha).map(|(a, b)| a * b).sum();
        let mut var = 0.0;
        for i in 0..n {
            if h[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                var += h[i] * h[j] * weighted_cov[i * n + j];
            }
        }
        let q = GaussianScalar::new(mean, var.max(0.0).sqrt())?;
        let moment = if mean == 0.0 && var <= 0.0 {
            0.0
        } else {
            gaussian_raw_moment(q, order)?
        };
        let term = if sign_odd { -mult } else { mult } * (moment.ln() - log_fact).exp();
        let t = sum + term;
        comp += if sum.abs() >= term.abs() {
            (sum - t) + term
        } else {
            (term - t) + sum
        };
        sum = t;
        // next v in base 3
        let mut i = 0;
        while i < n && v[i] == 2 {
            v[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
        v[i] += 1;
    }
    Ok(sum + comp)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SllnDiagnostic {
    pub steps: Vec<usize>,
    /// Cross-path average of `S_n / n`, `S_n = sum_{k<n} ln Z_k^2`.
    pub running_mean: Vec<f64>,
    /// `ln(((1 - theta) / theta)^2)`.
    pub reference: f64,
}

/// Cross-path average of `(1/n) sum_{k<n} ln Z_k^2` at the recorded steps
/// `n >= 1`; a factor that is exactly zero contributes 0.
pub fn slln_diagnostic<E: PathExecutor>(
    exec: &E,
    model: &LinearTestModel,
    scheme: &ThetaScheme,
    hurst: f64,
    config: &EnsembleConfig,
) -> Result<SllnDiagnostic> {
    config.validate()?;
    let theta = scheme.theta;
    if !(theta > 0.0 && theta < 1.0) || theta == 0.5 {
        return Err(Error::Domain("SLLN diagnostic needs theta in (0, 1), theta != 1/2"));
    }
    let grid = FbmGrid::new(hurst, scheme.dt, scheme.n_steps)?;
    let sampler = FbmSampler::new(grid, config.sampler)?;
    let factors = StepFactors::new(model, scheme)?;
    let n = scheme.n_steps;
    let stride = config.record_stride;
    let steps: Vec<usize> = recorded_steps(n, stride).into_iter().filter(|&s| s > 0).collect();
    let n_slots = steps.len();
    let n_blocks = config.n_paths.div_ceil(BLOCK_PATHS);
    let blocks = exec.map_blocks(n_blocks, |b| {
        let mut acc = vec![0.0; n_slots];
        let mut increments = vec![0.0; n];
        let end = ((b + 1) * BLOCK_PATHS).min(config.n_paths);
        for p in b * BLOCK_PATHS..end {
            let mut rng = stream_rng(config.master_seed, p as u64);
            sampler.sample_with(&mut rng, &mut increments);
            let mut s = 0.0;
            let mut slot = 0;
            for (k, &v) in increments.iter().enumerate() {
                let z = factors.factor(k, v);
                if z != 0.0 {
                    s += (z * z).ln();
                }
                if slot < n_slots && steps[slot] == k + 1 {
                    acc[slot] += s / (k + 1) as f64;
                    slot += 1;
                }
            }
        }
        acc
    });
    let mut total = vec![0.0; n_slots];
    for block in blocks {
        for (t, v) in total.iter_mut().zip(&block) {
            *t += v;
        }
    }
    let p = config.n_paths as f64;
    Ok(SllnDiagnostic {
        steps,
        running_mean: total.into_iter().map(|v| v / p).collect(),
        reference: 2.0 * ((1.0 - theta) / theta).ln(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Monte Carlo `Cov(ln Z_i^2, ln Z_j^2)` from exact joint draws of
/// `(V_i, V_j)`.
pub fn log_factor_covariance(
    i: usize,
    j: usize,
    model: &LinearTestModel,
    scheme: &ThetaScheme,
    hurst: f64,
    n_samples: usize,
    seed: u64,
) -> Result<CovarianceEstimate> {
    if i == j {
        return Err(Error::Domain("covariance lag requires i != j"));
    }
    if n_samples < 10_000 {
        return Err(Error::Domain("log_factor_covariance needs at least 10^4 samples"));
    }
    let (theta, dt) = (scheme.theta, scheme.dt);
    let (ai, bi) = (
        alpha_n(i, theta, model.lambda, model.kappa, dt)?,
        beta_n(i, theta, model.lambda, model.mu, model.kappa, dt)?,
    );
    let (aj, bj) = (
        alpha_n(j, theta, model.lambda, model.kappa, dt)?,
        beta_n(j, theta, model.lambda, model.mu, model.kappa, dt)?,
    );
    let c0 = increment_covariance(0, dt, hurst)?;
    let c = increment_covariance(i.abs_diff(j), dt, hurst)?;
    let sd = c0.sqrt();
    let (l21, l22) = (c / sd, (c0 - c * c / c0).max(0.0).sqrt());
    let log_sq = |z: f64| if z == 0.0 { 0.0 } else { (z * z).ln() };
    let mut rng = stream_rng(seed, 0);
    let mut ys = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let z1 = standard_normal(&mut rng);
        let z2 = standard_normal(&mut rng);
        let vi = sd * z1;
        let vj = l21 * z1 + l22 * z2;
        ys.push((log_sq(ai + bi * vi), log_sq(aj + bj * vj)));
    }
    let m = n_samples as f64;
    let mx = ys.iter().map(|y| y.0).sum::<f64>() / m;
    let my = ys.iter().map(|y| y.1).sum::<f64>() / m;
    let products: Vec<f64> = ys.iter().map(|y| (y.0 - mx) * (y.1 - my)).collect();
    let value = products.iter().sum::<f64>() / (m - 1.0);
    let mean_p = products.iter().sum::<f64>() / m;
    let var_p = products.iter().map(|p| (p - mean_p) * (p - mean_p)).sum::<f64>() / (m - 1.0);
    Ok(CovarianceEstimate {
        value,
        std_error: (var_p / m).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(values: Vec<f64>) -> MeanSquareSeries {
        let n = values.len();
        MeanSquareSeries {
            steps: (0..n).collect(),
            dt: 0.1,
            log_std_error: vec![0.0; n],
            log_mean_square: values,
            n_paths: 100,
            diverged_fraction: 0.0,
            burn_in_fraction: 0.2,
        }
    }

    #[test]
    fn recorded_steps_include_final() {
        assert_eq!(recorded_steps(10, 3), vec![0, 3, 6, 9, 10]);
        assert_eq!(recorded_steps(9, 3), vec![0, 3, 6, 9]);
        assert_eq!(default_stride(4096), 4);
        assert_eq!(default_stride(100), 1);
    }

    #[test]
    fn config_validation() {
        assert!(EnsembleConfig::new(1, 0, 1, 0.2).is_err());
        assert!(EnsembleConfig::new(2, 0, 0, 0.2).is_err());
        assert!(EnsembleConfig::new(2, 0, 1, 0.5).is_err());
        assert!(EnsembleConfig::new(2, 0, 1, 0.0).is_ok());
    }

    #[test]
    fn classify_examples() {
        let down = synthetic((0..50).map(|k| -0.1 * k as f64).collect());
        let v = classify(&down, DEFAULT_SLOPE_TOL, DEFAULT_DROP_MARGIN).unwrap();
        assert_eq!(v.label, StabilityLabel::Stable);
        assert!((v.slope + 0.1).abs() < 1e-12);
        assert!((v.drop + 4.9).abs() < 1e-12);

        let flat = synthetic(vec![1.0; 50]);
        assert_eq!(classify(&flat, 0.0, 2.0).unwrap().label, StabilityLabel::Inconclusive);

        let mut diverged = synthetic((0..50).map(|k| -0.1 * k as f64).collect());
        diverged.diverged_fraction = 1.0;
        assert_eq!(classify(&diverged, 0.0, 2.0).unwrap().label, StabilityLabel::Unstable);

        let up = synthetic((0..50).map(|k| 0.3 * k as f64).collect());
        assert_eq!(classify(&up, 0.0, 2.0).unwrap().label, StabilityLabel::Unstable);
    }

    #[test]
    fn classify_shallow_decay_needs_total_drop() {
        let shallow = synthetic((0..50).map(|k| -0.01 * k as f64).collect());
        assert_eq!(
            classify(&shallow, 0.0, 2.0).unwrap().label,
            StabilityLabel::Inconclusive
        );
    }

    #[test]
    fn classify_infinite_entries() {
        let mut s = synthetic((0..50).map(|k| -0.1 * k as f64).collect());
        s.log_mean_square[40] = f64::INFINITY;
        let v = classify(&s, 0.0, 2.0).unwrap();
        assert_eq!(v.slope, f64::INFINITY);
        assert_eq!(v.label, StabilityLabel::Unstable);

        let mut z = synthetic((0..50).map(|k| -0.1 * k as f64).collect());
        for x in z.log_mean_square.iter_mut().skip(12) {
            *x = f64::NEG_INFINITY;
        }
        let v = classify(&z, 0.0, 2.0).unwrap();
        assert_eq!(v.label, StabilityLabel::Stable);
        assert_eq!(v.drop, f64::NEG_INFINITY);
    }

    #[test]
    fn classify_needs_ten_points() {
        // 20% burn-in of 12 points leaves exactly 10
        assert!(classify(&synthetic(vec![0.0; 12]), 0.0, 2.0).is_ok());
        let short = synthetic(vec![0.0; 11]);
        assert!(matches!(
            classify(&short, 0.0, 2.0),
            Err(Error::InsufficientData { available: 9, .. })
        ));
    }

    #[test]
    fn deterministic_ensemble_is_exact() {
        let m = LinearTestModel::new(2.0, 0.0, 1.5, 3.0).unwrap();
        let s = ThetaScheme::new(1.0, 0.1, 30).unwrap();
        let grid = FbmGrid::new(0.7, 0.1, 30).unwrap();
        let cfg = EnsembleConfig::new(5, 1, 1, 0.2).unwrap();
        let series = run_ensemble(&Sequential, &m, &s, &grid, &cfg).unwrap();
        let factors = StepFactors::new(&m, &s).unwrap();
        let mut expected = vec![];
        factors.propagate(3.0, &[0.0; 30], |_, st| expected.push(st.log_square()));
        for (k, v) in series.log_mean_square.iter().enumerate() {
            assert!((v - expected[k]).abs() <= 1e-12 * expected[k].abs().max(1.0));
            assert!(series.log_std_error[k].abs() < 1e-7);
        }
    }

    #[test]
    fn product_moment_single_factor() {
        let m = LinearTestModel::new(9.0, 2.0, 1.4, 1.0).unwrap();
        let s = ThetaScheme::new(0.6, 0.3, 10).unwrap();
        let a = alpha_n(0, 0.6, 9.0, 1.4, 0.3).unwrap();
        let b = beta_n(0, 0.6, 9.0, 2.0, 1.4, 0.3).unwrap();
        let expected = a * a + b * b * 0.3f64.powf(1.4);
        let got = product_moment_exact(1, &m, &s, 0.7).unwrap();
        assert!(((got - expected) / expected).abs() < 1e-12);
        assert!(matches!(
            product_moment_exact(11, &m, &s, 0.7),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn product_moment_factorizes_for_brownian() {
        let m = LinearTestModel::new(3.0, 1.5, 1.0, 1.0).unwrap();
        let s = ThetaScheme::new(0.3, 0.2, 10).unwrap();
        for n in 1..=6 {
            let mut expected = 1.0;
            for k in 0..n {
                let a = alpha_n(k, 0.3, 3.0, 1.0, 0.2).unwrap();
                let b = beta_n(k, 0.3, 3.0, 1.5, 1.0, 0.2).unwrap();
                expected *= a * a + b * b * 0.2;
            }
            let got = product_moment_exact(n, &m, &s, 0.5).unwrap();
            assert!(
                ((got - expected) / expected).abs() < 1e-10,
                "n={n}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn slln_reference_values() {
        let m = LinearTestModel::new(9.0, 2.0, 1.4, 3.0).unwrap();
        let cfg = EnsembleConfig::new(4, 0, 1, 0.2)
            .unwrap()
            .with_sampler(SamplerMethod::ExactCholesky);
        let d = slln_diagnostic(&Sequential, &m, &ThetaScheme::new(0.4, 0.5, 16).unwrap(), 0.7, &cfg).unwrap();
        assert!((d.reference - 2.0 * 1.5f64.ln()).abs() < 1e-15);
        assert_eq!(d.steps.first(), Some(&1));
        assert_eq!(d.running_mean.len(), 16);
        let d = slln_diagnostic(&Sequential, &m, &ThetaScheme::new(0.8, 0.5, 16).unwrap(), 0.7, &cfg).unwrap();
        assert!((d.reference - 2.0 * 0.25f64.ln()).abs() < 1e-15);
        assert!(slln_diagnostic(&Sequential, &m, &ThetaScheme::new(0.5, 0.5, 16).unwrap(), 0.7, &cfg).is_err());
    }

    #[test]
    fn covariance_preconditions() {
        let m = LinearTestModel::new(9.0, 2.0, 1.4, 3.0).unwrap();
        let s = ThetaScheme::new(0.8, 0.5, 10).unwrap();
        assert!(log_factor_covariance(5, 5, &m, &s, 0.7, 10_000, 0).is_err());
        assert!(log_factor_covariance(5, 6, &m, &s, 0.7, 100, 0).is_err());
    }
}

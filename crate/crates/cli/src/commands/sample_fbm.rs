use fbm_stm_core::fbm::{increment_covariance, FbmGrid, FbmSampler, SamplerMethod};
use fbm_stm_core::lab::{PathExecutor, BLOCK_PATHS};
use fbm_stm_core::stats::mean_and_se;

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::output::{fmt_f64, increments_csv, path_csv, write_file, CsvDoc, Record};

/// Per-path CSVs are written for this many leading streams; statistics use
/// every path.
pub const MAX_PATH_FILES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub reference: f64,
}

impl Estimate {
    /// `|value - reference|` in standard errors.
    pub fn z_score(&self) -> f64 {
        (self.value - self.reference).abs() / self.std_error
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncrementStats {
    pub mean: Estimate,
    pub variance: Estimate,
    /// `(lag, E[V_k V_{k+lag}])`.
    pub lag_covariance: Vec<(usize, Estimate)>,
    pub lag1_correlation: Estimate,
    pub n_paths: usize,
}

impl IncrementStats {
    pub fn csv(&self) -> String {
        let mut doc = CsvDoc::new(&["statistic", "estimate", "std_error", "reference"]);
        let mut row = |name: String, e: &Estimate| {
            doc.row([name, fmt_f64(e.value), fmt_f64(e.std_error), fmt_f64(e.reference)]);
        };
        row("mean".into(), &self.mean);
        row("variance".into(), &self.variance);
        for (lag, e) in &self.lag_covariance {
            row(format!("lag{lag}_covariance"), e);
        }
        row("lag1_correlation".into(), &self.lag1_correlation);
        doc.finish()
    }
}

/// Path-wise averages over positions, then mean and standard error across
/// independent paths. Each path `p` uses stream `p` of `master_seed`.
pub fn increment_statistics<E: PathExecutor>(
    exec: &E,
    grid: &FbmGrid,
    method: SamplerMethod,
    n_paths: usize,
    master_seed: u64,
    lags: &[usize],
) -> CliResult<IncrementStats> {
    let n = grid.n_steps();
    let lags: Vec<usize> = lags.iter().copied().filter(|&l| l >= 1 && l < n).collect();
    let sampler = FbmSampler::new(*grid, method)?;
    // columns: mean, second moment, lag 1 product, requested lags
    let n_cols = 3 + lags.len();
    let n_blocks = n_paths.div_ceil(BLOCK_PATHS);
    let blocks = exec.map_blocks(n_blocks, |b| {
        let end = ((b + 1) * BLOCK_PATHS).min(n_paths);
        let mut rows = Vec::with_capacity((end - b * BLOCK_PATHS) * n_cols);
        for p in b * BLOCK_PATHS..end {
            let x = sampler.sample(master_seed, p as u64).values;
            let lagged = |lag: usize| -> f64 {
                if lag >= n {
                    return 0.0;
                }
                x.iter().zip(&x[lag..]).map(|(a, b)| a * b).sum::<f64>() / (n - lag) as f64
            };
            rows.push(x.iter().sum::<f64>() / n as f64);
            rows.push(x.iter().map(|v| v * v).sum::<f64>() / n as f64);
            rows.push(lagged(1));
            for &l in &lags {
                rows.push(lagged(l));
            }
        }
        rows
    });
    let flat: Vec<f64> = blocks.into_iter().flatten().collect();
    let column = |c: usize| -> Vec<f64> { flat.iter().skip(c).step_by(n_cols).copied().collect() };
    let (dt, h) = (grid.dt(), grid.hurst());
    let var_ref = increment_covariance(0, dt, h)?;
    let est = |c: usize, reference: f64| {
        let (value, std_error) = mean_and_se(&column(c));
        Estimate {
            value,
            std_error,
            reference,
        }
    };
    let mut lag_covariance = Vec::with_capacity(lags.len());
    for (i, &l) in lags.iter().enumerate() {
        lag_covariance.push((l, est(3 + i, increment_covariance(l, dt, h)?)));
    }
    // ratio of means, delta-method standard error
    let (c1, v) = (column(2), column(1));
    let (m1, _) = mean_and_se(&c1);
    let (mv, _) = mean_and_se(&v);
    let r = m1 / mv;
    let resid: Vec<f64> = c1.iter().zip(&v).map(|(a, b)| a - r * b).collect();
    let (_, se_resid) = mean_and_se(&resid);
    let lag1_ref = if n > 1 {
        increment_covariance(1, dt, h)? / var_ref
    } else {
        0.0
    };
    Ok(IncrementStats {
        mean: est(0, 0.0),
        variance: est(1, var_ref),
        lag_covariance,
        lag1_correlation: Estimate {
            value: r,
            std_error: se_resid / mv,
            reference: lag1_ref,
        },
        n_paths,
    })
}

pub struct SampleReport {
    pub stats: IncrementStats,
    pub summary_csv: String,
    pub stdout: String,
}

pub fn run<E: PathExecutor>(cfg: &RunConfig, exec: &E) -> CliResult<SampleReport> {
    let setup = cfg.sampling()?;
    let e = &setup.ensemble;
    let stats = increment_statistics(exec, &setup.grid, e.sampler, e.n_paths, e.master_seed, &[1, 2, 8])?;
    let summary_csv = stats.csv();
    let dir = &setup.output_dir;
    let sampler = FbmSampler::new(setup.grid, e.sampler)?;
    for p in 0..e.n_paths.min(MAX_PATH_FILES) {
        let block = sampler.sample(e.master_seed, p as u64);
        write_file(dir, &format!("increments_{p}.csv"), &increments_csv(&block))?;
        write_file(dir, &format!("path_{p}.csv"), &path_csv(&block))?;
    }
    write_file(dir, "summary.csv", &summary_csv)?;
    let mut rec = Record::new();
    rec.push("n_paths", e.n_paths)
        .push("variance", stats.variance.value)
        .push("variance_se", stats.variance.std_error)
        .push("variance_reference", stats.variance.reference)
        .push("lag1_correlation", stats.lag1_correlation.value)
        .push("lag1_correlation_se", stats.lag1_correlation.std_error)
        .push("lag1_correlation_reference", stats.lag1_correlation.reference)
        .push("output", dir.display());
    Ok(SampleReport {
        stats,
        summary_csv,
        stdout: rec.render(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use fbm_stm_core::lab::Sequential;

    #[test]
    fn brownian_lag_one_is_uncorrelated() {
        let grid = FbmGrid::new(0.5, 0.5, 32).unwrap();
        let s = increment_statistics(&Sequential, &grid, SamplerMethod::ExactCholesky, 3000, 5, &[1, 2, 64]).unwrap();
        assert_eq!(s.lag_covariance.len(), 2);
        assert_eq!(s.lag1_correlation.reference, 0.0);
        assert!(s.lag1_correlation.z_score() < 4.0, "{:?}", s.lag1_correlation);
        assert!(s.variance.z_score() < 4.0, "{:?}", s.variance);
    }
}

//! Fractional Gaussian noise on a uniform grid.
//!
//! Increments `V_n = B^H(t_{n+1}) - B^H(t_n)` with `t_n = n dt` form a
//! stationary Gaussian sequence whose autocovariance at lag `k` is
//! `dt^{2H}/2 * ((k+1)^{2H} - 2 k^{2H} + (k-1)^{2H})`. Two samplers are exact
//! in law: a Cholesky factor of the Toeplitz covariance (quadratic per draw,
//! used as ground truth) and circulant embedding (`n log n` per draw).

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{CholeskyFactor, SquareMatrix};
use crate::rng::{fill_standard_normal, stream_rng, StreamRng};

pub const DEFAULT_CHOLESKY_CAP: usize = 4096;
pub const DEFAULT_CIRCULANT_TOL: f64 = 1e-10;

/// Uniform time grid carrying the Hurst parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbmGrid {
    hurst: f64,
    dt: f64,
    n_steps: usize,
}

impl FbmGrid {
    pub fn new(hurst: f64, dt: f64, n_steps: usize) -> Result<Self> {
        check_hurst(hurst)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain("dt must be positive and finite"));
        }
        if n_steps == 0 {
            return Err(Error::Domain("n_steps must be at least 1"));
        }
        Ok(Self { hurst, dt, n_steps })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Grid point `t_n = n dt`.
    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn is_brownian(&self) -> bool {
        self.hurst == 0.5
    }
}

fn check_hurst(hurst: f64) -> Result<()> {
    if (0.5..1.0).contains(&hurst) {
        Ok(())
    } else {
        Err(Error::Domain("hurst must lie in [0.5, 1)"))
    }
}

/// One draw of the increment sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementBlock {
    pub values: Vec<f64>,
    pub grid: FbmGrid,
    pub stream_id: u64,
}

impl IncrementBlock {
    /// `B^H(t_n)` for `n = 0..=n_steps`, starting from `B^H(0) = 0`.
    pub fn cumulative_path(&self) -> Vec<f64> {
        cumulative_path(&self.values)
    }
}

/// Prefix sums with a leading zero.
pub fn cumulative_path(increments: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(increments.len() + 1);
    let mut acc = 0.0;
    out.push(acc);
    for v in increments {
        acc += v;
        out.push(acc);
    }
    out
}

/// `E[V_i V_j]` for `|i - j| = lag`.
pub fn increment_covariance(lag: usize, dt: f64, hurst: f64) -> Result<f64> {
    check_hurst(hurst)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain("dt must be positive and finite"));
    }
    Ok(dt.powf(2.0 * hurst) * unit_increment_covariance(lag, hurst))
}

/// Autocovariance for `dt = 1`. Lags of two or more are evaluated as
/// `k^{2H} [(1+1/k)^{2H} - 2 + (1-1/k)^{2H}]` with `expm1`/`ln_1p` so the
/// second difference does not cancel catastrophically at long lags.
fn unit_increment_covariance(lag: usize, hurst: f64) -> f64 {
    let p = 2.0 * hurst;
    match lag {
        0 => 1.0,
        _ if hurst == 0.5 => 0.0,
        1 => 0.5 * (2f64.powf(p) - 2.0),
        k => {
            let k = k as f64;
            let x = 1.0 / k;
            let up = (p * x.ln_1p()).exp_m1();
            let down = (p * (-x).ln_1p()).exp_m1();
            0.5 * k.powf(p) * (up + down)
        }
    }
}

/// Autocovariance sequence `gamma(0..len)` for a grid's `dt` and `H`.
pub fn autocovariance(dt: f64, hurst: f64, len: usize) -> Result<Vec<f64>> {
    check_hurst(hurst)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain("dt must be positive and finite"));
    }
    let scale = dt.powf(2.0 * hurst);
    Ok((0..len).map(|k| scale * unit_increment_covariance(k, hurst)).collect())
}

/// Full `n_steps x n_steps` Toeplitz covariance of the increments.
pub fn covariance_matrix(grid: &FbmGrid) -> SquareMatrix {
    let gamma = autocovariance(grid.dt, grid.hurst, grid.n_steps).expect("validated grid");
    SquareMatrix::from_fn(grid.n_steps, |i, j| gamma[i.abs_diff(j)])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplerMethod {
    ExactCholesky,
    CirculantEmbedding,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerOptions {
    pub cholesky_cap: usize,
    /// Relative tolerance for negative circulant eigenvalues.
    pub circulant_tol: f64,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self {
            cholesky_cap: DEFAULT_CHOLESKY_CAP,
            circulant_tol: DEFAULT_CIRCULANT_TOL,
        }
    }
}

enum Engine {
    Independent {
        sd: f64,
    },
    Cholesky(CholeskyFactor),
    #[cfg(feature = "std")]
    Circulant(circulant::Embedding),
}

/// Precomputed sampler for one grid. Build once, then draw from any number of
/// streams concurrently through `&self`.
pub struct FbmSampler {
    grid: FbmGrid,
    method: SamplerMethod,
    engine: Engine,
}

impl core::fmt::Debug for FbmSampler {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("FbmSampler")
            .field("grid", &self.grid)
            .field("method", &self.method)
            .finish()
    }
}

impl FbmSampler {
    pub fn new(grid: FbmGrid, method: SamplerMethod) -> Result<Self> {
        Self::with_options(grid, method, SamplerOptions::default())
    }

    pub fn with_options(grid: FbmGrid, method: SamplerMethod, opts: SamplerOptions) -> Result<Self> {
        if method == SamplerMethod::ExactCholesky && grid.n_steps > opts.cholesky_cap {
            return Err(Error::CapExceeded {
                what: "Cholesky sampler n_steps",
                requested: grid.n_steps,
                cap: opts.cholesky_cap,
            });
        }
        let engine = if grid.is_brownian() {
            Engine::Independent { sd: grid.dt.sqrt() }
        } else {
            match method {
                SamplerMethod::ExactCholesky => Engine::Cholesky(CholeskyFactor::factor(&covariance_matrix(&grid))?),
                #[cfg(feature = "std")]
                SamplerMethod::CirculantEmbedding => {
                    Engine::Circulant(circulant::Embedding::new(&grid, opts.circulant_tol)?)
                }
                #[cfg(not(feature = "std"))]
                SamplerMethod::CirculantEmbedding => {
                    return Err(Error::Unsupported("circulant embedding requires the `std` feature"))
                }
            }
        };
        Ok(Self { grid, method, engine })
    }

    pub fn grid(&self) -> &FbmGrid {
        &self.grid
    }

    pub fn method(&self) -> SamplerMethod {
        self.method
    }

    /// Draw the increments of stream `(master_seed, stream_id)`.
    pub fn sample(&self, master_seed: u64, stream_id: u64) -> IncrementBlock {
        let mut rng = stream_rng(master_seed, stream_id);
        let mut values = vec![0.0; self.grid.n_steps];
        self.sample_with(&mut rng, &mut values);
        IncrementBlock {
            values,
            grid: self.grid,
            stream_id,
        }
    }

    /// Fill `out` (length `n_steps`) using an existing stream.
    pub fn sample_with(&self, rng: &mut StreamRng, out: &mut [f64]) {
        assert_eq!(out.len(), self.grid.n_steps, "output length must equal n_steps");
        match &self.engine {
            Engine::Independent { sd } => {
                fill_standard_normal(rng, out);
                out.iter_mut().for_each(|v| *v *= sd);
            }
            Engine::Cholesky(l) => {
                let mut z = vec![0.0; out.len()];
                fill_standard_normal(rng, &mut z);
                l.mul_vec(&z, out);
            }
            #[cfg(feature = "std")]
            Engine::Circulant(e) => e.sample(rng, out),
        }
    }
}

/// One-shot convenience: build a sampler and draw a single block.
pub fn sample_increments(
    grid: &FbmGrid,
    method: SamplerMethod,
    master_seed: u64,
    stream_id: u64,
) -> Result<IncrementBlock> {
    Ok(FbmSampler::new(*grid, method)?.sample(master_seed, stream_id))
}

#[cfg(feature = "std")]
mod circulant {
    use std::sync::Arc;

    use rustfft::num_complex::Complex64;
    use rustfft::{Fft, FftPlanner};

    use super::{autocovariance, FbmGrid};
    use crate::error::{Error, Result};
    use crate::rng::{standard_normal, StreamRng};

    /// Davies-Harte embedding of the `n`-step autocovariance into a circulant
    /// of order `m = 2n`.
    pub(super) struct Embedding {
        n: usize,
        /// Per-frequency amplitudes for frequencies `0..=n`.
        amplitude: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    }

    impl Embedding {
        pub(super) fn new(grid: &FbmGrid, tol: f64) -> Result<Self> {
            let n = grid.n_steps();
            let m = 2 * n;
            let gamma = autocovariance(grid.dt(), grid.hurst(), n + 1)?;
            let mut row: Vec<Complex64> = Vec::with_capacity(m);
            row.extend(gamma.iter().map(|&g| Complex64::new(g, 0.0)));
            row.extend(gamma[1..n].iter().rev().map(|&g| Complex64::new(g, 0.0)));

            let mut planner = FftPlanner::new();
            let fft = planner.plan_fft_forward(m);
            fft.process(&mut row);

            let max = row.iter().map(|c| c.re).fold(0.0, f64::max);
            let threshold = tol * max;
            let mf = m as f64;
            let mut amplitude = Vec::with_capacity(n + 1);
            for (j, c) in row.iter().take(n + 1).enumerate() {
                let mut lam = c.re;
                if lam < 0.0 {
                    if lam < -threshold {
                        return Err(Error::CirculantEmbeddingFailure {
                            eigenvalue: lam,
                            tolerance: threshold,
                        });
                    }
                    lam = 0.0;
                }
                let denom = if j == 0 || j == n { mf } else { 2.0 * mf };
                amplitude.push((lam / denom).sqrt());
            }
            Ok(Self { n, amplitude, fft })
        }

        pub(super) fn sample(&self, rng: &mut StreamRng, out: &mut [f64]) {
            let n = self.n;
            let m = 2 * n;
            let mut w = vec![Complex64::new(0.0, 0.0); m];
            w[0] = Complex64::new(self.amplitude[0] * standard_normal(rng), 0.0);
            for j in 1..n {
                let re = standard_normal(rng);
                let im = standard_normal(rng);
                let c = Complex64::new(re, im) * self.amplitude[j];
                w[j] = c;
                w[m - j] = c.conj();
            }
            w[n] = Complex64::new(self.amplitude[n] * standard_normal(rng), 0.0);
            let mut scratch = vec![Complex64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
            self.fft.process_with_scratch(&mut w, &mut scratch);
            for (o, c) in out.iter_mut().zip(&w) {
                *o = c.re;
            }
        }
    }
}

//! Stochastic theta method
//! `X_{n+1} = X_n + theta f(t_{n+1}, X_{n+1}) dt + (1 - theta) f(t_n, X_n) dt + g(t_n, X_n) V_n`.
//!
//! For the linear test equation every step multiplies the state by
//! `Z_n = alpha_n + beta_n V_n`; the product is carried as sign and
//! `ln |X_n|` so exponentially growing regimes stay representable.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fbm::{FbmGrid, IncrementBlock};
use crate::models::{time_factor, LinearTestModel, NonlinearModel};

const MIN_DENOMINATOR: f64 = 1e-14;
const SOLVER_MAX_ITER: usize = 200;
const SOLVER_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaScheme {
    pub theta: f64,
    pub dt: f64,
    pub n_steps: usize,
}

impl ThetaScheme {
    pub fn new(theta: f64, dt: f64, n_steps: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::Domain("theta must lie in [0, 1]"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain("dt must be positive and finite"));
        }
        if n_steps == 0 {
            return Err(Error::Domain("n_steps must be at least 1"));
        }
        Ok(Self { theta, dt, n_steps })
    }

    pub fn check_grid(&self, grid: &FbmGrid) -> Result<()> {
        if grid.dt() != self.dt {
            return Err(Error::GridMismatch("fBm dt differs from scheme dt"));
        }
        if grid.n_steps() != self.n_steps {
            return Err(Error::GridMismatch("fBm step count differs from scheme"));
        }
        Ok(())
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }
}

/// `sign * exp(log_abs)`; zero is `sign = 0, log_abs = -inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSignedState {
    pub sign: i8,
    pub log_abs: f64,
}

impl LogSignedState {
    pub const ZERO: LogSignedState = LogSignedState {
        sign: 0,
        log_abs: f64::NEG_INFINITY,
    };

    pub fn from_value(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            Self {
                sign: if x > 0.0 { 1 } else { -1 },
                log_abs: x.abs().ln(),
            }
        }
    }

    /// May overflow to `+-inf` or underflow to zero.
    pub fn value(&self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => s as f64 * self.log_abs.exp(),
        }
    }

    /// `ln X^2`.
    pub fn log_square(&self) -> f64 {
        2.0 * self.log_abs
    }

    fn scale(self, z: f64) -> Self {
        if self.sign == 0 || z == 0.0 {
            return Self::ZERO;
        }
        let sign = if z > 0.0 { self.sign } else { -self.sign };
        Self {
            sign,
            log_abs: self.log_abs + z.abs().ln(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<LogSignedState>,
    pub diverged_at: Option<usize>,
    pub scheme: ThetaScheme,
}

impl Trajectory {
    pub fn values(&self) -> Vec<f64> {
        self.states.iter().map(LogSignedState::value).collect()
    }
}

fn denominator(n: usize, theta: f64, lambda: f64, kappa: f64, dt: f64) -> Result<f64> {
    let d = 1.0 + kappa * theta * lambda * time_factor((n + 1) as f64, kappa) * dt.powf(kappa);
    if d.abs() < MIN_DENOMINATOR {
        Err(Error::DegenerateDenominator {
            step: n,
            denominator: d,
        })
    } else {
        Ok(d)
    }
}

/// `(1 - kappa (1-theta) lambda n^{kappa-1} dt^kappa) / (1 + kappa theta lambda (n+1)^{kappa-1} dt^kappa)`.
pub fn alpha_n(n: usize, theta: f64, lambda: f64, kappa: f64, dt: f64) -> Result<f64> {
    let d = denominator(n, theta, lambda, kappa, dt)?;
    let num = 1.0 - kappa * (1.0 - theta) * lambda * time_factor(n as f64, kappa) * dt.powf(kappa);
    Ok(num / d)
}

/// `mu / (1 + kappa theta lambda (n+1)^{kappa-1} dt^kappa)`.
pub fn beta_n(n: usize, theta: f64, lambda: f64, mu: f64, kappa: f64, dt: f64) -> Result<f64> {
    Ok(mu / denominator(n, theta, lambda, kappa, dt)?)
}

/// Precomputed `alpha_n`, `beta_n` for a whole horizon, shared by every path
/// of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFactors {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl StepFactors {
    pub fn new(model: &LinearTestModel, scheme: &ThetaScheme) -> Result<Self> {
        let mut alpha = Vec::with_capacity(scheme.n_steps);
        let mut beta = Vec::with_capacity(scheme.n_steps);
        for n in 0..scheme.n_steps {
            alpha.push(alpha_n(n, scheme.theta, model.lambda, model.kappa, scheme.dt)?);
            beta.push(beta_n(n, scheme.theta, model.lambda, model.mu, model.kappa, scheme.dt)?);
        }
        Ok(Self { alpha, beta })
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// `Z_n = alpha_n + beta_n V_n`.
    pub fn factor(&self, n: usize, increment: f64) -> f64 {
        self.alpha[n] + self.beta[n] * increment
    }

    /// Runs the product recursion, calling `visit(n, X_n)` for `n = 0..=N`.
    pub fn propagate(&self, x0: f64, increments: &[f64], mut visit: impl FnMut(usize, LogSignedState)) {
        let mut state = LogSignedState::from_value(x0);
        visit(0, state);
        for (n, &v) in increments.iter().enumerate().take(self.len()) {
            state = state.scale(self.factor(n, v));
            visit(n + 1, state);
        }
    }
}

pub fn simulate_linear(
    model: &LinearTestModel,
    scheme: &ThetaScheme,
    increments: &IncrementBlock,
) -> Result<Trajectory> {
    scheme.check_grid(&increments.grid)?;
    let factors = StepFactors::new(model, scheme)?;
    let mut states = Vec::with_capacity(scheme.n_steps + 1);
    factors.propagate(model.x0, &increments.values, |_, s| states.push(s));
    Ok(Trajectory {
        states,
        diverged_at: None,
        scheme: *scheme,
    })
}

pub fn simulate_nonlinear(
    model: &NonlinearModel,
    scheme: &ThetaScheme,
    increments: &IncrementBlock,
) -> Result<Trajectory> {
    scheme.check_grid(&increments.grid)?;
    let mut states = Vec::with_capacity(scheme.n_steps + 1);
    let mut diverged_at = None;
    simulate_nonlinear_with(model, scheme, &increments.values, |n, x| {
        if diverged_at.is_none() && x.is_infinite() {
            diverged_at = Some(n);
        }
        states.push(LogSignedState::from_value(x));
    })?;
    Ok(Trajectory {
        states,
        diverged_at,
        scheme: *scheme,
    })
}

/// Plain-arithmetic recursion calling `visit(n, X_n)` for `n = 0..=N`. After
/// an overflow the state stays at the signed infinity it reached.
pub fn simulate_nonlinear_with(
    model: &NonlinearModel,
    scheme: &ThetaScheme,
    increments: &[f64],
    mut visit: impl FnMut(usize, f64),
) -> Result<()> {
    if increments.len() != scheme.n_steps {
        return Err(Error::GridMismatch("increment count differs from n_steps"));
    }
    let (theta, dt) = (scheme.theta, scheme.dt);
    let mut x = model.x0;
    visit(0, x);
    for (n, &dw) in increments.iter().enumerate() {
        if x.is_finite() {
            let t0 = scheme.t(n);
            let rhs = x + (1.0 - theta) * dt * model.drift(t0, x) + model.diffusion(t0, x) * dw;
            x = if rhs.is_finite() {
                solve_implicit(model, scheme.t(n + 1), theta * dt, rhs, n)?
            } else if rhs.is_nan() {
                // inf - inf from competing terms: keep the direction of the state
                x.signum() * f64::INFINITY
            } else {
                rhs
            };
        }
        visit(n + 1, x);
    }
    Ok(())
}

/// Root of `G(y) = y - c f(t, y) - rhs` with `c = theta dt`, by Newton steps
/// kept inside a sign-change bracket and bisection when Newton leaves it.
///
/// Iterates towards a purely relative residual so tiny states keep their
/// digits; `1e-12 (1 + |rhs|)` is the bound that must be met to succeed.
fn solve_implicit(model: &NonlinearModel, t: f64, c: f64, rhs: f64, step: usize) -> Result<f64> {
    if c == 0.0 {
        return Ok(rhs);
    }
    let g = |y: f64| y - c * model.drift(t, y) - rhs;
    let target = SOLVER_REL_TOL * rhs.abs();
    let accept = SOLVER_REL_TOL * (1.0 + rhs.abs());
    let failure = |iterations: usize, residual: f64| Error::ImplicitSolveFailure {
        step,
        iterations,
        residual,
    };
    let g0 = g(rhs);
    if g0.abs() <= target {
        return Ok(rhs);
    }
    let (mut lo, mut hi) = grow_bracket(&g, rhs, g0).ok_or_else(|| failure(0, g0.abs()))?;
    let mut y = rhs.clamp(lo, hi);
    let mut gy = g(y);
    for iter in 0..SOLVER_MAX_ITER {
        if gy.abs() <= target {
            return Ok(y);
        }
        if gy < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let slope = 1.0 - c * model.drift_dx(t, y);
        let newton = y - gy / slope;
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == y || next <= lo || next >= hi {
            // bracket has collapsed to adjacent floats
            return if gy.abs() <= accept {
                Ok(y)
            } else {
                Err(failure(iter + 1, gy.abs()))
            };
        }
        y = next;
        gy = g(y);
    }
    if gy.abs() <= accept {
        Ok(y)
    } else {
        Err(failure(SOLVER_MAX_ITER, gy.abs()))
    }
}

/// Returns `(lo, hi)` with `G(lo) < 0 < G(hi)`, widening geometrically from
/// `rhs` in the direction suggested by the sign of `G(rhs)`, then the other.
fn grow_bracket(g: &impl Fn(f64) -> f64, rhs: f64, g0: f64) -> Option<(f64, f64)> {
    for &dir in &[-g0.signum(), g0.signum()] {
        let mut width = 1.0 + rhs.abs();
        while width.is_finite() {
            let probe = rhs + dir * width;
            let gp = g(probe);
            if gp.is_nan() {
                break;
            }
            if gp.signum() != g0.signum() {
                return Some(if g0 < 0.0 { (rhs, probe) } else { (probe, rhs) });
            }
            width *= 2.0;
        }
    }
    None
}

//! Linear test equation `dX = -lambda kappa t^{kappa-1} X dt + mu X dB^H`,
//! the cubic-drift nonlinear examples, and the growth/monotonicity constants
//! the convergence theory is phrased in.

use alloc::sync::Arc;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// How a user-supplied drift rate is written.
///
/// `Canonical` is the minus form `-lambda kappa t^{kappa-1} x` (positive
/// `lambda` is the stable direction); `PlusLambda` writes the drift as
/// `+lambda kappa t^{kappa-1} x`, so `lambda = -9` there is `lambda = 9` here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignConvention {
    #[default]
    Canonical,
    PlusLambda,
}

impl SignConvention {
    pub fn to_canonical(self, lambda: f64) -> f64 {
        match self {
            SignConvention::Canonical => lambda,
            SignConvention::PlusLambda => -lambda,
        }
    }

    pub fn from_canonical(self, lambda: f64) -> f64 {
        // the map is an involution
        self.to_canonical(lambda)
    }
}

/// `t^{kappa - 1}` with the convention `0^0 = 1`.
pub(crate) fn time_factor(t: f64, kappa: f64) -> f64 {
    if kappa == 1.0 {
        1.0
    } else {
        t.powf(kappa - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearTestModel {
    pub lambda: f64,
    pub mu: f64,
    pub kappa: f64,
    pub x0: f64,
}

impl LinearTestModel {
    /// Parameters in the canonical (minus) convention.
    pub fn new(lambda: f64, mu: f64, kappa: f64, x0: f64) -> Result<Self> {
        if !(lambda.is_finite() && mu.is_finite() && kappa.is_finite() && x0.is_finite()) {
            return Err(Error::Domain("model parameters must be finite"));
        }
        if !(kappa >= 1.0) {
            return Err(Error::Domain("kappa must be at least 1"));
        }
        if x0 == 0.0 {
            return Err(Error::Domain("x0 must be non-zero"));
        }
        Ok(Self { lambda, mu, kappa, x0 })
    }

    pub fn with_convention(lambda: f64, convention: SignConvention, mu: f64, kappa: f64, x0: f64) -> Result<Self> {
        Self::new(convention.to_canonical(lambda), mu, kappa, x0)
    }

    pub fn lambda_in(&self, convention: SignConvention) -> f64 {
        convention.from_canonical(self.lambda)
    }

    pub fn drift(&self, t: f64, x: f64) -> f64 {
        -self.lambda * self.kappa * time_factor(t, self.kappa) * x
    }

    pub fn diffusion(&self, _t: f64, x: f64) -> f64 {
        self.mu * x
    }
}

/// Constants `lambda <= lambda_bar` and `mu` bounding the coefficients:
/// `x f(t,x) <= -lambda kappa t^{kappa-1} x^2`,
/// `|f(t,x)| <= lambda_bar kappa t^{kappa-1} |x|`, `|g(t,x)| <= mu |x|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionConstants {
    pub lambda: f64,
    pub lambda_bar: f64,
    pub mu: f64,
    pub kappa: f64,
}

impl AssumptionConstants {
    pub fn new(lambda: f64, lambda_bar: f64, mu: f64, kappa: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain("lambda must be positive"));
        }
        if !(lambda_bar >= lambda && lambda_bar.is_finite()) {
            return Err(Error::Domain("lambda_bar must be at least lambda"));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Domain("mu must be positive"));
        }
        if !(kappa >= 1.0 && kappa.is_finite()) {
            return Err(Error::Domain("kappa must be at least 1"));
        }
        Ok(Self {
            lambda,
            lambda_bar,
            mu,
            kappa,
        })
    }

    pub fn ratio(&self) -> f64 {
        self.lambda_bar / self.lambda
    }
}

/// Drift and diffusion of a user-defined scalar equation.
pub trait Coefficients: Send + Sync {
    fn drift(&self, t: f64, x: f64) -> f64;

    fn diffusion(&self, t: f64, x: f64) -> f64;

    /// `d f / d x`; the default is a central difference.
    fn drift_dx(&self, t: f64, x: f64) -> f64 {
        let h = 1e-6 * (1.0 + x.abs());
        (self.drift(t, x + h) - self.drift(t, x - h)) / (2.0 * h)
    }
}

/// The linear test equation expressed as generic coefficients.
#[derive(Debug, Clone, Copy)]
pub struct LinearCoefficients(pub LinearTestModel);

impl Coefficients for LinearCoefficients {
    fn drift(&self, t: f64, x: f64) -> f64 {
        self.0.drift(t, x)
    }

    fn diffusion(&self, t: f64, x: f64) -> f64 {
        self.0.diffusion(t, x)
    }

    fn drift_dx(&self, t: f64, _x: f64) -> f64 {
        -self.0.lambda * self.0.kappa * time_factor(t, self.0.kappa)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// `f = -lambda kappa t^{kappa-1} x - x^3`, `g = mu x`.
    CubicDrift,
    /// Same drift, `g = x + sin x`.
    CubicDriftSinDiffusion,
    Custom,
}

#[derive(Clone)]
pub struct NonlinearModel {
    pub kind: ModelKind,
    pub constants: AssumptionConstants,
    pub x0: f64,
    custom: Option<Arc<dyn Coefficients>>,
}

impl core::fmt::Debug for NonlinearModel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("NonlinearModel")
            .field("kind", &self.kind)
            .field("constants", &self.constants)
            .field("x0", &self.x0)
            .finish()
    }
}

impl NonlinearModel {
    pub fn cubic_drift(constants: AssumptionConstants, x0: f64) -> Result<Self> {
        Self::builtin(ModelKind::CubicDrift, constants, x0)
    }

    pub fn cubic_drift_sin_diffusion(constants: AssumptionConstants, x0: f64) -> Result<Self> {
        Self::builtin(ModelKind::CubicDriftSinDiffusion, constants, x0)
    }

    fn builtin(kind: ModelKind, constants: AssumptionConstants, x0: f64) -> Result<Self> {
        check_x0(x0)?;
        Ok(Self {
            kind,
            constants,
            x0,
            custom: None,
        })
    }

    /// User-defined coefficients. The constants are taken on trust; see
    /// [`check_assumption`] for a pointwise audit.
    pub fn custom(coefficients: Arc<dyn Coefficients>, constants: AssumptionConstants, x0: f64) -> Result<Self> {
        check_x0(x0)?;
        Ok(Self {
            kind: ModelKind::Custom,
            constants,
            x0,
            custom: Some(coefficients),
        })
    }

    fn linear_rate(&self, t: f64) -> f64 {
        self.constants.lambda * self.constants.kappa * time_factor(t, self.constants.kappa)
    }

    pub fn drift(&self, t: f64, x: f64) -> f64 {
        match &self.custom {
            Some(c) => c.drift(t, x),
            None => -self.linear_rate(t) * x - x * x * x,
        }
    }

    pub fn drift_dx(&self, t: f64, x: f64) -> f64 {
        match &self.custom {
            Some(c) => c.drift_dx(t, x),
            None => -self.linear_rate(t) - 3.0 * x * x,
        }
    }

    pub fn diffusion(&self, t: f64, x: f64) -> f64 {
        match (&self.custom, self.kind) {
            (Some(c), _) => c.diffusion(t, x),
            (None, ModelKind::CubicDriftSinDiffusion) => x + x.sin(),
            (None, _) => self.constants.mu * x,
        }
    }
}

fn check_x0(x0: f64) -> Result<()> {
    if x0.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain("x0 must be finite"))
    }
}

/// A value that may have overflowed to `+-inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Saturating {
    pub value: f64,
    pub saturated: bool,
}

impl Saturating {
    fn from_exp(scale: f64, exponent: f64) -> Self {
        let value = scale * exponent.exp();
        Self {
            value,
            saturated: value.is_infinite(),
        }
    }
}

/// `X(t) = x0 exp(-lambda t^kappa + mu B^H(t))`.
pub fn exact_solution_linear(model: &LinearTestModel, t: f64, bh_value: f64) -> Result<Saturating> {
    check_time(t)?;
    let exponent = -model.lambda * t.powf(model.kappa) + model.mu * bh_value;
    Ok(Saturating::from_exp(model.x0, exponent))
}

/// `ln E X(t)^2 = 2 ln|x0| + 2(-lambda t^kappa + mu^2 t^{2H})`.
pub fn exact_log_mean_square_linear(model: &LinearTestModel, hurst: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    let exponent = -model.lambda * t.powf(model.kappa) + model.mu * model.mu * t.powf(2.0 * hurst);
    Ok(2.0 * model.x0.abs().ln() + 2.0 * exponent)
}

/// `E X(t)^2 = x0^2 exp(2(-lambda t^kappa + mu^2 t^{2H}))`.
pub fn exact_mean_square_linear(model: &LinearTestModel, hurst: f64, t: f64) -> Result<Saturating> {
    check_time(t)?;
    let exponent = -model.lambda * t.powf(model.kappa) + model.mu * model.mu * t.powf(2.0 * hurst);
    Ok(Saturating::from_exp(model.x0 * model.x0, 2.0 * exponent))
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain("t must be finite and non-negative"))
    }
}

/// Pointwise truth of the three growth conditions over a `t x x` grid,
/// stored `t`-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub points: Vec<(f64, f64)>,
    pub holds_lip_f: Vec<bool>,
    pub holds_lg_f: Vec<bool>,
    pub holds_lg_g: Vec<bool>,
}

impl AssumptionReport {
    pub fn all_lip_f(&self) -> bool {
        self.holds_lip_f.iter().all(|&b| b)
    }

    pub fn all_lg_f(&self) -> bool {
        self.holds_lg_f.iter().all(|&b| b)
    }

    pub fn all_lg_g(&self) -> bool {
        self.holds_lg_g.iter().all(|&b| b)
    }
}

fn le_with_slack(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + 1e-12 * (lhs.abs() + rhs.abs())
}

pub fn check_assumption(model: &NonlinearModel, t_grid: &[f64], x_grid: &[f64]) -> Result<AssumptionReport> {
    if t_grid.is_empty() || x_grid.is_empty() {
        return Err(Error::Domain("assumption grids must be nonempty"));
    }
    if t_grid.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Domain("assumption t grid must be strictly positive"));
    }
    let c = &model.constants;
    let size = t_grid.len() * x_grid.len();
    let mut report = AssumptionReport {
        points: Vec::with_capacity(size),
        holds_lip_f: Vec::with_capacity(size),
        holds_lg_f: Vec::with_capacity(size),
        holds_lg_g: Vec::with_capacity(size),
    };
    for &t in t_grid {
        let rate = c.kappa * time_factor(t, c.kappa);
        for &x in x_grid {
            let f = model.drift(t, x);
            let g = model.diffusion(t, x);
            report.points.push((t, x));
            report.holds_lip_f.push(le_with_slack(x * f, -c.lambda * rate * x * x));
            report
                .holds_lg_f
                .push(le_with_slack(f.abs(), c.lambda_bar * rate * x.abs()));
            report.holds_lg_g.push(le_with_slack(g.abs(), c.mu * x.abs()));
        }
    }
    Ok(report)
}

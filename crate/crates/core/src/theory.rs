//! Closed-form stability predicates, thresholds and bounds for the theta
//! method applied to the linear test equation and to general equations
//! satisfying the monotone / linear-growth conditions.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{E, PI};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fbm::autocovariance;
use crate::models::AssumptionConstants;
use crate::stm::{alpha_n, beta_n};

/// Tolerance for treating `kappa` as equal to `2H` (or to 1).
pub const KAPPA_TOL: f64 = 1e-12;

#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoremSource {
    ContinuousCondMS,
    Theorem1_i,
    Theorem1_ii,
    Theorem1_iii,
    Theorem2_i,
    Theorem2_ii,
    BrownianProposition,
    OpenRegion,
}

impl TheoremSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            TheoremSource::ContinuousCondMS => "ContinuousCondMS",
            TheoremSource::Theorem1_i => "Theorem1_i",
            TheoremSource::Theorem1_ii => "Theorem1_ii",
            TheoremSource::Theorem1_iii => "Theorem1_iii",
            TheoremSource::Theorem2_i => "Theorem2_i",
            TheoremSource::Theorem2_ii => "Theorem2_ii",
            TheoremSource::BrownianProposition => "BrownianProposition",
            TheoremSource::OpenRegion => "OpenRegion",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Guarantee {
    StableGuaranteed,
    NotUnconditionallyStable,
    NoGuarantee,
}

impl Guarantee {
    pub fn as_str(&self) -> &'static str {
        match self {
            Guarantee::StableGuaranteed => "StableGuaranteed",
            Guarantee::NotUnconditionallyStable => "NotUnconditionallyStable",
            Guarantee::NoGuarantee => "NoGuarantee",
        }
    }
}

/// Pointwise conditions on the coefficients a guarantee may rely on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// `x f(t,x) <= -lambda kappa t^{kappa-1} x^2`
    MonotoneDrift,
    /// `|f(t,x)| <= lambda_bar kappa t^{kappa-1} |x|`
    DriftGrowth,
    /// `|g(t,x)| <= mu |x|`
    DiffusionGrowth,
}

impl Condition {
    pub fn as_str(&self) -> &'static str {
        match self {
            Condition::MonotoneDrift => "monotone_drift",
            Condition::DriftGrowth => "drift_growth",
            Condition::DiffusionGrowth => "diffusion_growth",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremVerdict {
    pub source: TheoremSource,
    pub guaranteed: Guarantee,
    pub detail: String,
    /// Named threshold values the decision was made against.
    pub thresholds: Vec<(&'static str, f64)>,
    /// Coefficient conditions the guarantee depends on (general equations only).
    pub requires: Vec<Condition>,
}

impl TheoremVerdict {
    fn new(source: TheoremSource, guaranteed: Guarantee, detail: String) -> Self {
        Self {
            source,
            guaranteed,
            detail,
            thresholds: Vec::new(),
            requires: Vec::new(),
        }
    }

    fn open(detail: String) -> Self {
        Self::new(TheoremSource::OpenRegion, Guarantee::NoGuarantee, detail)
    }

    fn with_threshold(mut self, name: &'static str, value: f64) -> Self {
        self.thresholds.push((name, value));
        self
    }
}

pub fn kappa_is_2h(kappa: f64, hurst: f64) -> bool {
    (kappa - 2.0 * hurst).abs() <= KAPPA_TOL
}

/// Mean-square stability of the exact solution: `E X(t)^2 -> 0` iff
/// `kappa > 2H, lambda > 0` or `kappa = 2H, mu^2 < lambda`.
pub fn continuous_stability(lambda: f64, mu: f64, kappa: f64, hurst: f64) -> bool {
    if kappa_is_2h(kappa, hurst) {
        -lambda + mu * mu < 0.0
    } else {
        kappa > 2.0 * hurst && lambda > 0.0
    }
}

/// `sqrt(3/2) e / (sqrt(3/2) e + 1)`, about 0.76901.
pub fn theorem1_threshold() -> f64 {
    let s = 1.5f64.sqrt() * E;
    s / (s + 1.0)
}

/// `sqrt(6) e r / (sqrt(6) e r + 1)` with `r = lambda_bar / lambda`.
pub fn theorem2_threshold(ratio: f64) -> f64 {
    let s = 6f64.sqrt() * E * ratio;
    s / (s + 1.0)
}

/// Guarantees for the linear test equation with `H in (1/2, 1)`. The
/// `kappa > 3/2` branch is tried first so that it is reported whenever it
/// applies.
pub fn theorem1_classify(kappa: f64, hurst: f64, theta: f64) -> TheoremVerdict {
    let threshold = theorem1_threshold();
    let at_least_2h = kappa > 2.0 * hurst || kappa_is_2h(kappa, hurst);
    if kappa > 1.5 && theta > 0.5 && theta <= 1.0 {
        return TheoremVerdict::new(
            TheoremSource::Theorem1_ii,
            Guarantee::StableGuaranteed,
            format!("kappa = {kappa} > 3/2 and 1/2 < theta = {theta} <= 1"),
        )
        .with_threshold("kappa_min", 1.5)
        .with_threshold("theta_min", 0.5);
    }
    if at_least_2h && theta >= threshold && theta <= 1.0 {
        return TheoremVerdict::new(
            TheoremSource::Theorem1_i,
            Guarantee::StableGuaranteed,
            format!("kappa >= 2H and theta = {theta} >= {threshold:.6}"),
        )
        .with_threshold("theta_min", threshold);
    }
    if at_least_2h && theta > 0.0 && theta < 0.5 {
        return TheoremVerdict::new(
            TheoremSource::Theorem1_iii,
            Guarantee::NotUnconditionallyStable,
            format!("kappa >= 2H and 0 < theta = {theta} < 1/2: stability depends on the step size"),
        )
        .with_threshold("theta_max", 0.5);
    }
    let detail = if !at_least_2h {
        format!(
            "kappa = {kappa} < 2H = {}: outside the theorem's hypotheses",
            2.0 * hurst
        )
    } else if theta <= 0.0 || theta > 1.0 {
        format!("theta = {theta} not covered")
    } else {
        format!("2H <= kappa <= 3/2 and 1/2 <= theta < {threshold:.6}: stability not established")
    };
    TheoremVerdict::open(detail).with_threshold("theta_min", threshold)
}

/// Guarantees for a general equation with the given constants. Backward Euler
/// needs only the monotone drift and diffusion growth conditions.
pub fn theorem2_classify(constants: &AssumptionConstants, theta: f64, hurst: f64) -> TheoremVerdict {
    let threshold = theorem2_threshold(constants.ratio());
    let cond = continuous_stability(constants.lambda, constants.mu, constants.kappa, hurst);
    let note = if cond {
        ""
    } else {
        "; note: lambda, mu, kappa, H violate the continuous stability condition"
    };
    let mut v = if theta == 1.0 {
        let mut v = TheoremVerdict::new(
            TheoremSource::Theorem2_i,
            Guarantee::StableGuaranteed,
            format!("backward Euler (theta = 1){note}"),
        );
        v.requires = vec![Condition::MonotoneDrift, Condition::DiffusionGrowth];
        v
    } else if theta >= threshold && theta < 1.0 {
        let mut v = TheoremVerdict::new(
            TheoremSource::Theorem2_ii,
            Guarantee::StableGuaranteed,
            format!(
                "theta = {theta} >= {threshold:.6} for lambda_bar/lambda = {}{note}",
                constants.ratio()
            ),
        );
        v.requires = vec![
            Condition::MonotoneDrift,
            Condition::DriftGrowth,
            Condition::DiffusionGrowth,
        ];
        v
    } else {
        TheoremVerdict::open(format!(
            "theta = {theta} below {threshold:.6} for lambda_bar/lambda = {}{note}",
            constants.ratio()
        ))
    };
    v.thresholds.push(("theta_min", threshold));
    v
}

/// `ᾱ^2 + β̄^2 dt` for constant coefficients (`kappa = 1`, `H = 1/2`), the
/// exact per-step growth of `E X_n^2`.
pub fn brownian_step_factor(lambda: f64, mu: f64, theta: f64, dt: f64) -> f64 {
    let d = 1.0 + theta * lambda * dt;
    let a = (1.0 - (1.0 - theta) * lambda * dt) / d;
    let b = mu / d;
    a * a + b * b * dt
}

/// `(1 - 2 theta) lambda^2 dt - 2 lambda + mu^2`; the step factor is below 1
/// exactly when this is negative.
pub fn brownian_criterion(lambda: f64, mu: f64, theta: f64, dt: f64) -> f64 {
    (1.0 - 2.0 * theta) * lambda * lambda * dt - 2.0 * lambda + mu * mu
}

/// `dt* = (2 lambda - mu^2) / ((1 - 2 theta) lambda^2)` when `theta < 1/2`
/// and `mu^2 < 2 lambda`.
pub fn brownian_dt_threshold(lambda: f64, mu: f64, theta: f64) -> Option<f64> {
    let gap = 2.0 * lambda - mu * mu;
    if theta < 0.5 && gap > 0.0 && lambda != 0.0 {
        Some(gap / ((1.0 - 2.0 * theta) * lambda * lambda))
    } else {
        None
    }
}

/// Mean-square behaviour of the theta method for Brownian driving noise.
pub fn brownian_classify(lambda: f64, mu: f64, kappa: f64, theta: f64, dt: f64) -> TheoremVerdict {
    let src = TheoremSource::BrownianProposition;
    if (kappa - 1.0).abs() > KAPPA_TOL {
        if kappa < 1.0 {
            return TheoremVerdict::open(format!("kappa = {kappa} < 1 not covered"));
        }
        return if theta > 0.5 && theta <= 1.0 {
            TheoremVerdict::new(
                src,
                Guarantee::StableGuaranteed,
                format!("kappa > 1 and 1/2 < theta = {theta} <= 1"),
            )
        } else if (0.0..=0.5).contains(&theta) {
            TheoremVerdict::new(
                src,
                Guarantee::NotUnconditionallyStable,
                format!("kappa > 1 and 0 <= theta = {theta} <= 1/2: not mean square stable"),
            )
        } else {
            TheoremVerdict::open(format!("theta = {theta} not covered"))
        };
    }
    let gap = -2.0 * lambda + mu * mu;
    if gap < 0.0 {
        if theta >= 0.5 {
            return TheoremVerdict::new(
                src,
                Guarantee::StableGuaranteed,
                format!("kappa = 1, mu^2 < 2 lambda, theta = {theta} >= 1/2: stable for all dt"),
            );
        }
        let dt_star = brownian_dt_threshold(lambda, mu, theta).expect("gap < 0 and theta < 1/2");
        let v = if dt < dt_star {
            TheoremVerdict::new(src, Guarantee::StableGuaranteed, format!("dt = {dt} < dt* = {dt_star}"))
        } else {
            TheoremVerdict::new(
                src,
                Guarantee::NotUnconditionallyStable,
                format!("dt = {dt} >= dt* = {dt_star}: not mean square stable at this step size"),
            )
        };
        return v.with_threshold("dt_star", dt_star);
    }
    if gap > 0.0 && theta < 0.5 {
        return TheoremVerdict::new(
            src,
            Guarantee::NotUnconditionallyStable,
            format!("kappa = 1, mu^2 > 2 lambda, theta = {theta} < 1/2: unstable for every dt"),
        );
    }
    TheoremVerdict::open(format!(
        "kappa = 1, -2 lambda + mu^2 = {gap}, theta = {theta} not covered"
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentThreshold {
    pub m_p: f64,
    pub theta_threshold: f64,
}

/// `m_p = (2/e) / ((p + 1) C(p, p/2))` and `theta_p = 1 / (1 + m_p)` for the
/// `p`-th moment.
pub fn remark_p_threshold(p: u32) -> Result<MomentThreshold> {
    if p < 2 || p % 2 == 1 {
        return Err(Error::Domain("p must be an even integer >= 2"));
    }
    let half = p / 2;
    let mut binom = 1.0f64;
    for k in 1..=half {
        binom = binom * (half + k) as f64 / k as f64;
    }
    let m_p = (2.0 / E) / ((p + 1) as f64 * binom);
    Ok(MomentThreshold {
        m_p,
        theta_threshold: 1.0 / (1.0 + m_p),
    })
}

/// `ln[(sqrt(3/2) e (1-theta)/theta)^{2n} / sqrt(4 pi n)]`.
pub fn envelope_bound(n: usize, theta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("envelope needs n >= 1"));
    }
    if !(theta > 0.5 && theta < 1.0) {
        return Err(Error::Domain("envelope needs theta in (1/2, 1)"));
    }
    let base = 1.5f64.sqrt() * E * (1.0 - theta) / theta;
    let nf = n as f64;
    Ok(2.0 * nf * base.ln() - 0.5 * (4.0 * PI * nf).ln())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaTilde {
    /// `sum_{i,j} s_i s_j beta_i beta_j Cov(V_i, V_j)`.
    pub sigma_sq: f64,
    /// `sum_i s_i alpha_i`.
    pub mean: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn sigma_tilde_sq(
    n: usize,
    theta: f64,
    lambda: f64,
    mu: f64,
    kappa: f64,
    dt: f64,
    hurst: f64,
    signs: &[i8],
) -> Result<SigmaTilde> {
    if signs.len() != n || n == 0 {
        return Err(Error::Domain("signs must have length n >= 1"));
    }
    if signs.iter().any(|s| !(-1..=1).contains(s)) {
        return Err(Error::Domain("signs must be -1, 0 or +1"));
    }
    if !(lambda > 0.0) {
        return Err(Error::Domain("lambda must be positive"));
    }
    let cov = autocovariance(dt, hurst, n)?;
    let mut w = Vec::with_capacity(n);
    let mut mean = 0.0;
    for (i, &s) in signs.iter().enumerate() {
        let s = s as f64;
        w.push(s * beta_n(i, theta, lambda, mu, kappa, dt)?);
        mean += s * alpha_n(i, theta, lambda, kappa, dt)?;
    }
    // symmetric Toeplitz quadratic form: diagonal plus twice the upper part
    let mut sigma_sq = cov[0] * w.iter().map(|x| x * x).sum::<f64>();
    for lag in 1..n {
        let dot: f64 = w[..n - lag].iter().zip(&w[lag..]).map(|(a, b)| a * b).sum();
        sigma_sq += 2.0 * cov[lag] * dot;
    }
    Ok(SigmaTilde { sigma_sq, mean })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continuous_examples() {
        assert!(continuous_stability(9.0, 2.0, 1.4, 0.7));
        assert!(!continuous_stability(1.0, 1.0, 1.4, 0.7));
        assert!(continuous_stability(1.0, 100.0, 1.5, 0.7));
        assert!(!continuous_stability(-1.0, 0.0, 1.5, 0.7));
    }

    #[test]
    fn thresholds_round_trip() {
        let t1 = theorem1_threshold();
        assert!((t1 - 0.769_010_532_948_973).abs() < 1e-14);
        assert_eq!((t1 * 100.0).round() / 100.0, 0.77);
        let t2 = theorem2_threshold(1.0);
        assert_eq!((t2 * 100.0).round() / 100.0, 0.87);
    }

    #[test]
    fn theorem1_examples() {
        let v = theorem1_classify(1.4, 0.7, 0.8);
        assert_eq!(v.source, TheoremSource::Theorem1_i);
        assert_eq!(v.guaranteed, Guarantee::StableGuaranteed);
        assert_eq!(theorem1_classify(2.0, 0.6, 0.6).source, TheoremSource::Theorem1_ii);
        let open = theorem1_classify(1.4, 0.7, 0.55);
        assert_eq!(open.source, TheoremSource::OpenRegion);
        assert_eq!(open.guaranteed, Guarantee::NoGuarantee);
        let iii = theorem1_classify(1.4, 0.7, 0.4);
        assert_eq!(iii.source, TheoremSource::Theorem1_iii);
        assert_eq!(iii.guaranteed, Guarantee::NotUnconditionallyStable);
        assert_eq!(theorem1_classify(2.0, 0.6, 0.8).source, TheoremSource::Theorem1_ii);
        assert_eq!(theorem1_classify(1.2, 0.7, 0.9).source, TheoremSource::OpenRegion);
    }

    #[test]
    fn theorem2_examples() {
        let c = AssumptionConstants::new(3.0, 3.0, 4.0, 2.0).unwrap();
        let v = theorem2_classify(&c, 1.0, 0.6);
        assert_eq!(v.source, TheoremSource::Theorem2_i);
        assert_eq!(v.requires, vec![Condition::MonotoneDrift, Condition::DiffusionGrowth]);
        let wide = AssumptionConstants::new(1.0, 50.0, 1.0, 2.0).unwrap();
        assert_eq!(theorem2_classify(&wide, 1.0, 0.6).source, TheoremSource::Theorem2_i);
        let ii = theorem2_classify(&c, 0.9, 0.6);
        assert_eq!(ii.source, TheoremSource::Theorem2_ii);
        assert_eq!(ii.requires.len(), 3);
        let doubled = AssumptionConstants::new(1.0, 2.0, 1.0, 2.0).unwrap();
        let none = theorem2_classify(&doubled, 0.9, 0.6);
        assert_eq!(none.guaranteed, Guarantee::NoGuarantee);
        assert!(theorem2_threshold(2.0) > 0.9);
    }

    #[test]
    fn brownian_examples() {
        let mu = 2f64.sqrt();
        let star = brownian_dt_threshold(3.0, mu, 0.0).unwrap();
        assert!((star - 4.0 / 9.0).abs() < 1e-12);
        assert_eq!(
            brownian_classify(3.0, mu, 1.0, 0.0, 0.3).guaranteed,
            Guarantee::StableGuaranteed
        );
        assert_eq!(
            brownian_classify(3.0, mu, 1.0, 0.0, 0.6).guaranteed,
            Guarantee::NotUnconditionallyStable
        );
        for &dt in &[0.01, 1.0, 100.0] {
            assert_eq!(
                brownian_classify(3.0, mu, 1.0, 0.5, dt).guaranteed,
                Guarantee::StableGuaranteed
            );
        }
        assert_eq!(
            brownian_classify(3.0, mu, 2.0, 0.4, 0.1).guaranteed,
            Guarantee::NotUnconditionallyStable
        );
        assert_eq!(
            brownian_classify(1.0, 2.0, 1.0, 0.3, 0.1).guaranteed,
            Guarantee::NotUnconditionallyStable
        );
    }

    #[test]
    fn brownian_threshold_matches_step_factor() {
        for &(lambda, mu, theta) in &[(3.0, 2f64.sqrt(), 0.0), (5.0, 1.0, 0.2), (1.0, 0.5, 0.45)] {
            let star = brownian_dt_threshold(lambda, mu, theta).unwrap();
            assert!(brownian_criterion(lambda, mu, theta, star).abs() < 1e-12);
            assert!((brownian_step_factor(lambda, mu, theta, star) - 1.0).abs() < 1e-12);
            assert!(brownian_step_factor(lambda, mu, theta, 0.9 * star) < 1.0);
            assert!(brownian_step_factor(lambda, mu, theta, 1.1 * star) > 1.0);
        }
    }

    #[test]
    fn remark_thresholds() {
        let r2 = remark_p_threshold(2).unwrap();
        assert!((r2.m_p - 1.0 / (3.0 * E)).abs() < 1e-15);
        assert!((r2.theta_threshold - 3.0 * E / (3.0 * E + 1.0)).abs() < 1e-15);
        let r4 = remark_p_threshold(4).unwrap();
        assert!((r4.m_p - (2.0 / E) / 30.0).abs() < 1e-15);
        let mut prev = 0.0;
        for p in (2..=40).step_by(2) {
            let t = remark_p_threshold(p).unwrap().theta_threshold;
            assert!(t > prev);
            prev = t;
        }
        assert!(remark_p_threshold(3).is_err());
        assert!(remark_p_threshold(0).is_err());
    }

    #[test]
    fn envelope_examples() {
        let theta = theorem1_threshold();
        for n in [1usize, 10, 1000] {
            let e = envelope_bound(n, theta).unwrap();
            assert!((e + 0.5 * (4.0 * PI * n as f64).ln()).abs() < 1e-9 * n as f64);
        }
        let mut prev = f64::INFINITY;
        for n in 1..100 {
            let e = envelope_bound(n, 0.9).unwrap();
            assert!(e < prev);
            prev = e;
        }
        assert!(envelope_bound(3, 0.5).is_err());
    }

    #[test]
    fn sigma_tilde_examples() {
        let z = sigma_tilde_sq(5, 0.8, 9.0, 2.0, 1.5, 0.5, 0.75, &[0; 5]).unwrap();
        assert_eq!(z.sigma_sq, 0.0);
        assert_eq!(z.mean, 0.0);
        let one = sigma_tilde_sq(1, 0.8, 9.0, 2.0, 1.5, 0.5, 0.75, &[1]).unwrap();
        let b0 = beta_n(0, 0.8, 9.0, 2.0, 1.5, 0.5).unwrap();
        assert!((one.sigma_sq - b0 * b0 * 0.5f64.powf(1.5)).abs() < 1e-15);
        assert!(sigma_tilde_sq(2, 0.8, 9.0, 2.0, 1.5, 0.5, 0.75, &[2, 0]).is_err());
    }
}

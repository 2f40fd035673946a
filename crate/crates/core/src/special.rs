//! Special functions: log-Gamma, Kummer's confluent hypergeometric function
//! `Phi(a, b, z) = sum_k (a)_k / ((b)_k k!) z^k`, the parabolic cylinder
//! function `U(a, z)` through its integral representation, and even raw
//! moments of a scalar Gaussian.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::quad;
use crate::stats::log_sum_exp;

const LN_PI: f64 = 1.144_729_885_849_400_2;

/// `ln Gamma(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain("log_gamma requires x > 0"));
    }
    Ok(libm::lgamma(x))
}

/// Mean and standard deviation of a scalar normal variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianScalar {
    pub mean: f64,
    pub std: f64,
}

impl GaussianScalar {
    pub fn new(mean: f64, std: f64) -> Result<Self> {
        if !(std >= 0.0) || !std.is_finite() || !mean.is_finite() {
            return Err(Error::Domain("gaussian needs finite mean and std >= 0"));
        }
        Ok(Self { mean, std })
    }
}

/// Supported parameter envelope for [`kummer_phi_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KummerRange {
    pub max_abs_a: f64,
    pub max_abs_z: f64,
}

impl Default for KummerRange {
    fn default() -> Self {
        Self {
            max_abs_a: 500.0,
            max_abs_z: 700.0,
        }
    }
}

pub fn kummer_phi(a: f64, b: f64, z: f64) -> Result<f64> {
    kummer_phi_with(a, b, z, &KummerRange::default())
}

/// Kummer's function with an explicit range envelope.
///
/// Negative-integer `a` truncates to a polynomial. For `z < 0` the value is
/// taken as `e^z Phi(b - a, b, -z)`. Sums are carried in double-double
/// arithmetic so the alternating regimes (`a < 0 < z`) keep full precision.
pub fn kummer_phi_with(a: f64, b: f64, z: f64, range: &KummerRange) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && z.is_finite()) {
        return Err(Error::Domain("kummer_phi arguments must be finite"));
    }
    if is_non_positive_integer(b) {
        return Err(Error::PoleError(b));
    }
    if a.abs() > range.max_abs_a {
        return Err(Error::RangeExceeded("|a| above kummer_phi envelope"));
    }
    if z == 0.0 || a == 0.0 {
        return Ok(1.0);
    }
    let value = if is_non_positive_integer(a) {
        polynomial(a, b, z)
    } else if z < 0.0 {
        let c = b - a;
        if c.abs() > range.max_abs_a {
            return Err(Error::RangeExceeded("|b - a| above kummer_phi envelope"));
        }
        if -z > range.max_abs_z {
            return Err(Error::RangeExceeded("|z| above kummer_phi envelope"));
        }
        let inner = if is_non_positive_integer(c) {
            polynomial(c, b, -z)
        } else {
            series(c, b, -z)?
        };
        z.exp() * inner
    } else {
        if z > range.max_abs_z {
            return Err(Error::RangeExceeded("|z| above kummer_phi envelope"));
        }
        series(a, b, z)?
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::RangeExceeded("kummer_phi overflows double precision"))
    }
}

fn is_non_positive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

fn polynomial(a: f64, b: f64, z: f64) -> f64 {
    let degree = (-a) as usize;
    let mut term = Dd::ONE;
    let mut sum = Dd::ONE;
    for k in 0..degree {
        term = term.step(a, b, z, k);
        sum = sum + term;
    }
    sum.to_f64()
}

fn series(a: f64, b: f64, z: f64) -> Result<f64> {
    const MAX_TERMS: usize = 100_000;
    let mut term = Dd::ONE;
    let mut sum = Dd::ONE;
    let mut quiet = 0;
    for k in 0..MAX_TERMS {
        term = term.step(a, b, z, k);
        sum = sum + term;
        if !sum.hi.is_finite() {
            return Err(Error::RangeExceeded("kummer_phi overflows double precision"));
        }
        if term.hi.abs() <= 1e-16 * sum.hi.abs() {
            quiet += 1;
            if quiet == 3 {
                return Ok(sum.to_f64());
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::RangeExceeded("kummer_phi series did not converge"))
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    fn from_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd {
            hi: s,
            lo: (a - (s - bb)) + (b - bb),
        }
    }

    fn quick(hi: f64, lo: f64) -> Dd {
        let s = hi + lo;
        Dd {
            hi: s,
            lo: lo - (s - hi),
        }
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = libm::fma(self.hi, o.hi, -p) + (self.hi * o.lo + self.lo * o.hi);
        Dd::quick(p, e)
    }

    fn mul_f64(self, c: f64) -> Dd {
        let p = self.hi * c;
        let e = libm::fma(self.hi, c, -p) + self.lo * c;
        Dd::quick(p, e)
    }

    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self + o.mul_f64(-q1);
        let q2 = r.hi / o.hi;
        Dd::quick(q1, q2)
    }

    /// Next series term: `t * (a + k) z / ((b + k)(k + 1))`.
    fn step(self, a: f64, b: f64, z: f64, k: usize) -> Dd {
        let kf = k as f64;
        let num = Dd::from_sum(a, kf).mul_f64(z);
        let den = Dd::from_sum(b, kf).mul_f64(kf + 1.0);
        self.mul(num).div(den)
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

impl core::ops::Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let s = Dd::from_sum(self.hi, o.hi);
        Dd::quick(s.hi, s.lo + self.lo + o.lo)
    }
}

/// Parabolic cylinder function for `a > -1/2`:
/// `U(a, z) = e^{-z^2/4} / Gamma(a + 1/2) * int_0^inf w^{a - 1/2} e^{-w^2/2 - z w} dw`.
///
/// For `a < 1/2` the endpoint singularity is removed with
/// `w = s^{1/(a + 1/2)}` before integrating.
pub fn parabolic_u(a: f64, z: f64) -> Result<f64> {
    if !(a > -0.5) || !a.is_finite() || !z.is_finite() {
        return Err(Error::Domain("parabolic_u requires a > -1/2 and finite z"));
    }
    let p = a - 0.5;
    let log_g = |w: f64| -> f64 {
        let base = -0.5 * w * w - z * w - 0.25 * z * z;
        if p == 0.0 {
            base
        } else {
            p * w.ln() + base
        }
    };
    // Start past the integrand's mode and widen until the tail is negligible.
    let mode = if p > 0.0 {
        0.5 * (-z + (z * z + 4.0 * p).sqrt())
    } else {
        (-z).max(0.0)
    };
    let mut upper = mode + 10.0;
    let mut budget = 40;
    loop {
        let integral = if p >= 0.0 {
            quad::integrate(|w| log_g(w).exp(), 0.0, upper, 0.0, 1e-12, 2000)?
        } else {
            let q = p + 1.0;
            let s_max = upper.powf(q);
            quad::integrate(
                |s| {
                    let w = s.powf(1.0 / q);
                    (-0.5 * w * w - z * w - 0.25 * z * z).exp() / q
                },
                0.0,
                s_max,
                0.0,
                1e-12,
                2000,
            )?
        };
        // Log-concave tail: int_W^inf g <= g(W) / (W + z - p/W).
        let decay = upper + z - p / upper;
        let tail = if decay > 0.0 {
            log_g(upper).exp() / decay
        } else {
            f64::INFINITY
        };
        if tail <= 1e-18 * integral.value.abs() {
            return Ok(integral.value * (-log_gamma(a + 0.5)?).exp());
        }
        budget -= 1;
        if budget == 0 {
            return Err(Error::QuadratureFailure {
                intervals: integral.intervals,
            });
        }
        upper += 4.0;
    }
}

/// `E[Q^order]` for `Q ~ N(mean, std^2)` and even `order <= 64`:
/// `(2^n / sqrt(pi)) std^{2n} Gamma(n + 1/2) Phi(-n, 1/2, -mean^2 / (2 std^2))`
/// with `order = 2n`. Falls back to the log-domain evaluation when the two
/// factors would over- or underflow separately.
pub fn gaussian_raw_moment(g: GaussianScalar, order: u32) -> Result<f64> {
    check_even_order(order)?;
    if order > 64 {
        return Err(Error::CapExceeded {
            what: "gaussian_raw_moment order",
            requested: order as usize,
            cap: 64,
        });
    }
    let n = order / 2;
    if g.std == 0.0 {
        return Ok(g.mean.powi(order as i32));
    }
    let x = g.mean * g.mean / (2.0 * g.std * g.std);
    let nf = n as f64;
    let prefactor = (nf * core::f64::consts::LN_2 - 0.5 * LN_PI + log_gamma(nf + 0.5)?).exp();
    let scale = g.std.powi(order as i32);
    let value = match kummer_phi(-nf, 0.5, -x) {
        Ok(phi) => prefactor * scale * phi,
        Err(Error::RangeExceeded(_)) => f64::NAN,
        Err(e) => return Err(e),
    };
    if value.is_finite() && value > 0.0 && scale > 0.0 {
        Ok(value)
    } else {
        let (_, log) = gaussian_raw_moment_log(g, order)?;
        Ok(log.exp())
    }
}

/// Log-domain raw moment, returned as `(sign, ln |E[Q^order]|)`; the sign is
/// always `+1` for even orders. The Kummer polynomial has positive terms here,
/// so it is summed term-by-term in logs.
pub fn gaussian_raw_moment_log(g: GaussianScalar, order: u32) -> Result<(i8, f64)> {
    check_even_order(order)?;
    if g.std == 0.0 && g.mean == 0.0 {
        return Err(Error::Domain("moment of a point mass at zero has no logarithm"));
    }
    if g.std == 0.0 {
        return Ok((1, order as f64 * g.mean.abs().ln()));
    }
    let n = (order / 2) as usize;
    let nf = n as f64;
    let log_x = if g.mean == 0.0 {
        f64::NEG_INFINITY
    } else {
        2.0 * g.mean.abs().ln() - core::f64::consts::LN_2 - 2.0 * g.std.ln()
    };
    let mut terms = Vec::with_capacity(n + 1);
    let mut log_term = 0.0;
    terms.push(log_term);
    if log_x.is_finite() {
        for k in 0..n {
            let kf = k as f64;
            log_term += (nf - kf).ln() - (0.5 + kf).ln() - (kf + 1.0).ln() + log_x;
            terms.push(log_term);
        }
    }
    let log_phi = log_sum_exp(&terms);
    let log_value = nf * core::f64::consts::LN_2 - 0.5 * LN_PI + log_gamma(nf + 0.5)? + 2.0 * nf * g.std.ln() + log_phi;
    Ok((1, log_value))
}

fn check_even_order(order: u32) -> Result<()> {
    if order == 0 || order % 2 == 1 {
        Err(Error::Domain("moment order must be a positive even integer"))
    } else {
        Ok(())
    }
}

//! Overflow-safe reductions.

#[allow(unused_imports)]
use num_traits::Float;

/// `log(sum(exp(xs)))`. Empty input gives `-inf`; any `+inf` gives `+inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// Running first and second power sums of `w = exp(l)` kept relative to a
/// shift, so that `sum w = exp(shift) * s1` and `sum w^2 = exp(2 shift) * s2`.
///
/// Merging is associative up to rounding; callers merge in a fixed order to
/// keep results bit-identical.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPowerSums {
    pub count: u64,
    pub shift: f64,
    pub s1: f64,
    pub s2: f64,
    /// Number of `+inf` contributions (diverged paths).
    pub infinite: u64,
}

impl Default for LogPowerSums {
    fn default() -> Self {
        Self {
            count: 0,
            shift: f64::NEG_INFINITY,
            s1: 0.0,
            s2: 0.0,
            infinite: 0,
        }
    }
}

impl LogPowerSums {
    /// Add one observation given as `l = log w` (`-inf` means `w = 0`).
    pub fn push(&mut self, l: f64) {
        self.count += 1;
        if l == f64::INFINITY || l.is_nan() {
            self.infinite += 1;
            return;
        }
        if l == f64::NEG_INFINITY {
            return;
        }
        if l > self.shift {
            let r = (self.shift - l).exp();
            self.s1 = self.s1 * r + 1.0;
            self.s2 = self.s2 * r * r + 1.0;
            self.shift = l;
        } else {
            let e = (l - self.shift).exp();
            self.s1 += e;
            self.s2 += e * e;
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.count += other.count;
        self.infinite += other.infinite;
        if other.s1 == 0.0 {
            return;
        }
        if self.s1 == 0.0 {
            self.shift = other.shift;
            self.s1 = other.s1;
            self.s2 = other.s2;
            return;
        }
        if other.shift > self.shift {
            let r = (self.shift - other.shift).exp();
            self.s1 = self.s1 * r + other.s1;
            self.s2 = self.s2 * r * r + other.s2;
            self.shift = other.shift;
        } else {
            let r = (other.shift - self.shift).exp();
            self.s1 += other.s1 * r;
            self.s2 += other.s2 * r * r;
        }
    }

    /// `log(mean w)`.
    pub fn log_mean(&self) -> f64 {
        if self.infinite > 0 {
            return f64::INFINITY;
        }
        if self.s1 == 0.0 {
            return f64::NEG_INFINITY;
        }
        self.shift + self.s1.ln() - (self.count as f64).ln()
    }

    /// Standard error of `log(mean w)` by the delta method, i.e. the relative
    /// standard error of the sample mean.
    pub fn log_std_error(&self) -> f64 {
        if self.infinite > 0 {
            return f64::INFINITY;
        }
        if self.s1 == 0.0 || self.count < 2 {
            return 0.0;
        }
        let p = self.count as f64;
        let centered = (self.s2 - self.s1 * self.s1 / p).max(0.0);
        (p * centered / (p - 1.0)).sqrt() / self.s1
    }
}

/// Mean and standard error of the mean of a slice.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn log_sum_exp_edge_cases() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[1.0, f64::INFINITY]), f64::INFINITY);
        assert!((log_sum_exp(&[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn power_sums_match_naive_mean_of_squares() {
        let xs: Vec<f64> = (1..50).map(|k| 0.1 * k as f64 - 2.0).collect();
        let mut acc = LogPowerSums::default();
        for x in &xs {
            acc.push((x * x).ln());
        }
        let naive = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        assert!((acc.log_mean() - naive.ln()).abs() <= 1e-12 * naive.ln().abs().max(1.0));

        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let (m, se) = mean_and_se(&sq);
        assert!((acc.log_std_error() - se / m).abs() < 1e-12);
    }

    #[test]
    fn merge_equals_sequential_push() {
        let ls: Vec<f64> = (0..40).map(|k| ((k * 37) % 11) as f64 * 3.0 - 10.0).collect();
        let mut all = LogPowerSums::default();
        ls.iter().for_each(|&l| all.push(l));
        let mut a = LogPowerSums::default();
        let mut b = LogPowerSums::default();
        ls[..17].iter().for_each(|&l| a.push(l));
        ls[17..].iter().for_each(|&l| b.push(l));
        a.merge(&b);
        assert!((a.log_mean() - all.log_mean()).abs() < 1e-13);
        assert!((a.log_std_error() - all.log_std_error()).abs() < 1e-12);
    }

    #[test]
    fn zeros_and_infinities() {
        let mut acc = LogPowerSums::default();
        acc.push(f64::NEG_INFINITY);
        acc.push(f64::NEG_INFINITY);
        assert_eq!(acc.log_mean(), f64::NEG_INFINITY);
        acc.push(f64::INFINITY);
        assert_eq!(acc.log_mean(), f64::INFINITY);
    }
}

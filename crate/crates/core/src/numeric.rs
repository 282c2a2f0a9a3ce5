//! Shared numeric helpers: log-factorials, rounding, percentiles and
//! compensated sums.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{DrsError, Result};

const SMALL_FACTORIALS: [f64; 21] = [
    1.0,
    1.0,
    2.0,
    6.0,
    24.0,
    120.0,
    720.0,
    5040.0,
    40320.0,
    362880.0,
    3628800.0,
    39916800.0,
    479001600.0,
    6227020800.0,
    87178291200.0,
    1307674368000.0,
    20922789888000.0,
    355687428096000.0,
    6402373705728000.0,
    121645100408832000.0,
    2432902008176640000.0,
];

/// How `ln(n!)` is evaluated inside likelihoods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LogFactorial {
    /// `ln Γ(n + 1)`, exact for small integers.
    #[default]
    Exact,
    /// `n ln n - n + ½ ln(2πn)`.
    Stirling,
    /// `n ln n - n`. Under this form the Model-I likelihood is maximized
    /// by the moment estimator.
    StirlingFirstOrder,
}

impl LogFactorial {
    pub fn eval(self, n: f64) -> Result<f64> {
        if !(n >= 0.0) {
            return Err(DrsError::Domain(format!("log-factorial of {n}")));
        }
        Ok(self.eval_unchecked(n))
    }

    /// Evaluation without the domain check, for hot likelihood loops whose
    /// arguments are already known to be nonnegative.
    pub(crate) fn eval_unchecked(self, n: f64) -> f64 {
        if n == 0.0 {
            return 0.0;
        }
        match self {
            LogFactorial::Exact => {
                if n <= 20.0 && n.fract() == 0.0 {
                    SMALL_FACTORIALS[n as usize].ln()
                } else {
                    ln_gamma(n + 1.0)
                }
            }
            LogFactorial::Stirling => {
                n * n.ln() - n + 0.5 * (2.0 * std::f64::consts::PI * n).ln()
            }
            LogFactorial::StirlingFirstOrder => n * n.ln() - n,
        }
    }

    /// d/dn of the evaluated form.
    pub(crate) fn derivative(self, n: f64) -> f64 {
        match self {
            LogFactorial::Exact => digamma(n + 1.0),
            LogFactorial::Stirling => n.ln() + 0.5 / n,
            LogFactorial::StirlingFirstOrder => n.ln(),
        }
    }
}

/// `ln(n!)` for real `n >= 0`.
pub fn log_factorial(n: f64) -> Result<f64> {
    LogFactorial::Exact.eval(n)
}

/// `n ln n - n`.
pub fn log_factorial_stirling_order1(n: f64) -> Result<f64> {
    LogFactorial::StirlingFirstOrder.eval(n)
}

/// `x * ln(y)` with the convention `0 * ln(0) = 0`.
#[inline]
pub fn xlny(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

pub fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn expit(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Round half to even, used when reporting continuous population sizes.
pub fn round_half_even(x: f64) -> f64 {
    x.round_ties_even()
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn mean(values: &[f64]) -> f64 {
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss = compensated_sum(values.iter().map(|v| (v - m) * (v - m)));
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Linear-interpolation percentile (`q` in [0, 1]) of already sorted data.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty slice");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Sorts a copy and returns the (2.5%, 97.5%) percentiles.
pub fn central_interval_95(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    (percentile_sorted(&v, 0.025), percentile_sorted(&v, 0.975))
}

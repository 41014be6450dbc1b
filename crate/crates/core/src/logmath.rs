//! Log-space arithmetic for factorial-heavy products and sums.

use serde::Serialize;
use std::sync::OnceLock;

const LN_FACTORIAL_TABLE_LEN: usize = 1 << 14;

/// Largest `k` with `k!` exactly representable as an `f64`.
const EXACT_FACTORIAL_MAX: u64 = 22;

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = Vec::with_capacity(LN_FACTORIAL_TABLE_LEN);
        let mut acc = NeumaierSum::default();
        table.push(0.0);
        for k in 1..LN_FACTORIAL_TABLE_LEN {
            acc.add((k as f64).ln());
            table.push(acc.value());
        }
        table
    })
}

fn exact_factorial_table() -> &'static [f64; EXACT_FACTORIAL_MAX as usize + 1] {
    static TABLE: OnceLock<[f64; EXACT_FACTORIAL_MAX as usize + 1]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [1.0; EXACT_FACTORIAL_MAX as usize + 1];
        let mut acc: u128 = 1;
        for (k, slot) in t.iter_mut().enumerate().skip(1) {
            acc *= k as u128;
            *slot = acc as f64;
        }
        t
    })
}

/// `ln(k!)`.
pub fn ln_factorial(k: u64) -> f64 {
    if (k as usize) < LN_FACTORIAL_TABLE_LEN {
        return ln_factorial_table()[k as usize];
    }
    let x = k as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// `ln Γ(x)` for `x = twice / 2`, i.e. positive integer or half-integer arguments.
pub fn ln_gamma_half(twice: u64) -> f64 {
    assert!(twice > 0, "Γ has a pole at 0");
    if twice.is_multiple_of(2) {
        ln_factorial(twice / 2 - 1)
    } else {
        // Γ(k + ½) = (2k)! √π / (4^k k!)
        let k = (twice - 1) / 2;
        ln_factorial(2 * k) + 0.5 * std::f64::consts::PI.ln()
            - (k as f64) * 4f64.ln()
            - ln_factorial(k)
    }
}

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// `Π num_i! / Π den_i!`, exact-factorial products when every argument is
/// small enough, log-space otherwise.
pub fn factorial_ratio(num: &[u64], den: &[u64]) -> f64 {
    if num.iter().chain(den).all(|&k| k <= EXACT_FACTORIAL_MAX) {
        let t = exact_factorial_table();
        let top: f64 = num.iter().map(|&k| t[k as usize]).product();
        let bottom: f64 = den.iter().map(|&k| t[k as usize]).product();
        if top.is_finite() && bottom.is_finite() && bottom > 0.0 {
            return top / bottom;
        }
    }
    ln_factorial_ratio(num, den).exp()
}

/// `ln(Π num_i! / Π den_i!)`.
pub fn ln_factorial_ratio(num: &[u64], den: &[u64]) -> f64 {
    let mut acc = NeumaierSum::default();
    for &k in num {
        acc.add(ln_factorial(k));
    }
    for &k in den {
        acc.add(-ln_factorial(k));
    }
    acc.value()
}

/// Neumaier's compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl Extend<f64> for NeumaierSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

/// Sum of `values` after sorting by descending magnitude, with compensation.
///
/// The result does not depend on the input order.
pub fn sorted_compensated_sum(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(|a, b| b.abs().total_cmp(&a.abs()).then(b.total_cmp(a)));
    let mut acc = NeumaierSum::default();
    acc.extend(values.iter().copied());
    acc.value()
}

/// A signed number stored as `sign · exp(ln_magnitude)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogWeight {
    pub ln_magnitude: f64,
    /// `+1`, `-1`, or `0` exactly when the weight is zero.
    pub sign: i8,
}

impl LogWeight {
    pub const ZERO: LogWeight = LogWeight {
        ln_magnitude: f64::NEG_INFINITY,
        sign: 0,
    };
    pub const ONE: LogWeight = LogWeight {
        ln_magnitude: 0.0,
        sign: 1,
    };

    /// Positive weight from its logarithm; `-inf` gives zero.
    pub fn from_ln(ln_magnitude: f64) -> Self {
        if ln_magnitude == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogWeight {
                ln_magnitude,
                sign: 1,
            }
        }
    }

    pub fn from_value(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogWeight {
                ln_magnitude: x.abs().ln(),
                sign: if x > 0.0 { 1 } else { -1 },
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn value(&self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.ln_magnitude.exp(),
        }
    }

    /// Multiplies by `exp(ln_factor)`.
    pub fn scale_ln(self, ln_factor: f64) -> Self {
        if self.is_zero() || ln_factor == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogWeight {
                ln_magnitude: self.ln_magnitude + ln_factor,
                sign: self.sign,
            }
        }
    }
}

impl std::ops::Mul for LogWeight {
    type Output = LogWeight;

    fn mul(self, rhs: LogWeight) -> LogWeight {
        if self.is_zero() || rhs.is_zero() {
            LogWeight::ZERO
        } else {
            LogWeight {
                ln_magnitude: self.ln_magnitude + rhs.ln_magnitude,
                sign: self.sign * rhs.sign,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_factorial_matches_exact_values() {
        let mut exact = 1.0f64;
        for k in 1..=25u64 {
            exact *= k as f64;
            assert!((ln_factorial(k) - exact.ln()).abs() < 1e-13, "k = {k}");
        }
    }

    #[test]
    fn stirling_branch_is_continuous_with_table() {
        let k = LN_FACTORIAL_TABLE_LEN as u64;
        let from_table = ln_factorial(k - 1) + (k as f64).ln();
        assert!((ln_factorial(k) - from_table).abs() / from_table < 1e-15);
    }

    #[test]
    fn ln_gamma_at_half_integers() {
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert!((ln_gamma_half(1) - sqrt_pi.ln()).abs() < 1e-14);
        assert!((ln_gamma_half(3) - (0.5 * sqrt_pi).ln()).abs() < 1e-14);
        assert!((ln_gamma_half(7) - (15.0 / 8.0 * sqrt_pi).ln()).abs() < 1e-14);
        assert!((ln_gamma_half(10) - 24f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn factorial_ratio_both_paths_agree() {
        let small = factorial_ratio(&[10, 7], &[3, 5]);
        assert!((small - 3628800.0 * 5040.0 / (6.0 * 120.0)).abs() < 1e-6);
        let big = factorial_ratio(&[200], &[199]);
        assert!((big - 200.0).abs() < 1e-10);
    }

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let mut values = vec![1.0, 1e100, 1.0, -1e100];
        assert_eq!(sorted_compensated_sum(&mut values), 2.0);
    }

    #[test]
    fn log_weight_products() {
        let a = LogWeight::from_value(-2.0);
        let b = LogWeight::from_value(3.0);
        assert!(((a * b).value() + 6.0).abs() < 1e-14);
        assert!((a * LogWeight::ZERO).is_zero());
        assert_eq!(LogWeight::from_ln(f64::NEG_INFINITY), LogWeight::ZERO);
    }
}

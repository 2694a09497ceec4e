//! Modified Bessel functions of the first kind, modified Struve functions and
//! the phase-averaged exponential moments `A_±` built from them.
//!
//! Only the small set of integer orders `{-1, 0, 1, 2}` and real arguments in
//! `[0, 20]` are supported. Inside that box the power series converge quickly
//! and no asymptotic expansion is needed; anything outside is rejected.

use crate::error::{domain, Result};
use std::f64::consts::PI;

/// Largest argument accepted by the series evaluators.
pub const MAX_ARGUMENT: f64 = 20.0;

const MAX_TERMS: usize = 200;
const STOP_RATIO: f64 = 1e-16;

/// A special-function value with an estimate of its absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecialFnResult {
    pub value: f64,
    pub est_abs_error: f64,
}

/// Selects `A_+` or `A_-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

fn check_args(what: &'static str, order: i32, z: f64) -> Result<()> {
    if !(-1..=2).contains(&order) {
        return Err(domain(what, format!("order {order} not in {{-1, 0, 1, 2}}")));
    }
    if !(0.0..=MAX_ARGUMENT).contains(&z) {
        return Err(domain(what, format!("argument {z} not in [0, {MAX_ARGUMENT}]")));
    }
    Ok(())
}

/// Sums a positive series given its first term and the ratio between
/// consecutive terms. Returns the sum and an error estimate covering the
/// truncated tail and accumulated rounding.
fn sum_series(first: f64, ratio: impl Fn(usize) -> f64) -> SpecialFnResult {
    let mut sum = 0.0;
    let mut term = first;
    let mut n_terms = 0;
    let mut tail = 0.0;
    for k in 0..MAX_TERMS {
        sum += term;
        n_terms += 1;
        let r = ratio(k);
        if term == 0.0 {
            break;
        }
        if term.abs() < STOP_RATIO * sum.abs() || k + 1 == MAX_TERMS {
            // ratios decrease monotonically, so the tail is dominated by a
            // geometric series with the current ratio
            tail = if r < 1.0 {
                term.abs() * r / (1.0 - r)
            } else {
                f64::INFINITY
            };
            break;
        }
        term *= r;
    }
    SpecialFnResult {
        value: sum,
        est_abs_error: tail + sum.abs() * f64::EPSILON * n_terms as f64,
    }
}

/// `Γ(n + 1/2)` for small non-negative `n`.
fn gamma_half_integer(n: u32) -> f64 {
    (1..=n).fold(PI.sqrt(), |acc, k| acc * (k as f64 - 0.5))
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `I_q(z)` with an error estimate.
pub fn bessel_i_with_error(order: i32, z: f64) -> Result<SpecialFnResult> {
    check_args("bessel_i", order, z)?;
    // I_{-n} = I_n for integer n
    let q = order.unsigned_abs();
    let half = 0.5 * z;
    let first = half.powi(q as i32) / factorial(q);
    let h2 = half * half;
    Ok(sum_series(first, |k| {
        h2 / ((k as f64 + 1.0) * (k as f64 + 1.0 + q as f64))
    }))
}

/// Modified Bessel function of the first kind `I_q(z)`.
pub fn bessel_i(order: i32, z: f64) -> Result<f64> {
    bessel_i_with_error(order, z).map(|r| r.value)
}

/// `L_q(z)` with an error estimate.
pub fn struve_l_with_error(order: i32, z: f64) -> Result<SpecialFnResult> {
    check_args("struve_l", order, z)?;
    let half = 0.5 * z;
    let q = order as f64;
    // Γ(3/2) Γ(q + 3/2), with q + 3/2 = (q + 1) + 1/2
    let denom = gamma_half_integer(1) * gamma_half_integer((order + 1) as u32);
    let first = half.powi(order + 1) / denom;
    let h2 = half * half;
    Ok(sum_series(first, |k| {
        h2 / ((k as f64 + 1.5) * (k as f64 + q + 1.5))
    }))
}

/// Modified Struve function `L_q(z)`.
pub fn struve_l(order: i32, z: f64) -> Result<f64> {
    struve_l_with_error(order, z).map(|r| r.value)
}

/// `A_±(x) = e^{-x} [I_0(x) ± L_0(x)]`.
///
/// Equivalently `A_-(x) = (2/π) ∫_0^{π/2} e^{-x(1+cos θ)} dθ` and
/// `A_+(x) = (2/π) ∫_{π/2}^{π} e^{-x(1+cos θ)} dθ`: the mean of
/// `e^{-x(1+cos θ)}` over the bright and the dim half of the phase range.
pub fn a_pm(sign: Sign, x: f64) -> Result<f64> {
    let i0 = bessel_i(0, x)?;
    let l0 = struve_l(0, x)?;
    Ok((-x).exp() * (i0 + sign.factor() * l0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_origin() {
        assert_eq!(bessel_i(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_i(1, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_i(2, 0.0).unwrap(), 0.0);
        assert_eq!(struve_l(0, 0.0).unwrap(), 0.0);
        assert!((struve_l(-1, 0.0).unwrap() - 2.0 / PI).abs() < 1e-15);
        assert_eq!(a_pm(Sign::Plus, 0.0).unwrap(), 1.0);
        assert_eq!(a_pm(Sign::Minus, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn negative_order_bessel_matches_positive() {
        for z in [0.0, 0.3, 1.7, 9.0, 20.0] {
            assert_eq!(bessel_i(-1, z).unwrap(), bessel_i(1, z).unwrap());
        }
    }

    #[test]
    fn rejects_unsupported_orders_and_arguments() {
        assert!(bessel_i(3, 1.0).is_err());
        assert!(bessel_i(-2, 1.0).is_err());
        assert!(struve_l(5, 1.0).is_err());
        assert!(bessel_i(0, -0.1).is_err());
        assert!(struve_l(0, 20.5).is_err());
        assert!(a_pm(Sign::Minus, f64::NAN).is_err());
    }

    #[test]
    fn struve_recurrence_links_orders() {
        // L_{q-1}(z) - L_{q+1}(z) = (2q/z) L_q(z) + (z/2)^q / (√π Γ(q + 3/2))
        for z in [0.2, 1.0, 3.5, 12.0] {
            let lhs = struve_l(0, z).unwrap() - struve_l(2, z).unwrap();
            let rhs = 2.0 / z * struve_l(1, z).unwrap()
                + 0.5 * z / (PI.sqrt() * gamma_half_integer(2));
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0), "z={z}");
        }
    }

    #[test]
    fn a_minus_sum_identity() {
        for x in [0.0, 0.01, 0.35, 2.0, 7.5, 20.0] {
            let sum = a_pm(Sign::Plus, x).unwrap() + a_pm(Sign::Minus, x).unwrap();
            let expected = 2.0 * (-x).exp() * bessel_i(0, x).unwrap();
            assert!((sum - expected).abs() < 1e-15, "x={x}");
        }
    }

    #[test]
    fn error_estimates_are_small_relative_to_value() {
        for order in -1..=2 {
            for i in 0..=100 {
                let z = 0.2 * i as f64;
                for r in [
                    bessel_i_with_error(order, z).unwrap(),
                    struve_l_with_error(order, z).unwrap(),
                ] {
                    assert!(r.est_abs_error >= 0.0);
                    assert!(
                        r.est_abs_error <= 1e-12 * r.value.abs().max(1.0),
                        "order {order} z {z}: {r:?}"
                    );
                }
            }
        }
    }
}

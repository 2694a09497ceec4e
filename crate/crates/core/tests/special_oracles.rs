//! Special functions against brute-force series, integral representations and
//! independent quadrature.

use passive_qkd::quadrature::integrate_default;
use passive_qkd::special::{a_pm, bessel_i, bessel_i_with_error, struve_l, struve_l_with_error, Sign};
use statrs::function::gamma::gamma;
use std::f64::consts::{FRAC_PI_2, PI};

/// Fixed 50-term power series of `I_q(z)` built from the gamma function.
fn bessel_series(q: i32, z: f64) -> f64 {
    let q = q.abs() as f64;
    (0..50)
        .map(|k| {
            let k = k as f64;
            (0.5 * z).powf(2.0 * k + q) / (gamma(k + 1.0) * gamma(k + q + 1.0))
        })
        .sum()
}

/// Fixed 50-term power series of `L_q(z)`.
fn struve_series(q: i32, z: f64) -> f64 {
    let q = q as f64;
    (0..50)
        .map(|k| {
            let k = k as f64;
            (0.5 * z).powf(2.0 * k + q + 1.0) / (gamma(k + 1.5) * gamma(k + q + 1.5))
        })
        .sum()
}

fn grid() -> impl Iterator<Item = f64> {
    (0..100).map(|i| 20.0 * i as f64 / 99.0)
}

/// Double precision cannot hold `I_q(20) ≈ 4e7` to an absolute 1e-12, so the
/// bound scales with the magnitude once it exceeds one.
fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn bessel_matches_series_on_grid() {
    for q in -1..=2 {
        for z in grid() {
            let v = bessel_i(q, z).unwrap();
            let s = bessel_series(q, z);
            assert!(close(v, s, 1e-12), "I_{q}({z}): {v} vs {s}");
        }
    }
}

#[test]
fn struve_matches_series_on_grid() {
    for q in -1..=2 {
        for z in grid() {
            let v = struve_l(q, z).unwrap();
            let s = struve_series(q, z);
            assert!(close(v, s, 1e-12), "L_{q}({z}): {v} vs {s}");
        }
    }
}

#[test]
fn bessel_i0_at_one() {
    let reference = bessel_series(0, 1.0);
    assert!((bessel_i(0, 1.0).unwrap() - reference).abs() < 1e-15);
    assert!((reference - 1.266_065_877_752_008_4).abs() < 1e-15);
}

#[test]
fn struve_at_origin() {
    assert_eq!(struve_l(0, 0.0).unwrap(), 0.0);
    assert!((struve_l(-1, 0.0).unwrap() - 2.0 / PI).abs() < 1e-15);
    let s = struve_series(-1, 0.0);
    assert!((s - 2.0 / PI).abs() < 1e-14, "{s}");
}

#[test]
fn struve_l0_matches_sinh_integral() {
    // L_0(z) = (2/π) ∫_0^{π/2} sinh(z cos θ) dθ
    for z in [0.5, 2.0, 7.5] {
        let integral = integrate_default(|th: f64| (z * th.cos()).sinh(), 0.0, FRAC_PI_2).unwrap();
        let via_integral = 2.0 / PI * integral;
        let v = struve_l(0, z).unwrap();
        assert!(close(v, via_integral, 1e-11), "z = {z}: {v} vs {via_integral}");
    }
}

#[test]
fn error_estimates_are_small_and_honest() {
    for q in -1..=2 {
        for z in grid() {
            let b = bessel_i_with_error(q, z).unwrap();
            let s = struve_l_with_error(q, z).unwrap();
            assert!(b.est_abs_error <= 1e-12 * b.value.abs().max(1.0));
            assert!(s.est_abs_error <= 1e-12 * s.value.abs().max(1.0));
            assert!((b.value - bessel_series(q, z)).abs() <= b.est_abs_error + 1e-13 * b.value.abs());
        }
    }
}

#[test]
fn a_minus_and_a_plus_are_half_range_averages() {
    // A_-(x) averages e^{-x(1+cos θ)} over the bright half θ ∈ [0, π/2],
    // A_+(x) over the dim half θ ∈ [π/2, π].
    for x in [0.0, 0.01, 0.3, 1.0, 4.0, 12.0, 20.0] {
        let f = |th: f64| (-x * (1.0 + th.cos())).exp();
        let bright = integrate_default(f, 0.0, FRAC_PI_2).unwrap() / FRAC_PI_2;
        let dim = integrate_default(f, FRAC_PI_2, PI).unwrap() / FRAC_PI_2;
        assert!((a_pm(Sign::Minus, x).unwrap() - bright).abs() < 1e-10, "A_-({x})");
        assert!((a_pm(Sign::Plus, x).unwrap() - dim).abs() < 1e-10, "A_+({x})");
    }
}

#[test]
fn full_range_average_is_the_mean_of_both_halves() {
    for x in [0.1, 2.0, 15.0] {
        let full = integrate_default(|th: f64| (-x * (1.0 + th.cos())).exp(), 0.0, PI).unwrap() / PI;
        let mean = 0.5 * (a_pm(Sign::Minus, x).unwrap() + a_pm(Sign::Plus, x).unwrap());
        assert!((full - mean).abs() < 1e-10);
        assert!((full - (-x).exp() * bessel_i(0, x).unwrap()).abs() < 1e-10);
    }
}

#[test]
fn a_ordering_and_sum() {
    for x in grid() {
        let minus = a_pm(Sign::Minus, x).unwrap();
        let plus = a_pm(Sign::Plus, x).unwrap();
        assert!(minus > 0.0 && minus <= plus);
        let sum = 2.0 * (-x).exp() * bessel_i(0, x).unwrap();
        assert!((minus + plus - sum).abs() < 1e-14);
    }
}

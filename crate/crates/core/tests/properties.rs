//! Randomized invariants of the analytic model.

use num_complex::Complex64;
use passive_qkd::decoy::estimate;
use passive_qkd::detection::{observe, ChannelConfig};
use passive_qkd::optics::{
    propagate_pure_network, sfg_complete_conversion, theta_lambda, zeta, CoherentAmplitude, Polarization, SourceConfig,
};
use passive_qkd::photon::{build_stats_for, Interval};
use passive_qkd::rate::{binary_entropy, channel_truth, passive_two_interval_rate, rate_interval_bounds, rate_interval_exact};
use passive_qkd::special::{bessel_i, struve_l};
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_4, PI, TAU};

fn wrapped_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entropy_is_symmetric_and_bounded(x in 0.0f64..=1.0) {
        let h = binary_entropy(x).unwrap();
        prop_assert!((0.0..=1.0).contains(&h));
        prop_assert!((h - binary_entropy(1.0 - x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn bessel_recurrence(z in 0.01f64..20.0) {
        // I_{q-1} - I_{q+1} = (2q/z) I_q
        let lhs = bessel_i(0, z).unwrap() - bessel_i(2, z).unwrap();
        let rhs = 2.0 / z * bessel_i(1, z).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
        // L_{q-1} - L_{q+1} = (2q/z) L_q + (z/2)^q / (√π Γ(q + 3/2)), q = 1
        let lhs = struve_l(0, z).unwrap() - struve_l(2, z).unwrap();
        let rhs = 2.0 / z * struve_l(1, z).unwrap() + 0.5 * z / (PI.sqrt() * 0.75 * PI.sqrt());
        prop_assert!((lhs - rhs).abs() <= 1e-11 * rhs.abs().max(1.0));
    }

    #[test]
    fn network_energy_and_phase(phases in prop::array::uniform4(0.0f64..TAU), mu in 0.01f64..200.0, t in 0.001f64..0.999) {
        let out = propagate_pure_network(phases, mu, t);
        let theta = phases[1] - phases[0];
        let total = out.c3.intensity() + out.d3.intensity();
        prop_assert!((total - zeta(theta, mu)).abs() <= 1e-12 * (4.0 * mu).max(1.0));
        prop_assert!((out.c3.intensity() - t * zeta(theta, mu)).abs() <= 1e-12 * (4.0 * mu).max(1.0));
        let shifted = propagate_pure_network([phases[0], phases[1], phases[2] + 0.7, phases[3] + 0.7], mu, t);
        prop_assert!(wrapped_diff(shifted.psi, out.psi) < 1e-12);
    }

    #[test]
    fn monitored_intensity_falls_with_phase(a in 0.0f64..PI, b in 0.0f64..PI) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let d_lo = propagate_pure_network([0.0, lo, 0.0, 0.0], 10.0, 0.01).d3.intensity();
        let d_hi = propagate_pure_network([0.0, hi, 0.0, 0.0], 10.0, 0.01).d3.intensity();
        prop_assert!(d_hi <= d_lo + 1e-12);
    }

    #[test]
    fn sfg_preserves_magnitude(re in -5.0f64..5.0, im in -5.0f64..5.0, pump in 0.0f64..TAU) {
        let input = CoherentAmplitude::new(Complex64::new(re, im), Polarization::Plus45, "c1");
        let out = sfg_complete_conversion(&input, pump, 3.0);
        prop_assert!((out.amplitude.norm() - input.amplitude.norm()).abs() < 1e-12);
        let expected = -Complex64::from_polar(1.0, pump) * input.amplitude;
        prop_assert!((out.amplitude - expected).norm() < 1e-12);
    }

    #[test]
    fn threshold_round_trip(mu in 0.1f64..500.0, t in 0.001f64..0.5, frac in 0.01f64..0.99) {
        let lambda = frac * 4.0 * mu * (1.0 - t);
        let cfg = SourceConfig::new(mu, t, lambda, 0.3).unwrap();
        let th = theta_lambda(&cfg).unwrap();
        prop_assert!(th > 0.0 && th < PI);
        prop_assert!(((1.0 - t) * zeta(th, mu) - lambda).abs() <= 1e-12 * lambda.max(1.0));
    }

    #[test]
    fn photon_statistics_are_distributions(mu_t in 0.001f64..1.0, th in 0.05f64..(PI - 0.05)) {
        let stats = build_stats_for(mu_t, th, 12).unwrap();
        prop_assert!((stats.p_s - th / PI).abs() < 1e-15);
        prop_assert!((stats.p_s + stats.p_d - 1.0).abs() < 1e-15);
        for interval in Interval::BOTH {
            let p = stats.get(interval);
            prop_assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
            let total: f64 = p.iter().sum();
            prop_assert!(total <= 1.0 + 1e-12);
            prop_assert!(total + stats.tail_bound >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn observed_statistics_stay_physical(mu_t in 0.01f64..1.0, th in 0.1f64..3.0, omega in 0.0f64..0.78, d in 0.0f64..250.0) {
        let ch = ChannelConfig::default().with_distance(d);
        let obs = observe(mu_t, th, omega, &ch).unwrap();
        for interval in Interval::BOTH {
            prop_assert!(obs.gain(interval) > 0.0 && obs.gain(interval) <= 1.0);
            prop_assert!(obs.qber(interval) >= 0.0 && obs.qber(interval) <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn decoy_bounds_bracket_truth_and_ignore_labels(
        mu_t in 0.05f64..0.6,
        th in 0.3f64..2.9,
        omega in 0.0f64..0.7,
        d in 0.0f64..180.0,
    ) {
        let ch = ChannelConfig::default().with_distance(d);
        let stats = build_stats_for(mu_t, th, 2).unwrap();
        let obs = observe(mu_t, th, omega, &ch).unwrap();
        let b = estimate(&stats, &obs).unwrap();
        let truth = channel_truth(&ch, omega).unwrap();
        prop_assert!(b.y0_lower <= truth.y0 * (1.0 + 1e-9));
        prop_assert!(truth.y0 <= b.y0_upper * (1.0 + 1e-9));
        prop_assert!(b.y1_lower <= truth.y1 * (1.0 + 1e-9));
        prop_assert!(b.e1_upper >= truth.e1 * (1.0 - 1e-9));
        for interval in Interval::BOTH {
            let p = stats.get(interval);
            prop_assert!(b.combined(interval) <= (p[1] * truth.y1 + p[0] * truth.y0) * (1.0 + 1e-9));
        }

        let swapped = estimate(&stats.swapped(), &obs.swapped()).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()) + 1e-300;
        prop_assert!(rel(b.y0_lower, swapped.y0_lower));
        prop_assert!(rel(b.y0_upper, swapped.y0_upper));
        prop_assert!(rel(b.y1_lower, swapped.y1_lower));
        prop_assert!(rel(b.e1_upper, swapped.e1_upper));
        prop_assert!(rel(b.combined_signal, swapped.combined_decoy));
    }

    #[test]
    fn bounds_are_conservative(mu_t in 0.05f64..0.6, omega in 0.0f64..0.7, d in 0.0f64..180.0) {
        let th = std::f64::consts::FRAC_PI_2;
        let ch = ChannelConfig::default().with_distance(d);
        let stats = build_stats_for(mu_t, th, 2).unwrap();
        let obs = observe(mu_t, th, omega, &ch).unwrap();
        let b = estimate(&stats, &obs).unwrap();
        for interval in Interval::BOTH {
            let bound = rate_interval_bounds(interval, &obs, &b, &ch, omega).unwrap();
            let exact = rate_interval_exact(interval, &stats, &obs, &ch, omega).unwrap();
            prop_assert!(bound <= exact + 1e-18);
        }
    }

    #[test]
    fn rate_never_grows_with_distance(mu_t in 0.05f64..0.5, omega in 0.0f64..FRAC_PI_4, d in 0.0f64..200.0, step in 0.5f64..30.0) {
        let th = std::f64::consts::FRAC_PI_2;
        let ch = ChannelConfig::default();
        let near = passive_two_interval_rate(mu_t, th, omega, &ch.with_distance(d), 2).unwrap();
        let far = passive_two_interval_rate(mu_t, th, omega, &ch.with_distance(d + step), 2).unwrap();
        prop_assert!(near.rate_total >= 0.0);
        prop_assert!(far.rate_total <= near.rate_total * (1.0 + 1e-12));
    }
}

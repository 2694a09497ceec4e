//! Secret key rates: the two-interval passive transmitter with decoy bounds,
//! the passive transmitter with perfectly known parameters, and the active
//! source with infinitely many decoy settings.

use crate::decoy::{estimate, DecoyBounds};
use crate::detection::{eta_sys, observe, observe_fixed_intensity, observe_range, ChannelConfig, ObservedStats};
use crate::error::{domain, Result};
use crate::photon::{build_stats_for, p_acc, pn_over, Interval, PhaseRange, PhotonStats};
use std::f64::consts::{FRAC_PI_4, PI};

/// Binary Shannon entropy, with `H(0) = H(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(domain("binary_entropy", format!("x = {x} not in [0, 1]")));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// Entropy of an error rate, saturating at one bit for rates at or above 1/2.
fn error_entropy(e: f64) -> f64 {
    binary_entropy(e.clamp(0.0, 0.5)).expect("clamped into domain")
}

/// Yields and single-photon error rate of the honest channel model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelTruth {
    pub y0: f64,
    pub y1: f64,
    pub e1: f64,
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `Y₀`, `Y₁` and `e₁` for single photons whose polarization is uniform over
/// an acceptance arc of half-width `π/4 − Ω`.
pub fn channel_truth(ch: &ChannelConfig, omega: f64) -> Result<ChannelTruth> {
    if !(0.0..=FRAC_PI_4).contains(&omega) {
        return Err(domain("channel_truth", format!("omega = {omega} not in [0, pi/4]")));
    }
    let eta = eta_sys(ch);
    let eps = ch.epsilon_b;
    let y0 = ch.y0();
    let y1 = yield_n(1, ch);
    // 4/(π − 4Ω) · sin(π/4 − Ω) = sinc(π/4 − Ω)
    let mean_cos = sinc(FRAC_PI_4 - omega);
    let e1 = (y0 + (1.0 - eps).powi(2) * eta - (1.0 - eps) * eta * mean_cos) / (2.0 * y1);
    Ok(ChannelTruth { y0, y1, e1 })
}

/// `Y_n = 1 − (1 − Y₀)(1 − η_sys)ⁿ`.
pub fn yield_n(n: usize, ch: &ChannelConfig) -> f64 {
    let y0 = ch.y0();
    y0 - (1.0 - y0) * (n as f64 * (-eta_sys(ch)).ln_1p()).exp_m1()
}

/// Key rate of one interval from the decoy bounds:
/// `q·p_acc·{−Q f H(E) + (p₁Y₁ + p₀Y₀)ᴸ [1 − H(e₁ᵁ)]}`. May be negative.
pub fn rate_interval_bounds(
    interval: Interval,
    obs: &ObservedStats,
    bounds: &DecoyBounds,
    ch: &ChannelConfig,
    omega: f64,
) -> Result<f64> {
    let q = obs.gain(interval);
    let e = obs.qber(interval);
    let leak = q * ch.f_ec * error_entropy(e);
    let secret = bounds.combined(interval) * (1.0 - error_entropy(bounds.e1_upper));
    Ok(ch.q_eff * p_acc(omega)? * (secret - leak))
}

/// Key rate of one interval with exactly known `Y₀`, `Y₁`, `e₁`.
pub fn rate_interval_exact(
    interval: Interval,
    stats: &PhotonStats,
    obs: &ObservedStats,
    ch: &ChannelConfig,
    omega: f64,
) -> Result<f64> {
    let truth = channel_truth(ch, omega)?;
    let p = stats.get(interval);
    let q = obs.gain(interval);
    let leak = q * ch.f_ec * error_entropy(obs.qber(interval));
    let secret = p[1] * truth.y1 * (1.0 - error_entropy(truth.e1)) + p[0] * truth.y0;
    Ok(ch.q_eff * p_acc(omega)? * (secret - leak))
}

/// Outcome of a two-interval key-rate evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct RateResult {
    pub rate_total: f64,
    pub rate_signal: f64,
    pub rate_decoy: f64,
    pub bounds_used: DecoyBounds,
    pub observed: ObservedStats,
    pub stats: PhotonStats,
}

/// `R = p_s max{R^s, 0} + p_d max{R^d, 0}`.
pub fn total_rate(
    stats: &PhotonStats,
    obs: &ObservedStats,
    bounds: &DecoyBounds,
    ch: &ChannelConfig,
    omega: f64,
) -> Result<RateResult> {
    let rate_signal = rate_interval_bounds(Interval::Signal, obs, bounds, ch, omega)?;
    let rate_decoy = rate_interval_bounds(Interval::Decoy, obs, bounds, ch, omega)?;
    Ok(RateResult {
        rate_total: stats.p_s * rate_signal.max(0.0) + stats.p_d * rate_decoy.max(0.0),
        rate_signal,
        rate_decoy,
        bounds_used: bounds.clone(),
        observed: *obs,
        stats: stats.clone(),
    })
}

/// Full pipeline for the two-interval passive transmitter: statistics,
/// observed gains and error rates, decoy bounds and key rate.
pub fn passive_two_interval_rate(
    mu_t: f64,
    theta_lambda: f64,
    omega: f64,
    ch: &ChannelConfig,
    n_max: usize,
) -> Result<RateResult> {
    let stats = build_stats_for(mu_t, theta_lambda, n_max)?;
    let obs = observe(mu_t, theta_lambda, omega, ch)?;
    let bounds = estimate(&stats, &obs)?;
    total_rate(&stats, &obs, &bounds, ch, omega)
}

/// Key rate of the passive transmitter when every pulse is used as one
/// interval over the full phase range and `Y₀`, `Y₁`, `e₁` are known
/// exactly. `zeta = 2μt`. May be negative.
pub fn asymptotic_passive_rate(zeta: f64, omega: f64, ch: &ChannelConfig) -> Result<f64> {
    let mu_t = 0.5 * zeta;
    let truth = channel_truth(ch, omega)?;
    let p0 = pn_over(0, mu_t, PhaseRange::FULL)?;
    let p1 = pn_over(1, mu_t, PhaseRange::FULL)?;
    let (q, e) = observe_range(mu_t, PhaseRange::FULL, omega, ch)?;
    let leak = q * ch.f_ec * error_entropy(e);
    let secret = p1 * truth.y1 * (1.0 - error_entropy(truth.e1)) + p0 * truth.y0;
    Ok(ch.q_eff * p_acc(omega)? * (secret - leak))
}

/// Key rate of an active decoy-state source with Poissonian pulses of mean
/// `mu` and perfectly prepared BB84 states. May be negative.
pub fn active_infinite_decoy_rate(mu: f64, ch: &ChannelConfig) -> Result<f64> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(domain("active_infinite_decoy_rate", format!("mu = {mu} must be > 0")));
    }
    let truth = channel_truth(ch, FRAC_PI_4)?;
    let (q, e) = observe_fixed_intensity(mu, FRAC_PI_4, ch)?;
    let q1 = mu * (-mu).exp() * truth.y1;
    let q0 = (-mu).exp() * truth.y0;
    Ok(ch.q_eff * (-q * ch.f_ec * error_entropy(e) + q1 * (1.0 - error_entropy(truth.e1)) + q0))
}

/// Fraction of pulses in the signal interval for a threshold angle.
pub fn signal_probability(theta_lambda: f64) -> f64 {
    theta_lambda / PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn reference_channel(d: f64) -> ChannelConfig {
        ChannelConfig::default().with_distance(d)
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
        // 50-digit reference value of H(0.11)
        let reference = 0.499_915_958_164_528_2;
        assert!((binary_entropy(0.11).unwrap() - reference).abs() < 1e-15);
    }

    #[test]
    fn e1_limits() {
        let ch = reference_channel(60.0);
        let eta = eta_sys(&ch);
        let eps = ch.epsilon_b;
        let t = channel_truth(&ch, FRAC_PI_4).unwrap();
        let expected = (t.y0 + (1.0 - eps).powi(2) * eta - (1.0 - eps) * eta) / (2.0 * t.y1);
        assert!((t.e1 - expected).abs() < 1e-15);
        let near = channel_truth(&ch, FRAC_PI_4 - 1e-6).unwrap();
        assert!((near.e1 - expected).abs() < 1e-10);
        let dark = ChannelConfig {
            eta_b: 1e-300,
            ..ch
        };
        assert!((channel_truth(&dark, 0.3).unwrap().e1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn no_single_photon_credit_at_half_error() {
        let stats = build_stats_for(0.175, FRAC_PI_2, 2).unwrap();
        let ch = reference_channel(100.0);
        let obs = observe(0.175, FRAC_PI_2, 0.393, &ch).unwrap();
        let mut bounds = estimate(&stats, &obs).unwrap();
        bounds.e1_upper = 0.5;
        let r = rate_interval_bounds(Interval::Signal, &obs, &bounds, &ch, 0.393).unwrap();
        let expected = ch.q_eff * p_acc(0.393).unwrap() * -(obs.q_signal * ch.f_ec * binary_entropy(obs.e_signal).unwrap());
        assert!((r - expected).abs() < 1e-18);
        assert!(r <= 0.0);
    }

    #[test]
    fn zero_gain_gives_zero_rate() {
        let obs = ObservedStats {
            q_signal: 0.0,
            q_decoy: 0.0,
            e_signal: 0.0,
            e_decoy: 0.0,
        };
        let bounds = DecoyBounds {
            y0_lower: 0.0,
            y0_upper: 0.0,
            y1_lower: 0.0,
            e1_upper: 0.5,
            combined_signal: 0.0,
            combined_decoy: 0.0,
            clamped: vec![],
        };
        let r = rate_interval_bounds(Interval::Decoy, &obs, &bounds, &reference_channel(0.0), 0.2).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn total_rate_clamps_negative_intervals() {
        let r = passive_two_interval_rate(0.175, FRAC_PI_2, 0.393, &reference_channel(250.0), 2).unwrap();
        assert!(r.rate_signal < 0.0 && r.rate_decoy < 0.0);
        assert_eq!(r.rate_total, 0.0);
    }

    #[test]
    fn pipeline_at_short_distance() {
        let r = passive_two_interval_rate(0.175, FRAC_PI_2, 0.393, &reference_channel(0.0), 12).unwrap();
        assert!(r.rate_total > 1e-3);
        let expected = 0.5 * r.rate_signal.max(0.0) + 0.5 * r.rate_decoy.max(0.0);
        assert!((r.rate_total - expected).abs() < 1e-18);
    }

    #[test]
    fn yields_match_truth() {
        let ch = reference_channel(30.0);
        let t = channel_truth(&ch, 0.2).unwrap();
        assert_eq!(yield_n(0, &ch), t.y0);
        assert_eq!(yield_n(1, &ch), t.y1);
        let direct = 1.0 - (1.0 - t.y0) * (1.0 - eta_sys(&ch)).powi(3);
        assert!((yield_n(3, &ch) - direct).abs() < 1e-15);
    }

    #[test]
    fn active_rate_turns_negative_for_dim_pulses_far_away() {
        let r = active_infinite_decoy_rate(1e-3, &reference_channel(250.0)).unwrap();
        assert!(r <= 0.0);
        assert!(active_infinite_decoy_rate(0.0, &reference_channel(0.0)).is_err());
    }
}

//! Two-setting decoy estimation: bounds on the background yield `Y₀`, the
//! single-photon yield `Y₁`, the single-photon error rate `e₁`, and the
//! combined single-photon plus vacuum contribution of each interval.
//!
//! The bounds rely on the two intervals' photon-number statistics being
//! ordered: `pₙ^s/pₙ^d` must move monotonically with `n`, which makes the
//! three 2×2 determinants below non-zero and of one common sign. The
//! formulas are ratios of those determinants, so they are unchanged when
//! the two intervals are relabelled.

use crate::detection::ObservedStats;
use crate::error::{Error, Result};
use crate::photon::{Interval, PhotonStats};

/// Error rate of background counts (random background).
pub const E0: f64 = 0.5;

/// Determinants whose signs the estimation depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationConditions {
    /// `p₁^d p₀^s − p₁^s p₀^d`
    pub det_01: f64,
    /// `p₂^d p₁^s − p₂^s p₁^d`
    pub det_12: f64,
    /// `p₂^d p₀^s − p₂^s p₀^d`
    pub det_02: f64,
}

impl EstimationConditions {
    pub fn from_stats(stats: &PhotonStats) -> Self {
        let (s, d) = (&stats.p_signal, &stats.p_decoy);
        Self {
            det_01: d[1] * s[0] - s[1] * d[0],
            det_12: d[2] * s[1] - s[2] * d[1],
            det_02: d[2] * s[0] - s[2] * d[0],
        }
    }

    /// Checks that all determinants are non-zero and share one sign.
    pub fn check(&self) -> Result<()> {
        let named = [
            ("p1d*p0s - p1s*p0d != 0", self.det_01),
            ("p2d*p1s - p2s*p1d != 0", self.det_12),
            ("p2d*p0s - p2s*p0d != 0", self.det_02),
        ];
        for (condition, value) in named {
            if value == 0.0 || !value.is_finite() {
                return Err(Error::DegenerateEstimation { condition, value });
            }
        }
        let sign = self.det_12.signum();
        if self.det_01.signum() != sign {
            return Err(Error::DegenerateEstimation {
                condition: "sign(p1d*p0s - p1s*p0d) == sign(p2d*p1s - p2s*p1d)",
                value: self.det_01,
            });
        }
        if self.det_02.signum() != sign {
            return Err(Error::DegenerateEstimation {
                condition: "sign(p2d*p0s - p2s*p0d) == sign(p2d*p1s - p2s*p1d)",
                value: self.det_02,
            });
        }
        Ok(())
    }
}

/// Bounds produced by the estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoyBounds {
    pub y0_lower: f64,
    pub y0_upper: f64,
    pub y1_lower: f64,
    pub e1_upper: f64,
    /// Lower bound on `p₁^s Y₁ + p₀^s Y₀`.
    pub combined_signal: f64,
    /// Lower bound on `p₁^d Y₁ + p₀^d Y₀`.
    pub combined_decoy: f64,
    /// Names of the bounds that were clamped into their physical range.
    pub clamped: Vec<&'static str>,
}

impl DecoyBounds {
    pub fn combined(&self, interval: Interval) -> f64 {
        match interval {
            Interval::Signal => self.combined_signal,
            Interval::Decoy => self.combined_decoy,
        }
    }
}

/// `Y₀ᵁ = min{E^d Q^d/(p₀^d e₀), E^s Q^s/(p₀^s e₀), 1}`.
pub fn y0_upper(stats: &PhotonStats, obs: &ObservedStats) -> f64 {
    let candidate = |p0: f64, eq: f64| if p0 > 0.0 { eq / (p0 * E0) } else { f64::INFINITY };
    candidate(stats.p_decoy[0], obs.e_decoy * obs.q_decoy)
        .min(candidate(stats.p_signal[0], obs.e_signal * obs.q_signal))
        .min(1.0)
}

/// `Y₀ᴸ = max{(p₁^d Q^s − p₁^s Q^d)/(p₁^d p₀^s − p₁^s p₀^d), 0}`.
pub fn y0_lower(stats: &PhotonStats, obs: &ObservedStats) -> Result<f64> {
    let (s, d) = (&stats.p_signal, &stats.p_decoy);
    let det = EstimationConditions::from_stats(stats).det_01;
    if det == 0.0 {
        return Err(Error::DegenerateEstimation {
            condition: "p1d*p0s - p1s*p0d != 0",
            value: det,
        });
    }
    Ok(((d[1] * obs.q_signal - s[1] * obs.q_decoy) / det).max(0.0))
}

fn y1_lower_with(stats: &PhotonStats, obs: &ObservedStats, y0u: f64) -> Result<f64> {
    let (s, d) = (&stats.p_signal, &stats.p_decoy);
    let cond = EstimationConditions::from_stats(stats);
    if cond.det_12 == 0.0 {
        return Err(Error::DegenerateEstimation {
            condition: "p2d*p1s - p2s*p1d != 0",
            value: cond.det_12,
        });
    }
    let numerator = d[2] * obs.q_signal - s[2] * obs.q_decoy - cond.det_02 * y0u;
    Ok((numerator / cond.det_12).max(0.0))
}

/// `Y₁ᴸ`, using `Y₀ᵁ` from [`y0_upper`].
pub fn y1_lower(stats: &PhotonStats, obs: &ObservedStats) -> Result<f64> {
    y1_lower_with(stats, obs, y0_upper(stats, obs))
}

/// Smallest of the three single-photon error-rate estimators, clamped to
/// `[0, 1]`.
pub fn e1_upper(stats: &PhotonStats, obs: &ObservedStats, y0l: f64, y1l: f64) -> Result<f64> {
    if y1l <= 0.0 {
        return Err(Error::EstimationFailure);
    }
    let (s, d) = (&stats.p_signal, &stats.p_decoy);
    let eq_s = obs.e_signal * obs.q_signal;
    let eq_d = obs.e_decoy * obs.q_decoy;
    let det = EstimationConditions::from_stats(stats).det_01;
    let candidates = [
        (eq_d - d[0] * y0l * E0) / (d[1] * y1l),
        (eq_s - s[0] * y0l * E0) / (s[1] * y1l),
        (s[0] * eq_d - d[0] * eq_s) / (det * y1l),
    ];
    let best = candidates
        .into_iter()
        .filter(|v| !v.is_nan())
        .fold(f64::INFINITY, f64::min);
    Ok(best.clamp(0.0, 1.0))
}

/// Lower bound on `p₁^i Y₁ + p₀^i Y₀`.
pub fn combined_lower(
    interval: Interval,
    stats: &PhotonStats,
    obs: &ObservedStats,
    y0u: f64,
) -> Result<f64> {
    let (s, d) = (&stats.p_signal, &stats.p_decoy);
    let cond = EstimationConditions::from_stats(stats);
    if cond.det_12 == 0.0 {
        return Err(Error::DegenerateEstimation {
            condition: "p2d*p1s - p2s*p1d != 0",
            value: cond.det_12,
        });
    }
    let p = stats.get(interval);
    let single = p[1] * (d[2] * obs.q_signal - s[2] * obs.q_decoy) / cond.det_12;
    let vacuum = (p[0] - p[1] * cond.det_02 / cond.det_12) * y0u;
    Ok((single + vacuum).max(0.0))
}

/// Runs the full estimation after checking the sign conditions.
///
/// A vanishing `Y₁ᴸ` is not an error here: `e₁ᵁ` is then set to 1/2, which
/// removes any single-photon credit from the key rate.
pub fn estimate(stats: &PhotonStats, obs: &ObservedStats) -> Result<DecoyBounds> {
    EstimationConditions::from_stats(stats).check()?;
    let mut clamped = Vec::new();
    let raw_y0u = {
        let (s, d) = (&stats.p_signal, &stats.p_decoy);
        (obs.e_decoy * obs.q_decoy / (d[0] * E0)).min(obs.e_signal * obs.q_signal / (s[0] * E0))
    };
    let y0_upper = y0_upper(stats, obs);
    if raw_y0u > 1.0 {
        clamped.push("y0_upper");
    }
    let y0_lower = y0_lower(stats, obs)?;
    if y0_lower == 0.0 {
        clamped.push("y0_lower");
    }
    let y1_lower = y1_lower_with(stats, obs, y0_upper)?;
    if y1_lower == 0.0 {
        clamped.push("y1_lower");
    }
    let e1_upper = match e1_upper(stats, obs, y0_lower, y1_lower) {
        Ok(v) => {
            if v == 0.0 || v == 1.0 {
                clamped.push("e1_upper");
            }
            v
        }
        Err(Error::EstimationFailure) => {
            clamped.push("e1_upper");
            0.5
        }
        Err(e) => return Err(e),
    };
    let combined_signal = combined_lower(Interval::Signal, stats, obs, y0_upper)?;
    let combined_decoy = combined_lower(Interval::Decoy, stats, obs, y0_upper)?;
    if combined_signal == 0.0 {
        clamped.push("combined_signal");
    }
    if combined_decoy == 0.0 {
        clamped.push("combined_decoy");
    }
    Ok(DecoyBounds {
        y0_lower,
        y0_upper,
        y1_lower,
        e1_upper,
        combined_signal,
        combined_decoy,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photon::build_stats_for;
    use std::f64::consts::FRAC_PI_2;

    fn stats() -> PhotonStats {
        build_stats_for(0.175, FRAC_PI_2, 12).unwrap()
    }

    #[test]
    fn zero_error_rates_give_zero_background_bound() {
        let obs = ObservedStats {
            q_signal: 0.02,
            q_decoy: 0.005,
            e_signal: 0.0,
            e_decoy: 0.0,
        };
        assert_eq!(y0_upper(&stats(), &obs), 0.0);
    }

    #[test]
    fn background_bound_is_capped_at_one() {
        let obs = ObservedStats {
            q_signal: 0.9,
            q_decoy: 0.9,
            e_signal: 0.5,
            e_decoy: 0.5,
        };
        assert_eq!(y0_upper(&stats(), &obs), 1.0);
    }

    #[test]
    fn degenerate_statistics_are_rejected() {
        let mut s = stats();
        s.p_decoy = s.p_signal.clone();
        let obs = ObservedStats {
            q_signal: 0.01,
            q_decoy: 0.01,
            e_signal: 0.02,
            e_decoy: 0.02,
        };
        assert!(matches!(
            y0_lower(&s, &obs),
            Err(Error::DegenerateEstimation { .. })
        ));
        assert!(y1_lower(&s, &obs).is_err());
        assert!(estimate(&s, &obs).is_err());
    }

    #[test]
    fn reference_statistics_satisfy_conditions() {
        for mu_t in [0.01, 0.1, 0.175, 0.5, 1.0] {
            let s = build_stats_for(mu_t, FRAC_PI_2, 12).unwrap();
            let c = EstimationConditions::from_stats(&s);
            c.check().unwrap();
            assert!(c.det_12 < 0.0, "signal interval is the bright one");
        }
    }

    #[test]
    fn e1_needs_positive_single_photon_yield() {
        let obs = ObservedStats {
            q_signal: 0.02,
            q_decoy: 0.005,
            e_signal: 0.01,
            e_decoy: 0.01,
        };
        assert_eq!(
            e1_upper(&stats(), &obs, 0.0, 0.0),
            Err(Error::EstimationFailure)
        );
    }

    #[test]
    fn negative_estimators_clamp_to_zero() {
        // error counts far below what the background alone would produce
        let obs = ObservedStats {
            q_signal: 0.02,
            q_decoy: 0.005,
            e_signal: 1e-9,
            e_decoy: 1e-9,
        };
        assert_eq!(e1_upper(&stats(), &obs, 1e-3, 0.05).unwrap(), 0.0);
    }

    #[test]
    fn relabelling_intervals_leaves_bounds_unchanged() {
        let s = stats();
        let obs = ObservedStats {
            q_signal: 0.0254,
            q_decoy: 0.0057,
            e_signal: 0.0127,
            e_decoy: 0.0128,
        };
        let a = estimate(&s, &obs).unwrap();
        let b = estimate(&s.swapped(), &obs.swapped()).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(1e-300);
        assert!(close(a.y0_upper, b.y0_upper));
        assert!(close(a.y0_lower, b.y0_lower));
        assert!(close(a.y1_lower, b.y1_lower));
        assert!(close(a.e1_upper, b.e1_upper));
        assert!(close(a.combined_signal, b.combined_decoy));
        assert!(close(a.combined_decoy, b.combined_signal));
    }
}

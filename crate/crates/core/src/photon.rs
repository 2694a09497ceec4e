//! Photon-number statistics of the pulses sent to the channel, conditioned on
//! the intensity interval the monitored pulse fell into.
//!
//! The interference phase `θ = θ₂ − θ₁` is uniform on `[0, 2π)`, but every
//! intensity depends on `cos θ` only, so all averages are taken over `[0, π]`.
//! The signal interval is `[0, θ_Λ]` (bright pulses), the decoy interval is
//! `[θ_Λ, π]`.

use crate::error::{domain, Error, Result};
use crate::optics::SourceConfig;
use crate::quadrature::{integrate, QuadOptions};
use crate::special::{a_pm, bessel_i, struve_l, Sign};
use std::f64::consts::{FRAC_2_PI, FRAC_PI_2, FRAC_PI_4, PI};

/// Default photon-number truncation.
pub const DEFAULT_N_MAX: usize = 12;

/// How close `θ_Λ` must be to `π/2` for the closed forms to apply.
pub const HALF_PI_TOLERANCE: f64 = 1e-12;

/// The two intensity intervals of the passive source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Interval {
    Signal,
    Decoy,
}

impl Interval {
    pub const BOTH: [Interval; 2] = [Interval::Signal, Interval::Decoy];

    pub fn range(self, theta_lambda: f64) -> PhaseRange {
        match self {
            Interval::Signal => PhaseRange::new(0.0, theta_lambda),
            Interval::Decoy => PhaseRange::new(theta_lambda, PI),
        }
    }

    /// Probability that a pulse lands in this interval.
    pub fn probability(self, theta_lambda: f64) -> f64 {
        self.range(theta_lambda).probability()
    }

    pub fn name(self) -> &'static str {
        match self {
            Interval::Signal => "signal",
            Interval::Decoy => "decoy",
        }
    }
}

/// A sub-range of the folded interference phase `[0, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseRange {
    pub lo: f64,
    pub hi: f64,
}

impl PhaseRange {
    pub const FULL: PhaseRange = PhaseRange { lo: 0.0, hi: PI };

    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn probability(&self) -> f64 {
        self.width() / PI
    }

    /// Mean of `f(θ)` over the range, by adaptive quadrature.
    pub fn average(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        if self.width() <= 0.0 {
            return Err(domain("phase average", format!("empty range {self:?}")));
        }
        let r = integrate(f, self.lo, self.hi, QuadOptions::default())?;
        Ok(r.value / self.width())
    }
}

pub(crate) fn is_half_pi(theta_lambda: f64) -> bool {
    (theta_lambda - FRAC_PI_2).abs() <= HALF_PI_TOLERANCE
}

/// `e^{-x} xⁿ / n!`
pub fn poisson(n: usize, x: f64) -> f64 {
    let mut p = (-x).exp();
    for k in 1..=n {
        p *= x / k as f64;
    }
    p
}

/// `pₙ` averaged over an arbitrary phase range for intensity `γ(θ) = 2μt(1+cos θ)`.
pub fn pn_over(n: usize, mu_t: f64, range: PhaseRange) -> Result<f64> {
    if mu_t == 0.0 && range.width() > 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    range.average(|theta| poisson(n, 2.0 * mu_t * (1.0 + theta.cos())))
}

/// `pₙ^i` by adaptive quadrature of the Poisson mixture.
pub fn pn_numeric(n: usize, interval: Interval, cfg: &SourceConfig) -> Result<f64> {
    let theta_lambda = cfg.theta_lambda()?;
    pn_over(n, cfg.mu_t(), interval.range(theta_lambda))
}

/// Closed-form `p₀, p₁, p₂` for `θ_Λ = π/2`, with `zeta = 2μt`.
pub fn pn_closed_form(n: usize, interval: Interval, zeta: f64, theta_lambda: f64) -> Result<f64> {
    if !is_half_pi(theta_lambda) {
        return Err(Error::ClosedFormUnsupported { theta_lambda });
    }
    if n > 2 {
        return Err(domain("pn_closed_form", format!("n = {n} not in {{0, 1, 2}}")));
    }
    // decoy forms flip the sign of every Struve term
    let (sign, s) = match interval {
        Interval::Signal => (Sign::Minus, -1.0),
        Interval::Decoy => (Sign::Plus, 1.0),
    };
    let a = a_pm(sign, zeta)?;
    if n == 0 {
        return Ok(a);
    }
    let e = (-zeta).exp();
    let i1_l = bessel_i(1, zeta)? + s * struve_l(-1, zeta)?;
    if n == 1 {
        return Ok(zeta * (a - e * i1_l));
    }
    let i2_l = bessel_i(2, zeta)? + s * struve_l(2, zeta)?;
    let poly = -s * FRAC_2_PI * (1.0 - zeta * zeta / 3.0);
    Ok(0.5 * zeta * (zeta * a + e * (poly + (1.0 - 2.0 * zeta) * i1_l + zeta * i2_l)))
}

/// Acceptance probability `1 − 4Ω/π`.
pub fn p_acc(omega: f64) -> Result<f64> {
    if !(0.0..=FRAC_PI_4).contains(&omega) {
        return Err(domain("p_acc", format!("omega = {omega} not in [0, pi/4]")));
    }
    Ok(1.0 - 4.0 * omega / PI)
}

/// Truncated photon-number distributions for both intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonStats {
    pub p_signal: Vec<f64>,
    pub p_decoy: Vec<f64>,
    pub n_max: usize,
    /// Upper bound on the probability mass above `n_max`, for either interval.
    pub tail_bound: f64,
    pub p_s: f64,
    pub p_d: f64,
    pub theta_lambda: f64,
    pub mu_t: f64,
}

impl PhotonStats {
    pub fn get(&self, interval: Interval) -> &[f64] {
        match interval {
            Interval::Signal => &self.p_signal,
            Interval::Decoy => &self.p_decoy,
        }
    }

    pub fn probability(&self, interval: Interval) -> f64 {
        match interval {
            Interval::Signal => self.p_s,
            Interval::Decoy => self.p_d,
        }
    }

    /// Same statistics with the two intervals' roles exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            p_signal: self.p_decoy.clone(),
            p_decoy: self.p_signal.clone(),
            p_s: self.p_d,
            p_d: self.p_s,
            ..self.clone()
        }
    }
}

/// Poisson tail `Σ_{n > n_max} e^{-x} xⁿ/n!`, summed term by term.
pub fn poisson_tail(n_max: usize, x: f64) -> f64 {
    let mut term = poisson(n_max + 1, x);
    let mut sum = 0.0;
    let mut n = n_max + 1;
    while term > 0.0 && term > 1e-18 * sum {
        sum += term;
        n += 1;
        term *= x / n as f64;
        if n > n_max + 1000 {
            break;
        }
    }
    sum
}

/// Statistics for a given `μt` and threshold angle.
pub fn build_stats_for(mu_t: f64, theta_lambda: f64, n_max: usize) -> Result<PhotonStats> {
    if n_max < 2 {
        return Err(domain("build_stats", format!("n_max = {n_max} must be >= 2")));
    }
    if !(mu_t >= 0.0 && mu_t.is_finite()) {
        return Err(domain("build_stats", format!("mu_t = {mu_t} must be >= 0")));
    }
    if !(theta_lambda > 0.0 && theta_lambda < PI) {
        return Err(domain(
            "build_stats",
            format!("theta_lambda = {theta_lambda} not in (0, pi)"),
        ));
    }
    let closed = is_half_pi(theta_lambda);
    let zeta = 2.0 * mu_t;
    let fill = |interval: Interval| -> Result<Vec<f64>> {
        (0..=n_max)
            .map(|n| {
                if closed && n <= 2 {
                    pn_closed_form(n, interval, zeta, theta_lambda)
                } else {
                    pn_over(n, mu_t, interval.range(theta_lambda))
                }
            })
            .collect()
    };
    let p_s = theta_lambda / PI;
    Ok(PhotonStats {
        p_signal: fill(Interval::Signal)?,
        p_decoy: fill(Interval::Decoy)?,
        n_max,
        tail_bound: poisson_tail(n_max, 4.0 * mu_t),
        p_s,
        p_d: 1.0 - p_s,
        theta_lambda,
        mu_t,
    })
}

/// Statistics for a transmitter configuration.
pub fn build_stats(cfg: &SourceConfig, n_max: usize) -> Result<PhotonStats> {
    build_stats_for(cfg.mu_t(), cfg.theta_lambda()?, n_max)
}

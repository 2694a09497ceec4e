//! Channel and active BB84 receiver model: system transmittance, threshold
//! detector POVM, gains and quantum bit error rates of the two intervals.
//!
//! The definition-level quadratures are authoritative; the `A_±` closed forms
//! (valid for `θ_Λ = π/2`) are kept as an independent cross-check.

use crate::error::{domain, Error, Result};
use crate::optics::SourceConfig;
use crate::photon::{is_half_pi, Interval, PhaseRange};
use crate::quadrature::{integrate, QuadOptions};
use crate::special::{a_pm, Sign};
use std::cell::RefCell;
use std::f64::consts::FRAC_PI_4;

/// Largest tolerated gap between the numeric and closed-form error rates.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-8;

/// Channel, receiver and protocol parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    /// Loss coefficient, dB/km.
    pub alpha: f64,
    /// Transmission distance, km.
    pub distance: f64,
    /// Overall transmittance of the receiver.
    pub eta_b: f64,
    /// Dark count probability per detector per gate.
    pub epsilon_b: f64,
    /// Protocol efficiency (1/2 for standard BB84).
    pub q_eff: f64,
    /// Error-correction inefficiency.
    pub f_ec: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            alpha: 0.2,
            distance: 0.0,
            eta_b: 0.045,
            epsilon_b: 3.2e-7,
            q_eff: 0.5,
            f_ec: 1.22,
        }
    }
}

impl ChannelConfig {
    pub fn with_distance(&self, distance: f64) -> Self {
        Self { distance, ..*self }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            out.push(format!("alpha = {} must be finite and >= 0", self.alpha));
        }
        if !(self.distance >= 0.0 && self.distance.is_finite()) {
            out.push(format!("distance = {} must be finite and >= 0", self.distance));
        }
        if !(self.eta_b > 0.0 && self.eta_b <= 1.0) {
            out.push(format!("eta_B = {} must lie in (0, 1]", self.eta_b));
        }
        if !(self.epsilon_b >= 0.0 && self.epsilon_b < 1.0) {
            out.push(format!("epsilon_B = {} must lie in [0, 1)", self.epsilon_b));
        }
        if !(self.q_eff > 0.0 && self.q_eff <= 1.0) {
            out.push(format!("q_eff = {} must lie in (0, 1]", self.q_eff));
        }
        if !(self.f_ec >= 1.0 && self.f_ec.is_finite()) {
            out.push(format!("f_ec = {} must be finite and >= 1", self.f_ec));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(domain("channel", v.join("; ")))
        }
    }

    /// Background yield `Y₀ = ε_B(2 − ε_B)`: at least one dark count.
    pub fn y0(&self) -> f64 {
        self.epsilon_b * (2.0 - self.epsilon_b)
    }
}

/// `η_sys = η_B · 10^{−αd/10}`.
pub fn eta_sys(ch: &ChannelConfig) -> f64 {
    ch.eta_b * 10f64.powf(-ch.alpha * ch.distance / 10.0)
}

/// Observed gains and error rates of both intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedStats {
    pub q_signal: f64,
    pub q_decoy: f64,
    pub e_signal: f64,
    pub e_decoy: f64,
}

impl ObservedStats {
    pub fn gain(&self, interval: Interval) -> f64 {
        match interval {
            Interval::Signal => self.q_signal,
            Interval::Decoy => self.q_decoy,
        }
    }

    pub fn qber(&self, interval: Interval) -> f64 {
        match interval {
            Interval::Signal => self.e_signal,
            Interval::Decoy => self.e_decoy,
        }
    }

    pub fn swapped(&self) -> Self {
        Self {
            q_signal: self.q_decoy,
            q_decoy: self.q_signal,
            e_signal: self.e_decoy,
            e_decoy: self.e_signal,
        }
    }
}

/// Outcome probabilities of the threshold-detector pair for a Fock input
/// with `n` photons in the correct arm and `m` in the other.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClickProbabilities {
    pub vacuum: f64,
    pub det0: f64,
    pub det1: f64,
    pub double: f64,
}

pub fn click_probabilities(n: u32, m: u32, ch: &ChannelConfig) -> ClickProbabilities {
    let eta = eta_sys(ch);
    let eps = ch.epsilon_b;
    // silent probability of each arm and its complement, kept separate to
    // avoid cancellation when both are tiny
    let lost = |k: u32| -(k as f64 * (-eta).ln_1p()).exp_m1();
    let click0 = eps + (1.0 - eps) * lost(n);
    let click1 = eps + (1.0 - eps) * lost(m);
    let (silent0, silent1) = (1.0 - click0, 1.0 - click1);
    ClickProbabilities {
        vacuum: silent0 * silent1,
        det0: click0 * silent1,
        det1: silent0 * click1,
        double: click0 * click1,
    }
}

fn quad_opts() -> QuadOptions {
    QuadOptions::default()
}

/// Gain of pulses whose phase is uniform over `range`:
/// `1 − (1−ε)² ⟨e^{−η γ(θ)}⟩`, evaluated as `Y₀ + (1−ε)² ⟨1 − e^{−η γ}⟩`
/// to avoid cancellation at long distance.
pub fn gain_over(mu_t: f64, range: PhaseRange, ch: &ChannelConfig) -> Result<f64> {
    let eta = eta_sys(ch);
    let eps = ch.epsilon_b;
    let loss = range.average(|theta| -(-eta * 2.0 * mu_t * (1.0 + theta.cos())).exp_m1())?;
    Ok(ch.y0() + (1.0 - eps).powi(2) * loss)
}

/// Gain `Q^i` by quadrature.
pub fn gain_numeric(interval: Interval, src: &SourceConfig, ch: &ChannelConfig) -> Result<f64> {
    gain_over(src.mu_t(), interval.range(src.theta_lambda()?), ch)
}

/// Gain `Q^i` from `A_±` for `θ_Λ = π/2`, with `zeta = 2μt`.
pub fn gain_closed_form(
    interval: Interval,
    zeta: f64,
    theta_lambda: f64,
    ch: &ChannelConfig,
) -> Result<f64> {
    if !is_half_pi(theta_lambda) {
        return Err(Error::ClosedFormUnsupported { theta_lambda });
    }
    let x = eta_sys(ch) * zeta;
    Ok(1.0 - (1.0 - ch.epsilon_b).powi(2) * a_pm(sign_of(interval), x)?)
}

fn sign_of(interval: Interval) -> Sign {
    match interval {
        Interval::Signal => Sign::Minus,
        Interval::Decoy => Sign::Plus,
    }
}

/// The three detector expectation values `(f₀, f₁, f_dc)` for polarization
/// angle `psi`: correct-arm-only, wrong-arm-only and both-arm photon clicks.
pub fn f_terms_over(
    mu_t: f64,
    range: PhaseRange,
    psi: f64,
    ch: &ChannelConfig,
) -> Result<(f64, f64, f64)> {
    let eta = eta_sys(ch);
    let c = psi.cos();
    let x = |theta: f64| eta * 2.0 * mu_t * (1.0 + theta.cos());
    let f0 = range.average(|th| {
        let x = x(th);
        (-x).exp() * (0.5 * x * (1.0 + c)).exp_m1()
    })?;
    let f1 = range.average(|th| {
        let x = x(th);
        (-x).exp() * (0.5 * x * (1.0 - c)).exp_m1()
    })?;
    let fdc = range.average(|th| {
        let x = x(th);
        (-0.5 * x * (1.0 + c)).exp_m1() * (-0.5 * x * (1.0 - c)).exp_m1()
    })?;
    Ok((f0, f1, fdc))
}

/// Combines detector expectation values into the error probability, with
/// double clicks assigned to an error half of the time.
fn error_numerator(eps: f64, f0: f64, f1: f64, fdc: f64) -> f64 {
    0.5 * (eps * (eps - 1.0) * f0
        + (2.0 + eps * (eps - 3.0)) * f1
        + (1.0 - eps).powi(2) * fdc
        + eps * (2.0 - eps))
}

/// `E_ψ` for pulses uniform over `range`, given the gain `q` of that range.
pub fn qber_psi_over(
    mu_t: f64,
    range: PhaseRange,
    psi: f64,
    q: f64,
    ch: &ChannelConfig,
) -> Result<f64> {
    let (f0, f1, fdc) = f_terms_over(mu_t, range, psi, ch)?;
    Ok(error_numerator(ch.epsilon_b, f0, f1, fdc) / q)
}

/// `E_ψ^i` by quadrature.
pub fn qber_psi(
    interval: Interval,
    psi: f64,
    src: &SourceConfig,
    ch: &ChannelConfig,
) -> Result<f64> {
    let range = interval.range(src.theta_lambda()?);
    let q = gain_over(src.mu_t(), range, ch)?;
    qber_psi_over(src.mu_t(), range, psi, q, ch)
}

/// `E_ψ^i` from the `A_±` closed forms for `θ_Λ = π/2`.
pub fn qber_psi_closed_form(
    interval: Interval,
    psi: f64,
    zeta: f64,
    theta_lambda: f64,
    ch: &ChannelConfig,
) -> Result<f64> {
    let q = gain_closed_form(interval, zeta, theta_lambda, ch)?;
    let sign = sign_of(interval);
    let x = eta_sys(ch) * zeta;
    let c = psi.cos();
    let a = |arg: f64| a_pm(sign, arg);
    let a_x = a(x)?;
    let kappa_plus = x * (1.0 - 0.5 * (1.0 + c));
    let kappa_minus = x * (1.0 - 0.5 * (1.0 - c));
    let eps_plus = 0.5 * x * (1.0 + c);
    let eps_minus = 0.5 * x * (1.0 - c);
    let f0 = -a_x + a(kappa_plus)?;
    let f1 = -a_x + a(kappa_minus)?;
    let fdc = 1.0 + a_x - a(eps_plus)? - a(eps_minus)?;
    Ok(error_numerator(ch.epsilon_b, f0, f1, fdc) / q)
}

/// Half-width `π/4 − Ω` of each acceptance arc.
fn arc_half_width(omega: f64) -> Result<f64> {
    if !(0.0..=FRAC_PI_4).contains(&omega) {
        return Err(domain("qber", format!("omega = {omega} not in [0, pi/4]")));
    }
    Ok(FRAC_PI_4 - omega)
}

/// Mean of `E_ψ` over the acceptance arc around ψ = 0. The arc
/// `[7π/4+Ω, 2π) ∪ [0, π/4−Ω]` is symmetric about zero and `E_ψ` is even,
/// so only `[0, π/4−Ω]` is integrated. For `Ω = π/4` the arc collapses to
/// the perfect state and `E_0` is returned.
fn arc_average(omega: f64, e_psi: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let h = arc_half_width(omega)?;
    if h == 0.0 {
        return e_psi(0.0);
    }
    let failure = RefCell::new(None);
    let r = integrate(
        |psi| match e_psi(psi) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        0.0,
        h,
        quad_opts(),
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(r?.value / h)
}

/// Gain and error rate of pulses uniform over `range`, by quadrature.
pub fn observe_range(
    mu_t: f64,
    range: PhaseRange,
    omega: f64,
    ch: &ChannelConfig,
) -> Result<(f64, f64)> {
    let q = gain_over(mu_t, range, ch)?;
    let e = arc_average(omega, |psi| qber_psi_over(mu_t, range, psi, q, ch))?;
    Ok((q, e))
}

/// `E^i` by ψ-quadrature of the quadrature-evaluated `E_ψ^i`.
pub fn qber_interval_numeric(
    interval: Interval,
    src: &SourceConfig,
    ch: &ChannelConfig,
) -> Result<f64> {
    let range = interval.range(src.theta_lambda()?);
    observe_range(src.mu_t(), range, src.omega, ch).map(|(_, e)| e)
}

/// `E^i` from the closed-form `E_ψ^i`, integrated over the acceptance arc.
pub fn qber_interval_closed_form(
    interval: Interval,
    zeta: f64,
    theta_lambda: f64,
    omega: f64,
    ch: &ChannelConfig,
) -> Result<f64> {
    arc_average(omega, |psi| {
        qber_psi_closed_form(interval, psi, zeta, theta_lambda, ch)
    })
}

/// `E^i`. The quadrature value is returned; when `θ_Λ = π/2` the closed form
/// is evaluated as well and a disagreement above [`CONSISTENCY_TOLERANCE`] is
/// reported as an error.
pub fn qber_interval(interval: Interval, src: &SourceConfig, ch: &ChannelConfig) -> Result<f64> {
    let numeric = qber_interval_numeric(interval, src, ch)?;
    let theta_lambda = src.theta_lambda()?;
    if is_half_pi(theta_lambda) {
        let closed =
            qber_interval_closed_form(interval, 2.0 * src.mu_t(), theta_lambda, src.omega, ch)?;
        let diff = (numeric - closed).abs();
        if diff > CONSISTENCY_TOLERANCE {
            return Err(Error::Consistency {
                quantity: "qber_interval",
                numeric,
                closed,
                diff,
            });
        }
    }
    Ok(numeric)
}

/// Gain and error rate of a phase-randomized coherent pulse of fixed
/// intensity whose polarization is uniform over the acceptance arc. With
/// `Ω = π/4` this is a perfectly prepared BB84 state.
pub fn observe_fixed_intensity(intensity: f64, omega: f64, ch: &ChannelConfig) -> Result<(f64, f64)> {
    let eps = ch.epsilon_b;
    let x = eta_sys(ch) * intensity;
    let q = ch.y0() + (1.0 - eps).powi(2) * -(-x).exp_m1();
    let e = arc_average(omega, |psi| {
        let c = psi.cos();
        let f0 = (-x).exp() * (0.5 * x * (1.0 + c)).exp_m1();
        let f1 = (-x).exp() * (0.5 * x * (1.0 - c)).exp_m1();
        let fdc = (-0.5 * x * (1.0 + c)).exp_m1() * (-0.5 * x * (1.0 - c)).exp_m1();
        Ok(error_numerator(eps, f0, f1, fdc) / q)
    })?;
    Ok((q, e))
}

/// Gains and error rates of both intervals for `μt`, `θ_Λ` and `Ω`.
pub fn observe(
    mu_t: f64,
    theta_lambda: f64,
    omega: f64,
    ch: &ChannelConfig,
) -> Result<ObservedStats> {
    let (q_signal, e_signal) = observe_range(mu_t, Interval::Signal.range(theta_lambda), omega, ch)?;
    let (q_decoy, e_decoy) = observe_range(mu_t, Interval::Decoy.range(theta_lambda), omega, ch)?;
    Ok(ObservedStats {
        q_signal,
        q_decoy,
        e_signal,
        e_decoy,
    })
}

/// [`observe`] for a transmitter configuration.
pub fn observe_source(src: &SourceConfig, ch: &ChannelConfig) -> Result<ObservedStats> {
    observe(src.mu_t(), src.theta_lambda()?, src.omega, ch)
}

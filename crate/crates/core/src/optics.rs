//! Amplitude-level model of the passive transmitter's optical network.
//!
//! Every element in the network (beamsplitters, the ideal filter, the
//! polarization rotator, the polarizing beamsplitter and sum-frequency
//! generation at complete conversion with a classical pump) maps coherent
//! states to coherent states, so the network is propagated as a set of
//! complex amplitudes labelled by mode and polarization.

use crate::error::{domain, Result};
use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

/// Transmitter parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceConfig {
    /// Mean photon number scale of the input pulses.
    pub mu: f64,
    /// Transmittance of the final tap beamsplitter.
    pub t: f64,
    /// Classical intensity threshold on the monitored output.
    pub lambda_threshold: f64,
    /// Half-width parameter of the polarization acceptance regions, radians.
    pub omega: f64,
}

impl SourceConfig {
    pub fn new(mu: f64, t: f64, lambda_threshold: f64, omega: f64) -> Result<Self> {
        let cfg = Self {
            mu,
            t,
            lambda_threshold,
            omega,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Builds a configuration from the product `μt`, the tap transmittance and
    /// the desired threshold angle.
    pub fn from_mu_t(mu_t: f64, t: f64, theta_lambda: f64, omega: f64) -> Result<Self> {
        if !(t > 0.0 && t < 1.0) {
            return Err(domain("source", format!("t = {t} not in (0, 1)")));
        }
        if !(theta_lambda > 0.0 && theta_lambda < PI) {
            return Err(domain(
                "source",
                format!("theta_lambda = {theta_lambda} not in (0, pi)"),
            ));
        }
        let mu = mu_t / t;
        let lambda_threshold = 2.0 * mu * (1.0 - t) * (1.0 + theta_lambda.cos());
        Self::new(mu, t, lambda_threshold, omega)
    }

    /// Returns every violated constraint, empty when the configuration is valid.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.mu.is_finite() && self.mu > 0.0) {
            out.push(format!("mu = {} must be finite and > 0", self.mu));
        }
        if !(self.t > 0.0 && self.t < 1.0) {
            out.push(format!("t = {} must lie in (0, 1)", self.t));
        }
        let upper = 4.0 * self.mu * (1.0 - self.t);
        if !(self.lambda_threshold > 0.0 && self.lambda_threshold < upper) {
            out.push(format!(
                "lambda_threshold = {} must lie in (0, 4 mu (1 - t)) = (0, {upper})",
                self.lambda_threshold
            ));
        }
        if !(0.0..=FRAC_PI_4).contains(&self.omega) {
            out.push(format!("omega = {} must lie in [0, pi/4]", self.omega));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(domain("source", v.join("; ")))
        }
    }

    /// Mean photon number scale of the pulses sent to the channel.
    pub fn mu_t(&self) -> f64 {
        self.mu * self.t
    }

    /// Threshold angle separating the signal and decoy phase intervals.
    pub fn theta_lambda(&self) -> Result<f64> {
        theta_lambda(self)
    }
}

/// Polarization label of a coherent amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Polarization {
    Plus45,
    Minus45,
    Horizontal,
    Vertical,
    Left,
    Right,
    /// `(|+45°⟩ + e^{iψ}|−45°⟩)/√2`, the polarization of the recombined beam.
    Superposed { psi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherentAmplitude {
    pub amplitude: Complex64,
    pub polarization: Polarization,
    pub mode: String,
}

impl CoherentAmplitude {
    pub fn new(amplitude: Complex64, polarization: Polarization, mode: &str) -> Self {
        Self {
            amplitude,
            polarization,
            mode: mode.to_string(),
        }
    }

    /// Mean photon number `|α|²`.
    pub fn intensity(&self) -> f64 {
        self.amplitude.norm_sqr()
    }
}

/// Intensity `ζ(θ) = 2μ(1 + cos θ)` of the recombined beam.
pub fn zeta(theta: f64, mu: f64) -> f64 {
    2.0 * mu * (1.0 + theta.cos())
}

/// Intensity `γ(θ) = t·ζ(θ)` of the pulse sent to the channel.
pub fn gamma(theta: f64, cfg: &SourceConfig) -> f64 {
    cfg.t * zeta(theta, cfg.mu)
}

/// Angle `θ_Λ` at which the monitored intensity `(1−t)ζ(θ)` equals `Λ`.
pub fn theta_lambda(cfg: &SourceConfig) -> Result<f64> {
    let scale = 2.0 * cfg.mu * (1.0 - cfg.t);
    if !(cfg.lambda_threshold > 0.0 && cfg.lambda_threshold < 2.0 * scale) {
        return Err(domain(
            "theta_lambda",
            format!(
                "lambda_threshold = {} outside (0, {})",
                cfg.lambda_threshold,
                2.0 * scale
            ),
        ));
    }
    Ok((cfg.lambda_threshold / scale - 1.0).acos())
}

/// 50:50 beamsplitter with outputs `(a+b)/√2` and `(a−b)/√2`.
fn balanced_bs(a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    ((a + b) * FRAC_1_SQRT_2, (a - b) * FRAC_1_SQRT_2)
}

/// Beamsplitter of transmittance `t` with vacuum in the unused port.
fn tap_bs(a: Complex64, t: f64) -> (Complex64, Complex64) {
    (a * t.sqrt(), a * (1.0 - t).sqrt())
}

/// Sum-frequency generation at complete conversion with a strong, undepleted
/// classical pump.
///
/// The coupled-mode solution transfers the signal creation operator as
/// `c₁†(t) = c₁†(0) cos(√μ χ t) − e^{iθ_p} c₂†(0) sin(√μ χ t)`; at the
/// conversion time `t_c = π/(2√μ χ)` the signal at `w₁` is fully emptied into
/// `w₃` with the factor `−e^{iθ_p}`.
pub fn sfg_complete_conversion(
    signal: &CoherentAmplitude,
    pump_phase: f64,
    pump_sqrt_intensity: f64,
) -> CoherentAmplitude {
    let chi = 1.0;
    let rate = pump_sqrt_intensity * chi;
    let argument = if rate > 0.0 {
        let t_c = FRAC_PI_2 / rate;
        rate * t_c
    } else {
        FRAC_PI_2
    };
    let converted = -Complex64::from_polar(1.0, pump_phase) * argument.sin() * signal.amplitude;
    CoherentAmplitude {
        amplitude: converted,
        polarization: signal.polarization,
        mode: format!("{}@w3", signal.mode),
    }
}

/// Result of propagating one set of input phases through the network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkOutput {
    /// Weak pulse sent to the channel.
    pub c3: CoherentAmplitude,
    /// Strong pulse kept for the intensity and polarization measurement.
    pub d3: CoherentAmplitude,
    /// Relative phase `θ₄ − θ₃` of the recombined polarization state.
    pub psi: f64,
    /// Global phase of the recombined beam.
    pub phi: f64,
}

/// Propagates pure coherent inputs with phases `[θ₁, θ₂, θ₃, θ₄]` element by
/// element: BS → BS → filter → SFG → rotator → PBS → tap BS.
pub fn propagate_pure_network(phases: [f64; 4], mu: f64, t: f64) -> NetworkOutput {
    let [theta1, theta2, theta3, theta4] = phases;
    let vacuum = Complex64::new(0.0, 0.0);

    // w1 inputs, both at +45°
    let a0 = Complex64::from_polar((2.0 * mu).sqrt(), theta1);
    let b0 = Complex64::from_polar((2.0 * mu).sqrt(), theta2);
    let (a1, _b1) = balanced_bs(a0, b0);
    // a1 is split again against vacuum; the filter passes both halves
    let (c1, d1) = balanced_bs(a1, vacuum);

    let c2 = sfg_complete_conversion(
        &CoherentAmplitude::new(c1, Polarization::Plus45, "c1"),
        theta3,
        mu.sqrt(),
    );
    let d2 = sfg_complete_conversion(
        &CoherentAmplitude::new(d1, Polarization::Plus45, "d1"),
        theta4,
        mu.sqrt(),
    );
    // rotator R: +45° -> -45° on the d branch
    let d2 = CoherentAmplitude {
        polarization: Polarization::Minus45,
        ..d2
    };

    // PBS in the ±45° basis: c2 supplies the +45° component, d2 the −45° one
    let plus = c2.amplitude;
    let minus = d2.amplitude;
    let total = (plus.norm_sqr() + minus.norm_sqr()).sqrt();
    let (phi, psi) = if total > 0.0 {
        let phi = plus.arg();
        (phi, minus.arg() - phi)
    } else {
        (0.0, theta4 - theta3)
    };
    let a3 = Complex64::from_polar(total, phi);
    let (c3, d3) = tap_bs(a3, t);
    let pol = Polarization::Superposed { psi };
    NetworkOutput {
        c3: CoherentAmplitude::new(c3, pol, "c3"),
        d3: CoherentAmplitude::new(d3, pol, "d3"),
        psi,
        phi,
    }
}

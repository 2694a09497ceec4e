//! Event-level Monte Carlo of the passive transmitter and Bob's detectors.
//!
//! Samples are processed in fixed-size blocks. Block `b` draws from a ChaCha8
//! stream keyed by `(seed, b)`, so the merged counts depend only on the seed
//! and the sample count, never on the number of threads.

use crate::detection::{eta_sys, ChannelConfig};
use crate::error::{domain, Result};
use crate::optics::{propagate_pure_network, SourceConfig};
use crate::photon::Interval;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

pub const GENERATOR: &str = "ChaCha8Rng";

/// Samples per independently seeded block.
pub const BLOCK_SIZE: u64 = 1 << 16;

/// Largest photon number with its own histogram bin; the last bin collects
/// everything above.
pub const HISTOGRAM_MAX: usize = 4;

/// Empirical frequency `count / trials` with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub count: u64,
    pub trials: u64,
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn new(count: u64, trials: u64) -> Self {
        if trials == 0 {
            return Estimate {
                count,
                trials,
                value: f64::NAN,
                stderr: f64::NAN,
            };
        }
        let p = count as f64 / trials as f64;
        Estimate {
            count,
            trials,
            value: p,
            stderr: (p * (1.0 - p) / trials as f64).sqrt(),
        }
    }

    /// `(value − reference) / σ`, where `σ` is the larger of the empirical
    /// standard error and the one implied by `reference`, so a reference
    /// probability with zero observed counts still gets a finite score.
    pub fn z_score(&self, reference: f64) -> f64 {
        let n = self.trials as f64;
        let sigma = self.stderr.max((reference * (1.0 - reference) / n).sqrt());
        if sigma > 0.0 {
            (self.value - reference) / sigma
        } else if self.value == reference {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct IntervalCounts {
    samples: u64,
    photons: [u64; HISTOGRAM_MAX + 2],
    accepted: u64,
    clicks: u64,
    errors: u64,
}

impl IntervalCounts {
    fn merge(&mut self, other: &IntervalCounts) {
        self.samples += other.samples;
        for (a, b) in self.photons.iter_mut().zip(&other.photons) {
            *a += b;
        }
        self.accepted += other.accepted;
        self.clicks += other.clicks;
        self.errors += other.errors;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Counts {
    intervals: [IntervalCounts; 2],
}

impl Counts {
    fn merge(mut self, other: Counts) -> Counts {
        for (a, b) in self.intervals.iter_mut().zip(&other.intervals) {
            a.merge(b);
        }
        self
    }
}

fn slot(interval: Interval) -> usize {
    match interval {
        Interval::Signal => 0,
        Interval::Decoy => 1,
    }
}

/// Empirical statistics of one intensity interval.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalReport {
    /// Fraction of all pulses that fell into this interval.
    pub probability: Estimate,
    /// Photon-number histogram conditioned on the interval, `n = 0..=4`.
    pub pn: Vec<Estimate>,
    /// Click probability of accepted pulses.
    pub q: Option<Estimate>,
    /// Error fraction among clicks of accepted pulses.
    pub e: Option<Estimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub n_samples: u64,
    pub seed: u64,
    pub generator: &'static str,
    pub p_acc: Estimate,
    pub signal: IntervalReport,
    pub decoy: IntervalReport,
}

impl McReport {
    pub fn interval(&self, interval: Interval) -> &IntervalReport {
        match interval {
            Interval::Signal => &self.signal,
            Interval::Decoy => &self.decoy,
        }
    }
}

/// Offset of `ψ` from the nearest BB84 setting and whether it lies inside
/// the acceptance arc of half-width `π/4 − Ω`.
pub fn acceptance_offset(psi: f64, omega: f64) -> Option<f64> {
    let half_width = FRAC_PI_4 - omega;
    let psi = psi.rem_euclid(TAU);
    let k = (psi / FRAC_PI_2).round();
    let delta = psi - k * FRAC_PI_2;
    (delta.abs() < half_width).then_some(delta)
}

fn photon_draw(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    match Poisson::new(mean) {
        Ok(p) => p.sample(rng) as u64,
        Err(_) => 0,
    }
}

fn binomial(rng: &mut ChaCha8Rng, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial").sample(rng)
}

/// Detector outcome for `k` photons whose polarization sits at angle `delta`
/// from the measured basis state: `None` without a click, otherwise whether
/// the bit is in error.
fn detect(rng: &mut ChaCha8Rng, k: u64, delta: f64, eta: f64, eps: f64) -> Option<bool> {
    let correct = binomial(rng, k, 0.5 * (1.0 + delta.cos()));
    let wrong = k - correct;
    let click_correct = binomial(rng, correct, eta) > 0 || rng.random::<f64>() < eps;
    let click_wrong = binomial(rng, wrong, eta) > 0 || rng.random::<f64>() < eps;
    match (click_correct, click_wrong) {
        (false, false) => None,
        (true, false) => Some(false),
        (false, true) => Some(true),
        (true, true) => Some(rng.random::<bool>()),
    }
}

fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

fn simulate(cfg: &SourceConfig, channel: Option<&ChannelConfig>, n: u64, seed: u64) -> Result<McReport> {
    if n == 0 {
        return Err(domain("monte carlo", "sample count must be >= 1"));
    }
    if !(0.0..=FRAC_PI_4).contains(&cfg.omega) {
        return Err(domain("monte carlo", format!("omega = {} not in [0, pi/4]", cfg.omega)));
    }
    let detector = channel.map(|ch| (eta_sys(ch), ch.epsilon_b));
    let blocks = n.div_ceil(BLOCK_SIZE);
    let counts = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, b);
            let len = BLOCK_SIZE.min(n - b * BLOCK_SIZE);
            let mut counts = Counts::default();
            for _ in 0..len {
                let phases: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>() * TAU);
                let out = propagate_pure_network(phases, cfg.mu, cfg.t);
                let interval = if out.d3.intensity() > cfg.lambda_threshold {
                    Interval::Signal
                } else {
                    Interval::Decoy
                };
                let k = photon_draw(&mut rng, out.c3.intensity());
                let c = &mut counts.intervals[slot(interval)];
                c.samples += 1;
                c.photons[(k as usize).min(HISTOGRAM_MAX + 1)] += 1;
                let Some(delta) = acceptance_offset(out.psi, cfg.omega) else {
                    continue;
                };
                c.accepted += 1;
                if let Some((eta, eps)) = detector {
                    if let Some(error) = detect(&mut rng, k, delta, eta, eps) {
                        c.clicks += 1;
                        c.errors += error as u64;
                    }
                }
            }
            counts
        })
        .reduce(Counts::default, Counts::merge);

    let accepted: u64 = counts.intervals.iter().map(|c| c.accepted).sum();
    let report = |c: &IntervalCounts| IntervalReport {
        probability: Estimate::new(c.samples, n),
        pn: (0..=HISTOGRAM_MAX).map(|k| Estimate::new(c.photons[k], c.samples)).collect(),
        q: detector.map(|_| Estimate::new(c.clicks, c.accepted)),
        e: detector.map(|_| Estimate::new(c.errors, c.clicks)),
    };
    Ok(McReport {
        n_samples: n,
        seed,
        generator: GENERATOR,
        p_acc: Estimate::new(accepted, n),
        signal: report(&counts.intervals[0]),
        decoy: report(&counts.intervals[1]),
    })
}

/// Source-only run: interval frequencies, photon-number histograms and the
/// acceptance probability.
pub fn run_source_mc(cfg: &SourceConfig, n: u64, seed: u64) -> Result<McReport> {
    simulate(cfg, None, n, seed)
}

/// Full run including channel loss, dark counts and sifted-bit errors.
pub fn run_detection_mc(cfg: &SourceConfig, ch: &ChannelConfig, n: u64, seed: u64) -> Result<McReport> {
    simulate(cfg, Some(ch), n, seed)
}

/// Outcome counts of `n` detections of `k` photons at a fixed offset
/// `delta` from the measured basis state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ForcedClickCounts {
    pub trials: u64,
    pub vacuum: u64,
    pub single_correct: u64,
    pub single_wrong: u64,
    pub double: u64,
}

/// Simulates the binomial arm assignment, loss and dark counts for a fixed
/// photon number and polarization offset.
pub fn forced_clicks(k: u64, delta: f64, ch: &ChannelConfig, n: u64, seed: u64) -> ForcedClickCounts {
    let eta = eta_sys(ch);
    let eps = ch.epsilon_b;
    let mut rng = block_rng(seed, 0);
    let mut out = ForcedClickCounts {
        trials: n,
        ..Default::default()
    };
    for _ in 0..n {
        let correct = binomial(&mut rng, k, 0.5 * (1.0 + delta.cos()));
        let c0 = binomial(&mut rng, correct, eta) > 0 || rng.random::<f64>() < eps;
        let c1 = binomial(&mut rng, k - correct, eta) > 0 || rng.random::<f64>() < eps;
        match (c0, c1) {
            (false, false) => out.vacuum += 1,
            (true, false) => out.single_correct += 1,
            (false, true) => out.single_wrong += 1,
            (true, true) => out.double += 1,
        }
    }
    out
}

/// Acceptance arcs are centred on `0, π/2, π, 3π/2`.
pub const ARC_CENTRES: [f64; 4] = [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2];

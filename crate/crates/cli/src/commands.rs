//! The five commands. Each returns its report as text; the caller decides
//! where it goes.

use crate::config::RunConfig;
use passive_qkd::detection::{observe_fixed_intensity, observe_range, qber_interval};
use passive_qkd::montecarlo::{run_detection_mc, Estimate, HISTOGRAM_MAX};
use passive_qkd::optimizer::{distance_sweep, find_cutoff, optimize_at_distance, OptimizationResult, Variant};
use passive_qkd::photon::{build_stats, p_acc, Interval, PhaseRange};
use passive_qkd::rate::{channel_truth, passive_two_interval_rate};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Hard failure threshold for Monte Carlo z-scores.
pub const Z_LIMIT: f64 = 5.0;

pub const SWEEP_HEADER: &str = "distance_km,rate,log10_rate,mu_t,omega,theta_lambda,Q_s,Q_d,E_s,E_d,Y1_L,e1_U";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("numerical failure: {0}")]
    Numeric(#[from] passive_qkd::Error),
    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0} Monte Carlo estimate(s) deviate from the analytic value by more than {Z_LIMIT} standard errors")]
    Mismatch(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Mismatch(_) => 5,
        }
    }
}

/// Shortest round-tripping scientific form; `nan`, `inf` and `-inf` for
/// non-finite values.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn line(out: &mut String, key: &str, value: f64) {
    let _ = writeln!(out, "{key} = {}", fmt_num(value));
}

/// Key rate of the two-interval transmitter at the configured point, with
/// every intermediate quantity.
pub fn rate(cfg: &RunConfig) -> Result<String, CliError> {
    let src = &cfg.source;
    let ch = &cfg.channel;
    let theta = src.theta_lambda()?;
    for interval in Interval::BOTH {
        qber_interval(interval, src, ch)?;
    }
    let r = passive_two_interval_rate(src.mu_t(), theta, src.omega, ch, cfg.n_max)?;
    let b = &r.bounds_used;
    let mut out = String::new();
    line(&mut out, "distance_km", ch.distance);
    line(&mut out, "mu_t", src.mu_t());
    line(&mut out, "theta_lambda", theta);
    line(&mut out, "omega", src.omega);
    line(&mut out, "p_acc", p_acc(src.omega)?);
    line(&mut out, "p_s", r.stats.p_s);
    line(&mut out, "p_d", r.stats.p_d);
    for interval in Interval::BOTH {
        let tag = &interval.name()[..1];
        for (n, p) in r.stats.get(interval).iter().take(3).enumerate() {
            line(&mut out, &format!("p{n}_{tag}"), *p);
        }
    }
    line(&mut out, "tail_bound", r.stats.tail_bound);
    line(&mut out, "Q_s", r.observed.q_signal);
    line(&mut out, "Q_d", r.observed.q_decoy);
    line(&mut out, "E_s", r.observed.e_signal);
    line(&mut out, "E_d", r.observed.e_decoy);
    line(&mut out, "Y0_L", b.y0_lower);
    line(&mut out, "Y0_U", b.y0_upper);
    line(&mut out, "Y1_L", b.y1_lower);
    line(&mut out, "e1_U", b.e1_upper);
    line(&mut out, "combined_s", b.combined_signal);
    line(&mut out, "combined_d", b.combined_decoy);
    let _ = writeln!(out, "clamped = {}", if b.clamped.is_empty() { "none".to_string() } else { b.clamped.join(",") });
    line(&mut out, "rate_signal", r.rate_signal);
    line(&mut out, "rate_decoy", r.rate_decoy);
    line(&mut out, "rate_total", r.rate_total);
    Ok(out)
}

/// One CSV row per distance for an optimized variant.
fn sweep_row(variant: Variant, opt: &OptimizationResult, cfg: &RunConfig) -> Result<String, CliError> {
    let ch = cfg.channel.with_distance(opt.distance);
    let nan = f64::NAN;
    let (q_s, q_d, e_s, e_d, y1, e1) = match variant {
        Variant::Passive2 => {
            let r = passive_two_interval_rate(opt.best_mu_t, opt.best_theta_lambda, opt.best_omega, &ch, cfg.n_max)?;
            let o = r.observed;
            (o.q_signal, o.q_decoy, o.e_signal, o.e_decoy, r.bounds_used.y1_lower, r.bounds_used.e1_upper)
        }
        Variant::PassiveInf => {
            let (q, e) = observe_range(opt.best_mu_t, PhaseRange::FULL, opt.best_omega, &ch)?;
            let truth = channel_truth(&ch, opt.best_omega)?;
            (q, nan, e, nan, truth.y1, truth.e1)
        }
        Variant::ActiveInf => {
            let (q, e) = observe_fixed_intensity(opt.best_mu_t, std::f64::consts::FRAC_PI_4, &ch)?;
            let truth = channel_truth(&ch, std::f64::consts::FRAC_PI_4)?;
            (q, nan, e, nan, truth.y1, truth.e1)
        }
    };
    let fields = [
        opt.distance,
        opt.best_rate,
        opt.best_rate.log10(),
        opt.best_mu_t,
        opt.best_omega,
        opt.best_theta_lambda,
        q_s,
        q_d,
        e_s,
        e_d,
        y1,
        e1,
    ];
    Ok(fields.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(","))
}

/// Optimized rate curve of every selected variant, one CSV per variant at
/// `<prefix>_<variant>.csv`. Returns the written paths.
pub fn sweep(cfg: &RunConfig, prefix: &str) -> Result<Vec<PathBuf>, CliError> {
    let distances = cfg.distances();
    let tables: Vec<(Variant, String)> = cfg
        .variants
        .par_iter()
        .map(|&variant| {
            let rows = distance_sweep(variant, &distances, &cfg.channel, &cfg.optimizer)?;
            let mut csv = String::from(SWEEP_HEADER);
            csv.push('\n');
            for row in &rows {
                csv.push_str(&sweep_row(variant, row, cfg)?);
                csv.push('\n');
            }
            Ok((variant, csv))
        })
        .collect::<Result<_, CliError>>()?;
    let mut paths = Vec::new();
    for (variant, csv) in tables {
        let path = PathBuf::from(format!("{prefix}_{}.csv", variant.name()));
        write_file(&path, &csv)?;
        paths.push(path);
    }
    Ok(paths)
}

fn describe(out: &mut String, r: &OptimizationResult) {
    let _ = writeln!(out, "[{}]", r.variant.name());
    line(out, "distance_km", r.distance);
    line(out, "rate", r.best_rate);
    line(out, "mu_t", r.best_mu_t);
    line(out, "omega", r.best_omega);
    line(out, "theta_lambda", r.best_theta_lambda);
    let _ = writeln!(out, "evaluations = {}", r.evaluations);
    let _ = writeln!(out, "converged = {}", r.converged);
}

/// Optimal parameters of every selected variant at the configured distance.
pub fn optimize(cfg: &RunConfig) -> Result<String, CliError> {
    let results: Vec<OptimizationResult> = cfg
        .variants
        .par_iter()
        .map(|&v| optimize_at_distance(v, cfg.channel.distance, &cfg.channel, &cfg.optimizer))
        .collect::<Result<_, _>>()?;
    let mut out = String::new();
    for r in &results {
        describe(&mut out, r);
    }
    Ok(out)
}

/// Cutoff distance of every selected variant.
pub fn cutoff(cfg: &RunConfig) -> Result<String, CliError> {
    let results: Vec<_> = cfg
        .variants
        .par_iter()
        .map(|&v| find_cutoff(v, &cfg.channel, &cfg.optimizer))
        .collect::<Result<_, _>>()?;
    let mut out = String::new();
    for c in &results {
        let _ = writeln!(out, "[{}]", c.variant.name());
        line(&mut out, "cutoff_km", c.distance);
        line(&mut out, "last_positive_km", c.last_positive.distance);
        line(&mut out, "first_zero_km", c.first_zero_distance);
        line(&mut out, "rate_at_last_positive", c.last_positive.best_rate);
        line(&mut out, "mu_t", c.last_positive.best_mu_t);
        line(&mut out, "omega", c.last_positive.best_omega);
    }
    Ok(out)
}

/// Event-level simulation next to the analytic values. The report is
/// returned even when some estimate fails the z-score limit; the count of
/// failures comes second.
pub fn montecarlo(cfg: &RunConfig) -> Result<(String, usize), CliError> {
    let src = &cfg.source;
    let ch = &cfg.channel;
    let mc = run_detection_mc(src, ch, cfg.n_samples, cfg.seed)?;
    let stats = build_stats(src, cfg.n_max.max(HISTOGRAM_MAX))?;
    let theta = src.theta_lambda()?;
    let obs = passive_qkd::detection::observe(src.mu_t(), theta, src.omega, ch)?;

    let mut out = String::new();
    let _ = writeln!(out, "n_samples = {}", mc.n_samples);
    let _ = writeln!(out, "seed = {}", mc.seed);
    let _ = writeln!(out, "generator = {}", mc.generator);
    let _ = writeln!(out, "quantity,count,trials,empirical,stderr,analytic,z");
    let mut failures = 0;
    let mut row = |name: &str, est: &Estimate, analytic: f64| {
        let z = est.z_score(analytic);
        if z.is_nan() || z.abs() > Z_LIMIT {
            failures += 1;
        }
        let _ = writeln!(
            out,
            "{name},{},{},{},{},{},{}",
            est.count,
            est.trials,
            fmt_num(est.value),
            fmt_num(est.stderr),
            fmt_num(analytic),
            fmt_num(z)
        );
    };
    row("p_acc", &mc.p_acc, p_acc(src.omega)?);
    for interval in Interval::BOTH {
        let tag = &interval.name()[..1];
        let rep = mc.interval(interval);
        row(&format!("p_{tag}"), &rep.probability, stats.probability(interval));
        for (n, est) in rep.pn.iter().enumerate() {
            row(&format!("p{n}_{tag}"), est, stats.get(interval)[n]);
        }
        if let (Some(q), Some(e)) = (&rep.q, &rep.e) {
            row(&format!("Q_{tag}"), q, obs.gain(interval));
            row(&format!("E_{tag}"), e, obs.qber(interval));
        }
    }
    let _ = writeln!(out, "failures = {failures}");
    Ok((out, failures))
}

//! Flat `key = value` configuration with command-line overrides.

use passive_qkd::detection::ChannelConfig;
use passive_qkd::optics::SourceConfig;
use passive_qkd::optimizer::{OptimizerOptions, Variant};
use std::collections::BTreeMap;

/// Every recognised key. Lookups are case-insensitive.
pub const KEYS: &[&str] = &[
    "mu",
    "t",
    "lambda_threshold",
    "omega",
    "alpha",
    "distance",
    "eta_b",
    "epsilon_b",
    "q_eff",
    "f_ec",
    "n_max",
    "d_min",
    "d_max",
    "d_step",
    "variants",
    "grid_mu_t",
    "grid_omega",
    "optimize_lambda",
    "max_iterations",
    "n_samples",
    "seed",
];

/// Raw key-value pairs; later assignments win.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    /// Parses file contents, collecting one diagnostic per malformed line.
    pub fn parse(text: &str, origin: &str, errors: &mut Vec<String>) -> Self {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Err(e) = raw.assign(line) {
                errors.push(format!("{origin}:{}: {e}", i + 1));
            }
        }
        raw
    }

    /// Applies one `key=value` assignment.
    pub fn assign(&mut self, assignment: &str) -> Result<(), String> {
        let Some((key, value)) = assignment.split_once('=') else {
            return Err(format!("expected `key = value`, got `{assignment}`"));
        };
        let key = key.trim().to_ascii_lowercase();
        if !KEYS.contains(&key.as_str()) {
            return Err(format!("unknown key `{key}`"));
        }
        self.entries.insert(key, value.trim().to_string());
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }
}

/// Fully parsed and validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: SourceConfig,
    pub channel: ChannelConfig,
    pub n_max: usize,
    pub d_min: f64,
    pub d_max: f64,
    pub d_step: f64,
    pub variants: Vec<Variant>,
    pub optimizer: OptimizerOptions,
    pub n_samples: u64,
    pub seed: u64,
}

struct Reader<'a> {
    raw: &'a RawConfig,
    errors: Vec<String>,
}

impl Reader<'_> {
    fn value<T: std::str::FromStr>(&mut self, key: &str, default: T) -> T {
        match self.raw.get(key) {
            None => default,
            Some(s) => s.parse().unwrap_or_else(|_| {
                self.errors.push(format!("{key}: cannot parse `{s}`"));
                default
            }),
        }
    }

    fn optional_f64(&mut self, key: &str) -> Option<f64> {
        let s = self.raw.get(key)?;
        match s.parse() {
            Ok(v) => Some(v),
            Err(_) => {
                self.errors.push(format!("{key}: cannot parse `{s}`"));
                None
            }
        }
    }
}

impl RunConfig {
    /// Interprets the raw pairs; returns every problem found at once.
    pub fn from_raw(raw: &RawConfig) -> Result<Self, Vec<String>> {
        let mut r = Reader {
            raw,
            errors: Vec::new(),
        };
        let defaults = ChannelConfig::default();
        let mu = r.value("mu", 175.0);
        let t = r.value("t", 1e-3);
        let lambda_threshold = r.optional_f64("lambda_threshold").unwrap_or(2.0 * mu * (1.0 - t));
        let source = SourceConfig {
            mu,
            t,
            lambda_threshold,
            omega: r.value("omega", 0.393),
        };
        let channel = ChannelConfig {
            alpha: r.value("alpha", defaults.alpha),
            distance: r.value("distance", defaults.distance),
            eta_b: r.value("eta_b", defaults.eta_b),
            epsilon_b: r.value("epsilon_b", defaults.epsilon_b),
            q_eff: r.value("q_eff", defaults.q_eff),
            f_ec: r.value("f_ec", defaults.f_ec),
        };
        let base = OptimizerOptions::default();
        let mut optimizer = OptimizerOptions {
            grid_mu_t: r.value("grid_mu_t", base.grid_mu_t),
            grid_omega: r.value("grid_omega", base.grid_omega),
            optimize_lambda: r.value("optimize_lambda", false),
            max_iterations: r.value("max_iterations", base.max_iterations),
            ..base
        };
        let n_max = r.value("n_max", passive_qkd::photon::DEFAULT_N_MAX);
        let d_min: f64 = r.value("d_min", 0.0);
        let d_max: f64 = r.value("d_max", 200.0);
        let d_step: f64 = r.value("d_step", 5.0);
        let n_samples = r.value("n_samples", 1_000_000u64);
        let seed = r.value("seed", 1u64);
        let variants_text: String = r.value("variants", "all".to_string());

        let mut errors = r.errors;
        let variants = parse_variants(&variants_text).unwrap_or_else(|e| {
            errors.push(e);
            Vec::new()
        });
        errors.extend(source.violations());
        errors.extend(channel.violations());
        if n_max < 2 {
            errors.push(format!("n_max = {n_max} must be >= 2"));
        }
        if !(d_min >= 0.0 && d_min.is_finite()) {
            errors.push(format!("d_min = {d_min} must be finite and >= 0"));
        }
        if !(d_max >= d_min && d_max.is_finite()) {
            errors.push(format!("d_max = {d_max} must be finite and >= d_min"));
        }
        if !(d_step > 0.0 && d_step.is_finite()) {
            errors.push(format!("d_step = {d_step} must be finite and > 0"));
        }
        if optimizer.grid_mu_t == 0 || optimizer.grid_omega == 0 {
            errors.push("grid_mu_t and grid_omega must be >= 1".to_string());
        }
        if n_samples == 0 {
            errors.push("n_samples must be >= 1".to_string());
        }
        if !errors.is_empty() {
            return Err(errors);
        }
        if let Ok(theta) = source.theta_lambda() {
            optimizer.theta_lambda = theta;
        }
        Ok(RunConfig {
            source,
            channel,
            n_max,
            d_min,
            d_max,
            d_step,
            variants,
            optimizer,
            n_samples,
            seed,
        })
    }

    /// Distances `d_min, d_min + d_step, …` not exceeding `d_max`.
    pub fn distances(&self) -> Vec<f64> {
        let count = ((self.d_max - self.d_min) / self.d_step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.d_min + i as f64 * self.d_step).collect()
    }
}

fn parse_variants(text: &str) -> Result<Vec<Variant>, String> {
    if text.trim() == "all" {
        return Ok(Variant::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match Variant::parse(part) {
            Some(v) if !out.contains(&v) => out.push(v),
            Some(_) => {}
            None => return Err(format!("variants: unknown variant `{part}` (passive2, passive_inf, active_inf, all)")),
        }
    }
    if out.is_empty() {
        return Err("variants: at least one variant is required".to_string());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<RunConfig, Vec<String>> {
        let mut errors = Vec::new();
        let raw = RawConfig::parse(text, "test", &mut errors);
        assert!(errors.is_empty(), "{errors:?}");
        RunConfig::from_raw(&raw)
    }

    #[test]
    fn defaults_follow_the_reference_parameter_set() {
        let cfg = load("").unwrap();
        assert_eq!(cfg.channel, ChannelConfig::default());
        assert!((cfg.source.mu_t() - 0.175).abs() < 1e-12);
        assert!((cfg.optimizer.theta_lambda - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert_eq!(cfg.variants, Variant::ALL.to_vec());
    }

    #[test]
    fn comments_case_and_whitespace() {
        let cfg = load("# header\n  ETA_B = 0.1  # trailing\n\ndistance=40\n").unwrap();
        assert_eq!(cfg.channel.eta_b, 0.1);
        assert_eq!(cfg.channel.distance, 40.0);
    }

    #[test]
    fn malformed_lines_are_reported_with_location() {
        let mut errors = Vec::new();
        RawConfig::parse("mu = 1\nnonsense\nbogus = 2\n", "f.cfg", &mut errors);
        assert_eq!(errors.len(), 2);
        assert!(errors[0].starts_with("f.cfg:2"));
        assert!(errors[1].contains("bogus"));
    }

    #[test]
    fn all_violations_are_collected() {
        let errors = load("t = 2\nomega = 1\nf_ec = abc\nn_samples = 0\nvariants = nope\n").unwrap_err();
        let joined = errors.join("\n");
        for key in ["t =", "omega", "f_ec", "n_samples", "variants"] {
            assert!(joined.contains(key), "missing {key} in {joined}");
        }
    }

    #[test]
    fn threshold_outside_range_names_the_field() {
        let errors = load("mu = 10\nt = 0.01\nlambda_threshold = 50").unwrap_err();
        assert!(errors.iter().any(|e| e.contains("lambda_threshold")));
    }

    #[test]
    fn distance_grid() {
        let cfg = load("d_min = 0\nd_max = 10\nd_step = 5").unwrap();
        assert_eq!(cfg.distances(), vec![0.0, 5.0, 10.0]);
        let cfg = load("d_min = 3\nd_max = 10\nd_step = 50").unwrap();
        assert_eq!(cfg.distances(), vec![3.0]);
    }

    #[test]
    fn variant_lists() {
        assert_eq!(parse_variants("active_inf, passive2").unwrap(), vec![Variant::ActiveInf, Variant::Passive2]);
        assert!(parse_variants("").is_err());
    }
}

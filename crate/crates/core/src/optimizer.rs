//! Rate maximization over the free source parameters, distance sweeps and
//! cutoff search.
//!
//! Every search is a parallel grid scan followed by a sequential, clamped
//! Nelder–Mead refinement. Grid results are collected in index order, so the
//! outcome does not depend on the thread schedule.

use crate::detection::ChannelConfig;
use crate::error::{domain, Error, Result};
use crate::rate::{active_infinite_decoy_rate, asymptotic_passive_rate, passive_two_interval_rate};
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

/// Rates at or below this value count as zero when locating cutoffs.
pub const POSITIVE_RATE_FLOOR: f64 = 1e-15;

/// Objective value of parameter points where estimation is impossible.
/// Every admissible rate, including negative raw interval rates, is above it.
const INFEASIBLE: f64 = -1.0;

const MU_T_FLOOR: f64 = 1e-6;
const THETA_MARGIN: f64 = 1e-3;

/// Which transmitter model is optimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Passive source with two intensity intervals and decoy bounds.
    Passive2,
    /// Passive source with exactly known yields and error rates.
    PassiveInf,
    /// Active source with infinitely many decoy intensities.
    ActiveInf,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Passive2, Variant::PassiveInf, Variant::ActiveInf];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Passive2 => "passive2",
            Variant::PassiveInf => "passive_inf",
            Variant::ActiveInf => "active_inf",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Variant::ALL.into_iter().find(|v| v.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerOptions {
    pub grid_mu_t: usize,
    pub grid_omega: usize,
    /// Number of interior `θ_Λ` grid points when `optimize_lambda` is set.
    pub grid_theta_lambda: usize,
    pub optimize_lambda: bool,
    /// Threshold angle used when `θ_Λ` is not optimized.
    pub theta_lambda: f64,
    pub max_iterations: usize,
    pub step_tol: f64,
    /// Relative spread of simplex rates below which refinement stops.
    pub rate_tol: f64,
    /// Upper end of the mean photon number box of the active source.
    pub mu_active_max: f64,
    /// Coarse distance step of the cutoff search, km.
    pub cutoff_step: f64,
    /// Final bracket width of the cutoff bisection, km.
    pub cutoff_resolution: f64,
    /// Give up the cutoff search beyond this distance, km.
    pub max_distance: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            grid_mu_t: 40,
            grid_omega: 40,
            grid_theta_lambda: 9,
            optimize_lambda: false,
            theta_lambda: FRAC_PI_2,
            max_iterations: 500,
            step_tol: 1e-4,
            rate_tol: 1e-12,
            mu_active_max: 2.0,
            cutoff_step: 5.0,
            cutoff_resolution: 0.1,
            max_distance: 1000.0,
        }
    }
}

/// Optimum found at one distance.
///
/// For [`Variant::ActiveInf`], `best_mu_t` holds the mean photon number of
/// the active source and the angle fields are NaN. For
/// [`Variant::PassiveInf`], `best_theta_lambda` is π (one interval).
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub variant: Variant,
    pub distance: f64,
    pub best_mu_t: f64,
    pub best_omega: f64,
    pub best_theta_lambda: f64,
    pub best_rate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl OptimizationResult {
    fn params(&self) -> Vec<f64> {
        match self.variant {
            Variant::ActiveInf => vec![self.best_mu_t],
            Variant::PassiveInf => vec![self.best_mu_t, self.best_omega],
            Variant::Passive2 => vec![self.best_mu_t, self.best_omega, self.best_theta_lambda],
        }
    }
}

/// Parameter box and objective of one variant at one distance.
struct Problem<'a> {
    variant: Variant,
    ch: ChannelConfig,
    opts: &'a OptimizerOptions,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl<'a> Problem<'a> {
    fn new(variant: Variant, ch: ChannelConfig, opts: &'a OptimizerOptions) -> Self {
        let (lower, upper) = match variant {
            Variant::ActiveInf => (vec![MU_T_FLOOR], vec![opts.mu_active_max]),
            Variant::PassiveInf => (vec![MU_T_FLOOR, 0.0], vec![1.0, FRAC_PI_4]),
            Variant::Passive2 if opts.optimize_lambda => (
                vec![MU_T_FLOOR, 0.0, THETA_MARGIN],
                vec![1.0, FRAC_PI_4, PI - THETA_MARGIN],
            ),
            Variant::Passive2 => (vec![MU_T_FLOOR, 0.0], vec![1.0, FRAC_PI_4]),
        };
        Problem { variant, ch, opts, lower, upper }
    }

    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn clamp(&self, x: &mut [f64]) {
        for (k, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[k], self.upper[k]);
        }
    }

    /// Value to maximize. Positive values are key rates; non-positive values
    /// rank parameter points with no key so the simplex can still climb
    /// towards the positive region.
    fn objective(&self, x: &[f64]) -> f64 {
        let value = match self.variant {
            Variant::ActiveInf => active_infinite_decoy_rate(x[0], &self.ch),
            Variant::PassiveInf => asymptotic_passive_rate(2.0 * x[0], x[1], &self.ch),
            Variant::Passive2 => {
                let theta = if self.dim() == 3 { x[2] } else { self.opts.theta_lambda };
                passive_two_interval_rate(x[0], theta, x[1], &self.ch, 2).map(|r| {
                    if r.rate_total > 0.0 {
                        r.rate_total
                    } else {
                        r.rate_signal.max(r.rate_decoy)
                    }
                })
            }
        };
        match value {
            Ok(v) if v.is_finite() => v.max(INFEASIBLE),
            _ => INFEASIBLE,
        }
    }

    fn grid(&self) -> Vec<Vec<f64>> {
        let o = self.opts;
        let mu_max = self.upper[0];
        let mu_axis: Vec<f64> = (1..=o.grid_mu_t).map(|i| mu_max * i as f64 / o.grid_mu_t as f64).collect();
        if self.variant == Variant::ActiveInf {
            return mu_axis.into_iter().map(|m| vec![m]).collect();
        }
        let omega_axis: Vec<f64> = (0..o.grid_omega)
            .map(|j| FRAC_PI_4 * j as f64 / o.grid_omega as f64)
            .collect();
        let theta_axis: Vec<f64> = if self.dim() == 3 {
            let k = o.grid_theta_lambda;
            (1..=k).map(|i| PI * i as f64 / (k + 1) as f64).collect()
        } else {
            vec![f64::NAN]
        };
        let mut points = Vec::with_capacity(mu_axis.len() * omega_axis.len() * theta_axis.len());
        for &m in &mu_axis {
            for &w in &omega_axis {
                for &th in &theta_axis {
                    let mut p = vec![m, w];
                    if self.dim() == 3 {
                        p.push(th);
                    }
                    points.push(p);
                }
            }
        }
        points
    }

    /// Initial simplex edge along each axis: half a grid cell.
    fn initial_steps(&self) -> Vec<f64> {
        let o = self.opts;
        let mut steps = vec![0.5 * self.upper[0] / o.grid_mu_t.max(1) as f64];
        if self.dim() >= 2 {
            steps.push(0.5 * FRAC_PI_4 / o.grid_omega.max(1) as f64);
        }
        if self.dim() == 3 {
            steps.push(0.5 * PI / (o.grid_theta_lambda + 1) as f64);
        }
        steps
    }

    fn result(&self, distance: f64, x: &[f64], value: f64, evaluations: usize, converged: bool) -> OptimizationResult {
        let (omega, theta) = match self.variant {
            Variant::ActiveInf => (f64::NAN, f64::NAN),
            Variant::PassiveInf => (x[1], PI),
            Variant::Passive2 => (x[1], if self.dim() == 3 { x[2] } else { self.opts.theta_lambda }),
        };
        OptimizationResult {
            variant: self.variant,
            distance,
            best_mu_t: x[0],
            best_omega: omega,
            best_theta_lambda: theta,
            best_rate: value.max(0.0),
            evaluations,
            converged,
        }
    }
}

struct Refined {
    x: Vec<f64>,
    value: f64,
    evaluations: usize,
    converged: bool,
}

/// Nelder–Mead maximization with every trial point clamped into the box.
fn nelder_mead(problem: &Problem, start: Vec<f64>, start_value: f64) -> Refined {
    let n = problem.dim();
    let o = problem.opts;
    let mut evaluations = 0;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        problem.objective(x)
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(start.clone(), start_value)];
    for (k, step) in problem.initial_steps().into_iter().enumerate() {
        let mut x = start.clone();
        x[k] = if x[k] + step <= problem.upper[k] { x[k] + step } else { x[k] - step };
        problem.clamp(&mut x);
        let f = eval(&x);
        simplex.push((x, f));
    }

    let mut converged = false;
    for _ in 0..o.max_iterations {
        // best first; stable sort keeps ties in insertion order
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0_f64, f64::max);
        if size < o.step_tol && (best - worst).abs() <= o.rate_tol * best.abs() {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|(x, _)| x[k]).sum::<f64>() / n as f64)
            .collect();
        let along = |coef: f64| {
            let mut x: Vec<f64> = (0..n).map(|k| centroid[k] + coef * (simplex[n].0[k] - centroid[k])).collect();
            problem.clamp(&mut x);
            x
        };

        let xr = along(-1.0);
        let fr = eval(&xr);
        if fr > best {
            let xe = along(-2.0);
            let fe = eval(&xe);
            simplex[n] = if fe > fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr > simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr > worst {
            let x = along(-0.5);
            let f = eval(&x);
            (x, f)
        } else {
            let x = along(0.5);
            let f = eval(&x);
            (x, f)
        };
        if fc > worst.max(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x0 = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let mut x: Vec<f64> = vertex.0.iter().zip(&x0).map(|(v, b)| b + 0.5 * (v - b)).collect();
            problem.clamp(&mut x);
            let f = eval(&x);
            *vertex = (x, f);
        }
    }
    simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
    let (x, value) = simplex.swap_remove(0);
    Refined { x, value, evaluations, converged }
}

fn check_distance(d: f64) -> Result<()> {
    if !(d >= 0.0 && d.is_finite()) {
        return Err(domain("optimize_at_distance", format!("distance = {d} must be >= 0")));
    }
    Ok(())
}

/// Grid scan plus refinement, optionally also seeding the refinement from a
/// previous optimum when it beats every grid point.
pub fn optimize_warm(
    variant: Variant,
    distance: f64,
    ch: &ChannelConfig,
    opts: &OptimizerOptions,
    warm: Option<&OptimizationResult>,
) -> Result<OptimizationResult> {
    check_distance(distance)?;
    let problem = Problem::new(variant, ch.with_distance(distance), opts);
    let grid = problem.grid();
    let values: Vec<f64> = grid.par_iter().map(|x| problem.objective(x)).collect();
    let mut evaluations = grid.len();

    let mut best_idx = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best_idx] {
            best_idx = i;
        }
    }
    let mut start = grid[best_idx].clone();
    let mut start_value = values[best_idx];

    if let Some(w) = warm.filter(|w| w.variant == variant) {
        let mut x = w.params();
        x.truncate(problem.dim());
        problem.clamp(&mut x);
        let v = problem.objective(&x);
        evaluations += 1;
        if v > start_value {
            start = x;
            start_value = v;
        }
    }

    let refined = nelder_mead(&problem, start, start_value);
    evaluations += refined.evaluations;
    Ok(problem.result(distance, &refined.x, refined.value, evaluations, refined.converged))
}

/// Optimum at one distance from a cold start.
pub fn optimize_at_distance(
    variant: Variant,
    distance: f64,
    ch: &ChannelConfig,
    opts: &OptimizerOptions,
) -> Result<OptimizationResult> {
    optimize_warm(variant, distance, ch, opts, None)
}

/// Optimizes every distance of a sorted grid, each warm-started from the
/// previous optimum.
pub fn distance_sweep(
    variant: Variant,
    distances: &[f64],
    ch: &ChannelConfig,
    opts: &OptimizerOptions,
) -> Result<Vec<OptimizationResult>> {
    if distances.windows(2).any(|w| w[1] < w[0]) {
        return Err(domain("distance_sweep", "distance grid must be sorted ascending"));
    }
    let mut out: Vec<OptimizationResult> = Vec::with_capacity(distances.len());
    for &d in distances {
        let r = optimize_warm(variant, d, ch, opts, out.last())?;
        out.push(r);
    }
    Ok(out)
}

/// Located cutoff: rates are positive at `last_positive.distance` and vanish
/// at `first_zero_distance`.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffResult {
    pub variant: Variant,
    pub distance: f64,
    pub last_positive: OptimizationResult,
    pub first_zero_distance: f64,
}

fn is_positive(r: &OptimizationResult) -> bool {
    r.best_rate > POSITIVE_RATE_FLOOR
}

/// Largest distance with a positive optimized rate: a coarse forward scan
/// brackets the sign change, then bisection narrows it to
/// `cutoff_resolution`. The reported distance is the bracket midpoint.
pub fn find_cutoff(variant: Variant, ch: &ChannelConfig, opts: &OptimizerOptions) -> Result<CutoffResult> {
    let mut lo = optimize_at_distance(variant, 0.0, ch, opts)?;
    if !is_positive(&lo) {
        return Err(Error::NoPositiveRate { distance: 0.0 });
    }
    let mut hi_d = loop {
        let d = lo.distance + opts.cutoff_step;
        if d > opts.max_distance {
            return Err(domain("find_cutoff", format!("rate still positive at {} km", lo.distance)));
        }
        let r = optimize_warm(variant, d, ch, opts, Some(&lo))?;
        if is_positive(&r) {
            lo = r;
        } else {
            break d;
        }
    };
    while hi_d - lo.distance > opts.cutoff_resolution {
        let mid = 0.5 * (lo.distance + hi_d);
        let r = optimize_warm(variant, mid, ch, opts, Some(&lo))?;
        if is_positive(&r) {
            lo = r;
        } else {
            hi_d = mid;
        }
    }
    Ok(CutoffResult {
        variant,
        distance: 0.5 * (lo.distance + hi_d),
        last_positive: lo,
        first_zero_distance: hi_d,
    })
}

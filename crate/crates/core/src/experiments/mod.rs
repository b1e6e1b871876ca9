//! Rate-sweep harness.
//!
//! Each run builds the compander sequence optimal for the configured source,
//! measures Rényi entropy and `r`th-power distortion at every `n` of the
//! grid by quadrature, and compares the results with the limits from
//! [`crate::theory`]. Rate points are evaluated in parallel (capped by the
//! `RENYI_QUANT_THREADS` environment variable) and always reported in grid
//! order, so two runs of the same config give identical reports.

mod config;
mod lemma;
mod report;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compander::{build_compander, optimal_point_density, refine_codepoints, PointDensity};
use crate::density::Density;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::quantizer::{complement, renyi_entropy_vec, Quantizer};
use crate::theory;

pub use config::{apply_override, default_n_grid, ExperimentConfig, Tolerances, MAX_CELLS};
pub use lemma::{run_lemma_check, LemmaReport};
pub use report::format_csv_number;

/// Environment variable capping the number of sweep threads.
pub const THREADS_ENV: &str = "RENYI_QUANT_THREADS";

const UNIMODALITY_LEVELS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Asymptotics,
    EntropyDensity,
    DistortionDensity,
    Mismatch,
    Sanity,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::Asymptotics,
        Experiment::EntropyDensity,
        Experiment::DistortionDensity,
        Experiment::Mismatch,
        Experiment::Sanity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Asymptotics => "asymptotics",
            Experiment::EntropyDensity => "entropy-density",
            Experiment::DistortionDensity => "distortion-density",
            Experiment::Mismatch => "mismatch",
            Experiment::Sanity => "sanity",
        }
    }

    /// File-name friendly form of [`Experiment::name`].
    pub fn slug(self) -> &'static str {
        match self {
            Experiment::Asymptotics => "asymptotics",
            Experiment::EntropyDensity => "entropy_density",
            Experiment::DistortionDensity => "distortion_density",
            Experiment::Mismatch => "mismatch",
            Experiment::Sanity => "sanity",
        }
    }

    fn needs_positive_alpha(self) -> bool {
        self != Experiment::Sanity
    }
}

/// Measurements at one grid point. For mismatch runs every quantity is
/// taken under the mismatched source `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    /// `H^α(q_n)`
    pub entropy: f64,
    /// `D(q_n)`
    pub distortion: f64,
    /// `e^{rH} D`
    pub normalized_distortion: f64,
    /// `e^{rH} D` over the run's reference limit.
    pub ratio_to_limit: f64,
    /// `e^{(1-α)H_{μ(·|A_i)}} / e^{(1-α)H_μ}` for `A₁` and `A₂`.
    pub entropy_density_ratio_a1: f64,
    pub entropy_density_ratio_a2: f64,
    /// `Σ_i ratio_i μ(A_i)^α`
    pub partition_sum: f64,
    /// `e^{rH_{μ(·|A₁)}} D_{μ(·|A₁)}`
    pub restricted_normalized_distortion: f64,
    /// `∫_{A₁} |x - q(x)|^r dμ / D`
    pub distortion_share: f64,
    /// `Σ_{A₁} μ(S ∩ A₁)^α / Σ μ(S)^α`
    pub power_sum_share: f64,
    /// Distortion share over power-sum share.
    pub coincidence_ratio: f64,
    /// `M^n(A₁) = e^{rH} ∫_{A₁} |x - q(x)|^r dμ`
    pub distortion_measure: f64,
    pub max_cell_probability: f64,
    /// `H^α_{μ(·|A_i)}(q_n)`
    pub restricted_entropy_a1: f64,
    pub restricted_entropy_a2: f64,
    /// `μ(S(p))^α / Σ μ(S)^α` for each evaluation point `p`.
    pub single_cell_ratios: Vec<f64>,
    /// `|D - μ(A₁)D₁ - μ(A₂)D₂| / D`
    pub identity_residual: f64,
    /// `e^{(1-α)(H_ν - H_μ)}`; mismatch runs only.
    pub mismatch_entropy_shift: Option<f64>,
    /// `e^{rH_ν} D_ν / Q(ν)`; mismatch runs only.
    pub mismatch_loss: Option<f64>,
}

/// Limits from the theory module that a run compares against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    /// Reference for [`RatePoint::ratio_to_limit`]: `Q_{α,r}` of the
    /// source, or the mismatch distortion limit for mismatch runs.
    pub limit: f64,
    /// `Q_{α,r}` of the measured source.
    pub q: f64,
    pub interval: Interval,
    pub interval_mass: f64,
    /// `μ̂(A₁)` under the tilted measure.
    pub tilted_mass: f64,
    pub entropy_density_limits: [f64; 2],
    /// `Q_{α,r}(μ(·|A₁))`
    pub restricted_q: f64,
    /// `M(A₁)`
    pub distortion_measure: f64,
    pub mismatch: Option<MismatchLimits>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MismatchLimits {
    pub entropy_shift: f64,
    pub distortion_limit: f64,
    pub distortion_limit_via_divergence: f64,
    pub loss: f64,
}

/// Outcome of the hypothesis checks made before a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Hypotheses {
    pub unimodal: Option<bool>,
    pub unimodality_failing_level: Option<f64>,
    pub moment_order: Option<f64>,
    pub moment: Option<f64>,
    pub mismatch_moment: Option<f64>,
    pub ratio_bound: Option<f64>,
    pub ratio_argmax: Option<f64>,
}

/// One pass/fail comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// `|value - target| <= tolerance`
    fn near(name: &str, value: f64, target: f64, tolerance: f64) -> Self {
        Self::new(name, value, target, tolerance, (value - target).abs() <= tolerance)
    }

    /// `|value / target - 1| <= tolerance`
    fn relative(name: &str, value: f64, target: f64, tolerance: f64) -> Self {
        let passed = target != 0.0 && (value / target - 1.0).abs() <= tolerance;
        Self::new(name, value, target, tolerance, passed)
    }

    fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self::new(name, value, bound, 0.0, value <= bound)
    }

    fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Self::new(name, value, bound, 0.0, value >= bound)
    }

    fn new(name: &str, value: f64, target: f64, tolerance: f64, passed: bool) -> Self {
        Self {
            name: name.to_string(),
            value,
            target,
            tolerance,
            passed: passed && !value.is_nan(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub experiment: Experiment,
    pub records: Vec<RatePoint>,
    pub limits: Limits,
    pub eval_points: Vec<f64>,
    pub hypotheses: Hypotheses,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl ConvergenceReport {
    pub fn last(&self) -> &RatePoint {
        self.records.last().expect("grid is never empty")
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub fn run_asymptotics(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    run(Experiment::Asymptotics, cfg)
}

pub fn run_entropy_density(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    run(Experiment::EntropyDensity, cfg)
}

pub fn run_distortion_density(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    run(Experiment::DistortionDensity, cfg)
}

pub fn run_mismatch(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    run(Experiment::Mismatch, cfg)
}

pub fn run_sanity(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    run(Experiment::Sanity, cfg)
}

struct Setup {
    design: Density,
    measured: Density,
    point_density: PointDensity,
    alpha: f64,
    r: f64,
    a1: Interval,
    a2: Vec<Interval>,
    eval_points: Vec<f64>,
    refine: bool,
}

pub fn run(experiment: Experiment, cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    if experiment.needs_positive_alpha() && cfg.alpha <= 0.0 {
        return Err(Error::config("alpha", format!("{} needs alpha in (0, 1), got {}", experiment.name(), cfg.alpha)));
    }
    let design = cfg.build_source()?;
    let mismatch = cfg.build_mismatch_source()?;
    let measured = match (experiment, mismatch) {
        (Experiment::Mismatch, Some(f)) => f,
        (Experiment::Mismatch, None) => {
            return Err(Error::config("mismatch_source", "required for mismatch runs"));
        }
        _ => design.clone(),
    };
    let hypotheses = check_hypotheses(experiment, cfg, &design, &measured)?;

    let a1 = match cfg.interval {
        Some(i) => i,
        None => interquartile(&measured)?,
    };
    let mass = measured.mass(&a1);
    if !(mass > 0.0 && mass < 1.0) {
        return Err(Error::config("interval", format!("{a1} must have probability in (0, 1), got {mass}")));
    }
    let eval_points = match &cfg.eval_points {
        Some(p) => p.clone(),
        None => vec![measured.median()?, measured.mode()],
    };
    let setup = Setup {
        point_density: optimal_point_density(&design, cfg.alpha, cfg.r)?,
        design,
        measured,
        alpha: cfg.alpha,
        r: cfg.r,
        a1,
        a2: complement(&a1),
        eval_points,
        refine: cfg.refine_codepoints,
    };
    let limits = limits(experiment, &setup)?;

    let pool = thread_pool()?;
    let records = pool.install(|| {
        cfg.n_grid
            .par_iter()
            .map(|&n| measure(&setup, &limits, n))
            .collect::<Result<Vec<_>>>()
    })?;
    let checks = checks(experiment, &cfg.tolerances, &limits, &records);
    let passed = checks.iter().all(|c| c.passed);
    Ok(ConvergenceReport {
        experiment,
        records,
        limits,
        eval_points: setup.eval_points,
        hypotheses,
        checks,
        passed,
    })
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::config(THREADS_ENV, format!("expected a thread count, got `{v}`")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config(THREADS_ENV, e.to_string()))
}

fn interquartile(d: &Density) -> Result<Interval> {
    Interval::new(d.quantile(0.25)?, d.quantile(0.75)?)
}

fn check_hypotheses(
    experiment: Experiment,
    cfg: &ExperimentConfig,
    design: &Density,
    measured: &Density,
) -> Result<Hypotheses> {
    if experiment == Experiment::Sanity {
        return Ok(Hypotheses::default());
    }
    let order = cfg.r + cfg.moment_slack;
    let mut h = Hypotheses {
        moment_order: Some(order),
        ..Default::default()
    };
    let report = design.check_weak_unimodality(UNIMODALITY_LEVELS);
    h.unimodal = Some(report.passed);
    h.unimodality_failing_level = report.failing_level;
    if !report.passed {
        return Err(Error::Hypothesis(format!(
            "source is not weakly unimodal: level set at {:?} is not an interval",
            report.failing_level
        )));
    }
    let moment = finite_moment(design, order, "source")?;
    h.moment = Some(moment);
    if experiment == Experiment::Mismatch {
        h.mismatch_moment = Some(finite_moment(measured, order, "mismatch_source")?);
        let bound = theory::check_ratio_bound(design, measured);
        h.ratio_bound = Some(bound.bound);
        h.ratio_argmax = Some(bound.argmax);
        if !bound.bounded {
            return Err(Error::Hypothesis(format!(
                "f/g is not bounded: ratio {} at x = {}",
                bound.bound, bound.argmax
            )));
        }
    }
    Ok(h)
}

fn finite_moment(d: &Density, order: f64, what: &str) -> Result<f64> {
    match d.absolute_moment(order) {
        Ok(m) if m.is_finite() => Ok(m),
        Ok(_) | Err(Error::InfiniteIntegral(_)) => Err(Error::Hypothesis(format!(
            "{what} has no finite absolute moment of order {order}"
        ))),
        Err(e) => Err(e),
    }
}

fn limits(experiment: Experiment, s: &Setup) -> Result<Limits> {
    let d = &s.measured;
    let (alpha, r) = (s.alpha, s.r);
    let q = theory::quantization_coefficient(d, alpha, r)?;
    let tilted_mass = theory::tilted_mass(d, &s.a1, alpha, r)?;
    let mass = d.mass(&s.a1);
    let entropy_density_limits = [
        tilted_mass * mass.powf(-alpha),
        (1.0 - tilted_mass) * (1.0 - mass).powf(-alpha),
    ];
    let restricted_q = theory::quantization_coefficient(&d.restrict(&s.a1)?, alpha, r)?;
    let distortion_measure = theory::limit_distortion_measure(d, &s.a1, alpha, r)?;
    let mismatch = if experiment == Experiment::Mismatch {
        let (g, f) = (&s.design, &s.measured);
        Some(MismatchLimits {
            entropy_shift: theory::mismatch_entropy_shift(g, f, alpha, r)?,
            distortion_limit: theory::mismatch_distortion_limit(g, f, alpha, r)?,
            distortion_limit_via_divergence: theory::mismatch_distortion_limit_via_divergence(g, f, alpha, r)?,
            loss: theory::mismatch_loss(g, f, alpha, r)?,
        })
    } else {
        None
    };
    Ok(Limits {
        limit: mismatch.as_ref().map_or(q, |m| m.distortion_limit),
        q,
        interval: s.a1,
        interval_mass: mass,
        tilted_mass,
        entropy_density_limits,
        restricted_q,
        distortion_measure,
        mismatch,
    })
}

fn build_quantizer(s: &Setup, n: usize) -> Result<Quantizer> {
    let q = build_compander(&s.point_density, n)?;
    if s.refine {
        refine_codepoints(&q, &s.design, s.r)
    } else {
        Ok(q)
    }
}

fn measure(s: &Setup, limits: &Limits, n: usize) -> Result<RatePoint> {
    let (alpha, r) = (s.alpha, s.r);
    let q = build_quantizer(s, n)?;
    let d = &s.measured;
    let probs = q.cell_probabilities(d);
    let entropy = renyi_entropy_vec(&probs, alpha)?;
    let distortion = q.distortion(d, r)?;
    let m1 = q.restricted_metrics(d, &s.a1, alpha, r)?;
    let m2 = q.restricted_metrics_on(d, &s.a2, alpha, r)?;

    let scale = (r * entropy).exp();
    let normalized = scale * distortion;
    let power_sum = m1.entropy_power_sum;
    let ratio_a1 = m1.restricted_power_sum * m1.mass.powf(-alpha) / power_sum;
    let ratio_a2 = m2.restricted_power_sum * m2.mass.powf(-alpha) / power_sum;
    let distortion_share = m1.distortion_unnormalized / distortion;
    let power_sum_share = m1.restricted_power_sum / power_sum;
    let split = m1.mass * m1.distortion_restricted + m2.mass * m2.distortion_restricted;
    let single_cell_ratios = s
        .eval_points
        .iter()
        .map(|&p| probs.entries()[q.cell_index(p)].powf(alpha) / power_sum)
        .collect();
    let (shift, loss) = if limits.mismatch.is_some() {
        let design_entropy = q.entropy(&s.design, alpha)?;
        (
            Some(((1.0 - alpha) * (entropy - design_entropy)).exp()),
            Some(normalized / limits.q),
        )
    } else {
        (None, None)
    };
    Ok(RatePoint {
        n,
        entropy,
        distortion,
        normalized_distortion: normalized,
        ratio_to_limit: normalized / limits.limit,
        entropy_density_ratio_a1: ratio_a1,
        entropy_density_ratio_a2: ratio_a2,
        partition_sum: ratio_a1 * m1.mass.powf(alpha) + ratio_a2 * m2.mass.powf(alpha),
        restricted_normalized_distortion: (r * m1.entropy_restricted).exp() * m1.distortion_restricted,
        distortion_share,
        power_sum_share,
        coincidence_ratio: distortion_share / power_sum_share,
        distortion_measure: scale * m1.distortion_unnormalized,
        max_cell_probability: probs.max(),
        restricted_entropy_a1: m1.entropy_restricted,
        restricted_entropy_a2: m2.entropy_restricted,
        single_cell_ratios,
        identity_residual: (distortion - split).abs() / distortion,
        mismatch_entropy_shift: shift,
        mismatch_loss: loss,
    })
}

/// Largest step up over the last four values (0 when they never increase).
fn worst_increase(values: &[f64]) -> f64 {
    let tail = &values[values.len().saturating_sub(4)..];
    tail.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

fn checks(experiment: Experiment, tol: &Tolerances, limits: &Limits, records: &[RatePoint]) -> Vec<Check> {
    let last = records.last().expect("grid is never empty");
    let column = |f: &dyn Fn(&RatePoint) -> f64| records.iter().map(f).collect::<Vec<_>>();
    let mut out = Vec::new();
    let max_residual = column(&|p| p.identity_residual).into_iter().fold(0.0, f64::max);
    out.push(Check::at_most("identity", max_residual, tol.identity));
    let all_positive = records.iter().all(|p| p.ratio_to_limit.is_finite() && p.ratio_to_limit > 0.0);
    out.push(Check::new("ratio_finite", f64::from(u8::from(all_positive)), 1.0, 0.0, all_positive));
    match experiment {
        Experiment::Asymptotics => {
            out.push(Check::relative("ratio", last.normalized_distortion, limits.limit, tol.ratio));
            let deviation = column(&|p| (p.ratio_to_limit - 1.0).abs());
            out.push(Check::at_most("ratio_trend", worst_increase(&deviation), tol.trend_floor));
        }
        Experiment::EntropyDensity => {
            let [l1, l2] = limits.entropy_density_limits;
            out.push(Check::near("entropy_density_a1", last.entropy_density_ratio_a1, l1, tol.entropy_density));
            out.push(Check::near("entropy_density_a2", last.entropy_density_ratio_a2, l2, tol.entropy_density));
            out.push(Check::near("partition_sum", last.partition_sum, 1.0, tol.normalization));
            out.push(Check::relative(
                "restricted_distortion",
                last.restricted_normalized_distortion,
                limits.restricted_q,
                tol.restricted_distortion,
            ));
        }
        Experiment::DistortionDensity => {
            out.push(Check::near("distortion_share", last.distortion_share, limits.tilted_mass, tol.distortion_share));
            out.push(Check::near("coincidence", last.coincidence_ratio, 1.0, tol.coincidence));
            out.push(Check::relative(
                "distortion_measure",
                last.distortion_measure,
                limits.distortion_measure,
                tol.distortion_measure,
            ));
        }
        Experiment::Mismatch => {
            let m = limits.mismatch.as_ref().expect("mismatch limits");
            let shift = last.mismatch_entropy_shift.unwrap_or(f64::NAN);
            out.push(Check::near("entropy_shift", shift, m.entropy_shift, tol.mismatch_shift));
            out.push(Check::relative("mismatch_distortion", last.normalized_distortion, m.distortion_limit, tol.mismatch_distortion));
        }
        Experiment::Sanity => {
            let max_prob = column(&|p| p.max_cell_probability);
            out.push(Check::at_most("max_cell_probability_trend", worst_increase(&max_prob), tol.trend_floor));
            for i in 0..last.single_cell_ratios.len() {
                let ratios = column(&|p| p.single_cell_ratios[i]);
                out.push(Check::at_most(&format!("single_cell_{i}_trend"), worst_increase(&ratios), tol.trend_floor));
                out.push(Check::at_most(&format!("single_cell_{i}"), last.single_cell_ratios[i], tol.single_cell));
            }
            for (name, col) in [
                ("restricted_entropy_a1", column(&|p| -p.restricted_entropy_a1)),
                ("restricted_entropy_a2", column(&|p| -p.restricted_entropy_a2)),
            ] {
                out.push(Check::at_most(&format!("{name}_trend"), worst_increase(&col), tol.trend_floor));
                out.push(Check::at_least(name, -col[col.len() - 1], tol.restricted_entropy));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests;

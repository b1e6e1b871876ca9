//! Univariate probability densities with the functionals the quantizer
//! theory needs: power integrals `∫ g^β`, Rényi differential entropies,
//! absolute moments, conditioning on intervals and power tilting.
//!
//! The four parametric families carry closed forms for their distribution
//! functions and power integrals. Everything else falls back to adaptive
//! quadrature and bisection.

mod config;

use std::f64::consts::PI;
use std::sync::Arc;

use crate::special::{normal_cdf, normal_inverse_sf, normal_quantile, normal_sf};

pub use config::{DensityConfig, MixtureComponent};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::quadrature::{self, Tolerance, TAIL_MASS};

/// Width at which quantile bisection stops.
pub const QUANTILE_BISECTION_WIDTH: f64 = 1e-12;

/// Normalization tolerance enforced when a density is built numerically.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Probability density on the real line.
///
/// Cheap to clone; the family data sit behind an `Arc` and never change
/// after construction.
#[derive(Debug, Clone)]
pub struct Density {
    family: Arc<Family>,
    support: Interval,
}

#[derive(Debug)]
pub enum Family {
    Uniform {
        a: f64,
        b: f64,
    },
    Gaussian {
        mean: f64,
        sigma: f64,
    },
    Laplacian {
        mean: f64,
        scale: f64,
    },
    Exponential {
        rate: f64,
        shift: f64,
    },
    /// Linear interpolation between knots, zero outside `[x_0, x_last]`.
    PiecewiseLinear {
        xs: Vec<f64>,
        ys: Vec<f64>,
        /// cdf at each knot
        cum: Vec<f64>,
    },
    Mixture {
        weights: Vec<f64>,
        components: Vec<Density>,
    },
    /// `g 1_I / μ(I)`
    Restricted {
        base: Density,
        interval: Interval,
        mass: f64,
        cdf_lo: f64,
        sf_lo: f64,
        upper: bool,
    },
    /// `g^β / ∫ g^β`
    Tilted {
        base: Density,
        beta: f64,
        ln_norm: f64,
    },
}

/// Outcome of [`Density::check_weak_unimodality`].
#[derive(Debug, Clone, PartialEq)]
pub struct UnimodalityReport {
    pub passed: bool,
    pub levels_checked: usize,
    /// First sampled level whose superlevel set broke into several runs.
    pub failing_level: Option<f64>,
}

fn positive_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 1.0 / PARAM_LIMIT && v <= PARAM_LIMIT {
        Ok(())
    } else {
        Err(Error::InvalidDensity(format!("{name} must lie in [1e-100, 1e100], got {v}")))
    }
}

/// Parameters are confined to a range where closed-form quantiles and
/// quadrature windows cannot overflow.
pub const PARAM_LIMIT: f64 = 1e100;

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v.abs() <= PARAM_LIMIT {
        Ok(())
    } else {
        Err(Error::InvalidDensity(format!("{name} must be finite with magnitude at most 1e100, got {v}")))
    }
}

/// The spread must be resolvable in floating point at the given location.
fn resolvable(location: f64, spread: f64) -> Result<()> {
    if spread >= 1e-9 * location.abs() {
        Ok(())
    } else {
        Err(Error::InvalidDensity(format!(
            "spread {spread} is too small to resolve at location {location}"
        )))
    }
}

fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("probability must lie in (0, 1), got {p}")))
    }
}

impl Density {
    fn from_family(family: Family, support: Interval) -> Self {
        Self {
            family: Arc::new(family),
            support,
        }
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        finite("a", a)?;
        finite("b", b)?;
        if !(a < b) {
            return Err(Error::InvalidDensity(format!("uniform needs a < b, got ({a}, {b})")));
        }
        resolvable(a.abs().max(b.abs()), b - a)?;
        Ok(Self::from_family(Family::Uniform { a, b }, Interval::new(a, b)?))
    }

    pub fn gaussian(mean: f64, sigma: f64) -> Result<Self> {
        finite("mean", mean)?;
        positive_finite("sigma", sigma)?;
        resolvable(mean, sigma)?;
        Ok(Self::from_family(Family::Gaussian { mean, sigma }, Interval::real_line()))
    }

    pub fn laplacian(mean: f64, scale: f64) -> Result<Self> {
        finite("mean", mean)?;
        positive_finite("scale", scale)?;
        resolvable(mean, scale)?;
        Ok(Self::from_family(Family::Laplacian { mean, scale }, Interval::real_line()))
    }

    pub fn exponential(rate: f64, shift: f64) -> Result<Self> {
        positive_finite("rate", rate)?;
        finite("shift", shift)?;
        resolvable(shift, 1.0 / rate)?;
        Ok(Self::from_family(
            Family::Exponential { rate, shift },
            Interval::new(shift, f64::INFINITY)?,
        ))
    }

    /// Builds a piecewise linear density through `(x, y)` knots. The
    /// heights are rescaled so that the total area is one.
    pub fn piecewise_linear(knots: &[(f64, f64)]) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidDensity("piecewise linear density needs at least two knots".into()));
        }
        for (i, &(x, y)) in knots.iter().enumerate() {
            finite("knot x", x)?;
            finite("knot y", y)?;
            if y < 0.0 {
                return Err(Error::InvalidDensity(format!("knot {i} has negative height {y}")));
            }
            if i > 0 && !(knots[i - 1].0 < x) {
                return Err(Error::InvalidDensity("knot abscissae must be strictly increasing".into()));
            }
        }
        let (first, last) = (knots[0].0, knots[knots.len() - 1].0);
        resolvable(first.abs().max(last.abs()), last - first)?;
        let area: f64 = knots
            .windows(2)
            .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
            .sum();
        if !(area > 0.0 && area.is_finite()) {
            return Err(Error::InvalidDensity(format!("piecewise linear area must be positive, got {area}")));
        }
        let xs: Vec<f64> = knots.iter().map(|k| k.0).collect();
        let ys: Vec<f64> = knots.iter().map(|k| k.1 / area).collect();
        let mut cum = Vec::with_capacity(xs.len());
        let mut acc = 0.0;
        cum.push(0.0);
        for i in 1..xs.len() {
            acc += 0.5 * (ys[i - 1] + ys[i]) * (xs[i] - xs[i - 1]);
            cum.push(acc);
        }
        let support = Interval::new(xs[0], xs[xs.len() - 1])?;
        let d = Self::from_family(Family::PiecewiseLinear { xs, ys, cum }, support);
        d.verify_normalization()?;
        Ok(d)
    }

    /// Finite mixture. Weights must be positive; they are rescaled to sum to one.
    pub fn mixture(components: Vec<(f64, Density)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidDensity("mixture needs at least one component".into()));
        }
        let total: f64 = components.iter().map(|c| c.0).sum();
        for (w, _) in &components {
            positive_finite("mixture weight", *w)?;
        }
        let lo = components.iter().map(|c| c.1.support.lo()).fold(f64::INFINITY, f64::min);
        let hi = components.iter().map(|c| c.1.support.hi()).fold(f64::NEG_INFINITY, f64::max);
        let (weights, components): (Vec<f64>, Vec<Density>) =
            components.into_iter().map(|(w, d)| (w / total, d)).unzip();
        let d = Self::from_family(Family::Mixture { weights, components }, Interval::new(lo, hi)?);
        d.verify_normalization()?;
        Ok(d)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn support(&self) -> Interval {
        self.support
    }

    fn verify_normalization(&self) -> Result<()> {
        let total = self.integrate(|x| self.pdf(x))?;
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDensity(format!("density integrates to {total}, not 1")));
        }
        Ok(())
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match &*self.family {
            Family::Uniform { a, b } => {
                if *a <= x && x <= *b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Family::Gaussian { mean, sigma } => {
                let z = (x - mean) / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
            }
            Family::Laplacian { mean, scale } => (-(x - mean).abs() / scale).exp() / (2.0 * scale),
            Family::Exponential { rate, shift } => {
                if x >= *shift {
                    rate * (-rate * (x - shift)).exp()
                } else {
                    0.0
                }
            }
            Family::PiecewiseLinear { xs, ys, .. } => {
                let n = xs.len();
                if x < xs[0] || x > xs[n - 1] {
                    return 0.0;
                }
                let i = segment_index(xs, x);
                let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
                ys[i] + t * (ys[i + 1] - ys[i])
            }
            Family::Mixture { weights, components } => {
                weights.iter().zip(components).map(|(w, c)| w * c.pdf(x)).sum()
            }
            Family::Restricted {
                base, interval, mass, ..
            } => {
                if interval.lo() <= x && x <= interval.hi() {
                    base.pdf(x) / mass
                } else {
                    0.0
                }
            }
            Family::Tilted { .. } => {
                let l = self.ln_pdf(x);
                if l == f64::NEG_INFINITY {
                    0.0
                } else {
                    l.exp()
                }
            }
        }
    }

    /// `ln g(x)`, `-∞` outside the support. Exact in the far tails for the
    /// parametric families.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        match &*self.family {
            Family::Gaussian { mean, sigma } => {
                let z = (x - mean) / sigma;
                -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * PI).ln()
            }
            Family::Laplacian { mean, scale } => -(x - mean).abs() / scale - (2.0 * scale).ln(),
            Family::Exponential { rate, shift } => {
                if x >= *shift {
                    rate.ln() - rate * (x - shift)
                } else {
                    f64::NEG_INFINITY
                }
            }
            Family::Restricted {
                base, interval, mass, ..
            } => {
                if interval.lo() <= x && x <= interval.hi() {
                    base.ln_pdf(x) - mass.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Family::Tilted { base, beta, ln_norm } => {
                let l = base.ln_pdf(x);
                if l == f64::NEG_INFINITY {
                    l
                } else {
                    beta * l - ln_norm
                }
            }
            _ => self.pdf(x).ln(),
        }
    }

    /// `μ((-∞, x])`
    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        match &*self.family {
            Family::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            Family::Gaussian { mean, sigma } => normal_cdf((x - mean) / sigma),
            Family::Laplacian { mean, scale } => {
                let z = (x - mean) / scale;
                if z < 0.0 {
                    0.5 * z.exp()
                } else {
                    1.0 - 0.5 * (-z).exp()
                }
            }
            Family::Exponential { rate, shift } => {
                if x <= *shift {
                    0.0
                } else {
                    -(-rate * (x - shift)).exp_m1()
                }
            }
            Family::PiecewiseLinear { xs, ys, cum } => {
                let n = xs.len();
                if x <= xs[0] {
                    return 0.0;
                }
                if x >= xs[n - 1] {
                    return 1.0;
                }
                let i = segment_index(xs, x);
                let t = x - xs[i];
                let slope = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
                (cum[i] + ys[i] * t + 0.5 * slope * t * t).clamp(0.0, 1.0)
            }
            Family::Mixture { weights, components } => weights
                .iter()
                .zip(components)
                .map(|(w, c)| w * c.cdf(x))
                .sum::<f64>()
                .clamp(0.0, 1.0),
            Family::Restricted {
                base,
                interval,
                mass,
                cdf_lo,
                sf_lo,
                upper,
            } => {
                if x <= interval.lo() {
                    0.0
                } else if x >= interval.hi() {
                    1.0
                } else if *upper {
                    ((sf_lo - base.sf(x)) / mass).clamp(0.0, 1.0)
                } else {
                    ((base.cdf(x) - cdf_lo) / mass).clamp(0.0, 1.0)
                }
            }
            Family::Tilted { .. } => {
                if x <= self.support.lo() {
                    return 0.0;
                }
                if x >= self.support.hi() {
                    return 1.0;
                }
                let region = Interval::new(self.support.lo(), x).expect("x inside support");
                self.integrate_region(region, |t| self.pdf(t))
                    .unwrap_or(f64::NAN)
                    .clamp(0.0, 1.0)
            }
        }
    }

    /// Survival function `μ((x, ∞))`, accurate in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        match &*self.family {
            Family::Uniform { a, b } => ((b - x) / (b - a)).clamp(0.0, 1.0),
            Family::Gaussian { mean, sigma } => normal_sf((x - mean) / sigma),
            Family::Laplacian { mean, scale } => {
                let z = (x - mean) / scale;
                if z > 0.0 {
                    0.5 * (-z).exp()
                } else {
                    1.0 - 0.5 * z.exp()
                }
            }
            Family::Exponential { rate, shift } => {
                if x <= *shift {
                    1.0
                } else {
                    (-rate * (x - shift)).exp()
                }
            }
            Family::Mixture { weights, components } => weights
                .iter()
                .zip(components)
                .map(|(w, c)| w * c.sf(x))
                .sum::<f64>()
                .clamp(0.0, 1.0),
            Family::Restricted {
                base,
                interval,
                mass,
                cdf_lo,
                sf_lo,
                upper,
            } => {
                if x <= interval.lo() {
                    1.0
                } else if x >= interval.hi() {
                    0.0
                } else if *upper {
                    // sf_hi = sf_lo - mass
                    ((base.sf(x) - (sf_lo - mass)) / mass).clamp(0.0, 1.0)
                } else {
                    ((cdf_lo + mass - base.cdf(x)) / mass).clamp(0.0, 1.0)
                }
            }
            Family::Tilted { .. } => {
                if x <= self.support.lo() {
                    return 1.0;
                }
                if x >= self.support.hi() {
                    return 0.0;
                }
                let region = Interval::new(x, self.support.hi()).expect("x inside support");
                self.integrate_region(region, |t| self.pdf(t))
                    .unwrap_or(f64::NAN)
                    .clamp(0.0, 1.0)
            }
            Family::PiecewiseLinear { .. } => 1.0 - self.cdf(x),
        }
    }

    /// Probability of the half-open interval `(lo, hi]`, evaluated on
    /// whichever side of the median keeps the most digits.
    pub fn mass(&self, interval: &Interval) -> f64 {
        let (lo, hi) = (interval.lo(), interval.hi());
        let cdf_lo = self.cdf(lo);
        if cdf_lo > 0.5 {
            (self.sf(lo) - self.sf(hi)).max(0.0)
        } else {
            (self.cdf(hi) - cdf_lo).max(0.0)
        }
    }

    /// `inf { x : cdf(x) >= p }` for `p` in `(0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        let x = match &*self.family {
            Family::Uniform { a, b } => a + p * (b - a),
            Family::Gaussian { mean, sigma } => mean + sigma * normal_quantile(p),
            Family::Laplacian { mean, scale } => {
                if p < 0.5 {
                    mean + scale * (2.0 * p).ln()
                } else {
                    mean - scale * (2.0 * (1.0 - p)).ln()
                }
            }
            Family::Exponential { rate, shift } => shift - (-p).ln_1p() / rate,
            Family::Restricted {
                base,
                interval,
                mass,
                cdf_lo,
                sf_lo,
                upper,
            } => {
                let x = if *upper {
                    base.inverse_sf((sf_lo - p * mass).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON))?
                } else {
                    base.quantile((cdf_lo + p * mass).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON))?
                };
                x.clamp(interval.lo(), interval.hi())
            }
            _ => self.bisect(|x| self.cdf(x) >= p)?,
        };
        Ok(x)
    }

    /// `inf { x : sf(x) <= q }`; the upper-tail analogue of [`Density::quantile`].
    pub fn inverse_sf(&self, q: f64) -> Result<f64> {
        check_probability(q)?;
        let x = match &*self.family {
            Family::Uniform { a, b } => b - q * (b - a),
            Family::Gaussian { mean, sigma } => mean + sigma * normal_inverse_sf(q),
            Family::Laplacian { mean, scale } => {
                if q < 0.5 {
                    mean - scale * (2.0 * q).ln()
                } else {
                    mean + scale * (2.0 * (1.0 - q)).ln()
                }
            }
            Family::Exponential { rate, shift } => shift - q.ln() / rate,
            Family::Restricted { .. } => self.quantile(1.0 - q)?,
            _ => self.bisect(|x| self.sf(x) <= q)?,
        };
        Ok(x)
    }

    /// Smallest `x` (to within the bisection width) where the monotone
    /// predicate turns true.
    fn bisect<P: Fn(f64) -> bool>(&self, reached: P) -> Result<f64> {
        let core = self.integration_core();
        let span = core.width().max(1.0);
        let mut lo = core.lo();
        let mut hi = core.hi();
        let mut step = span;
        while reached(lo) {
            if lo <= self.support.lo() {
                return Ok(self.support.lo());
            }
            lo = (lo - step).max(self.support.lo());
            step *= 2.0;
            if !lo.is_finite() {
                return Err(Error::domain("quantile bracket escaped to -inf"));
            }
        }
        step = span;
        while !reached(hi) {
            if hi >= self.support.hi() {
                return Ok(self.support.hi());
            }
            hi = (hi + step).min(self.support.hi());
            step *= 2.0;
            if !hi.is_finite() {
                return Err(Error::domain("quantile bracket escaped to +inf"));
            }
        }
        while hi - lo > QUANTILE_BISECTION_WIDTH {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if reached(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// Points where the density or its derivative jumps; quadrature splits
    /// its panels there.
    pub fn kinks(&self) -> Vec<f64> {
        match &*self.family {
            Family::Uniform { a, b } => vec![*a, *b],
            Family::Gaussian { .. } => Vec::new(),
            Family::Laplacian { mean, .. } => vec![*mean],
            Family::Exponential { shift, .. } => vec![*shift],
            Family::PiecewiseLinear { xs, .. } => xs.clone(),
            Family::Mixture { components, .. } => components.iter().flat_map(|c| c.kinks()).collect(),
            Family::Restricted { base, interval, .. } => {
                let mut k = base.kinks();
                k.extend([interval.lo(), interval.hi()].into_iter().filter(|v| v.is_finite()));
                k
            }
            Family::Tilted { base, .. } => base.kinks(),
        }
    }

    /// Finite window carrying all but about `2e-12` of the mass (for the
    /// parametric families exactly the tail-truncated support). Built
    /// without calling back into quadrature.
    pub fn integration_core(&self) -> Interval {
        let s = self.support;
        let closed_form = |lo: f64, hi: f64| Interval::new(lo, hi).expect("ordered core");
        match &*self.family {
            Family::Uniform { .. } | Family::PiecewiseLinear { .. } => s,
            Family::Gaussian { .. } | Family::Laplacian { .. } | Family::Exponential { .. } => {
                let lo = if s.lo().is_finite() {
                    s.lo()
                } else {
                    self.quantile(TAIL_MASS).expect("valid tail mass")
                };
                let hi = self.inverse_sf(TAIL_MASS).expect("valid tail mass");
                closed_form(lo, hi)
            }
            Family::Mixture { components, .. } => {
                let cores: Vec<Interval> = components.iter().map(|c| c.integration_core()).collect();
                let lo = cores.iter().map(|c| c.lo()).fold(f64::INFINITY, f64::min);
                let hi = cores.iter().map(|c| c.hi()).fold(f64::NEG_INFINITY, f64::max);
                closed_form(lo, hi)
            }
            Family::Restricted { base, interval, .. } => {
                if let Some(c) = base.integration_core().intersect(interval) {
                    return c;
                }
                if interval.is_bounded() {
                    *interval
                } else if interval.lo().is_finite() {
                    closed_form(interval.lo(), interval.lo() + 1.0)
                } else {
                    closed_form(interval.hi() - 1.0, interval.hi())
                }
            }
            Family::Tilted { base, .. } => base.integration_core(),
        }
    }

    /// `∫ f` over the support, with tail extension on unbounded sides.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        self.integrate_region(self.support, f)
    }

    /// `∫_region f`, where `region` is clipped to the support.
    pub fn integrate_region<F: Fn(f64) -> f64>(&self, region: Interval, f: F) -> Result<f64> {
        let Some(region) = region.intersect(&self.support) else {
            return Ok(0.0);
        };
        quadrature::integrate_over(f, region, self.integration_core(), &self.kinks(), Tolerance::default())
    }

    /// `∫ g^β dλ`
    pub fn power_integral(&self, beta: f64) -> Result<f64> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::domain(format!("power exponent must be positive, got {beta}")));
        }
        let v = match &*self.family {
            Family::Uniform { a, b } => (b - a).powf(1.0 - beta),
            Family::Gaussian { sigma, .. } => {
                (2.0 * PI * sigma * sigma).powf(0.5 * (1.0 - beta)) / beta.sqrt()
            }
            Family::Laplacian { scale, .. } => (2.0 * scale).powf(1.0 - beta) / beta,
            Family::Exponential { rate, .. } => rate.powf(beta - 1.0) / beta,
            // ∫ (g^b / N)^β = N^-β ∫ g^(bβ)
            Family::Tilted { base, beta: b, ln_norm } => {
                (base.power_integral(b * beta)?.ln() - beta * ln_norm).exp()
            }
            _ => self.integrate(|x| {
                let l = self.ln_pdf(x);
                if l == f64::NEG_INFINITY {
                    0.0
                } else {
                    (beta * l).exp()
                }
            })?,
        };
        if !v.is_finite() {
            return Err(Error::InfiniteIntegral(format!("∫ g^{beta} is not finite")));
        }
        Ok(v)
    }

    /// `-∫ g ln g dλ`
    pub fn shannon_differential_entropy(&self) -> Result<f64> {
        match &*self.family {
            Family::Uniform { a, b } => Ok((b - a).ln()),
            Family::Gaussian { sigma, .. } => Ok(0.5 * (2.0 * PI * std::f64::consts::E * sigma * sigma).ln()),
            Family::Laplacian { scale, .. } => Ok(1.0 + (2.0 * scale).ln()),
            Family::Exponential { rate, .. } => Ok(1.0 - rate.ln()),
            _ => self.integrate(|x| {
                let p = self.pdf(x);
                if p > 0.0 {
                    -p * self.ln_pdf(x)
                } else {
                    0.0
                }
            }),
        }
    }

    /// `(1/(1-β)) ln ∫ g^β`; the Shannon differential entropy at `β = 1`.
    pub fn renyi_differential_entropy(&self, beta: f64) -> Result<f64> {
        if (beta - 1.0).abs() < 1e-9 {
            return self.shannon_differential_entropy();
        }
        Ok(self.power_integral(beta)?.ln() / (1.0 - beta))
    }

    /// `∫ |x|^r dμ`
    pub fn absolute_moment(&self, r: f64) -> Result<f64> {
        if !(r >= 1.0 && r.is_finite()) {
            return Err(Error::domain(format!("moment order must be >= 1, got {r}")));
        }
        let mut kinks = self.kinks();
        kinks.push(0.0);
        let region = self.support;
        let v = quadrature::integrate_over(
            |x| {
                let p = self.pdf(x);
                if p > 0.0 {
                    x.abs().powf(r) * p
                } else {
                    0.0
                }
            },
            region,
            self.integration_core(),
            &kinks,
            Tolerance::default(),
        )?;
        if !v.is_finite() {
            return Err(Error::InfiniteIntegral(format!("moment of order {r} diverges")));
        }
        Ok(v)
    }

    /// Conditional density `g 1_I / μ(I)`.
    pub fn restrict(&self, interval: &Interval) -> Result<Density> {
        let support = self
            .support
            .intersect(interval)
            .ok_or_else(|| Error::EmptyConditioning(format!("interval {interval} misses the support")))?;
        match &*self.family {
            Family::Uniform { .. } => return Density::uniform(support.lo(), support.hi()),
            Family::Restricted { base, interval: inner, .. } => {
                let both = inner
                    .intersect(interval)
                    .ok_or_else(|| Error::EmptyConditioning(format!("interval {interval} misses the support")))?;
                return base.restrict(&both);
            }
            _ => {}
        }
        let cdf_lo = self.cdf(support.lo());
        let sf_lo = self.sf(support.lo());
        let upper = cdf_lo > 0.5;
        let mass = if upper {
            sf_lo - self.sf(support.hi())
        } else {
            self.cdf(support.hi()) - cdf_lo
        };
        if !(mass > 0.0) {
            return Err(Error::EmptyConditioning(format!(
                "interval {interval} has zero probability"
            )));
        }
        Ok(Self::from_family(
            Family::Restricted {
                base: self.clone(),
                interval: support,
                mass,
                cdf_lo,
                sf_lo,
                upper,
            },
            support,
        ))
    }

    /// Power-tilted density `g^β / ∫ g^β`. Closed under tilting for the
    /// parametric families, which keep their closed forms.
    pub fn tilted(&self, beta: f64) -> Result<Density> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::domain(format!("tilt exponent must be positive, got {beta}")));
        }
        match &*self.family {
            Family::Uniform { .. } => return Ok(self.clone()),
            Family::Gaussian { mean, sigma } => return Density::gaussian(*mean, sigma / beta.sqrt()),
            Family::Laplacian { mean, scale } => return Density::laplacian(*mean, scale / beta),
            Family::Exponential { rate, shift } => return Density::exponential(rate * beta, *shift),
            Family::Tilted { base, beta: b, .. } => return base.tilted(b * beta),
            _ => {}
        }
        let ln_norm = self.power_integral(beta)?.ln();
        Ok(Self::from_family(
            Family::Tilted {
                base: self.clone(),
                beta,
                ln_norm,
            },
            self.support,
        ))
    }

    /// Density of `s X` for `s > 0`, i.e. `g(x/s)/s`.
    pub fn scaled(&self, s: f64) -> Result<Density> {
        positive_finite("scale factor", s)?;
        match &*self.family {
            Family::Uniform { a, b } => Density::uniform(s * a, s * b),
            Family::Gaussian { mean, sigma } => Density::gaussian(s * mean, s * sigma),
            Family::Laplacian { mean, scale } => Density::laplacian(s * mean, s * scale),
            Family::Exponential { rate, shift } => Density::exponential(rate / s, s * shift),
            Family::PiecewiseLinear { xs, ys, .. } => {
                let knots: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (s * x, y / s)).collect();
                Density::piecewise_linear(&knots)
            }
            Family::Mixture { weights, components } => Density::mixture(
                weights
                    .iter()
                    .zip(components)
                    .map(|(w, c)| Ok((*w, c.scaled(s)?)))
                    .collect::<Result<Vec<_>>>()?,
            ),
            Family::Restricted { base, interval, .. } => base.scaled(s)?.restrict(&interval.affine(s, 0.0)),
            Family::Tilted { base, beta, .. } => base.scaled(s)?.tilted(*beta),
        }
    }

    /// Location of the maximum of the density (grid search for
    /// non-parametric families).
    pub fn mode(&self) -> f64 {
        match &*self.family {
            Family::Uniform { a, b } => 0.5 * (a + b),
            Family::Gaussian { mean, .. } | Family::Laplacian { mean, .. } => *mean,
            Family::Exponential { shift, .. } => *shift,
            Family::Tilted { base, .. } => base.mode(),
            _ => {
                let core = self.integration_core();
                let n = 8192;
                let mut best = (core.lo(), f64::NEG_INFINITY);
                for i in 0..=n {
                    let x = core.lo() + core.width() * i as f64 / n as f64;
                    let p = self.pdf(x);
                    if p > best.1 {
                        best = (x, p);
                    }
                }
                best.0
            }
        }
    }

    pub fn median(&self) -> Result<f64> {
        self.quantile(0.5)
    }

    /// Numerical check of weak unimodality: for `level_grid_size` levels
    /// spaced logarithmically below the peak, the superlevel set
    /// `{x : g(x) >= l}` sampled on a dense grid must be one contiguous run.
    /// Continuity is taken relative to the support, so jumps at the
    /// support ends are allowed.
    pub fn check_weak_unimodality(&self, level_grid_size: usize) -> UnimodalityReport {
        const X_GRID: usize = 20_000;
        let core = self.integration_core();
        let xs: Vec<f64> = (0..=X_GRID)
            .map(|i| core.lo() + core.width() * i as f64 / X_GRID as f64)
            .collect();
        let values: Vec<f64> = xs.iter().map(|&x| self.pdf(x)).collect();
        let peak = values.iter().copied().fold(0.0, f64::max).max(self.pdf(self.mode()));
        let levels = level_grid_size.max(1);
        // From 1e-6 of the peak up to just below it.
        let lo_exp = 1e-6f64.log2();
        let mut report = UnimodalityReport {
            passed: true,
            levels_checked: 0,
            failing_level: None,
        };
        for k in 0..levels {
            let frac = if levels == 1 { 0.5 } else { k as f64 / (levels - 1) as f64 };
            let level = peak * (lo_exp * (1.0 - frac)).exp2() * (1.0 - 1e-3);
            report.levels_checked += 1;
            let mut runs = 0;
            let mut inside = false;
            for &v in &values {
                let now = v >= level;
                if now && !inside {
                    runs += 1;
                }
                inside = now;
            }
            if runs > 1 {
                report.passed = false;
                report.failing_level = Some(level);
                break;
            }
        }
        report
    }
}

/// Index `i` with `xs[i] <= x <= xs[i + 1]`, for `x` inside the knot range.
fn segment_index(xs: &[f64], x: f64) -> usize {
    let i = xs.partition_point(|&k| k <= x);
    i.saturating_sub(1).min(xs.len() - 2)
}

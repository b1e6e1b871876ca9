//! Closed-form high-rate predictors.
//!
//! Everything here is a deterministic functional of one or two densities:
//! the exponents `β₁`, `β₂`, the quantization coefficient
//! `Q_{α,r} = C(r) (∫ g^β₁)^β₂`, Rényi divergences, the tilted
//! (entropy/distortion) density `g^β₁ / ∫ g^β₁`, the companding
//! performance functional, and the limits reached when a sequence designed
//! for `g` quantizes a source `f`.

use crate::density::Density;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::quadrature::{self, Tolerance};

/// `|α - 1|` below which the Shannon limit formulas take over.
pub const SHANNON_SWITCH: f64 = 1e-6;

/// Exponents and constant governing every high-rate formula for a given
/// entropy order `alpha` and distortion power `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    pub alpha: f64,
    pub r: f64,
    /// `(1 - α + αr) / (1 - α + r)`
    pub beta1: f64,
    /// `(1 - α + r) / (1 - α)`
    pub beta2: f64,
    /// `1 / (2^r (1 + r))`, the distortion constant of a uniform cell with
    /// its codepoint at the midpoint.
    pub c_r: f64,
}

impl RateParams {
    /// Exponent `r / (1 - α)` shared by the mismatch and density formulas.
    pub fn rate_exponent(&self) -> f64 {
        self.r / (1.0 - self.alpha)
    }

    /// Exponent `1/β₂` of the optimal point density.
    pub fn point_exponent(&self) -> f64 {
        1.0 / self.beta2
    }
}

pub fn distortion_constant(r: f64) -> f64 {
    1.0 / (2f64.powf(r) * (1.0 + r))
}

/// Builds [`RateParams`] for `α ∈ [0, 1)` and `r > 1`.
pub fn rate_params(alpha: f64, r: f64) -> Result<RateParams> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::domain(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    if !(r > 1.0 && r.is_finite()) {
        return Err(Error::domain(format!("r must be a finite value > 1, got {r}")));
    }
    let beta1 = (1.0 - alpha + alpha * r) / (1.0 - alpha + r);
    let beta2 = (1.0 - alpha + r) / (1.0 - alpha);
    let p = RateParams {
        alpha,
        r,
        beta1,
        beta2,
        c_r: distortion_constant(r),
    };
    debug_assert!((beta1 - alpha - (1.0 - alpha) / beta2).abs() < 1e-12);
    debug_assert!((beta1 - 1.0 + r / beta2).abs() < 1e-12);
    Ok(p)
}

/// `Q_{α,r}(μ) = C(r) (∫ g^β₁)^β₂`.
pub fn quantization_coefficient(d: &Density, alpha: f64, r: f64) -> Result<f64> {
    let p = rate_params(alpha, r)?;
    let ln_power = d.power_integral(p.beta1)?.ln();
    finite_or_divergent(p.c_r * (p.beta2 * ln_power).exp(), "quantization coefficient")
}

fn finite_or_divergent(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InfiniteIntegral(format!("{what} is not finite")))
    }
}

/// `exp(a ln u + b ln v)` with `0^a = 0` for `a > 0`.
fn pow_product(ln_u: f64, a: f64, ln_v: f64, b: f64) -> f64 {
    if (ln_u == f64::NEG_INFINITY && a > 0.0) || (ln_v == f64::NEG_INFINITY && b > 0.0) {
        return 0.0;
    }
    let e = a * ln_u + b * ln_v;
    if e.is_nan() {
        // only reachable as 0 * ln 0, which is 1
        return if a == 0.0 { (b * ln_v).exp() } else { (a * ln_u).exp() };
    }
    e.exp()
}

fn hull_core(u: &Density, v: &Density) -> Interval {
    let (a, b) = (u.integration_core(), v.integration_core());
    Interval::new(a.lo().min(b.lo()), a.hi().max(b.hi())).expect("non-empty hull")
}

fn merged_kinks(u: &Density, v: &Density) -> Vec<f64> {
    let mut k = u.kinks();
    k.extend(v.kinks());
    k
}

/// `∫_region u^a v^b dλ` with tail extension.
fn cross_integral(u: &Density, a: f64, v: &Density, b: f64, region: Interval) -> Result<f64> {
    quadrature::integrate_over(
        |x| pow_product(u.ln_pdf(x), a, v.ln_pdf(x), b),
        region,
        hull_core(u, v),
        &merged_kinks(u, v),
        Tolerance::default(),
    )
}

/// Rényi divergence `D_α(u‖v) = (1/(α-1)) ln ∫ u^α v^(1-α)`, the
/// Kullback-Leibler divergence at `α = 1`. Divergent integrals and support
/// violations give `+∞`.
pub fn renyi_divergence(u: &Density, v: &Density, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::domain(format!("divergence order must be positive, got {alpha}")));
    }
    let (su, sv) = (u.support(), v.support());
    if (alpha - 1.0).abs() < 1e-12 {
        return kullback_leibler(u, v);
    }
    if alpha > 1.0 && (su.lo() < sv.lo() || su.hi() > sv.hi()) {
        return Ok(f64::INFINITY);
    }
    let Some(region) = su.intersect(&sv) else {
        return Ok(f64::INFINITY);
    };
    let integral = match cross_integral(u, alpha, v, 1.0 - alpha, region) {
        Ok(v) => v,
        Err(Error::InfiniteIntegral(_)) => return Ok(f64::INFINITY),
        Err(e) => return Err(e),
    };
    if !(integral > 0.0) {
        return Ok(f64::INFINITY);
    }
    Ok((integral.ln() / (alpha - 1.0)).max(0.0))
}

/// `∫ u ln(u / v)`
pub fn kullback_leibler(u: &Density, v: &Density) -> Result<f64> {
    let (su, sv) = (u.support(), v.support());
    if su.lo() < sv.lo() || su.hi() > sv.hi() {
        return Ok(f64::INFINITY);
    }
    let value = quadrature::integrate_over(
        |x| {
            let lu = u.ln_pdf(x);
            if lu == f64::NEG_INFINITY {
                return 0.0;
            }
            lu.exp() * (lu - v.ln_pdf(x))
        },
        su,
        hull_core(u, v),
        &merged_kinks(u, v),
        Tolerance::default(),
    );
    match value {
        Ok(v) => Ok(v.max(0.0)),
        Err(Error::InfiniteIntegral(_)) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// The tilted measure `μ̂` with density `g^β₁ / ∫ g^β₁`, which is both the
/// entropy density and the distortion density.
pub fn tilted_measure(d: &Density, alpha: f64, r: f64) -> Result<Density> {
    let p = rate_params(alpha, r)?;
    d.tilted(p.beta1)
}

/// `μ̂(I)`
pub fn tilted_mass(d: &Density, interval: &Interval, alpha: f64, r: f64) -> Result<f64> {
    Ok(tilted_measure(d, alpha, r)?.mass(interval))
}

fn interior_mass(d: &Density, interval: &Interval) -> Result<f64> {
    let m = d.mass(interval);
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::domain(format!(
            "interval {interval} must have probability strictly between 0 and 1, got {m}"
        )));
    }
    Ok(m)
}

/// Limit of `e^{(1-α) H_{μ(·|I)}} / e^{(1-α) H_μ}`: `μ̂(I) μ(I)^{-α}`.
pub fn entropy_density_limit(d: &Density, interval: &Interval, alpha: f64, r: f64) -> Result<f64> {
    let m = interior_mass(d, interval)?;
    Ok(tilted_mass(d, interval, alpha, r)? * m.powf(-alpha))
}

/// `M_g(I) = C(r) (∫_I g^β₁) (∫ g^β₁)^{r/(1-α)}`, the limit of the
/// rate-normalized distortion measure. `∫_I g^β₁` is integrated directly.
pub fn limit_distortion_measure(d: &Density, interval: &Interval, alpha: f64, r: f64) -> Result<f64> {
    let p = rate_params(alpha, r)?;
    let local = d.integrate_region(*interval, |x| pow_product(d.ln_pdf(x), p.beta1, 0.0, 0.0))?;
    let total = d.power_integral(p.beta1)?;
    finite_or_divergent(
        p.c_r * local * (p.rate_exponent() * total.ln()).exp(),
        "limit distortion measure",
    )
}

/// Companding performance
/// `C(r) (∫ g^α h^{1-α})^{r/(1-α)} ∫ g h^{-r}` of point density `h` on
/// source `g`. Minimized, with value `Q_{α,r}(g)`, by `h = g_{α,r}`.
pub fn compander_performance(d: &Density, h: &Density, alpha: f64, r: f64) -> Result<f64> {
    let p = rate_params(alpha, r)?;
    let region = d.support();
    let spread = cross_integral(d, alpha, h, 1.0 - alpha, region)?;
    let bennett = cross_integral(d, 1.0, h, -r, region)?;
    finite_or_divergent(
        p.c_r * (p.rate_exponent() * spread.ln()).exp() * bennett,
        "compander performance",
    )
}

/// Grid diagnostic for the hypothesis that `f/g` is bounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioBound {
    /// Largest `f/g` seen on the grid (`+∞` where `g` vanishes under `f`).
    pub bound: f64,
    pub argmax: f64,
    pub bounded: bool,
}

/// Samples `f/g` on a `10^4`-point grid over the truncated support of `f`
/// and on a band 10% wider. The ratio counts as bounded when it is finite
/// everywhere and the wider band does not exceed the core maximum by more
/// than 10%.
pub fn check_ratio_bound(g: &Density, f: &Density) -> RatioBound {
    const N: usize = 10_000;
    let core = f.integration_core();
    let ratio = |x: f64| {
        let lf = f.ln_pdf(x);
        if lf == f64::NEG_INFINITY {
            return 0.0;
        }
        (lf - g.ln_pdf(x)).exp()
    };
    let scan = |lo: f64, hi: f64| {
        let mut best = (0.0f64, lo);
        for i in 0..=N {
            let x = lo + (hi - lo) * i as f64 / N as f64;
            let v = ratio(x);
            if v > best.0 || v.is_nan() {
                best = (if v.is_nan() { f64::INFINITY } else { v }, x);
            }
        }
        best
    };
    let (inner, at) = scan(core.lo(), core.hi());
    let pad = 0.1 * core.width();
    let s = f.support();
    let (outer, outer_at) = scan((core.lo() - pad).max(s.lo()), (core.hi() + pad).min(s.hi()));
    let bounded = inner.is_finite() && outer.is_finite() && outer <= 1.1 * inner;
    if outer > inner {
        RatioBound {
            bound: outer,
            argmax: outer_at,
            bounded,
        }
    } else {
        RatioBound {
            bound: inner,
            argmax: at,
            bounded,
        }
    }
}

/// Limit of `e^{(1-α)(H^α_ν - H^α_μ)}`: `∫ (f/g)^α g^β₁ / ∫ g^β₁`.
pub fn mismatch_entropy_shift(g: &Density, f: &Density, alpha: f64, r: f64) -> Result<f64> {
    let p = rate_params(alpha, r)?;
    let num = cross_integral(f, alpha, g, p.beta1 - alpha, f.support())?;
    finite_or_divergent(num / g.power_integral(p.beta1)?, "mismatch entropy shift")
}

/// Limit of `e^{r H^α_ν} D_ν` for a sequence optimal for `g` applied to `f`:
/// `C(r) (∫ f^α (g^{1/β₂})^{1-α})^{r/(1-α)} ∫ f (g^{1/β₂})^{-r}`.
///
/// The power `g^{1/β₂}` is used unnormalized; the expression is invariant
/// under rescaling it.
pub fn mismatch_distortion_limit(g: &Density, f: &Density, alpha: f64, r: f64) -> Result<f64> {
    let p = rate_params(alpha, r)?;
    let e = p.point_exponent();
    let region = f.support();
    let spread = cross_integral(f, alpha, g, e * (1.0 - alpha), region)?;
    let bennett = cross_integral(f, 1.0, g, -e * r, region)?;
    finite_or_divergent(
        p.c_r * (p.rate_exponent() * spread.ln()).exp() * bennett,
        "mismatch distortion limit",
    )
}

/// The same limit written as `C(r) e^{-r D_α(f‖g_{α,r})} ∫ f / g_{α,r}^r`.
pub fn mismatch_distortion_limit_via_divergence(g: &Density, f: &Density, alpha: f64, r: f64) -> Result<f64> {
    let p = rate_params(alpha, r)?;
    let h = g.tilted(p.point_exponent())?;
    let bennett = cross_integral(f, 1.0, &h, -r, f.support())?;
    let div = if alpha == 0.0 {
        // D_0(f‖h) = -ln h(supp f)
        -h.mass(&f.support()).ln()
    } else {
        renyi_divergence(f, &h, alpha)?
    };
    finite_or_divergent(p.c_r * (-r * div).exp() * bennett, "mismatch distortion limit")
}

/// Asymptotic loss `D_ν(q_n) / D^α_ν(H^α_ν(q_n))` from quantizing `f` with a
/// sequence optimal for `g`. `α = 1` uses the Kullback-Leibler limit.
pub fn mismatch_loss(g: &Density, f: &Density, alpha: f64, r: f64) -> Result<f64> {
    if (alpha - 1.0).abs() < SHANNON_SWITCH {
        return mismatch_loss_shannon(g, f, r);
    }
    let limit = mismatch_distortion_limit(g, f, alpha, r)?;
    let q = quantization_coefficient(f, alpha, r)?;
    Ok(limit / q)
}

/// Fixed-rate (`α = 0`) loss `e^{r D_{1+r}(f_*‖g_*)}` with
/// `f_* ∝ f^{1/(1+r)}`, `g_* ∝ g^{1/(1+r)}`.
pub fn mismatch_loss_fixed_rate(g: &Density, f: &Density, r: f64) -> Result<f64> {
    let e = 1.0 / (1.0 + r);
    let fs = f.tilted(e)?;
    let gs = g.tilted(e)?;
    Ok((r * renyi_divergence(&fs, &gs, 1.0 + r)?).exp())
}

/// Shannon (`α → 1`) loss `e^{r D(f‖g)}`.
pub fn mismatch_loss_shannon(g: &Density, f: &Density, r: f64) -> Result<f64> {
    if !(r > 1.0) {
        return Err(Error::domain(format!("r must be > 1, got {r}")));
    }
    Ok((r * kullback_leibler(f, g)?).exp())
}

/// Value, minimizer and minimum of `F(z) = A/z^γ + B/(1-z)^γ` on `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitBound {
    pub f_value: f64,
    pub z0: f64,
    pub f_min: f64,
}

pub fn split_bound(a: f64, b: f64, gamma: f64, z: f64) -> Result<SplitBound> {
    if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::domain(format!("A and B must be finite and nonnegative, got {a}, {b}")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::domain(format!("gamma must be positive, got {gamma}")));
    }
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::domain(format!("z must lie in (0, 1), got {z}")));
    }
    if a == 0.0 && b == 0.0 {
        return Err(Error::DegenerateInput("A = B = 0 leaves the minimizer undefined".into()));
    }
    let root = 1.0 / (1.0 + gamma);
    let (ar, br) = (a.powf(root), b.powf(root));
    Ok(SplitBound {
        f_value: a / z.powf(gamma) + b / (1.0 - z).powf(gamma),
        z0: ar / (ar + br),
        f_min: (ar + br).powf(1.0 + gamma),
    })
}

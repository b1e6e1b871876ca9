//! Companding quantizers.
//!
//! A point density `h` determines an `n`-cell quantizer by cutting the real
//! line at the `k/n` quantiles of `h` and placing each codepoint at the
//! `(2k-1)/(2n)` quantile, i.e. at the cell midpoint in the companded
//! domain `u = H(x)`. With `h = g_{α,r} ∝ g^{1/β₂}` the resulting sequence
//! is asymptotically optimal under the order-`α` Rényi entropy constraint.

use crate::density::Density;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::quadrature;
use crate::quantizer::{Quantizer, CELL_TOL};
use crate::theory::rate_params;

/// Companding profile. Any density can serve; [`optimal_point_density`]
/// gives the asymptotically optimal one.
#[derive(Debug, Clone)]
pub struct PointDensity(Density);

impl PointDensity {
    pub fn new(h: Density) -> Self {
        Self(h)
    }

    pub fn density(&self) -> &Density {
        &self.0
    }

    /// Whether `h > 0` on a grid over the truncated support of `source`.
    pub fn covers(&self, source: &Density) -> bool {
        let core = source.integration_core();
        (0..=2000).all(|i| {
            let x = core.lo() + core.width() * (i as f64 + 0.5) / 2001.0;
            source.pdf(x) == 0.0 || self.0.pdf(x) > 0.0
        })
    }
}

impl From<Density> for PointDensity {
    fn from(d: Density) -> Self {
        Self(d)
    }
}

/// `g_{α,r} = g^{1/β₂} / ∫ g^{1/β₂}`; at `α = 0` this is the fixed-rate
/// point density `∝ g^{1/(1+r)}`.
pub fn optimal_point_density(d: &Density, alpha: f64, r: f64) -> Result<PointDensity> {
    let p = rate_params(alpha, r)?;
    Ok(PointDensity(d.tilted(p.point_exponent())?))
}

/// `n`-cell compander for point density `h`.
pub fn build_compander(h: &PointDensity, n: usize) -> Result<Quantizer> {
    if n < 2 {
        return Err(Error::domain(format!("a compander needs n >= 2 cells, got {n}")));
    }
    let h = &h.0;
    let nf = n as f64;
    // Upper half through the survival function to keep tail digits.
    let at = |num: usize, den: f64| -> Result<f64> {
        let p = num as f64 / den;
        if p <= 0.5 {
            h.quantile(p)
        } else {
            h.inverse_sf((den - num as f64) / den)
        }
    };
    let breakpoints = (1..n).map(|k| at(k, nf)).collect::<Result<Vec<_>>>()?;
    let codepoints = (1..=n).map(|k| at(2 * k - 1, 2.0 * nf)).collect::<Result<Vec<_>>>()?;
    Quantizer::new(breakpoints, codepoints)
}

/// Moves each codepoint to the minimizer of `∫_cell |x - c|^r g` (the
/// conditional mean for `r = 2`, golden-section search otherwise). A cell
/// keeps its old codepoint if the new one would not lower its distortion.
pub fn refine_codepoints(q: &Quantizer, d: &Density, r: f64) -> Result<Quantizer> {
    let probs = q.cell_probabilities(d);
    let core = d.integration_core();
    let mut codepoints = Vec::with_capacity(q.len());
    for (k, cell) in q.cells().enumerate() {
        if !(probs.entries()[k] > 0.0) {
            return Err(Error::DegenerateCell { index: k });
        }
        let old = q.codepoints()[k];
        let window = cell.intersect(&d.support()).unwrap_or(cell);
        let lo = if window.lo().is_finite() { window.lo() } else { core.lo().min(old) };
        let hi = if window.hi().is_finite() { window.hi() } else { core.hi().max(old) };
        let candidate = if r == 2.0 {
            conditional_mean(d, &cell)?
        } else {
            golden_section(|c| cell_cost(d, &cell, c, r), lo, hi, 1e-10)
        };
        let candidate = nudge_inside(candidate, &cell);
        let better = cell_cost(d, &cell, candidate, r) <= cell_cost(d, &cell, old, r);
        codepoints.push(if better { candidate } else { old });
    }
    q.with_codepoints(codepoints)
}

fn conditional_mean(d: &Density, cell: &Interval) -> Result<f64> {
    let mass = d.mass(cell);
    let Some(piece) = cell.intersect(&d.support()) else {
        return Err(Error::EmptyConditioning(format!("cell {cell} misses the support")));
    };
    let first = quadrature::integrate_over(|x| x * d.pdf(x), piece, d.integration_core(), &d.kinks(), CELL_TOL)?;
    Ok(first / mass)
}

fn cell_cost(d: &Density, cell: &Interval, c: f64, r: f64) -> f64 {
    let Some(piece) = cell.intersect(&d.support()) else {
        return 0.0;
    };
    let mut kinks = d.kinks();
    kinks.push(c);
    quadrature::integrate_over(
        |x| (x - c).abs().powf(r) * d.pdf(x),
        piece,
        d.integration_core(),
        &kinks,
        CELL_TOL,
    )
    .unwrap_or(f64::INFINITY)
}

fn nudge_inside(c: f64, cell: &Interval) -> f64 {
    if c <= cell.lo() {
        cell.lo().next_up()
    } else if c >= cell.hi() {
        cell.hi().next_down()
    } else {
        c
    }
}

/// Minimizer of a unimodal function on `[a, b]` to within `tol`.
fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol * (1.0 + a.abs().max(b.abs())) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

//! Adaptive Gauss-Kronrod integration.
//!
//! A single G7/K15 pair is applied on panels that are bisected in order of
//! decreasing error estimate until the summed estimate meets
//! `max(rel_tol * |value|, abs_tol)`. Panel selection breaks ties by
//! insertion order, so identical inputs give bit-identical results.
//!
//! Unbounded ranges are handled by [`integrate_over`], which integrates a
//! finite core and then walks outward with geometrically growing tail
//! panels until their contribution is negligible.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::density::Density;
use crate::error::{Error, Result};
use crate::interval::Interval;

pub const DEFAULT_REL_TOL: f64 = 1e-9;
pub const DEFAULT_ABS_TOL: f64 = 1e-12;
pub const MAX_SUBDIVISIONS: usize = 1_000_000;

/// Probability mass cut from each unbounded tail when a density's support is
/// truncated for integration.
pub const TAIL_MASS: f64 = 1e-12;

const MAX_TAIL_PANELS: usize = 128;

// Kronrod abscissae on [0, 1]; odd indices are the embedded Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationResult {
    pub value: f64,
    pub error_estimate: f64,
    pub subdivisions: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel: DEFAULT_REL_TOL,
            abs: DEFAULT_ABS_TOL,
        }
    }
}

impl Tolerance {
    pub fn new(rel: f64, abs: f64) -> Self {
        Self { rel, abs }
    }

    fn target(&self, value: f64) -> f64 {
        (self.rel * value.abs()).max(self.abs)
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    seq: usize,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// One K15 evaluation with the QUADPACK error heuristic.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    if !resk.is_finite() {
        return Err(Error::InfiniteIntegral(format!(
            "integrand is not finite on ({a}, {b})"
        )));
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Ok((value, err))
}

/// Integrates `f` over the finite interval `(a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<IntegrationResult> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::domain(format!(
            "integrate needs finite endpoints, got ({a}, {b}]"
        )));
    }
    if a == b {
        return Ok(IntegrationResult {
            value: 0.0,
            error_estimate: 0.0,
            subdivisions: 1,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    let (v0, e0) = gk15(&f, lo, hi)?;
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(Panel {
        a: lo,
        b: hi,
        value: v0,
        error: e0,
        seq,
    });
    let mut total = v0;
    let mut total_err = e0;
    // Error carried by panels too narrow to split further.
    let mut frozen_err = 0.0;
    let mut frozen_val = 0.0;
    let mut subdivisions = 1usize;

    while total_err > tol.target(total) {
        let Some(panel) = heap.pop() else { break };
        let mid = 0.5 * (panel.a + panel.b);
        if !(panel.a < mid && mid < panel.b) {
            frozen_err += panel.error;
            frozen_val += panel.value;
            if frozen_err > tol.target(total) {
                return Err(Error::NonConvergence {
                    value: sign * total,
                    error: total_err,
                    subdivisions,
                });
            }
            continue;
        }
        if subdivisions >= MAX_SUBDIVISIONS {
            return Err(Error::NonConvergence {
                value: sign * total,
                error: total_err,
                subdivisions,
            });
        }
        let (vl, el) = gk15(&f, panel.a, mid)?;
        let (vr, er) = gk15(&f, mid, panel.b)?;
        subdivisions += 1;
        total += vl + vr - panel.value;
        total_err += el + er - panel.error;
        for (a, b, value, error) in [(panel.a, mid, vl, el), (mid, panel.b, vr, er)] {
            seq += 1;
            heap.push(Panel {
                a,
                b,
                value,
                error,
                seq,
            });
        }
    }

    // Resum in a fixed order so rounding does not depend on the refinement path.
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value: f64 = panels.iter().map(|p| p.value).sum::<f64>() + frozen_val;
    let error_estimate: f64 = panels.iter().map(|p| p.error).sum::<f64>() + frozen_err;
    if error_estimate > tol.target(value) && frozen_err > tol.target(value) {
        return Err(Error::NonConvergence {
            value: sign * value,
            error: error_estimate,
            subdivisions,
        });
    }
    Ok(IntegrationResult {
        value: sign * value,
        error_estimate,
        subdivisions,
    })
}

/// Shorthand for [`integrate`] with default tolerances, returning the value.
pub fn integral<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    integrate(f, a, b, Tolerance::default()).map(|r| r.value)
}

/// Integrates `f` over `region`, which may be unbounded.
///
/// `core` is a finite window (typically the truncated support of the
/// relevant density) that is integrated directly, split at every point in
/// `kinks`. Each unbounded side of `region` is then covered by panels of
/// doubling width until a panel adds less than a hundredth of the tolerance
/// target. An integrand that keeps contributing is reported as divergent.
pub fn integrate_over<F: Fn(f64) -> f64>(
    f: F,
    region: Interval,
    core: Interval,
    kinks: &[f64],
    tol: Tolerance,
) -> Result<f64> {
    let Some(core) = region.intersect(&core) else {
        // The window misses the region entirely; fall back to a unit window
        // at the nearest finite end.
        let anchor = if region.lo().is_finite() {
            region.lo()
        } else if region.hi().is_finite() {
            region.hi() - 1.0
        } else {
            0.0
        };
        let window = Interval::new(anchor, anchor + 1.0)?;
        return integrate_over(f, region, window, kinks, tol);
    };
    let (lo, hi) = (core.lo(), core.hi());
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::domain(format!("integration core {core} must be finite")));
    }

    let mut cuts: Vec<f64> = kinks
        .iter()
        .copied()
        .filter(|k| k.is_finite() && *k > lo && *k < hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    let mut prev = lo;
    for c in cuts.into_iter().chain(std::iter::once(hi)) {
        total += integrate(&f, prev, c, tol)?.value;
        prev = c;
    }

    let width0 = (hi - lo).max(1e-3);
    if region.hi() == f64::INFINITY {
        total += tail(&f, hi, width0, 1.0, total, tol)?;
    }
    if region.lo() == f64::NEG_INFINITY {
        total += tail(&f, lo, width0, -1.0, total, tol)?;
    }
    Ok(total)
}

fn tail<F: Fn(f64) -> f64>(
    f: &F,
    start: f64,
    width0: f64,
    direction: f64,
    core_total: f64,
    tol: Tolerance,
) -> Result<f64> {
    let mut acc = 0.0;
    let mut edge = start;
    let mut width = 0.25 * width0;
    for _ in 0..MAX_TAIL_PANELS {
        let next = edge + direction * width;
        if !next.is_finite() {
            break;
        }
        let piece = integrate(f, edge.min(next), edge.max(next), tol)?.value;
        acc += piece;
        if piece.abs() <= 0.01 * tol.target(core_total + acc) {
            return Ok(acc);
        }
        edge = next;
        width *= 2.0;
    }
    Err(Error::InfiniteIntegral(format!(
        "tail beyond {start} keeps contributing (accumulated {acc})"
    )))
}

/// The integration window of a density: `[quantile(mass_tol), quantile(1 - mass_tol)]`
/// on unbounded sides, the support itself on bounded sides.
pub fn truncate_support(d: &Density, mass_tol: f64) -> Result<Interval> {
    if !(mass_tol > 0.0 && mass_tol < 0.01) {
        return Err(Error::domain(format!(
            "mass tolerance must lie in (0, 0.01), got {mass_tol}"
        )));
    }
    let s = d.support();
    let lo = if s.lo().is_finite() {
        s.lo()
    } else {
        d.quantile(mass_tol)?
    };
    let hi = if s.hi().is_finite() {
        s.hi()
    } else {
        d.inverse_sf(mass_tol)?
    };
    Interval::new(lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_is_exact() {
        let r = integrate(|_| 1.0, 0.0, 1.0, Tolerance::default()).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-15);
        assert!(r.error_estimate < 1e-12);
    }

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x * x, 0.0, 1.0, Tolerance::default()).unwrap();
        assert_abs_diff_eq!(r.value, 1.0 / 3.0, epsilon = 1e-10);
        assert_eq!(r.subdivisions, 1);
    }

    #[test]
    fn normal_mass_within_eight_sigma() {
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let r = integrate(phi, -8.0, 8.0, Tolerance::default()).unwrap();
        // 1 - erfc(8/sqrt 2) = 1 - 1.2442e-15
        assert_abs_diff_eq!(r.value, 1.0 - 1.244_192_114_854_357e-15, epsilon = 1e-9);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let f = |x: f64| x.exp();
        let ab = integral(f, 0.0, 2.0).unwrap();
        let ba = integral(f, 2.0, 0.0).unwrap();
        assert_eq!(ab, -ba);
    }

    #[test]
    fn jump_discontinuity_converges() {
        let step = |x: f64| if x > 0.3 { 1.0 } else { 0.0 };
        let v = integral(step, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(v, 0.7, epsilon = 1e-10);
    }

    #[test]
    fn deterministic_results() {
        let f = |x: f64| (5.0 * x).sin().abs() * (-x).exp();
        let a = integrate(f, 0.0, 7.0, Tolerance::default()).unwrap();
        let b = integrate(f, 0.0, 7.0, Tolerance::default()).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.subdivisions, b.subdivisions);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let err = integrate(|x: f64| if x > 0.5 { f64::INFINITY } else { x }, 0.0, 1.0, Tolerance::default())
            .unwrap_err();
        assert!(matches!(err, Error::InfiniteIntegral(_)));
        let err = integrate(|x: f64| 1.0 / x, 0.0, 1.0, Tolerance::default()).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. } | Error::InfiniteIntegral(_)));
    }

    #[test]
    fn unbounded_region_with_tails() {
        let f = |x: f64| (-x.abs()).exp() * 0.5;
        let core = Interval::new(-3.0, 3.0).unwrap();
        let v = integrate_over(f, Interval::real_line(), core, &[0.0], Tolerance::default()).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn divergent_tail_detected() {
        let f = |x: f64| 1.0 / (1.0 + x.abs());
        let core = Interval::new(-1.0, 1.0).unwrap();
        let err = integrate_over(f, Interval::real_line(), core, &[], Tolerance::default()).unwrap_err();
        assert!(matches!(err, Error::InfiniteIntegral(_)));
    }

    #[test]
    fn split_matches_unsplit() {
        let f = |x: f64| (x * x).cos() + x;
        let whole = integral(f, -1.0, 2.5).unwrap();
        let left = integral(f, -1.0, 0.37).unwrap();
        let right = integral(f, 0.37, 2.5).unwrap();
        assert_abs_diff_eq!(whole, left + right, epsilon = 2.0 * 1e-9 * whole.abs());
    }
}

//! Interval-cell quantizers and exact evaluation of their Rényi entropy and
//! `r`th-power distortion against a known density.

use serde::{Deserialize, Serialize};

pub use crate::interval::Interval;

use crate::density::Density;
use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};

/// Distance from 0 or 1 at which [`renyi_entropy_vec`] switches to the
/// Shannon formula.
pub const SHANNON_SWITCH: f64 = 1e-6;

/// Per-cell distortion integrals are controlled relative to the cell's own
/// contribution; cells can be many orders of magnitude below one.
pub const CELL_TOL: Tolerance = Tolerance {
    rel: 1e-10,
    abs: 1e-300,
};

/// Quantizer with cells `(-∞, b₁], (b₁, b₂], …, (b_{m-1}, ∞)` and one
/// codepoint strictly inside each cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuantizerRepr", into = "QuantizerRepr")]
pub struct Quantizer {
    breakpoints: Vec<f64>,
    codepoints: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuantizerRepr {
    breakpoints: Vec<f64>,
    codepoints: Vec<f64>,
}

impl TryFrom<QuantizerRepr> for Quantizer {
    type Error = Error;

    fn try_from(r: QuantizerRepr) -> Result<Self> {
        Quantizer::new(r.breakpoints, r.codepoints)
    }
}

impl From<Quantizer> for QuantizerRepr {
    fn from(q: Quantizer) -> Self {
        QuantizerRepr {
            breakpoints: q.breakpoints,
            codepoints: q.codepoints,
        }
    }
}

impl Quantizer {
    pub fn new(breakpoints: Vec<f64>, codepoints: Vec<f64>) -> Result<Self> {
        let m = codepoints.len();
        if m < 2 {
            return Err(Error::InvalidQuantizer(format!("need at least two cells, got {m}")));
        }
        if breakpoints.len() != m - 1 {
            return Err(Error::InvalidQuantizer(format!(
                "{m} codepoints need {} breakpoints, got {}",
                m - 1,
                breakpoints.len()
            )));
        }
        if breakpoints.iter().chain(&codepoints).any(|v| !v.is_finite()) {
            return Err(Error::InvalidQuantizer("breakpoints and codepoints must be finite".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidQuantizer("breakpoints must be strictly increasing".into()));
        }
        for (k, &c) in codepoints.iter().enumerate() {
            let above = k == 0 || breakpoints[k - 1] < c;
            let below = k == m - 1 || c < breakpoints[k];
            if !(above && below) {
                return Err(Error::InvalidQuantizer(format!(
                    "codepoint {k} = {c} is not interior to its cell"
                )));
            }
        }
        Ok(Self {
            breakpoints,
            codepoints,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config("quantizer", e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("quantizer serializes")
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn codepoints(&self) -> &[f64] {
        &self.codepoints
    }

    /// Number of cells.
    pub fn len(&self) -> usize {
        self.codepoints.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell(&self, k: usize) -> Interval {
        let lo = if k == 0 { f64::NEG_INFINITY } else { self.breakpoints[k - 1] };
        let hi = if k + 1 == self.len() {
            f64::INFINITY
        } else {
            self.breakpoints[k]
        };
        Interval::new(lo, hi).expect("cells are non-empty")
    }

    pub fn cells(&self) -> impl Iterator<Item = Interval> + '_ {
        (0..self.len()).map(|k| self.cell(k))
    }

    /// Index of the cell containing `x`; a breakpoint belongs to the cell
    /// on its left.
    pub fn cell_index(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&b| b < x)
    }

    pub fn quantize(&self, x: f64) -> f64 {
        self.codepoints[self.cell_index(x)]
    }

    /// Replaces the codepoints, keeping the breakpoints.
    pub fn with_codepoints(&self, codepoints: Vec<f64>) -> Result<Self> {
        Quantizer::new(self.breakpoints.clone(), codepoints)
    }

    /// Number of codepoints inside `interval`.
    pub fn codepoint_count_in(&self, interval: &Interval) -> usize {
        self.codepoints.iter().filter(|&&c| interval.contains(c)).count()
    }

    /// `μ(S_k)` for every cell.
    pub fn cell_probabilities(&self, d: &Density) -> ProbabilityVector {
        ProbabilityVector {
            entries: self.cells().map(|c| d.mass(&c)).collect(),
        }
    }

    /// `H^α_μ(q)`
    pub fn entropy(&self, d: &Density, alpha: f64) -> Result<f64> {
        renyi_entropy_vec(&self.cell_probabilities(d), alpha)
    }

    /// `D_μ(q) = ∫ |x - q(x)|^r dμ`
    pub fn distortion(&self, d: &Density, r: f64) -> Result<f64> {
        check_power(r)?;
        let mut total = 0.0;
        for k in 0..self.len() {
            total += self.cell_distortion(d, k, &self.cell(k), r)?;
        }
        Ok(total)
    }

    /// `∫_{S_k ∩ region} |x - c_k|^r g dλ`.
    pub fn cell_distortion(&self, d: &Density, k: usize, region: &Interval, r: f64) -> Result<f64> {
        let Some(piece) = self.cell(k).intersect(region).and_then(|p| p.intersect(&d.support())) else {
            return Ok(0.0);
        };
        let c = self.codepoints[k];
        let mut kinks = d.kinks();
        kinks.push(c);
        quadrature::integrate_over(
            |x| {
                let p = d.pdf(x);
                if p > 0.0 {
                    (x - c).abs().powf(r) * p
                } else {
                    0.0
                }
            },
            piece,
            d.integration_core(),
            &kinks,
            CELL_TOL,
        )
    }

    /// Entropy and distortion of `q` under the conditional law `μ(·|A)`,
    /// where `A` is the union of the disjoint intervals in `region`.
    pub fn restricted_metrics_on(
        &self,
        d: &Density,
        region: &[Interval],
        alpha: f64,
        r: f64,
    ) -> Result<RestrictedMetrics> {
        check_power(r)?;
        let mass: f64 = region.iter().map(|i| d.mass(i)).sum();
        if !(mass > 0.0) {
            return Err(Error::EmptyConditioning(format!("region {region:?} has zero probability")));
        }
        let full = self.cell_probabilities(d);
        let mut local = Vec::with_capacity(self.len());
        let mut distortion = 0.0;
        for (k, cell) in self.cells().enumerate() {
            let mut m = 0.0;
            for part in region {
                if let Some(piece) = cell.intersect(part) {
                    m += d.mass(&piece);
                    distortion += self.cell_distortion(d, k, &piece, r)?;
                }
            }
            local.push(m);
        }
        let restricted_power_sum = power_sum(&local, alpha);
        let conditional = ProbabilityVector {
            entries: local.iter().map(|m| m / mass).collect(),
        };
        Ok(RestrictedMetrics {
            mass,
            entropy_restricted: renyi_entropy_vec(&conditional, alpha)?,
            distortion_restricted: distortion / mass,
            distortion_unnormalized: distortion,
            entropy_power_sum: power_sum(&full.entries, alpha),
            restricted_power_sum,
        })
    }

    pub fn restricted_metrics(&self, d: &Density, interval: &Interval, alpha: f64, r: f64) -> Result<RestrictedMetrics> {
        self.restricted_metrics_on(d, std::slice::from_ref(interval), alpha, r)
    }
}

fn check_power(r: f64) -> Result<()> {
    if r >= 1.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("distortion power must be >= 1, got {r}")))
    }
}

/// `Σ p_k^α` over positive entries.
fn power_sum(entries: &[f64], alpha: f64) -> f64 {
    entries.iter().filter(|&&p| p > 0.0).map(|p| p.powf(alpha)).sum()
}

/// `ℝ ∖ (c, d]` as disjoint half-open pieces.
pub fn complement(interval: &Interval) -> Vec<Interval> {
    let mut parts = Vec::with_capacity(2);
    if interval.lo() > f64::NEG_INFINITY {
        parts.push(Interval::new(f64::NEG_INFINITY, interval.lo()).expect("finite lo"));
    }
    if interval.hi() < f64::INFINITY {
        parts.push(Interval::new(interval.hi(), f64::INFINITY).expect("finite hi"));
    }
    parts
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestrictedMetrics {
    /// `μ(A)`
    pub mass: f64,
    /// `H^α_{μ(·|A)}(q)`
    pub entropy_restricted: f64,
    /// `D_{μ(·|A)}(q)`
    pub distortion_restricted: f64,
    /// `∫_A |x - q(x)|^r dμ`
    pub distortion_unnormalized: f64,
    /// `Σ_k μ(S_k)^α`
    pub entropy_power_sum: f64,
    /// `Σ_k μ(S_k ∩ A)^α`
    pub restricted_power_sum: f64,
}

/// Finite probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    entries: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::domain("probability vector is empty"));
        }
        if entries.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::domain("probability entries must be finite and nonnegative"));
        }
        let total: f64 = entries.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }
}

/// Rényi entropy of order `α ≥ 0` in nats: `ln #{p_k > 0}` at `α = 0`,
/// the Shannon entropy within [`SHANNON_SWITCH`] of 1, and
/// `ln(Σ p_k^α) / (1 - α)` otherwise.
pub fn renyi_entropy_vec(p: &ProbabilityVector, alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::domain(format!("entropy order must be >= 0, got {alpha}")));
    }
    let positive = p.entries.iter().copied().filter(|&x| x > 0.0);
    let h = if alpha == 0.0 {
        (positive.count() as f64).ln()
    } else if (alpha - 1.0).abs() <= SHANNON_SWITCH {
        -positive.map(|x| x * x.ln()).sum::<f64>()
    } else {
        positive.map(|x| x.powf(alpha)).sum::<f64>().ln() / (1.0 - alpha)
    };
    Ok(h.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_cell() -> Quantizer {
        Quantizer::new(vec![0.5], vec![0.25, 0.75]).unwrap()
    }

    fn uniform_midpoint(n: usize) -> Quantizer {
        let b = (1..n).map(|k| k as f64 / n as f64).collect();
        let c = (0..n).map(|k| (k as f64 + 0.5) / n as f64).collect();
        Quantizer::new(b, c).unwrap()
    }

    fn pv(v: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn quantize_examples() {
        let q = two_cell();
        assert_eq!(q.quantize(0.5), 0.25);
        assert_eq!(q.quantize(0.7), 0.75);
        assert_eq!(q.quantize(-3.0), 0.25);
        assert_eq!(q.quantize(1e9), 0.75);
    }

    #[test]
    fn rejects_invalid_quantizers() {
        assert!(Quantizer::new(vec![], vec![0.0]).is_err());
        assert!(Quantizer::new(vec![0.5, 0.4], vec![0.0, 0.45, 1.0]).is_err());
        assert!(Quantizer::new(vec![0.5], vec![0.5, 0.75]).is_err());
        assert!(Quantizer::new(vec![0.5], vec![0.25]).is_err());
        assert!(Quantizer::new(vec![f64::NAN], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let q = two_cell();
        let text = q.to_json();
        assert_eq!(text, r#"{"breakpoints":[0.5],"codepoints":[0.25,0.75]}"#);
        assert_eq!(Quantizer::from_json(&text).unwrap(), q);
        assert!(Quantizer::from_json(r#"{"breakpoints":[0.5],"codepoints":[0.6,0.75]}"#).is_err());
    }

    #[test]
    fn cell_probability_examples() {
        let u = Density::uniform(0.0, 1.0).unwrap();
        let q = Quantizer::new(vec![0.25, 0.5, 0.75], vec![0.1, 0.3, 0.6, 0.9]).unwrap();
        for p in q.cell_probabilities(&u).entries() {
            assert_abs_diff_eq!(*p, 0.25, epsilon = 1e-15);
        }
        let g = Density::gaussian(0.0, 1.0).unwrap();
        let q = Quantizer::new(vec![0.0], vec![-1.0, 1.0]).unwrap();
        assert_eq!(q.cell_probabilities(&g).entries(), &[0.5, 0.5]);
        let q = Quantizer::new(vec![0.1], vec![0.05, 0.5]).unwrap();
        let p = q.cell_probabilities(&u);
        assert_abs_diff_eq!(p.entries()[0], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(p.entries()[1], 0.9, epsilon = 1e-15);
    }

    #[test]
    fn renyi_entropy_examples() {
        assert_abs_diff_eq!(renyi_entropy_vec(&pv(&[0.25; 4]), 0.5).unwrap(), 4f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(renyi_entropy_vec(&pv(&[0.5, 0.5, 0.0]), 0.0).unwrap(), 2f64.ln());
        let h = renyi_entropy_vec(&pv(&[0.75, 0.25]), 0.5).unwrap();
        assert_abs_diff_eq!(h, 2.0 * (0.75f64.sqrt() + 0.5).ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(h, 0.623_810_716_364_871, epsilon = 1e-12);
        // Shannon branch
        let s = renyi_entropy_vec(&pv(&[0.75, 0.25]), 1.0).unwrap();
        assert_abs_diff_eq!(s, -(0.75 * 0.75f64.ln() + 0.25 * 0.25f64.ln()), epsilon = 1e-15);
    }

    #[test]
    fn near_one_order_is_continuous() {
        let u = Density::gaussian(0.0, 1.0).unwrap();
        let q = Quantizer::new(vec![-1.0, 0.0, 0.3, 2.0], vec![-2.0, -0.5, 0.1, 1.0, 3.0]).unwrap();
        let shannon = q.entropy(&u, 1.0).unwrap();
        let near = q.entropy(&u, 1.0 - 1.01e-6).unwrap();
        assert!((shannon - near).abs() < 1e-4);
    }

    #[test]
    fn quantizer_entropy_examples() {
        let u = Density::uniform(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(uniform_midpoint(4).entropy(&u, 0.3).unwrap(), 4f64.ln(), epsilon = 1e-14);
        let g = Density::gaussian(0.0, 1.0).unwrap();
        let q = Quantizer::new(vec![0.0], vec![-1.0, 1.0]).unwrap();
        for &a in &[0.0, 0.2, 0.7, 1.0] {
            assert_abs_diff_eq!(q.entropy(&g, a).unwrap(), 2f64.ln(), epsilon = 1e-15);
        }
        let q = Quantizer::new(vec![0.75], vec![0.5, 0.9]).unwrap();
        assert_abs_diff_eq!(q.entropy(&u, 0.5).unwrap(), 0.623_810_716_364_871, epsilon = 1e-12);
    }

    #[test]
    fn distortion_examples() {
        let u = Density::uniform(0.0, 1.0).unwrap();
        let d4 = uniform_midpoint(4).distortion(&u, 2.0).unwrap();
        assert_abs_diff_eq!(d4, 1.0 / (12.0 * 16.0), epsilon = 1e-10);
        assert_abs_diff_eq!(d4, 0.00520833, epsilon = 1e-8);
        assert_abs_diff_eq!(two_cell().distortion(&u, 1.0).unwrap(), 0.125, epsilon = 1e-12);
        // E(X - c)^2 on each half = 1 - 2c E|X| + c^2 with E|X| = sqrt(2/pi)
        let g = Density::gaussian(0.0, 1.0).unwrap();
        let c = (2.0 / std::f64::consts::PI).sqrt();
        let q = Quantizer::new(vec![0.0], vec![-c, c]).unwrap();
        assert_abs_diff_eq!(q.distortion(&g, 2.0).unwrap(), 1.0 - c * c, epsilon = 1e-9);
        assert_abs_diff_eq!(1.0 - c * c, 0.36338, epsilon = 1e-5);
        assert!(q.distortion(&g, 0.5).is_err());
    }

    #[test]
    fn restricted_metrics_examples() {
        let u = Density::uniform(0.0, 1.0).unwrap();
        let q = uniform_midpoint(4);
        let i = Interval::new(0.0, 0.5).unwrap();
        let m = q.restricted_metrics(&u, &i, 0.5, 2.0).unwrap();
        assert_abs_diff_eq!(m.entropy_restricted, 2f64.ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(m.restricted_power_sum, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.entropy_power_sum, 2.0, epsilon = 1e-14);
        let whole = q.restricted_metrics(&u, &Interval::real_line(), 0.5, 2.0).unwrap();
        assert_abs_diff_eq!(whole.entropy_restricted, q.entropy(&u, 0.5).unwrap(), epsilon = 1e-12);
        assert!(matches!(
            q.restricted_metrics(&u, &Interval::new(2.0, 3.0).unwrap(), 0.5, 2.0),
            Err(Error::EmptyConditioning(_))
        ));
    }

    #[test]
    fn codepoint_count_examples() {
        let q = uniform_midpoint(4);
        assert_eq!(q.codepoint_count_in(&Interval::new(0.0, 0.5).unwrap()), 2);
        assert_eq!(q.codepoint_count_in(&Interval::new(2.0, 3.0).unwrap()), 0);
        assert_eq!(q.codepoint_count_in(&Interval::real_line()), 4);
    }

    #[test]
    fn partition_identity_for_distortion() {
        let g = Density::gaussian(0.0, 1.0).unwrap();
        let q = Quantizer::new(vec![-1.0, -0.2, 0.4, 1.1], vec![-1.7, -0.6, 0.1, 0.7, 1.9]).unwrap();
        let a1 = Interval::new(-0.5, 0.8).unwrap();
        let m1 = q.restricted_metrics(&g, &a1, 0.5, 2.0).unwrap();
        let m2 = q.restricted_metrics_on(&g, &complement(&a1), 0.5, 2.0).unwrap();
        let total = q.distortion(&g, 2.0).unwrap();
        assert_abs_diff_eq!(
            m1.mass * m1.distortion_restricted + m2.mass * m2.distortion_restricted,
            total,
            epsilon = 1e-9
        );
    }

    #[test]
    fn shift_invariance_of_distortion() {
        let g = Density::laplacian(0.0, 1.0).unwrap();
        let gs = Density::laplacian(3.0, 1.0).unwrap();
        let b = vec![-1.0, 0.0, 0.5];
        let c = vec![-2.0, -0.4, 0.2, 1.5];
        let q = Quantizer::new(b.clone(), c.clone()).unwrap();
        let qs = Quantizer::new(b.iter().map(|x| x + 3.0).collect(), c.iter().map(|x| x + 3.0).collect()).unwrap();
        for &r in &[1.0, 2.0, 3.0] {
            assert_abs_diff_eq!(q.distortion(&g, r).unwrap(), qs.distortion(&gs, r).unwrap(), epsilon = 1e-9);
        }
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Check, ExperimentConfig};
use crate::compander::{build_compander, optimal_point_density, PointDensity};
use crate::error::{Error, Result};
use crate::quantizer::renyi_entropy_vec;
use crate::theory::{compander_performance, quantization_coefficient, rate_params, split_bound};

const SEED: u64 = 0x5eed_1e55;
const SPLIT_TRIALS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Property checks that need no rate sweep: the split bound is strictly
/// minimized at `z₀`, the optimal point density attains `Q` while nearby
/// point densities do worse, and companders cut the point density into
/// cells of equal mass.
pub fn run_lemma_check(cfg: &ExperimentConfig) -> Result<LemmaReport> {
    cfg.validate()?;
    let mut checks = Vec::new();

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst_gap = f64::INFINITY;
    let mut worst_min = 0.0f64;
    for _ in 0..SPLIT_TRIALS {
        let a = rng.gen_range(0.01..10.0);
        let b = rng.gen_range(0.01..10.0);
        let gamma = rng.gen_range(0.1..5.0);
        let z = loop {
            let z: f64 = rng.gen_range(0.001..0.999);
            let z0 = split_bound(a, b, gamma, 0.5)?.z0;
            if (z - z0).abs() > 1e-3 {
                break z;
            }
        };
        let s = split_bound(a, b, gamma, z)?;
        worst_gap = worst_gap.min((s.f_value - s.f_min) / s.f_min);
        let at_min = split_bound(a, b, gamma, s.z0)?;
        worst_min = worst_min.max((at_min.f_value / s.f_min - 1.0).abs());
    }
    checks.push(Check::new("split_bound_strict", worst_gap, 0.0, 0.0, worst_gap > 0.0));
    checks.push(Check::at_most("split_bound_minimum", worst_min, 1e-12));

    let g = cfg.build_source()?;
    let (alpha, r) = (cfg.alpha, cfg.r);
    let q = quantization_coefficient(&g, alpha, r)?;
    let h = optimal_point_density(&g, alpha, r)?;
    let at_opt = compander_performance(&g, h.density(), alpha, r)?;
    checks.push(Check::relative("point_density_attains_q", at_opt, q, 1e-8));
    let exponent = rate_params(alpha, r)?.point_exponent();
    let mut worst_excess = f64::INFINITY;
    for s in [0.8, 0.9, 1.1, 1.25] {
        let other = g.tilted(exponent * s)?;
        let perf = match compander_performance(&g, &other, alpha, r) {
            Ok(v) => v,
            Err(Error::InfiniteIntegral(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        worst_excess = worst_excess.min(perf / q - 1.0);
    }
    checks.push(Check::new("point_density_optimal", worst_excess, 0.0, 0.0, worst_excess > 0.0));

    let mut worst_cell = 0.0f64;
    let mut worst_entropy = 0.0f64;
    let matched = PointDensity::new(g.clone());
    for n in [2usize, 8, 64] {
        let quant = build_compander(&h, n)?;
        let probs = quant.cell_probabilities(h.density());
        for p in probs.entries() {
            worst_cell = worst_cell.max((p * n as f64 - 1.0).abs());
        }
        let own = build_compander(&matched, n)?;
        let entropy = renyi_entropy_vec(&own.cell_probabilities(&g), alpha)?;
        worst_entropy = worst_entropy.max((entropy - (n as f64).ln()).abs());
    }
    checks.push(Check::at_most("compander_equal_cells", worst_cell, 1e-9));
    checks.push(Check::at_most("compander_log_n_entropy", worst_entropy, 1e-9));

    let passed = checks.iter().all(|c| c.passed);
    Ok(LemmaReport { checks, passed })
}

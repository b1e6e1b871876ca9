use serde::{Deserialize, Serialize};

use super::Density;
use crate::error::Result;
use crate::interval::Interval;
use crate::theory;

/// JSON description of a density, tagged by `family`:
///
/// ```json
/// {"family": "gaussian", "mean": 0.0, "sigma": 1.0}
/// {"family": "uniform", "a": 0.0, "b": 1.0}
/// {"family": "laplacian", "mean": 0.0, "scale": 1.0}
/// {"family": "exponential", "rate": 1.0, "shift": 0.0}
/// {"family": "piecewise_linear", "knots": [[0, 0], [1, 2], [2, 0]]}
/// {"family": "mixture", "components": [{"weight": 0.5, "density": {...}}]}
/// {"family": "restricted", "base": {...}, "interval": {"lo": 0.0, "hi": null}}
/// {"family": "tilted", "base": {...}, "beta": 0.6}
/// {"family": "point_density", "base": {...}, "alpha": 0.5, "r": 2.0}
/// ```
///
/// `null` interval ends are unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityConfig {
    Uniform {
        a: f64,
        b: f64,
    },
    Gaussian {
        #[serde(default)]
        mean: f64,
        sigma: f64,
    },
    Laplacian {
        #[serde(default)]
        mean: f64,
        scale: f64,
    },
    Exponential {
        rate: f64,
        #[serde(default)]
        shift: f64,
    },
    PiecewiseLinear {
        knots: Vec<[f64; 2]>,
    },
    Mixture {
        components: Vec<MixtureComponent>,
    },
    Restricted {
        base: Box<DensityConfig>,
        interval: Interval,
    },
    Tilted {
        base: Box<DensityConfig>,
        beta: f64,
    },
    /// The optimal companding point density `g^(1/β₂) / ∫ g^(1/β₂)`.
    PointDensity {
        base: Box<DensityConfig>,
        alpha: f64,
        r: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub density: DensityConfig,
}

impl DensityConfig {
    pub fn build(&self) -> Result<Density> {
        match self {
            DensityConfig::Uniform { a, b } => Density::uniform(*a, *b),
            DensityConfig::Gaussian { mean, sigma } => Density::gaussian(*mean, *sigma),
            DensityConfig::Laplacian { mean, scale } => Density::laplacian(*mean, *scale),
            DensityConfig::Exponential { rate, shift } => Density::exponential(*rate, *shift),
            DensityConfig::PiecewiseLinear { knots } => {
                let knots: Vec<(f64, f64)> = knots.iter().map(|k| (k[0], k[1])).collect();
                Density::piecewise_linear(&knots)
            }
            DensityConfig::Mixture { components } => Density::mixture(
                components
                    .iter()
                    .map(|c| Ok((c.weight, c.density.build()?)))
                    .collect::<Result<Vec<_>>>()?,
            ),
            DensityConfig::Restricted { base, interval } => base.build()?.restrict(interval),
            DensityConfig::Tilted { base, beta } => base.build()?.tilted(*beta),
            DensityConfig::PointDensity { base, alpha, r } => {
                let params = theory::rate_params(*alpha, *r)?;
                base.build()?.tilted(1.0 / params.beta2)
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Density> {
        let cfg: DensityConfig = serde_json::from_str(text)
            .map_err(|e| crate::error::Error::config("density", e.to_string()))?;
        cfg.build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::Family;

    #[test]
    fn parses_gaussian() {
        let d = DensityConfig::from_json(r#"{"family": "gaussian", "mean": 0.0, "sigma": 1.0}"#).unwrap();
        assert!(matches!(d.family(), Family::Gaussian { mean, sigma } if *mean == 0.0 && *sigma == 1.0));
    }

    #[test]
    fn nested_restricted() {
        let d = DensityConfig::from_json(
            r#"{"family": "restricted", "base": {"family": "gaussian", "sigma": 1.0},
                "interval": {"lo": 0.0, "hi": null}}"#,
        )
        .unwrap();
        assert_eq!(d.support().lo(), 0.0);
        assert_eq!(d.support().hi(), f64::INFINITY);
    }

    #[test]
    fn point_density_is_gaussian() {
        let d = DensityConfig::from_json(
            r#"{"family": "point_density", "base": {"family": "gaussian", "sigma": 1.0}, "alpha": 0.5, "r": 2.0}"#,
        )
        .unwrap();
        match d.family() {
            Family::Gaussian { sigma, .. } => assert!((sigma - 5f64.sqrt()).abs() < 1e-12),
            other => panic!("unexpected family {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_fields_and_bad_values() {
        assert!(DensityConfig::from_json(r#"{"family": "gaussian", "sigma": 1.0, "mu": 3}"#).is_err());
        assert!(DensityConfig::from_json(r#"{"family": "gaussian", "sigma": -1.0}"#).is_err());
        assert!(DensityConfig::from_json(r#"{"family": "cauchy"}"#).is_err());
        assert!(DensityConfig::from_json(r#"{"family": "uniform", "a": 1, "b": 0}"#).is_err());
    }

    #[test]
    fn config_round_trips() {
        let cfg = DensityConfig::Mixture {
            components: vec![
                MixtureComponent {
                    weight: 0.5,
                    density: DensityConfig::Uniform { a: 0.0, b: 1.0 },
                },
                MixtureComponent {
                    weight: 0.5,
                    density: DensityConfig::Uniform { a: 2.0, b: 3.0 },
                },
            ],
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<DensityConfig>(&text).unwrap(), cfg);
    }
}

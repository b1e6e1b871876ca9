use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::density::{Density, DensityConfig};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::theory::rate_params;

/// Largest number of cells a sweep may request.
pub const MAX_CELLS: usize = 1 << 22;

/// Sweep configuration, read from JSON.
///
/// ```json
/// {
///   "source": {"family": "gaussian", "mean": 0.0, "sigma": 1.0},
///   "alpha": 0.5,
///   "r": 2.0,
///   "interval": {"lo": 0.0, "hi": 1.0},
///   "n_grid": [16, 32, 64, 128, 256, 512, 1024, 2048, 4096]
/// }
/// ```
///
/// For mismatch runs `source` is the design density `g` the companders are
/// built for and `mismatch_source` is the density `f` actually quantized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Stem for output files; the CLI falls back to the config file name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub source: DensityConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mismatch_source: Option<DensityConfig>,
    pub alpha: f64,
    #[serde(default = "default_r")]
    pub r: f64,
    /// `δ` in the moment condition `∫|x|^{r+δ} dμ < ∞`.
    #[serde(default = "default_moment_slack")]
    pub moment_slack: f64,
    /// `A₁`; defaults to the interquartile range of the measured source.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<Interval>,
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default)]
    pub refine_codepoints: bool,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Points whose cells are tracked by the sanity run; defaults to the
    /// median and mode of the source.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_points: Option<Vec<f64>>,
}

fn default_r() -> f64 {
    2.0
}

fn default_moment_slack() -> f64 {
    1.0
}

/// `2^2, 2^3, ..., 2^12`
pub fn default_n_grid() -> Vec<usize> {
    (2..=12).map(|k| 1usize << k).collect()
}

/// Pass/fail thresholds. Differences against limits are absolute for
/// densities and shares and relative (`|x/limit - 1|`) for distortions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// `|e^{rH}D / limit - 1|` at the last grid point.
    pub ratio: f64,
    pub entropy_density: f64,
    /// `|Σ ratio_i μ(A_i)^α - 1|`
    pub normalization: f64,
    pub restricted_distortion: f64,
    pub distortion_share: f64,
    pub coincidence: f64,
    pub distortion_measure: f64,
    pub mismatch_shift: f64,
    pub mismatch_distortion: f64,
    /// Upper bound on the final single-cell entropy ratio.
    pub single_cell: f64,
    /// Lower bound, in nats, on the final restricted entropies.
    pub restricted_entropy: f64,
    /// Relative residual allowed in `D = μ(A₁)D₁ + μ(A₂)D₂`.
    pub identity: f64,
    /// Increases below this size do not break a monotone trend.
    pub trend_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ratio: 0.05,
            entropy_density: 0.02,
            normalization: 0.02,
            restricted_distortion: 0.05,
            distortion_share: 0.02,
            coincidence: 0.05,
            distortion_measure: 0.05,
            mismatch_shift: 0.02,
            mismatch_distortion: 0.05,
            single_cell: 0.05,
            restricted_entropy: 3.0,
            identity: 1e-9,
            trend_floor: 1e-9,
        }
    }
}

impl Tolerances {
    fn validate(&self) -> Result<()> {
        let fields = [
            ("ratio", self.ratio),
            ("entropy_density", self.entropy_density),
            ("normalization", self.normalization),
            ("restricted_distortion", self.restricted_distortion),
            ("distortion_share", self.distortion_share),
            ("coincidence", self.coincidence),
            ("distortion_measure", self.distortion_measure),
            ("mismatch_shift", self.mismatch_shift),
            ("mismatch_distortion", self.mismatch_distortion),
            ("single_cell", self.single_cell),
            ("restricted_entropy", self.restricted_entropy),
            ("identity", self.identity),
            ("trend_floor", self.trend_floor),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!("tolerances.{name}"), format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_json_with_overrides(text, &[] as &[&str])
    }

    /// Parses `text`, applies `key=value` overrides (see [`apply_override`])
    /// and validates the result.
    pub fn from_json_with_overrides<S: AsRef<str>>(text: &str, overrides: &[S]) -> Result<Self> {
        let mut value: Value = serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))?;
        for o in overrides {
            apply_override(&mut value, o.as_ref())?;
        }
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." { "config".to_string() } else { path };
            Error::config(field, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks everything that does not depend on the experiment kind.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha < 1.0) {
            return Err(Error::config("alpha", format!("must lie in [0, 1), got {}", self.alpha)));
        }
        rate_params(self.alpha, self.r).map_err(|e| Error::config("r", e.to_string()))?;
        if !(self.moment_slack > 0.0 && self.moment_slack.is_finite()) {
            return Err(Error::config(
                "moment_slack",
                format!("must be positive and finite, got {}", self.moment_slack),
            ));
        }
        if self.n_grid.is_empty() {
            return Err(Error::config("n_grid", "must not be empty"));
        }
        for (i, &n) in self.n_grid.iter().enumerate() {
            if !(2..=MAX_CELLS).contains(&n) {
                return Err(Error::config(format!("n_grid[{i}]"), format!("must lie in [2, {MAX_CELLS}], got {n}")));
            }
            if i > 0 && n <= self.n_grid[i - 1] {
                return Err(Error::config(format!("n_grid[{i}]"), "grid must be strictly increasing"));
            }
        }
        if let Some(points) = &self.eval_points {
            if let Some(i) = points.iter().position(|p| !p.is_finite()) {
                return Err(Error::config(format!("eval_points[{i}]"), "must be finite"));
            }
        }
        self.tolerances.validate()
    }

    pub fn build_source(&self) -> Result<Density> {
        self.source.build().map_err(|e| Error::config("source", e.to_string()))
    }

    pub fn build_mismatch_source(&self) -> Result<Option<Density>> {
        self.mismatch_source
            .as_ref()
            .map(|c| c.build().map_err(|e| Error::config("mismatch_source", e.to_string())))
            .transpose()
    }
}

/// Applies `path=value` to a JSON object. `path` is dot-separated; numeric
/// segments index arrays. `value` is parsed as JSON and taken as a plain
/// string when that fails, so `source.family=laplacian` works unquoted.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<()> {
    let Some((key, raw)) = spec.split_once('=') else {
        return Err(Error::config("override", format!("expected key=value, got `{spec}`")));
    };
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::config("override", format!("malformed key `{key}`")));
    }
    let new = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut slot = root;
    for segment in key.split('.') {
        slot = match slot {
            Value::Object(map) => map.entry(segment.to_string()).or_insert(Value::Null),
            Value::Array(items) => {
                let idx: usize = segment
                    .parse()
                    .map_err(|_| Error::config(key, format!("`{segment}` is not an array index")))?;
                let len = items.len();
                items
                    .get_mut(idx)
                    .ok_or_else(|| Error::config(key, format!("index {idx} out of range for length {len}")))?
            }
            Value::Null => {
                *slot = Value::Object(Default::default());
                let Value::Object(map) = slot else { unreachable!() };
                map.entry(segment.to_string()).or_insert(Value::Null)
            }
            _ => return Err(Error::config(key, format!("cannot descend into `{segment}`"))),
        };
    }
    *slot = new;
    Ok(())
}

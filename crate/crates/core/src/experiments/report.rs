use std::fmt::Write as _;

use serde_json::json;

use super::{ConvergenceReport, Experiment, RatePoint};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_csv_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

type Column = (String, Box<dyn Fn(&RatePoint) -> f64>);

fn col(name: &str, f: impl Fn(&RatePoint) -> f64 + 'static) -> Column {
    (name.to_string(), Box::new(f))
}

fn columns(experiment: Experiment, eval_points: usize) -> Vec<Column> {
    let mut cols = vec![
        col("H_alpha", |p| p.entropy),
        col("D", |p| p.distortion),
        col("eRH_D", |p| p.normalized_distortion),
        col("ratio", |p| p.ratio_to_limit),
    ];
    match experiment {
        Experiment::Asymptotics => {
            cols.push(col("max_cell_prob", |p| p.max_cell_probability));
        }
        Experiment::EntropyDensity => {
            cols.push(col("entropy_ratio_A1", |p| p.entropy_density_ratio_a1));
            cols.push(col("entropy_ratio_A2", |p| p.entropy_density_ratio_a2));
            cols.push(col("partition_sum", |p| p.partition_sum));
            cols.push(col("restricted_eRH_D", |p| p.restricted_normalized_distortion));
        }
        Experiment::DistortionDensity => {
            cols.push(col("distortion_share", |p| p.distortion_share));
            cols.push(col("power_sum_share", |p| p.power_sum_share));
            cols.push(col("coincidence", |p| p.coincidence_ratio));
            cols.push(col("M_n_A1", |p| p.distortion_measure));
        }
        Experiment::Mismatch => {
            cols.push(col("entropy_shift", |p| p.mismatch_entropy_shift.unwrap_or(f64::NAN)));
            cols.push(col("loss", |p| p.mismatch_loss.unwrap_or(f64::NAN)));
        }
        Experiment::Sanity => {
            cols.push(col("max_cell_prob", |p| p.max_cell_probability));
            cols.push(col("H_restricted_A1", |p| p.restricted_entropy_a1));
            cols.push(col("H_restricted_A2", |p| p.restricted_entropy_a2));
            for i in 0..eval_points {
                cols.push(col(&format!("single_cell_{i}"), move |p| p.single_cell_ratios[i]));
            }
        }
    }
    cols.push(col("identity_residual", |p| p.identity_residual));
    cols
}

impl ConvergenceReport {
    /// One row per grid point: `n, H_alpha, D, eRH_D, ratio` followed by
    /// experiment-specific columns.
    pub fn to_csv(&self) -> String {
        let cols = columns(self.experiment, self.eval_points.len());
        let mut out = String::from("n");
        for (name, _) in &cols {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for p in &self.records {
            write!(out, "{}", p.n).expect("write to string");
            for (_, f) in &cols {
                out.push(',');
                out.push_str(&format_csv_number(f(p)));
            }
            out.push('\n');
        }
        out
    }

    /// Limits, checks and hypothesis diagnostics. The top-level `limit` is
    /// the reference for the `ratio` column.
    pub fn summary_json(&self) -> String {
        let value = json!({
            "experiment": self.experiment,
            "passed": self.passed,
            "limit": self.limits.limit,
            "limits": self.limits,
            "checks": self.checks,
            "hypotheses": self.hypotheses,
            "eval_points": self.eval_points,
            "final": self.last(),
        });
        serde_json::to_string_pretty(&value).expect("report serializes")
    }
}

//! Scalar quantization under a Rényi entropy constraint of order `α ∈ (0, 1)`.
//!
//! The crate builds companding quantizers with the asymptotically optimal
//! point density, evaluates their Rényi entropy and `r`th-power distortion
//! by quadrature, and compares the measurements with the closed-form
//! high-rate limits: the quantization coefficient, the entropy and
//! distortion densities, and the source-mismatch formulas.

pub mod compander;
pub mod density;
pub mod error;
pub mod experiments;
pub mod interval;
pub mod quadrature;
pub mod quantizer;
mod special;
pub mod theory;

pub use compander::{build_compander, optimal_point_density, refine_codepoints, PointDensity};
pub use density::{Density, DensityConfig, Family};
pub use error::{Error, Result};
pub use interval::Interval;
pub use quantizer::{ProbabilityVector, Quantizer};
pub use theory::{rate_params, RateParams};

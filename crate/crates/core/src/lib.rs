//! Multifractal Hausdorff and packing dimensions of a measure `ν` relative
//! to a reference measure `μ`, estimated from ball masses, partition sums and
//! projections onto random subspaces.
//!
//! - [`measure`]: tree-coded Cantor measures and weighted point clouds.
//! - [`exponents`]: pointwise exponents and the four dimension estimates.
//! - [`partition`]: partition sums, `τ(q)` and the Bernoulli closed forms.
//! - [`projection`]: Haar subspaces, pushforwards and the kernels `φ_r^m`.
//! - [`experiments`]: seeded checks with pass/fail verdicts.

pub mod error;
pub mod experiments;
pub mod exponents;
pub mod measure;
pub mod partition;
pub mod projection;

pub use error::{Error, Result};
pub use exponents::{
    dimension_estimates, exactness_gap, local_exponent_series, pointwise_exponents, sn_over_n,
    DimensionReport, EstimateOptions, ExponentSeries, Percentiles, PointwiseExponents,
    PointwiseRule, RadiusSchedule,
};
pub use measure::{
    sample_from_measure, BallMassOracle, BernoulliSpec, CylinderMeasure, MetricMode,
    PointCloudMeasure, TreePoint,
};
pub use projection::Subspace;

/// Derives an independent stream seed from a master seed (SplitMix64 over
/// the pair).
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

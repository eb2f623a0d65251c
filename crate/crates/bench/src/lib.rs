//! Shared fixtures for the criterion benchmarks under `benches/`.

use mfdim::{BernoulliSpec, CylinderMeasure, PointCloudMeasure, RadiusSchedule, Result};

/// Symbolic `(0.3, 0.7)` Bernoulli tree, the usual non-uniform test measure.
pub fn bernoulli_tree(depth: usize) -> Result<CylinderMeasure> {
    CylinderMeasure::bernoulli(&BernoulliSpec::new(vec![0.3, 0.7], depth)?)
}

/// Uniform measure on the product of two middle-3/5 Cantor sets.
pub fn cantor_dust(depth: usize) -> Result<PointCloudMeasure> {
    PointCloudMeasure::cantor_product(0.2, depth, 2)
}

/// Base-5 radii matched to [`cantor_dust`] at depth 8.
pub fn cantor_schedule() -> Result<RadiusSchedule> {
    RadiusSchedule::new(5.0, 1, 6, 2)
}

//! Concrete measures behind a common ball-mass and sampling oracle.
//!
//! Every estimator in the crate talks to measures through [`BallMassOracle`]:
//! the mass of a closed ball `B(x, r)` and i.i.d. draws from the measure.

mod cloud;
mod cylinder;
pub mod io;
mod kdtree;

use std::fmt::Debug;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use cloud::PointCloudMeasure;
pub(crate) use cylinder::word_label as cylinder_label;
pub use cylinder::{
    BernoulliSpec, CylinderMeasure, MetricMode, Node, SplitRule, TreePoint, MASS_TOLERANCE,
};

use crate::Result;

/// Mass-of-a-ball and sampling contract shared by all measures.
///
/// `ball_mass` is nondecreasing in `r` and always lies in `[0, 1]`.
pub trait BallMassOracle: Sync {
    type Point: Clone + Debug + Send + Sync;

    /// Mass of the closed ball `B(x, r)`.
    fn ball_mass(&self, x: &Self::Point, r: f64) -> Result<f64>;

    /// One draw from the measure.
    fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Point;

    /// Smallest radius at which ball masses still reflect the measure rather
    /// than its finite representation.
    fn resolution_radius(&self) -> Option<f64>;

    /// Known dimension of the support, when the construction fixes one.
    fn support_dimension_hint(&self) -> Option<f64> {
        None
    }
}

/// Draws `count` i.i.d. points from `measure`, deterministically in `seed`.
pub fn sample_from_measure<M: BallMassOracle>(
    measure: &M,
    count: usize,
    seed: u64,
) -> Result<Vec<M::Point>> {
    if count == 0 {
        return Err(crate::Error::arg("sample count must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| measure.sample_point(&mut rng)).collect())
}

pub(crate) fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(crate::Error::arg(format!(
            "radius must be positive and finite, got {r}"
        )))
    }
}

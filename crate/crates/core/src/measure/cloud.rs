use std::sync::OnceLock;

use rand::Rng;

use super::cylinder::MASS_TOLERANCE;
use super::kdtree::KdTree;
use super::{check_radius, sample_from_measure, BallMassOracle, CylinderMeasure, MetricMode};
use crate::{Error, Result};

/// Neighbour rank used to define the resolution radius of a cloud.
const RESOLUTION_NEIGHBORS: usize = 10;
/// At most this many points are probed when computing the resolution radius.
const RESOLUTION_PROBES: usize = 256;

/// A finitely supported probability measure on `R^d`.
#[derive(Debug)]
pub struct PointCloudMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
    tree: KdTree,
    resolution: OnceLock<f64>,
}

impl Clone for PointCloudMeasure {
    fn clone(&self) -> Self {
        PointCloudMeasure {
            dim: self.dim,
            coords: self.coords.clone(),
            weights: self.weights.clone(),
            cumulative: self.cumulative.clone(),
            tree: self.tree.clone(),
            resolution: self.resolution.clone(),
        }
    }
}

impl PointCloudMeasure {
    /// Builds a cloud from row-major coordinates (`weights.len()` rows of
    /// `dim` values). Weights must be nonnegative and sum to 1.
    pub fn from_flat(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::arg("cloud dimension must be at least 1"));
        }
        if weights.is_empty() {
            return Err(Error::arg("cloud must contain at least one point"));
        }
        if coords.len() != dim * weights.len() {
            return Err(Error::arg(format!(
                "{} coordinates do not form {} points of dimension {dim}",
                coords.len(),
                weights.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::arg("all coordinates must be finite"));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::arg(format!("weights must be nonnegative, got {w}")));
        }
        let total = compensated_sum(&weights);
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::arg(format!("weights sum to {total}, not 1")));
        }
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        let tree = KdTree::build(dim, &coords, &weights);
        Ok(PointCloudMeasure {
            dim,
            coords,
            weights,
            cumulative,
            tree,
            resolution: OnceLock::new(),
        })
    }

    pub fn new(points: &[Vec<f64>], weights: Vec<f64>) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::arg("points have inconsistent dimensions"));
        }
        Self::from_flat(dim, points.concat(), weights)
    }

    /// Equal weights on the given points.
    pub fn uniform(points: &[Vec<f64>]) -> Result<Self> {
        let n = points.len().max(1);
        Self::new(points, vec![1.0 / n as f64; points.len()])
    }

    /// `n` evenly spaced points on `[0, 1]` with equal weights.
    pub fn uniform_segment(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::arg("segment cloud needs at least two points"));
        }
        let coords = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        Self::from_flat(1, coords, vec![1.0 / n as f64; n])
    }

    /// Product of `copies` middle-gap Cantor sets with contraction `ratio`,
    /// discretized at the midpoints of the level-`depth` intervals, equal
    /// weights.
    pub fn cantor_product(ratio: f64, depth: usize, copies: usize) -> Result<Self> {
        if !(ratio > 0.0 && ratio <= 0.5) {
            return Err(Error::arg(format!(
                "Cantor ratio must be in (0, 1/2], got {ratio}"
            )));
        }
        if copies == 0 || depth == 0 {
            return Err(Error::arg("depth and number of copies must be positive"));
        }
        let mut lefts = vec![0.0f64];
        let mut len = 1.0f64;
        for _ in 0..depth {
            let child = len * ratio;
            lefts = lefts.iter().flat_map(|&l| [l, l + len - child]).collect();
            len = child;
        }
        let mids: Vec<f64> = lefts.iter().map(|l| l + 0.5 * len).collect();
        let count = mids.len().pow(copies as u32);
        let mut coords = Vec::with_capacity(count * copies);
        for mut i in 0..count {
            let mut row = vec![0.0; copies];
            for slot in row.iter_mut().rev() {
                *slot = mids[i % mids.len()];
                i /= mids.len();
            }
            coords.extend(row);
        }
        Self::from_flat(copies, coords, vec![1.0 / count as f64; count])
    }

    /// Discretizes an embedded tree measure by `count` samples (equal
    /// weights, coincident samples merged).
    pub fn from_tree_samples(tree: &CylinderMeasure, count: usize, seed: u64) -> Result<Self> {
        if tree.mode() != MetricMode::Embedded {
            return Err(Error::arg(
                "only embedded tree measures have Euclidean samples",
            ));
        }
        let pts = sample_from_measure(tree, count, seed)?;
        let coords: Vec<f64> = pts
            .iter()
            .map(|p| p.coord.expect("embedded sample"))
            .collect();
        Self::from_flat(1, coords, vec![1.0 / count as f64; count])?.merge_coincident(0.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Closed-ball mass by a linear scan in index order. Summation order
    /// matches the kernel convolutions, so termwise inequalities between the
    /// two survive rounding.
    pub fn ball_mass_linear(&self, x: &[f64], r: f64) -> f64 {
        let r2 = r * r;
        let mut total = 0.0;
        for (p, w) in self.points().zip(&self.weights) {
            let d2: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            total += if d2 <= r2 { *w } else { 0.0 };
        }
        total.min(1.0)
    }

    /// Merges points lying within `tol` of each other in every coordinate
    /// (after a lexicographic sort), adding their weights.
    pub fn merge_coincident(&self, tol: f64) -> Result<Self> {
        let dim = self.dim;
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.point(a)
                .iter()
                .zip(self.point(b))
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mut coords: Vec<f64> = Vec::with_capacity(self.coords.len());
        let mut weights: Vec<f64> = Vec::with_capacity(self.len());
        for i in order {
            let p = self.point(i);
            let same = weights.last().is_some() && {
                let last = &coords[coords.len() - dim..];
                last.iter().zip(p).all(|(a, b)| (a - b).abs() <= tol)
            };
            if same {
                *weights.last_mut().unwrap() += self.weights[i];
            } else {
                coords.extend_from_slice(p);
                weights.push(self.weights[i]);
            }
        }
        Self::from_flat(dim, coords, weights)
    }

    /// Index drawn proportionally to the weights.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().unwrap();
        let target = rng.random::<f64>() * total;
        let i = self.cumulative.partition_point(|c| *c <= target);
        let mut i = i.min(self.len() - 1);
        while self.weights[i] == 0.0 && i > 0 {
            i -= 1;
        }
        i
    }

    fn compute_resolution(&self) -> f64 {
        let n = self.len();
        if n <= RESOLUTION_NEIGHBORS {
            return f64::INFINITY;
        }
        let step = (n / RESOLUTION_PROBES).max(1);
        let mut dists: Vec<f64> = (0..n)
            .step_by(step)
            .map(|i| {
                self.tree
                    .kth_neighbor_distance(self.point(i), RESOLUTION_NEIGHBORS)
            })
            .collect();
        dists.sort_by(f64::total_cmp);
        dists[dists.len() / 2]
    }
}

impl BallMassOracle for PointCloudMeasure {
    type Point = Vec<f64>;

    fn ball_mass(&self, x: &Vec<f64>, r: f64) -> Result<f64> {
        check_radius(r)?;
        if x.len() != self.dim {
            return Err(Error::arg(format!(
                "point of dimension {} queried against a cloud in R^{}",
                x.len(),
                self.dim
            )));
        }
        Ok(self.tree.ball_weight(x, r).min(1.0))
    }

    fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.point(self.sample_index(rng)).to_vec()
    }

    /// Median distance from a point to its 10th nearest neighbour.
    fn resolution_radius(&self) -> Option<f64> {
        Some(*self.resolution.get_or_init(|| self.compute_resolution()))
    }
}

/// Neumaier summation, so a million equal weights still sum to 1 within
/// the mass tolerance.
fn compensated_sum(values: &[f64]) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for &v in values {
        let t = sum + v;
        carry += if sum.abs() >= v.abs() {
            (sum - t) + v
        } else {
            (v - t) + sum
        };
        sum = t;
    }
    sum + carry
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::sample_from_measure;

    #[test]
    fn ball_mass_of_three_points() {
        let c = PointCloudMeasure::uniform(&[vec![0.0], vec![0.5], vec![1.0]]).unwrap();
        assert!((c.ball_mass(&vec![0.5], 0.6).unwrap() - 1.0).abs() < 1e-15);
        assert!((c.ball_mass(&vec![0.5], 0.1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(c.ball_mass(&vec![0.5], 0.0).is_err());
        assert!(c.ball_mass(&vec![0.5, 0.0], 0.1).is_err());
    }

    #[test]
    fn closed_ball_includes_boundary() {
        let c = PointCloudMeasure::uniform(&[vec![0.0], vec![0.5]]).unwrap();
        assert_eq!(c.ball_mass(&vec![0.0], 0.5).unwrap(), 1.0);
    }

    #[test]
    fn invalid_clouds_rejected() {
        assert!(PointCloudMeasure::new(&[vec![0.0], vec![1.0]], vec![0.5, 0.4]).is_err());
        assert!(PointCloudMeasure::new(&[vec![f64::NAN]], vec![1.0]).is_err());
        assert!(PointCloudMeasure::new(&[vec![0.0], vec![1.0, 2.0]], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn degenerate_weights_sample_one_point() {
        let c = PointCloudMeasure::new(&[vec![1.0], vec![2.0], vec![3.0]], vec![1.0, 0.0, 0.0])
            .unwrap();
        for p in sample_from_measure(&c, 200, 4).unwrap() {
            assert_eq!(p, vec![1.0]);
        }
        let c = PointCloudMeasure::new(&[vec![1.0], vec![2.0], vec![3.0]], vec![0.0, 0.0, 1.0])
            .unwrap();
        for p in sample_from_measure(&c, 200, 4).unwrap() {
            assert_eq!(p, vec![3.0]);
        }
    }

    #[test]
    fn merge_adds_weights() {
        let c =
            PointCloudMeasure::uniform(&[vec![1.0, 0.0], vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let m = c.merge_coincident(1e-12).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.point(1), &[1.0, 0.0]);
        assert!((m.weights()[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn cantor_product_layout() {
        let c = PointCloudMeasure::cantor_product(0.2, 3, 2).unwrap();
        assert_eq!(c.len(), 64);
        assert_eq!(c.dim(), 2);
        let total: f64 = c.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        // Gap between the two level-1 columns is 0.6.
        assert!(c.points().all(|p| p[0] < 0.2 || p[0] > 0.8));
    }

    #[test]
    fn many_equal_weights_are_accepted() {
        let n = 1_000_003;
        assert!((compensated_sum(&vec![1.0 / n as f64; n]) - 1.0).abs() < 1e-14);
        let coords: Vec<f64> = (0..n).map(|i| i as f64).collect();
        assert!(PointCloudMeasure::from_flat(1, coords, vec![1.0 / n as f64; n]).is_ok());
    }

    #[test]
    fn resolution_of_segment_grid() {
        let c = PointCloudMeasure::uniform_segment(1001).unwrap();
        // Interior points: 10th neighbour (self included) sits 5 spacings away.
        let r = c.resolution_radius().unwrap();
        assert!((r - 0.005).abs() < 1e-9, "{r}");
    }
}

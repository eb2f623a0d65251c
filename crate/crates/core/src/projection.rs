//! Orthogonal projections onto random subspaces and the kernels
//! `φ_r^m(x) = min{1, r^m |x|^-m}`.
//!
//! For a compactly supported measure `μ` on `R^n`, the convolution
//! `μ∗φ_r^m(x)` controls the ball masses of almost every projection of `μ`
//! onto an `m`-dimensional subspace. Both the direct sum and the radial
//! integral `m r^m ∫_r^∞ u^{-m-1} μ(B(x, u)) du` are implemented; for a
//! discrete measure the two agree exactly up to rounding.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::derive_seed;
use crate::exponents::{
    dimension_estimates, local_exponent_series, pointwise_exponents, DimensionReport,
    EstimateOptions, ExponentSeries, RadiusSchedule,
};
use crate::measure::{sample_from_measure, BallMassOracle, PointCloudMeasure};
use crate::{Error, Result};

/// Orthonormality slack for subspace bases (max-abs entry of `B Bᵀ − I`).
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-10;
/// Projected points closer than this in every coordinate are merged.
pub const MERGE_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_PROJECTION_TOLERANCE: f64 = 0.1;

/// Printed with projection results on user data: the preservation result
/// assumes the support of `μ` lies in an Ahlfors-regular set, which is not
/// checked.
pub const AHLFORS_CAVEAT: &str = "projection preservation assumes supp(mu) lies in an s-Ahlfors regular set; this is not verified for user-supplied measures";

/// An `m`-dimensional linear subspace of `R^n`, stored as an orthonormal
/// `m × n` basis (row-major).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subspace {
    ambient: usize,
    dim: usize,
    basis: Vec<f64>,
}

impl Subspace {
    pub fn new(ambient: usize, dim: usize, basis: Vec<f64>) -> Result<Self> {
        if !(0 < dim && dim < ambient) {
            return Err(Error::arg(format!(
                "subspace dimension must satisfy 0 < m < n, got m = {dim}, n = {ambient}"
            )));
        }
        if basis.len() != ambient * dim {
            return Err(Error::arg("basis has the wrong number of entries"));
        }
        let s = Subspace {
            ambient,
            dim,
            basis,
        };
        let err = s.orthonormality_error();
        if err.is_nan() || err > ORTHONORMAL_TOLERANCE {
            return Err(Error::arg(format!(
                "basis rows are not orthonormal (error {err:e})"
            )));
        }
        Ok(s)
    }

    /// Haar-distributed subspace: Gram–Schmidt on an `m × n` matrix of
    /// independent standard Gaussians. A rank-deficient draw is redrawn from
    /// the next derived seed.
    pub fn sample(ambient: usize, dim: usize, seed: u64) -> Result<Self> {
        if !(0 < dim && dim < ambient) {
            return Err(Error::arg(format!(
                "subspace dimension must satisfy 0 < m < n, got m = {dim}, n = {ambient}"
            )));
        }
        for attempt in 0u64.. {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, attempt));
            let raw: Vec<f64> = (0..ambient * dim)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            if let Some(basis) = gram_schmidt(raw, dim, ambient) {
                return Subspace::new(ambient, dim, basis);
            }
        }
        unreachable!()
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &[f64] {
        &self.basis
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.basis[i * self.ambient..(i + 1) * self.ambient]
    }

    /// Max-abs entry of `B Bᵀ − I`.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let dot: f64 = self
                    .row(i)
                    .iter()
                    .zip(self.row(j))
                    .map(|(a, b)| a * b)
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// Coordinates of the orthogonal projection of `x` in this basis.
    pub fn project_point(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// One CSV row per basis vector.
    pub fn csv_rows(&self) -> Vec<String> {
        (0..self.dim)
            .map(|i| {
                self.row(i)
                    .iter()
                    .map(f64::to_string)
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect()
    }
}

/// Modified Gram–Schmidt with one re-orthogonalization pass. `None` when
/// the rows are numerically dependent.
fn gram_schmidt(mut rows: Vec<f64>, m: usize, n: usize) -> Option<Vec<f64>> {
    for i in 0..m {
        let original: f64 = rows[i * n..(i + 1) * n]
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        for _pass in 0..2 {
            for j in 0..i {
                let dot: f64 = (0..n).map(|k| rows[i * n + k] * rows[j * n + k]).sum();
                for k in 0..n {
                    rows[i * n + k] -= dot * rows[j * n + k];
                }
            }
        }
        let norm: f64 = rows[i * n..(i + 1) * n]
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        if norm.is_nan() || norm <= 1e-8 * original || original == 0.0 {
            return None;
        }
        for k in 0..n {
            rows[i * n + k] /= norm;
        }
    }
    Some(rows)
}

/// Pushforward of `cloud` under the orthogonal projection onto `v`, in
/// `v`'s coordinates. Images that coincide are merged.
pub fn project(cloud: &PointCloudMeasure, v: &Subspace) -> Result<PointCloudMeasure> {
    if cloud.dim() != v.ambient() {
        return Err(Error::arg(format!(
            "cloud lives in R^{} but the subspace is in R^{}",
            cloud.dim(),
            v.ambient()
        )));
    }
    let coords: Vec<f64> = cloud.points().flat_map(|p| v.project_point(p)).collect();
    PointCloudMeasure::from_flat(v.dim(), coords, cloud.weights().to_vec())?
        .merge_coincident(MERGE_TOLERANCE)
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// `min{1, r^m |x|^-m}`, equal to 1 at the origin.
pub fn kernel_phi(x: &[f64], r: f64, m: u32) -> f64 {
    phi_at_distance(norm(x), r, m)
}

fn phi_at_distance(d: f64, r: f64, m: u32) -> f64 {
    if d <= r {
        1.0
    } else {
        (r / d).powi(m as i32).min(1.0)
    }
}

fn check_kernel_args(cloud: &PointCloudMeasure, x: &[f64], r: f64, m: u32) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::arg(format!(
            "kernel radius must be positive, got {r}"
        )));
    }
    if m == 0 {
        return Err(Error::arg("kernel exponent m must be at least 1"));
    }
    if x.len() != cloud.dim() {
        return Err(Error::arg("query point dimension differs from the cloud"));
    }
    Ok(())
}

/// `μ∗φ_r^m(x) = Σ_i w_i φ_r^m(x − y_i)`.
pub fn convolve_direct(cloud: &PointCloudMeasure, x: &[f64], r: f64, m: u32) -> Result<f64> {
    check_kernel_args(cloud, x, r, m)?;
    Ok(cloud
        .points()
        .zip(cloud.weights())
        .map(|(y, w)| w * phi_at_distance(dist(x, y), r, m))
        .sum())
}

/// `μ∗φ_r^m(x) = m r^m ∫_r^∞ u^{-m-1} μ(B(x, u)) du`, integrating the step
/// function `u ↦ μ(B(x, u))` exactly between its sorted breakpoints.
pub fn convolve_radial(cloud: &PointCloudMeasure, x: &[f64], r: f64, m: u32) -> Result<f64> {
    check_kernel_args(cloud, x, r, m)?;
    let mut atoms: Vec<(f64, f64)> = cloud
        .points()
        .zip(cloud.weights())
        .map(|(y, w)| (dist(x, y), *w))
        .collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let split = atoms.partition_point(|(d, _)| *d <= r);
    // μ(B(x, u)) on [r, first breakpoint beyond r).
    let mut mass: f64 = atoms[..split].iter().map(|(_, w)| w).sum();
    let mut lower = r;
    let mut total = 0.0;
    let mi = m as i32;
    let mut i = split;
    while i < atoms.len() {
        let upper = atoms[i].0;
        // m r^m ∫_lower^upper u^{-m-1} du = (r/lower)^m − (r/upper)^m
        total += mass * ((r / lower).powi(mi) - (r / upper).powi(mi));
        while i < atoms.len() && atoms[i].0 == upper {
            mass += atoms[i].1;
            i += 1;
        }
        lower = upper;
    }
    total += mass * (r / lower).powi(mi);
    Ok(total)
}

/// Exponent series with ball masses replaced by `ν∗φ_r^m(x)` and
/// `μ∗φ_r^m(x)`.
pub fn projected_exponent_series(
    nu: &PointCloudMeasure,
    mu: &PointCloudMeasure,
    q: f64,
    m: u32,
    x: &[f64],
    schedule: &RadiusSchedule,
) -> Result<ExponentSeries<Vec<f64>>> {
    let radii = schedule.radii();
    let nu_masses = radii
        .iter()
        .map(|&r| convolve_direct(nu, x, r, m))
        .collect::<Result<Vec<_>>>()?;
    let mu_masses = radii
        .iter()
        .map(|&r| convolve_direct(mu, x, r, m))
        .collect::<Result<Vec<_>>>()?;
    ExponentSeries::from_masses(x.to_vec(), q, schedule, &nu_masses, &mu_masses)
}

/// A subspace, the cloud projected onto it and points sampled from the cloud.
type SampledSubspace = (Subspace, PointCloudMeasure, Vec<Vec<f64>>);

/// Sampled `(V, x)` pairs: subspace `i` from `derive_seed(seed, 2i)`, its
/// points from `derive_seed(seed, 2i + 1)`.
fn sampled_pairs(
    cloud: &PointCloudMeasure,
    m: usize,
    num_subspaces: usize,
    points_per_subspace: usize,
    seed: u64,
) -> Result<Vec<SampledSubspace>> {
    (0..num_subspaces)
        .into_par_iter()
        .map(|i| {
            let v = Subspace::sample(cloud.dim(), m, derive_seed(seed, 2 * i as u64))?;
            let projected = project(cloud, &v)?;
            let points = sample_from_measure(
                cloud,
                points_per_subspace,
                derive_seed(seed, 2 * i as u64 + 1),
            )?;
            Ok((v, projected, points))
        })
        .collect()
}

/// Fraction of sampled `(V, x)` with
/// `|log μ_V(B(x_V, r)) − log μ∗φ_r^m(x)| <= eps |log r|` at both of the
/// two smallest radii of `schedule`.
pub fn projection_bound_fraction(
    cloud: &PointCloudMeasure,
    m: usize,
    schedule: &RadiusSchedule,
    num_subspaces: usize,
    points_per_subspace: usize,
    eps: f64,
    seed: u64,
) -> Result<f64> {
    schedule.validate()?;
    let radii = schedule.radii();
    let finest = &radii[radii.len() - 2..];
    let pairs = sampled_pairs(cloud, m, num_subspaces, points_per_subspace, seed)?;
    let mut hits = 0usize;
    let mut total = 0usize;
    for (v, projected, points) in &pairs {
        for x in points {
            let xv = v.project_point(x);
            let mut ok = true;
            for &r in finest {
                let ball = projected.ball_mass(&xv, r)?;
                let conv = convolve_direct(cloud, x, r, m as u32)?;
                ok &= (ball.ln() - conv.ln()).abs() <= eps * r.ln().abs();
            }
            hits += usize::from(ok);
            total += 1;
        }
    }
    Ok(hits as f64 / total as f64)
}

/// Fraction of sampled `(V, x)` whose tail slope from the convolution
/// series (`projected_exponent_series`) and from the projected-measure
/// series agree within `tolerance`.
#[allow(clippy::too_many_arguments)]
pub fn exponent_bridge_fraction(
    cloud: &PointCloudMeasure,
    q: f64,
    m: usize,
    schedule: &RadiusSchedule,
    num_subspaces: usize,
    points_per_subspace: usize,
    tolerance: f64,
    seed: u64,
) -> Result<f64> {
    schedule.validate()?;
    let window = schedule.tail_window;
    let pairs = sampled_pairs(cloud, m, num_subspaces, points_per_subspace, seed)?;
    let mut hits = 0usize;
    let mut total = 0usize;
    for (v, projected, points) in &pairs {
        for x in points {
            let bridged = projected_exponent_series(cloud, cloud, q, m as u32, x, schedule)?;
            let direct =
                local_exponent_series(projected, projected, q, &v.project_point(x), schedule)?;
            let a = pointwise_exponents(&bridged, window)?.slope;
            let b = pointwise_exponents(&direct, window)?.slope;
            hits += usize::from((a - b).abs() <= tolerance);
            total += 1;
        }
    }
    Ok(hits as f64 / total as f64)
}

/// Parameters for [`projection_dimension_report`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionOptions {
    pub subspace_dim: usize,
    pub num_subspaces: usize,
    pub tolerance: f64,
    pub estimate: EstimateOptions,
}

/// Estimates for the projection onto one sampled subspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectedReport {
    pub v_index: usize,
    pub subspace: Subspace,
    /// The projected `ν` collapsed to a single atom.
    pub degenerate: bool,
    pub report: Option<DimensionReport>,
    pub max_deviation: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSummary {
    pub q: f64,
    pub tolerance: f64,
    pub evaluated: usize,
    pub degenerate: usize,
    pub passed: usize,
    pub pass_fraction: f64,
    /// `q > 0`, or the unprojected upper Hausdorff estimate is at most
    /// `m (1 − q)`.
    pub hypothesis_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub unprojected: DimensionReport,
    pub per_subspace: Vec<ProjectedReport>,
    pub summary: ProjectionSummary,
}

impl ProjectionReport {
    pub const CSV_HEADER: &'static str = "v_index,q,lowerH,upperH,lowerP,upperP,pass";

    pub fn csv_rows(&self) -> Vec<String> {
        self.per_subspace
            .iter()
            .map(|p| match &p.report {
                Some(r) => format!(
                    "{},{},{},{},{},{},{}",
                    p.v_index,
                    r.q,
                    r.lower_hausdorff,
                    r.upper_hausdorff,
                    r.lower_packing,
                    r.upper_packing,
                    p.pass
                ),
                None => format!("{},{},,,,,degenerate", p.v_index, self.summary.q),
            })
            .collect()
    }
}

/// Compares the dimensions of `ν` relative to `μ` with those of their
/// projections onto `num_subspaces` Haar-random `m`-dimensional subspaces.
///
/// Subspace `i` is drawn from `derive_seed(seed, 2i)` and its sample points
/// from `derive_seed(seed, 2i + 1)`, so results do not depend on scheduling.
pub fn projection_dimension_report(
    nu: &PointCloudMeasure,
    mu: &PointCloudMeasure,
    q: f64,
    options: &ProjectionOptions,
) -> Result<ProjectionReport> {
    let n = nu.dim();
    if mu.dim() != n {
        return Err(Error::arg("nu and mu live in different dimensions"));
    }
    let m = options.subspace_dim;
    if !(0 < m && m < n) {
        return Err(Error::arg(format!("need 0 < m < n, got m = {m}, n = {n}")));
    }
    if options.num_subspaces == 0 {
        return Err(Error::arg("need at least one subspace"));
    }
    let unprojected = dimension_estimates(nu, mu, q, &options.estimate)?;
    let per_subspace = (0..options.num_subspaces)
        .into_par_iter()
        .map(|i| -> Result<ProjectedReport> {
            let seed = options.estimate.seed;
            let subspace = Subspace::sample(n, m, derive_seed(seed, 2 * i as u64))?;
            let nu_v = project(nu, &subspace)?;
            if nu_v.len() == 1 && nu.len() > 1 {
                return Ok(ProjectedReport {
                    v_index: i,
                    subspace,
                    degenerate: true,
                    report: None,
                    max_deviation: None,
                    pass: false,
                });
            }
            let mu_v = project(mu, &subspace)?;
            let mut est = options.estimate;
            est.seed = derive_seed(seed, 2 * i as u64 + 1);
            let report = dimension_estimates(&nu_v, &mu_v, q, &est)?;
            let deviation = report.max_deviation(&unprojected);
            Ok(ProjectedReport {
                v_index: i,
                subspace,
                degenerate: false,
                report: Some(report),
                max_deviation: Some(deviation),
                pass: deviation <= options.tolerance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let degenerate = per_subspace.iter().filter(|p| p.degenerate).count();
    let evaluated = per_subspace.len() - degenerate;
    let passed = per_subspace.iter().filter(|p| p.pass).count();
    let summary = ProjectionSummary {
        q,
        tolerance: options.tolerance,
        evaluated,
        degenerate,
        passed,
        pass_fraction: if evaluated == 0 {
            0.0
        } else {
            passed as f64 / evaluated as f64
        },
        hypothesis_holds: q > 0.0 || unprojected.upper_hausdorff <= m as f64 * (1.0 - q),
    };
    Ok(ProjectionReport {
        unprojected,
        per_subspace,
        summary,
    })
}

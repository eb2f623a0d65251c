//! Seeded experiments that check the dimension theory on measures whose
//! dimensions are known, each producing a [`Verdict`].
//!
//! Almost-everywhere and for-every-Borel-set statements cannot be checked
//! with finitely many samples. Every verdict names the finite surrogate it
//! uses (pass fractions, exactness gaps, percentile bounds) in its
//! `surrogate` field.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::derive_seed;
use crate::exponents::{
    dimension_estimates, exactness_gap, local_exponent_series, pointwise_exponents,
    EstimateOptions, RadiusSchedule,
};
use crate::measure::{
    sample_from_measure, BallMassOracle, BernoulliSpec, CylinderMeasure, PointCloudMeasure,
};
use crate::partition::{
    bernoulli_dimension_oracle, bernoulli_tau, set_dimension_estimate, tau_derivative_at_one,
    DEFAULT_DERIVATIVE_STEP,
};
use crate::projection::{convolve_direct, projection_dimension_report, ProjectionOptions};
use crate::{Error, Result};

/// Oracle-backed dimension checks.
pub const ORACLE_TOLERANCE: f64 = 0.05;
/// Central-difference route to `τ'(1)`.
pub const DERIVATIVE_TOLERANCE: f64 = 1e-5;
/// Closed-form partition route.
pub const PARTITION_TOLERANCE: f64 = 1e-6;
pub const UNIDIMENSIONAL_THRESHOLD: f64 = 0.1;
pub const PROJECTION_PASS_FRACTION: f64 = 0.9;
/// Slack on the `c r^m <= μ∗φ_r^m` slope bound.
pub const KERNEL_SLOPE_SLACK: f64 = 0.05;
/// `ε` in `μ∗φ_r^m(x) <= c r^-ε μ(B(x, r))`.
pub const KERNEL_RATIO_EPSILON: f64 = 0.2;
pub const KERNEL_RATIO_PASS_FRACTION: f64 = 0.8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|observed − expected| <= tolerance`
    Within,
    /// `observed <= expected + tolerance`
    AtMost,
    /// `observed >= expected − tolerance`
    AtLeast,
    /// `observed < expected` strictly
    Below,
    /// Not evaluated; the note says why.
    Skipped,
}

/// One diagnosable comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub relation: Relation,
    pub expected: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl Check {
    fn new(
        name: impl Into<String>,
        relation: Relation,
        expected: f64,
        observed: f64,
        tolerance: f64,
    ) -> Self {
        let pass = match relation {
            Relation::Within => (observed - expected).abs() <= tolerance,
            Relation::AtMost => observed <= expected + tolerance,
            Relation::AtLeast => observed >= expected - tolerance,
            Relation::Below => observed < expected,
            Relation::Skipped => true,
        };
        Check {
            name: name.into(),
            relation,
            expected,
            observed,
            tolerance,
            pass,
            note: None,
        }
    }

    pub fn within(name: impl Into<String>, expected: f64, observed: f64, tolerance: f64) -> Self {
        Self::new(name, Relation::Within, expected, observed, tolerance)
    }

    pub fn at_most(name: impl Into<String>, bound: f64, observed: f64, tolerance: f64) -> Self {
        Self::new(name, Relation::AtMost, bound, observed, tolerance)
    }

    pub fn at_least(name: impl Into<String>, bound: f64, observed: f64) -> Self {
        Self::new(name, Relation::AtLeast, bound, observed, 0.0)
    }

    pub fn below(name: impl Into<String>, bound: f64, observed: f64) -> Self {
        Self::new(name, Relation::Below, bound, observed, 0.0)
    }

    pub fn skipped(name: impl Into<String>, note: impl Into<String>) -> Self {
        let mut c = Self::new(name, Relation::Skipped, 0.0, 0.0, 0.0);
        c.note = Some(note.into());
        c
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Outcome of one experiment: overall pass is the conjunction of its checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub experiment: String,
    pub surrogate: String,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl Verdict {
    pub fn new(experiment: impl Into<String>, surrogate: impl Into<String>) -> Self {
        Verdict {
            experiment: experiment.into(),
            surrogate: surrogate.into(),
            checks: Vec::new(),
            pass: true,
        }
    }

    pub fn push(&mut self, check: Check) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdicts contain only finite numbers")
    }

    /// Fixed-width human-readable table.
    pub fn to_table(&self) -> String {
        let width = self
            .checks
            .iter()
            .map(|c| c.name.len())
            .max()
            .unwrap_or(5)
            .max(5);
        let mut out = format!(
            "experiment: {}\nsurrogate:  {}\n{:<width$}  {:>12}  {:>12}  {:>9}  {:<8}  result\n",
            self.experiment, self.surrogate, "check", "expected", "observed", "tol", "relation"
        );
        for c in &self.checks {
            let relation = serde_json::to_value(c.relation)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default();
            out.push_str(&format!(
                "{:<width$}  {:>12.6}  {:>12.6}  {:>9.2e}  {:<8}  {}{}\n",
                c.name,
                c.expected,
                c.observed,
                c.tolerance,
                relation,
                if c.pass { "pass" } else { "FAIL" },
                c.note
                    .as_ref()
                    .map(|n| format!(" ({n})"))
                    .unwrap_or_default()
            ));
        }
        out.push_str(&format!(
            "overall: {}\n",
            if self.pass { "PASS" } else { "FAIL" }
        ));
        out
    }
}

/// Runs `f` on a dedicated pool of `threads` workers (all cores when 0).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::arg(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn fmt_q(q: f64) -> String {
    format!("q={q}")
}

/// Bernoulli measure against itself: the four Monte-Carlo estimates and two
/// partition-sum routes against the closed forms.
///
/// - Monte Carlo: each of the four estimates within `tolerance` of
///   `(q − 1) τ'(1)`.
/// - Derivative route: `(q − 1)` times the central difference of `τ(·, depth)`
///   at 1.
/// - Set route: the critical exponent of the partition sums against the
///   closed form `τ(q) = log_b Σ p^q`; this is the dimension of the support,
///   which equals `(q − 1) τ'(1)` only for uniform `p`.
pub fn verify_quasi_bernoulli(
    spec: &BernoulliSpec,
    q_grid: &[f64],
    sample_count: usize,
    seed: u64,
    tolerance: f64,
) -> Result<Verdict> {
    spec.validate()?;
    let measure = CylinderMeasure::bernoulli(spec)?;
    let schedule = RadiusSchedule::for_tree(spec.arity(), spec.depth)?;
    let options = EstimateOptions::new(sample_count, schedule, seed);
    let mut verdict = Verdict::new(
        "quasi-bernoulli",
        "percentiles of tail-window exponents stand in for ess inf / ess sup; generation-n partition sums stand in for the covering limits",
    );
    let derivative = tau_derivative_at_one(&measure, spec.depth, DEFAULT_DERIVATIVE_STEP)?;
    let depths: Vec<usize> = [spec.depth / 2, (3 * spec.depth) / 4, spec.depth]
        .into_iter()
        .filter(|&n| n >= 1)
        .collect();
    let uniform = spec
        .probabilities
        .iter()
        .all(|p| (p - spec.probabilities[0]).abs() < 1e-15);
    for &q in q_grid {
        let oracle = bernoulli_dimension_oracle(spec, q);
        let report = dimension_estimates(&measure, &measure, q, &options)?;
        let names = ["lowerH", "upperH", "lowerP", "upperP"];
        for (name, value) in names.iter().zip(report.values()) {
            verdict.push(Check::within(
                format!("{} {name}", fmt_q(q)),
                oracle,
                value,
                tolerance,
            ));
        }
        verdict.push(Check::within(
            format!("{} partition (q-1)tau'(1)", fmt_q(q)),
            oracle,
            (q - 1.0) * derivative,
            DERIVATIVE_TOLERANCE * (1.0 + (q - 1.0).abs()),
        ));
        let set_dim = set_dimension_estimate(&measure, q, &depths)?;
        verdict.push(Check::within(
            format!("{} set dimension tau(q)", fmt_q(q)),
            bernoulli_tau(spec, q),
            set_dim,
            PARTITION_TOLERANCE,
        ));
        if uniform {
            verdict.push(Check::within(
                format!("{} set dimension vs oracle", fmt_q(q)),
                oracle,
                set_dim,
                PARTITION_TOLERANCE,
            ));
        }
    }
    Ok(verdict)
}

/// Exactness gaps of `measure` against itself at `q`: passes when both the
/// Hausdorff and the packing gap are at most `threshold`.
pub fn verify_unidimensionality<M: BallMassOracle>(
    measure: &M,
    q: f64,
    options: &EstimateOptions,
    threshold: f64,
) -> Result<Verdict> {
    let report = dimension_estimates(measure, measure, q, options)?;
    let (hausdorff, packing) = exactness_gap(&report);
    let mut verdict = Verdict::new(
        "unidimensionality",
        "gap between percentile bounds of the pointwise exponents replaces the for-every-Borel-set conditions",
    );
    verdict.push(Check::at_most(
        format!("{} hausdorff gap", fmt_q(q)),
        threshold,
        hausdorff,
        0.0,
    ));
    verdict.push(Check::at_most(
        format!("{} packing gap", fmt_q(q)),
        threshold,
        packing,
        0.0,
    ));
    Ok(verdict)
}

fn sample_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Spread of exponents below this is treated as exactly constant.
const CONSTANT_SPREAD: f64 = 1e-12;

/// Shift-invariant Bernoulli measure: the spread of pointwise slope
/// estimates must shrink from the shallowest to the deepest tree.
///
/// The slope at a point is the least-squares slope of `log ν(B(x, r))`
/// against `log r` over the whole schedule of each depth.
pub fn verify_ergodic_constancy(
    probabilities: &[f64],
    depths: &[usize],
    sample_count: usize,
    seed: u64,
) -> Result<Verdict> {
    if sample_count < 2 {
        return Err(Error::arg("need at least two samples to estimate a spread"));
    }
    if depths.len() < 2 || depths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::arg("need at least two strictly increasing depths"));
    }
    let mut verdict = Verdict::new(
        "ergodic-constancy",
        "shrinking sample spread of pointwise exponents across depths replaces a.e. constancy",
    );
    let mut spreads = Vec::with_capacity(depths.len());
    for (i, &depth) in depths.iter().enumerate() {
        let spec = BernoulliSpec::new(probabilities.to_vec(), depth)?;
        let measure = CylinderMeasure::bernoulli(&spec)?;
        let schedule = RadiusSchedule::for_tree(spec.arity(), depth)?;
        let points = sample_from_measure(&measure, sample_count, derive_seed(seed, i as u64))?;
        let slopes = points
            .par_iter()
            .map(|x| {
                let series = local_exponent_series(&measure, &measure, 0.0, x, &schedule)?;
                Ok(pointwise_exponents(&series, schedule.len())?.slope)
            })
            .collect::<Result<Vec<f64>>>()?;
        let spread = sample_std(&slopes);
        spreads.push(spread);
        verdict.push(Check::at_least(
            format!("depth={depth} spread"),
            0.0,
            spread,
        ));
    }
    let (first, last) = (spreads[0], *spreads.last().unwrap());
    if first <= CONSTANT_SPREAD && last <= CONSTANT_SPREAD {
        verdict.push(
            Check::at_most("spread shrinks", CONSTANT_SPREAD, last, 0.0)
                .with_note("exponent already constant at every depth"),
        );
    } else {
        verdict.push(Check::below("spread shrinks", first, last));
    }
    Ok(verdict)
}

/// Projection onto Haar-random `m`-planes preserves the four dimensions: for
/// each `q`, the fraction of subspaces whose estimates all fall within
/// `options.tolerance` of the unprojected ones must reach `pass_fraction`.
/// When `q <= 0` and the unprojected upper Hausdorff estimate exceeds
/// `m (1 − q)`, that `q` is skipped.
pub fn verify_projection_preservation(
    cloud: &PointCloudMeasure,
    q_grid: &[f64],
    options: &ProjectionOptions,
    pass_fraction: f64,
) -> Result<Verdict> {
    let mut verdict = Verdict::new(
        "projection-preservation",
        "fraction of sampled subspaces within tolerance replaces gamma-almost-all V",
    );
    let m = options.subspace_dim as f64;
    for &q in q_grid {
        if q <= 0.0 {
            let unprojected = dimension_estimates(cloud, cloud, q, &options.estimate)?;
            if unprojected.upper_hausdorff > m * (1.0 - q) {
                verdict.push(Check::skipped(
                    format!("{} pass fraction", fmt_q(q)),
                    format!(
                        "hypothesis violated: upper Hausdorff estimate {} exceeds m(1-q) = {}",
                        unprojected.upper_hausdorff,
                        m * (1.0 - q)
                    ),
                ));
                continue;
            }
        }
        let report = projection_dimension_report(cloud, cloud, q, options)?;
        let s = &report.summary;
        verdict.push(Check::at_least(
            format!("{} pass fraction", fmt_q(q)),
            pass_fraction,
            s.pass_fraction,
        ));
        if s.degenerate > 0 {
            verdict.push(
                Check::skipped(
                    format!("{} degenerate subspaces", fmt_q(q)),
                    "excluded from the pass fraction",
                )
                .with_note(format!(
                    "{} of {} subspaces collapsed the measure",
                    s.degenerate,
                    s.evaluated + s.degenerate
                )),
            );
        }
    }
    Ok(verdict)
}

/// Parameters for [`verify_kernel_lemmas`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelLemmaOptions {
    /// Kernel exponent `m`.
    pub m: u32,
    /// Number of random `(x, r)` pairs for the ball/kernel inequality.
    pub samples: usize,
    /// Radii are drawn log-uniformly from `[r_min, r_max]`.
    pub r_min: f64,
    pub r_max: f64,
    /// Radius ladder for the slope and ratio checks.
    pub schedule: RadiusSchedule,
    /// Points used for the slope and ratio checks.
    pub slope_points: usize,
    /// Set when the cloud discretizes a measure on an Ahlfors-regular set of
    /// dimension at most `m`; enables the ratio check.
    pub ahlfors_regular: bool,
    pub seed: u64,
}

/// Checks the kernel bounds on a cloud:
///
/// - `μ(B(x, r)) <= μ∗φ_r^m(x)` on every sampled pair, with zero tolerance;
/// - the tail slope of `log μ∗φ_r^m(x)` against `log r` is at most
///   `m + 0.05`;
/// - for Ahlfors-regular supports, `log(μ∗φ_r^m / μ(B)) / |log r| <= 0.2` at
///   the two smallest radii on at least 80% of points.
pub fn verify_kernel_lemmas(
    cloud: &PointCloudMeasure,
    options: &KernelLemmaOptions,
) -> Result<Verdict> {
    let m = options.m;
    if !(options.r_min > 0.0 && options.r_min <= options.r_max) {
        return Err(Error::arg("need 0 < r_min <= r_max"));
    }
    options.schedule.validate()?;
    let mut verdict = Verdict::new(
        "kernel-lemmas",
        "exact inequality on sampled (x, r); slope and ratio bounds at the finest scales replace r -> 0",
    );

    // Query points: half drawn from the cloud, half uniform over a box around it.
    let mut lo = vec![f64::INFINITY; cloud.dim()];
    let mut hi = vec![f64::NEG_INFINITY; cloud.dim()];
    for p in cloud.points() {
        for d in 0..cloud.dim() {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let (log_min, log_max) = (options.r_min.ln(), options.r_max.ln());
    let queries: Vec<(Vec<f64>, f64)> = (0..options.samples)
        .map(|i| {
            let x = if i % 2 == 0 {
                cloud.sample_point(&mut rng)
            } else {
                (0..cloud.dim())
                    .map(|d| {
                        let pad = 0.1 * (hi[d] - lo[d]).max(1e-3);
                        lo[d] - pad + rng.random::<f64>() * (hi[d] - lo[d] + 2.0 * pad)
                    })
                    .collect()
            };
            let r = (log_min + rng.random::<f64>() * (log_max - log_min)).exp();
            (x, r)
        })
        .collect();
    let violations = queries
        .par_iter()
        .map(|(x, r)| -> Result<usize> {
            let conv = convolve_direct(cloud, x, *r, m)?;
            Ok(usize::from(cloud.ball_mass_linear(x, *r) > conv))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<usize>();
    verdict.push(
        Check::at_most(
            "ball mass exceeds convolution (count)",
            0.0,
            violations as f64,
            0.0,
        )
        .with_note(format!("{} sampled (x, r) pairs", options.samples)),
    );

    let points = sample_from_measure(
        cloud,
        options.slope_points.max(1),
        derive_seed(options.seed, 1),
    )?;
    let radii = options.schedule.radii();
    let log_r: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let window = options.schedule.tail_window;
    let tail = log_r.len() - window..log_r.len();
    let per_point = points
        .par_iter()
        .map(|x| -> Result<(f64, Option<f64>)> {
            let conv = radii
                .iter()
                .map(|&r| convolve_direct(cloud, x, r, m))
                .collect::<Result<Vec<_>>>()?;
            let xs = &log_r[tail.clone()];
            let ys: Vec<f64> = conv[tail.clone()].iter().map(|c| c.ln()).collect();
            let n = xs.len() as f64;
            let mx = xs.iter().sum::<f64>() / n;
            let my = ys.iter().sum::<f64>() / n;
            let sxy: f64 = xs.iter().zip(&ys).map(|(a, b)| (a - mx) * (b - my)).sum();
            let sxx: f64 = xs.iter().map(|a| (a - mx) * (a - mx)).sum();
            let ratio = if options.ahlfors_regular {
                let k = radii.len();
                let worst = (k - 2..k)
                    .map(|i| (conv[i] / cloud.ball_mass_linear(x, radii[i])).ln() / log_r[i].abs())
                    .fold(f64::NEG_INFINITY, f64::max);
                Some(worst)
            } else {
                None
            };
            Ok((sxy / sxx, ratio))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_slope = per_point
        .iter()
        .map(|p| p.0)
        .fold(f64::NEG_INFINITY, f64::max);
    verdict.push(Check::at_most(
        "max tail slope of log conv",
        m as f64,
        max_slope,
        KERNEL_SLOPE_SLACK,
    ));
    if options.ahlfors_regular {
        let within = per_point
            .iter()
            .filter(|p| p.1.is_some_and(|v| v <= KERNEL_RATIO_EPSILON))
            .count();
        let fraction = within as f64 / per_point.len() as f64;
        verdict.push(
            Check::at_least(
                "ratio exponent <= 0.2 (fraction)",
                KERNEL_RATIO_PASS_FRACTION,
                fraction,
            )
            .with_note("two smallest radii"),
        );
    }
    Ok(verdict)
}

/// Names accepted by [`named_cloud`].
pub const NAMED_CLOUDS: &[&str] = &["cantor5sq", "segment", "square"];

/// Built-in point clouds:
///
/// - `cantor5sq`: product of two middle-3/5 Cantor measures (ratio 1/5) at
///   depth 8, 65536 equally weighted points in R^2;
/// - `segment`: 10^4 evenly spaced points on `[0, 1]`;
/// - `square`: a 128 x 128 grid on the unit square.
pub fn named_cloud(name: &str) -> Result<PointCloudMeasure> {
    match name {
        "cantor5sq" => PointCloudMeasure::cantor_product(0.2, 8, 2),
        "segment" => PointCloudMeasure::uniform_segment(10_000),
        "square" => {
            let side = 128;
            let points: Vec<Vec<f64>> = (0..side * side)
                .map(|i| {
                    vec![
                        (i % side) as f64 / (side - 1) as f64,
                        (i / side) as f64 / (side - 1) as f64,
                    ]
                })
                .collect();
            PointCloudMeasure::uniform(&points)
        }
        other => Err(Error::arg(format!(
            "unknown cloud '{other}', expected one of: {}",
            NAMED_CLOUDS.join(", ")
        ))),
    }
}

/// Radius schedule matched to a named cloud. The Cantor product uses base 5
/// so that radii line up with its construction; a base-2 ladder makes the
/// unprojected exponents swing with the lattice phase.
pub fn named_cloud_schedule(name: &str) -> Result<RadiusSchedule> {
    match name {
        "cantor5sq" => RadiusSchedule::new(5.0, 1, 6, 2),
        "segment" => RadiusSchedule::new(2.0, 8, 10, 2),
        "square" => RadiusSchedule::new(2.0, 2, 5, 2),
        other => Err(Error::arg(format!("unknown cloud '{other}'"))),
    }
}

/// Binary symbolic measure whose split alternates between `(0.2, 0.8)` and
/// `(0.8, 0.2)` in blocks of levels of length `2^j` (block `j` covers levels
/// `2^j − 1 .. 2^(j+1) − 1`).
pub fn block_oscillating(depth: usize) -> Result<CylinderMeasure> {
    let rule = |word: &[u8]| {
        let block = (word.len() + 1).ilog2();
        if block.is_multiple_of(2) {
            vec![0.2, 0.8]
        } else {
            vec![0.8, 0.2]
        }
    };
    CylinderMeasure::symbolic(2, depth, &rule)
}

/// Binary symbolic measure that is uniform below the first symbol 0 and
/// Bernoulli `(0.1, 0.9)` below 1: two ergodic components with different
/// local dimensions.
pub fn two_regime(depth: usize) -> Result<CylinderMeasure> {
    let rule = |word: &[u8]| match word.first() {
        None => vec![0.5, 0.5],
        Some(0) => vec![0.5, 0.5],
        Some(_) => vec![0.1, 0.9],
    };
    CylinderMeasure::symbolic(2, depth, &rule)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_is_conjunction() {
        let mut v = Verdict::new("t", "s");
        v.push(Check::within("a", 1.0, 1.04, 0.05));
        assert!(v.pass);
        v.push(Check::at_most("b", 0.1, 0.2, 0.0));
        assert!(!v.pass);
        v.push(Check::skipped("c", "why"));
        assert!(!v.pass);
        assert!(v.to_table().contains("FAIL"));
        let back: Verdict = serde_json::from_str(&v.to_json()).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn relations() {
        assert!(Check::below("x", 1.0, 0.5).pass);
        assert!(!Check::below("x", 1.0, 1.0).pass);
        assert!(Check::at_least("x", 0.9, 0.9).pass);
        assert!(!Check::within("x", 0.0, 0.2, 0.1).pass);
    }

    #[test]
    fn uniform_quasi_bernoulli_passes() {
        let spec = BernoulliSpec::uniform(2, 12).unwrap();
        let v = verify_quasi_bernoulli(&spec, &[-1.0, 0.0, 1.0, 2.0], 200, 1, ORACLE_TOLERANCE)
            .unwrap();
        assert!(v.pass, "{}", v.to_table());
        let q1 = v.check("q=1 lowerH").unwrap();
        assert_eq!(q1.expected, 0.0);
        assert_eq!(q1.observed, 0.0);
    }

    #[test]
    fn ergodic_needs_two_samples() {
        assert!(verify_ergodic_constancy(&[0.3, 0.7], &[8, 12], 1, 0).is_err());
        assert!(verify_ergodic_constancy(&[0.3, 0.7], &[12, 8], 10, 0).is_err());
    }

    #[test]
    fn ergodic_uniform_is_constant() {
        let v = verify_ergodic_constancy(&[0.5, 0.5], &[8, 16], 200, 3).unwrap();
        assert!(v.pass, "{}", v.to_table());
        for c in v.checks.iter().filter(|c| c.name.ends_with("spread")) {
            assert!(c.observed <= CONSTANT_SPREAD);
        }
    }

    #[test]
    fn point_mass_is_unidimensional() {
        let m = CylinderMeasure::deranged_cantor(&[1.0 / 3.0; 2], &[1.0, 0.0], 12).unwrap();
        let schedule = RadiusSchedule::new(3.0, 2, 10, 5).unwrap();
        let v = verify_unidimensionality(
            &m,
            0.5,
            &EstimateOptions::new(100, schedule, 2),
            UNIDIMENSIONAL_THRESHOLD,
        )
        .unwrap();
        assert!(v.pass);
        assert!(v.checks.iter().all(|c| c.observed == 0.0));
        let r = dimension_estimates(&m, &m, 0.5, &EstimateOptions::new(100, schedule, 2)).unwrap();
        assert!(r.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn block_oscillating_masses() {
        let m = block_oscillating(6).unwrap();
        // level 0 is block 0, levels 1-2 block 1, levels 3-6 block 2
        assert!((m.cylinder_mass(&[1]).unwrap() - 0.8).abs() < 1e-15);
        assert!((m.cylinder_mass(&[1, 0]).unwrap() - 0.64).abs() < 1e-15);
        assert!((m.cylinder_mass(&[1, 0, 0, 1]).unwrap() - 0.8 * 0.8 * 0.8 * 0.8).abs() < 1e-15);
    }

    #[test]
    fn two_regime_is_not_unidimensional() {
        let m = two_regime(16).unwrap();
        let schedule = RadiusSchedule::for_tree(2, 16).unwrap();
        let v = verify_unidimensionality(
            &m,
            0.0,
            &EstimateOptions::new(400, schedule, 5),
            UNIDIMENSIONAL_THRESHOLD,
        )
        .unwrap();
        assert!(!v.pass);
        assert!(v.checks[0].observed > 0.3, "{}", v.to_table());
    }

    #[test]
    fn projection_skips_when_hypothesis_fails() {
        let cloud = named_cloud("square").unwrap();
        let schedule = named_cloud_schedule("square").unwrap();
        let options = ProjectionOptions {
            subspace_dim: 1,
            num_subspaces: 2,
            tolerance: 0.1,
            estimate: EstimateOptions::new(100, schedule, 4),
        };
        let v = verify_projection_preservation(&cloud, &[-0.5], &options, 0.9).unwrap();
        assert_eq!(v.checks.len(), 1);
        assert_eq!(v.checks[0].relation, Relation::Skipped);
        assert!(v.checks[0].note.as_ref().unwrap().contains("hypothesis"));
        assert!(v.pass);
    }

    #[test]
    fn kernel_lemmas_single_atom() {
        let atom = PointCloudMeasure::uniform(&[vec![0.0, 0.0]]).unwrap();
        assert_eq!(convolve_direct(&atom, &[0.0, 0.0], 0.1, 2).unwrap(), 1.0);
        assert_eq!(atom.ball_mass_linear(&[0.0, 0.0], 0.1), 1.0);
        let options = KernelLemmaOptions {
            m: 2,
            samples: 200,
            r_min: 1e-3,
            r_max: 0.5,
            schedule: RadiusSchedule::new(2.0, 2, 6, 3).unwrap(),
            slope_points: 5,
            ahlfors_regular: false,
            seed: 1,
        };
        let v = verify_kernel_lemmas(&atom, &options).unwrap();
        assert_eq!(v.checks[0].observed, 0.0);
        // a single atom has slope 0 <= m
        assert!(v.pass, "{}", v.to_table());
    }

    #[test]
    fn kernel_ratio_on_segment_in_plane() {
        // segment of dimension 1 < m = 2: the ratio exponent is small
        let n = 4000;
        let points: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![i as f64 / (n - 1) as f64, 0.0])
            .collect();
        let cloud = PointCloudMeasure::uniform(&points).unwrap();
        let options = KernelLemmaOptions {
            m: 2,
            samples: 1000,
            r_min: 2f64.powi(-10),
            r_max: 0.5,
            schedule: RadiusSchedule::new(2.0, 4, 10, 3).unwrap(),
            slope_points: 100,
            ahlfors_regular: true,
            seed: 2,
        };
        let v = verify_kernel_lemmas(&cloud, &options).unwrap();
        assert!(v.pass, "{}", v.to_table());
    }
}

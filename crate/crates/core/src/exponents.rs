//! Pointwise exponents `α^q_{μ,ν}(x, r)` and their aggregation into the lower
//! and upper multifractal Hausdorff and packing dimensions of `ν` relative
//! to `μ`.
//!
//! At a point `x` and radius `r`,
//!
//! ```text
//! α^q(x, r) = (log ν(B(x, r)) − q log μ(B(x, r))) / log r
//! ```
//!
//! The Hausdorff dimensions are the essential infimum and supremum (over `ν`)
//! of `liminf_{r→0} α^q(x, r)`; the packing dimensions use `limsup`. At finite
//! scale the limits become extremes over a tail window of a geometric radius
//! ladder, and the essential bounds become percentiles over points sampled
//! from `ν`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::measure::{sample_from_measure, BallMassOracle, CylinderMeasure};
use crate::{Error, Result};

pub const DEFAULT_TAIL_WINDOW: usize = 5;
pub const DEFAULT_K_MIN: i32 = 4;
pub const DEFAULT_PERCENTILES: Percentiles = Percentiles {
    low: 0.01,
    high: 0.99,
};
/// Smallest sample accepted by [`dimension_estimates`].
pub const MIN_SAMPLE_COUNT: usize = 100;

/// Geometric radius ladder `r_k = base^-k`, `k = k_min..=k_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusSchedule {
    pub base: f64,
    pub k_min: i32,
    pub k_max: i32,
    pub tail_window: usize,
}

impl RadiusSchedule {
    pub fn new(base: f64, k_min: i32, k_max: i32, tail_window: usize) -> Result<Self> {
        let s = RadiusSchedule {
            base,
            k_min,
            k_max,
            tail_window,
        };
        s.validate()?;
        Ok(s)
    }

    /// Cylinder-aligned ladder for a tree of the given arity and depth:
    /// `k_min = 4`, `k_max = depth - 2`, tail window 5, shrunk to fit shallow
    /// trees.
    pub fn for_tree(arity: usize, depth: usize) -> Result<Self> {
        let depth = depth as i32;
        let k_max = (depth - 2).max(2).min(depth);
        let k_min = DEFAULT_K_MIN.min(k_max - 1).max(1);
        if k_min >= k_max {
            return Err(Error::arg(format!(
                "depth {depth} too shallow for a radius schedule"
            )));
        }
        let window = DEFAULT_TAIL_WINDOW.min((k_max - k_min) as usize);
        Self::new(arity as f64, k_min, k_max, window.max(2))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base > 1.0 && self.base.is_finite()) {
            return Err(Error::arg(format!(
                "schedule base must exceed 1, got {}",
                self.base
            )));
        }
        if self.k_min < 1 || self.k_min >= self.k_max {
            return Err(Error::arg(format!(
                "schedule needs 1 <= k_min < k_max, got {}..{}",
                self.k_min, self.k_max
            )));
        }
        if self.tail_window < 2 || self.tail_window > self.len() {
            return Err(Error::arg(format!(
                "tail window {} must be in 2..={}",
                self.tail_window,
                self.len()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        (self.k_max - self.k_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn ks(&self) -> impl Iterator<Item = i32> {
        self.k_min..=self.k_max
    }

    pub fn radius(&self, k: i32) -> f64 {
        self.base.powi(-k)
    }

    pub fn radii(&self) -> Vec<f64> {
        self.ks().map(|k| self.radius(k)).collect()
    }

    /// Fails if the smallest radius lies below what the measure resolves.
    pub fn check_resolution(&self, resolution: Option<f64>) -> Result<()> {
        if let Some(res) = resolution {
            let smallest = self.radius(self.k_max);
            if smallest < res * (1.0 - 1e-9) {
                return Err(Error::arg(format!(
                    "smallest radius {smallest:e} is below the measure's resolution {res:e}"
                )));
            }
        }
        Ok(())
    }
}

/// Finite-scale rule turning an exponent series into liminf/limsup values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointwiseRule {
    /// Extremes of `α^q(x, r_k)` over the tail window.
    Ratio,
    /// Extremes over the tail window of the chord exponents
    /// `(L_k − L_anchor) / (log r_k − log r_anchor)`, anchored at the first
    /// valid radius. Same limits as `Ratio`, but a constant prefactor in the
    /// ball masses cancels instead of decaying like `1 / |log r|`.
    #[default]
    AnchoredChord,
}

/// Nearest-rank percentiles standing in for the essential infimum and
/// supremum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Percentiles {
    pub low: f64,
    pub high: f64,
}

impl Percentiles {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&low) || !(0.0..=1.0).contains(&high) || low > high {
            return Err(Error::arg(format!(
                "percentiles must satisfy 0 <= low <= high <= 1, got ({low}, {high})"
            )));
        }
        Ok(Percentiles { low, high })
    }
}

impl Default for Percentiles {
    fn default() -> Self {
        DEFAULT_PERCENTILES
    }
}

/// Nearest-rank percentile of an ascending slice.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Values of `α^q(x, r_k)` along a radius schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentSeries<P> {
    pub x: P,
    pub q: f64,
    pub ks: Vec<i32>,
    pub log_radii: Vec<f64>,
    /// `log ν(B) − q log μ(B)`; NaN where flagged.
    pub numerators: Vec<f64>,
    /// `numerator / log r`; NaN where flagged.
    pub values: Vec<f64>,
    /// Radii where `ν(B(x, r)) = 0`.
    pub flagged: Vec<bool>,
}

/// liminf / limsup estimates at one point, plus the log-log slope over the
/// same tail.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointwiseExponents {
    pub lower: f64,
    pub upper: f64,
    pub slope: f64,
}

impl<P: std::fmt::Debug> ExponentSeries<P> {
    /// Builds a series from `ν` and `μ` masses (balls, or any kernel
    /// substitute) measured at each radius of `schedule`.
    pub fn from_masses(
        x: P,
        q: f64,
        schedule: &RadiusSchedule,
        nu_masses: &[f64],
        mu_masses: &[f64],
    ) -> Result<Self> {
        let ks: Vec<i32> = schedule.ks().collect();
        let log_radii: Vec<f64> = ks.iter().map(|&k| schedule.radius(k).ln()).collect();
        let mut numerators = Vec::with_capacity(ks.len());
        let mut values = Vec::with_capacity(ks.len());
        let mut flagged = Vec::with_capacity(ks.len());
        for i in 0..ks.len() {
            let (nu, mu) = (nu_masses[i], mu_masses[i]);
            if nu > 0.0 && mu <= 0.0 {
                return Err(Error::SupportViolation {
                    point: format!("{x:?}"),
                    radius: log_radii[i].exp(),
                });
            }
            if nu <= 0.0 {
                numerators.push(f64::NAN);
                values.push(f64::NAN);
                flagged.push(true);
                continue;
            }
            let numerator = if q == 0.0 {
                nu.ln()
            } else {
                nu.ln() - q * mu.ln()
            };
            numerators.push(numerator);
            values.push(numerator / log_radii[i]);
            flagged.push(false);
        }
        Ok(ExponentSeries {
            x,
            q,
            ks,
            log_radii,
            numerators,
            values,
            flagged,
        })
    }

    pub fn valid_count(&self) -> usize {
        self.flagged.iter().filter(|f| !**f).count()
    }

    /// Chord exponents anchored at the first unflagged radius; `None` at the
    /// anchor and at flagged radii.
    pub fn anchored_chords(&self) -> Vec<Option<f64>> {
        let anchor = self.flagged.iter().position(|f| !*f);
        (0..self.values.len())
            .map(|i| match anchor {
                Some(a) if i > a && !self.flagged[i] => Some(
                    (self.numerators[i] - self.numerators[a])
                        / (self.log_radii[i] - self.log_radii[a]),
                ),
                _ => None,
            })
            .collect()
    }

    /// Pointwise exponents under `rule` over the last `window` valid entries.
    pub fn pointwise(&self, rule: PointwiseRule, window: usize) -> Result<PointwiseExponents> {
        match rule {
            PointwiseRule::Ratio => pointwise_exponents(self, window),
            PointwiseRule::AnchoredChord => {
                let chords = self.anchored_chords();
                let tail: Vec<usize> = (0..chords.len())
                    .rev()
                    .filter(|&i| chords[i].is_some())
                    .take(window)
                    .collect();
                if tail.len() < window {
                    return Err(Error::Estimation(format!(
                        "only {} valid chord exponents, tail window needs {window}",
                        tail.len()
                    )));
                }
                let (lower, upper) = extremes(tail.iter().map(|&i| chords[i].unwrap()));
                Ok(PointwiseExponents {
                    lower,
                    upper,
                    slope: self.tail_slope(&tail),
                })
            }
        }
    }

    /// Least-squares slope of the numerators against `log r` at `indices`.
    fn tail_slope(&self, indices: &[usize]) -> f64 {
        let n = indices.len() as f64;
        let mx = indices.iter().map(|&i| self.log_radii[i]).sum::<f64>() / n;
        let my = indices.iter().map(|&i| self.numerators[i]).sum::<f64>() / n;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for &i in indices {
            let dx = self.log_radii[i] - mx;
            sxy += dx * (self.numerators[i] - my);
            sxx += dx * dx;
        }
        sxy / sxx
    }
}

fn extremes(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

/// Exponent series of `ν` against `μ` at `x` along `schedule`.
pub fn local_exponent_series<N, M>(
    nu: &N,
    mu: &M,
    q: f64,
    x: &N::Point,
    schedule: &RadiusSchedule,
) -> Result<ExponentSeries<N::Point>>
where
    N: BallMassOracle,
    M: BallMassOracle<Point = N::Point>,
{
    let radii = schedule.radii();
    let nu_masses = radii
        .iter()
        .map(|&r| nu.ball_mass(x, r))
        .collect::<Result<Vec<_>>>()?;
    let mu_masses = radii
        .iter()
        .map(|&r| mu.ball_mass(x, r))
        .collect::<Result<Vec<_>>>()?;
    ExponentSeries::from_masses(x.clone(), q, schedule, &nu_masses, &mu_masses)
}

/// Tail-window minimum and maximum of `α^q(x, r_k)`, with the least-squares
/// slope of the numerators against `log r` over the same window.
pub fn pointwise_exponents<P: std::fmt::Debug>(
    series: &ExponentSeries<P>,
    window: usize,
) -> Result<PointwiseExponents> {
    if window < 2 {
        return Err(Error::arg("tail window must be at least 2"));
    }
    let tail: Vec<usize> = (0..series.values.len())
        .rev()
        .filter(|&i| !series.flagged[i])
        .take(window)
        .collect();
    if tail.len() < window {
        return Err(Error::Estimation(format!(
            "only {} unflagged values, tail window needs {window}",
            tail.len()
        )));
    }
    let (lower, upper) = extremes(tail.iter().map(|&i| series.values[i]));
    Ok(PointwiseExponents {
        lower,
        upper,
        slope: series.tail_slope(&tail),
    })
}

/// Sampling and aggregation parameters for [`dimension_estimates`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    pub sample_count: usize,
    pub schedule: RadiusSchedule,
    pub percentiles: Percentiles,
    pub rule: PointwiseRule,
    pub seed: u64,
}

impl EstimateOptions {
    pub fn new(sample_count: usize, schedule: RadiusSchedule, seed: u64) -> Self {
        EstimateOptions {
            sample_count,
            schedule,
            percentiles: Percentiles::default(),
            rule: PointwiseRule::default(),
            seed,
        }
    }
}

/// Lower/upper multifractal Hausdorff and packing dimension estimates of `ν`
/// relative to `μ` at one `q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub q: f64,
    pub lower_hausdorff: f64,
    pub upper_hausdorff: f64,
    pub lower_packing: f64,
    pub upper_packing: f64,
    pub sample_count: usize,
    pub percentiles: Percentiles,
    pub schedule: RadiusSchedule,
    pub rule: PointwiseRule,
    pub seed: u64,
}

impl DimensionReport {
    pub const CSV_HEADER: &'static str = "q,lowerH,upperH,lowerP,upperP,N,seed";

    pub fn values(&self) -> [f64; 4] {
        [
            self.lower_hausdorff,
            self.upper_hausdorff,
            self.lower_packing,
            self.upper_packing,
        ]
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.q,
            self.lower_hausdorff,
            self.upper_hausdorff,
            self.lower_packing,
            self.upper_packing,
            self.sample_count,
            self.seed
        )
    }

    /// The four order relations every report satisfies.
    pub fn invariants_hold(&self) -> bool {
        self.lower_hausdorff <= self.upper_hausdorff
            && self.lower_packing <= self.upper_packing
            && self.lower_hausdorff <= self.lower_packing
            && self.upper_hausdorff <= self.upper_packing
    }

    /// Largest absolute difference between corresponding estimates.
    pub fn max_deviation(&self, other: &DimensionReport) -> f64 {
        self.values()
            .iter()
            .zip(other.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Pointwise exponents at each of `points`, computed in parallel; output
/// order follows `points`.
pub fn pointwise_sample<N, M>(
    nu: &N,
    mu: &M,
    q: f64,
    points: &[N::Point],
    schedule: &RadiusSchedule,
    rule: PointwiseRule,
) -> Result<Vec<PointwiseExponents>>
where
    N: BallMassOracle,
    M: BallMassOracle<Point = N::Point>,
{
    points
        .par_iter()
        .map(|x| {
            local_exponent_series(nu, mu, q, x, schedule)?.pointwise(rule, schedule.tail_window)
        })
        .collect()
}

/// Aggregates pointwise exponents into a report by percentiles.
pub fn aggregate(
    q: f64,
    pointwise: &[PointwiseExponents],
    options: &EstimateOptions,
) -> Result<DimensionReport> {
    if pointwise.is_empty() {
        return Err(Error::Estimation("empty sample".into()));
    }
    // `+ 0.0` folds -0 into 0 so reports never print "-0"
    let mut lows: Vec<f64> = pointwise.iter().map(|p| p.lower + 0.0).collect();
    let mut highs: Vec<f64> = pointwise.iter().map(|p| p.upper + 0.0).collect();
    lows.sort_by(f64::total_cmp);
    highs.sort_by(f64::total_cmp);
    let pc = options.percentiles;
    Ok(DimensionReport {
        q,
        lower_hausdorff: nearest_rank(&lows, pc.low),
        upper_hausdorff: nearest_rank(&lows, pc.high),
        lower_packing: nearest_rank(&highs, pc.low),
        upper_packing: nearest_rank(&highs, pc.high),
        sample_count: pointwise.len(),
        percentiles: pc,
        schedule: options.schedule,
        rule: options.rule,
        seed: options.seed,
    })
}

/// Samples `options.sample_count` points from `ν` and estimates the four
/// dimensions of `ν` relative to `μ` at `q`.
pub fn dimension_estimates<N, M>(
    nu: &N,
    mu: &M,
    q: f64,
    options: &EstimateOptions,
) -> Result<DimensionReport>
where
    N: BallMassOracle,
    M: BallMassOracle<Point = N::Point>,
{
    if options.sample_count < MIN_SAMPLE_COUNT {
        return Err(Error::arg(format!(
            "sample count {} below the minimum of {MIN_SAMPLE_COUNT}",
            options.sample_count
        )));
    }
    options.schedule.validate()?;
    options.schedule.check_resolution(nu.resolution_radius())?;
    options.schedule.check_resolution(mu.resolution_radius())?;
    let points = sample_from_measure(nu, options.sample_count, options.seed)?;
    let pointwise = pointwise_sample(nu, mu, q, &points, &options.schedule, options.rule)?;
    aggregate(q, &pointwise, options)
}

/// `S_n(x) / n = log ν(I_n(x)) / log |I_n(x)|` along a coding path.
pub fn sn_over_n(measure: &CylinderMeasure, path: &[u8], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::arg("n must be at least 1"));
    }
    if n > measure.depth() {
        return Err(Error::arg(format!(
            "n = {n} exceeds depth {}",
            measure.depth()
        )));
    }
    if path.len() < n {
        return Err(Error::arg(format!(
            "path of length {} shorter than n = {n}",
            path.len()
        )));
    }
    let index = measure.index_of(&path[..n])?;
    let mass = measure.node(n, index).mass;
    if mass <= 0.0 {
        return Err(Error::Estimation(format!(
            "cylinder {:?} carries no mass",
            crate::measure::cylinder_label(&path[..n])
        )));
    }
    Ok(mass.ln() / measure.diameter(n, index).ln())
}

/// `(upper − lower)` for the Hausdorff and packing pairs.
pub fn exactness_gap(report: &DimensionReport) -> (f64, f64) {
    (
        report.upper_hausdorff - report.lower_hausdorff,
        report.upper_packing - report.lower_packing,
    )
}

/// Whether the Hausdorff exactness gap is within `threshold`.
pub fn is_unidimensional(report: &DimensionReport, threshold: f64) -> bool {
    exactness_gap(report).0 <= threshold
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{BernoulliSpec, TreePoint};
    use proptest::prelude::*;

    fn series_of(values: &[f64]) -> ExponentSeries<()> {
        let n = values.len() as i32;
        let schedule = RadiusSchedule::new(2.0, 1, n, 2).unwrap();
        let log_radii: Vec<f64> = schedule.ks().map(|k| schedule.radius(k).ln()).collect();
        ExponentSeries {
            x: (),
            q: 0.0,
            ks: schedule.ks().collect(),
            numerators: values.iter().zip(&log_radii).map(|(v, l)| v * l).collect(),
            log_radii,
            values: values.to_vec(),
            flagged: vec![false; values.len()],
        }
    }

    fn uniform(depth: usize) -> CylinderMeasure {
        CylinderMeasure::bernoulli(&BernoulliSpec::uniform(2, depth).unwrap()).unwrap()
    }

    #[test]
    fn schedule_validation() {
        assert!(RadiusSchedule::new(1.0, 1, 4, 2).is_err());
        assert!(RadiusSchedule::new(2.0, 4, 4, 2).is_err());
        assert!(RadiusSchedule::new(2.0, 0, 4, 2).is_err());
        assert!(RadiusSchedule::new(2.0, 1, 4, 5).is_err());
        let s = RadiusSchedule::for_tree(2, 16).unwrap();
        assert_eq!((s.k_min, s.k_max, s.tail_window), (4, 14, 5));
        assert!(s.check_resolution(Some(2f64.powi(-14))).is_ok());
        assert!(s.check_resolution(Some(2f64.powi(-13))).is_err());
        let s = RadiusSchedule::for_tree(2, 8).unwrap();
        assert_eq!((s.k_min, s.k_max, s.tail_window), (4, 6, 2));
    }

    #[test]
    fn nearest_rank_rule() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(nearest_rank(&v, 0.01), 1.0);
        assert_eq!(nearest_rank(&v, 0.99), 99.0);
        assert_eq!(nearest_rank(&v, 0.0), 1.0);
        assert_eq!(nearest_rank(&v, 1.0), 100.0);
        assert_eq!(nearest_rank(&[3.0], 0.5), 3.0);
    }

    #[test]
    fn uniform_bernoulli_series_is_one_minus_q() {
        let m = uniform(12);
        let schedule = RadiusSchedule::for_tree(2, 12).unwrap();
        let x = TreePoint::word(vec![0, 1, 1, 0, 1, 0, 0, 0, 1, 1, 1, 0]);
        for q in [-1.0, 0.0, 0.5, 2.0] {
            let s = local_exponent_series(&m, &m, q, &x, &schedule).unwrap();
            for v in &s.values {
                assert!((v - (1.0 - q)).abs() < 1e-12, "{v}");
            }
        }
    }

    #[test]
    fn middle_thirds_series_is_exact() {
        let m = CylinderMeasure::deranged_cantor(&[1.0 / 3.0; 2], &[0.5; 2], 12).unwrap();
        let schedule = RadiusSchedule::new(3.0, 1, 10, 5).unwrap();
        let x = crate::measure::sample_from_measure(&m, 1, 5)
            .unwrap()
            .pop()
            .unwrap();
        let s = local_exponent_series(&m, &m, 0.0, &x, &schedule).unwrap();
        let target = 2f64.ln() / 3f64.ln();
        for v in &s.values {
            assert!((v - target).abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn q_one_cancels() {
        let m =
            CylinderMeasure::bernoulli(&BernoulliSpec::new(vec![0.3, 0.7], 10).unwrap()).unwrap();
        let schedule = RadiusSchedule::for_tree(2, 10).unwrap();
        let x = crate::measure::sample_from_measure(&m, 1, 1)
            .unwrap()
            .pop()
            .unwrap();
        let s = local_exponent_series(&m, &m, 1.0, &x, &schedule).unwrap();
        assert!(s.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn support_violation() {
        let nu = CylinderMeasure::deranged_cantor(&[1.0 / 3.0; 2], &[0.5; 2], 6).unwrap();
        let mu = CylinderMeasure::deranged_cantor(&[1.0 / 3.0; 2], &[1.0, 0.0], 6).unwrap();
        let schedule = RadiusSchedule::new(3.0, 1, 5, 2).unwrap();
        let x = TreePoint::real(0.9);
        let err = local_exponent_series(&nu, &mu, 0.5, &x, &schedule).unwrap_err();
        assert!(matches!(err, Error::SupportViolation { .. }));
    }

    #[test]
    fn zero_mass_radii_are_flagged() {
        let schedule = RadiusSchedule::new(2.0, 1, 4, 2).unwrap();
        let s = ExponentSeries::from_masses(
            (),
            0.0,
            &schedule,
            &[0.5, 0.25, 0.0, 0.0],
            &[0.5, 0.25, 0.1, 0.1],
        )
        .unwrap();
        assert_eq!(s.flagged, vec![false, false, true, true]);
        assert_eq!(s.valid_count(), 2);
        let p = pointwise_exponents(&s, 2).unwrap();
        assert!((p.lower - 1.0).abs() < 1e-12);
        assert!(pointwise_exponents(&s, 3).is_err());
    }

    #[test]
    fn pointwise_min_max() {
        let p = pointwise_exponents(&series_of(&[0.5; 8]), 5).unwrap();
        assert_eq!((p.lower, p.upper), (0.5, 0.5));
        assert!((p.slope - 0.5).abs() < 1e-12);
        let p =
            pointwise_exponents(&series_of(&[0.9, 0.1, 0.4, 0.6, 0.4, 0.6, 0.4, 0.6]), 5).unwrap();
        assert_eq!((p.lower, p.upper), (0.4, 0.6));
    }

    #[test]
    fn uniform_slope_is_one() {
        let m = uniform(16);
        let schedule = RadiusSchedule::for_tree(2, 16).unwrap();
        let x = crate::measure::sample_from_measure(&m, 1, 2)
            .unwrap()
            .pop()
            .unwrap();
        let s = local_exponent_series(&m, &m, 0.0, &x, &schedule).unwrap();
        let p = pointwise_exponents(&s, 5).unwrap();
        assert!((p.slope - 1.0).abs() < 1e-9);
    }

    #[test]
    fn uniform_bernoulli_report() {
        let m = uniform(16);
        let schedule = RadiusSchedule::for_tree(2, 16).unwrap();
        for (q, want) in [(0.0, 1.0), (2.0, -1.0)] {
            for rule in [PointwiseRule::Ratio, PointwiseRule::AnchoredChord] {
                let mut opts = EstimateOptions::new(200, schedule, 7);
                opts.rule = rule;
                let r = dimension_estimates(&m, &m, q, &opts).unwrap();
                for v in r.values() {
                    assert!((v - want).abs() < 1e-12, "{rule:?} q={q}: {v}");
                }
            }
        }
    }

    #[test]
    fn too_few_samples_rejected() {
        let m = uniform(10);
        let opts = EstimateOptions::new(10, RadiusSchedule::for_tree(2, 10).unwrap(), 1);
        assert!(dimension_estimates(&m, &m, 0.0, &opts).is_err());
    }

    #[test]
    fn schedule_below_resolution_rejected() {
        let m = uniform(10);
        let opts = EstimateOptions::new(100, RadiusSchedule::new(2.0, 4, 12, 5).unwrap(), 1);
        assert!(dimension_estimates(&m, &m, 0.0, &opts).is_err());
    }

    #[test]
    fn sn_over_n_examples() {
        let thirds = CylinderMeasure::deranged_cantor(&[1.0 / 3.0; 2], &[0.5; 2], 8).unwrap();
        let v = sn_over_n(&thirds, &[0, 1, 1, 0, 1, 0], 5).unwrap();
        assert!((v - 0.630_929_753_571_457_4).abs() < 1e-12);

        let point = CylinderMeasure::deranged_cantor(&[1.0 / 3.0; 2], &[1.0, 0.0], 8).unwrap();
        assert_eq!(sn_over_n(&point, &[0; 8], 6).unwrap(), 0.0);

        let ninths = CylinderMeasure::deranged_cantor(&[1.0 / 9.0; 2], &[0.5; 2], 4).unwrap();
        let v = sn_over_n(&ninths, &[1, 0, 1], 3).unwrap();
        assert!((v - 0.5 * 2f64.ln() / 3f64.ln()).abs() < 1e-12);

        assert!(sn_over_n(&ninths, &[1, 0, 1, 1, 1], 5).is_err());
        assert!(sn_over_n(&ninths, &[1, 0], 3).is_err());
    }

    #[test]
    fn gap_of_exact_report() {
        let m = uniform(12);
        let opts = EstimateOptions::new(100, RadiusSchedule::for_tree(2, 12).unwrap(), 3);
        let r = dimension_estimates(&m, &m, 0.0, &opts).unwrap();
        assert_eq!(exactness_gap(&r), (0.0, 0.0));
        assert!(is_unidimensional(&r, 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn numerator_scales_with_one_minus_q(
            p in 0.05f64..0.95,
            path in prop::collection::vec(0u8..2, 14),
            q in prop::sample::select(vec![-1.0, 0.0, 0.5, 2.0]),
        ) {
            let m = CylinderMeasure::bernoulli(&BernoulliSpec::new(vec![p, 1.0 - p], 14).unwrap()).unwrap();
            let schedule = RadiusSchedule::for_tree(2, 14).unwrap();
            let x = TreePoint::word(path);
            let s0 = local_exponent_series(&m, &m, 0.0, &x, &schedule).unwrap();
            let sq = local_exponent_series(&m, &m, q, &x, &schedule).unwrap();
            for (a, b) in s0.values.iter().zip(&sq.values) {
                prop_assert!(((1.0 - q) * a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
            for rule in [PointwiseRule::Ratio, PointwiseRule::AnchoredChord] {
                let pw = sq.pointwise(rule, schedule.tail_window).unwrap();
                prop_assert!(pw.lower <= pw.upper);
            }
        }

        #[test]
        fn report_orderings_hold(p in 0.1f64..0.9, seed in 0u64..1000, q in -2.0f64..3.0) {
            let m = CylinderMeasure::bernoulli(&BernoulliSpec::new(vec![p, 1.0 - p], 12).unwrap()).unwrap();
            let opts = EstimateOptions::new(100, RadiusSchedule::for_tree(2, 12).unwrap(), seed);
            let r = dimension_estimates(&m, &m, q, &opts).unwrap();
            prop_assert!(r.invariants_hold(), "{r:?}");
        }
    }
}

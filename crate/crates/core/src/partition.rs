//! Partition sums over generation-`n` cylinder covers.
//!
//! `Σ_I μ(I)^q |I|^t` over the cylinders of one generation stands in for the
//! centered covering sums. Its normalized logarithm
//! `τ(q, n) = log Σ μ(I)^q / (n log b)` is the partition function; the
//! critical `t` where the sum crosses 1 estimates the multifractal dimension
//! of the support.

use rayon::prelude::*;

use crate::measure::{BernoulliSpec, CylinderMeasure, MetricMode};
use crate::{Error, Result};

/// Default step for the central difference of `τ` at `q = 1`.
pub const DEFAULT_DERIVATIVE_STEP: f64 = 1e-3;
const BISECTION_TOLERANCE: f64 = 1e-10;

/// Compensated (Neumaier) summation.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn check_level(mu: &CylinderMeasure, n: usize) -> Result<()> {
    if n == 0 || n > mu.depth() {
        return Err(Error::arg(format!(
            "generation {n} outside 1..={}",
            mu.depth()
        )));
    }
    Ok(())
}

/// `log(mass^q · diam^t)` for every generation-`n` cylinder of positive mass.
/// Zero-mass cylinders drop out: `0^q` is infinite for `q <= 0`, so they are
/// excluded from the cover, and contribute 0 for `q > 0`.
fn log_terms(mu: &CylinderMeasure, q: f64, t: f64, n: usize) -> Vec<f64> {
    mu.level_cylinders(n)
        .filter(|(mass, _)| *mass > 0.0)
        .map(|(mass, diam)| q * mass.ln() + t * diam.ln())
        .collect()
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let peak = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return peak;
    }
    peak + compensated_sum(terms.iter().map(|v| (v - peak).exp())).ln()
}

/// `Σ μ(I)^q |I|^t` over the generation-`n` cylinders.
pub fn partition_sum(mu: &CylinderMeasure, q: f64, t: f64, n: usize) -> Result<f64> {
    check_level(mu, n)?;
    Ok(compensated_sum(
        mu.level_cylinders(n)
            .filter(|(mass, _)| *mass > 0.0)
            .map(|(mass, diam)| {
                let m = if q == 1.0 { mass } else { mass.powf(q) };
                if t == 0.0 {
                    m
                } else {
                    m * diam.powf(t)
                }
            }),
    ))
}

/// `τ(q, n) = log Σ μ(I)^q / (n log b)` for a symbolic measure of arity `b`.
pub fn tau_estimate(mu: &CylinderMeasure, q: f64, n: usize) -> Result<f64> {
    if mu.mode() != MetricMode::Symbolic {
        return Err(Error::arg("tau is defined on symbolic measures"));
    }
    check_level(mu, n)?;
    let log_sum = if q == 1.0 {
        partition_sum(mu, 1.0, 0.0, n)?.ln()
    } else {
        log_sum_exp(&log_terms(mu, q, 0.0, n))
    };
    Ok(log_sum / (n as f64 * (mu.arity() as f64).ln()))
}

/// Central difference `(τ(1 + h, n) − τ(1 − h, n)) / 2h`.
pub fn tau_derivative_at_one(mu: &CylinderMeasure, n: usize, h: f64) -> Result<f64> {
    if !(h > 0.0 && h <= 0.1) {
        return Err(Error::arg(format!("step h must be in (0, 0.1], got {h}")));
    }
    Ok((tau_estimate(mu, 1.0 + h, n)? - tau_estimate(mu, 1.0 - h, n)?) / (2.0 * h))
}

/// Closed-form `τ'(1) = Σ p_i log_b p_i` of a Bernoulli measure.
pub fn bernoulli_tau_prime(spec: &BernoulliSpec) -> f64 {
    let log_b = (spec.arity() as f64).ln();
    spec.probabilities.iter().map(|p| p * p.ln()).sum::<f64>() / log_b
}

/// Closed-form `τ(q) = log_b Σ p_i^q` of a Bernoulli measure.
pub fn bernoulli_tau(spec: &BernoulliSpec, q: f64) -> f64 {
    let log_b = (spec.arity() as f64).ln();
    spec.probabilities
        .iter()
        .map(|p| p.powf(q))
        .sum::<f64>()
        .ln()
        / log_b
}

/// Exact multifractal dimension `(q − 1) τ'(1)` of a Bernoulli measure
/// relative to itself.
pub fn bernoulli_dimension_oracle(spec: &BernoulliSpec, q: f64) -> f64 {
    (q - 1.0) * bernoulli_tau_prime(spec)
}

/// Critical exponent `t_n` at which the generation-`n` partition sum equals 1.
pub fn critical_exponent(mu: &CylinderMeasure, q: f64, n: usize) -> Result<f64> {
    check_level(mu, n)?;
    if mu.uniform_diameters(n) {
        let diam = mu.diameter(n, 0);
        return Ok(-log_sum_exp(&log_terms(mu, q, 0.0, n)) / diam.ln());
    }
    let masses: Vec<(f64, f64)> = mu
        .level_cylinders(n)
        .filter(|(mass, _)| *mass > 0.0)
        .map(|(mass, diam)| (q * mass.ln(), diam.ln()))
        .collect();
    // log Σ exp(q log m + t log d) is strictly decreasing in t.
    let f = |t: f64| {
        let terms: Vec<f64> = masses.iter().map(|(a, ld)| a + t * ld).collect();
        log_sum_exp(&terms)
    };
    let bound = 10.0 * (1.0 + q.abs());
    let (mut lo, mut hi) = (-bound, bound);
    if !(f(lo) >= 0.0 && f(hi) <= 0.0) {
        return Err(Error::Estimation(format!(
            "critical exponent for q = {q} at generation {n} not bracketed by [{lo}, {hi}]"
        )));
    }
    while hi - lo > BISECTION_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Intercept of the least-squares fit of `t_n` against `1/n` over `depths`.
pub fn set_dimension_estimate(mu: &CylinderMeasure, q: f64, depths: &[usize]) -> Result<f64> {
    if depths.len() < 2 {
        return Err(Error::arg("need at least two generations"));
    }
    let mut unique = depths.to_vec();
    unique.sort_unstable();
    unique.dedup();
    if unique.len() < 2 {
        return Err(Error::arg("need at least two distinct generations"));
    }
    let ts = depths
        .iter()
        .map(|&n| critical_exponent(mu, q, n))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = depths.iter().map(|&n| 1.0 / n as f64).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ts.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ts).map(|(x, t)| (x - mx) * (t - my)).sum();
    Ok(my - (sxy / sxx) * mx)
}

/// `τ(q, n)` over a grid of `q`, with the closed form when known.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionTable {
    pub q_grid: Vec<f64>,
    pub depth: usize,
    pub tau_hat: Vec<f64>,
    pub tau_analytic: Option<Vec<f64>>,
}

impl PartitionTable {
    pub const CSV_HEADER: &'static str = "q,n,tau_hat,tau_analytic";

    /// Evaluates the grid in parallel; rows keep the grid order.
    pub fn compute(mu: &CylinderMeasure, q_grid: &[f64], n: usize) -> Result<Self> {
        let tau_hat = q_grid
            .par_iter()
            .map(|&q| tau_estimate(mu, q, n))
            .collect::<Result<Vec<_>>>()?;
        let tau_analytic = mu.product_probabilities().map(|p| {
            let spec = BernoulliSpec {
                probabilities: p.to_vec(),
                depth: mu.depth(),
            };
            q_grid.iter().map(|&q| bernoulli_tau(&spec, q)).collect()
        });
        Ok(PartitionTable {
            q_grid: q_grid.to_vec(),
            depth: n,
            tau_hat,
            tau_analytic,
        })
    }

    /// Largest violation of convexity: slopes between consecutive grid
    /// points must not decrease. Returns 0 when convex.
    pub fn convexity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for w in 0..self.q_grid.len().saturating_sub(2) {
            let (q0, q1, q2) = (self.q_grid[w], self.q_grid[w + 1], self.q_grid[w + 2]);
            let s0 = (self.tau_hat[w + 1] - self.tau_hat[w]) / (q1 - q0);
            let s1 = (self.tau_hat[w + 2] - self.tau_hat[w + 1]) / (q2 - q1);
            worst = worst.max(s0 - s1);
        }
        worst
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.q_grid
            .iter()
            .enumerate()
            .map(|(i, q)| {
                let analytic = self
                    .tau_analytic
                    .as_ref()
                    .map(|a| a[i].to_string())
                    .unwrap_or_default();
                format!("{q},{},{},{analytic}", self.depth, self.tau_hat[i])
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bernoulli(p: &[f64], depth: usize) -> CylinderMeasure {
        CylinderMeasure::bernoulli(&BernoulliSpec::new(p.to_vec(), depth).unwrap()).unwrap()
    }

    fn middle_thirds(depth: usize) -> CylinderMeasure {
        CylinderMeasure::deranged_cantor(&[1.0 / 3.0; 2], &[0.5; 2], depth).unwrap()
    }

    #[test]
    fn partition_sum_examples() {
        let u = bernoulli(&[0.5, 0.5], 6);
        for n in 1..=6 {
            assert!((partition_sum(&u, 1.0, 0.0, n).unwrap() - 1.0).abs() < 1e-15);
        }
        assert!((partition_sum(&u, 0.0, 1.0, 3).unwrap() - 1.0).abs() < 1e-15);
        let t = 2f64.ln() / 3f64.ln();
        assert!((partition_sum(&middle_thirds(6), 0.0, t, 4).unwrap() - 1.0).abs() < 1e-12);
        assert!(partition_sum(&u, 1.0, 0.0, 7).is_err());
    }

    #[test]
    fn zero_mass_cylinders_excluded() {
        let m = CylinderMeasure::deranged_cantor(&[1.0 / 3.0; 2], &[1.0, 0.0], 3).unwrap();
        // Only the leftmost cylinder carries mass, for negative and positive q alike.
        assert!((partition_sum(&m, -1.0, 0.0, 3).unwrap() - 1.0).abs() < 1e-15);
        assert!((partition_sum(&m, 2.0, 0.0, 3).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn halving_diameters_scales_by_two_to_minus_t() {
        let m = CylinderMeasure::deranged_cantor(&[0.2, 0.35], &[0.4, 0.6], 8).unwrap();
        for (q, t) in [(0.0, 0.7), (2.0, -0.4), (-1.5, 1.3)] {
            let direct = partition_sum(&m, q, t, 6).unwrap();
            let halved = compensated_sum(
                m.level_cylinders(6)
                    .map(|(mass, diam)| mass.powf(q) * (0.5 * diam).powf(t)),
            );
            assert!((halved - 2f64.powf(-t) * direct).abs() <= 1e-12 * direct.abs());
        }
    }

    #[test]
    fn tau_examples() {
        let u = bernoulli(&[0.5, 0.5], 10);
        for n in [1, 5, 10] {
            for q in [-2.0, 0.0, 0.5, 3.0] {
                assert!((tau_estimate(&u, q, n).unwrap() - (1.0 - q)).abs() < 1e-12);
            }
        }
        let b = bernoulli(&[0.3, 0.7], 12);
        for n in [1, 7, 12] {
            let v = tau_estimate(&b, 2.0, n).unwrap();
            assert!((v - 0.58f64.log2()).abs() < 1e-12, "{v}");
            assert!((v + 0.7859).abs() < 1e-4);
            assert!(tau_estimate(&b, 1.0, n).unwrap().abs() < 1e-12);
        }
        assert!(tau_estimate(&middle_thirds(4), 0.0, 2).is_err());
    }

    #[test]
    fn tau_derivative_examples() {
        let u = bernoulli(&[0.5, 0.5], 10);
        let d = tau_derivative_at_one(&u, 10, DEFAULT_DERIVATIVE_STEP).unwrap();
        assert!((d + 1.0).abs() < 1e-10);
        let b = bernoulli(&[0.3, 0.7], 14);
        let d = tau_derivative_at_one(&b, 14, DEFAULT_DERIVATIVE_STEP).unwrap();
        let exact = 0.3 * 0.3f64.log2() + 0.7 * 0.7f64.log2();
        assert!((d - exact).abs() < 1e-5, "{d} vs {exact}");
        assert!((d + 0.88129).abs() < 1e-5);
        assert!(tau_derivative_at_one(&b, 14, 0.2).is_err());
        assert!(BernoulliSpec::new(vec![1.0, 0.0], 4).is_err());
    }

    #[test]
    fn oracle_examples() {
        let half = BernoulliSpec::uniform(2, 4).unwrap();
        assert!((bernoulli_dimension_oracle(&half, 0.0) - 1.0).abs() < 1e-15);
        let skew = BernoulliSpec::new(vec![0.3, 0.7], 4).unwrap();
        assert!((bernoulli_dimension_oracle(&skew, 2.0) + 0.88129).abs() < 1e-5);
        assert_eq!(bernoulli_dimension_oracle(&skew, 1.0), 0.0);
    }

    #[test]
    fn set_dimension_examples() {
        let u = bernoulli(&[0.5, 0.5], 12);
        assert!((set_dimension_estimate(&u, 0.0, &[4, 8, 12]).unwrap() - 1.0).abs() < 1e-9);
        assert!((set_dimension_estimate(&u, 2.0, &[4, 8, 12]).unwrap() + 1.0).abs() < 1e-9);
        let t = set_dimension_estimate(&middle_thirds(10), 0.0, &[3, 6, 10]).unwrap();
        assert!((t - 2f64.ln() / 3f64.ln()).abs() < 1e-6);
        assert!(set_dimension_estimate(&u, 0.0, &[4]).is_err());
        assert!(set_dimension_estimate(&u, 0.0, &[4, 4]).is_err());
    }

    #[test]
    fn bisection_matches_similarity_dimension() {
        // Unequal ratios: Σ c_i^t = 1 at every generation when q = 0.
        let m = CylinderMeasure::deranged_cantor(&[0.2, 0.4], &[0.5; 2], 10).unwrap();
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if 0.2f64.powf(mid) + 0.4f64.powf(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        for n in [3, 7, 10] {
            let t = critical_exponent(&m, 0.0, n).unwrap();
            assert!((t - lo).abs() < 1e-9, "{t} vs {lo}");
        }
        // q = 1: Σ m |I|^t = 1 at t = 0.
        assert!(critical_exponent(&m, 1.0, 6).unwrap().abs() < 1e-9);
    }

    #[test]
    fn table_rows() {
        let b = bernoulli(&[0.3, 0.7], 8);
        let table = PartitionTable::compute(&b, &[-1.0, 0.0, 1.0, 2.0], 8).unwrap();
        let rows = table.csv_rows();
        assert_eq!(rows.len(), 4);
        assert!(rows[2].starts_with("1,8,"));
        let analytic = table.tau_analytic.as_ref().unwrap();
        for (a, b) in analytic.iter().zip(&table.tau_hat) {
            assert!((a - b).abs() < 1e-12);
        }
        let m = CylinderMeasure::symbolic(2, 4, &vec![0.25, 0.75]).unwrap();
        assert!(PartitionTable::compute(&m, &[0.0], 4)
            .unwrap()
            .tau_analytic
            .is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn tau_convex_and_normalized(p in 0.02f64..0.98, n in 1usize..12) {
            let b = bernoulli(&[p, 1.0 - p], 12);
            let grid: Vec<f64> = (-8..=8).map(|i| i as f64 * 0.5).collect();
            let table = PartitionTable::compute(&b, &grid, n).unwrap();
            prop_assert!(table.convexity_defect() <= 1e-9);
            prop_assert!(tau_estimate(&b, 1.0, n).unwrap().abs() <= 1e-12);
        }

        #[test]
        fn tau_one_vanishes_on_irregular_trees(
            fracs in prop::collection::vec(0.05f64..0.95, 4),
            n in 1usize..8,
        ) {
            let rule = move |w: &[u8]| {
                let f = fracs[w.len() % fracs.len()];
                vec![f, 1.0 - f]
            };
            let m = CylinderMeasure::symbolic(2, 8, &rule).unwrap();
            prop_assert!(tau_estimate(&m, 1.0, n).unwrap().abs() <= 1e-12);
        }
    }
}

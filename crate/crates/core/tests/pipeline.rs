use mfdim::measure::io::{read_cloud, read_tree, write_cloud, write_tree};
use mfdim::partition::partition_sum;
use mfdim::projection::{convolve_direct, convolve_radial, project};
use mfdim::{
    dimension_estimates, BallMassOracle, BernoulliSpec, CylinderMeasure, EstimateOptions,
    Percentiles, PointCloudMeasure, RadiusSchedule, Subspace,
};
use proptest::prelude::*;

#[test]
fn tree_round_trip_keeps_estimates() {
    let tree =
        CylinderMeasure::bernoulli(&BernoulliSpec::new(vec![0.3, 0.7], 12).unwrap()).unwrap();
    let mut buf = Vec::new();
    write_tree(&tree, &mut buf).unwrap();
    let back = read_tree(buf.as_slice()).unwrap();
    let options = EstimateOptions::new(300, RadiusSchedule::for_tree(2, 12).unwrap(), 5);
    for q in [-1.0, 0.0, 2.0] {
        let a = dimension_estimates(&tree, &tree, q, &options).unwrap();
        let b = dimension_estimates(&back, &back, q, &options).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn cloud_round_trip_keeps_estimates() {
    let cloud = PointCloudMeasure::cantor_product(0.2, 6, 2).unwrap();
    let mut buf = Vec::new();
    write_cloud(&cloud, &mut buf).unwrap();
    let back = read_cloud(buf.as_slice()).unwrap();
    assert_eq!(back.len(), cloud.len());
    let options = EstimateOptions::new(200, RadiusSchedule::new(5.0, 1, 4, 2).unwrap(), 9);
    let a = dimension_estimates(&cloud, &cloud, 0.0, &options).unwrap();
    let b = dimension_estimates(&back, &back, 0.0, &options).unwrap();
    assert!((a.lower_hausdorff - b.lower_hausdorff).abs() < 1e-9);
    assert!((a.upper_packing - b.upper_packing).abs() < 1e-9);
}

#[test]
fn uniform_tree_sampled_to_cloud_has_dimension_one() {
    // embedded binary tree on [0, 1]: sampled points fill the segment
    let tree = CylinderMeasure::deranged_cantor(&[0.5, 0.5], &[0.5, 0.5], 14).unwrap();
    let cloud = PointCloudMeasure::from_tree_samples(&tree, 200_000, 4).unwrap();
    let mut options = EstimateOptions::new(300, RadiusSchedule::new(2.0, 5, 8, 2).unwrap(), 4);
    // inner deciles: the extreme percentiles see the endpoints and sampling noise
    options.percentiles = Percentiles::new(0.1, 0.9).unwrap();
    let r = dimension_estimates(&cloud, &cloud, 0.0, &options).unwrap();
    assert!((r.lower_hausdorff - 1.0).abs() < 0.1, "{r:?}");
    assert!((r.upper_packing - 1.0).abs() < 0.1, "{r:?}");
}

fn cloud_of(points: &[Vec<f64>], raw: &[f64]) -> PointCloudMeasure {
    let total: f64 = raw.iter().sum();
    PointCloudMeasure::new(points, raw.iter().map(|w| w / total).collect()).unwrap()
}

fn small_cloud() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (1usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), n),
            prop::collection::vec(0.01f64..1.0, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kdtree_matches_linear_scan((points, weights) in small_cloud(), r in 0.0f64..1.5, i in 0usize..40) {
        let cloud = cloud_of(&points, &weights);
        let x = cloud.point(i % cloud.len()).to_vec();
        let fast = cloud.ball_mass(&x, r).unwrap();
        prop_assert!((fast - cloud.ball_mass_linear(&x, r)).abs() < 1e-12);
    }

    #[test]
    fn convolution_routes_agree((points, weights) in small_cloud(), r in 0.01f64..1.0, m in 1u32..3) {
        let cloud = cloud_of(&points, &weights);
        let x = cloud.point(0).to_vec();
        let a = convolve_direct(&cloud, &x, r, m).unwrap();
        let b = convolve_radial(&cloud, &x, r, m).unwrap();
        prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
        // the kernel is at least 1 on the ball
        prop_assert!(a + 1e-12 >= cloud.ball_mass_linear(&x, r));
    }

    #[test]
    fn projection_keeps_total_mass((points, weights) in small_cloud(), seed in any::<u64>()) {
        let cloud = cloud_of(&points, &weights);
        let v = Subspace::sample(2, 1, seed).unwrap();
        let image = project(&cloud, &v).unwrap();
        prop_assert_eq!(image.dim(), 1);
        prop_assert!((image.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bernoulli_partition_at_one_is_one(p in 0.05f64..0.95, n in 1usize..12) {
        let tree = CylinderMeasure::bernoulli(&BernoulliSpec::new(vec![p, 1.0 - p], 12).unwrap()).unwrap();
        prop_assert!((partition_sum(&tree, 1.0, 0.0, n).unwrap() - 1.0).abs() < 1e-12);
    }
}

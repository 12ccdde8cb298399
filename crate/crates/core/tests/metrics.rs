use hipe_core::metrics::{
    deletion_curve, efficiency_report, insertion_curve, pointing_game, rank_correlation, saliency_order,
    step_fractions, MethodCost, PointingTally, DEFAULT_BLUR_SIGMA,
};
use hipe_core::oracle::{ConstantOracle, ScoringOracle, WeightedSumProxy};
use hipe_core::substrate::gaussian_blur;
use hipe_core::synthetic::{hot_block_scene, random_map, region_mask};
use hipe_core::{Error, ImageTensor, RectRegion, ScalarField2D};
use proptest::prelude::*;
use std::time::Duration;

fn tensor(seed: u64, c: usize, h: usize, w: usize) -> ImageTensor {
    let m = random_map(seed, c * h, w);
    ImageTensor::new(c, h, w, m.into_values()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn curve_endpoints_and_auc_bounds(seed in 0u64..10_000, h in 4usize..20, w in 4usize..20, step in 0.01f64..1.0) {
        let x = tensor(seed, 2, h, w);
        let weights = random_map(seed + 1, h, w);
        let map = random_map(seed + 2, h, w);
        let mut o = WeightedSumProxy::new(weights);
        let fx = o.score_one(&x).unwrap();
        let f0 = o.score_one(&ImageTensor::zeros(2, h, w)).unwrap();
        let fb = o.score_one(&gaussian_blur(&x, DEFAULT_BLUR_SIGMA)).unwrap();

        let del = deletion_curve(&x, &map, &mut o, step).unwrap();
        let ins = insertion_curve(&x, &map, &mut o, step, DEFAULT_BLUR_SIGMA).unwrap();
        for c in [&del, &ins] {
            prop_assert_eq!(c.points.first().unwrap().0, 0.0);
            prop_assert_eq!(c.points.last().unwrap().0, 1.0);
            prop_assert!(c.points.windows(2).all(|p| p[1].0 > p[0].0));
            let (lo, hi) = c.score_range();
            prop_assert!(lo - 1e-9 <= c.auc && c.auc <= hi + 1e-9);
            let n = c.normalized_auc();
            prop_assert!((0.0..=1.0).contains(&n));
        }
        prop_assert_eq!(del.points[0].1, fx);
        prop_assert_eq!(del.points.last().unwrap().1, f0);
        prop_assert_eq!(ins.points[0].1, fb);
        prop_assert_eq!(ins.points.last().unwrap().1, fx);
    }

    #[test]
    fn plateaus_are_walked_in_raster_order(seed in 0u64..10_000, levels in 1u32..4) {
        let (h, w) = (6, 7);
        let x = tensor(seed, 1, h, w);
        let quantized = ScalarField2D::from_fn(h, w, |i, j| ((i * 5 + j * 3 + seed as usize) % levels as usize) as f32);
        let order = saliency_order(&quantized).unwrap();
        for p in order.windows(2) {
            let (a, b) = (quantized.values()[p[0]], quantized.values()[p[1]]);
            prop_assert!(a > b || (a == b && p[0] < p[1]));
        }
        // brute-force deletion along the documented order
        let weights = random_map(seed + 9, h, w);
        let mut o = WeightedSumProxy::new(weights.clone());
        let curve = deletion_curve(&x, &quantized, &mut o, 1.0 / 42.0).unwrap();
        let mut cur = x.clone();
        for (k, &pix) in order.iter().enumerate() {
            cur.values_mut()[pix] = 0.0;
            let expect = WeightedSumProxy::score_unchecked(&weights, &cur);
            prop_assert_eq!(curve.points[k + 1].1, expect);
        }
    }
}

#[test]
fn all_equal_map_deletes_in_raster_order() {
    let x = ImageTensor::from_fn(1, 3, 3, |_, i, j| (i * 3 + j + 1) as f32);
    let mut o = WeightedSumProxy::uniform(3, 3);
    let c = deletion_curve(&x, &ScalarField2D::filled(3, 3, 0.5), &mut o, 1.0 / 9.0).unwrap();
    let scores: Vec<f64> = c.scores().collect();
    assert_eq!(scores, vec![45.0, 44.0, 42.0, 39.0, 35.0, 30.0, 24.0, 17.0, 9.0, 0.0]);
}

#[test]
fn random_orderings_are_symmetric_on_a_linear_proxy() {
    let scene = hot_block_scene(77, 1, 32, 32, 10);
    let mut o = WeightedSumProxy::new(scene.weights.clone());
    let (mut ins, mut del) = (0.0, 0.0);
    for seed in 0..50 {
        let m = random_map(10_000 + seed, 32, 32);
        ins += insertion_curve(&scene.x, &m, &mut o, 0.01, DEFAULT_BLUR_SIGMA).unwrap().normalized_auc();
        del += deletion_curve(&scene.x, &m, &mut o, 0.01).unwrap().normalized_auc();
    }
    let (ins, del) = (ins / 50.0, del / 50.0);
    assert!((ins - del).abs() <= 0.02, "insertion {ins:.4} vs deletion {del:.4}");
}

#[test]
fn true_weights_beat_random_maps() {
    let scene = hot_block_scene(31, 1, 32, 32, 8);
    let mut o = WeightedSumProxy::new(scene.weights.clone());
    let del = deletion_curve(&scene.x, &scene.weights, &mut o, 0.01).unwrap().normalized_auc();
    let ins =
        insertion_curve(&scene.x, &scene.weights, &mut o, 0.01, DEFAULT_BLUR_SIGMA).unwrap().normalized_auc();
    let mut rd = Vec::new();
    let mut ri = Vec::new();
    for seed in 0..20 {
        let m = random_map(seed, 32, 32);
        rd.push(deletion_curve(&scene.x, &m, &mut o, 0.01).unwrap().normalized_auc());
        ri.push(insertion_curve(&scene.x, &m, &mut o, 0.01, DEFAULT_BLUR_SIGMA).unwrap().normalized_auc());
    }
    rd.sort_by(f64::total_cmp);
    ri.sort_by(f64::total_cmp);
    assert!(del <= (rd[9] + rd[10]) / 2.0 - 0.05);
    assert!(ins >= (ri[9] + ri[10]) / 2.0 + 0.05);
}

#[test]
fn constant_oracle_gives_flat_curve() {
    let x = tensor(1, 3, 10, 10);
    let c = deletion_curve(&x, &random_map(2, 10, 10), &mut ConstantOracle::new(0.7), 0.1).unwrap();
    assert!(c.scores().all(|s| s == 0.7));
    assert!((c.auc - 0.7).abs() < 1e-12);
    assert_eq!(c.normalized_auc(), 0.0);
}

#[test]
fn single_step_curve_has_two_points() {
    let x = tensor(3, 1, 8, 8);
    let mut o = WeightedSumProxy::uniform(8, 8);
    let fx = o.score_one(&x).unwrap();
    let c = deletion_curve(&x, &random_map(4, 8, 8), &mut o, 1.0).unwrap();
    assert_eq!(c.points, vec![(0.0, fx), (1.0, 0.0)]);
    assert_eq!(step_fractions(0.01).unwrap().len(), 101);
    assert_eq!(step_fractions(0.3).unwrap(), vec![0.0, 0.3, 0.6, 0.8999999999999999, 1.0]);
}

#[test]
fn invalid_curve_requests_are_rejected() {
    let x = tensor(5, 1, 8, 8);
    let mut o = WeightedSumProxy::uniform(8, 8);
    for step in [0.0, -0.1, 1.5, f64::NAN] {
        assert!(matches!(
            deletion_curve(&x, &random_map(1, 8, 8), &mut o, step),
            Err(Error::InvalidConfig(_))
        ));
    }
    let wrong = random_map(1, 8, 9);
    assert!(matches!(deletion_curve(&x, &wrong, &mut o, 0.1), Err(Error::Dimension(_))));
    assert!(matches!(insertion_curve(&x, &wrong, &mut o, 0.1, 2.0), Err(Error::Dimension(_))));
    assert_eq!(o.call_count(), 0);
}

#[test]
fn pointing_game_over_a_small_dataset() {
    let mut tally = PointingTally::default();
    for seed in 0..10u64 {
        let scene = hot_block_scene(seed, 1, 24, 24, 6);
        let region = region_mask(24, 24, scene.block);
        tally.record(pointing_game(&scene.weights, &region, 0).unwrap());
        let b = scene.block;
        let mut off = ScalarField2D::zeros(24, 24);
        let (i, j) = if b.top > 0 { (b.top - 1, b.left) } else { (b.bottom(), b.left) };
        off.set(i, j, 1.0);
        assert!(!pointing_game(&off, &region, 0).unwrap());
        assert!(pointing_game(&off, &region, 1).unwrap());
        tally.record(false);
    }
    assert_eq!(tally, PointingTally { hits: 10, misses: 10 });
    assert_eq!(tally.accuracy(), Some(0.5));
    let empty = ScalarField2D::zeros(24, 24);
    assert!(matches!(pointing_game(&empty, &empty, 0), Err(Error::InvalidAnnotation(_))));
    let r = region_mask(24, 24, RectRegion::new(0, 0, 2, 2));
    assert!(matches!(pointing_game(&ScalarField2D::zeros(4, 4), &r, 0), Err(Error::Dimension(_))));
}

#[test]
fn efficiency_ratios() {
    let rep = efficiency_report(&[
        MethodCost::new("hipe", 500, Duration::from_millis(5)),
        MethodCost::new("rise", 8000, Duration::from_millis(80)),
        MethodCost::new("occlusion", 226, Duration::from_millis(2)),
    ])
    .unwrap();
    let ratios: Vec<f64> = rep.rows.iter().map(|r| r.ratio).collect();
    assert_eq!(ratios, vec![1.0, 16.0, 0.452]);
}

#[test]
fn rank_correlation_is_symmetric_and_scale_free() {
    let a = random_map(1, 10, 10);
    let b = random_map(2, 10, 10);
    let scaled: Vec<f32> = b.values().iter().map(|v| 3.0 * v + 1.0).collect();
    let r1 = rank_correlation(a.values(), b.values());
    assert_eq!(r1, rank_correlation(b.values(), a.values()));
    assert!((r1 - rank_correlation(a.values(), &scaled)).abs() < 1e-12);
}

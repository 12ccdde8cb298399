use hipe_core::hipe::{
    hipe, initial_grid_resolution, threshold_value, HiPeConfig, HiPeRun, MaskGrid, ThresholdMode,
};
use hipe_core::oracle::{ScoringOracle, WeightedSumProxy};
use hipe_core::substrate::SubstrateKind;
use hipe_core::synthetic::hot_block_scene;
use hipe_core::{ImageTensor, ScalarField2D};
use proptest::prelude::*;

fn cfg(substrate: SubstrateKind) -> HiPeConfig {
    HiPeConfig { substrate, ..HiPeConfig::default() }
}

fn substrates() -> impl Strategy<Value = SubstrateKind> {
    prop_oneof![
        Just(SubstrateKind::Zero),
        Just(SubstrateKind::LocalMean),
        Just(SubstrateKind::Blur { sigma: 2.0 }),
        (0u64..100).prop_map(|seed| SubstrateKind::UniformNoise { seed, amplitude: 0.5 }),
    ]
}

fn run(x: &ImageTensor, w: &ScalarField2D, cfg: &HiPeConfig) -> (HiPeRun, u64) {
    let mut oracle = WeightedSumProxy::new(w.clone());
    let r = hipe(x, &mut oracle, cfg).unwrap();
    (r, oracle.call_count())
}

fn footprint_max(s: &ScalarField2D, m: &MaskGrid) -> f32 {
    let (h, w) = s.dims();
    let r = m.footprint(h, w);
    let mut best = f32::NEG_INFINITY;
    for i in r.top..r.bottom() {
        for j in r.left..r.right() {
            best = best.max(s.get(i, j));
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn accounting_and_non_negativity(seed in 0u64..1000, h in 16usize..48, w in 16usize..48, sub in substrates()) {
        let side = 3 + seed as usize % 6;
        let scene = hot_block_scene(seed, 2, h, w, side);
        let (r, counted) = run(&scene.x, &scene.weights, &cfg(sub));
        prop_assert_eq!(r.oracle_calls, counted);
        prop_assert_eq!(counted - 1, r.masks_passed() as u64);
        prop_assert_eq!(r.oracle_calls, 1 + r.levels.iter().map(|l| l.calls).sum::<u64>());
        prop_assert!(r.saliency.values().iter().all(|&v| v >= 0.0 && v.is_finite()));
    }

    #[test]
    fn accumulation_is_monotone_across_levels(seed in 0u64..1000, n in 32usize..72, sub in substrates()) {
        let scene = hot_block_scene(seed, 1, n, n, 6);
        let (full, _) = run(&scene.x, &scene.weights, &cfg(sub));
        let mut prev = ScalarField2D::zeros(n, n);
        for k in 1..=full.levels.len() {
            let c = HiPeConfig { max_levels: Some(k), ..cfg(sub) };
            let (r, _) = run(&scene.x, &scene.weights, &c);
            prop_assert_eq!(r.levels.len(), k);
            for (a, b) in prev.values().iter().zip(r.saliency.values()) {
                prop_assert!(b >= a, "pixel dropped from {} to {} at level {}", a, b, k);
            }
            prev = r.saliency;
        }
        prop_assert_eq!(prev, full.saliency);
    }

    #[test]
    fn level_one_scores_every_anchor(h in 8usize..130, w in 8usize..130) {
        let x = ImageTensor::from_fn(1, h, w, |_, i, j| ((i * 31 + j * 17) % 13) as f32);
        let (r, _) = run(&x, &ScalarField2D::filled(h, w, 1.0), &cfg(SubstrateKind::Zero));
        let d = initial_grid_resolution(h, w).unwrap();
        prop_assert_eq!(r.levels[0].d, d);
        prop_assert_eq!(r.levels[0].masks_enumerated, (d - 1) * (d - 1));
        prop_assert_eq!(r.levels[0].masks_passed, (d - 1) * (d - 1));
    }

    #[test]
    fn level_one_footprints_cover_the_image(h in 8usize..300, w in 8usize..300) {
        let d = initial_grid_resolution(h, w).unwrap();
        let mut covered = vec![false; h * w];
        for row in 0..d - 1 {
            for col in 0..d - 1 {
                let r = MaskGrid::new(d, row, col).footprint(h, w);
                prop_assert!(r.check_fits(h, w).is_ok());
                prop_assert!(r.height >= h / d && r.width >= w / d);
                for i in r.top..r.bottom() {
                    for j in r.left..r.right() {
                        covered[i * w + j] = true;
                    }
                }
            }
        }
        prop_assert!(covered.iter().all(|&c| c));
    }

    #[test]
    fn identical_maps_for_any_batch_size(seed in 0u64..1000, batch in 1usize..80, sub in substrates()) {
        let scene = hot_block_scene(seed, 3, 40, 36, 7);
        let (a, ca) = run(&scene.x, &scene.weights, &cfg(sub));
        let (b, cb) = run(&scene.x, &scene.weights, &HiPeConfig { batch_size: batch, ..cfg(sub) });
        prop_assert_eq!(ca, cb);
        let bits = |m: &ScalarField2D| m.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a.saliency), bits(&b.saliency));
    }

    #[test]
    fn every_zero_substrate_delta_is_the_footprint_dot_product(seed in 0u64..1000) {
        let scene = hot_block_scene(seed, 2, 32, 32, 5 + seed as usize % 8);
        let (r, _) = run(&scene.x, &scene.weights, &cfg(SubstrateKind::Zero));
        for level in &r.levels {
            for o in &level.outcomes {
                let mut brute = 0f64;
                for c in 0..2 {
                    for i in o.region.top..o.region.bottom() {
                        for j in o.region.left..o.region.right() {
                            brute += scene.weights.get(i, j) as f64 * scene.x.get(c, i, j) as f64;
                        }
                    }
                }
                prop_assert!((o.delta - brute).abs() <= 1e-4 * brute.abs().max(1e-12));
            }
        }
    }
}

#[test]
fn pruning_keeps_exactly_the_masks_at_or_above_threshold() {
    for seed in 0..12u64 {
        let scene = hot_block_scene(seed, 1, 64, 64, 6 + seed as usize % 5);
        for mode in [ThresholdMode::MidRange, ThresholdMode::Mean] {
            let c = HiPeConfig { threshold_mode: mode, ..cfg(SubstrateKind::Zero) };
            let (full, _) = run(&scene.x, &scene.weights, &c);
            for k in 1..full.levels.len() {
                let (snap, _) =
                    run(&scene.x, &scene.weights, &HiPeConfig { max_levels: Some(k), ..c.clone() });
                let level = &full.levels[k];
                let t = threshold_value(&snap.saliency, mode);
                let mut expected = Vec::new();
                for row in 0..level.d - 1 {
                    for col in 0..level.d - 1 {
                        let m = MaskGrid::new(level.d, row, col);
                        if footprint_max(&snap.saliency, &m) as f64 >= t {
                            expected.push(m);
                        }
                    }
                }
                let scored: Vec<MaskGrid> = level.outcomes.iter().map(|o| o.mask).collect();
                assert_eq!(scored, expected, "seed {seed} {mode:?} level {k}");
                assert_eq!(level.masks_enumerated, (level.d - 1) * (level.d - 1));
                assert!(level.masks_passed < level.masks_enumerated);
            }
        }
    }
}

#[test]
fn stops_before_cells_get_finer_than_four_pixels() {
    for (h, w) in [(16, 16), (31, 40), (64, 64), (100, 300), (128, 96), (256, 256)] {
        let scene = hot_block_scene(h as u64 * 7 + w as u64, 1, h, w, 4);
        let (r, _) = run(&scene.x, &scene.weights, &cfg(SubstrateKind::Zero));
        let m = h.min(w);
        let last = r.levels.last().unwrap().d;
        assert!(4 * last <= m, "{h}x{w}: final d {last}");
        assert!(8 * last > m, "{h}x{w}: stopped early at d {last}");
        let ds: Vec<usize> = r.levels.iter().map(|l| l.d).collect();
        assert!(ds.windows(2).all(|p| p[1] == 2 * p[0]), "{ds:?}");
    }
}

#[test]
fn small_inputs_run_one_level() {
    // d0 = 4 already exceeds min/4 = 2 at 9x12, but the first level always runs
    let scene = hot_block_scene(1, 1, 9, 12, 3);
    let (r, _) = run(&scene.x, &scene.weights, &cfg(SubstrateKind::Zero));
    assert_eq!(r.levels.len(), 1);
    assert_eq!(r.levels[0].d, 4);
    assert!(hipe(
        &ImageTensor::zeros(1, 7, 64),
        &mut WeightedSumProxy::uniform(7, 64),
        &HiPeConfig::default()
    )
    .is_err());
}

#[test]
fn eccentric_images_use_rectangular_cells() {
    let scene = hot_block_scene(5, 1, 40, 200, 8);
    let (r, _) = run(&scene.x, &scene.weights, &cfg(SubstrateKind::Zero));
    assert_eq!(r.levels[0].d, 6);
    let cell = MaskGrid::new(6, 0, 0).footprint(40, 200);
    assert_eq!((cell.height, cell.width), (12, 66));
    // only one level fits, so horizontal resolution is a 33 px cell: the
    // block shares the peak with its cell neighbours rather than owning it
    assert_eq!(r.levels.len(), 1);
    let (peak_i, peak_j) = r.saliency.argmax();
    let peak = r.saliency.get(peak_i, peak_j);
    let b = scene.block;
    let block_max = (b.top..b.bottom())
        .flat_map(|i| (b.left..b.right()).map(move |j| (i, j)))
        .map(|(i, j)| r.saliency.get(i, j))
        .fold(f32::NEG_INFINITY, f32::max);
    assert_eq!(block_max, peak);
}

#[test]
fn signed_mode_keeps_score_increases() {
    // a negative weight region raises the score when zeroed out
    let w = ScalarField2D::from_fn(32, 32, |i, _| if i < 16 { 1.0 } else { -1.0 });
    let x = ImageTensor::filled(1, 32, 32, 1.0);
    let signed = HiPeConfig { signed_mode: true, ..cfg(SubstrateKind::Zero) };
    let (s, _) = run(&x, &w, &signed);
    let (u, _) = run(&x, &w, &cfg(SubstrateKind::Zero));
    assert!(s.saliency.get(0, 0) > 0.0 && s.saliency.get(31, 31) < 0.0);
    assert!(u.saliency.values().iter().all(|&v| v >= 0.0));
    assert_eq!(u.saliency.get(31, 31), 0.0);
}

mod common;

use common::{brute_confusion, flood_fill_filter};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tubesynth::metrics::*;
use tubesynth::{Class, Grid};

fn random_mask(rng: &mut ChaCha8Rng, w: usize, h: usize, p: f64) -> Grid<bool> {
    Grid::from_fn(w, h, |_, _| rng.random_bool(p))
}

fn random_labels(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Grid<u8> {
    Grid::from_fn(w, h, |_, _| rng.random_range(0..3u8))
}

#[test]
fn fbeta_reproduces_reported_values() {
    let cfg = FBetaConfig::default();
    for (p, r, expect) in [
        (0.8411, 0.6909, 0.8009),
        (0.7455, 0.7603, 0.7489),
        (0.8260, 0.2884, 0.5775),
    ] {
        let f = f_beta(p, r, &cfg).unwrap();
        assert!((f - expect).abs() <= 5e-4, "({p}, {r}) -> {f}");
    }
    assert_eq!(f_beta(0.0, 0.0, &cfg).unwrap(), 0.0);
    assert!(f_beta(1.2, 0.5, &cfg).is_err());
}

proptest! {
    #[test]
    fn fbeta_lies_between_precision_and_recall(p in 0.0f64..=1.0, r in 0.0f64..=1.0, b in 0.01f64..10.0) {
        let f = f_beta(p, r, &FBetaConfig { beta_sq: b }).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        if p > 0.0 && r > 0.0 {
            prop_assert!(f >= p.min(r) - 1e-12 && f <= p.max(r) + 1e-12);
        }
    }

    #[test]
    fn fbeta_of_equal_inputs_is_identity(p in 0.0f64..=1.0, b in 0.01f64..10.0) {
        let f = f_beta(p, p, &FBetaConfig { beta_sq: b }).unwrap();
        prop_assert!((f - p).abs() <= 1e-12);
    }
}

#[test]
fn region_filter_matches_flood_fill() {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    for k in 0..60 {
        let (w, h) = (rng.random_range(1..40), rng.random_range(1..40));
        let mask = random_mask(&mut rng, w, h, 0.3 + 0.01 * (k % 30) as f64);
        for min_area in [0, 1, 2, 5, 17, 64] {
            assert_eq!(
                small_region_filter(&mask, min_area),
                flood_fill_filter(&mask, min_area),
                "case {k}"
            );
        }
    }
}

#[test]
fn confusion_matches_pixel_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(201);
    for _ in 0..200 {
        let pred = random_mask(&mut rng, 16, 16, 0.5);
        let truth = random_labels(&mut rng, 16, 16);
        let c = confusion(&pred, &truth).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_, c.tn), brute_confusion(&pred, &truth));
        assert_eq!(c.total(), 256);
    }
    let bad = Grid::filled(16, 16, 3u8);
    assert!(confusion(&Grid::filled(16, 16, true), &bad).is_err());
}

#[test]
fn adaptive_threshold_is_twice_the_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for k in 0..100 {
        let (w, h) = (rng.random_range(1..50), rng.random_range(1..50));
        let domain = if k % 2 == 0 {
            ValueDomain::Unit
        } else {
            ValueDomain::Byte
        };
        let ch: Grid<f64> = Grid::from_fn(w, h, |_, _| rng.random_range(0.0..=domain.max()));
        // Reference accumulates in the same row-major order.
        let mut s = 0.0;
        for y in 0..h {
            for x in 0..w {
                s += ch[(x, y)];
            }
        }
        let expect = 2.0 * (s / (w * h) as f64);
        let map = LikelihoodMap::catheter_only(ch, domain).unwrap();
        assert_eq!(mean_threshold(&map, Class::Catheter).unwrap(), expect);
        assert_eq!(
            adaptive_threshold(&map, Class::Catheter).unwrap(),
            expect.min(domain.max())
        );
    }
}

#[test]
fn uniform_prediction_loss() {
    let third = Grid::filled(4, 4, 1.0 / 3.0);
    let map = LikelihoodMap::new([third.clone(), third.clone(), third], ValueDomain::Unit).unwrap();
    let w = LossWeights::default();
    let cath = Grid::filled(4, 4, 1u8);
    let ce = weighted_ce(&map, &cath, &w).unwrap();
    assert!((ce - 40.0 * 3f64.ln()).abs() <= 1e-9, "{ce}");
    let bg = Grid::filled(4, 4, 0u8);
    assert!((weighted_ce(&map, &bg, &w).unwrap() - 3f64.ln()).abs() <= 1e-9);
}

#[test]
fn weighted_ce_matches_hand_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(203);
    let w = LossWeights::default();
    for _ in 0..20 {
        let raw: Vec<[f64; 3]> = (0..16)
            .map(|i| {
                if i == 0 {
                    return [1.0, 0.0, 0.0];
                }
                let v = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
                let s: f64 = v.iter().sum();
                [v[0] / s, v[1] / s, v[2] / s]
            })
            .collect();
        let truth = random_labels(&mut rng, 4, 4);
        let ch = |k: usize| Grid::from_fn(4, 4, |x, y| raw[y * 4 + x][k]);
        let map = LikelihoodMap::new([ch(0), ch(1), ch(2)], ValueDomain::Unit).unwrap();
        let weights = [1.0, 40.0, 80.0];
        let mut expect = 0.0;
        for (probs, &t) in raw.iter().zip(truth.as_slice()) {
            expect += -weights[t as usize] * probs[t as usize].max(1e-7).ln();
        }
        expect /= 16.0;
        assert!((weighted_ce(&map, &truth, &w).unwrap() - expect).abs() <= 1e-9);
        assert!(map.normalization_error().unwrap() < 1e-12);
        let total = multiscale_loss(
            &[map.clone(), map.clone(), map.clone()],
            &[truth.clone(), truth.clone(), truth.clone()],
            &w,
        )
        .unwrap();
        assert!((total - 3.0 * expect).abs() <= 1e-9);
        assert!(multiscale_loss(&[map], &[truth], &w).is_err());
    }
}

#[test]
fn sweep_has_nine_points_and_recall_never_rises() {
    let t = default_thresholds(ValueDomain::Byte);
    assert_eq!(t, vec![0.0, 30.0, 60.0, 90.0, 120.0, 150.0, 180.0, 210.0, 240.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(204);
    for _ in 0..20 {
        let truth = Grid::from_fn(48, 48, |x, y| ((x as i64 - y as i64).abs() < 3) as u8);
        let ch = Grid::from_fn(48, 48, |x, y| {
            let near = (x as i64 - y as i64).abs() < 4;
            let base: f64 = if near { 180.0 } else { 40.0 };
            (base + rng.random_range(-60.0..60.0)).clamp(0.0, 255.0).round()
        });
        let map = LikelihoodMap::catheter_only(ch, ValueDomain::Byte).unwrap();
        let curve = pr_curve(&map, &truth, &t, DEFAULT_MIN_AREA).unwrap();
        assert_eq!(curve.points.len(), 9);
        let recalls: Vec<f64> = curve.points.iter().map(|p| p.recall.unwrap()).collect();
        assert!(recalls.windows(2).all(|w| w[1] <= w[0]), "{recalls:?}");
    }
    let flat = LikelihoodMap::catheter_only(Grid::filled(4, 4, 0.0), ValueDomain::Byte).unwrap();
    assert!(pr_curve(&flat, &Grid::filled(4, 4, 0), &[30.0, 30.0], 0).is_err());
}

#[test]
fn micro_and_macro_aggregation() {
    let a = ConfusionCounts {
        tp: 9,
        fp: 1,
        fn_: 0,
        tn: 0,
    };
    let b = ConfusionCounts {
        tp: 1,
        fp: 9,
        fn_: 10,
        tn: 0,
    };
    let micro = aggregate_micro(&[a, b]);
    assert_eq!(micro.precision, Some(0.5));
    assert_eq!(micro.recall, Some(0.5));
    let per = [precision_recall(&a), precision_recall(&b)];
    let macro_ = aggregate_macro(&per);
    assert_eq!(macro_.precision, Some(0.5));
    assert!((macro_.recall.unwrap() - (1.0 + 1.0 / 11.0) / 2.0).abs() < 1e-12);
    let empty = ConfusionCounts {
        tp: 0,
        fp: 0,
        fn_: 0,
        tn: 5,
    };
    assert_eq!(
        precision_recall(&empty),
        PrecisionRecall {
            precision: None,
            recall: None
        }
    );
    assert_eq!(aggregate_macro(&[precision_recall(&empty)]), PrecisionRecall::default());
}

#[test]
fn missing_channel_is_reported() {
    let map = LikelihoodMap::catheter_only(Grid::filled(2, 2, 0.5), ValueDomain::Unit).unwrap();
    assert!(map.channel(Class::Text).is_err());
    assert!(weighted_ce(&map, &Grid::filled(2, 2, 0), &LossWeights::default()).is_err());
    let mismatched = LikelihoodMap::from_parts(
        [Some(Grid::filled(2, 2, 0.5)), Some(Grid::filled(3, 2, 0.5)), None],
        ValueDomain::Unit,
    );
    assert!(mismatched.is_err());
}

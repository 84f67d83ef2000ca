use cyberstc::eval::{pearson, spearman};
use cyberstc::predictor::{Direction, Head, Network, Scaler, Target};
use cyberstc::{
    dp_compress, stc_compress, windowed_features, CompressionConfig, Tid, TrajPoint, Trajectory,
};
use proptest::prelude::*;

fn trajectory() -> impl Strategy<Value = Vec<TrajPoint>> {
    prop::collection::vec(
        (-50.0..50.0f64, -50.0..50.0f64, -5.0..5.0f64, 0.05..3.0f64),
        2..120,
    )
    .prop_map(|steps| {
        let mut t = 0.0;
        steps
            .into_iter()
            .map(|(x, y, z, dt)| {
                t += dt;
                TrajPoint::new(Tid::new("p"), x, y, z, t)
            })
            .collect()
    })
}

fn eps() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.4), 0.01..20.0f64]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn endpoints_always_kept(points in trajectory(), eps in eps()) {
        let cfg = CompressionConfig::with_epsilon(eps).unwrap();
        let n = points.len();
        for r in [stc_compress(&points, &cfg).unwrap(), dp_compress(&points, &cfg).unwrap()] {
            prop_assert_eq!(r.kept[0], 0);
            prop_assert_eq!(*r.kept.last().unwrap(), n - 1);
            prop_assert!(r.kept.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(r.kept.len() + r.removed_count, n);
            let rate = r.rate().unwrap();
            prop_assert!((0.0..=(n as f64 - 2.0) / n as f64).contains(&rate));
        }
    }

    #[test]
    fn dp_keeps_fewer_points_as_epsilon_grows(points in trajectory(), a in 0.01..10.0f64, b in 0.01..10.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let n_lo = dp_compress(&points, &CompressionConfig::with_epsilon(lo).unwrap()).unwrap().kept.len();
        let n_hi = dp_compress(&points, &CompressionConfig::with_epsilon(hi).unwrap()).unwrap().kept.len();
        prop_assert!(n_hi <= n_lo);
    }

    #[test]
    fn dp_dropped_points_stay_near_their_segment(points in trajectory(), eps in eps()) {
        let r = dp_compress(&points, &CompressionConfig::with_epsilon(eps).unwrap()).unwrap();
        for w in r.kept.windows(2) {
            let (a, b) = (points[w[0]].pos(), points[w[1]].pos());
            for p in &points[w[0] + 1..w[1]] {
                prop_assert!(cyberstc::compression::point_segment_distance(p.pos(), a, b) < eps);
            }
        }
    }

    #[test]
    fn compression_is_deterministic(points in trajectory(), eps in eps()) {
        let cfg = CompressionConfig::with_epsilon(eps).unwrap();
        prop_assert_eq!(stc_compress(&points, &cfg).unwrap(), stc_compress(&points, &cfg).unwrap());
        let traj = Trajectory::from_points(points);
        let seq = cyberstc::compression::windowed_features_with(&traj, 10.0, &cfg, cyberstc::Execution::Sequential).unwrap();
        prop_assert_eq!(windowed_features(&traj, 10.0, &cfg).unwrap(), seq);
    }

    #[test]
    fn window_features_are_bounded(points in trajectory(), ws in 0.5..30.0f64) {
        let traj = Trajectory::from_points(points);
        let f = windowed_features(&traj, ws, &CompressionConfig::default()).unwrap();
        prop_assert_eq!(f.iter().map(|f| f.point_count).sum::<usize>(), traj.len());
        for (w, feat) in f.iter().enumerate() {
            prop_assert_eq!(feat.window_index, w);
            prop_assert!((0.0..=1.0).contains(&feat.rate));
            prop_assert!(feat.t0 < feat.t1);
        }
        prop_assert!(f[0].delta.is_none());
    }

    #[test]
    fn scaler_round_trip(rows in prop::collection::vec(prop::array::uniform2(-1e3..1e3f64), 1..40)) {
        let s = Scaler::fit(&rows).unwrap();
        for r in &rows {
            let scaled = s.transform(r).unwrap();
            prop_assert!(scaled.iter().all(|v| (0.0..=1.0).contains(v)));
            let back = s.inverse(&scaled).unwrap();
            for (a, b) in back.iter().zip(r) {
                // a constant column maps to its single value exactly
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn softmax_is_a_distribution(seed in any::<u64>(), x in prop::array::uniform2(-5.0..5.0f64)) {
        let net = Network::new_seeded(&[2, 3, 3], Head::Classifier, seed).unwrap();
        let p = net.forward(&x).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn argmax_ignores_logit_shift(seed in any::<u64>(), x in prop::array::uniform2(0.0..1.0f64), shift in -50.0..50.0f64) {
        let net = Network::new_seeded(&[2, 4, 3], Head::Classifier, seed).unwrap();
        let mut biases = net.biases().to_vec();
        let last = biases.len() - 1;
        biases[last].iter_mut().for_each(|b| *b += shift);
        let shifted = Network::from_parts(net.layer_sizes().to_vec(), net.weights().to_vec(), biases, Head::Classifier).unwrap();
        let p: [f64; 3] = net.forward(&x).unwrap().try_into().unwrap();
        let q: [f64; 3] = shifted.forward(&x).unwrap().try_into().unwrap();
        prop_assert_eq!(Direction::from_probabilities(p), Direction::from_probabilities(q));
        for (a, b) in p.iter().zip(q) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn correlations_are_affine_invariant(
        pairs in prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 3..30),
        scale in 0.1..10.0f64,
        offset in -50.0..50.0f64,
    ) {
        let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let moved: Vec<f64> = xs.iter().map(|x| scale * x + offset).collect();
        if let (Ok(a), Ok(b)) = (pearson(&xs, &ys), pearson(&moved, &ys)) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        if let (Ok(a), Ok(b)) = (spearman(&xs, &ys), spearman(&moved, &ys)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn spearman_equals_pearson_on_ranks(perm in Just((1..=12).map(f64::from).collect::<Vec<_>>()).prop_shuffle()) {
        let xs: Vec<f64> = (1..=12).map(f64::from).collect();
        prop_assert!((spearman(&xs, &perm).unwrap() - pearson(&xs, &perm).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn regression_output_stays_in_unit_interval(seed in any::<u64>(), x in prop::array::uniform2(-3.0..3.0f64)) {
        let net = Network::new_seeded(&[2, 4, 1], Head::Regression, seed).unwrap();
        let y = net.forward(&x).unwrap()[0];
        prop_assert!(y > 0.0 && y < 1.0);
        prop_assert!(net.loss(&x, &Target::Values(vec![y])).unwrap() < 1e-30);
    }
}

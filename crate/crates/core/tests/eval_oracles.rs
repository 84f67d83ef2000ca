use cyberstc::eval::*;
use cyberstc::predictor::Direction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Rank by counting: one plus the number of smaller values plus half the
/// other ties.
fn counted_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&a| {
            let below = v.iter().filter(|&&b| b < a).count() as f64;
            let equal = v.iter().filter(|&&b| b == a).count() as f64;
            1.0 + below + (equal - 1.0) / 2.0
        })
        .collect()
}

/// Product-moment correlation from pairwise differences, which needs no
/// means.
fn pairwise_pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            let (dx, dy) = (xs[i] - xs[j], ys[i] - ys[j]);
            sxy += dx * dy;
            sxx += dx * dx;
            syy += dy * dy;
        }
    }
    sxy / (sxx * syy).sqrt()
}

#[test]
fn correlations_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mut checked = 0;
    while checked < 100 {
        let n = rng.random_range(3..=12usize);
        let ties = rng.random_bool(0.5);
        let draw = |rng: &mut ChaCha8Rng| {
            if ties {
                rng.random_range(0..4) as f64
            } else {
                rng.random_range(-10.0..10.0)
            }
        };
        let xs: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let ys: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let (Ok(p), Ok(s)) = (pearson(&xs, &ys), spearman(&xs, &ys)) else {
            // constant input has no correlation
            assert!(xs.iter().all(|&x| x == xs[0]) || ys.iter().all(|&y| y == ys[0]));
            continue;
        };
        assert!((p - pairwise_pearson(&xs, &ys)).abs() < 1e-12);
        let want = pairwise_pearson(&counted_ranks(&xs), &counted_ranks(&ys));
        assert!((s - want).abs() < 1e-12, "{xs:?} {ys:?}");
        assert_eq!(average_ranks(&xs), counted_ranks(&xs));
        checked += 1;
    }
}

#[test]
fn spearman_on_a_near_monotone_pair() {
    let rho = spearman(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 1.0, 4.0, 3.0, 5.0]).unwrap();
    assert!((rho - 0.8).abs() < 1e-12);
    assert!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    assert!(pearson(&[1.0], &[2.0]).is_err());
}

#[test]
fn curve_area_error_matches_hand_integral() {
    // trapezoids: |diff| area 0.5 + 0.5 = 1, reported area 1.5 + 2.5 = 4
    let pair = CurvePair::new(
        vec![0.0, 1.0, 2.0],
        vec![1.0, 2.0, 3.0],
        vec![1.0, 3.0, 3.0],
    )
    .unwrap();
    assert!((curve_area_error(&pair).unwrap() - 1.0 / 4.0).abs() < 1e-15);
    let same = CurvePair::new(vec![0.0, 2.0], vec![2.0, 4.0], vec![2.0, 4.0]).unwrap();
    assert_eq!(curve_area_error(&same).unwrap(), 0.0);
    let zero = CurvePair::new(vec![0.0, 1.0], vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
    assert!(curve_area_error(&zero).is_err());
}

#[test]
fn test_block_confusion_reconstruction() {
    use Direction::*;
    // rows: actual lower (5/0/1), same (0/1/1), higher (0/1/13)
    let mut labels = Vec::new();
    let mut preds = Vec::new();
    for (actual, row) in [(Lower, [5, 0, 1]), (Same, [0, 1, 1]), (Higher, [0, 1, 13])] {
        for (predicted, count) in [Lower, Same, Higher].into_iter().zip(row) {
            labels.extend(std::iter::repeat_n(actual, count));
            preds.extend(std::iter::repeat_n(predicted, count));
        }
    }
    let m = confusion(&labels, &preds).unwrap();
    let pct = |v: f64| format!("{:.1}", 100.0 * v);
    let [l, s, h] = m.per_class_accuracy().map(Option::unwrap);
    assert_eq!([pct(l), pct(s), pct(h)], ["83.3", "50.0", "92.9"]);
    assert_eq!(pct(m.global_accuracy()), "86.4");
    let strs = confusion_from_strs(
        &labels.iter().map(|d| d.as_str()).collect::<Vec<_>>(),
        &preds.iter().map(|d| d.as_str()).collect::<Vec<_>>(),
    )
    .unwrap();
    assert_eq!(strs, m);
    assert!(confusion_from_strs(&["lower"], &["sideways"]).is_err());
}

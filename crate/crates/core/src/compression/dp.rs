use crate::error::{Error, Result};
use crate::trajectory::{distance, TrajPoint};

use super::{CompressionConfig, CompressionResult};

/// Distance from `p` to the closed segment `a..b` in 3D.
pub fn point_segment_distance(p: [f64; 3], a: [f64; 3], b: [f64; 3]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let ap = [p[0] - a[0], p[1] - a[1], p[2] - a[2]];
    let len_sq = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2];
    if len_sq == 0.0 {
        return distance(p, a);
    }
    let k = ((ap[0] * ab[0] + ap[1] * ab[1] + ap[2] * ab[2]) / len_sq).clamp(0.0, 1.0);
    distance(p, [a[0] + k * ab[0], a[1] + k * ab[1], a[2] + k * ab[2]])
}

/// Douglas-Peucker simplification on spatial distance, ignoring time.
///
/// A span is split at its farthest interior point (first one on ties) when
/// that distance is `>= epsilon`; otherwise its interior is dropped.
pub fn dp_compress(points: &[TrajPoint], cfg: &CompressionConfig) -> Result<CompressionResult> {
    let n = points.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let eps = cfg.epsilon();
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[n - 1] = true;
    let mut spans = vec![(0usize, n - 1)];
    while let Some((first, last)) = spans.pop() {
        if last - first < 2 {
            continue;
        }
        let (a, b) = (points[first].pos(), points[last].pos());
        let mut far = (first, f64::NEG_INFINITY);
        for (i, p) in points.iter().enumerate().take(last).skip(first + 1) {
            let d = point_segment_distance(p.pos(), a, b);
            if d > far.1 {
                far = (i, d);
            }
        }
        if far.1 >= eps {
            keep[far.0] = true;
            spans.push((far.0, last));
            spans.push((first, far.0));
        }
    }
    Ok(CompressionResult::from_keep_mask(&keep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::Tid;

    fn pt(x: f64, y: f64, t: f64) -> TrajPoint {
        TrajPoint::new(Tid::new("a"), x, y, 0.0, t)
    }

    #[test]
    fn collinear_collapses() {
        let pts: Vec<_> = (0..5)
            .map(|i| pt(i as f64, 2.0 * i as f64, i as f64))
            .collect();
        for eps in [1e-9, 0.4, 10.0] {
            let r = dp_compress(&pts, &CompressionConfig::with_epsilon(eps).unwrap()).unwrap();
            assert_eq!(r.kept, vec![0, 4]);
        }
    }

    #[test]
    fn right_angle_corner_is_kept() {
        // corner distance to the chord is sqrt(2)/2
        let pts = [pt(0.0, 0.0, 0.0), pt(1.0, 0.0, 1.0), pt(1.0, 1.0, 2.0)];
        let d = point_segment_distance(pts[1].pos(), pts[0].pos(), pts[2].pos());
        assert!((d - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let r = dp_compress(&pts, &CompressionConfig::default()).unwrap();
        assert_eq!(r.kept, vec![0, 1, 2]);
        let r = dp_compress(&pts, &CompressionConfig::with_epsilon(0.8).unwrap()).unwrap();
        assert_eq!(r.kept, vec![0, 2]);
    }

    #[test]
    fn infinite_epsilon_keeps_endpoints() {
        let pts: Vec<_> = (0..20)
            .map(|i| pt((i * 7 % 5) as f64, (i * 3 % 4) as f64, i as f64))
            .collect();
        let r = dp_compress(
            &pts,
            &CompressionConfig::with_epsilon(f64::INFINITY).unwrap(),
        )
        .unwrap();
        assert_eq!(r.kept, vec![0, 19]);
        assert_eq!(r.removed_count, 18);
    }

    #[test]
    fn degenerate_segment_uses_point_distance() {
        assert_eq!(
            point_segment_distance([3.0, 4.0, 0.0], [0.0; 3], [0.0; 3]),
            5.0
        );
        // projection beyond the segment clamps to the endpoint
        assert_eq!(
            point_segment_distance([2.0, 0.0, 0.0], [0.0; 3], [1.0, 0.0, 0.0]),
            1.0
        );
    }
}

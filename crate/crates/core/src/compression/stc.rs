use crate::error::{Error, Result};
use crate::trajectory::{distance, TrajPoint};

use super::{CompressionConfig, CompressionResult};

/// Constant-velocity extrapolation of the `anchor -> last` segment to time `t`.
pub fn predict_position(anchor: &TrajPoint, last: &TrajPoint, t: f64) -> Result<[f64; 3]> {
    if !(anchor.t < last.t) {
        return Err(Error::NonIncreasingTime {
            earlier: anchor.t,
            later: last.t,
        });
    }
    if !(last.t <= t) {
        return Err(Error::NonIncreasingTime {
            earlier: last.t,
            later: t,
        });
    }
    let k = (t - anchor.t) / (last.t - anchor.t);
    Ok([
        anchor.x + k * (last.x - anchor.x),
        anchor.y + k * (last.y - anchor.y),
        anchor.z + k * (last.z - anchor.z),
    ])
}

/// Opening-window spatiotemporal compression.
///
/// Starting from `(anchor, last) = (p0, p1)`, each candidate `c` is compared
/// with the extrapolation of the pair at `c.t`. A miss below `epsilon` marks
/// `last` removable and slides `last` forward; otherwise `last` is kept and
/// the window reopens at `(last, c)`. The first and final points are always
/// kept.
pub fn stc_compress(points: &[TrajPoint], cfg: &CompressionConfig) -> Result<CompressionResult> {
    let n = points.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let eps = cfg.epsilon();
    let mut keep = vec![true; n];
    let (mut anchor, mut last) = (0usize, 1usize);
    for c in 2..n {
        let predicted = predict_position(&points[anchor], &points[last], points[c].t)?;
        if distance(predicted, points[c].pos()) < eps {
            keep[last] = false;
        } else {
            anchor = last;
        }
        last = c;
    }
    Ok(CompressionResult::from_keep_mask(&keep))
}

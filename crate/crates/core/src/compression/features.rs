use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::trajectory::{check_header, csv_error, parse_f64, TrajPoint, Trajectory};

use super::{delta_rate, stc_compress, CompressionConfig, WindowFeature};

pub const FEATURES_HEADER: [&str; 6] = ["window", "t0", "t1", "rate", "delta", "points"];

/// Bounds of window `w` on a grid anchored at `origin`. Both the batch and
/// the streaming paths derive boundaries here so they agree bit for bit.
pub fn window_bounds(origin: f64, window_s: f64, w: usize) -> (f64, f64) {
    (
        origin + w as f64 * window_s,
        origin + (w + 1) as f64 * window_s,
    )
}

/// `(t0, t1, start, end)` index spans of consecutive windows over sorted
/// points, empty windows included, up to the window holding the last point.
pub(crate) fn window_spans(
    points: &[TrajPoint],
    origin: f64,
    window_s: f64,
) -> Vec<(f64, f64, usize, usize)> {
    let mut spans = Vec::new();
    let mut start = 0;
    let mut w = 0;
    while start < points.len() {
        let (t0, t1) = window_bounds(origin, window_s, w);
        let end = start + points[start..].partition_point(|p| p.t < t1);
        spans.push((t0, t1, start, end));
        start = end;
        w += 1;
    }
    spans
}

/// Compression rate of one window's points; fewer than two points rate 0.
pub fn window_rate(points: &[TrajPoint], cfg: &CompressionConfig) -> Result<f64> {
    if points.len() < 2 {
        return Ok(0.0);
    }
    stc_compress(points, cfg)?.rate()
}

/// Per-window `(rate, delta)` over `[first t, last t]` with the default
/// execution mode.
pub fn windowed_features(
    traj: &Trajectory,
    window_s: f64,
    cfg: &CompressionConfig,
) -> Result<Vec<WindowFeature>> {
    windowed_features_with(traj, window_s, cfg, Execution::default())
}

pub fn windowed_features_with(
    traj: &Trajectory,
    window_s: f64,
    cfg: &CompressionConfig,
    exec: Execution,
) -> Result<Vec<WindowFeature>> {
    if !(window_s > 0.0 && window_s.is_finite()) {
        return Err(Error::invalid(format!(
            "window length must be > 0, got {window_s}"
        )));
    }
    if let Err(v) = traj.validate() {
        return Err(Error::invalid(format!("invalid trajectory: {}", v[0])));
    }
    let points = traj.points();
    let Some(origin) = traj.first_t() else {
        return Ok(Vec::new());
    };

    let spans = window_spans(points, origin, window_s);
    let rates = exec.map(&spans, |&(_, _, s, e)| window_rate(&points[s..e], cfg));

    let mut out = Vec::with_capacity(spans.len());
    let mut prev: Option<f64> = None;
    for (w, (&(t0, t1, s, e), rate)) in spans.iter().zip(rates).enumerate() {
        let rate = rate?;
        out.push(WindowFeature {
            window_index: w,
            t0,
            t1,
            rate,
            delta: prev.and_then(|p| delta_rate(rate, p, cfg.delta_mode())),
            point_count: e - s,
        });
        prev = Some(rate);
    }
    Ok(out)
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(|d| d.to_string()).unwrap_or_default()
}

pub fn write_features_csv<W: Write>(out: W, features: &[WindowFeature]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FEATURES_HEADER)?;
    for f in features {
        w.write_record([
            f.window_index.to_string(),
            f.t0.to_string(),
            f.t1.to_string(),
            f.rate.to_string(),
            fmt_opt(f.delta),
            f.point_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_features_jsonl<W: Write>(mut out: W, features: &[WindowFeature]) -> Result<()> {
    for f in features {
        serde_json::to_writer(&mut out, f)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_features_csv<R: Read>(input: R) -> Result<Vec<WindowFeature>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    check_header(&mut rdr, &FEATURES_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let int = |i: usize, name: &str| -> Result<usize> {
            rec[i].parse().map_err(|_| Error::Parse {
                line,
                message: format!(
                    "column `{name}`: `{}` is not a non-negative integer",
                    &rec[i]
                ),
            })
        };
        let delta = match &rec[4] {
            "" => None,
            s => Some(parse_f64(s, "delta", line)?),
        };
        let rate = parse_f64(&rec[3], "rate", line)?;
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::Parse {
                line,
                message: format!("rate {rate} outside [0, 1]"),
            });
        }
        out.push(WindowFeature {
            window_index: int(0, "window")?,
            t0: parse_f64(&rec[1], "t0", line)?,
            t1: parse_f64(&rec[2], "t1", line)?,
            rate,
            delta,
            point_count: int(5, "points")?,
        });
    }
    Ok(out)
}

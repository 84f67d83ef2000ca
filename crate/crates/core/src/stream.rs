//! Window-at-a-time processing of a live point stream.
//!
//! A [`StreamProcessor`] holds only the points of the open window and the
//! previous window's rate. Window boundaries, rates and deltas are computed
//! by the same routines as the batch extractor, so a stream and a batch run
//! over the same points agree bit for bit.

use crate::compression::{
    delta_rate, window_bounds, window_rate, CompressionConfig, WindowFeature,
};
use crate::error::{Error, Result};
use crate::predictor::Model;
use crate::trajectory::{Tid, TrajPoint};

/// Output emitted when a window closes.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamRecord {
    pub feature: WindowFeature,
    /// `(predicted delta, running predicted score)` when a model is attached.
    pub prediction: Option<(Option<f64>, f64)>,
}

impl StreamRecord {
    /// `w,rate,delta[,predicted_delta,predicted_score]`; undefined values are empty.
    pub fn to_line(&self) -> String {
        let f = &self.feature;
        let mut line = format!(
            "{},{},{}",
            f.window_index,
            f.rate,
            f.delta.map(|d| d.to_string()).unwrap_or_default()
        );
        if let Some((delta, score)) = self.prediction {
            line.push_str(&format!(
                ",{},{}",
                delta.map(|d| d.to_string()).unwrap_or_default(),
                score
            ));
        }
        line
    }
}

pub struct StreamProcessor {
    window_s: f64,
    cfg: CompressionConfig,
    model: Option<Model>,
    origin: Option<f64>,
    window: usize,
    buf: Vec<TrajPoint>,
    prev_rate: Option<f64>,
    last_t: Option<f64>,
    score: f64,
}

impl StreamProcessor {
    /// `anchor` seeds the running predicted score.
    pub fn new(
        window_s: f64,
        cfg: CompressionConfig,
        model: Option<Model>,
        anchor: f64,
    ) -> Result<Self> {
        if !(window_s > 0.0 && window_s.is_finite()) {
            return Err(Error::invalid(format!(
                "window length must be > 0, got {window_s}"
            )));
        }
        if let Some(m) = &model {
            if m.head() != crate::predictor::Head::Regression {
                return Err(Error::HeadMismatch {
                    expected: "regression",
                    found: m.head().name(),
                });
            }
        }
        Ok(StreamProcessor {
            window_s,
            cfg,
            model,
            origin: None,
            window: 0,
            buf: Vec::new(),
            prev_rate: None,
            last_t: None,
            score: anchor,
        })
    }

    /// Points held for the open window.
    pub fn buffered(&self) -> usize {
        self.buf.len()
    }

    /// Feeds one point. Returns the windows it closed (possibly several when
    /// the stream skips over empty windows). A rejected point leaves the
    /// processor unchanged.
    pub fn push(&mut self, point: TrajPoint) -> Result<Vec<StreamRecord>> {
        if !(point.x.is_finite()
            && point.y.is_finite()
            && point.z.is_finite()
            && point.t.is_finite())
        {
            return Err(Error::invalid("non-finite coordinate"));
        }
        if let Some(last) = self.last_t {
            if !(last < point.t) {
                return Err(Error::NonIncreasingTime {
                    earlier: last,
                    later: point.t,
                });
            }
        }
        let origin = *self.origin.get_or_insert(point.t);
        let mut closed = Vec::new();
        while point.t >= window_bounds(origin, self.window_s, self.window).1 {
            closed.push(self.close_window()?);
        }
        self.last_t = Some(point.t);
        self.buf.push(point);
        Ok(closed)
    }

    /// Closes the open window at end of input.
    pub fn finish(mut self) -> Result<Option<StreamRecord>> {
        if self.origin.is_none() {
            return Ok(None);
        }
        self.close_window().map(Some)
    }

    fn close_window(&mut self) -> Result<StreamRecord> {
        let origin = self.origin.expect("window open");
        let (t0, t1) = window_bounds(origin, self.window_s, self.window);
        let rate = window_rate(&self.buf, &self.cfg)?;
        let feature = WindowFeature {
            window_index: self.window,
            t0,
            t1,
            rate,
            delta: self
                .prev_rate
                .and_then(|p| delta_rate(rate, p, self.cfg.delta_mode())),
            point_count: self.buf.len(),
        };
        let prediction = match &self.model {
            Some(model) => {
                let delta = model.predict_delta(&feature)?;
                self.score += delta.unwrap_or(0.0);
                Some((delta, self.score))
            }
            None => None,
        };
        self.buf.clear();
        self.window += 1;
        self.prev_rate = Some(rate);
        Ok(StreamRecord {
            feature,
            prediction,
        })
    }
}

/// Parses `x,y,z,t` or `tid,x,y,z,t`. Blank lines and a header line yield `None`.
pub fn parse_stream_line(line: &str, default_tid: &Tid) -> Result<Option<TrajPoint>> {
    let line = line.trim();
    if line.is_empty() {
        return Ok(None);
    }
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields == ["x", "y", "z", "t"] || fields == ["tid", "x", "y", "z", "t"] {
        return Ok(None);
    }
    let (tid, nums) = match fields.len() {
        4 => (default_tid.clone(), &fields[..]),
        5 => (Tid::new(fields[0]), &fields[1..]),
        n => return Err(Error::invalid(format!("expected 4 or 5 fields, got {n}"))),
    };
    let mut v = [0.0; 4];
    for (slot, field) in v.iter_mut().zip(nums) {
        *slot = field
            .parse()
            .map_err(|_| Error::invalid(format!("cannot parse `{field}` as a number")))?;
    }
    Ok(Some(TrajPoint::new(tid, v[0], v[1], v[2], v[3])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compression::windowed_features;
    use crate::trajectory::Trajectory;

    fn pts(ts: &[f64]) -> Vec<TrajPoint> {
        ts.iter()
            .map(|&t| TrajPoint::new(Tid::new("a"), t * 0.5, (t * 0.3).sin(), 0.0, t))
            .collect()
    }

    fn run(points: &[TrajPoint], window_s: f64) -> Vec<StreamRecord> {
        let mut sp =
            StreamProcessor::new(window_s, CompressionConfig::default(), None, 0.0).unwrap();
        let mut out = Vec::new();
        for p in points {
            out.extend(sp.push(p.clone()).unwrap());
            assert!(sp.buffered() <= points.len());
        }
        out.extend(sp.finish().unwrap());
        out
    }

    #[test]
    fn matches_batch_including_gaps() {
        let mut ts: Vec<f64> = (0..40).map(|k| k as f64 * 0.5).collect();
        ts.extend((0..30).map(|k| 45.0 + k as f64 * 0.5));
        let points = pts(&ts);
        let batch = windowed_features(
            &Trajectory::from_points(points.clone()),
            6.0,
            &CompressionConfig::default(),
        )
        .unwrap();
        let streamed: Vec<_> = run(&points, 6.0).into_iter().map(|r| r.feature).collect();
        assert_eq!(streamed, batch);
    }

    #[test]
    fn empty_stream_emits_nothing() {
        let sp = StreamProcessor::new(60.0, CompressionConfig::default(), None, 0.0).unwrap();
        assert!(sp.finish().unwrap().is_none());
    }

    #[test]
    fn out_of_order_point_is_rejected_and_stream_continues() {
        let mut sp = StreamProcessor::new(10.0, CompressionConfig::default(), None, 0.0).unwrap();
        let p = pts(&[0.0, 1.0, 0.5, 2.0]);
        sp.push(p[0].clone()).unwrap();
        sp.push(p[1].clone()).unwrap();
        assert!(sp.push(p[2].clone()).is_err());
        sp.push(p[3].clone()).unwrap();
        let last = sp.finish().unwrap().unwrap();
        assert_eq!(last.feature.point_count, 3);
    }

    #[test]
    fn line_format_and_parsing() {
        let tid = Tid::new("s");
        assert_eq!(parse_stream_line("tid,x,y,z,t", &tid).unwrap(), None);
        assert_eq!(parse_stream_line("  ", &tid).unwrap(), None);
        let p = parse_stream_line("1,2,3,4.5", &tid).unwrap().unwrap();
        assert_eq!((p.x, p.t, p.tid.as_str()), (1.0, 4.5, "s"));
        let p = parse_stream_line("u9,1,2,3,4", &tid).unwrap().unwrap();
        assert_eq!(p.tid.as_str(), "u9");
        assert!(parse_stream_line("1,2,x,4", &tid).is_err());
        assert!(parse_stream_line("1,2", &tid).is_err());

        let rec = StreamRecord {
            feature: WindowFeature {
                window_index: 0,
                t0: 0.0,
                t1: 1.0,
                rate: 0.5,
                delta: None,
                point_count: 3,
            },
            prediction: Some((None, 2.0)),
        };
        assert_eq!(rec.to_line(), "0,0.5,,,2");
    }
}

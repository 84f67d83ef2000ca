//! Agreement metrics between reported and predicted discomfort.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictor::Direction;

/// Fractional ranks starting at 1; tied values share their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) share ranks i+1..=j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

fn check_pair(xs: &[f64], ys: &[f64], min_len: usize) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::Shape(format!(
            "lengths differ: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < min_len {
        return Err(Error::TooFewPoints {
            needed: min_len,
            got: xs.len(),
        });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite value"));
    }
    Ok(())
}

/// Pearson product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pair(xs, ys, 2)?;
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate(
            "zero variance: correlation is undefined".into(),
        ));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson correlation of average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pair(xs, ys, 3)?;
    pearson(&average_ranks(xs), &average_ranks(ys))
}

/// Reported and predicted scores on shared timestamps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePair {
    times: Vec<f64>,
    reported: Vec<f64>,
    predicted: Vec<f64>,
}

impl CurvePair {
    pub fn new(times: Vec<f64>, reported: Vec<f64>, predicted: Vec<f64>) -> Result<Self> {
        if times.len() != reported.len() || times.len() != predicted.len() {
            return Err(Error::Shape(
                "times, reported and predicted must have equal lengths".into(),
            ));
        }
        if times.len() < 2 {
            return Err(Error::TooFewPoints {
                needed: 2,
                got: times.len(),
            });
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("curve times must be strictly increasing"));
        }
        if times
            .iter()
            .chain(&reported)
            .chain(&predicted)
            .any(|v| !v.is_finite())
        {
            return Err(Error::invalid("non-finite curve value"));
        }
        Ok(CurvePair {
            times,
            reported,
            predicted,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn reported(&self) -> &[f64] {
        &self.reported
    }

    pub fn predicted(&self) -> &[f64] {
        &self.predicted
    }
}

fn trapezoid(times: &[f64], values: impl Fn(usize) -> f64) -> f64 {
    times
        .windows(2)
        .enumerate()
        .map(|(i, w)| 0.5 * (values(i) + values(i + 1)) * (w[1] - w[0]))
        .sum()
}

/// Area between the curves divided by the area under the reported curve,
/// both by the trapezoidal rule.
pub fn curve_area_error(pair: &CurvePair) -> Result<f64> {
    let reported_area = trapezoid(&pair.times, |i| pair.reported[i]);
    if reported_area == 0.0 {
        return Err(Error::Degenerate("reported curve has zero area".into()));
    }
    let gap = trapezoid(&pair.times, |i| {
        (pair.reported[i] - pair.predicted[i]).abs()
    });
    Ok(gap / reported_area.abs())
}

/// 3x3 counts indexed `[actual][predicted]` over lower/same/higher.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Row-normalised diagonal; `None` for a class with no actual samples.
    pub fn per_class_accuracy(&self) -> [Option<f64>; 3] {
        std::array::from_fn(|i| {
            let row: u64 = self.counts[i].iter().sum();
            (row > 0).then(|| self.counts[i][i] as f64 / row as f64)
        })
    }

    pub fn global_accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        (0..3).map(|i| self.counts[i][i]).sum::<u64>() as f64 / total as f64
    }

    pub fn report(&self) -> ConfusionReport {
        let [lower, same, higher] = self.per_class_accuracy();
        ConfusionReport {
            labels: Direction::ALL
                .map(Direction::as_str)
                .map(String::from)
                .to_vec(),
            counts: self.counts,
            per_class: PerClass {
                lower,
                same,
                higher,
            },
            global: self.global_accuracy(),
            total: self.total(),
        }
    }
}

/// Builds the confusion matrix of `predictions` against `labels`.
pub fn confusion(labels: &[Direction], predictions: &[Direction]) -> Result<ConfusionMatrix> {
    if labels.len() != predictions.len() {
        return Err(Error::Shape(format!(
            "{} labels vs {} predictions",
            labels.len(),
            predictions.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let mut m = ConfusionMatrix::default();
    for (a, p) in labels.iter().zip(predictions) {
        m.counts[a.index()][p.index()] += 1;
    }
    Ok(m)
}

/// [`confusion`] over textual labels (`lower`, `same`, `higher`).
pub fn confusion_from_strs<S: AsRef<str>>(
    labels: &[S],
    predictions: &[S],
) -> Result<ConfusionMatrix> {
    let parse = |xs: &[S]| {
        xs.iter()
            .map(|s| s.as_ref().parse::<Direction>())
            .collect::<Result<Vec<_>>>()
    };
    confusion(&parse(labels)?, &parse(predictions)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerClass {
    pub lower: Option<f64>,
    pub same: Option<f64>,
    pub higher: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionReport {
    pub labels: Vec<String>,
    pub counts: [[u64; 3]; 3],
    pub per_class: PerClass,
    pub global: f64,
    pub total: u64,
}

/// JSON metrics report. Undefined metrics serialise as `null`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub spearman: Option<f64>,
    pub pearson: Option<f64>,
    pub area_error: Option<f64>,
    pub mean_abs_point_diff: Option<f64>,
    pub mean_signed_point_diff: Option<f64>,
    pub confusion: Option<ConfusionReport>,
}

impl MetricsReport {
    /// Curve metrics; signed differences are `predicted - reported`.
    pub fn for_curves(pair: &CurvePair) -> MetricsReport {
        let n = pair.times.len() as f64;
        let diffs: Vec<f64> = pair
            .predicted
            .iter()
            .zip(&pair.reported)
            .map(|(p, r)| p - r)
            .collect();
        MetricsReport {
            spearman: spearman(&pair.reported, &pair.predicted).ok(),
            pearson: pearson(&pair.reported, &pair.predicted).ok(),
            area_error: curve_area_error(pair).ok(),
            mean_abs_point_diff: Some(diffs.iter().map(|d| d.abs()).sum::<f64>() / n),
            mean_signed_point_diff: Some(diffs.iter().sum::<f64>() / n),
            confusion: None,
        }
    }

    pub fn for_confusion(m: &ConfusionMatrix) -> MetricsReport {
        MetricsReport {
            confusion: Some(m.report()),
            ..Default::default()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_average_ties() {
        assert_eq!(
            average_ranks(&[10.0, 20.0, 20.0, 5.0]),
            vec![2.0, 3.5, 3.5, 1.0]
        );
        assert_eq!(average_ranks(&[1.0, 1.0, 1.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn spearman_examples() {
        let up = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!((spearman(&up, &[2.0, 4.0, 8.0, 16.0, 32.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&up, &[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        // d = (1, 1, 1, 1, 0): 1 - 6*4 / (5*24) = 0.8
        let rho = spearman(&up, &[2.0, 1.0, 4.0, 3.0, 5.0]).unwrap();
        assert!((rho - 0.8).abs() < 1e-12, "{rho}");
        assert!(matches!(
            spearman(&up, &[1.0; 5]),
            Err(Error::Degenerate(_))
        ));
        assert!(spearman(&up[..2], &up[..2]).is_err());
    }

    #[test]
    fn pearson_examples() {
        let xs = [1.0, 2.0, 3.0, 5.0, 8.0];
        let affine: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((pearson(&xs, &affine).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-15);
        // spreadsheet CORREL(1,2,3,4,5 ; 2,4,5,4,5) = 0.7745966692414834
        let r = pearson(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 4.0, 5.0, 4.0, 5.0]).unwrap();
        assert!((r - 0.7745966692414834).abs() < 1e-12);
        assert!(pearson(&xs, &[3.0; 5]).is_err());
    }

    #[test]
    fn area_error_examples() {
        let t = vec![0.0, 60.0, 120.0, 180.0];
        let same = CurvePair::new(
            t.clone(),
            vec![1.0, 2.0, 3.0, 2.0],
            vec![1.0, 2.0, 3.0, 2.0],
        )
        .unwrap();
        assert_eq!(curve_area_error(&same).unwrap(), 0.0);
        let off = CurvePair::new(t.clone(), vec![5.0; 4], vec![5.5; 4]).unwrap();
        assert!((curve_area_error(&off).unwrap() - 0.1).abs() < 1e-15);
        let zero = CurvePair::new(t, vec![0.0; 4], vec![1.0; 4]).unwrap();
        assert!(curve_area_error(&zero).is_err());
        assert!(CurvePair::new(vec![0.0, 0.0], vec![1.0; 2], vec![1.0; 2]).is_err());
        assert!(CurvePair::new(vec![0.0], vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn confusion_examples() {
        use Direction::*;
        let all = [Lower, Same, Higher, Higher];
        let m = confusion(&all, &all).unwrap();
        assert_eq!(m.counts, [[1, 0, 0], [0, 1, 0], [0, 0, 2]]);
        assert_eq!(m.global_accuracy(), 1.0);
        assert_eq!(
            confusion(&[Higher], &[Lower]).unwrap().global_accuracy(),
            0.0
        );
        assert!(confusion(&[], &[]).is_err());
        assert!(confusion_from_strs(&["higher"], &["up"]).is_err());
    }

    #[test]
    fn table_test_block() {
        let m = ConfusionMatrix {
            counts: [[5, 0, 1], [0, 1, 1], [0, 1, 13]],
        };
        let [l, s, h] = m.per_class_accuracy();
        assert_eq!(format!("{:.1}", 100.0 * l.unwrap()), "83.3");
        assert_eq!(format!("{:.1}", 100.0 * s.unwrap()), "50.0");
        assert_eq!(format!("{:.1}", 100.0 * h.unwrap()), "92.9");
        assert_eq!(format!("{:.1}", 100.0 * m.global_accuracy()), "86.4");
        assert_eq!(m.total(), 22);
    }

    #[test]
    fn report_json_shape() {
        let pair = CurvePair::new(
            vec![0.0, 1.0, 2.0],
            vec![1.0, 2.0, 3.0],
            vec![1.0, 2.5, 3.0],
        )
        .unwrap();
        let r = MetricsReport::for_curves(&pair);
        let json: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        for key in [
            "spearman",
            "pearson",
            "area_error",
            "mean_abs_point_diff",
            "mean_signed_point_diff",
            "confusion",
        ] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert!(json["confusion"].is_null());
        assert!((r.mean_signed_point_diff.unwrap() - 1.0 / 6.0).abs() < 1e-15);
    }
}

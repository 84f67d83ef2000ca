use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-feature min-max scaler onto `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Scaler {
    /// Fits bounds on `rows`, all of which must share one width.
    pub fn fit<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::invalid("cannot fit a scaler on no samples"))?;
        let width = first.as_ref().len();
        let mut min = vec![f64::INFINITY; width];
        let mut max = vec![f64::NEG_INFINITY; width];
        for row in rows {
            let row = row.as_ref();
            if row.len() != width {
                return Err(Error::Shape(format!(
                    "row of width {} in a width-{width} set",
                    row.len()
                )));
            }
            for (i, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::invalid("non-finite value while fitting scaler"));
                }
                min[i] = min[i].min(v);
                max[i] = max[i].max(v);
            }
        }
        Ok(Scaler { min, max })
    }

    pub fn width(&self) -> usize {
        self.min.len()
    }

    /// `(v - min) / (max - min)` clamped to `[0, 1]`; a constant feature maps to 0.5.
    pub fn transform(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.width() {
            return Err(Error::Shape(format!(
                "{} values for a width-{} scaler",
                values.len(),
                self.width()
            )));
        }
        Ok(values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let span = self.max[i] - self.min[i];
                if span == 0.0 {
                    0.5
                } else {
                    ((v - self.min[i]) / span).clamp(0.0, 1.0)
                }
            })
            .collect())
    }

    /// Maps scaled values back to original units.
    pub fn inverse(&self, scaled: &[f64]) -> Result<Vec<f64>> {
        if scaled.len() != self.width() {
            return Err(Error::Shape(format!(
                "{} values for a width-{} scaler",
                scaled.len(),
                self.width()
            )));
        }
        Ok(scaled
            .iter()
            .enumerate()
            .map(|(i, &s)| self.min[i] + s * (self.max[i] - self.min[i]))
            .collect())
    }
}

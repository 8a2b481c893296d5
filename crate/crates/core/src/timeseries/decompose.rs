use std::io::Write;

use chrono::NaiveDate;
use serde::Serialize;

use crate::error::{Error, Result};

/// Weeks in the annual cycle.
pub const DEFAULT_PERIOD: usize = 52;

/// Additive split `y = trend + seasonal + residual`.
///
/// Trend and residual are `None` on the `period / 2` edge points at each end
/// where the centered moving average is not defined.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub period: usize,
    pub observed: Vec<f64>,
    pub trend: Vec<Option<f64>>,
    pub seasonal: Vec<f64>,
    /// One period of the seasonal effect, de-meaned; index = position mod period.
    pub pattern: Vec<f64>,
    pub residual: Vec<Option<f64>>,
}

impl Decomposition {
    /// Residuals on the range where the trend is defined.
    pub fn residuals(&self) -> Vec<f64> {
        self.residual.iter().flatten().copied().collect()
    }

    /// Index range on which the trend is defined.
    pub fn defined_range(&self) -> std::ops::Range<usize> {
        let half = self.period / 2;
        half..self.observed.len() - half
    }

    /// CSV `date,observed,trend,seasonal,residual`; undefined cells are empty.
    pub fn write_csv<W: Write>(&self, dates: &[NaiveDate], writer: W) -> Result<()> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["date", "observed", "trend", "seasonal", "residual"])?;
        for k in 0..self.observed.len() {
            let date = dates
                .get(k)
                .map(|d| d.format("%Y-%m-%d").to_string())
                .unwrap_or_else(|| k.to_string());
            w.write_record([
                date,
                self.observed[k].to_string(),
                opt(self.trend[k]),
                self.seasonal[k].to_string(),
                opt(self.residual[k]),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Centered moving average; for an even period the window has `period + 1`
/// points with half weight at both ends (2 x period MA).
fn centered_moving_average(y: &[f64], period: usize) -> Vec<Option<f64>> {
    let n = y.len();
    let half = period / 2;
    let weights: Vec<f64> = if period.is_multiple_of(2) {
        let mut w = vec![1.0; period + 1];
        w[0] = 0.5;
        w[period] = 0.5;
        w
    } else {
        vec![1.0; period]
    };
    (0..n)
        .map(|t| {
            if t < half || t + half >= n {
                return None;
            }
            let window = &y[t - half..t - half + weights.len()];
            let sum: f64 = window.iter().zip(&weights).map(|(v, w)| v * w).sum();
            Some(sum / period as f64)
        })
        .collect()
}

/// Classical additive decomposition with a centered moving-average trend and
/// a per-position seasonal mean of the detrended values.
pub fn decompose(values: &[f64], period: usize) -> Result<Decomposition> {
    if period < 2 {
        return Err(Error::Config(format!("period must be >= 2, got {period}")));
    }
    if values.len() < 2 * period {
        return Err(Error::TooShort {
            what: "series",
            needed: 2 * period,
            got: values.len(),
        });
    }
    let trend = centered_moving_average(values, period);

    let mut sums = vec![0.0; period];
    let mut counts = vec![0usize; period];
    for (k, (y, t)) in values.iter().zip(&trend).enumerate() {
        if let Some(t) = t {
            sums[k % period] += y - t;
            counts[k % period] += 1;
        }
    }
    let mut pattern: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    let mean = pattern.iter().sum::<f64>() / period as f64;
    pattern.iter_mut().for_each(|p| *p -= mean);

    let seasonal: Vec<f64> = (0..values.len()).map(|k| pattern[k % period]).collect();
    let residual = values
        .iter()
        .zip(&trend)
        .zip(&seasonal)
        .map(|((y, t), s)| t.map(|t| y - t - s))
        .collect();
    Ok(Decomposition {
        period,
        observed: values.to_vec(),
        trend,
        seasonal,
        pattern,
        residual,
    })
}

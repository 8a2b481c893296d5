//! Weekly series handling: additive decomposition, rescaling, DTW and
//! random-walk baselines.

mod decompose;
mod dtw;
mod walk;

pub use decompose::{decompose, Decomposition, DEFAULT_PERIOD};
pub use dtw::dtw;
pub use walk::{random_walk, walk_from_increments, RNG_ALGORITHM};

use chrono::NaiveDate;
use serde::Serialize;

/// One search term's weekly values, in chronological order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeeklySeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl WeeklySeries {
    /// ISO-8601 label of the first week.
    pub fn start_date(&self) -> Option<String> {
        self.dates.first().map(|d| d.format("%Y-%m-%d").to_string())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Affine map sending the minimum to -1 and the maximum to +1; a constant
/// input maps to zeros.
pub fn normalize_unit_range(values: &[f64]) -> Vec<f64> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = hi - lo;
    if range.is_nan() || range <= 0.0 {
        return vec![0.0; values.len()];
    }
    values
        .iter()
        .map(|v| 2.0 * (v - lo) / range - 1.0)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_range_examples() {
        assert_eq!(
            normalize_unit_range(&[-2.0, 0.0, 2.0]),
            vec![-1.0, 0.0, 1.0]
        );
        assert_eq!(normalize_unit_range(&[1.0, 2.0, 3.0]), vec![-1.0, 0.0, 1.0]);
        assert_eq!(normalize_unit_range(&[5.0, 5.0, 5.0]), vec![0.0; 3]);
        assert!(normalize_unit_range(&[]).is_empty());
    }
}

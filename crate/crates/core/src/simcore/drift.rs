use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-class monthly mean transaction amounts.
///
/// Entry `m - 1` holds the mean for month `m`; means are piecewise constant
/// over a month.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSchedule {
    legit_means: Vec<f64>,
    illicit_means: Vec<f64>,
}

impl DriftSchedule {
    pub fn new(legit_means: Vec<f64>, illicit_means: Vec<f64>) -> Result<Self> {
        if legit_means.len() != illicit_means.len() {
            return Err(Error::config(
                "drift",
                format!(
                    "legit_means has {} entries, illicit_means has {}",
                    legit_means.len(),
                    illicit_means.len()
                ),
            ));
        }
        if legit_means.is_empty() {
            return Err(Error::config("drift", "schedule must cover at least one month"));
        }
        for (name, curve) in [("drift.legit_means", &legit_means), ("drift.illicit_means", &illicit_means)] {
            if let Some(bad) = curve.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                return Err(Error::config(name, format!("entry {bad} is not a positive finite amount")));
            }
        }
        Ok(DriftSchedule {
            legit_means,
            illicit_means,
        })
    }

    pub fn months(&self) -> u32 {
        self.legit_means.len() as u32
    }

    pub fn legit_means(&self) -> &[f64] {
        &self.legit_means
    }

    pub fn illicit_means(&self) -> &[f64] {
        &self.illicit_means
    }

    /// Stored mean for `label_class` (0 legit, 1 fraud) in `month` (1-based).
    pub fn mean_at(&self, label_class: u8, month: u32) -> Result<f64> {
        if month == 0 || month > self.months() {
            return Err(Error::Range {
                what: "month",
                detail: format!("{month} not in 1..={}", self.months()),
            });
        }
        let idx = (month - 1) as usize;
        match label_class {
            0 => Ok(self.legit_means[idx]),
            1 => Ok(self.illicit_means[idx]),
            other => Err(Error::Range {
                what: "label class",
                detail: format!("{other} not in {{0, 1}}"),
            }),
        }
    }
}

/// Linear crossing curves: legit rises from 100 by 45 per month, illicit
/// falls from 640 by 35 per month. They meet at month 7.75, so the sign of
/// `legit - illicit` flips between months 7 and 8.
pub fn default_crossing_schedule(months: u32) -> Result<DriftSchedule> {
    if months < 8 {
        return Err(Error::Range {
            what: "months",
            detail: format!("{months} < 8 puts the crossing outside the horizon"),
        });
    }
    let legit = (0..months).map(|m| 100.0 + 45.0 * m as f64).collect();
    let illicit = (0..months).map(|m| 640.0 - 35.0 * m as f64).collect();
    DriftSchedule::new(legit, illicit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule_values() {
        let s = default_crossing_schedule(12).unwrap();
        assert_eq!(s.mean_at(0, 1).unwrap(), 100.0);
        assert_eq!(s.mean_at(1, 1).unwrap(), 640.0);
        assert_eq!(s.mean_at(0, 8).unwrap(), 415.0);
        assert_eq!(s.mean_at(1, 8).unwrap(), 395.0);
        assert_eq!(s.mean_at(0, 12).unwrap(), 595.0);
        assert_eq!(s.mean_at(1, 12).unwrap(), 255.0);
    }

    #[test]
    fn default_schedule_crosses_once_between_7_and_8() {
        let s = default_crossing_schedule(12).unwrap();
        for m in 1..=12u32 {
            let d = s.mean_at(0, m).unwrap() - s.mean_at(1, m).unwrap();
            if m <= 7 {
                assert!(d < 0.0, "month {m}");
            } else {
                assert!(d > 0.0, "month {m}");
            }
        }
    }

    #[test]
    fn short_horizon_rejected() {
        assert!(matches!(default_crossing_schedule(7), Err(Error::Range { .. })));
        assert!(default_crossing_schedule(8).is_ok());
    }

    #[test]
    fn month_bounds() {
        let s = default_crossing_schedule(12).unwrap();
        assert!(matches!(s.mean_at(0, 0), Err(Error::Range { .. })));
        assert!(matches!(s.mean_at(1, 13), Err(Error::Range { .. })));
    }

    #[test]
    fn mismatched_curves_rejected() {
        assert!(DriftSchedule::new(vec![1.0, 2.0], vec![1.0]).is_err());
        assert!(DriftSchedule::new(vec![1.0], vec![0.0]).is_err());
    }
}

//! Conditional ranks from a reference calibration sample.
//!
//! Each calibration score is mapped to its upper-tail probability in the
//! reference population; the probability expressed as a percentile and
//! multiplied by `scale` is the score's conditional rank. Ranks stay real
//! valued; `rank_display` is the rounded form shown in tables.

use crate::error::{Error, Result};
use crate::stats::{normal_upper_tail, ReferenceDistribution};

pub const DEFAULT_SCALE: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationEntry {
    pub score: f64,
    pub tail_probability: f64,
    pub rank_real: f64,
    pub rank_display: u64,
}

impl CalibrationEntry {
    /// Tail probability in percent, as a percentile table prints it.
    pub fn percentile(&self) -> f64 {
        self.tail_probability * 100.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTable {
    entries: Vec<CalibrationEntry>,
}

impl CalibrationTable {
    /// Wraps already computed entries, checking ordering and positivity.
    pub fn from_entries(entries: Vec<CalibrationEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidInput("calibration table is empty".into()));
        }
        for e in &entries {
            if !(e.rank_real.is_finite() && e.rank_real > 0.0) {
                return Err(Error::InvalidRank(e.rank_real));
            }
            if !(e.tail_probability > 0.0 && e.tail_probability < 1.0) {
                return Err(Error::InvalidInput(format!(
                    "tail probability {} outside (0, 1)",
                    e.tail_probability
                )));
            }
        }
        for w in entries.windows(2) {
            if w[1].score < w[0].score || w[1].rank_real > w[0].rank_real {
                return Err(Error::InvalidInput(format!(
                    "calibration entries out of order at score {}",
                    w[1].score
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[CalibrationEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Real-valued ranks in table order (descending).
    pub fn ranks(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.rank_real).collect()
    }
}

pub fn build_calibration(
    sample: &[f64],
    dist: &ReferenceDistribution,
    scale: f64,
) -> Result<CalibrationTable> {
    if sample.is_empty() {
        return Err(Error::InvalidInput("calibration sample is empty".into()));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidInput(format!(
            "rank scale must be positive, got {scale}"
        )));
    }
    let mut sorted = sample.to_vec();
    if let Some(bad) = sorted.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "calibration score {bad} is not finite"
        )));
    }
    sorted.sort_by(f64::total_cmp);

    let entries = sorted
        .into_iter()
        .map(|score| {
            let tail_probability = normal_upper_tail(score, dist)?;
            let rank_real = tail_probability * 100.0 * scale;
            if rank_real <= 0.0 || rank_real.is_nan() {
                return Err(Error::InvalidRank(rank_real));
            }
            Ok(CalibrationEntry {
                score,
                tail_probability,
                rank_real,
                rank_display: rank_real.round() as u64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    CalibrationTable::from_entries(entries)
}

/// Linearly interpolate the table's ranks onto `target_size` evenly spaced
/// positions. Position `j` (1-based) maps to `1 + (j-1)(m-1)/(n-1)` in the
/// rank sequence, so both endpoints are kept exactly.
pub fn resample_ranks(table: &CalibrationTable, target_size: usize) -> Result<Vec<f64>> {
    resample_sequence(&table.ranks(), target_size)
}

pub(crate) fn resample_sequence(ranks: &[f64], target_size: usize) -> Result<Vec<f64>> {
    let m = ranks.len();
    let n = target_size;
    if m < 2 || n < 2 {
        return Err(Error::InsufficientCalibration {
            ranks: m,
            target: n,
        });
    }
    let denom = n - 1;
    let out = (0..n)
        .map(|j| {
            // integer arithmetic keeps the fractional position exact
            let num = j * (m - 1);
            let lo = num / denom;
            let rem = num % denom;
            if rem == 0 {
                ranks[lo]
            } else {
                let t = rem as f64 / denom as f64;
                ranks[lo] + t * (ranks[lo + 1] - ranks[lo])
            }
        })
        .collect();
    Ok(out)
}

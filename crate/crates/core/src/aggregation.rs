//! Composite ratings and rankings.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Weight of attendance in a two-indicator composite plus per-subject
/// weights (credit hours or expert weights) for the cross-subject rating.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeConfig {
    attendance_weight_k: f64,
    subject_weights: BTreeMap<String, f64>,
}

impl CompositeConfig {
    pub fn new(attendance_weight_k: f64, subject_weights: BTreeMap<String, f64>) -> Result<Self> {
        check_unit_weight(attendance_weight_k)?;
        for (subject, &w) in &subject_weights {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Config(format!(
                    "weight for subject `{subject}` must be positive, got {w}"
                )));
            }
        }
        Ok(Self {
            attendance_weight_k,
            subject_weights,
        })
    }

    pub fn k(&self) -> f64 {
        self.attendance_weight_k
    }

    pub fn subject_weights(&self) -> &BTreeMap<String, f64> {
        &self.subject_weights
    }
}

impl Default for CompositeConfig {
    fn default() -> Self {
        Self {
            attendance_weight_k: 0.33,
            subject_weights: BTreeMap::new(),
        }
    }
}

fn check_unit_weight(k: f64) -> Result<()> {
    if (0.0..=1.0).contains(&k) {
        Ok(())
    } else {
        Err(Error::InvalidWeight(k))
    }
}

/// `(1 - k) * l1 + k * l2`.
pub fn composite(l1: f64, l2: f64, k: f64) -> Result<f64> {
    check_unit_weight(k)?;
    Ok((1.0 - k) * l1 + k * l2)
}

/// Weighted sum of any number of latent values. Weights must lie in [0, 1]
/// and sum to 1; the two-indicator case is `[1 - k, k]`.
pub fn composite_weighted(latents: &[f64], weights: &[f64]) -> Result<f64> {
    if latents.len() != weights.len() || latents.is_empty() {
        return Err(Error::Config(format!(
            "{} latent values but {} weights",
            latents.len(),
            weights.len()
        )));
    }
    for &w in weights {
        check_unit_weight(w)?;
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "indicator weights sum to {total}, expected 1"
        )));
    }
    Ok(latents.iter().zip(weights).map(|(l, w)| l * w).sum())
}

/// `sum(w_i * R_i) / sum(w_i)` over the subjects present in `per_subject`.
pub fn aggregate_subjects(
    per_subject: &BTreeMap<String, f64>,
    weights: &BTreeMap<String, f64>,
) -> Result<f64> {
    if per_subject.is_empty() {
        return Err(Error::Config("no subjects to aggregate".into()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (subject, r) in per_subject {
        let w = *weights
            .get(subject)
            .ok_or_else(|| Error::Config(format!("no weight for subject `{subject}`")))?;
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::Config(format!(
                "weight for subject `{subject}` must be positive, got {w}"
            )));
        }
        num += w * r;
        den += w;
    }
    Ok(num / den)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatingInput {
    pub student_id: String,
    /// Latent value per indicator, in indicator order.
    pub latents: Vec<f64>,
    pub rating: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatingRow {
    pub student_id: String,
    pub latents: Vec<f64>,
    pub rating: f64,
    pub rank_position: usize,
}

impl RatingRow {
    pub fn l1(&self) -> Option<f64> {
        self.latents.first().copied()
    }

    pub fn l2(&self) -> Option<f64> {
        self.latents.get(1).copied()
    }
}

/// Students ordered by descending composite rating.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingReport {
    pub subject: String,
    /// Indicator names matching each row's `latents`.
    pub indicators: Vec<String>,
    pub rows: Vec<RatingRow>,
}

impl RatingReport {
    pub fn row(&self, student_id: &str) -> Option<&RatingRow> {
        self.rows.iter().find(|r| r.student_id == student_id)
    }
}

/// Sort by descending rating (stable) and assign competition ranks: equal
/// ratings share the better position and the next position is skipped.
pub fn rank_report(
    subject: impl Into<String>,
    indicators: Vec<String>,
    inputs: Vec<RatingInput>,
) -> Result<RatingReport> {
    if inputs.is_empty() {
        return Err(Error::InvalidInput("cannot rank an empty cohort".into()));
    }
    let mut inputs = inputs;
    inputs.sort_by(|a, b| b.rating.total_cmp(&a.rating));

    let mut rows: Vec<RatingRow> = Vec::with_capacity(inputs.len());
    for (i, input) in inputs.into_iter().enumerate() {
        let rank_position = match rows.last() {
            Some(prev) if prev.rating == input.rating => prev.rank_position,
            _ => i + 1,
        };
        rows.push(RatingRow {
            student_id: input.student_id,
            latents: input.latents,
            rating: input.rating,
            rank_position,
        });
    }
    Ok(RatingReport {
        subject: subject.into(),
        indicators,
        rows,
    })
}

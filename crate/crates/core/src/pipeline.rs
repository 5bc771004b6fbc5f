//! Per-subject orchestration: gate, calibrate ranks to the cohort, transform
//! each indicator, combine and rank.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::aggregation::{composite_weighted, rank_report, RatingInput, RatingReport};
use crate::calibration::{resample_ranks, CalibrationTable};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::io::{write_curve, write_report};
use crate::latent::{fit_indicator, IndicatorFit, IndicatorSeries};
use crate::validity::{gate_test_scores, ValidityVerdict};

#[derive(Debug, Clone)]
pub struct SubjectInputs {
    pub subject: String,
    pub tests: IndicatorSeries,
    pub attendance: IndicatorSeries,
    pub grades: Option<IndicatorSeries>,
}

#[derive(Debug, Clone)]
pub struct SubjectOutcome {
    pub verdict: ValidityVerdict,
    /// Cohort-sized descending ranks used for every indicator.
    pub ranks: Vec<f64>,
    pub fits: Vec<IndicatorFit>,
    /// Indicators left out of the composite, with the reason.
    pub dropped: Vec<(String, String)>,
    pub report: RatingReport,
}

impl SubjectOutcome {
    pub fn fit(&self, indicator: &str) -> Option<&IndicatorFit> {
        self.fits.iter().find(|f| f.indicator == indicator)
    }
}

fn check_roster(reference: &IndicatorSeries, other: &IndicatorSeries) -> Result<()> {
    let a: BTreeSet<&str> = reference
        .points()
        .iter()
        .map(|p| p.student_id.as_str())
        .collect();
    let b: BTreeSet<&str> = other
        .points()
        .iter()
        .map(|p| p.student_id.as_str())
        .collect();
    if a != b {
        let missing: Vec<&str> = a.symmetric_difference(&b).copied().collect();
        return Err(Error::Roster(format!(
            "`{}` and `{}` cover different students (differing: {})",
            reference.indicator(),
            other.indicator(),
            missing.join(", ")
        )));
    }
    Ok(())
}

pub fn run_subject(
    inputs: &SubjectInputs,
    table: &CalibrationTable,
    cfg: &PipelineConfig,
) -> Result<SubjectOutcome> {
    let tests = &inputs.tests;
    check_roster(tests, &inputs.attendance)?;
    if let Some(grades) = &inputs.grades {
        check_roster(tests, grades)?;
    }

    let verdict = gate_test_scores(&tests.values(), &cfg.validity)?;
    if !verdict.accepted {
        return Err(Error::Rejected {
            skewness: verdict.skewness,
            threshold: cfg.validity.skew_threshold(),
        });
    }

    let ranks = resample_ranks(table, tests.len())?;
    let weights = cfg.indicator_weights(inputs.grades.is_some())?;
    let digits = cfg.coefficient_digits.filter(|&d| d > 0);

    let mut kept: Vec<(&IndicatorSeries, IndicatorFit, f64)> = Vec::new();
    let mut dropped = Vec::new();
    let series = std::iter::once(tests)
        .chain(std::iter::once(&inputs.attendance))
        .chain(inputs.grades.as_ref());
    for (i, s) in series.enumerate() {
        match fit_indicator(s, &ranks, &cfg.zipf, digits) {
            Ok(fit) => kept.push((s, fit, weights[i])),
            Err(Error::DegenerateFit(name)) if i == 1 && cfg.fallback_single_indicator => {
                dropped.push((
                    name,
                    "all values equal; excluded from the composite".to_string(),
                ));
            }
            Err(e) => return Err(e),
        }
    }
    let total: f64 = kept.iter().map(|k| k.2).sum();
    if total <= 0.0 {
        return Err(Error::Config(
            "no indicator weight left after fallback".into(),
        ));
    }
    let weights: Vec<f64> = if dropped.is_empty() {
        kept.iter().map(|k| k.2).collect()
    } else {
        kept.iter().map(|k| k.2 / total).collect()
    };

    let rows = tests
        .points()
        .iter()
        .map(|p| {
            // rosters are equal, so every lookup succeeds
            let latents: Vec<f64> = kept
                .iter()
                .map(|(s, fit, _)| fit.latent_of(s.value_of(&p.student_id).unwrap_or(f64::NAN)))
                .collect();
            let rating = composite_weighted(&latents, &weights)?;
            Ok(RatingInput {
                student_id: p.student_id.clone(),
                latents,
                rating,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let fits: Vec<IndicatorFit> = kept.into_iter().map(|k| k.1).collect();
    let indicators = fits.iter().map(|f| f.indicator.clone()).collect();
    let report = rank_report(inputs.subject.clone(), indicators, rows)?;
    Ok(SubjectOutcome {
        verdict,
        ranks,
        fits,
        dropped,
        report,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn report_path(dir: &Path, subject: &str) -> PathBuf {
    dir.join(format!("{subject}.report.csv"))
}

/// Writes `<subject>.report.csv` and one `<subject>.<indicator>.curve.csv`
/// per fitted indicator; returns the paths written.
pub fn write_outputs(outcome: &SubjectOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let subject = &outcome.report.subject;
    let report = report_path(dir, subject);
    write_report(&outcome.report, create(&report)?)?;
    let mut written = vec![report];
    for fit in &outcome.fits {
        let path = dir.join(format!("{subject}.{}.curve.csv", fit.indicator));
        write_curve(&fit.curve(), create(&path)?)?;
        written.push(path);
    }
    Ok(written)
}

pub fn write_rejection(
    subject: &str,
    skewness: f64,
    threshold: f64,
    dir: &Path,
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{subject}.rejection.txt"));
    let mut f = create(&path)?;
    writeln!(f, "subject: {subject}")?;
    writeln!(f, "skewness: {skewness:.6}")?;
    writeln!(f, "threshold: {threshold}")?;
    writeln!(f, "verdict: left-skewed-rejected")?;
    writeln!(f, "hint: {}", crate::validity::RETEST_HINT)?;
    f.flush()?;
    Ok(path)
}

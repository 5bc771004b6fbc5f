//! Composite student ratings built from ordinal indicators.
//!
//! Raw indicators (test scores, attendance, grades) are not additive: their
//! distributions are deformed copies of the latent trait they measure. This
//! crate moves each indicator onto a common long-tailed latent scale and only
//! then combines them:
//!
//! 1. a reference calibration sample (e.g. IQ scores of a pilot group) gives
//!    conditional population ranks via normal upper-tail probabilities
//!    ([`calibration`]);
//! 2. the ranks are interpolated to the cohort size and paired with students
//!    sorted by each indicator, turned into Zipf values `C / r^(1/alpha)`, and
//!    an exponential `L = a * exp(b * x)` is fitted in log space
//!    ([`latent`]);
//! 3. test distributions with strong left skew are rejected up front
//!    ([`validity`]);
//! 4. latent values are weighted into a per-subject rating and subjects into
//!    an overall rating ([`aggregation`]).
//!
//! [`pipeline::run_subject`] runs the whole chain for one subject.

pub mod aggregation;
pub mod calibration;
pub mod config;
pub mod error;
pub mod io;
pub mod latent;
pub mod pipeline;
pub mod stats;
pub mod validity;

pub use aggregation::{
    aggregate_subjects, composite, composite_weighted, rank_report, CompositeConfig, RatingInput,
    RatingReport, RatingRow,
};
pub use calibration::{build_calibration, resample_ranks, CalibrationEntry, CalibrationTable};
pub use config::{FlatConfig, PipelineConfig};
pub use error::{Error, Result};
pub use latent::{
    apply_transform, fit_exponential, rank_and_pair, zipf_values, ExponentialModel,
    IndicatorSeries, ZipfConfig,
};
pub use pipeline::{run_subject, SubjectInputs, SubjectOutcome};
pub use stats::{normal_upper_tail, sample_skewness, ReferenceDistribution};
pub use validity::{gate_test_scores, ValidityConfig, ValidityVerdict};

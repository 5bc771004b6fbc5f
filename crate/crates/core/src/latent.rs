//! Indicator to latent-scale transforms.
//!
//! A cohort's students are ordered by an indicator, paired with conditional
//! ranks, and each rank is turned into a Zipf value `C / r^(1/alpha)`. An
//! exponential `L = a * exp(b * x)` fitted through those values (least squares
//! on `ln L`) becomes the additive transform for the indicator.

use std::collections::HashSet;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZipfConfig {
    alpha: f64,
    constant: f64,
    round_latent: bool,
}

impl ZipfConfig {
    pub fn new(alpha: f64, constant: f64, round_latent: bool) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 2], got {alpha}"
            )));
        }
        if !(constant.is_finite() && constant > 0.0) {
            return Err(Error::Config(format!(
                "Zipf constant must be positive, got {constant}"
            )));
        }
        Ok(Self {
            alpha,
            constant,
            round_latent,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn round_latent(&self) -> bool {
        self.round_latent
    }
}

impl Default for ZipfConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            constant: 100_000.0,
            round_latent: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorPoint {
    pub student_id: String,
    pub raw_value: f64,
}

/// Raw values of one indicator for one subject, in roster order.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSeries {
    subject: String,
    indicator: String,
    points: Vec<IndicatorPoint>,
}

impl IndicatorSeries {
    pub fn new(
        subject: impl Into<String>,
        indicator: impl Into<String>,
        points: Vec<IndicatorPoint>,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for p in &points {
            if !seen.insert(p.student_id.as_str()) {
                return Err(Error::DuplicateStudent {
                    id: p.student_id.clone(),
                });
            }
            if !p.raw_value.is_finite() {
                return Err(Error::InvalidData(format!(
                    "value for `{}` is not finite",
                    p.student_id
                )));
            }
        }
        Ok(Self {
            subject: subject.into(),
            indicator: indicator.into(),
            points,
        })
    }

    /// Convenience constructor from `(id, value)` pairs.
    pub fn from_pairs<I, S>(subject: &str, indicator: &str, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let points = pairs
            .into_iter()
            .map(|(id, v)| IndicatorPoint {
                student_id: id.into(),
                raw_value: v,
            })
            .collect();
        Self::new(subject, indicator, points)
    }

    pub fn subject(&self) -> &str {
        &self.subject
    }

    pub fn indicator(&self) -> &str {
        &self.indicator
    }

    pub fn points(&self) -> &[IndicatorPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.raw_value).collect()
    }

    pub fn value_of(&self, student_id: &str) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.student_id == student_id)
            .map(|p| p.raw_value)
    }
}

/// `L = scale_a * exp(rate_b * x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialModel {
    scale_a: f64,
    rate_b: f64,
}

impl ExponentialModel {
    pub fn new(scale_a: f64, rate_b: f64) -> Result<Self> {
        if !(scale_a.is_finite() && scale_a > 0.0) || !rate_b.is_finite() {
            return Err(Error::InvalidData(format!(
                "exponential model needs a > 0 and finite b, got a = {scale_a}, b = {rate_b}"
            )));
        }
        Ok(Self { scale_a, rate_b })
    }

    pub fn scale_a(&self) -> f64 {
        self.scale_a
    }

    pub fn rate_b(&self) -> f64 {
        self.rate_b
    }

    /// The same model with both coefficients rounded to `digits` significant
    /// digits, i.e. the curve as it would be printed and re-used by hand.
    pub fn with_significant_digits(&self, digits: u32) -> Self {
        Self {
            scale_a: round_significant(self.scale_a, digits),
            rate_b: round_significant(self.rate_b, digits),
        }
    }

    pub fn apply(&self, raw_value: f64) -> f64 {
        apply_transform(self, raw_value)
    }
}

pub fn apply_transform(model: &ExponentialModel, raw_value: f64) -> f64 {
    model.scale_a * (model.rate_b * raw_value).exp()
}

/// Element-wise `C / r^(1/alpha)`, optionally rounded half away from zero.
pub fn zipf_values(ranks: &[f64], cfg: &ZipfConfig) -> Result<Vec<f64>> {
    let exponent = 1.0 / cfg.alpha;
    ranks
        .iter()
        .map(|&r| {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::InvalidRank(r));
            }
            let v = cfg.constant / r.powf(exponent);
            Ok(if cfg.round_latent { v.round() } else { v })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedPoint {
    pub student_id: String,
    pub raw_value: f64,
    pub rank: f64,
}

/// Order students by ascending raw value (stable, so tied students keep roster
/// order) and pair the i-th with the i-th rank of the descending rank list.
pub fn rank_and_pair(
    series: &IndicatorSeries,
    ranks_descending: &[f64],
) -> Result<Vec<RankedPoint>> {
    if series.len() != ranks_descending.len() {
        return Err(Error::Pairing {
            students: series.len(),
            ranks: ranks_descending.len(),
        });
    }
    let mut order: Vec<&IndicatorPoint> = series.points().iter().collect();
    order.sort_by(|a, b| a.raw_value.total_cmp(&b.raw_value));
    Ok(order
        .into_iter()
        .zip(ranks_descending)
        .map(|(p, &rank)| RankedPoint {
            student_id: p.student_id.clone(),
            raw_value: p.raw_value,
            rank,
        })
        .collect())
}

/// Least-squares line through `(x, ln y)`; slope is the rate, exp(intercept)
/// the scale.
pub fn fit_exponential(pairs: &[(f64, f64)]) -> Result<ExponentialModel> {
    if let Some(&(x, y)) = pairs
        .iter()
        .find(|(x, y)| !(x.is_finite() && y.is_finite() && *y > 0.0))
    {
        return Err(Error::InvalidData(format!(
            "exponential fit needs finite x and positive y, got ({x}, {y})"
        )));
    }
    let distinct = pairs.iter().any(|&(x, _)| x != pairs[0].0);
    if pairs.len() < 2 || !distinct {
        return Err(Error::DegenerateFit("exponential fit".into()));
    }

    let n = pairs.len() as f64;
    let mean_x = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_ly = pairs.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (sxx, sxy) = pairs.iter().fold((0.0, 0.0), |(sxx, sxy), &(x, y)| {
        let dx = x - mean_x;
        (sxx + dx * dx, sxy + dx * (y.ln() - mean_ly))
    });
    let rate_b = sxy / sxx;
    let intercept = mean_ly - rate_b * mean_x;
    ExponentialModel::new(intercept.exp(), rate_b)
}

/// Coefficient of determination of the fit in log space.
pub fn log_r_squared(model: &ExponentialModel, pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    let mean_ly = pairs.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (ss_res, ss_tot) = pairs.iter().fold((0.0, 0.0), |(res, tot), &(x, y)| {
        let ly = y.ln();
        let pred = model.scale_a.ln() + model.rate_b * x;
        (res + (ly - pred).powi(2), tot + (ly - mean_ly).powi(2))
    });
    if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    }
}

/// One row of a fitted-curve dump: `x,empirical_Lprime,fitted_L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub empirical: f64,
    pub fitted: f64,
}

/// Everything produced when one indicator is carried to the latent scale.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorFit {
    pub indicator: String,
    pub ranked: Vec<RankedPoint>,
    pub zipf: Vec<f64>,
    /// Model as fitted.
    pub fitted: ExponentialModel,
    /// Model used to compute latent values (possibly coefficient-rounded).
    pub model: ExponentialModel,
    pub r_squared: f64,
}

impl IndicatorFit {
    pub fn curve(&self) -> Vec<CurvePoint> {
        self.ranked
            .iter()
            .zip(&self.zipf)
            .map(|(p, &z)| CurvePoint {
                x: p.raw_value,
                empirical: z,
                fitted: self.model.apply(p.raw_value),
            })
            .collect()
    }

    pub fn latent_of(&self, raw_value: f64) -> f64 {
        self.model.apply(raw_value)
    }
}

/// Pair, Zipf-transform and fit one indicator. `coefficient_digits` of
/// `None` keeps the fitted coefficients at full precision.
pub fn fit_indicator(
    series: &IndicatorSeries,
    ranks_descending: &[f64],
    cfg: &ZipfConfig,
    coefficient_digits: Option<u32>,
) -> Result<IndicatorFit> {
    let ranked = rank_and_pair(series, ranks_descending)?;
    let rank_list: Vec<f64> = ranked.iter().map(|p| p.rank).collect();
    let zipf = zipf_values(&rank_list, cfg)?;
    let pairs: Vec<(f64, f64)> = ranked
        .iter()
        .map(|p| p.raw_value)
        .zip(zipf.iter().copied())
        .collect();
    let fitted = fit_exponential(&pairs).map_err(|e| match e {
        Error::DegenerateFit(_) => Error::DegenerateFit(series.indicator().to_string()),
        other => other,
    })?;
    let model = match coefficient_digits {
        Some(d) => fitted.with_significant_digits(d),
        None => fitted,
    };
    Ok(IndicatorFit {
        indicator: series.indicator().to_string(),
        r_squared: log_r_squared(&fitted, &pairs),
        ranked,
        zipf,
        fitted,
        model,
    })
}

fn round_significant(x: f64, digits: u32) -> f64 {
    if x == 0.0 || !x.is_finite() || digits == 0 {
        return x;
    }
    let magnitude = x.abs().log10().floor() as i32;
    let factor = 10f64.powi(digits as i32 - 1 - magnitude);
    (x * factor).round() / factor
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn zipf_examples() {
        let cfg = ZipfConfig::default();
        assert_eq!(zipf_values(&[3773.3], &cfg).unwrap(), [27.0]);
        assert_eq!(zipf_values(&[100_000.0], &cfg).unwrap(), [1.0]);
        assert_eq!(zipf_values(&[195.81], &cfg).unwrap(), [511.0]);
        let raw = ZipfConfig::new(1.0, 100_000.0, false).unwrap();
        let v = zipf_values(&[3773.3], &raw).unwrap()[0];
        assert!((v - 26.502).abs() < 1e-3);
    }

    #[test]
    fn zipf_alpha() {
        let cfg = ZipfConfig::new(0.5, 1.0, false).unwrap();
        // 1 / 4^2
        assert!((zipf_values(&[4.0], &cfg).unwrap()[0] - 0.0625).abs() < 1e-15);
        let cfg = ZipfConfig::new(2.0, 10.0, false).unwrap();
        assert!((zipf_values(&[25.0], &cfg).unwrap()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zipf_rejects_bad_ranks() {
        let cfg = ZipfConfig::default();
        assert!(matches!(
            zipf_values(&[10.0, 0.0], &cfg),
            Err(Error::InvalidRank(_))
        ));
        assert!(zipf_values(&[-1.0], &cfg).is_err());
    }

    #[test]
    fn zipf_config_bounds() {
        assert!(ZipfConfig::new(0.0, 1.0, true).is_err());
        assert!(ZipfConfig::new(2.5, 1.0, true).is_err());
        assert!(ZipfConfig::new(2.0, 1.0, true).is_ok());
        assert!(ZipfConfig::new(1.0, 0.0, true).is_err());
    }

    #[test]
    fn pairing_orders_attendance_like_table_4() {
        let s = IndicatorSeries::from_pairs(
            "x",
            "attendance",
            [
                ("А", 3.),
                ("Б", 4.),
                ("В", 6.),
                ("Г", 4.),
                ("Д", 3.),
                ("Е", 9.),
                ("Ж", 5.),
                ("З", 7.),
                ("И", 6.),
                ("К", 6.),
            ],
        )
        .unwrap();
        let ranks: Vec<f64> = (0..10).rev().map(|i| (i + 1) as f64).collect();
        let paired = rank_and_pair(&s, &ranks).unwrap();
        let order: String = paired.iter().map(|p| p.student_id.as_str()).collect();
        assert_eq!(order, "АДБГЖВИКЗЕ");
        assert_eq!(paired[0].rank, 10.0);
        assert_eq!(paired[1].rank, 9.0);
    }

    #[test]
    fn pairing_identity_and_ties() {
        let s = IndicatorSeries::from_pairs("x", "t", [("a", 1.), ("b", 2.), ("c", 3.)]).unwrap();
        let p = rank_and_pair(&s, &[30., 20., 10.]).unwrap();
        assert_eq!(
            p.iter().map(|p| p.student_id.as_str()).collect::<Vec<_>>(),
            ["a", "b", "c"]
        );

        let s = IndicatorSeries::from_pairs("x", "t", [("z", 5.), ("y", 5.), ("x", 1.)]).unwrap();
        let p = rank_and_pair(&s, &[30., 20., 10.]).unwrap();
        assert_eq!(p[1].student_id, "z");
        assert_eq!(p[2].student_id, "y");
        assert_eq!((p[1].rank, p[2].rank), (20., 10.));
    }

    #[test]
    fn pairing_length_mismatch() {
        let s = IndicatorSeries::from_pairs("x", "t", [("a", 1.), ("b", 2.)]).unwrap();
        assert!(matches!(
            rank_and_pair(&s, &[1.0]),
            Err(Error::Pairing {
                students: 2,
                ranks: 1
            })
        ));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let r = IndicatorSeries::from_pairs("x", "t", [("a", 1.), ("a", 2.)]);
        assert!(matches!(r, Err(Error::DuplicateStudent { .. })));
    }

    #[test]
    fn two_point_fit_is_exact() {
        let m = fit_exponential(&[(0.0, E), (1.0, E * E)]).unwrap();
        assert!(rel(m.scale_a(), E) < 1e-14);
        assert!((m.rate_b() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(
            fit_exponential(&[(1.0, 2.0), (1.0, 3.0)]),
            Err(Error::DegenerateFit(_))
        ));
        assert!(matches!(
            fit_exponential(&[(1.0, 2.0)]),
            Err(Error::DegenerateFit(_))
        ));
        assert!(matches!(
            fit_exponential(&[(1.0, 2.0), (2.0, 0.0)]),
            Err(Error::InvalidData(_))
        ));
        assert!(matches!(
            fit_exponential(&[(1.0, 2.0), (2.0, -1.0)]),
            Err(Error::InvalidData(_))
        ));
    }

    #[test]
    fn apply_examples() {
        let m = ExponentialModel::new(9.86, 0.123).unwrap();
        assert!((m.apply(6.0) - 20.6).abs() < 0.05);
        assert_eq!(m.apply(6.0).round(), 21.0);
        assert_eq!(m.apply(33.0).round(), 571.0);
        let flat = ExponentialModel::new(3.5, 0.0).unwrap();
        assert_eq!(flat.apply(123.0), 3.5);
    }

    #[test]
    fn significant_digits() {
        let m = ExponentialModel::new(9.858508, 0.1225766)
            .unwrap()
            .with_significant_digits(3);
        assert_eq!(m.scale_a(), 9.86);
        assert_eq!(m.rate_b(), 0.123);
        assert_eq!(round_significant(-0.0004944, 2), -0.00049);
        assert_eq!(round_significant(1234.5, 2), 1200.0);
    }

    #[test]
    fn model_invariants() {
        assert!(ExponentialModel::new(0.0, 1.0).is_err());
        assert!(ExponentialModel::new(1.0, f64::NAN).is_err());
    }

    #[test]
    fn degenerate_indicator_names_itself() {
        let s = IndicatorSeries::from_pairs("x", "attendance", [("a", 4.), ("b", 4.)]).unwrap();
        let err = fit_indicator(&s, &[200., 100.], &ZipfConfig::default(), None).unwrap_err();
        assert!(matches!(err, Error::DegenerateFit(ref n) if n == "attendance"));
    }

    fn sample_xs() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-5.0f64..5.0, 3..15)
            .prop_filter("distinct", |xs| xs.iter().any(|&x| (x - xs[0]).abs() > 0.1))
    }

    proptest! {
        #[test]
        fn exact_recovery(xs in sample_xs(), a in 0.1f64..100.0, b in -1.0f64..1.0) {
            let pairs: Vec<_> = xs.iter().map(|&x| (x, a * (b * x).exp())).collect();
            let m = fit_exponential(&pairs).unwrap();
            prop_assert!(rel(m.scale_a(), a) < 1e-9);
            prop_assert!((m.rate_b() - b).abs() <= 1e-9 * b.abs().max(1e-3));
        }

        #[test]
        fn affine_invariance_of_predictions(
            xs in sample_xs(),
            ys in prop::collection::vec(0.5f64..500.0, 15),
            c1 in prop::sample::select(vec![-3.0, 0.5, 2.0, 10.0]),
            c2 in -10.0f64..10.0,
            at in -5.0f64..5.0,
        ) {
            let pairs: Vec<_> = xs.iter().copied().zip(ys.iter().copied()).collect();
            let moved: Vec<_> = pairs.iter().map(|&(x, y)| (c1 * x + c2, y)).collect();
            let base = fit_exponential(&pairs).unwrap().apply(at);
            let other = fit_exponential(&moved).unwrap().apply(c1 * at + c2);
            prop_assert!(rel(other, base) < 1e-9);
        }

        #[test]
        fn constant_scaling(ranks in prop::collection::vec(1.0f64..1e4, 3..12), gamma in 0.01f64..100.0) {
            let xs: Vec<f64> = (0..ranks.len()).map(|i| i as f64).collect();
            let base_cfg = ZipfConfig::new(1.0, 1000.0, false).unwrap();
            let scaled_cfg = ZipfConfig::new(1.0, 1000.0 * gamma, false).unwrap();
            let fit = |cfg: &ZipfConfig| {
                let z = zipf_values(&ranks, cfg).unwrap();
                fit_exponential(&xs.iter().copied().zip(z).collect::<Vec<_>>()).unwrap()
            };
            let (m0, m1) = (fit(&base_cfg), fit(&scaled_cfg));
            prop_assert!((m0.rate_b() - m1.rate_b()).abs() < 1e-9 * m0.rate_b().abs().max(1.0));
            for &x in &xs {
                prop_assert!(rel(m1.apply(x), gamma * m0.apply(x)) < 1e-9);
            }
        }

        #[test]
        fn zipf_decreasing(r in 1.0f64..1e6, dr in 1e-3f64..1e3, alpha in 0.1f64..2.0) {
            let cfg = ZipfConfig::new(alpha, 100_000.0, false).unwrap();
            let v = zipf_values(&[r, r + dr], &cfg).unwrap();
            prop_assert!(v[0] > v[1]);
        }

        #[test]
        fn transform_increasing(a in 0.1f64..100.0, b in 0.001f64..1.0, x in -10.0f64..10.0, dx in 1e-3f64..5.0) {
            let m = ExponentialModel::new(a, b).unwrap();
            prop_assert!(m.apply(x + dx) > m.apply(x));
        }
    }
}

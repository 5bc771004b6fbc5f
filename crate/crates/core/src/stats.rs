//! Normal reference tails and sample skewness.

use std::f64::consts::SQRT_2;

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Mean and standard deviation of the population trait the calibration
/// sample is compared against (IQ-style scale by default).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceDistribution {
    mean: f64,
    sd: f64,
}

impl ReferenceDistribution {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::InvalidInput(format!(
                "reference mean {mean} is not finite"
            )));
        }
        if !(sd.is_finite() && sd > 0.0) {
            return Err(Error::InvalidInput(format!(
                "reference standard deviation must be positive, got {sd}"
            )));
        }
        Ok(Self { mean, sd })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sd(&self) -> f64 {
        self.sd
    }
}

impl Default for ReferenceDistribution {
    fn default() -> Self {
        Self {
            mean: 100.0,
            sd: 16.0,
        }
    }
}

/// P(X >= x) for X ~ Normal(mean, sd).
pub fn normal_upper_tail(x: f64, dist: &ReferenceDistribution) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::InvalidInput(format!("score {x} is not finite")));
    }
    let z = (x - dist.mean) / dist.sd;
    Ok(0.5 * erfc(z / SQRT_2))
}

/// Adjusted Fisher-Pearson skewness, `n / ((n-1)(n-2)) * sum(((x - mean) / s)^3)`
/// with `s` the (n-1) sample standard deviation. This is the coefficient
/// spreadsheet `SKEW` functions report.
pub fn sample_skewness(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("value {bad} is not finite")));
    }
    if values.iter().all(|&v| v == values[0]) {
        return Err(Error::DegenerateSample);
    }

    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    let s = (ss / (nf - 1.0)).sqrt();
    if s == 0.0 {
        return Err(Error::DegenerateSample);
    }
    let cubes: f64 = values.iter().map(|v| ((v - mean) / s).powi(3)).sum();
    Ok(nf / ((nf - 1.0) * (nf - 2.0)) * cubes)
}

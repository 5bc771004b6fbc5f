//! Flat `key = value` configuration files.
//!
//! Keys are the long flag names of the CLI subcommand they configure; `#`
//! starts a comment. Values are kept as strings and typed on lookup.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::aggregation::CompositeConfig;
use crate::error::{Error, Result};
use crate::latent::ZipfConfig;
use crate::stats::ReferenceDistribution;
use crate::validity::ValidityConfig;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlatConfig {
    values: BTreeMap<String, String>,
}

impl FlatConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", i + 1)));
            }
            if values
                .insert(key.to_string(), value.trim().to_string())
                .is_some()
            {
                return Err(Error::Config(format!(
                    "line {}: key `{key}` repeated",
                    i + 1
                )));
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Fails on any key outside `known`.
    pub fn check_keys(&self, known: &[&str]) -> Result<()> {
        match self.values.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(Error::Config(format!("unknown key `{k}`"))),
            None => Ok(()),
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("key `{key}`: cannot parse `{v}`")))
            })
            .transpose()
    }

    pub fn flag(&self, key: &str) -> Result<bool> {
        match self.raw(key) {
            None => Ok(false),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(Error::Config(format!(
                "key `{key}`: expected true/false, got `{v}`"
            ))),
        }
    }
}

/// Settings for a per-subject rating run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub reference: ReferenceDistribution,
    pub zipf: ZipfConfig,
    pub validity: ValidityConfig,
    pub composite: CompositeConfig,
    /// Weight of an optional grades indicator; tests get `1 - k - grades_weight`.
    pub grades_weight: f64,
    /// Round fitted coefficients to this many significant digits before use.
    pub coefficient_digits: Option<u32>,
    /// Drop a degenerate attendance indicator instead of failing.
    pub fallback_single_indicator: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            reference: ReferenceDistribution::default(),
            zipf: ZipfConfig::default(),
            validity: ValidityConfig::default(),
            composite: CompositeConfig::default(),
            grades_weight: 0.0,
            coefficient_digits: Some(3),
            fallback_single_indicator: false,
        }
    }
}

impl PipelineConfig {
    /// Indicator weights in order tests, attendance, grades.
    pub fn indicator_weights(&self, with_grades: bool) -> Result<Vec<f64>> {
        let k = self.composite.k();
        let g = if with_grades { self.grades_weight } else { 0.0 };
        if !(0.0..=1.0).contains(&g) {
            return Err(Error::InvalidWeight(g));
        }
        let tests = 1.0 - k - g;
        if tests < -1e-12 {
            return Err(Error::Config(format!(
                "k ({k}) plus grades weight ({g}) exceeds 1"
            )));
        }
        let mut w = vec![tests.max(0.0), k];
        if with_grades {
            w.push(g);
        }
        Ok(w)
    }
}

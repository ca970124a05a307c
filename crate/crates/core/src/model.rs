//! One entry point over the six estimators.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::interval::{Interval, Theta};
use crate::multiple::{fit_mblrm, fit_mflrm, fit_multiple_m, IntervalDataset, MultipleFit};
use crate::simple::{fit_basic, fit_mg, fit_model_m, SimpleFit};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "basic")]
    Basic,
    #[serde(rename = "m")]
    ModelM,
    #[serde(rename = "mg")]
    ModelMG,
    #[serde(rename = "mblrm")]
    Mblrm,
    #[serde(rename = "mflrm")]
    Mflrm,
    #[serde(rename = "multiple-m")]
    MultipleM,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Basic,
        ModelKind::ModelM,
        ModelKind::ModelMG,
        ModelKind::Mblrm,
        ModelKind::Mflrm,
        ModelKind::MultipleM,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Basic => "basic",
            ModelKind::ModelM => "m",
            ModelKind::ModelMG => "mg",
            ModelKind::Mblrm => "mblrm",
            ModelKind::Mflrm => "mflrm",
            ModelKind::MultipleM => "multiple-m",
        }
    }

    /// Simple models take exactly one predictor.
    pub fn is_simple(self) -> bool {
        matches!(self, ModelKind::Basic | ModelKind::ModelM | ModelKind::ModelMG)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown model {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Simple(SimpleFit),
    Multiple(MultipleFit),
}

impl FittedModel {
    pub fn fit(kind: ModelKind, ds: &IntervalDataset, theta: Theta) -> Result<Self> {
        if kind.is_simple() {
            if ds.k() != 1 {
                return Err(Error::ArityMismatch {
                    expected: 1,
                    found: ds.k(),
                });
            }
            let (x, y) = (&ds.predictors()[0], ds.response());
            let fit = match kind {
                ModelKind::Basic => fit_basic(x, y, theta)?,
                ModelKind::ModelM => fit_model_m(x, y, theta)?,
                _ => fit_mg(x, y, theta)?,
            };
            return Ok(FittedModel::Simple(fit));
        }
        let fit = match kind {
            ModelKind::Mblrm => fit_mblrm(ds, theta)?,
            ModelKind::Mflrm => fit_mflrm(ds, theta)?,
            _ => fit_multiple_m(ds, theta)?,
        };
        Ok(FittedModel::Multiple(fit))
    }

    pub fn kind(&self) -> ModelKind {
        use crate::multiple::MultipleKind;
        use crate::simple::SimpleKind;
        match self {
            FittedModel::Simple(f) => match f.kind() {
                SimpleKind::Basic => ModelKind::Basic,
                SimpleKind::ModelM => ModelKind::ModelM,
                SimpleKind::ModelMG => ModelKind::ModelMG,
            },
            FittedModel::Multiple(f) => match f.kind() {
                MultipleKind::Mblrm => ModelKind::Mblrm,
                MultipleKind::Mflrm => ModelKind::Mflrm,
                MultipleKind::MultipleM => ModelKind::MultipleM,
            },
        }
    }

    pub fn k(&self) -> usize {
        match self {
            FittedModel::Simple(_) => 1,
            FittedModel::Multiple(f) => f.k(),
        }
    }

    pub fn delta(&self) -> Interval {
        match self {
            FittedModel::Simple(f) => f.delta,
            FittedModel::Multiple(f) => f.delta,
        }
    }

    pub fn theta(&self) -> Theta {
        match self {
            FittedModel::Simple(f) => f.theta,
            FittedModel::Multiple(f) => f.theta,
        }
    }

    pub fn r_squared(&self) -> f64 {
        match self {
            FittedModel::Simple(f) => f.r_squared,
            FittedModel::Multiple(f) => f.r_squared,
        }
    }

    pub fn objective(&self) -> f64 {
        match self {
            FittedModel::Simple(f) => f.objective,
            FittedModel::Multiple(f) => f.objective,
        }
    }

    /// Present for the QP-backed multiple models.
    pub fn kkt_residual(&self) -> Option<f64> {
        match self {
            FittedModel::Simple(_) => None,
            FittedModel::Multiple(f) => Some(f.kkt_residual),
        }
    }

    pub fn named_coefficients(&self, predictors: &[String]) -> Vec<(String, f64)> {
        match self {
            FittedModel::Simple(f) => f
                .coefficients
                .named()
                .into_iter()
                .map(|(n, v)| (n.to_string(), v))
                .collect(),
            FittedModel::Multiple(f) => f.coefficients.named(predictors),
        }
    }

    pub fn predict(&self, row: &[Interval]) -> Result<Interval> {
        match self {
            FittedModel::Simple(f) => Ok(f.predict(single(row)?)),
            FittedModel::Multiple(f) => f.predict(row),
        }
    }

    /// Prediction without the intercept.
    pub fn systematic(&self, row: &[Interval]) -> Result<Interval> {
        match self {
            FittedModel::Simple(f) => Ok(f.systematic(single(row)?)),
            FittedModel::Multiple(f) => f.systematic(row),
        }
    }
}

fn single(row: &[Interval]) -> Result<&Interval> {
    match row {
        [x] => Ok(x),
        _ => Err(Error::LengthMismatch {
            expected: 1,
            found: row.len(),
        }),
    }
}

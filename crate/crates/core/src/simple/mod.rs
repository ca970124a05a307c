//! Simple (one-regressor) interval linear models: the basic model, model M
//! and the flexible model M_G.

mod estimate;
mod gamma;

pub use estimate::{fit_basic, fit_mg, fit_model_m, mg_spread_candidates, CandidateSource, SpreadCandidate, SpreadSearch};
pub use gamma::{GammaG, Line, Segment};

use serde::{Deserialize, Serialize};

use crate::interval::{Interval, IntervalSample, Theta};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimpleKind {
    Basic,
    ModelM,
    ModelMG,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SimpleCoefficients {
    Basic { b: f64 },
    ModelM { b1: f64, b2: f64 },
    ModelMG { b1: f64, b2: f64, b3: f64, b4: f64 },
}

impl SimpleCoefficients {
    pub fn kind(&self) -> SimpleKind {
        match self {
            SimpleCoefficients::Basic { .. } => SimpleKind::Basic,
            SimpleCoefficients::ModelM { .. } => SimpleKind::ModelM,
            SimpleCoefficients::ModelMG { .. } => SimpleKind::ModelMG,
        }
    }

    /// Coefficients on the canonical components `(x^M, x^S, x^C, x^R)`.
    /// The basic model `b·x` is `b·x^M + |b|·x^S`.
    pub fn canonical(&self) -> [f64; 4] {
        match *self {
            SimpleCoefficients::Basic { b } => [b, b.abs(), 0.0, 0.0],
            SimpleCoefficients::ModelM { b1, b2 } => [b1, b2, 0.0, 0.0],
            SimpleCoefficients::ModelMG { b1, b2, b3, b4 } => [b1, b2, b3, b4],
        }
    }

    /// `(name, value)` pairs in reporting order.
    pub fn named(&self) -> Vec<(&'static str, f64)> {
        match *self {
            SimpleCoefficients::Basic { b } => vec![("b", b)],
            SimpleCoefficients::ModelM { b1, b2 } => vec![("b1", b1), ("b2", b2)],
            SimpleCoefficients::ModelMG { b1, b2, b3, b4 } => {
                vec![("b1", b1), ("b2", b2), ("b3", b3), ("b4", b4)]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimpleFit {
    pub coefficients: SimpleCoefficients,
    pub delta: Interval,
    pub theta: Theta,
    pub r_squared: f64,
    pub objective: f64,
}

impl SimpleFit {
    pub fn kind(&self) -> SimpleKind {
        self.coefficients.kind()
    }

    /// Fitted value without the intercept `Δ̂`.
    pub fn systematic(&self, x: &Interval) -> Interval {
        let [b1, b2, b3, b4] = self.coefficients.canonical();
        Interval::new_unchecked(
            b1 * x.mid() + b4 * x.spr(),
            b2 * x.spr() + b3 * x.mid().abs(),
        )
    }

    pub fn predict(&self, x: &Interval) -> Interval {
        let s = self.systematic(x);
        Interval::new_unchecked(s.mid() + self.delta.mid(), s.spr() + self.delta.spr())
    }

    pub fn predict_sample(&self, x: &IntervalSample) -> Vec<Interval> {
        x.iter().map(|xi| self.predict(xi)).collect()
    }

    /// `ε̂_j = y_j −_H (fitted part without Δ̂)`.
    pub fn residuals(&self, x: &IntervalSample, y: &IntervalSample) -> Result<Residuals> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        let values = x
            .iter()
            .zip(y.iter())
            .map(|(xi, yi)| yi.hukuhara_diff(&self.systematic(xi)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Residuals { values })
    }

    pub fn r_squared(&self, x: &IntervalSample, y: &IntervalSample, theta: Theta) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        r_squared(y, &self.predict_sample(x), theta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub values: Vec<Interval>,
}

impl Residuals {
    pub fn values(&self) -> &[Interval] {
        &self.values
    }

    pub fn mean(&self) -> Result<Interval> {
        IntervalSample::new("residuals", self.values.clone()).mean()
    }
}

/// `1 − Σ d²(y_j, ŷ_j) / Σ d²(y_j, ȳ)`, clamped to `[0, 1]`.
pub fn r_squared(y: &IntervalSample, fitted: &[Interval], theta: Theta) -> Result<f64> {
    if y.len() != fitted.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            found: fitted.len(),
        });
    }
    if y.len() < 2 {
        return Err(Error::TooFewObservations {
            needed: 2,
            found: y.len(),
        });
    }
    let ybar = y.mean()?;
    let total: f64 = y.iter().map(|yi| yi.d_theta_sq(&ybar, theta)).sum();
    if total <= 0.0 {
        return Err(Error::DegenerateResponse);
    }
    let resid: f64 = y
        .iter()
        .zip(fitted)
        .map(|(yi, fi)| yi.d_theta_sq(fi, theta))
        .sum();
    Ok((1.0 - resid / total).clamp(0.0, 1.0))
}

/// Mean squared `d_θ` distance between observed and fitted values.
pub fn mean_sq_distance(y: &IntervalSample, fitted: &[Interval], theta: Theta) -> f64 {
    y.iter()
        .zip(fitted)
        .map(|(yi, fi)| yi.d_theta_sq(fi, theta))
        .sum::<f64>()
        / y.len() as f64
}

//! Compact real intervals in (mid, spr) coordinates and their sample moments.
//!
//! Intervals are stored as a midpoint and a spread (half-width). Minkowski
//! addition and scalar multiplication are combined in [`Interval::add_scaled`];
//! the Hukuhara difference is the partial inverse of addition. Sample moments
//! use the `d_θ` geometry, where the spread component is weighted by `θ`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for the Hukuhara existence check.
///
/// Least-squares fits land on the boundary of their feasible set, where a
/// residual spread is analytically zero but numerically a few ulps negative.
pub const HUKUHARA_TOL: f64 = 1e-9;

/// A compact interval `[mid ± spr]` with `spr >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    mid: f64,
    spr: f64,
}

impl Interval {
    pub const ZERO: Interval = Interval { mid: 0.0, spr: 0.0 };

    /// Builds `[mid ± spr]`. Negative or non-finite spreads are rejected.
    pub fn new(mid: f64, spr: f64) -> Result<Self> {
        if !(spr >= 0.0) || !mid.is_finite() || !spr.is_finite() {
            return Err(Error::InvalidEndpoints {
                inf: mid - spr,
                sup: mid + spr,
            });
        }
        Ok(Self { mid, spr })
    }

    /// For spreads known to be nonnegative by construction.
    pub(crate) fn new_unchecked(mid: f64, spr: f64) -> Self {
        Self { mid, spr }
    }

    /// `[mid ± 0]`.
    pub fn point(mid: f64) -> Self {
        Self { mid, spr: 0.0 }
    }

    /// `[0 ± spr]` for `spr >= 0`; the magnitude of `spr` is taken.
    pub fn centered(spr: f64) -> Self {
        Self {
            mid: 0.0,
            spr: spr.abs(),
        }
    }

    /// Builds `[inf, sup]`. The comparison is exact.
    pub fn from_endpoints(inf: f64, sup: f64) -> Result<Self> {
        if !(inf <= sup) || !inf.is_finite() || !sup.is_finite() {
            return Err(Error::InvalidEndpoints { inf, sup });
        }
        Ok(Self {
            mid: (sup + inf) / 2.0,
            spr: (sup - inf) / 2.0,
        })
    }

    #[inline]
    pub fn mid(&self) -> f64 {
        self.mid
    }

    #[inline]
    pub fn spr(&self) -> f64 {
        self.spr
    }

    #[inline]
    pub fn inf(&self) -> f64 {
        self.mid - self.spr
    }

    #[inline]
    pub fn sup(&self) -> f64 {
        self.mid + self.spr
    }

    /// Minkowski `self + λ·other`: mids combine linearly, spreads with `|λ|`.
    #[inline]
    pub fn add_scaled(&self, lambda: f64, other: &Interval) -> Interval {
        Interval {
            mid: self.mid + lambda * other.mid,
            spr: self.spr + lambda.abs() * other.spr,
        }
    }

    /// `λ·self`.
    #[inline]
    pub fn scale(&self, lambda: f64) -> Interval {
        Interval::ZERO.add_scaled(lambda, self)
    }

    /// Hukuhara difference `self −_H other`, the `C` with `other + C = self`.
    ///
    /// Exists iff `spr other <= spr self`; spreads within [`HUKUHARA_TOL`] below
    /// zero are clamped to zero.
    pub fn hukuhara_diff(&self, other: &Interval) -> Result<Interval> {
        let spr = self.spr - other.spr;
        if spr < -HUKUHARA_TOL {
            return Err(Error::NoHukuharaDifference {
                minuend: self.spr,
                subtrahend: other.spr,
            });
        }
        Ok(Interval {
            mid: self.mid - other.mid,
            spr: spr.max(0.0),
        })
    }

    /// The `d_θ` distance.
    #[inline]
    pub fn d_theta(&self, other: &Interval, theta: Theta) -> f64 {
        self.d_theta_sq(other, theta).sqrt()
    }

    #[inline]
    pub fn d_theta_sq(&self, other: &Interval, theta: Theta) -> f64 {
        let dm = self.mid - other.mid;
        let ds = self.spr - other.spr;
        dm * dm + theta.value() * ds * ds
    }

    /// The four canonical components `(x^M, x^S, x^C, x^R)`.
    pub fn canonical(&self) -> [Interval; 4] {
        [
            Interval::point(self.mid),
            Interval::centered(self.spr),
            Interval::centered(self.mid.abs()),
            Interval::point(self.spr),
        ]
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} ± {}]", self.mid, self.spr)
    }
}

/// Positive weight of the spread term in `d_θ`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Theta(f64);

impl Theta {
    pub const ONE_THIRD: Theta = Theta(1.0 / 3.0);

    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value.is_finite() {
            Ok(Theta(value))
        } else {
            Err(Error::InvalidTheta(value))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Theta {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        Theta::new(value)
    }
}

impl From<Theta> for f64 {
    fn from(t: Theta) -> f64 {
        t.0
    }
}

/// A named sample of intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSample {
    name: String,
    values: Vec<Interval>,
}

/// The canonical components of a sample, in `M, S, C, R` order.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalComponents {
    pub m: IntervalSample,
    pub s: IntervalSample,
    pub c: IntervalSample,
    pub r: IntervalSample,
}

impl IntervalSample {
    pub fn new(name: impl Into<String>, values: Vec<Interval>) -> Self {
        Self {
            name: name.into(),
            values,
        }
    }

    pub fn from_endpoints(name: impl Into<String>, endpoints: &[(f64, f64)]) -> Result<Self> {
        let values = endpoints
            .iter()
            .map(|&(a, b)| Interval::from_endpoints(a, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(name, values))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[Interval] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Interval> {
        self.values.iter()
    }

    pub fn mids(&self) -> Vec<f64> {
        self.values.iter().map(Interval::mid).collect()
    }

    pub fn sprs(&self) -> Vec<f64> {
        self.values.iter().map(Interval::spr).collect()
    }

    pub fn abs_mids(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.mid().abs()).collect()
    }

    pub fn map(&self, name: impl Into<String>, f: impl Fn(&Interval) -> Interval) -> Self {
        Self::new(name, self.values.iter().map(f).collect())
    }

    pub fn canonical_components(&self) -> CanonicalComponents {
        let pick = |suffix: &str, k: usize| {
            self.map(format!("{}^{suffix}", self.name), |v| v.canonical()[k])
        };
        CanonicalComponents {
            m: pick("M", 0),
            s: pick("S", 1),
            c: pick("C", 2),
            r: pick("R", 3),
        }
    }

    /// Aumann-type sample mean: componentwise mean of mids and spreads.
    pub fn mean(&self) -> Result<Interval> {
        if self.values.is_empty() {
            return Err(Error::EmptySample);
        }
        Ok(Interval {
            mid: mean(&self.mids()),
            spr: mean(&self.sprs()),
        })
    }

    /// `σ̂_{x,y} = cov(mid x, mid y) + θ·cov(spr x, spr y)`.
    pub fn cov(&self, other: &IntervalSample, theta: Theta) -> Result<f64> {
        check_pair(self.len(), other.len())?;
        Ok(covariance(&self.mids(), &other.mids())
            + theta.value() * covariance(&self.sprs(), &other.sprs()))
    }

    /// Fréchet variance `σ²_{mid} + θ·σ²_{spr}`.
    pub fn var(&self, theta: Theta) -> Result<f64> {
        self.cov(self, theta)
    }
}

impl std::ops::Index<usize> for IntervalSample {
    type Output = Interval;
    fn index(&self, i: usize) -> &Interval {
        &self.values[i]
    }
}

impl<'a> IntoIterator for &'a IntervalSample {
    type Item = &'a Interval;
    type IntoIter = std::slice::Iter<'a, Interval>;
    fn into_iter(self) -> Self::IntoIter {
        self.values.iter()
    }
}

fn check_pair(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch {
            expected: a,
            found: b,
        });
    }
    if a == 0 {
        return Err(Error::EmptySample);
    }
    if a < 2 {
        return Err(Error::TooFewObservations {
            needed: 2,
            found: a,
        });
    }
    Ok(())
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Real sample covariance with divisor `n`. Every estimator in this crate is a
/// ratio or solve of these, so the divisor cancels there.
pub(crate) fn covariance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let ma = mean(a);
    let mb = mean(b);
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - ma) * (y - mb))
        .sum::<f64>()
        / a.len() as f64
}

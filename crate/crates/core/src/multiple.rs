//! Multiple interval linear models fitted as small convex QPs: the multiple
//! basic model (MBLRM), the multiple flexible model (MFLRM) and the multiple
//! model M (MFLRM without the `x^C`, `x^R` terms).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::interval::{covariance, Interval, IntervalSample, Theta};
use crate::qp::{self, QpProblem};
use crate::simple::{mean_sq_distance, r_squared, Residuals};
use crate::{Error, Result};

const SINGULAR_RATIO: f64 = 1e-12;

/// A response and `k >= 1` predictors observed on the same `n` units.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalDataset {
    response: IntervalSample,
    predictors: Vec<IntervalSample>,
}

impl IntervalDataset {
    pub fn new(response: IntervalSample, predictors: Vec<IntervalSample>) -> Result<Self> {
        if predictors.is_empty() {
            return Err(Error::ArityMismatch {
                expected: 1,
                found: 0,
            });
        }
        for p in &predictors {
            if p.len() != response.len() {
                return Err(Error::LengthMismatch {
                    expected: response.len(),
                    found: p.len(),
                });
            }
        }
        Ok(Self {
            response,
            predictors,
        })
    }

    pub fn response(&self) -> &IntervalSample {
        &self.response
    }

    pub fn predictors(&self) -> &[IntervalSample] {
        &self.predictors
    }

    pub fn predictor_names(&self) -> Vec<String> {
        self.predictors.iter().map(|p| p.name().to_string()).collect()
    }

    pub fn n(&self) -> usize {
        self.response.len()
    }

    pub fn k(&self) -> usize {
        self.predictors.len()
    }

    /// Predictor values of observation `j`.
    pub fn row(&self, j: usize) -> Vec<Interval> {
        self.predictors.iter().map(|p| p[j]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MultipleKind {
    Mblrm,
    Mflrm,
    MultipleM,
}

/// Centered and raw matrices entering the least-squares problems.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrices {
    pub v_m: DVector<f64>,
    pub v_s: DVector<f64>,
    pub f_m: DMatrix<f64>,
    pub f_s: DMatrix<f64>,
    pub raw_spr_x: DMatrix<f64>,
    pub raw_abs_mid_x: DMatrix<f64>,
    pub raw_spr_y: DVector<f64>,
}

fn centered(v: &[f64]) -> DVector<f64> {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    DVector::from_iterator(v.len(), v.iter().map(|x| x - m))
}

fn columns(cols: &[Vec<f64>], n: usize, center: bool) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n, cols.len());
    for (j, c) in cols.iter().enumerate() {
        if center {
            out.set_column(j, &centered(c));
        } else {
            out.set_column(j, &DVector::from_column_slice(c));
        }
    }
    out
}

/// Builds the design for `kind`.
///
/// MBLRM: `F_m` = centered mids, `F_s` = centered spreads (k columns each).
/// MFLRM: `F_m` = centered `[mid X | spr X]`, `F_s` = centered `[spr X | |mid X|]`.
/// Multiple M: `F_m` = centered mids, `F_s` = centered spreads.
pub fn assemble_design(ds: &IntervalDataset, kind: MultipleKind) -> DesignMatrices {
    let n = ds.n();
    let mids: Vec<Vec<f64>> = ds.predictors.iter().map(|p| p.mids()).collect();
    let sprs: Vec<Vec<f64>> = ds.predictors.iter().map(|p| p.sprs()).collect();
    let abs_mids: Vec<Vec<f64>> = ds.predictors.iter().map(|p| p.abs_mids()).collect();
    let (f_m, f_s) = match kind {
        MultipleKind::Mblrm | MultipleKind::MultipleM => (columns(&mids, n, true), columns(&sprs, n, true)),
        MultipleKind::Mflrm => {
            let m: Vec<Vec<f64>> = mids.iter().chain(&sprs).cloned().collect();
            let s: Vec<Vec<f64>> = sprs.iter().chain(&abs_mids).cloned().collect();
            (columns(&m, n, true), columns(&s, n, true))
        }
    };
    DesignMatrices {
        v_m: centered(&ds.response.mids()),
        v_s: centered(&ds.response.sprs()),
        f_m,
        f_s,
        raw_spr_x: columns(&sprs, n, false),
        raw_abs_mid_x: columns(&abs_mids, n, false),
        raw_spr_y: DVector::from_vec(ds.response.sprs()),
    }
}

/// Per-predictor coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MultipleCoefficients {
    Mblrm { b: Vec<f64> },
    Mflrm { b1: Vec<f64>, b2: Vec<f64>, b3: Vec<f64>, b4: Vec<f64> },
    MultipleM { b1: Vec<f64>, b2: Vec<f64> },
}

impl MultipleCoefficients {
    pub fn kind(&self) -> MultipleKind {
        match self {
            MultipleCoefficients::Mblrm { .. } => MultipleKind::Mblrm,
            MultipleCoefficients::Mflrm { .. } => MultipleKind::Mflrm,
            MultipleCoefficients::MultipleM { .. } => MultipleKind::MultipleM,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            MultipleCoefficients::Mblrm { b } => b.len(),
            MultipleCoefficients::Mflrm { b1, .. } | MultipleCoefficients::MultipleM { b1, .. } => b1.len(),
        }
    }

    /// Coefficients of predictor `i` on `(x^M, x^S, x^C, x^R)`.
    pub fn canonical(&self, i: usize) -> [f64; 4] {
        match self {
            MultipleCoefficients::Mblrm { b } => [b[i], b[i].abs(), 0.0, 0.0],
            MultipleCoefficients::Mflrm { b1, b2, b3, b4 } => [b1[i], b2[i], b3[i], b4[i]],
            MultipleCoefficients::MultipleM { b1, b2 } => [b1[i], b2[i], 0.0, 0.0],
        }
    }

    /// `(name, value)` pairs grouped by coefficient family, e.g. `b1[x1]`.
    pub fn named(&self, predictors: &[String]) -> Vec<(String, f64)> {
        let family = |prefix: &str, v: &[f64]| -> Vec<(String, f64)> {
            v.iter()
                .zip(predictors)
                .map(|(c, p)| (format!("{prefix}[{p}]"), *c))
                .collect()
        };
        match self {
            MultipleCoefficients::Mblrm { b } => family("b", b),
            MultipleCoefficients::Mflrm { b1, b2, b3, b4 } => [family("b1", b1), family("b2", b2), family("b3", b3), family("b4", b4)].concat(),
            MultipleCoefficients::MultipleM { b1, b2 } => [family("b1", b1), family("b2", b2)].concat(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultipleFit {
    pub coefficients: MultipleCoefficients,
    pub delta: Interval,
    pub theta: Theta,
    pub r_squared: f64,
    pub objective: f64,
    pub kkt_residual: f64,
}

impl MultipleFit {
    pub fn kind(&self) -> MultipleKind {
        self.coefficients.kind()
    }

    pub fn k(&self) -> usize {
        self.coefficients.k()
    }

    /// Fitted value of a row without `Δ̂`.
    pub fn systematic(&self, row: &[Interval]) -> Result<Interval> {
        if row.len() != self.k() {
            return Err(Error::LengthMismatch {
                expected: self.k(),
                found: row.len(),
            });
        }
        let mut mid = 0.0;
        let mut spr = 0.0;
        for (i, x) in row.iter().enumerate() {
            let [b1, b2, b3, b4] = self.coefficients.canonical(i);
            mid += b1 * x.mid() + b4 * x.spr();
            spr += b2 * x.spr() + b3 * x.mid().abs();
        }
        Ok(Interval::new_unchecked(mid, spr))
    }

    pub fn predict(&self, row: &[Interval]) -> Result<Interval> {
        let s = self.systematic(row)?;
        Ok(Interval::new_unchecked(s.mid() + self.delta.mid(), s.spr() + self.delta.spr()))
    }

    pub fn predict_dataset(&self, ds: &IntervalDataset) -> Result<Vec<Interval>> {
        (0..ds.n()).map(|j| self.predict(&ds.row(j))).collect()
    }

    pub fn residuals(&self, ds: &IntervalDataset) -> Result<Residuals> {
        let values = (0..ds.n())
            .map(|j| ds.response[j].hukuhara_diff(&self.systematic(&ds.row(j))?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Residuals { values })
    }
}

/// Evaluates a fitted multiple model on one row of predictors.
pub fn predict_multiple(fit: &MultipleFit, row: &[Interval]) -> Result<Interval> {
    fit.predict(row)
}

/// How the spread block of the MBLRM objective treats coefficient signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpreadSigns {
    /// `spr(b·x) = |b|·spr x`, so the spread block uses `F_s` as is.
    #[default]
    Unsigned,
    /// Multiplies `F_s` by `diag(sign b̂)` as well.
    Signed,
}

pub fn fit_mblrm(ds: &IntervalDataset, theta: Theta) -> Result<MultipleFit> {
    fit_mblrm_with(ds, theta, SpreadSigns::Unsigned)
}

/// MBLRM: signs from the mid covariances, magnitudes from a QP over
/// `{a >= 0 : spr X·a <= spr y}`.
pub fn fit_mblrm_with(ds: &IntervalDataset, theta: Theta, signs: SpreadSigns) -> Result<MultipleFit> {
    check_size(ds, ds.k() + 1)?;
    let d = assemble_design(ds, MultipleKind::Mblrm);
    let n = ds.n() as f64;
    let k = ds.k();
    for i in 0..k {
        if d.f_m.column(i).amax() == 0.0 && d.f_s.column(i).amax() == 0.0 {
            return Err(Error::DegenerateRegressor(format!(
                "{} is constant",
                ds.predictors[i].name()
            )));
        }
    }
    let ymid = ds.response.mids();
    let sign: Vec<f64> = ds
        .predictors
        .iter()
        .map(|p| if covariance(&ymid, &p.mids()) < 0.0 { -1.0 } else { 1.0 })
        .collect();
    let s = DMatrix::from_diagonal(&DVector::from_column_slice(&sign));
    let fm = &d.f_m * &s;
    let fs = match signs {
        SpreadSigns::Unsigned => d.f_s.clone(),
        SpreadSigns::Signed => &d.f_s * &s,
    };
    let t = theta.value();
    let h = (fm.transpose() * &fm + fs.transpose() * &fs * t) * (2.0 / n);
    let g = -(fm.transpose() * &d.v_m + fs.transpose() * &d.v_s * t) * (2.0 / n);
    let problem = QpProblem::new(h, g, d.raw_spr_x.clone(), d.raw_spr_y.clone(), vec![true; k])?;
    let sol = qp::solve(&problem)?;
    let b = (0..k).map(|i| sign[i] * sol.a_star[i].max(0.0)).collect();
    finish(MultipleCoefficients::Mblrm { b }, ds, theta, sol.kkt_residual)
}

/// MFLRM: least squares for `(b1, b4)` and a QP over
/// `{(a2, a3) >= 0 : spr X·a2 + |mid X|·a3 <= spr y}` for `(b2, b3)`.
pub fn fit_mflrm(ds: &IntervalDataset, theta: Theta) -> Result<MultipleFit> {
    check_size(ds, 2 * ds.k() + 1)?;
    let d = assemble_design(ds, MultipleKind::Mflrm);
    let k = ds.k();
    let mid = mid_block(&d, ds, "mid points and spreads")?;
    let raw = hstack(&d.raw_spr_x, &d.raw_abs_mid_x);
    let (spread, kkt) = spread_block(&d.f_s, &d.v_s, raw, &d.raw_spr_y)?;
    finish(
        MultipleCoefficients::Mflrm {
            b1: mid[..k].to_vec(),
            b2: spread[..k].to_vec(),
            b3: spread[k..].to_vec(),
            b4: mid[k..].to_vec(),
        },
        ds,
        theta,
        kkt,
    )
}

/// Multiple model M: the MFLRM restricted to `b3 = b4 = 0`.
pub fn fit_multiple_m(ds: &IntervalDataset, theta: Theta) -> Result<MultipleFit> {
    check_size(ds, ds.k() + 1)?;
    let d = assemble_design(ds, MultipleKind::MultipleM);
    let b1 = mid_block(&d, ds, "mid points")?;
    let (b2, kkt) = spread_block(&d.f_s, &d.v_s, d.raw_spr_x.clone(), &d.raw_spr_y)?;
    finish(MultipleCoefficients::MultipleM { b1, b2 }, ds, theta, kkt)
}

fn check_size(ds: &IntervalDataset, needed: usize) -> Result<()> {
    if ds.n() == 0 {
        return Err(Error::EmptySample);
    }
    if ds.n() < needed.max(2) {
        return Err(Error::TooFewObservations {
            needed: needed.max(2),
            found: ds.n(),
        });
    }
    Ok(())
}

fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Ordinary least squares of `v_m` on `F_m`.
fn mid_block(d: &DesignMatrices, ds: &IntervalDataset, what: &str) -> Result<Vec<f64>> {
    let gram = d.f_m.transpose() * &d.f_m;
    let eig = SymmetricEigen::new(gram);
    let hi = eig.eigenvalues.max();
    let lo = eig.eigenvalues.min();
    if !(hi > 0.0) || lo < SINGULAR_RATIO * hi {
        let names = ds.predictor_names().join(", ");
        return Err(Error::DegenerateRegressor(format!(
            "{what} of ({names}) are collinear"
        )));
    }
    let sol = d
        .f_m
        .clone()
        .svd(true, true)
        .solve(&d.v_m, 0.0)
        .map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(sol.iter().copied().collect())
}

/// `min ‖v_s − F_s a‖²` over `a >= 0, raw·a <= spr y`.
///
/// The factor `θ/n` of the objective only rescales it, so it is left out;
/// the minimiser is then exactly the same for every `θ`.
fn spread_block(f_s: &DMatrix<f64>, v_s: &DVector<f64>, raw: DMatrix<f64>, spr_y: &DVector<f64>) -> Result<(Vec<f64>, f64)> {
    let p = f_s.ncols();
    let h = f_s.transpose() * f_s * 2.0;
    let g = -(f_s.transpose() * v_s) * 2.0;
    let problem = QpProblem::new(h, g, raw, spr_y.clone(), vec![true; p])?;
    let sol = qp::solve(&problem)?;
    Ok((sol.a_star.iter().map(|v| v.max(0.0)).collect(), sol.kkt_residual))
}

fn finish(coefficients: MultipleCoefficients, ds: &IntervalDataset, theta: Theta, kkt_residual: f64) -> Result<MultipleFit> {
    let mut fit = MultipleFit {
        coefficients,
        delta: Interval::ZERO,
        theta,
        r_squared: 0.0,
        objective: 0.0,
        kkt_residual,
    };
    let systematic = (0..ds.n())
        .map(|j| fit.systematic(&ds.row(j)))
        .collect::<Result<Vec<_>>>()?;
    let fitted_mean = IntervalSample::new("fitted", systematic).mean()?;
    fit.delta = ds.response.mean()?.hukuhara_diff(&fitted_mean)?;
    let fitted = fit.predict_dataset(ds)?;
    fit.r_squared = r_squared(&ds.response, &fitted, theta)?;
    fit.objective = mean_sq_distance(&ds.response, &fitted, theta);
    Ok(fit)
}

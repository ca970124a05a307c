//! Dense convex quadratic programming by a primal active-set method.
//!
//! Solves
//!
//! ```text
//! minimize    ½ aᵀ H a + gᵀ a
//! subject to  A a <= b,   a_i >= 0 for every i in the nonnegativity mask
//! ```
//!
//! for symmetric positive-semidefinite `H`. Problems here are tiny (a few
//! dozen variables, a few hundred rows), so every iteration works with dense
//! eigendecompositions of the reduced Hessian. Zero-curvature directions are
//! handled by ray steps, and when `H` is singular the returned point is the
//! minimum-Euclidean-norm element of the optimal face.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

/// Primal feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-8;
/// Stationarity / complementarity tolerance.
pub const STAT_TOL: f64 = 1e-8;
/// Allowed negative eigenvalue of `H`, relative to its largest eigenvalue.
pub const PSD_SLACK: f64 = 1e-10;

const SYMMETRY_TOL: f64 = 1e-10;
const ZERO_CURVATURE: f64 = 1e-12;
const ACTIVE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("QP dimensions are inconsistent: {0}")]
    Dimension(String),
    #[error("QP Hessian is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("QP Hessian is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("QP feasible set is empty")]
    Infeasible,
    #[error("QP objective is unbounded below on the feasible set")]
    Unbounded,
    #[error("QP did not converge within {0} iterations")]
    MaxIterations(usize),
}

impl QpError {
    pub fn name(&self) -> &'static str {
        match self {
            QpError::Dimension(_) => "QpDimension",
            QpError::NotSymmetric(_) => "NotSymmetric",
            QpError::NotPsd(_) => "NotPSD",
            QpError::Infeasible => "Infeasible",
            QpError::Unbounded => "Unbounded",
            QpError::MaxIterations(_) => "MaxIterations",
        }
    }
}

/// `min ½ aᵀHa + gᵀa  s.t.  A a <= b,  a_i >= 0 (masked)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    h: DMatrix<f64>,
    g: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    nonneg: Vec<bool>,
}

/// A KKT-certified solution.
#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub a_star: DVector<f64>,
    /// Multipliers for the `m` inequality rows followed by one per masked bound,
    /// in variable order.
    pub multipliers: DVector<f64>,
    /// Indices into the same ordering as `multipliers`.
    pub active_set: Vec<usize>,
    pub kkt_residual: f64,
    pub objective: f64,
    pub iterations: usize,
}

impl QpProblem {
    pub fn new(
        h: DMatrix<f64>,
        g: DVector<f64>,
        a: DMatrix<f64>,
        b: DVector<f64>,
        nonneg: Vec<bool>,
    ) -> Result<Self, QpError> {
        let p = g.len();
        if h.nrows() != p || h.ncols() != p {
            return Err(QpError::Dimension(format!(
                "H is {}x{}, expected {p}x{p}",
                h.nrows(),
                h.ncols()
            )));
        }
        if a.ncols() != p && a.nrows() > 0 {
            return Err(QpError::Dimension(format!(
                "A has {} columns, expected {p}",
                a.ncols()
            )));
        }
        if a.nrows() != b.len() {
            return Err(QpError::Dimension(format!(
                "A has {} rows but b has {} entries",
                a.nrows(),
                b.len()
            )));
        }
        if nonneg.len() != p {
            return Err(QpError::Dimension(format!(
                "nonnegativity mask has {} entries, expected {p}",
                nonneg.len()
            )));
        }
        let scale = 1.0 + h.amax();
        let asym = (&h - h.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(QpError::NotSymmetric(asym));
        }
        let h = (&h + h.transpose()) * 0.5;
        let a = if a.nrows() == 0 { DMatrix::zeros(0, p) } else { a };
        Ok(Self {
            h,
            g,
            a,
            b,
            nonneg,
        })
    }

    /// Unconstrained problem with only nonnegativity bounds.
    pub fn with_bounds_only(
        h: DMatrix<f64>,
        g: DVector<f64>,
        nonneg: Vec<bool>,
    ) -> Result<Self, QpError> {
        let p = g.len();
        Self::new(h, g, DMatrix::zeros(0, p), DVector::zeros(0), nonneg)
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn num_rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn g(&self) -> &DVector<f64> {
        &self.g
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn nonneg(&self) -> &[bool] {
        &self.nonneg
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.h * x)) + self.g.dot(x)
    }

    /// Max violation over rows and masked bounds (absolute).
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        let (c, d) = self.stacked_constraints();
        (0..c.nrows())
            .map(|i| c.row(i).dot(&x.transpose()) - d[i])
            .fold(0.0, f64::max)
    }

    pub fn is_feasible(&self, x: &DVector<f64>, tol: f64) -> bool {
        let rows_ok = (0..self.a.nrows()).all(|i| self.a.row(i).dot(&x.transpose()) <= self.b[i] + tol);
        let bounds_ok = self
            .nonneg
            .iter()
            .zip(x.iter())
            .all(|(&m, &v)| !m || v >= -tol);
        rows_ok && bounds_ok
    }

    /// All constraints as `C x <= d`: the `A` rows, then `-e_i` for masked `i`.
    fn stacked_constraints(&self) -> (DMatrix<f64>, DVector<f64>) {
        let p = self.dim();
        let m = self.a.nrows();
        let bounds: Vec<usize> = (0..p).filter(|&i| self.nonneg[i]).collect();
        let mut c = DMatrix::zeros(m + bounds.len(), p);
        let mut d = DVector::zeros(m + bounds.len());
        c.rows_mut(0, m).copy_from(&self.a);
        d.rows_mut(0, m).copy_from(&self.b);
        for (k, &i) in bounds.iter().enumerate() {
            c[(m + k, i)] = -1.0;
        }
        (c, d)
    }
}

/// Solves the problem; see the module docs for the method.
pub fn solve(problem: &QpProblem) -> Result<QpSolution, QpError> {
    let p = problem.dim();
    let eig = SymmetricEigen::new(problem.h.clone());
    let lambda_max = eig.eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let lambda_min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if p > 0 && lambda_min < -PSD_SLACK * lambda_max.max(f64::MIN_POSITIVE) {
        return Err(QpError::NotPsd(lambda_min));
    }

    let (c_raw, d_raw) = problem.stacked_constraints();
    let rows = NormalizedRows::new(&c_raw, &d_raw)?;
    let max_iter = 50 * (p + c_raw.nrows()).max(1);

    let x0 = DVector::zeros(p);
    let start = if rows.violation(&x0) <= 0.0 {
        x0
    } else {
        phase_one(&rows, p, max_iter)?
    };

    let core = ActiveSet {
        h: &problem.h,
        g: &problem.g,
        rows: &rows,
        lambda_max,
        max_iter,
    };
    let run = core.run(start, Vec::new())?;
    let mut x = run.x;

    // Singular H: move to the minimum-norm point of the optimal face.
    if lambda_min <= ZERO_CURVATURE * lambda_max.max(f64::MIN_POSITIVE) || lambda_max == 0.0 {
        x = min_norm_on_optimal_face(problem, &rows, &x, max_iter)?;
    }

    let mut multipliers = DVector::zeros(rows.len());
    for (k, &i) in run.working.iter().enumerate() {
        multipliers[i] = run.lambda[k] / rows.norms[i];
    }
    let kkt_residual = kkt_residual_with(problem, &x, &multipliers);
    let objective = problem.objective(&x);
    let mut active_set = run.working;
    active_set.sort_unstable();
    Ok(QpSolution {
        a_star: x,
        multipliers,
        active_set,
        kkt_residual,
        objective,
        iterations: run.iterations,
    })
}

/// KKT residual of `candidate` using the best nonnegative multipliers on the
/// constraints active at it (nonnegative least squares on the stationarity
/// equation). Returns the max of the scaled primal-infeasibility, dual-
/// infeasibility, stationarity and complementarity residuals.
pub fn check_kkt(problem: &QpProblem, candidate: &DVector<f64>) -> f64 {
    let (c, d) = problem.stacked_constraints();
    let active: Vec<usize> = (0..c.nrows())
        .filter(|&i| (c.row(i).dot(&candidate.transpose()) - d[i]).abs() <= ACTIVE_TOL * (1.0 + d[i].abs()))
        .collect();
    let grad = &problem.h * candidate + &problem.g;
    let mut multipliers = DVector::zeros(c.nrows());
    if !active.is_empty() {
        // C_Aᵀ λ ≈ -grad, λ >= 0
        let mut e = DMatrix::zeros(problem.dim(), active.len());
        for (k, &i) in active.iter().enumerate() {
            e.set_column(k, &c.row(i).transpose());
        }
        let lambda = nnls(&e, &(-&grad));
        for (k, &i) in active.iter().enumerate() {
            multipliers[i] = lambda[k];
        }
    }
    kkt_residual_with(problem, candidate, &multipliers)
}

fn kkt_residual_with(problem: &QpProblem, x: &DVector<f64>, multipliers: &DVector<f64>) -> f64 {
    let (c, d) = problem.stacked_constraints();
    let h_norm = row_sum_norm(&problem.h);
    let scale = 1.0 + problem.g.amax() + h_norm * x.amax();
    let mut primal = 0.0f64;
    let mut dual = 0.0f64;
    let mut comp = 0.0f64;
    for i in 0..c.nrows() {
        let slack = d[i] - c.row(i).dot(&x.transpose());
        primal = primal.max((-slack).max(0.0) / (1.0 + d[i].abs()));
        dual = dual.max((-multipliers[i]).max(0.0) / scale);
        comp = comp.max((multipliers[i] * slack).abs() / (scale * (1.0 + x.amax())));
    }
    let stationarity = (&problem.h * x + &problem.g + c.transpose() * multipliers).amax() / scale;
    primal.max(dual).max(comp).max(stationarity)
}

fn row_sum_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Constraint rows scaled to unit norm. Multipliers in the scaled system are
/// `norm_i` times the original ones.
struct NormalizedRows {
    c: DMatrix<f64>,
    d: DVector<f64>,
    norms: Vec<f64>,
}

impl NormalizedRows {
    fn new(c: &DMatrix<f64>, d: &DVector<f64>) -> Result<Self, QpError> {
        let mut c = c.clone();
        let mut d = d.clone();
        let mut norms = Vec::with_capacity(c.nrows());
        for i in 0..c.nrows() {
            let norm = c.row(i).norm();
            if norm == 0.0 {
                // 0 <= d_i
                if d[i] < -FEAS_TOL {
                    return Err(QpError::Infeasible);
                }
                norms.push(1.0);
                d[i] = d[i].max(0.0);
                continue;
            }
            c.row_mut(i).scale_mut(1.0 / norm);
            d[i] /= norm;
            norms.push(norm);
        }
        Ok(Self { c, d, norms })
    }

    fn len(&self) -> usize {
        self.c.nrows()
    }

    fn is_null(&self, i: usize) -> bool {
        self.c.row(i).amax() == 0.0
    }

    fn violation(&self, x: &DVector<f64>) -> f64 {
        (0..self.len())
            .map(|i| self.c.row(i).dot(&x.transpose()) - self.d[i])
            .fold(0.0, f64::max)
    }
}

struct ActiveSet<'a> {
    h: &'a DMatrix<f64>,
    g: &'a DVector<f64>,
    rows: &'a NormalizedRows,
    lambda_max: f64,
    max_iter: usize,
}

struct ActiveSetRun {
    x: DVector<f64>,
    working: Vec<usize>,
    lambda: Vec<f64>,
    iterations: usize,
}

impl ActiveSet<'_> {
    fn run(&self, mut x: DVector<f64>, mut working: Vec<usize>) -> Result<ActiveSetRun, QpError> {
        let p = x.len();
        let curvature_tol = ZERO_CURVATURE * self.lambda_max;
        let mut zero_steps = 0usize;

        for iteration in 0..self.max_iter {
            let grad = self.h * &x + self.g;
            let grad_scale = 1.0 + self.g.amax() + self.lambda_max * x.amax();
            let z = null_space(&self.rows.c, &working, p);

            let (step, is_ray) = if z.ncols() == 0 {
                (DVector::zeros(p), false)
            } else {
                let hr = z.transpose() * self.h * &z;
                let gr = z.transpose() * &grad;
                let eig = SymmetricEigen::new(hr);
                let mut newton = DVector::zeros(z.ncols());
                let mut ray = DVector::zeros(z.ncols());
                let mut has_ray = false;
                for k in 0..eig.eigenvalues.len() {
                    let q = eig.eigenvectors.column(k);
                    let coef = q.dot(&gr);
                    if eig.eigenvalues[k] > curvature_tol && eig.eigenvalues[k] > 0.0 {
                        newton -= q * (coef / eig.eigenvalues[k]);
                    } else if coef.abs() > 1e-12 * grad_scale {
                        ray -= q * coef;
                        has_ray = true;
                    }
                }
                if has_ray {
                    (&z * ray, true)
                } else {
                    (&z * newton, false)
                }
            };

            let step_small = step.amax() <= 1e-13 * (1.0 + x.amax());
            if step_small && !is_ray {
                let lambda = working_multipliers(&self.rows.c, &working, &grad);
                let dual_tol = 1e-10 * grad_scale;
                let drop = if zero_steps > p + 5 {
                    // Bland-style: lowest constraint index with a negative multiplier.
                    (0..working.len())
                        .filter(|&k| lambda[k] < -dual_tol)
                        .min_by_key(|&k| working[k])
                } else {
                    (0..working.len())
                        .filter(|&k| lambda[k] < -dual_tol)
                        .min_by(|&a, &b| lambda[a].total_cmp(&lambda[b]).then(working[a].cmp(&working[b])))
                };
                match drop {
                    None => {
                        return Ok(ActiveSetRun {
                            x,
                            working,
                            lambda: lambda.iter().map(|v| v.max(0.0)).collect(),
                            iterations: iteration,
                        })
                    }
                    Some(k) => {
                        working.remove(k);
                        continue;
                    }
                }
            }

            // Ratio test over constraints outside the working set.
            let step_norm = step.amax();
            let mut alpha = if is_ray { f64::INFINITY } else { 1.0 };
            let mut blocking: Option<usize> = None;
            for i in 0..self.rows.len() {
                if working.contains(&i) || self.rows.is_null(i) {
                    continue;
                }
                let ci_p = self.rows.c.row(i).dot(&step.transpose());
                if ci_p <= 1e-14 * step_norm {
                    continue;
                }
                let slack = self.rows.d[i] - self.rows.c.row(i).dot(&x.transpose());
                let ratio = (slack / ci_p).max(0.0);
                if ratio < alpha {
                    alpha = ratio;
                    blocking = Some(i);
                }
            }
            if alpha.is_infinite() {
                return Err(QpError::Unbounded);
            }
            if alpha == 0.0 {
                zero_steps += 1;
            } else {
                zero_steps = 0;
            }
            x += &step * alpha;
            if let Some(i) = blocking {
                working.push(i);
            }
        }
        Err(QpError::MaxIterations(self.max_iter))
    }
}

/// Orthonormal basis of `{p : C_W p = 0}`.
fn null_space(c: &DMatrix<f64>, working: &[usize], p: usize) -> DMatrix<f64> {
    if working.is_empty() {
        return DMatrix::identity(p, p);
    }
    let mut cw_t = DMatrix::zeros(p, working.len());
    for (k, &i) in working.iter().enumerate() {
        cw_t.set_column(k, &c.row(i).transpose());
    }
    let q = cw_t.qr().q();
    let projector = DMatrix::identity(p, p) - &q * q.transpose();
    let eig = SymmetricEigen::new(projector);
    let cols: Vec<_> = (0..p)
        .filter(|&k| eig.eigenvalues[k] > 0.5)
        .map(|k| eig.eigenvectors.column(k).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(p, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Least-squares solve of `C_Wᵀ λ = -grad`.
fn working_multipliers(c: &DMatrix<f64>, working: &[usize], grad: &DVector<f64>) -> Vec<f64> {
    if working.is_empty() {
        return Vec::new();
    }
    let p = grad.len();
    let mut cw_t = DMatrix::zeros(p, working.len());
    for (k, &i) in working.iter().enumerate() {
        cw_t.set_column(k, &c.row(i).transpose());
    }
    let rhs = -grad;
    let svd = cw_t.svd(true, true);
    let sol = svd
        .solve(&rhs, 1e-13)
        .unwrap_or_else(|_| DVector::zeros(working.len()));
    sol.iter().copied().collect()
}

/// Finds a feasible point when the origin is not one, by minimising the
/// maximum violation `t` over `(x, t)` with a small proximal term on `x`.
fn phase_one(rows: &NormalizedRows, p: usize, max_iter: usize) -> Result<DVector<f64>, QpError> {
    let m = rows.len();
    let mut c = DMatrix::zeros(m + 1, p + 1);
    let mut d = DVector::zeros(m + 1);
    for i in 0..m {
        for j in 0..p {
            c[(i, j)] = rows.c[(i, j)];
        }
        c[(i, p)] = -1.0;
        d[i] = rows.d[i];
    }
    c[(m, p)] = -1.0;
    let aux = NormalizedRows::new(&c, &d)?;
    let mut h = DMatrix::zeros(p + 1, p + 1);
    for j in 0..p {
        h[(j, j)] = 1e-8;
    }
    let mut g = DVector::zeros(p + 1);
    g[p] = 1.0;
    let mut start = DVector::zeros(p + 1);
    start[p] = rows.violation(&DVector::zeros(p));
    let core = ActiveSet {
        h: &h,
        g: &g,
        rows: &aux,
        lambda_max: 1e-8,
        max_iter,
    };
    let run = core.run(start, Vec::new())?;
    if run.x[p] > FEAS_TOL {
        return Err(QpError::Infeasible);
    }
    Ok(run.x.rows(0, p).into_owned())
}

/// The optimal set of a convex QP is `{x feasible : Hx = Hx*, gᵀx = gᵀx*}`.
/// Parametrise it as `x* + N z` with `N` spanning the null space of `[H; gᵀ]`
/// and minimise `½‖x* + N z‖²` over the feasible `z`.
fn min_norm_on_optimal_face(
    problem: &QpProblem,
    rows: &NormalizedRows,
    x_star: &DVector<f64>,
    max_iter: usize,
) -> Result<DVector<f64>, QpError> {
    let p = problem.dim();
    let mut stacked = DMatrix::zeros(p + 1, p);
    stacked.rows_mut(0, p).copy_from(&problem.h);
    stacked.row_mut(p).copy_from(&problem.g.transpose());
    let gram = stacked.transpose() * &stacked;
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let cols: Vec<_> = (0..p)
        .filter(|&k| eig.eigenvalues[k].abs() <= 1e-20 * top.max(f64::MIN_POSITIVE) || top == 0.0)
        .map(|k| eig.eigenvectors.column(k).into_owned())
        .collect();
    if cols.is_empty() {
        return Ok(x_star.clone());
    }
    let n = DMatrix::from_columns(&cols);
    let q = n.ncols();
    let cn = &rows.c * &n;
    let mut rhs = DVector::zeros(rows.len());
    for i in 0..rows.len() {
        rhs[i] = (rows.d[i] - rows.c.row(i).dot(&x_star.transpose())).max(0.0);
    }
    let sub_rows = NormalizedRows::new(&cn, &rhs)?;
    let h = DMatrix::identity(q, q);
    let g = n.transpose() * x_star;
    let core = ActiveSet {
        h: &h,
        g: &g,
        rows: &sub_rows,
        lambda_max: 1.0,
        max_iter,
    };
    let run = core.run(DVector::zeros(q), Vec::new())?;
    Ok(x_star + n * run.x)
}

/// Lawson–Hanson nonnegative least squares: `min ‖E λ − f‖, λ >= 0`.
pub(crate) fn nnls(e: &DMatrix<f64>, f: &DVector<f64>) -> DVector<f64> {
    let q = e.ncols();
    let mut lambda = DVector::zeros(q);
    let mut passive = vec![false; q];
    let tol = 1e-12 * (1.0 + e.amax() * (1.0 + f.amax()));
    for _ in 0..(3 * q + 10) {
        let w = e.transpose() * (f - e * &lambda);
        let candidate = (0..q)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&a, &b| w[a].total_cmp(&w[b]));
        let Some(t) = candidate else { break };
        passive[t] = true;
        for _ in 0..(3 * q + 10) {
            let idx: Vec<usize> = (0..q).filter(|&j| passive[j]).collect();
            let ep = DMatrix::from_columns(&idx.iter().map(|&j| e.column(j).into_owned()).collect::<Vec<_>>());
            let sp = ep
                .svd(true, true)
                .solve(f, 1e-14)
                .unwrap_or_else(|_| DVector::zeros(idx.len()));
            if sp.iter().all(|&v| v > 0.0) {
                for (k, &j) in idx.iter().enumerate() {
                    lambda[j] = sp[k];
                }
                break;
            }
            let mut alpha = 1.0f64;
            for (k, &j) in idx.iter().enumerate() {
                if sp[k] <= 0.0 {
                    let denom = lambda[j] - sp[k];
                    if denom > 0.0 {
                        alpha = alpha.min(lambda[j] / denom);
                    }
                }
            }
            for (k, &j) in idx.iter().enumerate() {
                lambda[j] += alpha * (sp[k] - lambda[j]);
                if lambda[j] <= tol {
                    lambda[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    lambda
}

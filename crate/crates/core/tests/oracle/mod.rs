//! Brute-force reference solutions for the multiple estimators, written
//! directly from the least-squares objective and the residual-existence
//! constraints. Nothing here goes through the crate's QP solver.

#![allow(dead_code)]

use intreg::{Interval, IntervalDataset, IntervalSample};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type ChaChaRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    /// Simple flexible model; the one-predictor case of `Mflrm`.
    Mg,
    Mblrm,
    Mflrm,
    MultipleM,
}

/// Raw `(mid, spr)` columns of one instance.
#[derive(Debug, Clone)]
pub struct Raw {
    pub y: Vec<(f64, f64)>,
    pub x: Vec<Vec<(f64, f64)>>,
}

impl Raw {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn k(&self) -> usize {
        self.x.len()
    }

    pub fn dataset(&self) -> IntervalDataset {
        let s = |name: String, v: &[(f64, f64)]| {
            IntervalSample::new(name, v.iter().map(|&(m, r)| Interval::new(m, r).unwrap()).collect())
        };
        let xs = self.x.iter().enumerate().map(|(i, c)| s(format!("x{}", i + 1), c)).collect();
        IntervalDataset::new(s("y".into(), &self.y), xs).unwrap()
    }
}

/// Random instance with `k` predictors and `n` rows. Responses follow a
/// flexible model with noisy spreads, so that the spread constraints bind
/// for a good share of draws.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Raw {
    let x: Vec<Vec<(f64, f64)>> = (0..k)
        .map(|_| {
            let shift = rng.random_range(-2.0..2.0);
            (0..n)
                .map(|_| (shift + 3.0 * (rng.random::<f64>() - 0.5), rng.random_range(0.05..3.0)))
                .collect()
        })
        .collect();
    let b: Vec<[f64; 4]> = (0..k)
        .map(|_| {
            [
                rng.random_range(-2.0..2.0),
                rng.random_range(0.0..1.5),
                if rng.random_bool(0.5) { rng.random_range(0.0..1.0) } else { 0.0 },
                rng.random_range(-1.0..1.0),
            ]
        })
        .collect();
    let slack = rng.random_range(0.02..1.0);
    let y = (0..n)
        .map(|j| {
            let mut m = rng.random_range(-1.0..1.0);
            let mut s = slack * rng.random::<f64>().powi(2) + 0.01;
            for i in 0..k {
                let (xm, xs) = x[i][j];
                m += b[i][0] * xm + b[i][3] * xs;
                s += b[i][1] * xs + b[i][2] * xm.abs();
            }
            // Perturb spreads downwards on some rows to tighten the feasible set.
            if rng.random_bool(0.3) {
                s *= rng.random_range(0.3..1.0);
            }
            (m, s.max(0.01))
        })
        .collect();
    Raw { y, x }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Fitted-value parts `(mid, spr)` per row for canonical coefficients
/// `b[i] = (b1, b2, b3, b4)` of predictor `i`, before the intercept.
fn systematic(raw: &Raw, b: &[[f64; 4]]) -> Vec<(f64, f64)> {
    (0..raw.n())
        .map(|j| {
            let mut m = 0.0;
            let mut s = 0.0;
            for (i, bi) in b.iter().enumerate() {
                let (xm, xs) = raw.x[i][j];
                m += bi[0] * xm + bi[3] * xs;
                s += bi[1] * xs + bi[2] * xm.abs();
            }
            (m, s)
        })
        .collect()
}

/// `(1/n) Σ d_θ²(y_j, ŷ_j)` with the intercept at the mean residual.
/// `None` if some residual spread is negative beyond `1e-9`.
pub fn objective(raw: &Raw, b: &[[f64; 4]], theta: f64) -> Option<f64> {
    let f = systematic(raw, b);
    if raw.y.iter().zip(&f).any(|(y, f)| y.1 - f.1 < -1e-9) {
        return None;
    }
    let rm: Vec<f64> = raw.y.iter().zip(&f).map(|(y, f)| y.0 - f.0).collect();
    let rs: Vec<f64> = raw.y.iter().zip(&f).map(|(y, f)| y.1 - f.1).collect();
    let (mm, ms) = (mean(&rm), mean(&rs));
    let n = raw.n() as f64;
    Some(
        rm.iter()
            .zip(&rs)
            .map(|(a, c)| (a - mm).powi(2) + theta * (c - ms).powi(2))
            .sum::<f64>()
            / n,
    )
}

/// Canonical form of an MBLRM coefficient vector.
pub fn basic_canonical(b: &[f64]) -> Vec<[f64; 4]> {
    b.iter().map(|&v| [v, v.abs(), 0.0, 0.0]).collect()
}

fn centered(v: &[f64]) -> DVector<f64> {
    let m = mean(v);
    DVector::from_iterator(v.len(), v.iter().map(|x| x - m))
}

fn columns(cols: &[Vec<f64>]) -> DMatrix<f64> {
    let n = cols[0].len();
    DMatrix::from_fn(n, cols.len(), |r, c| cols[c][r])
}

fn ols(cols: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let a = DMatrix::from_columns(&cols.iter().map(|c| centered(c)).collect::<Vec<_>>());
    let sol = a.svd(true, true).solve(&centered(y), 1e-13).unwrap();
    sol.iter().copied().collect()
}

/// Convex quadratic `½ aᵀHa + gᵀa` over `{a : C a <= d}`.
pub struct Polytope {
    pub h: DMatrix<f64>,
    pub g: DVector<f64>,
    pub c: DMatrix<f64>,
    pub d: DVector<f64>,
}

impl Polytope {
    fn value(&self, a: &DVector<f64>) -> f64 {
        0.5 * a.dot(&(&self.h * a)) + self.g.dot(a)
    }

    fn slack(&self, a: &DVector<f64>) -> DVector<f64> {
        &self.d - &self.c * a
    }

    /// Best of `samples` points drawn along random nonnegative rays from the
    /// origin, each strictly inside the polytope.
    pub fn sample_best(&self, rng: &mut ChaCha8Rng, samples: usize) -> DVector<f64> {
        let p = self.h.nrows();
        let mut best = DVector::from_element(p, 0.0);
        let mut best_val = f64::INFINITY;
        for _ in 0..samples {
            let u = DVector::from_fn(p, |_, _| -rng.random::<f64>().max(1e-12).ln());
            let cu = &self.c * &u;
            let reach = (0..cu.len())
                .filter(|&i| cu[i] > 0.0)
                .map(|i| self.d[i] / cu[i])
                .fold(f64::INFINITY, f64::min)
                .min(1e6);
            let a = u * (reach * rng.random_range(0.01..0.999));
            let v = self.value(&a);
            if v < best_val && self.slack(&a).min() > 0.0 {
                best_val = v;
                best = a;
            }
        }
        best
    }

    /// Log-barrier Newton method from a strictly feasible start.
    pub fn barrier(&self, start: DVector<f64>) -> DVector<f64> {
        let m = self.c.nrows() as f64;
        let mut a = start;
        let mut t = 1.0;
        while m / t > 1e-11 {
            for _ in 0..200 {
                let s = self.slack(&a);
                let inv = s.map(|v| 1.0 / v);
                let grad = (&self.h * &a + &self.g) * t + self.c.transpose() * &inv;
                let w = DMatrix::from_diagonal(&inv.component_mul(&inv));
                let hess = &self.h * t + self.c.transpose() * w * &self.c;
                let step = match hess.clone().cholesky() {
                    Some(ch) => -ch.solve(&grad),
                    None => -hess.svd(true, true).solve(&grad, 1e-14).unwrap(),
                };
                let decrement = -grad.dot(&step);
                if decrement < 1e-13 {
                    break;
                }
                let phi = |x: &DVector<f64>| {
                    let s = self.slack(x);
                    if s.min() <= 0.0 {
                        f64::INFINITY
                    } else {
                        t * self.value(x) - s.iter().map(|v| v.ln()).sum::<f64>()
                    }
                };
                let f0 = phi(&a);
                let mut alpha = 1.0;
                while alpha > 1e-16 {
                    let cand = &a + &step * alpha;
                    if phi(&cand) <= f0 - 0.25 * alpha * decrement {
                        a = cand;
                        break;
                    }
                    alpha *= 0.5;
                }
                if alpha <= 1e-16 {
                    break;
                }
            }
            t *= 8.0;
        }
        a
    }
}

/// Constraint rows `raw·a <= spr y` stacked over `−a <= 0`.
fn constraints(raw_cols: &[Vec<f64>], spr_y: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let n = spr_y.len();
    let p = raw_cols.len();
    let a = columns(raw_cols);
    let mut c = DMatrix::zeros(n + p, p);
    c.rows_mut(0, n).copy_from(&a);
    for i in 0..p {
        c[(n + i, i)] = -1.0;
    }
    let mut d = DVector::zeros(n + p);
    d.rows_mut(0, n).copy_from(&DVector::from_column_slice(spr_y));
    (c, d)
}

/// Least squares `‖v − F a‖²` (centered) over the polytope.
fn ls_polytope(f_cols: &[Vec<f64>], v: &[f64], raw_cols: &[Vec<f64>], spr_y: &[f64], weight: f64) -> Polytope {
    let f = DMatrix::from_columns(&f_cols.iter().map(|c| centered(c)).collect::<Vec<_>>());
    let v = centered(v);
    let (c, d) = constraints(raw_cols, spr_y);
    Polytope {
        h: f.transpose() * &f * (2.0 * weight),
        g: -(f.transpose() * v) * (2.0 * weight),
        c,
        d,
    }
}

fn solve_polytope(poly: &Polytope, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let start = poly.sample_best(&mut r, 4000);
    poly.barrier(start).iter().copied().collect()
}

/// Reference coefficients (canonical form) minimising the objective of
/// `est` over its feasible set.
pub fn solve(raw: &Raw, est: Estimator, theta: f64, seed: u64) -> Vec<[f64; 4]> {
    let k = raw.k();
    let ym: Vec<f64> = raw.y.iter().map(|v| v.0).collect();
    let ys: Vec<f64> = raw.y.iter().map(|v| v.1).collect();
    let xm: Vec<Vec<f64>> = raw.x.iter().map(|c| c.iter().map(|v| v.0).collect()).collect();
    let xs: Vec<Vec<f64>> = raw.x.iter().map(|c| c.iter().map(|v| v.1).collect()).collect();
    let xa: Vec<Vec<f64>> = xm.iter().map(|c| c.iter().map(|v| v.abs()).collect()).collect();
    match est {
        Estimator::Mg | Estimator::Mflrm => {
            assert!(est == Estimator::Mflrm || k == 1);
            let mid_cols: Vec<Vec<f64>> = xm.iter().chain(&xs).cloned().collect();
            let mid = ols(&mid_cols, &ym);
            let spr_cols: Vec<Vec<f64>> = xs.iter().chain(&xa).cloned().collect();
            let spread = solve_polytope(&ls_polytope(&spr_cols, &ys, &spr_cols, &ys, 1.0), seed);
            (0..k).map(|i| [mid[i], spread[i], spread[k + i], mid[k + i]]).collect()
        }
        Estimator::MultipleM => {
            let mid = ols(&xm, &ym);
            let spread = solve_polytope(&ls_polytope(&xs, &ys, &xs, &ys, 1.0), seed);
            (0..k).map(|i| [mid[i], spread[i], 0.0, 0.0]).collect()
        }
        Estimator::Mblrm => {
            let sign = mblrm_signs(raw);
            let n = raw.n() as f64;
            let fm = DMatrix::from_columns(
                &xm.iter().zip(&sign).map(|(c, s)| centered(c) * *s).collect::<Vec<_>>(),
            );
            let fs = DMatrix::from_columns(&xs.iter().map(|c| centered(c)).collect::<Vec<_>>());
            let vm = centered(&ym);
            let vs = centered(&ys);
            let (c, d) = constraints(&xs, &ys);
            let poly = Polytope {
                h: (fm.transpose() * &fm + fs.transpose() * &fs * theta) * (2.0 / n),
                g: -(fm.transpose() * vm + fs.transpose() * vs * theta) * (2.0 / n),
                c,
                d,
            };
            let a = solve_polytope(&poly, seed);
            basic_canonical(&a.iter().zip(&sign).map(|(a, s)| a * s).collect::<Vec<_>>())
        }
    }
}

/// Sign of the sample covariance between mid y and each mid x, `+1` on zero.
pub fn mblrm_signs(raw: &Raw) -> Vec<f64> {
    let ym: Vec<f64> = raw.y.iter().map(|v| v.0).collect();
    let my = mean(&ym);
    raw.x
        .iter()
        .map(|c| {
            let xm: Vec<f64> = c.iter().map(|v| v.0).collect();
            let mx = mean(&xm);
            let cov: f64 = ym.iter().zip(&xm).map(|(a, b)| (a - my) * (b - mx)).sum();
            if cov < 0.0 {
                -1.0
            } else {
                1.0
            }
        })
        .collect()
}

/// Dense grid over `[0, bound]²` for a two-predictor MBLRM, refined by
/// pattern search around the incumbent and by golden-section search along
/// every constraint edge of the feasible polygon.
pub fn mblrm_grid_k2(raw: &Raw, theta: f64) -> (f64, [f64; 2]) {
    assert_eq!(raw.k(), 2);
    let mut rng = rng(0x6772_6964);
    let sign = mblrm_signs(raw);
    let eval = |a: [f64; 2]| {
        if a[0] < 0.0 || a[1] < 0.0 {
            return f64::INFINITY;
        }
        objective(raw, &basic_canonical(&[sign[0] * a[0], sign[1] * a[1]]), theta).unwrap_or(f64::INFINITY)
    };
    let bound = |i: usize| {
        raw.x[i]
            .iter()
            .zip(&raw.y)
            .filter(|(x, _)| x.1 > 0.0)
            .map(|(x, y)| y.1 / x.1)
            .fold(f64::INFINITY, f64::min)
    };
    let (u0, u1) = (bound(0), bound(1));
    let steps = 400;
    let mut best = ([0.0, 0.0], eval([0.0, 0.0]));
    for i in 0..=steps {
        for j in 0..=steps {
            let a = [u0 * i as f64 / steps as f64, u1 * j as f64 / steps as f64];
            let v = eval(a);
            if v < best.1 {
                best = (a, v);
            }
        }
    }
    let (mut h0, mut h1) = (u0 / steps as f64, u1 / steps as f64);
    let mut rounds = 0;
    while h0.max(h1) > 1e-13 && rounds < 5000 {
        rounds += 1;
        let centre = best.0;
        let before = best.1;
        for i in -10..=10 {
            for j in -10..=10 {
                let a = [centre[0] + h0 * i as f64 / 10.0, centre[1] + h1 * j as f64 / 10.0];
                let v = eval(a);
                if v < best.1 {
                    best = (a, v);
                }
            }
        }
        // Random directions reach thin feasible wedges along slanted edges.
        for _ in 0..200 {
            let a = [
                centre[0] + h0 * (2.0 * rng.random::<f64>() - 1.0),
                centre[1] + h1 * (2.0 * rng.random::<f64>() - 1.0),
            ];
            let v = eval(a);
            if v < best.1 {
                best = (a, v);
            }
        }
        if best.1 >= before {
            h0 *= 0.5;
            h1 *= 0.5;
        }
    }
    let mut rows: Vec<([f64; 2], f64)> = (0..raw.n()).map(|j| ([raw.x[0][j].1, raw.x[1][j].1], raw.y[j].1)).collect();
    rows.push(([-1.0, 0.0], 0.0));
    rows.push(([0.0, -1.0], 0.0));
    for (e, &(c, d)) in rows.iter().enumerate() {
        let norm = c[0] * c[0] + c[1] * c[1];
        if norm == 0.0 {
            continue;
        }
        let p0 = [c[0] * d / norm, c[1] * d / norm];
        let dir = [-c[1], c[0]];
        let (mut lo, mut hi) = (-1e9_f64, 1e9_f64);
        let mut empty = false;
        for (f, &(cf, df)) in rows.iter().enumerate() {
            if f == e {
                continue;
            }
            let slope = cf[0] * dir[0] + cf[1] * dir[1];
            let rest = df - cf[0] * p0[0] - cf[1] * p0[1];
            if slope.abs() < 1e-300 {
                empty |= rest < 0.0;
            } else if slope > 0.0 {
                hi = hi.min(rest / slope);
            } else {
                lo = lo.max(rest / slope);
            }
        }
        if empty || lo > hi {
            continue;
        }
        let at = |t: f64| [p0[0] + t * dir[0], p0[1] + t * dir[1]];
        let f = |t: f64| eval(at(t));
        let r = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (lo, hi);
        while b - a > 1e-13 * (1.0 + a.abs().max(b.abs())) {
            let x1 = b - r * (b - a);
            let x2 = a + r * (b - a);
            if f(x1) < f(x2) {
                b = x2;
            } else {
                a = x1;
            }
        }
        let t = 0.5 * (a + b);
        let v = f(t);
        if v < best.1 {
            best = (at(t), v);
        }
    }
    (best.1, best.0)
}

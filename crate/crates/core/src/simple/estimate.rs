use super::gamma::GammaG;
use super::{mean_sq_distance, r_squared, SimpleCoefficients, SimpleFit};
use crate::interval::{covariance, IntervalSample, Theta};
use crate::{Error, Result};

/// Relative eigenvalue threshold below which a 2×2 moment matrix is singular.
const SINGULAR_RATIO: f64 = 1e-12;
/// Relative threshold for a vanishing sample variance.
const ZERO_VARIANCE: f64 = 1e-14;

struct Columns {
    mx: Vec<f64>,
    sx: Vec<f64>,
    ax: Vec<f64>,
    my: Vec<f64>,
    sy: Vec<f64>,
}

impl Columns {
    fn new(x: &IntervalSample, y: &IntervalSample, needed: usize) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::EmptySample);
        }
        if x.len() < needed {
            return Err(Error::TooFewObservations {
                needed,
                found: x.len(),
            });
        }
        Ok(Self {
            mx: x.mids(),
            sx: x.sprs(),
            ax: x.abs_mids(),
            my: y.mids(),
            sy: y.sprs(),
        })
    }
}

/// `var(v)` with values below `ZERO_VARIANCE·mean(v²)` reported as zero.
fn variance(v: &[f64]) -> f64 {
    let var = covariance(v, v);
    let scale = v.iter().map(|a| a * a).sum::<f64>() / v.len() as f64;
    if var <= ZERO_VARIANCE * scale {
        0.0
    } else {
        var
    }
}

/// `min_j spr y_j / spr x_j` over `spr x_j > 0`.
fn spread_bound(sx: &[f64], sy: &[f64]) -> f64 {
    sx.iter()
        .zip(sy)
        .filter(|(s, _)| **s > 0.0)
        .map(|(s, t)| t / s)
        .fold(f64::INFINITY, f64::min)
}

fn finish(
    coefficients: SimpleCoefficients,
    x: &IntervalSample,
    y: &IntervalSample,
    theta: Theta,
) -> Result<SimpleFit> {
    let mut fit = SimpleFit {
        coefficients,
        delta: crate::Interval::ZERO,
        theta,
        r_squared: 0.0,
        objective: 0.0,
    };
    let systematic: Vec<_> = x.iter().map(|xi| fit.systematic(xi)).collect();
    let fitted_mean = IntervalSample::new("fitted", systematic).mean()?;
    fit.delta = y.mean()?.hukuhara_diff(&fitted_mean)?;
    let fitted = fit.predict_sample(x);
    fit.r_squared = r_squared(y, &fitted, theta)?;
    fit.objective = mean_sq_distance(y, &fitted, theta);
    Ok(fit)
}

/// Least-squares fit of the basic model `y = b·x + Δ`.
pub fn fit_basic(x: &IntervalSample, y: &IntervalSample, theta: Theta) -> Result<SimpleFit> {
    let c = Columns::new(x, y, 2)?;
    let t = theta.value();
    let den = variance(&c.mx) + t * variance(&c.sx);
    if den <= 0.0 {
        return Err(Error::DegenerateRegressor(format!(
            "{} is constant",
            x.name()
        )));
    }
    let cov_mid = covariance(&c.mx, &c.my);
    let sign = if cov_mid < 0.0 { -1.0 } else { 1.0 };
    let s0 = spread_bound(&c.sx, &c.sy);
    let a = ((sign * cov_mid + t * covariance(&c.sx, &c.sy)) / den).clamp(0.0, s0);
    finish(SimpleCoefficients::Basic { b: sign * a }, x, y, theta)
}

/// Least-squares fit of model M, `y = b1·x^M + b2·x^S + Δ`.
pub fn fit_model_m(x: &IntervalSample, y: &IntervalSample, theta: Theta) -> Result<SimpleFit> {
    let c = Columns::new(x, y, 2)?;
    let var_mid = variance(&c.mx);
    let var_spr = variance(&c.sx);
    if var_mid <= 0.0 {
        return Err(Error::DegenerateRegressor(format!(
            "mid points of {} are constant",
            x.name()
        )));
    }
    if var_spr <= 0.0 {
        return Err(Error::DegenerateRegressor(format!(
            "spreads of {} are constant",
            x.name()
        )));
    }
    let b1 = covariance(&c.mx, &c.my) / var_mid;
    let b2 = (covariance(&c.sx, &c.sy) / var_spr).clamp(0.0, spread_bound(&c.sx, &c.sy));
    finish(SimpleCoefficients::ModelM { b1, b2 }, x, y, theta)
}

/// Symmetric 2×2 matrix `[[a, b], [b, d]]`.
#[derive(Debug, Clone, Copy)]
struct Sym2 {
    a: f64,
    b: f64,
    d: f64,
}

impl Sym2 {
    fn is_singular(&self) -> bool {
        let half_trace = 0.5 * (self.a + self.d);
        let disc = (0.25 * (self.a - self.d).powi(2) + self.b * self.b).sqrt();
        let hi = half_trace + disc;
        let lo = half_trace - disc;
        !(hi > 0.0) || lo < SINGULAR_RATIO * hi
    }

    fn solve(&self, r: [f64; 2]) -> [f64; 2] {
        let det = self.a * self.d - self.b * self.b;
        [
            (self.d * r[0] - self.b * r[1]) / det,
            (self.a * r[1] - self.b * r[0]) / det,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateSource {
    /// Unconstrained minimiser of the spread objective.
    Global,
    /// Minimiser along boundary segment `i` of the envelope.
    Segment(usize),
    /// Minimiser on the edge `b = 0`.
    EdgeB0,
    /// Minimiser on the edge `c = 0`.
    EdgeC0,
    /// Minimiser on the edge `b = s0` when a vertical bound cuts the envelope.
    EdgeS0,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadCandidate {
    pub source: CandidateSource,
    pub b: f64,
    pub c: f64,
    /// Spread objective up to a positive factor and an additive constant.
    pub g: f64,
}

/// Every candidate considered for the spread coefficients of model M_G.
#[derive(Debug, Clone)]
pub struct SpreadSearch {
    pub region: GammaG,
    pub global: SpreadCandidate,
    pub global_feasible: bool,
    pub boundary: Vec<SpreadCandidate>,
    pub chosen: SpreadCandidate,
}

struct SpreadObjective {
    s: Sym2,
    z: [f64; 2],
}

impl SpreadObjective {
    fn g(&self, b: f64, c: f64) -> f64 {
        self.s.a * b * b + 2.0 * self.s.b * b * c + self.s.d * c * c - 2.0 * (self.z[0] * b + self.z[1] * c)
    }

    fn candidate(&self, source: CandidateSource, b: f64, c: f64) -> SpreadCandidate {
        SpreadCandidate {
            source,
            b,
            c,
            g: self.g(b, c),
        }
    }
}

/// Minimises the spread part of the M_G objective over `Γ_G`: the
/// unconstrained minimiser if it is feasible, otherwise the best of the
/// minimisers along each boundary piece.
pub fn mg_spread_candidates(x: &IntervalSample, y: &IntervalSample) -> Result<SpreadSearch> {
    let c = Columns::new(x, y, 3)?;
    spread_search(&c, x, y)
}

fn spread_search(c: &Columns, x: &IntervalSample, y: &IntervalSample) -> Result<SpreadSearch> {
    let s2 = Sym2 {
        a: covariance(&c.sx, &c.sx),
        b: covariance(&c.sx, &c.ax),
        d: covariance(&c.ax, &c.ax),
    };
    if s2.is_singular() {
        return Err(Error::DegenerateRegressor(format!(
            "spreads and absolute mid points of {} are collinear",
            x.name()
        )));
    }
    let obj = SpreadObjective {
        s: s2,
        z: [covariance(&c.sx, &c.sy), covariance(&c.ax, &c.sy)],
    };
    let region = GammaG::build(x, y)?;
    let nu = s2.solve(obj.z);
    let global = obj.candidate(CandidateSource::Global, nu[0], nu[1]);
    let global_feasible = region.contains_strict(nu[0], nu[1]);

    let mut boundary = Vec::with_capacity(region.segments().len() + 3);
    for (i, seg) in region.segments().iter().enumerate() {
        let line = region.lines()[seg.line];
        let (u, v) = (line.u, line.v);
        let den = s2.a + u * u * s2.d - 2.0 * u * s2.b;
        let num = u * v * s2.d - v * s2.b - u * obj.z[1] + obj.z[0];
        let b = if den > SINGULAR_RATIO * (s2.a + u * u * s2.d) {
            (num / den).clamp(seg.b_start, seg.b_end)
        } else {
            // flat along the segment: take the better endpoint
            let ends = [seg.b_start, seg.b_end];
            ends.into_iter()
                .filter(|e| e.is_finite())
                .min_by(|p, q| obj.g(*p, line.at(*p)).total_cmp(&obj.g(*q, line.at(*q))))
                .unwrap_or(seg.b_start)
        };
        boundary.push(obj.candidate(CandidateSource::Segment(i), b, line.at(b).max(0.0)));
    }
    let c_edge = (obj.z[1] / s2.d).clamp(0.0, region.r0());
    boundary.push(obj.candidate(CandidateSource::EdgeB0, 0.0, c_edge));
    let b_edge = (obj.z[0] / s2.a).clamp(0.0, region.s0());
    boundary.push(obj.candidate(CandidateSource::EdgeC0, b_edge, 0.0));
    let s0 = region.s0();
    let top = region.vertical_edge();
    if top > 0.0 {
        let c_top = ((obj.z[1] - s0 * s2.b) / s2.d).clamp(0.0, top);
        boundary.push(obj.candidate(CandidateSource::EdgeS0, s0, c_top));
    }

    let chosen = if global_feasible {
        global
    } else {
        boundary
            .iter()
            .copied()
            .fold(None::<SpreadCandidate>, |best, cand| match best {
                Some(b) if b.g <= cand.g => Some(b),
                _ => Some(cand),
            })
            .expect("edge candidates always exist")
    };
    Ok(SpreadSearch {
        region,
        global,
        global_feasible,
        boundary,
        chosen,
    })
}

/// Least-squares fit of model M_G,
/// `y = b1·x^M + b2·x^S + b3·x^C + b4·x^R + Δ` with `b2, b3 >= 0`.
pub fn fit_mg(x: &IntervalSample, y: &IntervalSample, theta: Theta) -> Result<SimpleFit> {
    let c = Columns::new(x, y, 3)?;
    let s1 = Sym2 {
        a: covariance(&c.mx, &c.mx),
        b: covariance(&c.mx, &c.sx),
        d: covariance(&c.sx, &c.sx),
    };
    if s1.is_singular() {
        return Err(Error::DegenerateRegressor(format!(
            "mid points and spreads of {} are collinear",
            x.name()
        )));
    }
    let [b1, b4] = s1.solve([covariance(&c.mx, &c.my), covariance(&c.sx, &c.my)]);
    let search = spread_search(&c, x, y)?;
    finish(
        SimpleCoefficients::ModelMG {
            b1,
            b2: search.chosen.b,
            b3: search.chosen.c,
            b4,
        },
        x,
        y,
        theta,
    )
}

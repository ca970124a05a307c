//! Monte-Carlo studies of the estimators on synthetic interval data.
//!
//! Three independent regressors and an error interval are drawn with
//! independent mids and spreads; responses follow one of three generating
//! models and are refitted with the matching estimator. Each replicate draws
//! from its own ChaCha8 stream, so results do not depend on scheduling.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Normal, Uniform};
use rayon::prelude::*;

use crate::interval::{Interval, IntervalSample, Theta};
use crate::multiple::{fit_mblrm, fit_mflrm, IntervalDataset, MultipleCoefficients};
use crate::simple::fit_mg;
use crate::{Error, Result};

/// A real distribution from the menu used by the studies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dist {
    /// `N(loc, scale)`; whether `scale` is a standard deviation or a variance
    /// is decided by [`NormalScale`] at sampling time.
    Normal { loc: f64, scale: f64 },
    Uniform { lo: f64, hi: f64 },
    ChiSquare { df: f64 },
}

impl Dist {
    fn nonnegative(&self) -> bool {
        match *self {
            Dist::Normal { .. } => false,
            Dist::Uniform { lo, .. } => lo >= 0.0,
            Dist::ChiSquare { .. } => true,
        }
    }

    fn draw(&self, n: usize, scale: NormalScale, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match *self {
            Dist::Normal { loc, scale: s } => {
                let sd = match scale {
                    NormalScale::StdDev => s,
                    NormalScale::Variance => s.sqrt(),
                };
                let d = Normal::new(loc, sd).expect("valid normal");
                (0..n).map(|_| d.sample(rng)).collect()
            }
            Dist::Uniform { lo, hi } => {
                let d = Uniform::new(lo, hi).expect("valid uniform");
                (0..n).map(|_| d.sample(rng)).collect()
            }
            Dist::ChiSquare { df } => {
                let d = ChiSquared::new(df).expect("valid chi-square");
                (0..n).map(|_| d.sample(rng)).collect()
            }
        }
    }
}

/// How the second parameter of `N(a, b)` is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalScale {
    #[default]
    StdDev,
    Variance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionSpec {
    mid: Dist,
    spr: Dist,
}

impl DistributionSpec {
    pub fn new(mid: Dist, spr: Dist) -> Result<Self> {
        if !spr.nonnegative() {
            return Err(Error::Numerical(format!(
                "spread distribution {spr:?} has negative support"
            )));
        }
        Ok(Self { mid, spr })
    }

    pub fn mid(&self) -> Dist {
        self.mid
    }

    pub fn spr(&self) -> Dist {
        self.spr
    }
}

/// Regressor and error distributions shared by all studies.
pub fn x1_spec() -> DistributionSpec {
    DistributionSpec::new(Dist::Normal { loc: 1.0, scale: 2.0 }, Dist::Uniform { lo: 0.0, hi: 10.0 }).unwrap()
}

pub fn x2_spec() -> DistributionSpec {
    DistributionSpec::new(Dist::Normal { loc: 2.0, scale: 1.0 }, Dist::ChiSquare { df: 4.0 }).unwrap()
}

pub fn x3_spec() -> DistributionSpec {
    DistributionSpec::new(Dist::Normal { loc: 1.0, scale: 3.0 }, Dist::Uniform { lo: 0.0, hi: 5.0 }).unwrap()
}

pub fn error_spec() -> DistributionSpec {
    DistributionSpec::new(Dist::Normal { loc: 0.0, scale: 1.0 }, Dist::ChiSquare { df: 1.0 }).unwrap()
}

/// `n` intervals with independent mid and spread draws (mids first).
pub fn gen_sample(name: &str, spec: &DistributionSpec, n: usize, scale: NormalScale, rng: &mut ChaCha8Rng) -> IntervalSample {
    let mids = spec.mid.draw(n, scale, rng);
    let sprs = spec.spr.draw(n, scale, rng);
    IntervalSample::new(
        name,
        mids.into_iter()
            .zip(sprs)
            .map(|(m, s)| Interval::new(m, s.max(0.0)).expect("finite draw"))
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StudyModel {
    /// `y = 2x1 − 5x2 − x3 + ε`, fitted as an MBLRM.
    M1,
    /// `y = −2x1^M + 2x1^S + x1^C + 0.5x1^R + ε`, fitted as model M_G.
    M2,
    /// Twelve-coefficient flexible model on three regressors, fitted as an MFLRM.
    M3,
}

impl StudyModel {
    pub fn as_str(self) -> &'static str {
        match self {
            StudyModel::M1 => "m1",
            StudyModel::M2 => "m2",
            StudyModel::M3 => "m3",
        }
    }

    pub fn predictors(self) -> usize {
        match self {
            StudyModel::M2 => 1,
            _ => 3,
        }
    }

    /// `(name, true value)` in reporting order, for the stated design.
    pub fn parameters(self) -> Vec<(String, f64)> {
        self.parameters_with(M3Design::Stated)
    }

    pub fn parameters_with(self, design: M3Design) -> Vec<(String, f64)> {
        let names = ["x1", "x2", "x3"];
        match self {
            StudyModel::M1 => names.iter().zip(M1_B).map(|(x, b)| (format!("b[{x}]"), b)).collect(),
            StudyModel::M2 => ["b1", "b2", "b3", "b4"].iter().zip(M2_B).map(|(p, b)| (p.to_string(), b)).collect(),
            StudyModel::M3 => {
                let b = design.coefficients();
                ["b1", "b2", "b3", "b4"]
                    .iter()
                    .enumerate()
                    .flat_map(|(f, p)| names.iter().enumerate().map(move |(i, x)| (format!("{p}[{x}]"), b[f][i])))
                    .collect()
            }
        }
    }
}

impl fmt::Display for StudyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StudyModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "m1" => Ok(StudyModel::M1),
            "m2" => Ok(StudyModel::M2),
            "m3" => Ok(StudyModel::M3),
            _ => Err(format!("unknown study {s:?}")),
        }
    }
}

const M1_B: [f64; 3] = [2.0, -5.0, -1.0];
/// `(b1, b2, b3, b4)` on `(x^M, x^S, x^C, x^R)`.
const M2_B: [f64; 4] = [-2.0, 2.0, 1.0, 0.5];
/// Rows are the coefficient families `b1..b4`, columns the regressors.
const M3_B: [[f64; 3]; 4] = [[-2.0, 5.0, -1.0], [2.0, 2.0, 1.0], [1.0, 1.0, 3.0], [0.5, 1.0, -3.0]];

/// Generating design of the M3 study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum M3Design {
    /// The model and regressor distributions as stated.
    #[default]
    Stated,
    /// `x3` drawn like `x1` and `+x3^M` in place of `−x3^M`. The published
    /// M3 estimates (means and MSEs) are reproduced by this variant and not by
    /// the stated one.
    Tabulated,
}

impl M3Design {
    fn coefficients(self) -> [[f64; 3]; 4] {
        let mut b = M3_B;
        if self == M3Design::Tabulated {
            b[0][2] = 1.0;
        }
        b
    }

    fn x3(self) -> DistributionSpec {
        match self {
            M3Design::Stated => x3_spec(),
            M3Design::Tabulated => x1_spec(),
        }
    }
}

impl FromStr for M3Design {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "stated" => Ok(M3Design::Stated),
            "tabulated" => Ok(M3Design::Tabulated),
            _ => Err(format!("unknown M3 design {s:?}")),
        }
    }
}

/// Builds the response of `model` from its regressors and an error sample.
pub fn gen_response(model: StudyModel, predictors: &[IntervalSample], error: &IntervalSample) -> Result<IntervalSample> {
    gen_response_with(model, M3Design::Stated, predictors, error)
}

pub fn gen_response_with(
    model: StudyModel,
    design: M3Design,
    predictors: &[IntervalSample],
    error: &IntervalSample,
) -> Result<IntervalSample> {
    let m3 = design.coefficients();
    if predictors.len() != model.predictors() {
        return Err(Error::ArityMismatch {
            expected: model.predictors(),
            found: predictors.len(),
        });
    }
    for p in predictors {
        if p.len() != error.len() {
            return Err(Error::LengthMismatch {
                expected: error.len(),
                found: p.len(),
            });
        }
    }
    let values = (0..error.len())
        .map(|j| {
            let mut y = error[j];
            match model {
                StudyModel::M1 => {
                    for (b, x) in M1_B.iter().zip(predictors) {
                        y = y.add_scaled(*b, &x[j]);
                    }
                }
                StudyModel::M2 => y = add_flexible(y, &predictors[0][j], M2_B),
                StudyModel::M3 => {
                    for (i, x) in predictors.iter().enumerate() {
                        y = add_flexible(y, &x[j], [m3[0][i], m3[1][i], m3[2][i], m3[3][i]]);
                    }
                }
            }
            y
        })
        .collect();
    Ok(IntervalSample::new("y", values))
}

/// `y + b1·x^M + b2·x^S + b3·x^C + b4·x^R`.
fn add_flexible(y: Interval, x: &Interval, b: [f64; 4]) -> Interval {
    let [m, s, c, r] = x.canonical();
    y.add_scaled(b[0], &m)
        .add_scaled(b[1], &s)
        .add_scaled(b[2], &c)
        .add_scaled(b[3], &r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyOptions {
    pub normal_scale: NormalScale,
    pub parallel: bool,
    pub m3_design: M3Design,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            normal_scale: NormalScale::StdDev,
            parallel: true,
            m3_design: M3Design::Stated,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSummary {
    pub name: String,
    pub truth: f64,
    pub mean: f64,
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub model: StudyModel,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub failures: usize,
    pub parameters: Vec<ParameterSummary>,
    /// One row per successful replicate, in replicate order.
    pub estimates: Vec<Vec<f64>>,
}

/// Data of replicate `rep`: regressors, then the response.
pub fn replicate_data(model: StudyModel, n: usize, seed: u64, rep: u64, options: &StudyOptions) -> Result<IntervalDataset> {
    let mut rng = stream_rng(seed, rep);
    let x3 = if model == StudyModel::M3 { options.m3_design.x3() } else { x3_spec() };
    let specs = [x1_spec(), x2_spec(), x3];
    let names = ["x1", "x2", "x3"];
    let scale = options.normal_scale;
    let xs: Vec<IntervalSample> = (0..model.predictors())
        .map(|i| gen_sample(names[i], &specs[i], n, scale, &mut rng))
        .collect();
    let eps = gen_sample("e", &error_spec(), n, scale, &mut rng);
    let y = gen_response_with(model, options.m3_design, &xs, &eps)?;
    IntervalDataset::new(y, xs)
}

fn fit_replicate(model: StudyModel, ds: &IntervalDataset, theta: Theta) -> Result<Vec<f64>> {
    Ok(match model {
        StudyModel::M1 => match fit_mblrm(ds, theta)?.coefficients {
            MultipleCoefficients::Mblrm { b } => b,
            _ => unreachable!(),
        },
        StudyModel::M2 => fit_mg(&ds.predictors()[0], ds.response(), theta)?.coefficients.canonical().to_vec(),
        StudyModel::M3 => match fit_mflrm(ds, theta)?.coefficients {
            MultipleCoefficients::Mflrm { b1, b2, b3, b4 } => [b1, b2, b3, b4].concat(),
            _ => unreachable!(),
        },
    })
}

pub fn run_study(model: StudyModel, n: usize, reps: usize, seed: u64, theta: Theta) -> Result<StudyResult> {
    run_study_with(model, n, reps, seed, theta, StudyOptions::default())
}

/// Fits `reps` independent replicates; fails if more than 1% of them cannot be fitted.
pub fn run_study_with(model: StudyModel, n: usize, reps: usize, seed: u64, theta: Theta, options: StudyOptions) -> Result<StudyResult> {
    if reps == 0 {
        return Err(Error::EmptySample);
    }
    let one = |rep: usize| -> Result<Vec<f64>> {
        let ds = replicate_data(model, n, seed, rep as u64, &options)?;
        fit_replicate(model, &ds, theta)
    };
    let outcomes: Vec<Result<Vec<f64>>> = if options.parallel {
        (0..reps).into_par_iter().map(one).collect()
    } else {
        (0..reps).map(one).collect()
    };
    let failures = outcomes.iter().filter(|o| o.is_err()).count();
    if failures * 100 > reps {
        return Err(Error::StudyFailed { failures, reps });
    }
    let estimates: Vec<Vec<f64>> = outcomes.into_iter().filter_map(|o| o.ok()).collect();
    let parameters = model
        .parameters_with(options.m3_design)
        .into_iter()
        .enumerate()
        .map(|(i, (name, truth))| {
            let m = estimates.len() as f64;
            let mean = estimates.iter().map(|e| e[i]).sum::<f64>() / m;
            let mse = estimates.iter().map(|e| (e[i] - truth).powi(2)).sum::<f64>() / m;
            ParameterSummary { name, truth, mean, mse }
        })
        .collect();
    Ok(StudyResult {
        model,
        n,
        reps,
        seed,
        failures,
        parameters,
        estimates,
    })
}

/// `model,parameter,true,mean,mse,n,reps,seed` rows.
pub fn study_csv(result: &StudyResult) -> String {
    let mut out = String::from("model,parameter,true,mean,mse,n,reps,seed\n");
    for p in &result.parameters {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            result.model, p.name, p.truth, p.mean, p.mse, result.n, result.reps, result.seed
        ));
    }
    out
}

/// Box-plot summary of one parameter's estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxStats {
    pub parameter: String,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

impl BoxStats {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

/// Linearly interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Quartiles, whiskers at the most extreme points within 1.5·IQR of the box, and the points beyond.
pub fn box_stats(result: &StudyResult) -> Vec<BoxStats> {
    result
        .parameters
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut v: Vec<f64> = result.estimates.iter().map(|e| e[i]).collect();
            v.sort_by(f64::total_cmp);
            let (q1, median, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
            let (lo_fence, hi_fence) = (q1 - 1.5 * (q3 - q1), q3 + 1.5 * (q3 - q1));
            let inside: Vec<f64> = v.iter().copied().filter(|x| (lo_fence..=hi_fence).contains(x)).collect();
            BoxStats {
                parameter: p.name.clone(),
                q1,
                median,
                q3,
                whisker_low: inside.first().copied().unwrap_or(q1),
                whisker_high: inside.last().copied().unwrap_or(q3),
                outliers: v.iter().copied().filter(|x| !(lo_fence..=hi_fence).contains(x)).collect(),
            }
        })
        .collect()
}

/// `model,n,parameter,q1,median,q3,whisker_low,whisker_high,outliers`; outliers
/// are `;`-separated.
pub fn boxplot_csv(result: &StudyResult) -> String {
    let mut out = String::from("model,n,parameter,q1,median,q3,whisker_low,whisker_high,outliers\n");
    for b in box_stats(result) {
        let outliers: Vec<String> = b.outliers.iter().map(|x| x.to_string()).collect();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            result.model,
            result.n,
            b.parameter,
            b.q1,
            b.median,
            b.q3,
            b.whisker_low,
            b.whisker_high,
            outliers.join(";")
        ));
    }
    out
}

pub fn emit_boxplot_data(result: &StudyResult, path: &std::path::Path) -> std::io::Result<()> {
    std::fs::write(path, boxplot_csv(result))
}

/// Reads back [`boxplot_csv`] output.
pub fn parse_boxplot_csv(text: &str) -> std::result::Result<Vec<BoxStats>, String> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for record in reader.records() {
        let r = record.map_err(|e| e.to_string())?;
        let num = |i: usize| r[i].parse::<f64>().map_err(|e| format!("column {i}: {e}"));
        let outliers = if r[8].is_empty() {
            Vec::new()
        } else {
            r[8].split(';')
                .map(|s| s.parse::<f64>().map_err(|e| e.to_string()))
                .collect::<std::result::Result<_, _>>()?
        };
        out.push(BoxStats {
            parameter: r[2].to_string(),
            q1: num(3)?,
            median: num(4)?,
            q3: num(5)?,
            whisker_low: num(6)?,
            whisker_high: num(7)?,
            outliers,
        });
    }
    Ok(out)
}

/// The generator used for replicate `stream` of a study seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

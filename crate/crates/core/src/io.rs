//! CSV datasets, the bundled hospital blood-pressure data and JSON fit reports.
//!
//! An interval variable `v` occupies two CSV columns `v_inf` and `v_sup`.
//! Floats are written in shortest round-trip form.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::interval::{Interval, IntervalSample, Theta};
use crate::model::{FittedModel, ModelKind};
use crate::multiple::{IntervalDataset, MultipleCoefficients, MultipleFit};
use crate::simple::{SimpleCoefficients, SimpleFit};

/// Daily ranges for 59 patients: diastolic blood pressure (`y`), systolic
/// blood pressure (`x1`) and pulse rate (`x2`).
pub const HOSPITAL_CSV: &str = include_str!("../data/hospital.csv");
/// SHA-256 of [`HOSPITAL_CSV`].
pub const HOSPITAL_SHA256: &str = "6277fcff7590b60c20f6b8b69cbcfab58b389e40e1b4619b86950dacb48ec501";

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("missing column {0}")]
    MissingColumn(String),
    #[error("row {row}: inf > sup for {variable}")]
    InvalidEndpoints { row: usize, variable: String },
    #[error("row {row}: cannot parse column {column}")]
    ParseError { row: usize, column: String },
    #[error("dataset has no rows")]
    Empty,
    #[error("invalid dataset: {0}")]
    Dataset(String),
    #[error("malformed report: {0}")]
    Report(String),
}

impl DataError {
    pub fn name(&self) -> &'static str {
        match self {
            DataError::Io { .. } => "Io",
            DataError::Csv(_) => "Csv",
            DataError::MissingColumn(_) => "MissingColumn",
            DataError::InvalidEndpoints { .. } => "InvalidEndpoints",
            DataError::ParseError { .. } => "ParseError",
            DataError::Empty => "Empty",
            DataError::Dataset(_) => "Dataset",
            DataError::Report(_) => "Report",
        }
    }
}

/// Every interval variable found in a CSV file, in header order.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalTable {
    variables: Vec<IntervalSample>,
    rows: usize,
}

impl IntervalTable {
    pub fn names(&self) -> Vec<&str> {
        self.variables.iter().map(|v| v.name()).collect()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn has(&self, name: &str) -> bool {
        self.variables.iter().any(|v| v.name() == name)
    }

    pub fn variable(&self, name: &str) -> Result<&IntervalSample, DataError> {
        self.variables
            .iter()
            .find(|v| v.name() == name)
            .ok_or_else(|| DataError::MissingColumn(format!("{name}_inf")))
    }

    pub fn select(&self, response: &str, predictors: &[&str]) -> Result<IntervalDataset, DataError> {
        if self.rows == 0 {
            return Err(DataError::Empty);
        }
        let y = self.variable(response)?.clone();
        let xs = predictors
            .iter()
            .map(|p| self.variable(p).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        IntervalDataset::new(y, xs).map_err(|e| DataError::Dataset(e.to_string()))
    }
}

/// Parses a CSV with `v_inf`/`v_sup` column pairs. Rows are numbered from 1,
/// not counting the header. An empty input gives an empty table.
pub fn read_table(input: impl Read) -> Result<IntervalTable, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| DataError::Csv(e.to_string()))?
        .clone();
    let mut pairs: Vec<(String, usize, usize)> = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        if let Some(name) = h.strip_suffix("_inf") {
            let sup = format!("{name}_sup");
            let j = headers
                .iter()
                .position(|c| c == sup)
                .ok_or(DataError::MissingColumn(sup))?;
            pairs.push((name.to_string(), i, j));
        }
    }
    for h in headers.iter() {
        if let Some(name) = h.strip_suffix("_sup") {
            if !pairs.iter().any(|p| p.0 == name) {
                return Err(DataError::MissingColumn(format!("{name}_inf")));
            }
        }
    }

    let mut values: Vec<Vec<Interval>> = vec![Vec::new(); pairs.len()];
    let mut rows = 0;
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| DataError::Csv(format!("row {row}: {e}")))?;
        let cell = |idx: usize| -> Result<f64, DataError> {
            record
                .get(idx)
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| DataError::ParseError {
                    row,
                    column: headers[idx].to_string(),
                })
        };
        for (k, (name, i, j)) in pairs.iter().enumerate() {
            let (inf, sup) = (cell(*i)?, cell(*j)?);
            let v = Interval::from_endpoints(inf, sup).map_err(|_| DataError::InvalidEndpoints {
                row,
                variable: name.clone(),
            })?;
            values[k].push(v);
        }
        rows += 1;
    }
    Ok(IntervalTable {
        variables: pairs
            .into_iter()
            .zip(values)
            .map(|((name, _, _), v)| IntervalSample::new(name, v))
            .collect(),
        rows,
    })
}

pub fn read_table_path(path: &Path) -> Result<IntervalTable, DataError> {
    let file = std::fs::File::open(path).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    read_table(file)
}

/// Loads `response` and `predictors` from a CSV file.
pub fn load_csv(path: &Path, response: &str, predictors: &[&str]) -> Result<IntervalDataset, DataError> {
    read_table_path(path)?.select(response, predictors)
}

pub fn hospital_table() -> IntervalTable {
    read_table(HOSPITAL_CSV.as_bytes()).expect("bundled data parses")
}

/// The bundled data with `y` on `(x1, x2)`.
pub fn hospital() -> IntervalDataset {
    hospital_table().select("y", &["x1", "x2"]).expect("bundled data has y, x1, x2")
}

/// Writes the response and predictors as `v_inf,v_sup` column pairs.
pub fn emit_csv(ds: &IntervalDataset) -> String {
    let vars: Vec<&IntervalSample> = std::iter::once(ds.response()).chain(ds.predictors()).collect();
    let mut out = String::new();
    let header: Vec<String> = vars
        .iter()
        .flat_map(|v| [format!("{}_inf", v.name()), format!("{}_sup", v.name())])
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for j in 0..ds.n() {
        let cells: Vec<String> = vars
            .iter()
            .flat_map(|v| {
                let (inf, sup) = endpoints(&v[j]);
                [inf.to_string(), sup.to_string()]
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Endpoints that read back to exactly `iv`. `mid ± spr` rounds, so the
/// few representable neighbours of each endpoint are tried as well.
fn endpoints(iv: &Interval) -> (f64, f64) {
    let direct = (iv.inf(), iv.sup());
    let step = |x: f64, k: i32| {
        let mut x = x;
        for _ in 0..k.abs() {
            x = if k > 0 { x.next_up() } else { x.next_down() };
        }
        x
    };
    for di in [0, -1, 1, -2, 2, -3, 3] {
        for ds in [0, -1, 1, -2, 2, -3, 3] {
            let (inf, sup) = (step(direct.0, di), step(direct.1, ds));
            if Interval::from_endpoints(inf, sup).is_ok_and(|back| back == *iv) {
                return (inf, sup);
            }
        }
    }
    direct
}

/// SHA-256 (hex) of [`emit_csv`].
pub fn fingerprint(ds: &IntervalDataset) -> String {
    hex::encode(Sha256::digest(emit_csv(ds).as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Endpoints {
    pub inf: f64,
    pub sup: f64,
}

/// Machine-readable summary of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub schema: u32,
    pub model: ModelKind,
    pub theta: f64,
    pub response: String,
    pub predictors: Vec<String>,
    pub coefficients: Vec<NamedValue>,
    pub delta: Endpoints,
    pub r_squared: f64,
    pub objective: f64,
    pub n: usize,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kkt_residual: Option<f64>,
    pub dataset_fingerprint: String,
}

impl FitReport {
    pub fn new(model: &FittedModel, ds: &IntervalDataset) -> Self {
        let predictors = ds.predictor_names();
        let coefficients = model
            .named_coefficients(&predictors)
            .into_iter()
            .map(|(name, value)| NamedValue { name, value })
            .collect();
        let delta = model.delta();
        Self {
            schema: REPORT_SCHEMA,
            model: model.kind(),
            theta: model.theta().value(),
            response: ds.response().name().to_string(),
            predictors,
            coefficients,
            delta: Endpoints {
                inf: delta.inf(),
                sup: delta.sup(),
            },
            r_squared: model.r_squared(),
            objective: model.objective(),
            n: ds.n(),
            k: ds.k(),
            kkt_residual: model.kkt_residual(),
            dataset_fingerprint: fingerprint(ds),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DataError> {
        let report: FitReport = serde_json::from_str(text).map_err(|e| DataError::Report(e.to_string()))?;
        if report.schema != REPORT_SCHEMA {
            return Err(DataError::Report(format!("unsupported schema {}", report.schema)));
        }
        Ok(report)
    }

    fn coefficient(&self, name: &str) -> Result<f64, DataError> {
        self.coefficients
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.value)
            .ok_or_else(|| DataError::Report(format!("missing coefficient {name}")))
    }

    fn family(&self, prefix: &str) -> Result<Vec<f64>, DataError> {
        self.predictors
            .iter()
            .map(|p| self.coefficient(&format!("{prefix}[{p}]")))
            .collect()
    }

    /// Rebuilds the fitted model so it can be used for prediction.
    pub fn to_model(&self) -> Result<FittedModel, DataError> {
        let theta = Theta::new(self.theta).map_err(|e| DataError::Report(e.to_string()))?;
        let delta = Interval::from_endpoints(self.delta.inf, self.delta.sup).map_err(|e| DataError::Report(e.to_string()))?;
        if self.predictors.len() != self.k {
            return Err(DataError::Report("k does not match the predictor list".into()));
        }
        let simple = |coefficients| {
            FittedModel::Simple(SimpleFit {
                coefficients,
                delta,
                theta,
                r_squared: self.r_squared,
                objective: self.objective,
            })
        };
        let multiple = |coefficients| {
            FittedModel::Multiple(MultipleFit {
                coefficients,
                delta,
                theta,
                r_squared: self.r_squared,
                objective: self.objective,
                kkt_residual: self.kkt_residual.unwrap_or(0.0),
            })
        };
        Ok(match self.model {
            ModelKind::Basic => simple(SimpleCoefficients::Basic { b: self.coefficient("b")? }),
            ModelKind::ModelM => simple(SimpleCoefficients::ModelM {
                b1: self.coefficient("b1")?,
                b2: self.coefficient("b2")?,
            }),
            ModelKind::ModelMG => simple(SimpleCoefficients::ModelMG {
                b1: self.coefficient("b1")?,
                b2: self.coefficient("b2")?,
                b3: self.coefficient("b3")?,
                b4: self.coefficient("b4")?,
            }),
            ModelKind::Mblrm => multiple(MultipleCoefficients::Mblrm { b: self.family("b")? }),
            ModelKind::Mflrm => multiple(MultipleCoefficients::Mflrm {
                b1: self.family("b1")?,
                b2: self.family("b2")?,
                b3: self.family("b3")?,
                b4: self.family("b4")?,
            }),
            ModelKind::MultipleM => multiple(MultipleCoefficients::MultipleM {
                b1: self.family("b1")?,
                b2: self.family("b2")?,
            }),
        })
    }
}

//! Least-squares estimation of linear regression models between interval-valued
//! variables, with the interval arithmetic, feasibility geometry and QP solver
//! they need.

pub mod error;
pub mod interval;
pub mod io;
pub mod model;
pub mod multiple;
pub mod qp;
pub mod simple;
pub mod simulate;

pub use error::{Error, Result};
pub use interval::{CanonicalComponents, Interval, IntervalSample, Theta};
pub use io::{emit_csv, hospital, load_csv, read_table, DataError, FitReport, IntervalTable};
pub use model::{FittedModel, ModelKind};
pub use multiple::{
    assemble_design, fit_mblrm, fit_mblrm_with, fit_mflrm, fit_multiple_m, predict_multiple, DesignMatrices,
    IntervalDataset, MultipleCoefficients, MultipleFit, MultipleKind, SpreadSigns,
};
pub use qp::{QpError, QpProblem, QpSolution};
pub use simple::{fit_basic, fit_mg, fit_model_m, GammaG, Residuals, SimpleCoefficients, SimpleFit, SimpleKind};

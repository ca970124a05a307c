//! Command implementations behind the `intreg` binary.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use intreg::io::{hospital_table, read_table, read_table_path, DataError, FitReport, IntervalTable};
use intreg::simple::{mg_spread_candidates, CandidateSource, GammaG};
use intreg::simulate::{
    boxplot_csv, run_study_with, study_csv, M3Design, NormalScale, StudyModel, StudyOptions,
};
use intreg::{Error, FittedModel, IntervalDataset, ModelKind, QpError, Theta};

/// Name accepted by `--data` for the bundled blood-pressure table.
pub const BUILTIN_HOSPITAL: &str = "builtin:hospital";

#[derive(Debug, Parser)]
#[command(name = "intreg", version, about = "Least-squares regression for interval-valued data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model and print its JSON report.
    Fit(FitArgs),
    /// Emit the feasible spread region of model M_G as CSV.
    Region(RegionArgs),
    /// Run a simulation study and emit its summary table.
    Simulate(SimulateArgs),
    /// Predict intervals from a saved fit report.
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, value_parser = parse_model)]
    pub model: ModelKind,
    #[arg(long, default_value = "0.333333333333", value_parser = parse_theta)]
    pub theta: Theta,
    #[arg(long)]
    pub response: String,
    /// Comma-separated predictor names.
    #[arg(long, value_delimiter = ',', required = true)]
    pub predictors: Vec<String>,
    /// CSV path, or `builtin:hospital`.
    #[arg(long)]
    pub data: String,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write per-row residuals as CSV.
    #[arg(long)]
    pub residuals: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    #[arg(long)]
    pub response: String,
    #[arg(long, alias = "predictors")]
    pub predictor: String,
    #[arg(long)]
    pub data: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScaleArg {
    Sd,
    Variance,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DesignArg {
    Stated,
    Tabulated,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = parse_study)]
    pub study: StudyModel,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "0.333333333333", value_parser = parse_theta)]
    pub theta: Theta,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write box-plot summaries of the estimates as CSV.
    #[arg(long)]
    pub boxplot: Option<PathBuf>,
    /// Reading of the second parameter of N(a, b).
    #[arg(long, value_enum, default_value = "sd")]
    pub normal_scale: ScaleArg,
    /// Generating design of study m3.
    #[arg(long, value_enum, default_value = "stated")]
    pub m3_design: DesignArg,
    /// Run replicates on one thread.
    #[arg(long)]
    pub serial: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Report written by `fit`.
    #[arg(long)]
    pub fit: PathBuf,
    #[arg(long)]
    pub data: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_model(s: &str) -> std::result::Result<ModelKind, String> {
    s.parse()
}

fn parse_study(s: &str) -> std::result::Result<StudyModel, String> {
    s.parse()
}

fn parse_theta(s: &str) -> std::result::Result<Theta, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    Theta::new(v).map_err(|e| e.to_string())
}

fn load_table(data: &str) -> Result<IntervalTable> {
    if data == BUILTIN_HOSPITAL {
        return Ok(hospital_table());
    }
    Ok(read_table_path(Path::new(data))?)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn cmd_fit(args: &FitArgs) -> Result<FitReport> {
    let table = load_table(&args.data)?;
    let names: Vec<&str> = args.predictors.iter().map(String::as_str).collect();
    let ds = table.select(&args.response, &names)?;
    let fit = FittedModel::fit(args.model, &ds, args.theta)?;
    let report = FitReport::new(&fit, &ds);
    if let Some(path) = &args.out {
        write_file(path, &report.to_json())?;
    }
    if let Some(path) = &args.residuals {
        write_file(path, &residual_csv(&fit, &ds)?)?;
    }
    Ok(report)
}

fn residual_csv(fit: &FittedModel, ds: &IntervalDataset) -> Result<String> {
    let mut out = String::from("row,resid_inf,resid_sup,d_theta\n");
    for j in 0..ds.n() {
        let y = ds.response()[j];
        let pred = fit.predict(&ds.row(j))?;
        let resid = y.hukuhara_diff(&fit.systematic(&ds.row(j))?)?;
        let d = y.d_theta(&pred, fit.theta());
        writeln!(out, "{},{},{},{}", j + 1, resid.inf(), resid.sup(), d)?;
    }
    Ok(out)
}

fn source_label(source: CandidateSource) -> String {
    match source {
        CandidateSource::Global => "global".into(),
        CandidateSource::Segment(i) => format!("segment-{}", i + 1),
        CandidateSource::EdgeB0 => "edge-b0".into(),
        CandidateSource::EdgeC0 => "edge-c0".into(),
        CandidateSource::EdgeS0 => "edge-s0".into(),
    }
}

/// Boundary of `Γ_G` from `(0, r0)` down to `(s0, 0)`.
pub fn boundary_polyline(region: &GammaG) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = region
        .segments()
        .iter()
        .map(|seg| (seg.b_start, region.lines()[seg.line].at(seg.b_start)))
        .collect();
    let s0 = region.s0();
    if s0.is_finite() {
        out.push((s0, region.vertical_edge()));
        if region.vertical_edge() > 0.0 {
            out.push((s0, 0.0));
        }
    }
    out
}

/// CSV with columns `kind,label,b,c,objective`: the boundary vertices in
/// order, every candidate optimum, then the chosen one. Candidates need at
/// least three observations and are omitted below that.
pub fn cmd_region(args: &RegionArgs) -> Result<String> {
    let table = load_table(&args.data)?;
    let ds = table.select(&args.response, &[args.predictor.as_str()])?;
    let (x, y) = (&ds.predictors()[0], ds.response());
    let region = GammaG::build(x, y)?;
    let mut out = String::from("kind,label,b,c,objective\n");
    for (i, (b, c)) in boundary_polyline(&region).into_iter().enumerate() {
        writeln!(out, "vertex,{},{b},{c},", i + 1)?;
    }
    if ds.n() >= 3 {
        let search = mg_spread_candidates(x, y)?;
        let g = &search.global;
        let label = if search.global_feasible { "global" } else { "global-infeasible" };
        writeln!(out, "candidate,{label},{},{},{}", g.b, g.c, g.g)?;
        for cand in &search.boundary {
            writeln!(out, "candidate,{},{},{},{}", source_label(cand.source), cand.b, cand.c, cand.g)?;
        }
        let c = &search.chosen;
        writeln!(out, "optimum,{},{},{},{}", source_label(c.source), c.b, c.c, c.g)?;
    }
    if let Some(path) = &args.out {
        write_file(path, &out)?;
    }
    Ok(out)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<String> {
    let options = StudyOptions {
        normal_scale: match args.normal_scale {
            ScaleArg::Sd => NormalScale::StdDev,
            ScaleArg::Variance => NormalScale::Variance,
        },
        parallel: !args.serial,
        m3_design: match args.m3_design {
            DesignArg::Stated => M3Design::Stated,
            DesignArg::Tabulated => M3Design::Tabulated,
        },
    };
    let result = run_study_with(args.study, args.n as usize, args.reps as usize, args.seed, args.theta, options)?;
    let csv = study_csv(&result);
    if let Some(path) = &args.out {
        write_file(path, &csv)?;
    }
    if let Some(path) = &args.boxplot {
        write_file(path, &boxplot_csv(&result))?;
    }
    Ok(csv)
}

/// CSV `row,pred_inf,pred_sup`, plus `d_theta` to the observed response when
/// the data carries the report's response column. No rows, no output.
pub fn cmd_predict(args: &PredictArgs) -> Result<String> {
    let text = fs::read_to_string(&args.fit).with_context(|| format!("cannot read {}", args.fit.display()))?;
    let report = FitReport::from_json(&text)?;
    let model = report.to_model()?;
    let table = if args.data == BUILTIN_HOSPITAL {
        hospital_table()
    } else {
        let bytes = fs::read(&args.data).map_err(|e| DataError::Io {
            path: args.data.clone(),
            message: e.to_string(),
        })?;
        read_table(bytes.as_slice())?
    };
    if table.rows() == 0 {
        return Ok(String::new());
    }
    let present = report.predictors.iter().filter(|p| table.has(p)).count();
    if present != report.k {
        return Err(Error::ArityMismatch {
            expected: report.k,
            found: present,
        }
        .into());
    }
    let xs = report
        .predictors
        .iter()
        .map(|p| table.variable(p).cloned())
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let response = table.has(&report.response).then(|| table.variable(&report.response)).transpose()?;
    let mut out = String::from("row,pred_inf,pred_sup");
    out.push_str(if response.is_some() { ",d_theta\n" } else { "\n" });
    for j in 0..table.rows() {
        let row: Vec<_> = xs.iter().map(|x| x[j]).collect();
        let pred = model.predict(&row)?;
        write!(out, "{},{},{}", j + 1, pred.inf(), pred.sup())?;
        if let Some(y) = response {
            write!(out, ",{}", y[j].d_theta(&pred, model.theta()))?;
        }
        out.push('\n');
    }
    if let Some(path) = &args.out {
        write_file(path, &out)?;
    }
    Ok(out)
}

/// Variant name of the library error behind `err`, if any.
pub fn error_name(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return e.name();
        }
        if let Some(e) = cause.downcast_ref::<QpError>() {
            return e.name();
        }
        if let Some(e) = cause.downcast_ref::<DataError>() {
            return e.name();
        }
    }
    "Error"
}

/// Parses `args` and runs the command. Returns the process exit code:
/// 0 on success, 1 when the command fails, 2 on a usage error.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Fit(a) => cmd_fit(a).map(|r| r.to_json() + "\n"),
        Command::Region(a) => cmd_region(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Predict(a) => cmd_predict(a),
    };
    match result {
        Ok(text) => {
            let write_out = match &cli.command {
                Command::Region(RegionArgs { out: Some(_), .. })
                | Command::Simulate(SimulateArgs { out: Some(_), .. })
                | Command::Predict(PredictArgs { out: Some(_), .. }) => Ok(()),
                _ => stdout.write_all(text.as_bytes()),
            };
            match write_out {
                Ok(()) => 0,
                Err(e) => {
                    let _ = writeln!(stderr, "error: Io: {e}");
                    1
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {}: {e:#}", error_name(&e));
            1
        }
    }
}

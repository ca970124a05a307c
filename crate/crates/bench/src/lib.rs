//! Inputs shared by the benchmarks.

use intreg::simulate::{replicate_data, StudyModel, StudyOptions};
use intreg::{IntervalDataset, QpProblem};

/// One replicate of a simulation study as a fitting workload.
pub fn study_data(model: StudyModel, n: usize, seed: u64) -> IntervalDataset {
    replicate_data(model, n, seed, 0, &StudyOptions::default()).expect("study data")
}

/// Spread-block QP of the MFLRM on `ds`, as the estimator builds it.
pub fn spread_qp(ds: &IntervalDataset) -> QpProblem {
    let d = intreg::assemble_design(ds, intreg::MultipleKind::Mflrm);
    let k = ds.k();
    let mut raw = d.raw_spr_x.clone().resize_horizontally(2 * k, 0.0);
    raw.columns_mut(k, k).copy_from(&d.raw_abs_mid_x);
    let h = d.f_s.transpose() * &d.f_s * 2.0;
    let g = -(d.f_s.transpose() * &d.v_s) * 2.0;
    QpProblem::new(h, g, raw, d.raw_spr_y.clone(), vec![true; 2 * k]).expect("well-formed problem")
}

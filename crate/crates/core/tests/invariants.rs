mod oracle;

use intreg::io::{emit_csv, hospital, hospital_table, read_table, FitReport};
use intreg::multiple::SpreadSigns;
use intreg::simple::mean_sq_distance;
use intreg::{
    assemble_design, fit_mblrm, fit_mblrm_with, fit_mflrm, fit_mg, fit_multiple_m, FittedModel, Interval,
    IntervalDataset, IntervalSample, ModelKind, MultipleFit, MultipleKind, Theta,
};
use proptest::prelude::*;
use rand::Rng;

const EPS_H: f64 = 1e-9;

fn thetas() -> [Theta; 3] {
    [Theta::new(0.1).unwrap(), Theta::ONE_THIRD, Theta::new(1.0).unwrap()]
}

fn random_interval(rng: &mut impl Rng) -> Interval {
    Interval::new(rng.random_range(-50.0..50.0), rng.random_range(0.0..20.0)).unwrap()
}

#[test]
fn d_theta_axioms_on_random_triples() {
    let mut rng = oracle::rng(1);
    for _ in 0..100_000 {
        let theta = Theta::new(rng.random_range(0.01..2.0)).unwrap();
        let (a, b, c) = (random_interval(&mut rng), random_interval(&mut rng), random_interval(&mut rng));
        let ab = a.d_theta(&b, theta);
        assert!(ab >= 0.0);
        assert_eq!(a.d_theta(&a, theta), 0.0);
        assert_eq!(ab, b.d_theta(&a, theta));
        if a != b {
            assert!(ab > 0.0);
        }
        let bound = a.d_theta(&c, theta) + c.d_theta(&b, theta);
        assert!(ab <= bound * (1.0 + 1e-12) + 1e-12, "{ab} > {bound}");
    }
}

proptest! {
    #[test]
    fn hukuhara_round_trip(am in -1e3..1e3f64, asp in 0.0..1e3f64, bm in -1e3..1e3f64, frac in 0.0..1.0f64) {
        let a = Interval::new(am, asp).unwrap();
        let b = Interval::new(bm, asp * frac).unwrap();
        let c = a.hukuhara_diff(&b).unwrap();
        let back = b.add_scaled(1.0, &c);
        prop_assert!((back.mid() - a.mid()).abs() <= 1e-12 * (1.0 + a.mid().abs() + b.mid().abs()));
        prop_assert!((back.spr() - a.spr()).abs() <= 1e-12 * (1.0 + a.spr()));
    }
}

fn hospital_simple() -> IntervalDataset {
    hospital_table().select("y", &["x1"]).unwrap()
}

#[test]
fn spread_coefficients_are_theta_invariant() {
    let ds = hospital_simple();
    let x = &ds.predictors()[0];
    let base = fit_mg(x, ds.response(), Theta::ONE_THIRD).unwrap().coefficients.canonical();
    for theta in thetas() {
        let c = fit_mg(x, ds.response(), theta).unwrap().coefficients.canonical();
        assert_eq!(c, base);
    }
    let mut rng = oracle::rng(2);
    let mut datasets = vec![hospital()];
    for _ in 0..30 {
        let k = rng.random_range(1..=3);
        let n = rng.random_range(2 * k + 2..=30);
        datasets.push(oracle::random_instance(&mut rng, n, k).dataset());
    }
    for ds in &datasets {
        let base = fit_mflrm(ds, Theta::ONE_THIRD).unwrap();
        for theta in thetas() {
            let f = fit_mflrm(ds, theta).unwrap();
            assert_eq!(f.coefficients, base.coefficients);
        }
    }
}

fn check_fit(ds: &IntervalDataset, fit: &MultipleFit) {
    assert!(fit.kkt_residual <= 1e-8, "kkt residual {}", fit.kkt_residual);
    assert!(fit.delta.spr() >= 0.0);
    for j in 0..ds.n() {
        let row = ds.row(j);
        let spread: f64 = (0..fit.k())
            .map(|i| {
                let c = fit.coefficients.canonical(i);
                c[1] * row[i].spr() + c[2] * row[i].mid().abs()
            })
            .sum();
        assert!(spread <= ds.response()[j].spr() + EPS_H, "row {j} infeasible");
    }
    let residuals = fit.residuals(ds).unwrap();
    let mean = residuals.mean().unwrap();
    assert!((mean.mid() - fit.delta.mid()).abs() <= 1e-9 * (1.0 + fit.delta.mid().abs()));
    assert!((mean.spr() - fit.delta.spr()).abs() <= 1e-9 * (1.0 + fit.delta.spr()));
}

#[test]
fn multiple_fits_are_feasible_with_kkt_certificates() {
    let mut rng = oracle::rng(3);
    let mut datasets = vec![hospital()];
    for _ in 0..100 {
        let k = rng.random_range(1..=3);
        let n = rng.random_range(2 * k + 2..=30);
        datasets.push(oracle::random_instance(&mut rng, n, k).dataset());
    }
    for ds in &datasets {
        for theta in thetas() {
            check_fit(ds, &fit_mblrm(ds, theta).unwrap());
            check_fit(ds, &fit_mflrm(ds, theta).unwrap());
            check_fit(ds, &fit_multiple_m(ds, theta).unwrap());
        }
    }
}

#[test]
fn hospital_r_squared_nesting() {
    let ds = hospital();
    let simple = hospital_simple();
    let r2 = |kind: ModelKind, ds: &IntervalDataset| FittedModel::fit(kind, ds, Theta::ONE_THIRD).unwrap().r_squared();
    let mflrm = r2(ModelKind::Mflrm, &ds);
    let mblrm = r2(ModelKind::Mblrm, &ds);
    let mult_m = r2(ModelKind::MultipleM, &ds);
    let mg = r2(ModelKind::ModelMG, &simple);
    let m = r2(ModelKind::ModelM, &simple);
    assert!(mflrm >= mblrm, "{mflrm} < {mblrm}");
    assert!(mflrm >= mg && mg >= m, "{mflrm} {mg} {m}");
    assert!(mflrm >= mult_m && mult_m >= 0.0);
}

#[test]
fn hospital_design_is_centered() {
    let ds = hospital();
    for kind in [MultipleKind::Mblrm, MultipleKind::Mflrm, MultipleKind::MultipleM] {
        let d = assemble_design(&ds, kind);
        for m in [&d.f_m, &d.f_s] {
            for c in m.column_iter() {
                assert!(c.mean().abs() <= 1e-9);
            }
        }
        assert!(d.v_m.mean().abs() <= 1e-9 && d.v_s.mean().abs() <= 1e-9);
        assert!(d.raw_spr_x.min() >= 0.0 && d.raw_abs_mid_x.min() >= 0.0);
    }
}

#[test]
fn signed_spread_block_on_hospital() {
    let ds = hospital();
    let unsigned = fit_mblrm_with(&ds, Theta::ONE_THIRD, SpreadSigns::Unsigned).unwrap();
    let signed = fit_mblrm_with(&ds, Theta::ONE_THIRD, SpreadSigns::Signed).unwrap();
    check_fit(&ds, &unsigned);
    check_fit(&ds, &signed);
    // Both signs of x1 and x2 are positive on this data, so the readings coincide.
    assert_eq!(unsigned.coefficients, signed.coefficients);
}

#[test]
fn report_round_trip_reproduces_predictions() {
    let simple = hospital_simple();
    let multi = hospital();
    for kind in ModelKind::ALL {
        let ds = if kind.is_simple() { &simple } else { &multi };
        let fit = FittedModel::fit(kind, ds, Theta::ONE_THIRD).unwrap();
        let report = FitReport::new(&fit, ds);
        let back = FitReport::from_json(&report.to_json()).unwrap();
        assert_eq!(back, report);
        let model = back.to_model().unwrap();
        for j in 0..ds.n() {
            let a = fit.predict(&ds.row(j)).unwrap();
            let b = model.predict(&ds.row(j)).unwrap();
            assert!((a.mid() - b.mid()).abs() <= 1e-12 * (1.0 + a.mid().abs()));
            assert!((a.spr() - b.spr()).abs() <= 1e-12 * (1.0 + a.spr()));
        }
    }
}

#[test]
fn prediction_distance_matches_r_squared() {
    let ds = hospital_simple();
    let theta = Theta::ONE_THIRD;
    let fit = FittedModel::fit(ModelKind::ModelMG, &ds, theta).unwrap();
    let pred: Vec<Interval> = (0..ds.n()).map(|j| fit.predict(&ds.row(j)).unwrap()).collect();
    let msd = mean_sq_distance(ds.response(), &pred, theta);
    let total = ds.response().var(theta).unwrap();
    assert!((msd - (1.0 - fit.r_squared()) * total).abs() <= 1e-6);
}

#[test]
fn csv_round_trip_is_exact() {
    let ds = hospital();
    let text = emit_csv(&ds);
    let table = read_table(text.as_bytes()).unwrap();
    assert_eq!(table.select("y", &["x1", "x2"]).unwrap(), ds);

    let mut rng = oracle::rng(4);
    let col = |name: &str, rng: &mut oracle::ChaChaRng| {
        let ends: Vec<(f64, f64)> = (0..25)
            .map(|_| {
                let a: f64 = rng.random_range(-1e6..1e6);
                (a, a + rng.random_range(0.0..1e3))
            })
            .collect();
        IntervalSample::from_endpoints(name, &ends).unwrap()
    };
    let ds = IntervalDataset::new(col("y", &mut rng), vec![col("a", &mut rng), col("b", &mut rng)]).unwrap();
    let table = read_table(emit_csv(&ds).as_bytes()).unwrap();
    assert_eq!(table.select("y", &["a", "b"]).unwrap(), ds);
}

proptest! {
    #[test]
    fn csv_round_trip_any_scale(
        rows in prop::collection::vec((-1e12..1e12f64, 0.0..1e9f64, -1e-3..1e-3f64, 0.0..1e-6f64), 1..20)
    ) {
        let y: Vec<(f64, f64)> = rows.iter().map(|r| (r.0, r.0 + r.1)).collect();
        let x: Vec<(f64, f64)> = rows.iter().map(|r| (r.2, r.2 + r.3)).collect();
        let ds = IntervalDataset::new(
            IntervalSample::from_endpoints("y", &y).unwrap(),
            vec![IntervalSample::from_endpoints("x", &x).unwrap()],
        )
        .unwrap();
        let table = read_table(emit_csv(&ds).as_bytes()).unwrap();
        prop_assert_eq!(table.select("y", &["x"]).unwrap(), ds);
    }
}

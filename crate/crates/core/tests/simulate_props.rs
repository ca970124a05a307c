use intreg::simulate::{box_stats, run_study, run_study_with, study_csv, StudyModel, StudyOptions, StudyResult};
use intreg::{Error, Theta};

const REPS: usize = 1000;

const MODELS: [StudyModel; 3] = [StudyModel::M1, StudyModel::M2, StudyModel::M3];

fn study(model: StudyModel, n: usize, reps: usize) -> StudyResult {
    run_study(model, n, reps, 7, Theta::ONE_THIRD).unwrap()
}

#[test]
fn serial_and_parallel_agree() {
    for model in MODELS {
        let serial = StudyOptions {
            parallel: false,
            ..StudyOptions::default()
        };
        let a = run_study_with(model, 30, 200, 99, Theta::ONE_THIRD, serial).unwrap();
        let b = run_study_with(model, 30, 200, 99, Theta::ONE_THIRD, StudyOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(study_csv(&a), study_csv(&b));
        let c = run_study_with(model, 30, 200, 99, Theta::ONE_THIRD, StudyOptions::default()).unwrap();
        assert_eq!(study_csv(&b), study_csv(&c));
    }
}

#[test]
fn zero_replicates_rejected() {
    assert!(matches!(run_study(StudyModel::M1, 30, 0, 1, Theta::ONE_THIRD), Err(Error::EmptySample)));
}

#[test]
fn mse_shrinks_and_bias_settles_with_n() {
    let (mut settled, mut total) = (0, 0);
    for model in MODELS {
        let runs: Vec<StudyResult> = [30, 100, 500].iter().map(|&n| study(model, n, REPS)).collect();
        let params = runs[0].parameters.len();
        total += params;
        for p in 0..params {
            let mse: Vec<f64> = runs.iter().map(|r| r.parameters[p].mse).collect();
            assert!(
                mse[2] < mse[1] && mse[1] < mse[0],
                "{model} {}: {mse:?}",
                runs[0].parameters[p].name
            );
            let bias: Vec<f64> = runs.iter().map(|r| (r.parameters[p].mean - r.parameters[p].truth).abs()).collect();
            // Monte Carlo standard error of each estimated mean, bounded by sqrt(mse / reps).
            let se: Vec<f64> = mse.iter().map(|m| (m / REPS as f64).sqrt()).collect();
            let step = |a: usize, b: usize| bias[b] <= bias[a] + 2.0 * (se[a] * se[a] + se[b] * se[b]).sqrt();
            if step(0, 1) && step(1, 2) {
                settled += 1;
            }
        }
        for r in &runs {
            assert_eq!(r.failures, 0);
        }
    }
    assert!(10 * settled >= 9 * total, "{settled}/{total} parameters with non-increasing |bias|");
}

#[test]
fn iqr_shrinks_from_30_to_100() {
    for model in MODELS {
        let small = box_stats(&study(model, 30, 1000));
        let large = box_stats(&study(model, 100, 1000));
        for (a, b) in small.iter().zip(&large) {
            assert_eq!(a.parameter, b.parameter);
            assert!(b.iqr() < a.iqr(), "{model} {}: {} vs {}", a.parameter, a.iqr(), b.iqr());
        }
    }
}

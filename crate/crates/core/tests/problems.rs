use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vmpg::objective::gradient_check;
use vmpg::problems::{
    generate_qp, generate_regression, generate_regression_raw, load_csv, precondition, read_csv, LeastSquares,
    Logistic, Loss, RawRegression, RegressionProblem, RegressionSpec,
};
use vmpg::prox::Regularizer;
use vmpg::solver::{solve_with_observer, Method, SolverConfig};
use vmpg::stepsize::{bb1, bb2, StepPair};
use vmpg::{DenseMatrix, DenseVector, Error, SmoothObjective};

fn eigenvalues(m: &DenseMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.to_nalgebra()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn random_point(n: usize, rng: &mut ChaCha8Rng, scale: f64) -> DenseVector {
    DenseVector::from_fn(n, |_| rng.random_range(-scale..scale)).unwrap()
}

#[test]
fn qp_condition_number_matches_request() {
    let qp = generate_qp(100, 1e4, 3).unwrap();
    let ev = eigenvalues(&qp.q_mat);
    let cond = ev[ev.len() - 1] / ev[0];
    assert!((0.999e4..=1.001e4).contains(&cond), "cond = {cond}");
    assert!((qp.m() - ev[0]).abs() <= 1e-8 * ev[0]);
    assert!((qp.l() - ev[ev.len() - 1]).abs() <= 1e-8 * ev[ev.len() - 1]);
}

#[test]
fn qp_with_unit_kappa_is_scalar_identity() {
    let qp = generate_qp(12, 1.0, 9).unwrap();
    let ev = eigenvalues(&qp.q_mat);
    for e in ev {
        assert!((e - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn qp_generation_is_deterministic() {
    let a = generate_qp(30, 1e3, 42).unwrap();
    let b = generate_qp(30, 1e3, 42).unwrap();
    assert_eq!(a.q_mat.as_row_major(), b.q_mat.as_row_major());
    assert_eq!(a.q.as_slice(), b.q.as_slice());
    let c = generate_qp(30, 1e3, 43).unwrap();
    assert_ne!(a.q.as_slice(), c.q.as_slice());
}

#[test]
fn qp_gradient_vanishes_at_minimizer() {
    let qp = generate_qp(40, 100.0, 5).unwrap();
    let f = qp.objective();
    let q = DMatrix::from_row_slice(40, 40, qp.q_mat.as_row_major());
    let rhs = -DVector::from_column_slice(qp.q.as_slice());
    let x = q.lu().solve(&rhs).unwrap();
    let xv = DenseVector::new(x.iter().copied().collect()).unwrap();
    assert!(f.gradient(&xv).max_abs() <= 1e-10);
    assert!(xv.sub(&qp.unconstrained_minimizer()).max_abs() <= 1e-10 * (1.0 + xv.max_abs()));
}

#[test]
fn regression_generation_is_deterministic() {
    let a = generate_regression(200, 1000, Loss::LeastSquares, 11).unwrap();
    let b = generate_regression(200, 1000, Loss::LeastSquares, 11).unwrap();
    assert_eq!(a.a.as_row_major(), b.a.as_row_major());
    assert_eq!(a.b.as_slice(), b.b.as_slice());
}

#[test]
fn noiseless_least_squares_interpolates() {
    let spec = RegressionSpec::new(50, 10, Loss::LeastSquares, 2).with_noise(0.0);
    let raw = generate_regression_raw(&spec).unwrap();
    let x = raw.x_star.clone().unwrap();
    let ax = DenseVector::new(raw.a.matvec(x.as_slice(), vmpg::Execution::Sequential)).unwrap();
    assert!(ax.sub(&raw.b).norm() == 0.0);
}

#[test]
fn logistic_labels_are_signs() {
    let p = generate_regression(80, 5, Loss::Logistic, 4).unwrap();
    assert!(p.b.iter().all(|&y| y == 1.0 || y == -1.0));
}

#[test]
fn logistic_value_at_origin_is_ln_two() {
    for seed in 0..3 {
        let p = generate_regression(60, 8, Loss::Logistic, seed).unwrap();
        let f = p.objective();
        assert!((f.value(&DenseVector::zeros(8)) - std::f64::consts::LN_2).abs() <= 1e-15);
    }
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let qp = generate_qp(15, 1e3, 1).unwrap().objective();
    let ls = generate_regression(40, 12, Loss::LeastSquares, 1).unwrap();
    let lr = generate_regression(40, 12, Loss::Logistic, 1).unwrap();
    let ridge_ls = LeastSquares::new(ls.a.clone(), ls.b.clone(), 0.3, 0.05);
    let ridge_lr = Logistic::new(lr.a.clone(), lr.b.clone(), 0.3, 0.05);
    let objectives: Vec<(&str, Box<dyn SmoothObjective>)> = vec![
        ("qp", Box::new(qp)),
        ("ls", ls.objective()),
        ("lr", lr.objective()),
        ("ls ridge", Box::new(ridge_ls)),
        ("lr ridge", Box::new(ridge_lr)),
    ];
    for (name, f) in &objectives {
        for _ in 0..20 {
            let x = random_point(f.dim(), &mut rng, 2.0);
            let err = gradient_check(f.as_ref(), &x, 1e-6);
            assert!(err <= 1e-5, "{name}: relative error {err}");
        }
    }
}

#[test]
fn logistic_is_stable_for_huge_margins() {
    let a = DenseMatrix::from_row_major(2, 1, vec![1.0, -1.0]).unwrap();
    let b = DenseVector::new(vec![1.0, 1.0]).unwrap();
    let f = Logistic::new(a, b, 0.5, 0.0);
    let x = DenseVector::new(vec![800.0]).unwrap();
    let v = f.value(&x);
    let g = f.gradient(&x);
    assert!(v.is_finite() && g.as_slice()[0].is_finite());
    assert!((v - 400.0).abs() <= 1e-9);
    assert!((g.as_slice()[0] - 0.5).abs() <= 1e-12);
}

#[test]
fn least_squares_lipschitz_matches_singular_values() {
    let p = generate_regression(60, 20, Loss::LeastSquares, 8).unwrap();
    let f = LeastSquares::new(p.a.clone(), p.b.clone(), 1.0 / 60.0, 0.0);
    let sigma = p.a.to_nalgebra().singular_values().max();
    let expected = 2.0 / 60.0 * sigma * sigma;
    let got = f.smoothness().unwrap();
    assert!((got - expected).abs() <= 1e-8 * expected, "{got} vs {expected}");
}

#[test]
fn solver_trajectory_stepsizes_stay_in_inverse_spectrum() {
    let qp = generate_qp(60, 1e3, 21).unwrap();
    let f = qp.objective();
    let mut iterates = vec![];
    let cfg = SolverConfig {
        eps_tol: 1e-8,
        ..SolverConfig::with_method(Method::PgBb)
    };
    solve_with_observer(&f, &Regularizer::Zero, &DenseVector::zeros(60), &cfg, |ev| {
        if iterates.is_empty() {
            iterates.push(ev.x.clone());
        }
        iterates.push(ev.x_next.clone());
    })
    .unwrap();
    assert!(iterates.len() > 5);
    let eps = 1e-9;
    for w in iterates.windows(2) {
        let sp = StepPair::from_iterates(&w[1], &w[0], &f.gradient(&w[1]), &f.gradient(&w[0])).unwrap();
        if sp.s().norm() == 0.0 {
            continue;
        }
        let (a1, a2) = (bb1(&sp).unwrap(), bb2(&sp).unwrap());
        assert!(a2 >= 1.0 / qp.l() - eps && a1 <= 1.0 / qp.m() + eps, "{a2} {a1}");
    }
}

fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    f.flush().unwrap();
    f
}

#[test]
fn csv_small_matrix_is_recovered_exactly() {
    let file = write_tmp("1.5,2,-1\n3,4.25,1\n-5,6,1\n");
    let raw = read_csv(file.path(), 2).unwrap();
    assert_eq!(raw.a.rows(), 3);
    assert_eq!(raw.a.cols(), 2);
    assert_eq!(raw.a.as_row_major(), &[1.5, 2.0, 3.0, 4.25, -5.0, 6.0]);
    assert_eq!(raw.b.as_slice(), &[-1.0, 1.0, 1.0]);
}

#[test]
fn csv_header_and_label_first() {
    let file = write_tmp("y,a,b\n1,2,3\n-1,5,7\n");
    let raw = read_csv(file.path(), 0).unwrap();
    assert_eq!(raw.a.as_row_major(), &[2.0, 3.0, 5.0, 7.0]);
    assert_eq!(raw.b.as_slice(), &[1.0, -1.0]);
}

#[test]
fn csv_nan_cell_reports_location() {
    let file = write_tmp("1,2,3\n4,NaN,6\n");
    match read_csv(file.path(), 2) {
        Err(Error::Parse { row, column, .. }) => {
            assert_eq!(row, 2);
            assert_eq!(column, 1);
        }
        other => panic!("expected parse error, got {other:?}"),
    }
    let file = write_tmp("1,2,3\n4,abc,6\n");
    let msg = read_csv(file.path(), 2).unwrap_err().to_string();
    assert!(msg.contains("row 2") && msg.contains("column 1"), "{msg}");
}

#[test]
fn csv_ragged_row_is_an_error() {
    let file = write_tmp("1,2,3\n4,5\n");
    assert!(matches!(read_csv(file.path(), 0), Err(Error::Parse { row: 2, .. })));
}

#[test]
fn csv_empty_file_is_an_error() {
    let file = write_tmp("");
    assert!(matches!(read_csv(file.path(), 0), Err(Error::EmptyData { .. })));
    let file = write_tmp("a,b\n");
    assert!(matches!(read_csv(file.path(), 0), Err(Error::EmptyData { .. })));
}

#[test]
fn csv_constant_column_becomes_zero() {
    let file = write_tmp("7,1,1\n7,2,-1\n7,4,1\n");
    let p = load_csv(file.path(), 2, Loss::LeastSquares, 0.0).unwrap();
    assert_eq!(p.preconditioning.zero_columns, vec![0]);
    for i in 0..3 {
        assert_eq!(p.a.get(i, 0), 0.0);
    }
    let col: Vec<f64> = (0..3).map(|i| p.a.get(i, 1)).collect();
    assert!(col.iter().sum::<f64>().abs() <= 1e-15);
    assert!((col.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() <= 1e-15);
    let (again, meta) = precondition(&p.a);
    assert_eq!(meta.zero_columns, vec![0]);
    for (x, y) in again.as_row_major().iter().zip(p.a.as_row_major()) {
        assert!((x - y).abs() <= 1e-12);
    }
}

#[test]
fn preconditioning_is_idempotent() {
    for seed in 0..5 {
        let raw = generate_regression_raw(&RegressionSpec::new(30, 7, Loss::LeastSquares, seed)).unwrap();
        let (once, _) = precondition(&raw.a);
        let (twice, _) = precondition(&once);
        for (x, y) in once.as_row_major().iter().zip(twice.as_row_major()) {
            assert!((x - y).abs() <= 1e-12);
        }
    }
}

#[test]
fn logistic_rejects_non_sign_labels() {
    let raw = RawRegression {
        a: DenseMatrix::from_row_major(2, 1, vec![1.0, 2.0]).unwrap(),
        b: DenseVector::new(vec![1.0, 0.0]).unwrap(),
        x_star: None,
    };
    assert!(RegressionProblem::from_raw(raw, Loss::Logistic, 0.0, 0).is_err());
}

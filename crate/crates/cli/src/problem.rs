use vmpg::problems::{
    generate_qp, generate_regression_raw, load_csv, LeastSquares, Logistic, Loss, RegressionProblem, RegressionSpec,
};
use vmpg::prox::Regularizer;
use vmpg::{DenseVector, Execution, Partition, SmoothObjective};

use crate::config::{ProblemKind, ProblemSpec, RegKind};
use crate::error::{CliError, CliResult};

/// A problem ready to hand to the solver.
pub struct Instance {
    pub f: Box<dyn SmoothObjective>,
    pub g: Regularizer,
    pub x0: DenseVector,
}

fn regression_spec(spec: &ProblemSpec, loss: Loss, seed: u64) -> RegressionSpec {
    RegressionSpec::new(spec.samples, spec.n, loss, seed)
        .with_noise(spec.noise)
        .with_lambda(spec.lambda)
}

fn regularizer(spec: &ProblemSpec, n: usize) -> CliResult<Regularizer> {
    Ok(match spec.reg {
        RegKind::None | RegKind::Ridge => Regularizer::Zero,
        RegKind::Nonneg => Regularizer::Nonnegative,
        RegKind::Lasso => Regularizer::lasso(spec.lambda)?,
        RegKind::ElasticNet => Regularizer::elastic_net(spec.lambda, spec.lambda2)?,
        RegKind::GroupLasso => {
            if spec.group_size == 0 || !n.is_multiple_of(spec.group_size) {
                return Err(CliError::config(format!("group size {} must divide n = {n}", spec.group_size)));
            }
            Regularizer::group_lasso(spec.lambda, Partition::uniform(n / spec.group_size, spec.group_size)?)?
        }
        RegKind::Simplex => Regularizer::simplex(),
    })
}

pub fn build(spec: &ProblemSpec, seed: u64, exec: Execution) -> CliResult<Instance> {
    let f: Box<dyn SmoothObjective> = match spec.kind.loss() {
        None => Box::new(generate_qp(spec.n, spec.kappa, seed)?.objective().with_execution(exec)),
        Some(loss) => {
            let p = match &spec.data {
                Some(path) => load_csv(path, spec.label_column, loss, spec.lambda)?,
                None => RegressionProblem::generate(&regression_spec(spec, loss, seed))?,
            };
            let scale = 1.0 / p.samples() as f64;
            let ridge = if spec.reg == RegKind::Ridge { spec.lambda } else { 0.0 };
            match loss {
                Loss::LeastSquares => Box::new(LeastSquares::new(p.a, p.b, scale, ridge).with_execution(exec)),
                Loss::Logistic => Box::new(Logistic::new(p.a, p.b, scale, ridge).with_execution(exec)),
            }
        }
    };
    let n = f.dim();
    let g = regularizer(spec, n)?;
    let x0 = if spec.reg == RegKind::Simplex {
        DenseVector::filled(n, 1.0 / n as f64)
    } else {
        DenseVector::zeros(n)
    };
    Ok(Instance { f, g, x0 })
}

/// Rows of the generated data as written by `gen`: header and numeric rows.
pub fn generated_table(spec: &ProblemSpec, seed: u64) -> CliResult<(Vec<String>, Vec<Vec<f64>>)> {
    match spec.kind {
        ProblemKind::Qp => {
            let qp = generate_qp(spec.n, spec.kappa, seed)?;
            let mut header = vec!["q".to_string()];
            header.extend((0..spec.n).map(|j| format!("Q_{j}")));
            let rows = (0..spec.n)
                .map(|i| {
                    let mut row = vec![qp.q.as_slice()[i]];
                    row.extend_from_slice(qp.q_mat.row(i));
                    row
                })
                .collect();
            Ok((header, rows))
        }
        kind => {
            let loss = kind.loss().expect("regression kind");
            let raw = generate_regression_raw(&regression_spec(spec, loss, seed))?;
            let mut header = vec!["b".to_string()];
            header.extend((0..spec.n).map(|j| format!("a_{j}")));
            let rows = (0..raw.a.rows())
                .map(|i| {
                    let mut row = vec![raw.b.as_slice()[i]];
                    row.extend_from_slice(raw.a.row(i));
                    row
                })
                .collect();
            Ok((header, rows))
        }
    }
}

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector};
use crate::objective::SmoothObjective;
use crate::prox::Regularizer;

use super::objectives::{sigmoid, Design, LeastSquares, Logistic};
use super::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    LeastSquares,
    Logistic,
}

impl Loss {
    pub fn as_str(self) -> &'static str {
        match self {
            Loss::LeastSquares => "ls",
            Loss::Logistic => "lr",
        }
    }

    /// 1e-2 for least squares, 1e-4 for logistic.
    pub fn default_lambda(self) -> f64 {
        match self {
            Loss::LeastSquares => 1e-2,
            Loss::Logistic => 1e-4,
        }
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ls" | "least-squares" | "leastsquares" => Ok(Loss::LeastSquares),
            "lr" | "logistic" => Ok(Loss::Logistic),
            other => Err(Error::invalid("loss", format!("unknown loss `{other}` (expected ls or lr)"))),
        }
    }
}

/// Parameters of a synthetic regression instance.
#[derive(Debug, Clone)]
pub struct RegressionSpec {
    pub samples: usize,
    pub features: usize,
    pub loss: Loss,
    pub noise: f64,
    pub lambda: f64,
    pub seed: u64,
}

impl RegressionSpec {
    pub fn new(samples: usize, features: usize, loss: Loss, seed: u64) -> Self {
        RegressionSpec {
            samples,
            features,
            loss,
            noise: 0.2,
            lambda: loss.default_lambda(),
            seed,
        }
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }
}

/// Design matrix and labels before preconditioning.
#[derive(Debug, Clone)]
pub struct RawRegression {
    pub a: DenseMatrix,
    pub b: DenseVector,
    pub x_star: Option<DenseVector>,
}

/// Column statistics removed by [`precondition`].
#[derive(Debug, Clone, PartialEq)]
pub struct Preconditioning {
    pub means: Vec<f64>,
    pub norms: Vec<f64>,
    /// Columns that were constant and are left at zero.
    pub zero_columns: Vec<usize>,
}

/// Preconditioned regression instance.
#[derive(Debug, Clone)]
pub struct RegressionProblem {
    pub a: DenseMatrix,
    pub b: DenseVector,
    pub loss: Loss,
    pub lambda: f64,
    /// Generating truth, in the raw (unpreconditioned) coordinates.
    pub x_star: Option<DenseVector>,
    pub seed: u64,
    pub preconditioning: Preconditioning,
    design: Design,
}

fn largest_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut est = 0.0;
    for _ in 0..5000 {
        let w = m * &v;
        let next = v.dot(&w);
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        v = w / nw;
        if (next - est).abs() <= 1e-13 * next.abs() {
            return next;
        }
        est = next;
    }
    est
}

/// Samples `a_i ~ N(0, Sigma)`, the truth `x*` and labels, without preconditioning.
pub fn generate_regression_raw(spec: &RegressionSpec) -> Result<RawRegression> {
    let (big_n, n) = (spec.samples, spec.features);
    if big_n == 0 || n == 0 {
        return Err(Error::invalid("dimensions", format!("N = {big_n} and n = {n} must be >= 1")));
    }
    if !(spec.noise >= 0.0 && spec.noise.is_finite()) {
        return Err(Error::invalid("noise", format!("{} must be >= 0", spec.noise)));
    }
    let mut rng = rng(spec.seed);
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let mut sigma = &g * g.transpose();
    for i in 0..n {
        sigma[(i, i)] += 0.1;
    }
    let top = largest_eigenvalue(&sigma);
    sigma /= top;
    let chol = sigma
        .cholesky()
        .ok_or_else(|| Error::invalid("sigma", "covariance is not positive definite"))?;
    let l = chol.l();

    let z = DMatrix::<f64>::from_fn(big_n, n, |_, _| StandardNormal.sample(&mut rng));
    let a = z * l.transpose();
    let x_star = DVector::<f64>::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    let ax = &a * &x_star;
    let b: Vec<f64> = match spec.loss {
        Loss::LeastSquares => ax
            .iter()
            .map(|&t| {
                let v: f64 = StandardNormal.sample(&mut rng);
                t + spec.noise * v
            })
            .collect(),
        Loss::Logistic => ax
            .iter()
            .map(|&t| {
                let w: f64 = rng.random::<f64>();
                let y = sigmoid(t) + spec.noise * w;
                if y >= 0.5 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect(),
    };
    Ok(RawRegression {
        a: DenseMatrix::from_nalgebra(&a)?,
        b: DenseVector::new(b)?,
        x_star: Some(DenseVector::new(x_star.as_slice().to_vec())?),
    })
}

/// Seeded synthetic regression with the default noise level 0.2, preconditioned.
pub fn generate_regression(samples: usize, features: usize, loss: Loss, seed: u64) -> Result<RegressionProblem> {
    RegressionProblem::generate(&RegressionSpec::new(samples, features, loss, seed))
}

/// Centers every column and scales it to unit l2 norm. Columns that are
/// constant become exactly zero and are reported instead of scaled.
pub fn precondition(a: &DenseMatrix) -> (DenseMatrix, Preconditioning) {
    let (rows, cols) = (a.rows(), a.cols());
    let mut out = a.as_row_major().to_vec();
    let mut means = vec![0.0; cols];
    let mut norms = vec![0.0; cols];
    let mut zero_columns = Vec::new();
    for j in 0..cols {
        let scale = (0..rows).map(|i| a.get(i, j).abs()).fold(0.0, f64::max);
        let mean = (0..rows).map(|i| a.get(i, j)).sum::<f64>() / rows as f64;
        for i in 0..rows {
            out[i * cols + j] -= mean;
        }
        let norm = (0..rows).map(|i| out[i * cols + j].powi(2)).sum::<f64>().sqrt();
        means[j] = mean;
        norms[j] = norm;
        if norm <= 1e-12 * scale.max(f64::MIN_POSITIVE) * (rows as f64).sqrt() || norm == 0.0 {
            for i in 0..rows {
                out[i * cols + j] = 0.0;
            }
            zero_columns.push(j);
        } else {
            for i in 0..rows {
                out[i * cols + j] /= norm;
            }
        }
    }
    let m = DenseMatrix::from_row_major(rows, cols, out).expect("finite entries stay finite");
    (
        m,
        Preconditioning {
            means,
            norms,
            zero_columns,
        },
    )
}

impl RegressionProblem {
    pub fn generate(spec: &RegressionSpec) -> Result<Self> {
        let raw = generate_regression_raw(spec)?;
        Self::from_raw(raw, spec.loss, spec.lambda, spec.seed)
    }

    /// Applies [`precondition`] to the raw design.
    pub fn from_raw(raw: RawRegression, loss: Loss, lambda: f64, seed: u64) -> Result<Self> {
        if raw.a.rows() != raw.b.len() {
            return Err(Error::DimensionMismatch {
                expected: raw.a.rows(),
                found: raw.b.len(),
            });
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid("lambda", format!("{lambda} must be >= 0")));
        }
        if loss == Loss::Logistic {
            if let Some(i) = raw.b.iter().position(|&y| y != 1.0 && y != -1.0) {
                return Err(Error::invalid("labels", format!("logistic label {} at row {i} is not +1 or -1", raw.b[i])));
            }
        }
        let (a, preconditioning) = precondition(&raw.a);
        let design = Design::new(a.clone());
        Ok(RegressionProblem {
            a,
            b: raw.b,
            loss,
            lambda,
            x_star: raw.x_star,
            seed,
            preconditioning,
            design,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    pub fn samples(&self) -> usize {
        self.a.rows()
    }

    /// Mean loss over the samples; no penalty term.
    pub fn objective(&self) -> Box<dyn SmoothObjective> {
        let scale = 1.0 / self.samples() as f64;
        match self.loss {
            Loss::LeastSquares => Box::new(LeastSquares::from_design(self.design.clone(), self.b.clone(), scale, 0.0)),
            Loss::Logistic => Box::new(Logistic::from_design(self.design.clone(), self.b.clone(), scale, 0.0)),
        }
    }

    /// `lambda ||x||_1`, or zero when `lambda = 0`.
    pub fn regularizer(&self) -> Regularizer {
        if self.lambda > 0.0 {
            Regularizer::Lasso { lambda: self.lambda }
        } else {
            Regularizer::Zero
        }
    }
}

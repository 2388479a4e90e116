//! Scaled proximal operators `prox_{g,U}(v) = argmin_x g(x) + 1/2 ||v - x||_U^2`
//! for diagonal (and block-diagonal) `U`.

mod calculus;
pub mod oracle;

pub use calculus::{BlockSeparable, DiagonalAffine, LinearTilt, QuadraticPenalty, ScaledShift};
pub use oracle::numeric_prox_oracle;

use crate::error::{check_dim, Error, Result};
use crate::linalg::DenseVector;
use crate::metric::{BlockDiagonalMetric, DiagonalMetric, Partition};
use crate::objective::ProxRegularizer;

/// Pivot-function tolerance for the simplex bisection.
pub const SIMPLEX_TOL: f64 = 1e-12;
/// Iteration cap for the simplex bisection.
pub const SIMPLEX_MAX_ITER: usize = 200;

/// Relative spread allowed inside a group before the metric counts as non-constant.
const GROUP_METRIC_RTOL: f64 = 1e-12;

/// `sign(x) (|x| - t)_+`.
fn soft_threshold(x: f64, t: f64) -> f64 {
    let m = x.abs() - t;
    if m > 0.0 {
        m.copysign(x)
    } else {
        0.0
    }
}

/// Lasso: `sign(x_i) (|x_i| - lambda / u_i)_+`.
pub fn prox_lasso(x: &DenseVector, metric: &DiagonalMetric, lambda: f64) -> Result<DenseVector> {
    check_dim(metric.dim(), x.len())?;
    Ok(x.zip_map(metric.diag(), |xi, ui| soft_threshold(xi, lambda / ui)))
}

/// Group lasso under a metric that is `u_j I` on each group.
pub fn prox_group_lasso(
    x: &DenseVector,
    metric: &DiagonalMetric,
    lambda: f64,
    groups: &Partition,
) -> Result<DenseVector> {
    check_dim(metric.dim(), x.len())?;
    check_dim(groups.dim(), x.len())?;
    let u = metric.as_slice();
    let xs = x.as_slice();
    let mut out = vec![0.0; x.len()];
    for j in 0..groups.num_blocks() {
        let r = groups.range(j);
        let uj = group_scalar(&u[r.clone()]).ok_or(Error::NonUniformGroupMetric { group: j })?;
        let norm = xs[r.clone()].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let shrink = 1.0 - lambda / (uj * norm);
        if shrink > 0.0 {
            for i in r {
                out[i] = shrink * xs[i];
            }
        }
    }
    Ok(DenseVector::from_vec(out))
}

fn group_scalar(u: &[f64]) -> Option<f64> {
    let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = u.iter().copied().fold(0.0, f64::max);
    (hi - lo <= GROUP_METRIC_RTOL * hi).then(|| u.iter().sum::<f64>() / u.len() as f64)
}

/// Elastic net `lambda1 ||x||_1 + (lambda2 / 2) ||x||^2`:
/// `sign(x_i) (u_i |x_i| / (lambda2 + u_i) - lambda1 / (lambda2 + u_i))_+`.
pub fn prox_elastic_net(
    x: &DenseVector,
    metric: &DiagonalMetric,
    lambda1: f64,
    lambda2: f64,
) -> Result<DenseVector> {
    check_dim(metric.dim(), x.len())?;
    Ok(x.zip_map(metric.diag(), |xi, ui| {
        let d = lambda2 + ui;
        let m = ui / d * xi.abs() - lambda1 / d;
        if m > 0.0 {
            m.copysign(xi)
        } else {
            0.0
        }
    }))
}

/// Projection onto the nonnegative orthant; coordinatewise for diagonal `U`.
pub fn prox_nonnegative(x: &DenseVector, metric: &DiagonalMetric) -> Result<DenseVector> {
    check_dim(metric.dim(), x.len())?;
    Ok(x.map(|v| v.max(0.0)))
}

/// Projection onto the probability simplex in the `U`-norm.
pub fn prox_simplex(x: &DenseVector, metric: &DiagonalMetric, tol: f64) -> Result<DenseVector> {
    prox_simplex_with_multiplier(x, metric, tol).map(|(p, _)| p)
}

fn simplex_mass(x: &[f64], u: &[f64], nu: f64) -> f64 {
    x.iter().zip(u).map(|(xi, ui)| (xi - nu / ui).max(0.0)).sum()
}

/// As [`prox_simplex`], also returning the multiplier `nu` with
/// `sum_i (x_i - nu / u_i)_+ = 1`.
pub fn prox_simplex_with_multiplier(
    x: &DenseVector,
    metric: &DiagonalMetric,
    tol: f64,
) -> Result<(DenseVector, f64)> {
    check_dim(metric.dim(), x.len())?;
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", format!("{tol} must be > 0")));
    }
    let xs = x.as_slice();
    let u = metric.as_slice();
    let mut lo = xs
        .iter()
        .zip(u)
        .map(|(xi, ui)| ui * (xi - 1.0))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut hi = xs
        .iter()
        .zip(u)
        .map(|(xi, ui)| ui * xi)
        .fold(f64::NEG_INFINITY, f64::max);
    let (lo0, hi0) = (lo, hi);

    // mass(nu) is nonincreasing; mass(lo) >= 1 >= mass(hi)
    let mut nu = 0.5 * (lo + hi);
    let mut residual = simplex_mass(xs, u, nu) - 1.0;
    let mut iterations = 0;
    while iterations < SIMPLEX_MAX_ITER && residual.abs() > tol {
        iterations += 1;
        if residual > 0.0 {
            lo = nu;
        } else {
            hi = nu;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        nu = mid;
        residual = simplex_mass(xs, u, nu) - 1.0;
    }

    // solve exactly on the active set found by bisection
    let (num, den) = xs
        .iter()
        .zip(u)
        .filter(|(xi, ui)| **xi - nu / **ui > 0.0)
        .fold((0.0, 0.0), |(a, b), (xi, ui)| (a + xi, b + 1.0 / ui));
    if den > 0.0 {
        let polished = (num - 1.0) / den;
        let r = simplex_mass(xs, u, polished) - 1.0;
        if r.abs() < residual.abs() {
            nu = polished;
            residual = r;
        }
    }
    if residual.abs() > 10.0 * tol {
        return Err(Error::BisectionFailed {
            iterations,
            lo: lo0,
            hi: hi0,
            residual,
        });
    }
    let p = xs
        .iter()
        .zip(u)
        .map(|(xi, ui)| (xi - nu / ui).max(0.0))
        .collect();
    Ok((DenseVector::from_vec(p), nu))
}

/// Weighted consensus average: every block of the output equals
/// `(sum_j U_j)^{-1} sum_j U_j x_j`.
pub fn prox_consensus(x: &DenseVector, metric: &BlockDiagonalMetric) -> Result<DenseVector> {
    check_dim(metric.dim(), x.len())?;
    let z = consensus_average(x.as_slice(), metric)?;
    let copies = vec![z; metric.num_blocks()];
    Ok(DenseVector::concat(&copies))
}

/// The shared consensus value `z`, summed in block order.
pub fn consensus_average(x: &[f64], metric: &BlockDiagonalMetric) -> Result<DenseVector> {
    let n = metric.block(0).dim();
    if metric.num_blocks() == 1 {
        check_dim(n, x.len())?;
        return Ok(DenseVector::from_vec(x.to_vec()));
    }
    let mut num = vec![0.0; n];
    let mut den = vec![0.0; n];
    for (j, block) in metric.blocks().iter().enumerate() {
        check_dim(n, block.dim())?;
        let xj = &x[metric.partition().range(j)];
        for ((nm, dn), (&uj, &xv)) in num.iter_mut().zip(&mut den).zip(block.as_slice().iter().zip(xj)) {
            *nm += uj * xv;
            *dn += uj;
        }
    }
    Ok(DenseVector::from_vec(
        num.iter().zip(&den).map(|(a, b)| a / b).collect(),
    ))
}

/// The regularizers with closed-form scaled proxes.
#[derive(Debug, Clone, PartialEq)]
pub enum Regularizer {
    Zero,
    Lasso { lambda: f64 },
    GroupLasso { lambda: f64, groups: Partition },
    /// `lambda1 ||x||_1 + (lambda2 / 2) ||x||^2`
    ElasticNet { lambda1: f64, lambda2: f64 },
    Nonnegative,
    Simplex { tol: f64 },
    Consensus { blocks: Partition },
}

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::invalid(name, format!("{v} must be positive and finite")))
    }
}

impl Regularizer {
    pub fn lasso(lambda: f64) -> Result<Self> {
        Ok(Regularizer::Lasso {
            lambda: positive("lambda", lambda)?,
        })
    }

    pub fn group_lasso(lambda: f64, groups: Partition) -> Result<Self> {
        Ok(Regularizer::GroupLasso {
            lambda: positive("lambda", lambda)?,
            groups,
        })
    }

    pub fn elastic_net(lambda1: f64, lambda2: f64) -> Result<Self> {
        Ok(Regularizer::ElasticNet {
            lambda1: positive("lambda1", lambda1)?,
            lambda2: positive("lambda2", lambda2)?,
        })
    }

    pub fn simplex() -> Self {
        Regularizer::Simplex { tol: SIMPLEX_TOL }
    }

    pub fn consensus(blocks: Partition) -> Self {
        Regularizer::Consensus { blocks }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regularizer::Zero => "zero",
            Regularizer::Lasso { .. } => "lasso",
            Regularizer::GroupLasso { .. } => "group_lasso",
            Regularizer::ElasticNet { .. } => "elastic_net",
            Regularizer::Nonnegative => "nonneg",
            Regularizer::Simplex { .. } => "simplex",
            Regularizer::Consensus { .. } => "consensus",
        }
    }

    /// Scaled prox of the convex conjugate `g*`, where it has a closed form
    /// (lasso: box indicator; nonnegative orthant: nonpositive orthant; zero: `{0}`).
    pub fn conjugate_prox(&self, w: &DenseVector, metric: &DiagonalMetric) -> Option<Result<DenseVector>> {
        if let Err(e) = check_dim(metric.dim(), w.len()) {
            return Some(Err(e));
        }
        match self {
            Regularizer::Zero => Some(Ok(DenseVector::zeros(w.len()))),
            Regularizer::Lasso { lambda } => Some(Ok(w.map(|v| v.clamp(-lambda, *lambda)))),
            Regularizer::Nonnegative => Some(Ok(w.map(|v| v.min(0.0)))),
            _ => None,
        }
    }
}

impl ProxRegularizer for Regularizer {
    fn value(&self, x: &DenseVector) -> f64 {
        match self {
            Regularizer::Zero => 0.0,
            Regularizer::Lasso { lambda } => lambda * x.iter().map(|v| v.abs()).sum::<f64>(),
            Regularizer::GroupLasso { lambda, groups } => {
                let xs = x.as_slice();
                lambda
                    * (0..groups.num_blocks())
                        .map(|j| xs[groups.range(j)].iter().map(|v| v * v).sum::<f64>().sqrt())
                        .sum::<f64>()
            }
            Regularizer::ElasticNet { lambda1, lambda2 } => {
                lambda1 * x.iter().map(|v| v.abs()).sum::<f64>() + 0.5 * lambda2 * x.norm_sq()
            }
            Regularizer::Nonnegative => {
                if x.iter().all(|&v| v >= 0.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Regularizer::Simplex { .. } => {
                let sum: f64 = x.iter().sum();
                if x.iter().all(|&v| v >= 0.0) && (sum - 1.0).abs() <= 1e-9 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Regularizer::Consensus { blocks } => {
                let xs = x.as_slice();
                let first = &xs[blocks.range(0)];
                let scale = 1.0 + x.max_abs();
                let agree = (1..blocks.num_blocks()).all(|j| {
                    xs[blocks.range(j)]
                        .iter()
                        .zip(first)
                        .all(|(a, b)| (a - b).abs() <= 1e-12 * scale)
                });
                if agree {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    fn prox(&self, v: &DenseVector, metric: &DiagonalMetric) -> Result<DenseVector> {
        match self {
            Regularizer::Zero => {
                check_dim(metric.dim(), v.len())?;
                Ok(v.clone())
            }
            Regularizer::Lasso { lambda } => prox_lasso(v, metric, *lambda),
            Regularizer::GroupLasso { lambda, groups } => prox_group_lasso(v, metric, *lambda, groups),
            Regularizer::ElasticNet { lambda1, lambda2 } => {
                prox_elastic_net(v, metric, *lambda1, *lambda2)
            }
            Regularizer::Nonnegative => prox_nonnegative(v, metric),
            Regularizer::Simplex { tol } => prox_simplex(v, metric, *tol),
            Regularizer::Consensus { blocks } => {
                let block_metric = BlockDiagonalMetric::from_flat(metric, blocks)?;
                prox_consensus(v, &block_metric)
            }
        }
    }
}

/// Residual of the Moreau decomposition
/// `||x - prox_{g,U}(x) - U^{-1} prox_{g*,U^{-1}}(U x)||_2`.
pub fn moreau_check(g: &Regularizer, metric: &DiagonalMetric, x: &DenseVector) -> Result<f64> {
    let p = g.prox(x, metric)?;
    let ux = metric.apply(x)?;
    let inv = metric.inverse()?;
    let q = g
        .conjugate_prox(&ux, &inv)
        .ok_or_else(|| Error::invalid("g", format!("no closed-form conjugate prox for {}", g.name())))??;
    let back = metric.apply_inverse(&q)?;
    Ok(x.sub(&p).sub(&back).norm())
}

//! Numerical reference for the closed-form proxes.
//!
//! Nothing here calls the closed forms. Separable regularizers are minimized
//! coordinate by coordinate with golden-section search, group lasso by a
//! one-dimensional search along `v_j` (the minimizer of a rotation-invariant
//! penalty plus an isotropic quadratic lies on that ray), and the simplex by
//! accelerated projected gradient using a sort-based Euclidean projection.
//! Intended for small problems in tests.

use crate::error::{check_dim, Error, Result};
use crate::linalg::DenseVector;
use crate::metric::DiagonalMetric;
use crate::prox::Regularizer;

const GOLDEN_MAX_ITER: usize = 400;

/// Minimizes `g(x) + 1/2 ||v - x||_U^2`; `tol` bounds the argument error.
pub fn numeric_prox_oracle(
    g: &Regularizer,
    v: &DenseVector,
    metric: &DiagonalMetric,
    tol: f64,
) -> Result<DenseVector> {
    check_dim(metric.dim(), v.len())?;
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", format!("{tol} must be > 0")));
    }
    let vs = v.as_slice();
    let u = metric.as_slice();
    let out = match g {
        Regularizer::Zero => return Ok(v.clone()),
        Regularizer::Lasso { lambda } => separable(vs, u, tol, f64::NEG_INFINITY, |t| lambda * t.abs())?,
        Regularizer::ElasticNet { lambda1, lambda2 } => {
            separable(vs, u, tol, f64::NEG_INFINITY, |t| lambda1 * t.abs() + 0.5 * lambda2 * t * t)?
        }
        Regularizer::Nonnegative => separable(vs, u, tol, 0.0, |_| 0.0)?,
        Regularizer::GroupLasso { lambda, groups } => {
            check_dim(groups.dim(), v.len())?;
            let mut out = vec![0.0; v.len()];
            for j in 0..groups.num_blocks() {
                let r = groups.range(j);
                let uj = &u[r.clone()];
                if uj.iter().any(|&x| x != uj[0]) {
                    return Err(Error::NonUniformGroupMetric { group: j });
                }
                let vj = &vs[r.clone()];
                let norm = vj.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm == 0.0 {
                    continue;
                }
                let w = uj[0];
                let t = golden(|t| lambda * t + 0.5 * w * (t - norm).powi(2), 0.0, norm, tol)?;
                for (o, &x) in out[r].iter_mut().zip(vj) {
                    *o = t * x / norm;
                }
            }
            out
        }
        Regularizer::Consensus { blocks } => {
            check_dim(blocks.dim(), v.len())?;
            let n = blocks.range(0).len();
            let mut z = vec![0.0; n];
            for (i, zi) in z.iter_mut().enumerate() {
                let pts: Vec<(f64, f64)> = (0..blocks.num_blocks())
                    .map(|j| {
                        let k = blocks.range(j).start + i;
                        (vs[k], u[k])
                    })
                    .collect();
                let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
                let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
                *zi = golden(
                    |t| pts.iter().map(|(vj, uj)| 0.5 * uj * (t - vj).powi(2)).sum(),
                    lo,
                    hi,
                    tol,
                )?;
            }
            let mut out = Vec::with_capacity(v.len());
            for _ in 0..blocks.num_blocks() {
                out.extend_from_slice(&z);
            }
            out
        }
        Regularizer::Simplex { .. } => simplex_apg(vs, u, tol)?,
    };
    DenseVector::new(out)
}

fn separable(
    v: &[f64],
    u: &[f64],
    tol: f64,
    lower: f64,
    penalty: impl Fn(f64) -> f64,
) -> Result<Vec<f64>> {
    v.iter()
        .zip(u)
        .map(|(&vi, &ui)| {
            let lo = (vi.min(0.0) - 1.0).max(lower);
            let hi = vi.max(0.0) + 1.0;
            golden(|t| penalty(t) + 0.5 * ui * (t - vi).powi(2), lo, hi, tol)
        })
        .collect()
}

/// Golden-section search for the minimizer of a convex function on `[a, b]`.
fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(a);
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..GOLDEN_MAX_ITER {
        if (b - a).abs() <= tol * 1e-3 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        if c >= d {
            break;
        }
    }
    // compare the bracket ends too: the minimizer may sit on the boundary
    let candidates = [a, b, 0.5 * (a + b)];
    let best = candidates
        .into_iter()
        .min_by(|x, y| f(*x).total_cmp(&f(*y)))
        .unwrap();
    if (b - a).abs() > tol * (1.0 + best.abs()) {
        return Err(Error::invalid(
            "oracle",
            format!("golden section stalled with bracket [{a}, {b}]"),
        ));
    }
    Ok(best)
}

/// Euclidean projection onto `{x >= 0, sum x = 1}` by sorting.
fn project_simplex_euclid(y: &[f64]) -> Vec<f64> {
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &s) in sorted.iter().enumerate() {
        cum += s;
        let t = (cum - 1.0) / (k + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// `||x - P(x - U (x - v) / l)||_inf`, zero exactly at the constrained minimizer.
fn fixed_point_residual(x: &[f64], v: &[f64], u: &[f64], l: f64) -> f64 {
    let step: Vec<f64> = x
        .iter()
        .zip(v)
        .zip(u)
        .map(|((xi, vi), ui)| xi - ui * (xi - vi) / l)
        .collect();
    project_simplex_euclid(&step)
        .iter()
        .zip(x)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Accelerated projected gradient on `1/2 ||x - v||_U^2` over the simplex.
fn simplex_apg(v: &[f64], u: &[f64], tol: f64) -> Result<Vec<f64>> {
    let l = u.iter().copied().fold(0.0, f64::max);
    let m = u.iter().copied().fold(f64::INFINITY, f64::min);
    let q = (l / m).sqrt();
    let momentum = (q - 1.0) / (q + 1.0);
    let mut x = project_simplex_euclid(v);
    let mut y = x.clone();
    for _ in 0..200_000 {
        let step: Vec<f64> = y
            .iter()
            .zip(v)
            .zip(u)
            .map(|((yi, vi), ui)| yi - ui * (yi - vi) / l)
            .collect();
        let next = project_simplex_euclid(&step);
        let change = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        y = next
            .iter()
            .zip(&x)
            .map(|(a, b)| a + momentum * (a - b))
            .collect();
        x = next;
        if change <= tol * 1e-4 && fixed_point_residual(&x, v, u, l) <= tol * 1e-4 {
            return Ok(x);
        }
    }
    Err(Error::invalid("oracle", "simplex projected gradient did not converge"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Partition;

    fn v(x: &[f64]) -> DenseVector {
        DenseVector::new(x.to_vec()).unwrap()
    }

    fn m(x: &[f64]) -> DiagonalMetric {
        DiagonalMetric::from_vec(x.to_vec()).unwrap()
    }

    #[test]
    fn zero_returns_input_exactly() {
        let x = v(&[1.25, -3.5]);
        assert_eq!(numeric_prox_oracle(&Regularizer::Zero, &x, &m(&[1.0, 9.0]), 1e-9).unwrap(), x);
    }

    #[test]
    fn hand_examples() {
        let p = numeric_prox_oracle(&Regularizer::lasso(1.0).unwrap(), &v(&[3.0, -0.5]), &m(&[1.0, 2.0]), 1e-10)
            .unwrap();
        assert!(p.sub(&v(&[2.0, 0.0])).max_abs() < 1e-6);

        let p = numeric_prox_oracle(&Regularizer::simplex(), &v(&[2.0, 0.0]), &m(&[1.0, 1.0]), 1e-10).unwrap();
        assert!(p.sub(&v(&[1.0, 0.0])).max_abs() < 1e-6);

        let g = Regularizer::group_lasso(5.0, Partition::from_sizes(&[2]).unwrap()).unwrap();
        let p = numeric_prox_oracle(&g, &v(&[3.0, 4.0]), &m(&[2.0, 2.0]), 1e-10).unwrap();
        assert!(p.sub(&v(&[1.5, 2.0])).max_abs() < 1e-6);

        let g = Regularizer::consensus(Partition::uniform(2, 1).unwrap());
        let p = numeric_prox_oracle(&g, &v(&[0.0, 4.0]), &m(&[1.0, 3.0]), 1e-10).unwrap();
        assert!(p.sub(&v(&[3.0, 3.0])).max_abs() < 1e-6);
    }

    #[test]
    fn euclidean_projection_sums_to_one() {
        let p = project_simplex_euclid(&[0.3, 2.0, -1.0, 0.9]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(p.iter().all(|&x| x >= 0.0));
    }
}

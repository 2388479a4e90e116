use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector};

use super::objectives::Quadratic;
use super::rng;

/// `1/2 x^T Q x + q^T x + p` with `Q = H D H^T`.
#[derive(Debug, Clone)]
pub struct QPProblem {
    pub q_mat: DenseMatrix,
    pub q: DenseVector,
    pub p: f64,
    pub kappa: f64,
    pub seed: u64,
    /// Diagonal of `D`, ascending.
    pub eigenvalues: Vec<f64>,
    /// `H`, orthogonal.
    pub basis: DenseMatrix,
}

/// Seeded QP with eigenvalues log-uniformly spaced in `[1, kappa]`.
pub fn generate_qp(n: usize, kappa: f64, seed: u64) -> Result<QPProblem> {
    if n < 2 {
        return Err(Error::invalid("n", format!("{n} must be >= 2")));
    }
    if !(kappa >= 1.0 && kappa.is_finite()) {
        return Err(Error::invalid("kappa", format!("{kappa} must be a finite value >= 1")));
    }
    let mut rng = rng(seed);
    let gauss = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let q: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();

    let qr = gauss.qr();
    let mut h = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            h.column_mut(j).neg_mut();
        }
    }

    let d: Vec<f64> = (0..n)
        .map(|i| {
            if i == 0 {
                1.0
            } else if i == n - 1 {
                kappa
            } else {
                kappa.powf(i as f64 / (n - 1) as f64)
            }
        })
        .collect();
    let mut hd = h.clone();
    for (j, dj) in d.iter().enumerate() {
        hd.column_mut(j).scale_mut(*dj);
    }
    let mut qm = &hd * h.transpose();
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (qm[(i, j)] + qm[(j, i)]);
            qm[(i, j)] = avg;
            qm[(j, i)] = avg;
        }
    }
    Ok(QPProblem {
        q_mat: DenseMatrix::from_nalgebra(&qm)?,
        q: DenseVector::new(q)?,
        p: 0.0,
        kappa,
        seed,
        eigenvalues: d,
        basis: DenseMatrix::from_nalgebra(&h)?,
    })
}

impl QPProblem {
    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn m(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn l(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    /// `-Q^{-1} q = -H D^{-1} H^T q`.
    pub fn unconstrained_minimizer(&self) -> DenseVector {
        let ht = self.basis.transpose();
        let mut w = ht.matvec(self.q.as_slice(), Default::default());
        for (wi, di) in w.iter_mut().zip(&self.eigenvalues) {
            *wi = -*wi / di;
        }
        DenseVector::from_vec(self.basis.matvec(&w, Default::default()))
    }

    pub fn objective(&self) -> Quadratic {
        Quadratic::new(self.q_mat.clone(), self.q.clone(), self.p)
            .with_constants(Some(self.m()), Some(self.l()))
            .with_minimizer(self.unconstrained_minimizer())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_one_is_identity() {
        let p = generate_qp(6, 1.0, 3).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p.q_mat.get(i, j) - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn symmetric_and_deterministic() {
        let a = generate_qp(20, 100.0, 7).unwrap();
        let b = generate_qp(20, 100.0, 7).unwrap();
        assert_eq!(a.q_mat.as_row_major(), b.q_mat.as_row_major());
        assert_eq!(a.q, b.q);
        for i in 0..20 {
            for j in 0..20 {
                assert_eq!(a.q_mat.get(i, j), a.q_mat.get(j, i));
            }
        }
        assert_ne!(generate_qp(20, 100.0, 8).unwrap().q, a.q);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(generate_qp(1, 10.0, 0).is_err());
        assert!(generate_qp(5, 0.5, 0).is_err());
    }
}

use std::sync::Arc;

use crate::exec::Execution;
use crate::linalg::{dot, DenseMatrix, DenseVector};
use crate::objective::SmoothObjective;

/// `1/2 x^T Q x + q^T x + p` with `Q` symmetric positive definite.
#[derive(Debug, Clone)]
pub struct Quadratic {
    q_mat: Arc<DenseMatrix>,
    q: DenseVector,
    p: f64,
    m: Option<f64>,
    l: Option<f64>,
    minimizer: Option<DenseVector>,
    exec: Execution,
}

impl Quadratic {
    /// Spectral constants and minimizer left unknown.
    pub fn new(q_mat: DenseMatrix, q: DenseVector, p: f64) -> Self {
        assert_eq!(q_mat.rows(), q_mat.cols());
        assert_eq!(q_mat.rows(), q.len());
        Quadratic {
            q_mat: Arc::new(q_mat),
            q,
            p,
            m: None,
            l: None,
            minimizer: None,
            exec: Execution::default(),
        }
    }

    /// Diagonal `Q = diag(d)`, `d >= 0`, with exact `m`, `L` and, when
    /// every `d_i > 0`, the minimizer.
    pub fn diagonal(d: &[f64], q: DenseVector, p: f64) -> Self {
        let n = d.len();
        let q_mat = DenseMatrix::from_fn(n, n, |i, j| if i == j { d[i] } else { 0.0 }).expect("finite diagonal");
        let m = d.iter().copied().fold(f64::INFINITY, f64::min);
        let l = d.iter().copied().fold(0.0, f64::max);
        let xstar = (m > 0.0).then(|| q.zip_map(&DenseVector::new(d.to_vec()).expect("finite diagonal"), |qi, di| -qi / di));
        let quad = Quadratic::new(q_mat, q, p).with_constants(Some(m), Some(l));
        match xstar {
            Some(x) => quad.with_minimizer(x),
            None => quad,
        }
    }

    /// `1/2 ||x - c||^2`.
    pub fn shifted_square(c: &DenseVector) -> Self {
        let ones = vec![1.0; c.len()];
        Self::diagonal(&ones, c.scale(-1.0), 0.5 * c.norm_sq())
    }

    pub fn with_constants(mut self, m: Option<f64>, l: Option<f64>) -> Self {
        self.m = m;
        self.l = l;
        self
    }

    pub fn with_minimizer(mut self, x: DenseVector) -> Self {
        self.minimizer = Some(x);
        self
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.q_mat
    }

    pub fn linear(&self) -> &DenseVector {
        &self.q
    }

    fn qx(&self, x: &DenseVector) -> Vec<f64> {
        self.q_mat.matvec(x.as_slice(), self.exec)
    }
}

impl SmoothObjective for Quadratic {
    fn dim(&self) -> usize {
        self.q.len()
    }

    fn value(&self, x: &DenseVector) -> f64 {
        let qx = self.qx(x);
        0.5 * dot(x.as_slice(), &qx) + self.q.dot(x) + self.p
    }

    fn gradient(&self, x: &DenseVector) -> DenseVector {
        let qx = self.qx(x);
        DenseVector::from_vec(qx.iter().zip(&self.q).map(|(a, b)| a + b).collect())
    }

    fn value_and_gradient(&self, x: &DenseVector) -> (f64, DenseVector) {
        let qx = self.qx(x);
        let value = 0.5 * dot(x.as_slice(), &qx) + self.q.dot(x) + self.p;
        let grad = DenseVector::from_vec(qx.iter().zip(&self.q).map(|(a, b)| a + b).collect());
        (value, grad)
    }

    fn strong_convexity(&self) -> Option<f64> {
        self.m
    }

    fn smoothness(&self) -> Option<f64> {
        self.l
    }

    fn minimizer(&self) -> Option<DenseVector> {
        self.minimizer.clone()
    }

    fn optimal_value(&self) -> Option<f64> {
        self.minimizer.as_ref().map(|x| self.value(x))
    }
}

/// Row-major design matrix and its transpose, shared between objectives.
#[derive(Debug, Clone)]
pub(crate) struct Design {
    pub a: Arc<DenseMatrix>,
    pub at: Arc<DenseMatrix>,
}

impl Design {
    pub fn new(a: DenseMatrix) -> Self {
        let at = a.transpose();
        Design {
            a: Arc::new(a),
            at: Arc::new(at),
        }
    }
}

/// `scale * ||A x - b||^2 + ridge * ||x||^2`.
///
/// With `scale = 1/N` this is the mean squared loss over `N` samples.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    design: Design,
    b: DenseVector,
    scale: f64,
    ridge: f64,
    lipschitz: f64,
    exec: Execution,
}

impl LeastSquares {
    pub fn new(a: DenseMatrix, b: DenseVector, scale: f64, ridge: f64) -> Self {
        Self::from_design(Design::new(a), b, scale, ridge)
    }

    pub(crate) fn from_design(design: Design, b: DenseVector, scale: f64, ridge: f64) -> Self {
        assert_eq!(design.a.rows(), b.len());
        let lipschitz = 2.0 * scale * design.a.spectral_norm_sq(10_000) + 2.0 * ridge;
        LeastSquares {
            design,
            b,
            scale,
            ridge,
            lipschitz,
            exec: Execution::default(),
        }
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    fn residual(&self, x: &DenseVector) -> Vec<f64> {
        let mut r = self.design.a.matvec(x.as_slice(), self.exec);
        for (ri, bi) in r.iter_mut().zip(&self.b) {
            *ri -= bi;
        }
        r
    }
}

impl SmoothObjective for LeastSquares {
    fn dim(&self) -> usize {
        self.design.a.cols()
    }

    fn value(&self, x: &DenseVector) -> f64 {
        let r = self.residual(x);
        self.scale * dot(&r, &r) + self.ridge * x.norm_sq()
    }

    fn gradient(&self, x: &DenseVector) -> DenseVector {
        self.value_and_gradient(x).1
    }

    fn value_and_gradient(&self, x: &DenseVector) -> (f64, DenseVector) {
        let r = self.residual(x);
        let value = self.scale * dot(&r, &r) + self.ridge * x.norm_sq();
        let atr = self.design.at.matvec(&r, self.exec);
        let grad = atr
            .iter()
            .zip(x)
            .map(|(g, xi)| 2.0 * self.scale * g + 2.0 * self.ridge * xi)
            .collect();
        (value, DenseVector::from_vec(grad))
    }

    /// `2 * ridge`, a lower bound; zero ridge reports `None`.
    fn strong_convexity(&self) -> Option<f64> {
        (self.ridge > 0.0).then_some(2.0 * self.ridge)
    }

    fn smoothness(&self) -> Option<f64> {
        Some(self.lipschitz)
    }
}

/// `log(1 + e^t)` without overflow.
pub(crate) fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// Logistic function `1 / (1 + e^{-t})` without overflow.
pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `scale * sum_i log(1 + exp(-b_i a_i^T x)) + ridge * ||x||^2`, labels in `{-1, +1}`.
#[derive(Debug, Clone)]
pub struct Logistic {
    design: Design,
    b: DenseVector,
    scale: f64,
    ridge: f64,
    exec: Execution,
}

impl Logistic {
    pub fn new(a: DenseMatrix, b: DenseVector, scale: f64, ridge: f64) -> Self {
        Self::from_design(Design::new(a), b, scale, ridge)
    }

    pub(crate) fn from_design(design: Design, b: DenseVector, scale: f64, ridge: f64) -> Self {
        assert_eq!(design.a.rows(), b.len());
        Logistic {
            design,
            b,
            scale,
            ridge,
            exec: Execution::default(),
        }
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    /// Margins `b_i a_i^T x`.
    fn margins(&self, x: &DenseVector) -> Vec<f64> {
        let mut t = self.design.a.matvec(x.as_slice(), self.exec);
        for (ti, bi) in t.iter_mut().zip(&self.b) {
            *ti *= bi;
        }
        t
    }
}

impl SmoothObjective for Logistic {
    fn dim(&self) -> usize {
        self.design.a.cols()
    }

    fn value(&self, x: &DenseVector) -> f64 {
        let loss: f64 = self.margins(x).iter().map(|&t| softplus(-t)).sum();
        self.scale * loss + self.ridge * x.norm_sq()
    }

    fn gradient(&self, x: &DenseVector) -> DenseVector {
        self.value_and_gradient(x).1
    }

    fn value_and_gradient(&self, x: &DenseVector) -> (f64, DenseVector) {
        let t = self.margins(x);
        let loss: f64 = t.iter().map(|&ti| softplus(-ti)).sum();
        let weights: Vec<f64> = t
            .iter()
            .zip(&self.b)
            .map(|(&ti, &bi)| -bi * sigmoid(-ti))
            .collect();
        let atw = self.design.at.matvec(&weights, self.exec);
        let grad = atw
            .iter()
            .zip(x)
            .map(|(g, xi)| self.scale * g + 2.0 * self.ridge * xi)
            .collect();
        (
            self.scale * loss + self.ridge * x.norm_sq(),
            DenseVector::from_vec(grad),
        )
    }

    fn strong_convexity(&self) -> Option<f64> {
        (self.ridge > 0.0).then_some(2.0 * self.ridge)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_and_sigmoid_are_overflow_safe() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert_eq!(softplus(-1000.0), 0.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-16);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(0.0), 0.5);
    }

    #[test]
    fn shifted_square_minimizer() {
        let c = DenseVector::new(vec![1.0, -2.0]).unwrap();
        let f = Quadratic::shifted_square(&c);
        assert_eq!(f.minimizer().unwrap(), c);
        assert_eq!(f.optimal_value(), Some(0.0));
        assert_eq!(f.gradient(&c), DenseVector::zeros(2));
    }
}

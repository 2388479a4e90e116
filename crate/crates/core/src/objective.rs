//! The `f + g` interface pair.

use crate::error::Result;
use crate::linalg::DenseVector;
use crate::metric::DiagonalMetric;

/// Smooth convex part `f` of a composite objective.
pub trait SmoothObjective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &DenseVector) -> f64;

    fn gradient(&self, x: &DenseVector) -> DenseVector;

    fn value_and_gradient(&self, x: &DenseVector) -> (f64, DenseVector) {
        (self.value(x), self.gradient(x))
    }

    /// Strong convexity constant `m`, when known.
    fn strong_convexity(&self) -> Option<f64> {
        None
    }

    /// Lipschitz constant `L` of the gradient, when known.
    fn smoothness(&self) -> Option<f64> {
        None
    }

    /// Known unconstrained minimizer (test problems only).
    fn minimizer(&self) -> Option<DenseVector> {
        None
    }

    /// Known unconstrained minimum value.
    fn optimal_value(&self) -> Option<f64> {
        None
    }
}

impl<T: SmoothObjective + ?Sized> SmoothObjective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &DenseVector) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &DenseVector) -> DenseVector {
        (**self).gradient(x)
    }
    fn value_and_gradient(&self, x: &DenseVector) -> (f64, DenseVector) {
        (**self).value_and_gradient(x)
    }
    fn strong_convexity(&self) -> Option<f64> {
        (**self).strong_convexity()
    }
    fn smoothness(&self) -> Option<f64> {
        (**self).smoothness()
    }
    fn minimizer(&self) -> Option<DenseVector> {
        (**self).minimizer()
    }
    fn optimal_value(&self) -> Option<f64> {
        (**self).optimal_value()
    }
}

impl<T: SmoothObjective + ?Sized> SmoothObjective for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &DenseVector) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &DenseVector) -> DenseVector {
        (**self).gradient(x)
    }
    fn value_and_gradient(&self, x: &DenseVector) -> (f64, DenseVector) {
        (**self).value_and_gradient(x)
    }
    fn strong_convexity(&self) -> Option<f64> {
        (**self).strong_convexity()
    }
    fn smoothness(&self) -> Option<f64> {
        (**self).smoothness()
    }
    fn minimizer(&self) -> Option<DenseVector> {
        (**self).minimizer()
    }
    fn optimal_value(&self) -> Option<f64> {
        (**self).optimal_value()
    }
}

/// Convex, possibly nonsmooth part `g` with a scaled proximal mapping
/// `prox_{g,U}(v) = argmin_x g(x) + 1/2 ||v - x||_U^2`.
pub trait ProxRegularizer: Send + Sync {
    /// `g(x)`; `+inf` outside the domain.
    fn value(&self, x: &DenseVector) -> f64;

    fn prox(&self, v: &DenseVector, metric: &DiagonalMetric) -> Result<DenseVector>;
}

impl<T: ProxRegularizer + ?Sized> ProxRegularizer for &T {
    fn value(&self, x: &DenseVector) -> f64 {
        (**self).value(x)
    }
    fn prox(&self, v: &DenseVector, metric: &DiagonalMetric) -> Result<DenseVector> {
        (**self).prox(v, metric)
    }
}

impl<T: ProxRegularizer + ?Sized> ProxRegularizer for Box<T> {
    fn value(&self, x: &DenseVector) -> f64 {
        (**self).value(x)
    }
    fn prox(&self, v: &DenseVector, metric: &DiagonalMetric) -> Result<DenseVector> {
        (**self).prox(v, metric)
    }
}

/// Worst relative error of the analytic gradient against central differences.
///
/// Per coordinate the error is `|g_i - fd_i| / max(|g_i|, |fd_i|, floor)`
/// with `floor = 1e-6 * max(1, ||g||_inf)`, so coordinates whose derivative
/// is negligible relative to the whole gradient do not dominate.
pub fn gradient_check<F: SmoothObjective + ?Sized>(f: &F, x: &DenseVector, step: f64) -> f64 {
    let g = f.gradient(x);
    let floor = 1e-6 * g.max_abs().max(1.0);
    let mut worst: f64 = 0.0;
    let base = x.as_slice().to_vec();
    for i in 0..x.len() {
        let h = step * base[i].abs().max(1.0);
        let mut plus = base.clone();
        let mut minus = base.clone();
        plus[i] += h;
        minus[i] -= h;
        let fd = (f.value(&DenseVector::from_vec(plus)) - f.value(&DenseVector::from_vec(minus)))
            / (2.0 * h);
        let scale = g[i].abs().max(fd.abs()).max(floor);
        worst = worst.max((g[i] - fd).abs() / scale);
    }
    worst
}

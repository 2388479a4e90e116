//! Proximal calculus: build the prox of a transformed regularizer from the
//! prox of the original one, keeping the metric diagonal.

use crate::error::{check_dim, Error, Result};
use crate::linalg::DenseVector;
use crate::metric::{DiagonalMetric, Partition};
use crate::objective::ProxRegularizer;

/// `g(x) = alpha * phi(x) + offset`, `alpha > 0`.
///
/// `prox_{g,U}(x) = prox_{phi, U/alpha}(x)`.
#[derive(Debug, Clone)]
pub struct ScaledShift<G> {
    inner: G,
    alpha: f64,
    offset: f64,
}

impl<G: ProxRegularizer> ScaledShift<G> {
    pub fn new(inner: G, alpha: f64, offset: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid("alpha", format!("{alpha} must be positive")));
        }
        Ok(ScaledShift { inner, alpha, offset })
    }
}

impl<G: ProxRegularizer> ProxRegularizer for ScaledShift<G> {
    fn value(&self, x: &DenseVector) -> f64 {
        self.alpha * self.inner.value(x) + self.offset
    }

    fn prox(&self, v: &DenseVector, metric: &DiagonalMetric) -> Result<DenseVector> {
        self.inner.prox(v, &metric.scaled(1.0 / self.alpha)?)
    }
}

/// `g(x) = phi(A x + b)` with `A = diag(a)` nonsingular.
///
/// `prox_{g,U}(x) = A^{-1} (prox_{phi, A^{-T} U A^{-1}}(A x + b) - b)`.
#[derive(Debug, Clone)]
pub struct DiagonalAffine<G> {
    inner: G,
    scale: DenseVector,
    shift: DenseVector,
}

impl<G: ProxRegularizer> DiagonalAffine<G> {
    pub fn new(inner: G, scale: DenseVector, shift: DenseVector) -> Result<Self> {
        scale.check_same_len(&shift)?;
        if let Some(i) = scale.iter().position(|&a| a == 0.0) {
            return Err(Error::invalid("scale", format!("entry {i} is zero; A must be nonsingular")));
        }
        Ok(DiagonalAffine { inner, scale, shift })
    }

    fn forward(&self, x: &DenseVector) -> DenseVector {
        x.zip_map(&self.scale, |xi, ai| ai * xi).add(&self.shift)
    }
}

impl<G: ProxRegularizer> ProxRegularizer for DiagonalAffine<G> {
    fn value(&self, x: &DenseVector) -> f64 {
        self.inner.value(&self.forward(x))
    }

    fn prox(&self, v: &DenseVector, metric: &DiagonalMetric) -> Result<DenseVector> {
        check_dim(self.scale.len(), v.len())?;
        let transformed = DiagonalMetric::new(metric.diag().zip_map(&self.scale, |u, a| u / (a * a)))?;
        let p = self.inner.prox(&self.forward(v), &transformed)?;
        Ok(p.sub(&self.shift).zip_map(&self.scale, |pi, ai| pi / ai))
    }
}

/// `g(x) = phi(x) + a^T x + b`.
///
/// `prox_{g,U}(x) = prox_{phi,U}(x - U^{-1} a)`.
#[derive(Debug, Clone)]
pub struct LinearTilt<G> {
    inner: G,
    slope: DenseVector,
    offset: f64,
}

impl<G: ProxRegularizer> LinearTilt<G> {
    pub fn new(inner: G, slope: DenseVector, offset: f64) -> Self {
        LinearTilt { inner, slope, offset }
    }
}

impl<G: ProxRegularizer> ProxRegularizer for LinearTilt<G> {
    fn value(&self, x: &DenseVector) -> f64 {
        self.inner.value(x) + self.slope.dot(x) + self.offset
    }

    fn prox(&self, v: &DenseVector, metric: &DiagonalMetric) -> Result<DenseVector> {
        let shift = metric.apply_inverse(&self.slope)?;
        self.inner.prox(&v.sub(&shift), metric)
    }
}

/// `g(x) = phi(x) + 1/2 ||x - a||_V^2` with `V` diagonal positive.
///
/// Completing the square gives
/// `prox_{g,U}(x) = prox_{phi, U+V}((U+V)^{-1} (U x + V a))`.
#[derive(Debug, Clone)]
pub struct QuadraticPenalty<G> {
    inner: G,
    center: DenseVector,
    weights: DiagonalMetric,
}

impl<G: ProxRegularizer> QuadraticPenalty<G> {
    pub fn new(inner: G, center: DenseVector, weights: DiagonalMetric) -> Result<Self> {
        check_dim(center.len(), weights.dim())?;
        Ok(QuadraticPenalty { inner, center, weights })
    }
}

impl<G: ProxRegularizer> ProxRegularizer for QuadraticPenalty<G> {
    fn value(&self, x: &DenseVector) -> f64 {
        let d = x.sub(&self.center);
        self.inner.value(x) + 0.5 * self.weights.unorm_sq(&d).unwrap_or(f64::INFINITY)
    }

    fn prox(&self, v: &DenseVector, metric: &DiagonalMetric) -> Result<DenseVector> {
        let sum = metric.add(&self.weights)?;
        let rhs = metric.apply(v)?.add(&self.weights.apply(&self.center)?);
        self.inner.prox(&sum.apply_inverse(&rhs)?, &sum)
    }
}

/// Summable `g(x) = sum_j g_j(x_j)` over a block partition; the prox
/// splits blockwise under any (block-)diagonal metric.
pub struct BlockSeparable {
    parts: Vec<Box<dyn ProxRegularizer>>,
    partition: Partition,
}

impl BlockSeparable {
    pub fn new(parts: Vec<Box<dyn ProxRegularizer>>, partition: Partition) -> Result<Self> {
        check_dim(partition.num_blocks(), parts.len())?;
        Ok(BlockSeparable { parts, partition })
    }
}

impl ProxRegularizer for BlockSeparable {
    fn value(&self, x: &DenseVector) -> f64 {
        (0..self.parts.len())
            .map(|j| {
                let r = self.partition.range(j);
                self.parts[j].value(&x.slice(r.start, r.end))
            })
            .sum()
    }

    fn prox(&self, v: &DenseVector, metric: &DiagonalMetric) -> Result<DenseVector> {
        check_dim(self.partition.dim(), v.len())?;
        check_dim(self.partition.dim(), metric.dim())?;
        let pieces = (0..self.parts.len())
            .map(|j| {
                let r = self.partition.range(j);
                let uj = DiagonalMetric::new(metric.diag().slice(r.start, r.end))?;
                self.parts[j].prox(&v.slice(r.start, r.end), &uj)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DenseVector::concat(&pieces))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::Regularizer;

    fn v(x: &[f64]) -> DenseVector {
        DenseVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn scaling_matches_lasso_weight() {
        let g = ScaledShift::new(Regularizer::lasso(1.0).unwrap(), 0.3, 5.0).unwrap();
        let direct = Regularizer::lasso(0.3).unwrap();
        let x = v(&[1.0, -0.2, 0.5]);
        let u = DiagonalMetric::from_vec(vec![1.0, 2.0, 0.5]).unwrap();
        assert!(g.prox(&x, &u).unwrap().sub(&direct.prox(&x, &u).unwrap()).max_abs() < 1e-15);
        assert!((g.value(&x) - direct.value(&x) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn affine_rejects_singular_scale() {
        assert!(DiagonalAffine::new(Regularizer::Zero, v(&[1.0, 0.0]), v(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn quadratic_penalty_on_zero_is_weighted_average() {
        let g = QuadraticPenalty::new(
            Regularizer::Zero,
            v(&[4.0]),
            DiagonalMetric::from_vec(vec![3.0]).unwrap(),
        )
        .unwrap();
        let u = DiagonalMetric::from_vec(vec![1.0]).unwrap();
        assert_eq!(g.prox(&v(&[0.0]), &u).unwrap(), v(&[3.0]));
    }
}

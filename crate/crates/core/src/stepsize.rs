//! Barzilai-Borwein stepsizes: scalar BB1/BB2, the hybrid safeguarded
//! choice, and the diagonal BB metric.
//!
//! The diagonal metric solves, per iteration,
//!
//! ```text
//! min_u ||diag(u) s - y||^2 + mu ||diag(u) - U_prev||_F^2
//!   s.t. (1/a_bb1) I <= diag(u) <= (1/a_bb2) I
//! ```
//!
//! which separates by coordinate into clipped one-dimensional quadratics.

use crate::error::{check_dim, Error, Result};
use crate::linalg::DenseVector;
use crate::metric::DiagonalMetric;

/// Secant data `s = x_k - x_{k-1}`, `y = grad f(x_k) - grad f(x_{k-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPair {
    s: DenseVector,
    y: DenseVector,
}

impl StepPair {
    pub fn new(s: DenseVector, y: DenseVector) -> Result<Self> {
        check_dim(s.len(), y.len())?;
        Ok(StepPair { s, y })
    }

    /// From consecutive iterates and gradients.
    pub fn from_iterates(
        x: &DenseVector,
        x_prev: &DenseVector,
        grad: &DenseVector,
        grad_prev: &DenseVector,
    ) -> Result<Self> {
        x.check_same_len(x_prev)?;
        grad.check_same_len(grad_prev)?;
        Self::new(x.sub(x_prev), grad.sub(grad_prev))
    }

    pub fn s(&self) -> &DenseVector {
        &self.s
    }

    pub fn y(&self) -> &DenseVector {
        &self.y
    }

    pub fn dim(&self) -> usize {
        self.s.len()
    }

    /// `<s, y>`.
    pub fn curvature(&self) -> f64 {
        self.s.dot(&self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBConfig {
    /// Hybrid threshold, `> 1`.
    pub delta: f64,
    /// Weight on staying close to the previous metric, `> 0`.
    pub mu: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
}

impl Default for BBConfig {
    fn default() -> Self {
        BBConfig {
            delta: 2.0,
            mu: 1e-6,
            alpha_min: 1e-10,
            alpha_max: 1e10,
        }
    }
}

impl BBConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 1.0 && self.delta.is_finite()) {
            return Err(Error::invalid("delta", format!("{} must be > 1", self.delta)));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::invalid("mu", format!("{} must be > 0", self.mu)));
        }
        if !(self.alpha_min > 0.0 && self.alpha_min < self.alpha_max && self.alpha_max.is_finite()) {
            return Err(Error::invalid(
                "alpha_min/alpha_max",
                format!("need 0 < {} < {}", self.alpha_min, self.alpha_max),
            ));
        }
        Ok(())
    }

    fn clamp_alpha(&self, a: f64) -> f64 {
        a.clamp(self.alpha_min, self.alpha_max)
    }
}

/// Previous scalar stepsize and previous metric, carried between iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct StepsizeState {
    pub prev_alpha: f64,
    pub prev_metric: DiagonalMetric,
}

impl StepsizeState {
    /// `prev_alpha = 1`, `prev_metric = I`.
    pub fn new(n: usize) -> Self {
        StepsizeState {
            prev_alpha: 1.0,
            prev_metric: DiagonalMetric::identity(n),
        }
    }
}

/// `||s||^2 / <s, y>`, or `None` when `<s, y> <= 0`.
pub fn bb1(sp: &StepPair) -> Option<f64> {
    let sy = sp.curvature();
    if sy > 0.0 {
        finite_positive(sp.s.norm_sq() / sy)
    } else {
        None
    }
}

/// `<s, y> / ||y||^2`, or `None` when `<s, y> <= 0`.
pub fn bb2(sp: &StepPair) -> Option<f64> {
    let sy = sp.curvature();
    if sy > 0.0 {
        finite_positive(sy / sp.y.norm_sq())
    } else {
        None
    }
}

fn finite_positive(a: f64) -> Option<f64> {
    (a.is_finite() && a > 0.0).then_some(a)
}

/// Both BB values, ordered so that the first is the larger one.
pub fn bb_pair(sp: &StepPair) -> Option<(f64, f64)> {
    let a1 = bb1(sp)?;
    let a2 = bb2(sp)?;
    // Cauchy-Schwarz gives a2 <= a1; rounding can flip them by an ulp
    Some(if a1 >= a2 { (a1, a2) } else { (a2, a1) })
}

/// Hybrid rule on already computed BB values.
pub fn hybrid_from_values(a1: Option<f64>, a2: Option<f64>, cfg: &BBConfig, prev_alpha: f64) -> f64 {
    let alpha = match (a1, a2) {
        (Some(a1), Some(a2)) => {
            let a = if a1 < cfg.delta * a2 {
                a2
            } else {
                a1 - a2 / cfg.delta
            };
            if a > 0.0 && a.is_finite() {
                a
            } else {
                prev_alpha
            }
        }
        _ => prev_alpha,
    };
    cfg.clamp_alpha(alpha)
}

/// Safeguarded hybrid BB stepsize.
pub fn hybrid_bb(sp: &StepPair, cfg: &BBConfig, st: &StepsizeState) -> f64 {
    hybrid_from_values(bb1(sp), bb2(sp), cfg, st.prev_alpha)
}

/// Diagonal BB metric via the closed-form clipped solution.
pub fn diagonal_bb(sp: &StepPair, cfg: &BBConfig, st: &StepsizeState) -> Result<DiagonalMetric> {
    check_dim(sp.dim(), st.prev_metric.dim())?;
    let (lo, hi) = match bb_pair(sp) {
        Some((a1, a2)) => (
            1.0 / cfg.clamp_alpha(a1),
            1.0 / cfg.clamp_alpha(a2),
        ),
        None => (1.0 / cfg.alpha_max, 1.0 / cfg.alpha_min),
    };
    let mu = cfg.mu;
    let u: Vec<f64> = sp
        .s
        .iter()
        .zip(sp.y.iter())
        .zip(st.prev_metric.as_slice())
        .map(|((&s, &y), &u_prev)| {
            let c = (s * y + mu * u_prev) / (s * s + mu);
            // a NaN candidate cannot arise for finite input and mu > 0
            c.clamp(lo, hi)
        })
        .collect();
    DiagonalMetric::from_vec(u)
}

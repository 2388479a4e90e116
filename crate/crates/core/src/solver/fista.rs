//! Accelerated proximal gradient (FISTA), momentum restart disabled.

use std::time::Instant;

use crate::error::{check_dim, Error, Result};
use crate::linalg::DenseVector;
use crate::metric::DiagonalMetric;
use crate::objective::{ProxRegularizer, SmoothObjective};

use super::{SolveResult, SolverConfig, Status, StoppingRule, TraceRecord};

/// FISTA with a fixed `stepsize` (should be `<= 1/L`), or with backtracking
/// on the Lipschitz estimate when `stepsize` is `None`.
pub fn fista<F, G>(
    f: &F,
    g: &G,
    x0: &DenseVector,
    stepsize: Option<f64>,
    cfg: &SolverConfig,
) -> Result<SolveResult>
where
    F: SmoothObjective + ?Sized,
    G: ProxRegularizer + ?Sized,
{
    check_dim(f.dim(), x0.len())?;
    if let Some(t) = stepsize {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid("stepsize", format!("{t} must be > 0")));
        }
    }
    let clock = Instant::now();
    let n = x0.len();
    let mut lip = match stepsize {
        Some(t) => 1.0 / t,
        None => f.gradient(x0).norm().max(1.0),
    };
    let mut x = x0.clone();
    let mut y = x0.clone();
    let mut t = 1.0_f64;
    let mut forward_prev = x0.clone();
    let mut objective = f.value(x0) + g.value(x0);
    let mut trace = Vec::new();

    for iter in 1..=cfg.max_iter {
        let (fy, grad) = f.value_and_gradient(&y);
        let mut backtracks = 0;
        let (x_next, forward) = loop {
            let forward = y.axpy(-1.0 / lip, &grad);
            let metric = DiagonalMetric::scalar(n, lip);
            let p = g.prox(&forward, &metric)?;
            if stepsize.is_some() {
                break (p, forward);
            }
            let d = p.sub(&y);
            let model = fy + grad.dot(&d) + 0.5 * lip * d.norm_sq();
            if f.value(&p) <= model {
                break (p, forward);
            }
            if backtracks >= cfg.max_backtracks {
                let failure = Error::LineSearchFailure {
                    iter,
                    backtracks,
                    trial_objective: f.value(&p),
                    reference: model,
                    u_max: lip,
                }
                .to_string();
                return Ok(SolveResult {
                    solution: x,
                    objective,
                    trace,
                    status: Status::LineSearchFailure,
                    failure: Some(failure),
                });
            }
            backtracks += 1;
            lip *= cfg.beta;
        };

        let step = x_next.sub(&x);
        let gmap = y.sub(&x_next).scale(lip);
        objective = f.value(&x_next) + g.value(&x_next);
        if !objective.is_finite() {
            return Err(Error::NonFiniteObjective { iter });
        }
        trace.push(TraceRecord {
            iter,
            objective,
            grad_map_norm: gmap.norm() / lip.sqrt(),
            step_norm_u: lip.sqrt() * step.norm(),
            backtracks,
            u_min: lip,
            u_max: lip,
            wall_ms: clock.elapsed().as_secs_f64() * 1e3,
        });
        let converged = match cfg.stopping {
            StoppingRule::ForwardStep => forward.sub(&forward_prev).norm() <= cfg.eps_tol,
            StoppingRule::RelativeResidual => gmap.norm() / y.norm().max(1.0) <= cfg.eps_tol,
        };
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = x_next.axpy((t - 1.0) / t_next, &step);
        t = t_next;
        x = x_next;
        forward_prev = forward;
        if converged {
            return Ok(SolveResult {
                solution: x,
                objective,
                trace,
                status: Status::Converged,
                failure: None,
            });
        }
    }
    Ok(SolveResult {
        solution: x,
        objective,
        trace,
        status: Status::MaxIter,
        failure: None,
    })
}

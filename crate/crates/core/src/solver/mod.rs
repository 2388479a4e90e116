//! Variable metric proximal gradient iteration.
//!
//! Each iteration picks an initial metric `U` (diagonal BB, scalar hybrid BB,
//! or a fixed scalar), takes the forward-backward step
//! `x+ = prox_{g,U}(x - U^{-1} grad f(x))`, and rescales `U <- beta U` until
//!
//! ```text
//! F(x+) <= F_ref - 1/2 ||x+ - x||_U^2
//! ```
//!
//! holds, where `F_ref` is the maximum objective over the last `m_ls`
//! accepted iterates (non-monotone) or `F(x)` (monotone).

mod fista;

pub use fista::fista;

use std::collections::VecDeque;
use std::fmt;
use std::time::Instant;

use crate::error::{check_dim, Error, Result};
use crate::linalg::DenseVector;
use crate::metric::DiagonalMetric;
use crate::objective::{ProxRegularizer, SmoothObjective};
use crate::stepsize::{self, BBConfig, StepPair, StepsizeState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Diagonal BB metric with line search.
    VmpgDbb,
    /// Hybrid scalar BB, `U = alpha^{-1} I`, same line search.
    PgBb,
    /// Fixed stepsize `alpha`, `U = alpha^{-1} I`.
    PgFixed(f64),
    /// Accelerated proximal gradient without restart.
    Fista,
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::VmpgDbb => "vmpg_dbb".into(),
            Method::PgBb => "pg_bb".into(),
            Method::PgFixed(a) => format!("pg_fixed({a})"),
            Method::Fista => "fista".into(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineSearch {
    /// Reference value is the max over the last `m_ls` objective values.
    Nonmonotone,
    /// Reference value is the current objective.
    Monotone,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoppingRule {
    /// `||y_{k+1} - y_k||_2 <= eps_tol` on forward-step points `y = x - U^{-1} grad f(x)`.
    ForwardStep,
    /// `||G_U(x_k)||_2 / max(1, ||x_k||_2) <= eps_tol`.
    RelativeResidual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    pub line_search: LineSearch,
    pub stopping: StoppingRule,
    pub mu: f64,
    pub delta: f64,
    pub m_ls: usize,
    pub beta: f64,
    pub eps_tol: f64,
    pub max_iter: usize,
    pub max_backtracks: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: Method::VmpgDbb,
            line_search: LineSearch::Nonmonotone,
            stopping: StoppingRule::ForwardStep,
            mu: 1e-6,
            delta: 2.0,
            m_ls: 15,
            beta: 2.0,
            eps_tol: 1e-4,
            max_iter: 5000,
            max_backtracks: 60,
            alpha_min: 1e-10,
            alpha_max: 1e10,
        }
    }
}

impl SolverConfig {
    pub fn with_method(method: Method) -> Self {
        SolverConfig {
            method,
            ..Self::default()
        }
    }

    pub fn bb_config(&self) -> BBConfig {
        BBConfig {
            delta: self.delta,
            mu: self.mu,
            alpha_min: self.alpha_min,
            alpha_max: self.alpha_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.bb_config().validate()?;
        if self.m_ls == 0 {
            return Err(Error::invalid("m_ls", "must be >= 1"));
        }
        if !(self.beta > 1.0 && self.beta.is_finite()) {
            return Err(Error::invalid("beta", format!("{} must be > 1", self.beta)));
        }
        if !(self.eps_tol > 0.0) {
            return Err(Error::invalid("eps_tol", format!("{} must be > 0", self.eps_tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter", "must be >= 1"));
        }
        if let Method::PgFixed(a) = self.method {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::invalid("stepsize", format!("{a} must be > 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIter,
    LineSearchFailure,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIter => "max_iter",
            Status::LineSearchFailure => "line_search_failure",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One row of the per-iteration trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    /// `F(x_{k+1})`.
    pub objective: f64,
    /// `||G_{U_k}(x_k)||_{U_k^{-1}}`.
    pub grad_map_norm: f64,
    /// `||x_{k+1} - x_k||_{U_k}`.
    pub step_norm_u: f64,
    pub backtracks: usize,
    pub u_min: f64,
    pub u_max: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub solution: DenseVector,
    pub objective: f64,
    pub trace: Vec<TraceRecord>,
    pub status: Status,
    /// Diagnostics for a failed run.
    pub failure: Option<String>,
}

impl SolveResult {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

/// Everything an observer sees about one accepted step.
#[derive(Debug)]
pub struct StepEvent<'a> {
    pub iter: usize,
    pub x: &'a DenseVector,
    pub x_next: &'a DenseVector,
    /// Accepted metric (after backtracking).
    pub metric: &'a DiagonalMetric,
    /// `F(x_k)`.
    pub objective: f64,
    /// `F(x_{k+1})`.
    pub objective_next: f64,
    /// Reference value used by the acceptance test, if one was applied.
    pub reference: Option<f64>,
    pub backtracks: usize,
}

/// `G_U(x) = U (x - prox_{g,U}(x - U^{-1} grad f(x)))`.
pub fn gradient_mapping<F, G>(f: &F, g: &G, x: &DenseVector, metric: &DiagonalMetric) -> Result<DenseVector>
where
    F: SmoothObjective + ?Sized,
    G: ProxRegularizer + ?Sized,
{
    check_dim(f.dim(), x.len())?;
    let grad = f.gradient(x);
    let p = g.prox(&x.sub(&metric.apply_inverse(&grad)?), metric)?;
    metric.apply(&x.sub(&p))
}

/// Iterate state between VM-PG steps.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub x: DenseVector,
    pub x_prev: DenseVector,
    pub grad: DenseVector,
    pub grad_prev: DenseVector,
    /// `F(x)`.
    pub objective: f64,
    /// Metric accepted at the last step.
    pub metric: DiagonalMetric,
    /// Most recent objective values, newest last.
    pub history: VecDeque<f64>,
    /// Forward-step point of the last accepted step.
    pub forward: DenseVector,
    /// Number of accepted steps, warm-up included.
    pub iter: usize,
    pub stepsize: StepsizeState,
}

impl SolverState {
    /// Non-monotone reference value: max of the stored window.
    pub fn reference_value(&self) -> f64 {
        self.history.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Result of one accepted VM-PG step.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub record: TraceRecord,
    pub converged: bool,
    pub reference: Option<f64>,
    /// Iterate before the step.
    pub x_before: DenseVector,
    /// Objective before the step.
    pub objective_before: f64,
}

/// Outcome of [`line_search_step`].
#[derive(Debug, Clone)]
pub struct AcceptedStep {
    pub x: DenseVector,
    /// Forward-step point `x - U^{-1} grad f(x)` for the accepted metric.
    pub forward: DenseVector,
    pub metric: DiagonalMetric,
    /// `F` at the new point.
    pub objective: f64,
    pub backtracks: usize,
}

fn composite<F, G>(f: &F, g: &G, x: &DenseVector) -> f64
where
    F: SmoothObjective + ?Sized,
    G: ProxRegularizer + ?Sized,
{
    f.value(x) + g.value(x)
}

/// Forward-backward step from `x` starting at `metric`, rescaling
/// `U <- beta U` until `F(x+) <= reference - 1/2 ||x+ - x||_U^2`.
/// With `reference = None` the first trial is accepted.
#[allow(clippy::too_many_arguments)]
pub fn line_search_step<F, G>(
    f: &F,
    g: &G,
    x: &DenseVector,
    grad: &DenseVector,
    mut metric: DiagonalMetric,
    reference: Option<f64>,
    cfg: &SolverConfig,
    iter: usize,
) -> Result<AcceptedStep>
where
    F: SmoothObjective + ?Sized,
    G: ProxRegularizer + ?Sized,
{
    let mut backtracks = 0;
    loop {
        let forward = x.sub(&metric.apply_inverse(grad)?);
        let x_next = g.prox(&forward, &metric)?;
        let objective = composite(f, g, &x_next);
        let accepted = match reference {
            None => true,
            Some(r) => {
                let d = x_next.sub(x);
                objective <= r - 0.5 * metric.unorm_sq(&d)?
            }
        };
        if accepted && objective.is_finite() {
            return Ok(AcceptedStep {
                x: x_next,
                forward,
                metric,
                objective,
                backtracks,
            });
        }
        if reference.is_none() {
            return Err(Error::NonFiniteObjective { iter });
        }
        if backtracks >= cfg.max_backtracks {
            return Err(Error::LineSearchFailure {
                iter,
                backtracks,
                trial_objective: objective,
                reference: reference.unwrap_or(f64::NAN),
                u_max: metric.max(),
            });
        }
        backtracks += 1;
        metric = metric.scaled(cfg.beta)?;
    }
}

fn stop_test(
    cfg: &SolverConfig,
    forward: &DenseVector,
    forward_prev: &DenseVector,
    gmap: &DenseVector,
    x: &DenseVector,
) -> bool {
    match cfg.stopping {
        StoppingRule::ForwardStep => forward.sub(forward_prev).norm() <= cfg.eps_tol,
        StoppingRule::RelativeResidual => gmap.norm() / x.norm().max(1.0) <= cfg.eps_tol,
    }
}

fn record(
    iter: usize,
    objective: f64,
    x: &DenseVector,
    x_next: &DenseVector,
    metric: &DiagonalMetric,
    backtracks: usize,
    clock: &Instant,
) -> Result<(TraceRecord, DenseVector)> {
    let d = x.sub(x_next);
    let gmap = metric.apply(&d)?;
    let grad_map_norm = metric.inverse()?.unorm(&gmap)?;
    let step_norm_u = metric.unorm(&d)?;
    Ok((
        TraceRecord {
            iter,
            objective,
            grad_map_norm,
            step_norm_u,
            backtracks,
            u_min: metric.min(),
            u_max: metric.max(),
            wall_ms: clock.elapsed().as_secs_f64() * 1e3,
        },
        gmap,
    ))
}

/// Warm-up: one proximal gradient step with `alpha_0 = min(1, 1/||grad f(x0)||)`
/// and monotone backtracking. Returns the state holding `x^0, x^1`.
pub fn warm_start<F, G>(
    f: &F,
    g: &G,
    x0: &DenseVector,
    cfg: &SolverConfig,
    clock: &Instant,
) -> Result<(SolverState, StepReport)>
where
    F: SmoothObjective + ?Sized,
    G: ProxRegularizer + ?Sized,
{
    check_dim(f.dim(), x0.len())?;
    let n = x0.len();
    let (fx, grad0) = f.value_and_gradient(x0);
    let objective0 = fx + g.value(x0);
    if !objective0.is_finite() {
        return Err(Error::NonFiniteObjective { iter: 0 });
    }
    let gnorm = grad0.norm();
    let alpha0 = if gnorm > 0.0 { (1.0 / gnorm).min(1.0) } else { 1.0 };
    let trial = line_search_step(
        f,
        g,
        x0,
        &grad0,
        DiagonalMetric::scalar(n, 1.0 / alpha0),
        Some(objective0),
        cfg,
        1,
    )?;
    let (rec, gmap) = record(1, trial.objective, x0, &trial.x, &trial.metric, trial.backtracks, clock)?;
    let converged = stop_test(cfg, &trial.forward, x0, &gmap, x0);
    let grad1 = f.gradient(&trial.x);
    let mut history = VecDeque::with_capacity(cfg.m_ls + 1);
    history.push_back(objective0);
    history.push_back(trial.objective);
    while history.len() > cfg.m_ls {
        history.pop_front();
    }
    let state = SolverState {
        x: trial.x,
        x_prev: x0.clone(),
        grad: grad1,
        grad_prev: grad0,
        objective: trial.objective,
        metric: trial.metric,
        history,
        forward: trial.forward,
        iter: 1,
        stepsize: StepsizeState::new(n),
    };
    let report = StepReport {
        record: rec,
        converged,
        reference: Some(objective0),
        x_before: x0.clone(),
        objective_before: objective0,
    };
    Ok((state, report))
}

/// One VM-PG iteration from `state` (which must hold two iterates).
pub fn vmpg_step<F, G>(
    f: &F,
    g: &G,
    state: &mut SolverState,
    cfg: &SolverConfig,
    clock: &Instant,
) -> Result<StepReport>
where
    F: SmoothObjective + ?Sized,
    G: ProxRegularizer + ?Sized,
{
    let n = state.x.len();
    let bb = cfg.bb_config();
    let pair = StepPair::from_iterates(&state.x, &state.x_prev, &state.grad, &state.grad_prev)?;
    let initial = match cfg.method {
        Method::VmpgDbb => stepsize::diagonal_bb(&pair, &bb, &state.stepsize)?,
        Method::PgBb => DiagonalMetric::scalar(n, 1.0 / stepsize::hybrid_bb(&pair, &bb, &state.stepsize)),
        Method::PgFixed(alpha) => DiagonalMetric::scalar(n, 1.0 / alpha),
        Method::Fista => {
            return Err(Error::invalid("method", "FISTA does not use vmpg_step"));
        }
    };
    let reference = match cfg.line_search {
        LineSearch::Nonmonotone => Some(state.reference_value()),
        LineSearch::Monotone => Some(state.objective),
        LineSearch::Off => None,
    };
    let iter = state.iter + 1;
    let trial = line_search_step(f, g, &state.x, &state.grad, initial, reference, cfg, iter)?;
    let (rec, gmap) = record(iter, trial.objective, &state.x, &trial.x, &trial.metric, trial.backtracks, clock)?;
    let converged = stop_test(cfg, &trial.forward, &state.forward, &gmap, &state.x);

    let grad_next = f.gradient(&trial.x);
    let x_before = std::mem::replace(&mut state.x, trial.x);
    state.x_prev = x_before.clone();
    state.grad_prev = std::mem::replace(&mut state.grad, grad_next);
    let objective_before = state.objective;
    state.objective = trial.objective;
    state.history.push_back(trial.objective);
    while state.history.len() > cfg.m_ls {
        state.history.pop_front();
    }
    state.forward = trial.forward;
    state.iter = iter;
    state.stepsize = StepsizeState {
        prev_alpha: (1.0 / trial.metric.max()).clamp(cfg.alpha_min, cfg.alpha_max),
        prev_metric: trial.metric.clone(),
    };
    state.metric = trial.metric;
    Ok(StepReport {
        record: rec,
        converged,
        reference,
        x_before,
        objective_before,
    })
}

/// Runs the configured method from `x0`.
pub fn solve<F, G>(f: &F, g: &G, x0: &DenseVector, cfg: &SolverConfig) -> Result<SolveResult>
where
    F: SmoothObjective + ?Sized,
    G: ProxRegularizer + ?Sized,
{
    solve_with_observer(f, g, x0, cfg, |_| {})
}

/// As [`solve`], calling `observer` after every accepted step.
pub fn solve_with_observer<F, G>(
    f: &F,
    g: &G,
    x0: &DenseVector,
    cfg: &SolverConfig,
    mut observer: impl FnMut(&StepEvent<'_>),
) -> Result<SolveResult>
where
    F: SmoothObjective + ?Sized,
    G: ProxRegularizer + ?Sized,
{
    cfg.validate()?;
    if cfg.method == Method::Fista {
        let stepsize = f.smoothness().filter(|l| *l > 0.0).map(|l| 1.0 / l);
        return fista(f, g, x0, stepsize, cfg);
    }
    let clock = Instant::now();
    let mut trace = Vec::new();
    let (mut state, report) = match warm_start(f, g, x0, cfg, &clock) {
        Ok(r) => r,
        Err(e @ Error::LineSearchFailure { .. }) => {
            return Ok(SolveResult {
                objective: composite(f, g, x0),
                solution: x0.clone(),
                trace,
                status: Status::LineSearchFailure,
                failure: Some(e.to_string()),
            })
        }
        Err(e) => return Err(e),
    };
    observer(&StepEvent {
        iter: 1,
        x: &report.x_before,
        x_next: &state.x,
        metric: &state.metric,
        objective: report.objective_before,
        objective_next: state.objective,
        reference: report.reference,
        backtracks: report.record.backtracks,
    });
    trace.push(report.record);
    if report.converged {
        return Ok(finish(state, trace, Status::Converged, None));
    }
    while state.iter < cfg.max_iter {
        let report = match vmpg_step(f, g, &mut state, cfg, &clock) {
            Ok(r) => r,
            Err(e @ Error::LineSearchFailure { .. }) | Err(e @ Error::NonFiniteObjective { .. }) => {
                return Ok(finish(state, trace, Status::LineSearchFailure, Some(e.to_string())));
            }
            Err(e) => return Err(e),
        };
        observer(&StepEvent {
            iter: state.iter,
            x: &report.x_before,
            x_next: &state.x,
            metric: &state.metric,
            objective: report.objective_before,
            objective_next: state.objective,
            reference: report.reference,
            backtracks: report.record.backtracks,
        });
        trace.push(report.record);
        if report.converged {
            return Ok(finish(state, trace, Status::Converged, None));
        }
    }
    Ok(finish(state, trace, Status::MaxIter, None))
}

fn finish(state: SolverState, trace: Vec<TraceRecord>, status: Status, failure: Option<String>) -> SolveResult {
    SolveResult {
        objective: state.objective,
        solution: state.x,
        trace,
        status,
        failure,
    }
}

//! Consensus optimization over `N_node` simulated workers.
//!
//! Each node `j` holds a copy `x_j` of the shared variable and a smooth local
//! objective `f_j`. A round takes node-local forward steps
//! `y_j = x_j - U_j^{-1} grad f_j(x_j)`, aggregates them with the
//! metric-weighted average `z = (sum_j U_j)^{-1} sum_j U_j y_j` and broadcasts
//! `z`. The line search runs on the global objective `sum_j f_j` and scales
//! every block by `beta` on failure.
//!
//! Node work may run on the rayon pool; reductions always sum in node order.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{check_dim, Error, Result};
use crate::exec::{self, Execution};
use crate::linalg::{DenseMatrix, DenseVector};
use crate::metric::{BlockDiagonalMetric, DiagonalMetric};
use crate::objective::SmoothObjective;
use crate::problems::{generate_regression_raw, precondition, LeastSquares, Loss, RegressionSpec};
use crate::prox::consensus_average;
use crate::solver::{LineSearch, SolverConfig, Status, StoppingRule, TraceRecord};
use crate::stepsize::{self, BBConfig, StepPair, StepsizeState};

/// Local objectives sharing one variable of dimension `n`.
pub struct ConsensusProblem {
    shared_dim: usize,
    objectives: Vec<Box<dyn SmoothObjective>>,
    shard_sizes: Vec<usize>,
}

impl fmt::Debug for ConsensusProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConsensusProblem")
            .field("shared_dim", &self.shared_dim)
            .field("shard_sizes", &self.shard_sizes)
            .finish_non_exhaustive()
    }
}

impl ConsensusProblem {
    pub fn new(objectives: Vec<Box<dyn SmoothObjective>>, shard_sizes: Vec<usize>) -> Result<Self> {
        if objectives.is_empty() {
            return Err(Error::invalid("n_nodes", "need at least one node"));
        }
        if objectives.len() != shard_sizes.len() {
            return Err(Error::DimensionMismatch {
                expected: objectives.len(),
                found: shard_sizes.len(),
            });
        }
        let n = objectives[0].dim();
        for f in &objectives {
            check_dim(n, f.dim())?;
        }
        Ok(ConsensusProblem {
            shared_dim: n,
            objectives,
            shard_sizes,
        })
    }

    /// Splits the rows of `(a, b)` into contiguous shards. Node `j` gets
    /// `(1/N) ||A_j x - b_j||^2 + lambda (N_j / N) ||x||^2`, so the local
    /// objectives sum to the pooled penalized least squares problem.
    pub fn least_squares_shards(a: &DenseMatrix, b: &DenseVector, shard_sizes: &[usize], lambda: f64) -> Result<Self> {
        check_dim(a.rows(), b.len())?;
        let total: usize = shard_sizes.iter().sum();
        check_dim(a.rows(), total)?;
        if shard_sizes.contains(&0) {
            return Err(Error::invalid("shard_sizes", "every shard needs at least one row"));
        }
        let scale = 1.0 / total as f64;
        let cols = a.cols();
        let mut objectives: Vec<Box<dyn SmoothObjective>> = Vec::with_capacity(shard_sizes.len());
        let mut start = 0;
        for &size in shard_sizes {
            let rows = a.as_row_major()[start * cols..(start + size) * cols].to_vec();
            let aj = DenseMatrix::from_row_major(size, cols, rows)?;
            let bj = b.slice(start, start + size);
            let ridge = lambda * (size as f64 / total as f64);
            objectives.push(Box::new(LeastSquares::new(aj, bj, scale, ridge)));
            start += size;
        }
        Self::new(objectives, shard_sizes.to_vec())
    }

    pub fn n_nodes(&self) -> usize {
        self.objectives.len()
    }

    pub fn shared_dim(&self) -> usize {
        self.shared_dim
    }

    pub fn objectives(&self) -> &[Box<dyn SmoothObjective>] {
        &self.objectives
    }

    pub fn shard_sizes(&self) -> &[usize] {
        &self.shard_sizes
    }

    /// `sum_j f_j(x)`, summed in node order.
    pub fn value(&self, x: &DenseVector) -> f64 {
        self.objectives.iter().map(|f| f.value(x)).sum()
    }

    /// Payload of one round: every node sends `y_j` and receives `z`.
    pub fn bytes_per_round(&self) -> u64 {
        2 * self.shared_dim as u64 * self.n_nodes() as u64 * 8
    }
}

/// Shard sizes proportional to the node number `1, 2, ..., n_nodes`;
/// rounding leftovers go to the largest nodes.
pub fn proportional_shards(total: usize, n_nodes: usize) -> Result<Vec<usize>> {
    if n_nodes == 0 {
        return Err(Error::invalid("n_nodes", "need at least one node"));
    }
    let weight = n_nodes * (n_nodes + 1) / 2;
    let mut sizes: Vec<usize> = (1..=n_nodes).map(|j| total * j / weight).collect();
    let mut rest = total - sizes.iter().sum::<usize>();
    for s in sizes.iter_mut().rev() {
        if rest == 0 {
            break;
        }
        *s += 1;
        rest -= 1;
    }
    if sizes[0] == 0 {
        return Err(Error::invalid(
            "samples",
            format!("{total} samples leave node 1 empty with {n_nodes} nodes"),
        ));
    }
    Ok(sizes)
}

/// Synthetic penalized least squares split across nodes.
#[derive(Debug, Clone)]
pub struct ConsensusSpec {
    pub n_nodes: usize,
    pub samples: usize,
    pub features: usize,
    pub lambda: f64,
    pub seed: u64,
}

/// Local problems together with the pooled objective `sum_j f_j` built
/// directly from all rows.
pub struct ConsensusInstance {
    pub problem: ConsensusProblem,
    pub pooled: LeastSquares,
}

pub fn generate_consensus(spec: &ConsensusSpec) -> Result<ConsensusInstance> {
    let raw = generate_regression_raw(&RegressionSpec::new(spec.samples, spec.features, Loss::LeastSquares, spec.seed))?;
    let (a, _) = precondition(&raw.a);
    let shards = proportional_shards(spec.samples, spec.n_nodes)?;
    let problem = ConsensusProblem::least_squares_shards(&a, &raw.b, &shards, spec.lambda)?;
    let pooled = LeastSquares::new(a, raw.b, 1.0 / spec.samples as f64, spec.lambda);
    Ok(ConsensusInstance { problem, pooled })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricMode {
    LocalBB,
    LocalDBB,
    GlobalBB,
    GlobalDBB,
}

impl MetricMode {
    pub const ALL: [MetricMode; 4] = [
        MetricMode::LocalBB,
        MetricMode::LocalDBB,
        MetricMode::GlobalBB,
        MetricMode::GlobalDBB,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricMode::LocalBB => "local_bb",
            MetricMode::LocalDBB => "local_dbb",
            MetricMode::GlobalBB => "global_bb",
            MetricMode::GlobalDBB => "global_dbb",
        }
    }

    fn diagonal(self) -> bool {
        matches!(self, MetricMode::LocalDBB | MetricMode::GlobalDBB)
    }
}

impl fmt::Display for MetricMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        MetricMode::ALL
            .into_iter()
            .find(|m| m.as_str() == key)
            .ok_or_else(|| Error::invalid("mode", format!("unknown metric mode `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusConfig {
    pub solver: SolverConfig,
    pub mode: MetricMode,
    pub exec: Execution,
}

impl Default for ConsensusConfig {
    fn default() -> Self {
        ConsensusConfig {
            solver: SolverConfig::default(),
            mode: MetricMode::LocalDBB,
            exec: Execution::default(),
        }
    }
}

/// Per-node iterate state.
#[derive(Debug, Clone)]
pub struct NodeState {
    pub x: DenseVector,
    pub x_prev: DenseVector,
    pub grad: DenseVector,
    pub grad_prev: DenseVector,
    pub metric: DiagonalMetric,
    pub stepsize: StepsizeState,
}

impl NodeState {
    pub fn pair(&self) -> Result<StepPair> {
        StepPair::from_iterates(&self.x, &self.x_prev, &self.grad, &self.grad_prev)
    }
}

/// Node metric from the node's own secant pair. Global modes treat the single
/// node as the whole system.
pub fn local_metric(node: &NodeState, mode: MetricMode, cfg: &BBConfig) -> Result<DiagonalMetric> {
    let pair = node.pair()?;
    if mode.diagonal() {
        stepsize::diagonal_bb(&pair, cfg, &node.stepsize)
    } else {
        let alpha = stepsize::hybrid_bb(&pair, cfg, &node.stepsize);
        Ok(DiagonalMetric::scalar(pair.dim(), 1.0 / alpha))
    }
}

/// Metrics for every node. Global modes compute one stepsize or diagonal
/// metric from the concatenated pairs and hand each node its block.
pub fn node_metrics(nodes: &[NodeState], mode: MetricMode, cfg: &BBConfig, exec: Execution) -> Result<Vec<DiagonalMetric>> {
    match mode {
        MetricMode::LocalBB | MetricMode::LocalDBB => {
            exec::map_slice(exec, nodes, |node| local_metric(node, mode, cfg)).into_iter().collect()
        }
        MetricMode::GlobalBB | MetricMode::GlobalDBB => {
            let pairs: Vec<StepPair> = nodes.iter().map(NodeState::pair).collect::<Result<_>>()?;
            let s: Vec<DenseVector> = pairs.iter().map(|p| p.s().clone()).collect();
            let y: Vec<DenseVector> = pairs.iter().map(|p| p.y().clone()).collect();
            let pair = StepPair::new(DenseVector::concat(&s), DenseVector::concat(&y))?;
            let n = nodes[0].x.len();
            let stacked = if mode.diagonal() {
                let prev: Vec<DenseVector> = nodes.iter().map(|nd| nd.stepsize.prev_metric.diag().clone()).collect();
                let st = StepsizeState {
                    prev_alpha: nodes[0].stepsize.prev_alpha,
                    prev_metric: DiagonalMetric::new(DenseVector::concat(&prev))?,
                };
                stepsize::diagonal_bb(&pair, cfg, &st)?
            } else {
                let alpha = stepsize::hybrid_bb(&pair, cfg, &nodes[0].stepsize);
                DiagonalMetric::scalar(pair.dim(), 1.0 / alpha)
            };
            (0..nodes.len())
                .map(|j| DiagonalMetric::new(stacked.diag().slice(j * n, (j + 1) * n)))
                .collect()
        }
    }
}

/// Node-local forward steps `y_j = x_j - U_j^{-1} grad_j`.
pub fn forward_steps(nodes: &[NodeState], metrics: &[DiagonalMetric], exec: Execution) -> Result<Vec<DenseVector>> {
    check_dim(nodes.len(), metrics.len())?;
    let idx: Vec<usize> = (0..nodes.len()).collect();
    exec::map_slice(exec, &idx, |&j| {
        let step = metrics[j].apply_inverse(&nodes[j].grad)?;
        Ok(nodes[j].x.sub(&step))
    })
    .into_iter()
    .collect()
}

/// `z = (sum_j U_j)^{-1} sum_j U_j y_j`, summed in node order.
pub fn aggregate(forwards: &[DenseVector], metrics: &[DiagonalMetric]) -> Result<DenseVector> {
    check_dim(forwards.len(), metrics.len())?;
    let block = BlockDiagonalMetric::new(metrics.to_vec())?;
    let stacked = DenseVector::concat(forwards);
    check_dim(block.dim(), stacked.len())?;
    consensus_average(stacked.as_slice(), &block)
}

fn stacked_metric(metrics: &[DiagonalMetric]) -> Result<DiagonalMetric> {
    let parts: Vec<DenseVector> = metrics.iter().map(|m| m.diag().clone()).collect();
    DiagonalMetric::new(DenseVector::concat(&parts))
}

/// Shared state between rounds.
#[derive(Debug, Clone)]
pub struct ConsensusState {
    pub nodes: Vec<NodeState>,
    /// `sum_j f_j(z)` at the current consensus point.
    pub objective: f64,
    /// Most recent objective values, newest last.
    pub history: VecDeque<f64>,
    /// Stacked forward points of the last round.
    pub forward: DenseVector,
    pub iter: usize,
}

impl ConsensusState {
    /// Every node starts at `x0`, before any step.
    pub fn initial(problem: &ConsensusProblem, x0: &DenseVector, exec: Execution) -> Result<Self> {
        check_dim(problem.shared_dim(), x0.len())?;
        let n = x0.len();
        let evals = exec::map_slice(exec, problem.objectives(), |f| f.value_and_gradient(x0));
        let objective: f64 = evals.iter().map(|(v, _)| *v).sum();
        if !objective.is_finite() {
            return Err(Error::NonFiniteObjective { iter: 0 });
        }
        let nodes = evals
            .into_iter()
            .map(|(_, g)| NodeState {
                x: x0.clone(),
                x_prev: x0.clone(),
                grad: g.clone(),
                grad_prev: g,
                metric: DiagonalMetric::identity(n),
                stepsize: StepsizeState::new(n),
            })
            .collect();
        let forward = DenseVector::concat(&vec![x0.clone(); problem.n_nodes()]);
        Ok(ConsensusState {
            nodes,
            objective,
            history: VecDeque::from([objective]),
            forward,
            iter: 0,
        })
    }

    /// The common iterate.
    pub fn z(&self) -> &DenseVector {
        &self.nodes[0].x
    }

    pub fn reference_value(&self, line_search: LineSearch) -> Option<f64> {
        match line_search {
            LineSearch::Nonmonotone => Some(self.history.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            LineSearch::Monotone => Some(self.objective),
            LineSearch::Off => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RoundReport {
    pub record: TraceRecord,
    pub converged: bool,
    pub bytes_exchanged: u64,
}

/// One round from the given initial metrics, backtracking against `reference`
/// (no test when `None`). On success every node holds the new `z`.
pub fn round_with_metrics(
    problem: &ConsensusProblem,
    state: &mut ConsensusState,
    metrics: Vec<DiagonalMetric>,
    reference: Option<f64>,
    cfg: &ConsensusConfig,
    clock: &Instant,
) -> Result<RoundReport> {
    let exec = cfg.exec;
    let iter = state.iter + 1;
    let mut metrics = metrics;
    let mut backtracks = 0;
    let (z, forwards, objective) = loop {
        let forwards = forward_steps(&state.nodes, &metrics, exec)?;
        let z = aggregate(&forwards, &metrics)?;
        let values = exec::map_slice(exec, problem.objectives(), |f| f.value(&z));
        let objective: f64 = values.iter().sum();
        let accepted = match reference {
            None => true,
            Some(r) => {
                let mut penalty = 0.0;
                for (node, m) in state.nodes.iter().zip(&metrics) {
                    penalty += m.unorm_sq(&z.sub(&node.x))?;
                }
                objective <= r - 0.5 * penalty
            }
        };
        if accepted && objective.is_finite() {
            break (z, forwards, objective);
        }
        if reference.is_none() {
            return Err(Error::NonFiniteObjective { iter });
        }
        if backtracks >= cfg.solver.max_backtracks {
            return Err(Error::LineSearchFailure {
                iter,
                backtracks,
                trial_objective: objective,
                reference: reference.unwrap_or(f64::NAN),
                u_max: metrics.iter().map(DiagonalMetric::max).fold(0.0, f64::max),
            });
        }
        backtracks += 1;
        metrics = metrics.iter().map(|m| m.scaled(cfg.solver.beta)).collect::<Result<_>>()?;
    };

    let stacked = stacked_metric(&metrics)?;
    let x_stacked = DenseVector::concat(&state.nodes.iter().map(|nd| nd.x.clone()).collect::<Vec<_>>());
    let z_stacked = DenseVector::concat(&vec![z.clone(); state.nodes.len()]);
    let d = x_stacked.sub(&z_stacked);
    let gmap = stacked.apply(&d)?;
    let record = TraceRecord {
        iter,
        objective,
        grad_map_norm: stacked.inverse()?.unorm(&gmap)?,
        step_norm_u: stacked.unorm(&d)?,
        backtracks,
        u_min: stacked.min(),
        u_max: stacked.max(),
        wall_ms: clock.elapsed().as_secs_f64() * 1e3,
    };
    let forward = DenseVector::concat(&forwards);
    let converged = match cfg.solver.stopping {
        StoppingRule::ForwardStep => forward.sub(&state.forward).norm() <= cfg.solver.eps_tol,
        StoppingRule::RelativeResidual => gmap.norm() / x_stacked.norm().max(1.0) <= cfg.solver.eps_tol,
    };

    let grads = exec::map_slice(exec, problem.objectives(), |f| f.gradient(&z));
    let (alpha_min, alpha_max) = (cfg.solver.alpha_min, cfg.solver.alpha_max);
    for ((node, grad), metric) in state.nodes.iter_mut().zip(grads).zip(metrics) {
        node.x_prev = std::mem::replace(&mut node.x, z.clone());
        node.grad_prev = std::mem::replace(&mut node.grad, grad);
        node.stepsize = StepsizeState {
            prev_alpha: (1.0 / metric.max()).clamp(alpha_min, alpha_max),
            prev_metric: metric.clone(),
        };
        node.metric = metric;
    }
    state.objective = objective;
    state.history.push_back(objective);
    while state.history.len() > cfg.solver.m_ls {
        state.history.pop_front();
    }
    state.forward = forward;
    state.iter = iter;
    Ok(RoundReport {
        record,
        converged,
        bytes_exchanged: problem.bytes_per_round(),
    })
}

/// Warm-up round: `U_j = (alpha_0 N_node)^{-1} I` with
/// `alpha_0 = min(1, 1/||sum_j grad f_j(x0)||)` and monotone backtracking.
pub fn warm_start(problem: &ConsensusProblem, x0: &DenseVector, cfg: &ConsensusConfig, clock: &Instant) -> Result<(ConsensusState, RoundReport)> {
    let mut state = ConsensusState::initial(problem, x0, cfg.exec)?;
    let n = x0.len();
    let mut total = vec![0.0; n];
    for node in &state.nodes {
        for (t, g) in total.iter_mut().zip(node.grad.iter()) {
            *t += g;
        }
    }
    let gnorm = DenseVector::from_vec(total).norm();
    let alpha0 = if gnorm > 0.0 { (1.0 / gnorm).min(1.0) } else { 1.0 };
    let u = 1.0 / (alpha0 * problem.n_nodes() as f64);
    let metrics = vec![DiagonalMetric::scalar(n, u); problem.n_nodes()];
    let reference = Some(state.objective);
    let report = round_with_metrics(problem, &mut state, metrics, reference, cfg, clock)?;
    for node in &mut state.nodes {
        node.stepsize = StepsizeState::new(n);
    }
    Ok((state, report))
}

/// One regular round: metrics from `cfg.mode`, reference from the line search mode.
pub fn consensus_round(problem: &ConsensusProblem, state: &mut ConsensusState, cfg: &ConsensusConfig, clock: &Instant) -> Result<RoundReport> {
    let metrics = node_metrics(&state.nodes, cfg.mode, &cfg.solver.bb_config(), cfg.exec)?;
    let reference = state.reference_value(cfg.solver.line_search);
    round_with_metrics(problem, state, metrics, reference, cfg, clock)
}

#[derive(Debug, Clone)]
pub struct ConsensusResult {
    pub solution: DenseVector,
    pub objective: f64,
    pub trace: Vec<TraceRecord>,
    pub bytes_exchanged: u64,
    pub status: Status,
    pub failure: Option<String>,
}

impl ConsensusResult {
    pub fn rounds(&self) -> usize {
        self.trace.len()
    }
}

/// Runs rounds until the stopping rule holds or `max_iter` is reached.
pub fn solve_consensus(problem: &ConsensusProblem, x0: &DenseVector, cfg: &ConsensusConfig) -> Result<ConsensusResult> {
    cfg.solver.validate()?;
    let clock = Instant::now();
    let mut trace = Vec::new();
    let mut bytes = 0;
    let failed = |e: Error, trace: Vec<TraceRecord>, bytes: u64, x: DenseVector, objective: f64| ConsensusResult {
        solution: x,
        objective,
        trace,
        bytes_exchanged: bytes,
        status: Status::LineSearchFailure,
        failure: Some(e.to_string()),
    };
    let (mut state, report) = match warm_start(problem, x0, cfg, &clock) {
        Ok(r) => r,
        Err(e @ Error::LineSearchFailure { .. }) => {
            return Ok(failed(e, trace, bytes, x0.clone(), problem.value(x0)));
        }
        Err(e) => return Err(e),
    };
    bytes += report.bytes_exchanged;
    trace.push(report.record);
    let mut status = if report.converged { Status::Converged } else { Status::MaxIter };
    while status != Status::Converged && state.iter < cfg.solver.max_iter {
        let report = match consensus_round(problem, &mut state, cfg, &clock) {
            Ok(r) => r,
            Err(e @ Error::LineSearchFailure { .. }) | Err(e @ Error::NonFiniteObjective { .. }) => {
                return Ok(failed(e, trace, bytes, state.z().clone(), state.objective));
            }
            Err(e) => return Err(e),
        };
        bytes += report.bytes_exchanged;
        trace.push(report.record);
        if report.converged {
            status = Status::Converged;
        }
    }
    Ok(ConsensusResult {
        solution: state.z().clone(),
        objective: state.objective,
        trace,
        bytes_exchanged: bytes,
        status,
        failure: None,
    })
}

//! Run specification: TOML file sections merged with command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vmpg::consensus::MetricMode;
use vmpg::problems::Loss;
use vmpg::solver::{LineSearch, Method, SolverConfig, StoppingRule};
use vmpg::Execution;

use crate::error::{CliError, CliResult};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "VMPG_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "vmpg-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Bench,
    SweepMu,
    Consensus,
    Gen,
    Solve,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Bench => "bench",
            Command::SweepMu => "sweep-mu",
            Command::Consensus => "consensus",
            Command::Gen => "gen",
            Command::Solve => "solve",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: Option<String>,
    pub n: Option<usize>,
    pub samples: Option<usize>,
    pub kappa: Option<f64>,
    pub reg: Option<String>,
    pub lambda: Option<f64>,
    pub lambda2: Option<f64>,
    pub group_size: Option<usize>,
    pub noise: Option<f64>,
    pub data: Option<PathBuf>,
    pub label_column: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub max_iter: Option<usize>,
    pub eps_tol: Option<f64>,
    pub mu: Option<f64>,
    pub mls: Option<usize>,
    pub beta: Option<f64>,
    pub delta: Option<f64>,
    pub line_search: Option<String>,
    pub stopping: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seeds: Option<Vec<u64>>,
    pub methods: Option<Vec<String>>,
    pub out: Option<PathBuf>,
    pub timing: Option<bool>,
    pub sequential: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConsensusSection {
    pub nodes: Option<usize>,
    pub modes: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub mu: Option<Vec<f64>>,
}

/// Everything a run can be configured with; every field optional so files
/// and flags can be layered.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub problem: ProblemSection,
    pub solver: SolverSection,
    pub run: RunSection,
    pub consensus: ConsensusSection,
    pub sweep: SweepSection,
}

fn pick<T>(over: Option<T>, base: Option<T>) -> Option<T> {
    over.or(base)
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::ConfigFile {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        toml::from_str(&text).map_err(|e| CliError::ConfigFile {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    /// Fields set in `over` win.
    pub fn overlay(self, over: FileConfig) -> FileConfig {
        let (p, o) = (self.problem, over.problem);
        let (s, so) = (self.solver, over.solver);
        let (r, ro) = (self.run, over.run);
        FileConfig {
            problem: ProblemSection {
                kind: pick(o.kind, p.kind),
                n: pick(o.n, p.n),
                samples: pick(o.samples, p.samples),
                kappa: pick(o.kappa, p.kappa),
                reg: pick(o.reg, p.reg),
                lambda: pick(o.lambda, p.lambda),
                lambda2: pick(o.lambda2, p.lambda2),
                group_size: pick(o.group_size, p.group_size),
                noise: pick(o.noise, p.noise),
                data: pick(o.data, p.data),
                label_column: pick(o.label_column, p.label_column),
            },
            solver: SolverSection {
                max_iter: pick(so.max_iter, s.max_iter),
                eps_tol: pick(so.eps_tol, s.eps_tol),
                mu: pick(so.mu, s.mu),
                mls: pick(so.mls, s.mls),
                beta: pick(so.beta, s.beta),
                delta: pick(so.delta, s.delta),
                line_search: pick(so.line_search, s.line_search),
                stopping: pick(so.stopping, s.stopping),
            },
            run: RunSection {
                seeds: pick(ro.seeds, r.seeds),
                methods: pick(ro.methods, r.methods),
                out: pick(ro.out, r.out),
                timing: pick(ro.timing, r.timing),
                sequential: pick(ro.sequential, r.sequential),
            },
            consensus: ConsensusSection {
                nodes: pick(over.consensus.nodes, self.consensus.nodes),
                modes: pick(over.consensus.modes, self.consensus.modes),
            },
            sweep: SweepSection {
                mu: pick(over.sweep.mu, self.sweep.mu),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Qp,
    Ls,
    Lr,
}

impl ProblemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::Qp => "qp",
            ProblemKind::Ls => "ls",
            ProblemKind::Lr => "lr",
        }
    }

    pub fn loss(self) -> Option<Loss> {
        match self {
            ProblemKind::Qp => None,
            ProblemKind::Ls => Some(Loss::LeastSquares),
            ProblemKind::Lr => Some(Loss::Logistic),
        }
    }
}

impl FromStr for ProblemKind {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qp" => Ok(ProblemKind::Qp),
            "ls" => Ok(ProblemKind::Ls),
            "lr" => Ok(ProblemKind::Lr),
            _ => Err(CliError::config(format!("unknown problem kind `{s}` (expected qp, ls or lr)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegKind {
    None,
    Nonneg,
    Lasso,
    ElasticNet,
    GroupLasso,
    Simplex,
    /// `lambda ||x||^2` folded into the smooth part.
    Ridge,
}

impl RegKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RegKind::None => "none",
            RegKind::Nonneg => "nonneg",
            RegKind::Lasso => "lasso",
            RegKind::ElasticNet => "elastic_net",
            RegKind::GroupLasso => "group_lasso",
            RegKind::Simplex => "simplex",
            RegKind::Ridge => "ridge",
        }
    }
}

impl FromStr for RegKind {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        let all = [
            RegKind::None,
            RegKind::Nonneg,
            RegKind::Lasso,
            RegKind::ElasticNet,
            RegKind::GroupLasso,
            RegKind::Simplex,
            RegKind::Ridge,
        ];
        let key = s.to_ascii_lowercase().replace('-', "_");
        all.into_iter()
            .find(|r| r.as_str() == key || (key == "zero" && *r == RegKind::None))
            .ok_or_else(|| CliError::config(format!("unknown regularizer `{s}`")))
    }
}

pub fn parse_method(s: &str) -> CliResult<Method> {
    let key = s.trim().to_ascii_lowercase().replace('-', "_");
    match key.as_str() {
        "vmpg_dbb" | "dbb" => Ok(Method::VmpgDbb),
        "pg_bb" | "bb" => Ok(Method::PgBb),
        "fista" => Ok(Method::Fista),
        _ => match key.strip_prefix("pg_fixed:") {
            Some(a) => a
                .parse::<f64>()
                .ok()
                .filter(|a| *a > 0.0 && a.is_finite())
                .map(Method::PgFixed)
                .ok_or_else(|| CliError::config(format!("bad fixed stepsize in `{s}`"))),
            None => Err(CliError::config(format!(
                "unknown method `{s}` (expected pg_bb, vmpg_dbb, fista or pg_fixed:<alpha>)"
            ))),
        },
    }
}

fn parse_line_search(s: &str) -> CliResult<LineSearch> {
    match s.to_ascii_lowercase().as_str() {
        "nonmonotone" => Ok(LineSearch::Nonmonotone),
        "monotone" => Ok(LineSearch::Monotone),
        "off" | "none" => Ok(LineSearch::Off),
        _ => Err(CliError::config(format!("unknown line search `{s}`"))),
    }
}

fn parse_stopping(s: &str) -> CliResult<StoppingRule> {
    match s.to_ascii_lowercase().as_str() {
        "forward" | "forward_step" => Ok(StoppingRule::ForwardStep),
        "residual" | "relative_residual" => Ok(StoppingRule::RelativeResidual),
        _ => Err(CliError::config(format!("unknown stopping rule `{s}`"))),
    }
}

fn line_search_name(ls: LineSearch) -> &'static str {
    match ls {
        LineSearch::Nonmonotone => "nonmonotone",
        LineSearch::Monotone => "monotone",
        LineSearch::Off => "off",
    }
}

fn stopping_name(s: StoppingRule) -> &'static str {
    match s {
        StoppingRule::ForwardStep => "forward",
        StoppingRule::RelativeResidual => "residual",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub n: usize,
    pub samples: usize,
    pub kappa: f64,
    pub reg: RegKind,
    pub lambda: f64,
    pub lambda2: f64,
    pub group_size: usize,
    pub noise: f64,
    pub data: Option<PathBuf>,
    pub label_column: usize,
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.data, self.kind) {
            (Some(path), _) => write!(f, "{} data={} reg={}", self.kind.as_str(), path.display(), self.reg.as_str())?,
            (None, ProblemKind::Qp) => write!(f, "qp n={} kappa={} reg={}", self.n, self.kappa, self.reg.as_str())?,
            (None, k) => write!(f, "{} N={} n={} reg={}", k.as_str(), self.samples, self.n, self.reg.as_str())?,
        }
        if matches!(self.reg, RegKind::Lasso | RegKind::ElasticNet | RegKind::GroupLasso | RegKind::Ridge) {
            write!(f, " lambda={}", self.lambda)?;
        }
        Ok(())
    }
}

/// Fully resolved, validated run specification.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub command: Command,
    pub problem: ProblemSpec,
    pub solver: SolverConfig,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub timing: bool,
    pub exec: Execution,
    pub nodes: usize,
    pub modes: Vec<MetricMode>,
    pub mu_values: Vec<f64>,
    /// SHA-256 of the resolved configuration (output directory excluded).
    pub config_hash: String,
}

fn positive(name: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(format!("{name} must be positive, got {v}")))
    }
}

impl RunSpec {
    pub fn resolve(command: Command, cfg: FileConfig, env_out: Option<PathBuf>) -> CliResult<Self> {
        let p = &cfg.problem;
        let kind: ProblemKind = p.kind.as_deref().unwrap_or(if command == Command::Consensus { "ls" } else { "qp" }).parse()?;
        if command == Command::Consensus && kind != ProblemKind::Ls {
            return Err(CliError::config("consensus runs penalized least squares; use --problem ls"));
        }
        let default_n = if command == Command::Consensus { 20 } else { 200 };
        let n = p.n.unwrap_or(default_n);
        if n < 2 {
            return Err(CliError::config(format!("n must be at least 2, got {n}")));
        }
        let samples = p
            .samples
            .unwrap_or(if command == Command::Consensus { 2000 } else { (n / 5).max(2) });
        let kappa = p.kappa.unwrap_or(1e4);
        if !(kappa >= 1.0 && kappa.is_finite()) {
            return Err(CliError::config(format!("kappa must be >= 1, got {kappa}")));
        }
        let default_reg = match (command, kind) {
            (Command::Consensus, _) => "ridge",
            (_, ProblemKind::Qp) => "nonneg",
            _ => "lasso",
        };
        let reg: RegKind = p.reg.as_deref().unwrap_or(default_reg).parse()?;
        if command == Command::Consensus && reg != RegKind::Ridge {
            return Err(CliError::config("consensus folds the penalty into each node; use --reg ridge"));
        }
        if reg == RegKind::Ridge && kind == ProblemKind::Qp {
            return Err(CliError::config("ridge applies to regression problems only"));
        }
        let lambda = p.lambda.unwrap_or(kind.loss().map_or(1e-2, Loss::default_lambda));
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(CliError::config(format!("lambda must be >= 0, got {lambda}")));
        }
        let lambda2 = p.lambda2.unwrap_or(lambda);
        let group_size = p.group_size.unwrap_or(1);
        if reg == RegKind::GroupLasso && (group_size == 0 || !n.is_multiple_of(group_size)) {
            return Err(CliError::config(format!("group size {group_size} must divide n = {n}")));
        }
        if matches!(reg, RegKind::Lasso | RegKind::ElasticNet | RegKind::GroupLasso) {
            positive("lambda", lambda)?;
        }
        if reg == RegKind::ElasticNet {
            positive("lambda2", lambda2)?;
        }
        let noise = p.noise.unwrap_or(0.2);
        if !(noise >= 0.0 && noise.is_finite()) {
            return Err(CliError::config(format!("noise must be >= 0, got {noise}")));
        }
        if let Some(path) = &p.data {
            if kind == ProblemKind::Qp {
                return Err(CliError::config("--data needs a regression problem (ls or lr)"));
            }
            if !path.is_file() {
                return Err(CliError::config(format!("data file {} does not exist", path.display())));
            }
        }
        let problem = ProblemSpec {
            kind,
            n,
            samples,
            kappa,
            reg,
            lambda,
            lambda2,
            group_size,
            noise,
            data: p.data.clone(),
            label_column: p.label_column.unwrap_or(0),
        };

        let s = &cfg.solver;
        let base = SolverConfig::default();
        let solver = SolverConfig {
            max_iter: s.max_iter.unwrap_or(base.max_iter),
            eps_tol: s.eps_tol.unwrap_or(if kind == ProblemKind::Lr { 1e-2 } else { 1e-4 }),
            mu: s.mu.unwrap_or(base.mu),
            m_ls: s.mls.unwrap_or(base.m_ls),
            beta: s.beta.unwrap_or(base.beta),
            delta: s.delta.unwrap_or(base.delta),
            line_search: s.line_search.as_deref().map(parse_line_search).transpose()?.unwrap_or(base.line_search),
            stopping: s.stopping.as_deref().map(parse_stopping).transpose()?.unwrap_or(base.stopping),
            ..base
        };
        solver.validate().map_err(|e| CliError::config(e.to_string()))?;

        let default_methods: &[&str] = match command {
            Command::Solve | Command::SweepMu => &["vmpg_dbb"],
            _ => &["pg_bb", "vmpg_dbb"],
        };
        let method_names: Vec<String> = cfg
            .run
            .methods
            .clone()
            .unwrap_or_else(|| default_methods.iter().map(|s| s.to_string()).collect());
        let methods = method_names.iter().map(|m| parse_method(m)).collect::<CliResult<Vec<_>>>()?;
        let seeds = cfg.run.seeds.clone().unwrap_or_else(|| vec![0]);
        if methods.is_empty() || seeds.is_empty() {
            return Err(CliError::config("need at least one method and one seed"));
        }
        if command == Command::Solve && (methods.len() != 1 || seeds.len() != 1) {
            return Err(CliError::config("solve runs exactly one method on one seed"));
        }

        let nodes = cfg.consensus.nodes.unwrap_or(4);
        if nodes == 0 {
            return Err(CliError::config("need at least one node"));
        }
        let mode_names = cfg.consensus.modes.clone().unwrap_or_else(|| {
            ["global_bb", "local_bb", "local_dbb"].iter().map(|s| s.to_string()).collect()
        });
        let modes = mode_names
            .iter()
            .map(|m| m.parse::<MetricMode>().map_err(|e| CliError::config(e.to_string())))
            .collect::<CliResult<Vec<_>>>()?;
        if modes.is_empty() {
            return Err(CliError::config("need at least one consensus mode"));
        }

        let mu_values = cfg.sweep.mu.clone().unwrap_or_else(|| vec![1e-8, 1e-2, 1e-1, 1.0]);
        if command == Command::SweepMu {
            if mu_values.len() < 2 {
                return Err(CliError::config("sweep-mu needs at least two mu values"));
            }
            for &mu in &mu_values {
                positive("mu", mu)?;
            }
        }

        let out = cfg
            .run
            .out
            .clone()
            .or(env_out)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        let timing = cfg.run.timing.unwrap_or(true);
        let exec = if cfg.run.sequential.unwrap_or(false) {
            Execution::Sequential
        } else {
            Execution::Parallel
        };

        let resolved = FileConfig {
            problem: ProblemSection {
                kind: Some(kind.as_str().into()),
                n: Some(n),
                samples: Some(samples),
                kappa: Some(kappa),
                reg: Some(reg.as_str().into()),
                lambda: Some(lambda),
                lambda2: Some(lambda2),
                group_size: Some(group_size),
                noise: Some(noise),
                data: problem.data.clone(),
                label_column: Some(problem.label_column),
            },
            solver: SolverSection {
                max_iter: Some(solver.max_iter),
                eps_tol: Some(solver.eps_tol),
                mu: Some(solver.mu),
                mls: Some(solver.m_ls),
                beta: Some(solver.beta),
                delta: Some(solver.delta),
                line_search: Some(line_search_name(solver.line_search).into()),
                stopping: Some(stopping_name(solver.stopping).into()),
            },
            run: RunSection {
                seeds: Some(seeds.clone()),
                methods: Some(methods.iter().map(Method::name).collect()),
                out: None,
                timing: Some(timing),
                sequential: None,
            },
            consensus: ConsensusSection {
                nodes: Some(nodes),
                modes: Some(modes.iter().map(|m| m.as_str().to_string()).collect()),
            },
            sweep: SweepSection {
                mu: Some(mu_values.clone()),
            },
        };
        let text = format!(
            "command = \"{}\"\n{}",
            command.as_str(),
            toml::to_string(&resolved).map_err(|e| CliError::config(e.to_string()))?
        );
        let config_hash = Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();

        Ok(RunSpec {
            command,
            problem,
            solver,
            methods,
            seeds,
            out,
            timing,
            exec,
            nodes,
            modes,
            mu_values,
            config_hash,
        })
    }
}

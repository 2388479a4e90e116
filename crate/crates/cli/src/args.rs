use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Command, FileConfig, ProblemSection, RunSection, SolverSection, OUT_DIR_ENV};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "vmpg", version, about = "Variable metric proximal gradient benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Run every (seed, method) pair and write traces plus a summary table.
    Bench(CommonArgs),
    /// Repeat the diagonal BB run for several values of mu.
    SweepMu(SweepArgs),
    /// Simulated consensus runs with local or global metrics.
    Consensus(ConsensusArgs),
    /// Write generated problems to CSV.
    Gen(CommonArgs),
    /// A single run.
    Solve(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML file with [problem], [solver], [run], [consensus] and [sweep] sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seeds, e.g. `0,1,2` or `0..20`.
    #[arg(long = "seed", value_delimiter = ',')]
    pub seeds: Vec<String>,
    /// Methods: pg_bb, vmpg_dbb, fista, pg_fixed:<alpha>.
    #[arg(long = "method", value_delimiter = ',')]
    pub methods: Vec<String>,
    /// Output directory [default: $VMPG_OUT_DIR, then ./vmpg-out].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Iteration cap.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Stopping tolerance.
    #[arg(long)]
    pub eps_tol: Option<f64>,
    /// Diagonal BB regularization weight.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Non-monotone line search window.
    #[arg(long)]
    pub mls: Option<usize>,
    /// Backtracking factor.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Hybrid BB threshold.
    #[arg(long)]
    pub delta: Option<f64>,
    /// nonmonotone, monotone or off.
    #[arg(long)]
    pub line_search: Option<String>,
    /// forward or residual.
    #[arg(long)]
    pub stopping: Option<String>,
    /// Write wall_ms as 0 so reruns are byte-identical.
    #[arg(long)]
    pub no_timing: bool,
    /// Run everything on the calling thread.
    #[arg(long)]
    pub sequential: bool,
    #[command(flatten)]
    pub problem: ProblemArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// qp, ls or lr.
    #[arg(long)]
    pub problem: Option<String>,
    /// Dimension.
    #[arg(long)]
    pub n: Option<usize>,
    /// Sample count for regression problems.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Condition number of the QP.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// none, nonneg, lasso, elastic_net, group_lasso, simplex or ridge.
    #[arg(long)]
    pub reg: Option<String>,
    /// Regularization weight.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Quadratic weight of the elastic net [default: lambda].
    #[arg(long)]
    pub lambda2: Option<f64>,
    /// Group size for group_lasso; must divide n.
    #[arg(long)]
    pub group_size: Option<usize>,
    /// Label noise level of generated regression data.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Numeric CSV to load instead of generating data.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// 0-based label column of `--data`.
    #[arg(long)]
    pub label_column: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Values of mu, e.g. `1e-8,0.01,0.1,1`.
    #[arg(long = "mu-values", value_delimiter = ',')]
    pub mu_values: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ConsensusArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of simulated nodes.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// global_bb, global_dbb, local_bb, local_dbb.
    #[arg(long = "mode", value_delimiter = ',')]
    pub modes: Vec<String>,
}

/// `a`, or `a..b` for the half-open range.
pub fn parse_seeds(items: &[String]) -> CliResult<Vec<u64>> {
    let mut out = Vec::new();
    for item in items {
        let item = item.trim();
        let bad = || CliError::config(format!("bad seed `{item}`"));
        match item.split_once("..") {
            Some((a, b)) => {
                let a: u64 = a.parse().map_err(|_| bad())?;
                let b: u64 = b.parse().map_err(|_| bad())?;
                if a >= b {
                    return Err(bad());
                }
                out.extend(a..b);
            }
            None => out.push(item.parse().map_err(|_| bad())?),
        }
    }
    Ok(out)
}

fn non_empty<T>(v: Vec<T>) -> Option<Vec<T>> {
    (!v.is_empty()).then_some(v)
}

impl CommonArgs {
    /// Flags as a config layer; unset flags stay `None`.
    pub fn overrides(&self) -> CliResult<FileConfig> {
        let p = &self.problem;
        Ok(FileConfig {
            problem: ProblemSection {
                kind: p.problem.clone(),
                n: p.n,
                samples: p.samples,
                kappa: p.kappa,
                reg: p.reg.clone(),
                lambda: p.lambda,
                lambda2: p.lambda2,
                group_size: p.group_size,
                noise: p.noise,
                data: p.data.clone(),
                label_column: p.label_column,
            },
            solver: SolverSection {
                max_iter: self.max_iter,
                eps_tol: self.eps_tol,
                mu: self.mu,
                mls: self.mls,
                beta: self.beta,
                delta: self.delta,
                line_search: self.line_search.clone(),
                stopping: self.stopping.clone(),
            },
            run: RunSection {
                seeds: non_empty(parse_seeds(&self.seeds)?),
                methods: non_empty(self.methods.clone()),
                out: None,
                timing: self.no_timing.then_some(false),
                sequential: self.sequential.then_some(true),
            },
            ..Default::default()
        })
    }

    /// File layer (if any) overlaid with the flags, plus the environment's
    /// output directory, which ranks below both.
    pub fn layered(&self) -> CliResult<(FileConfig, Option<PathBuf>)> {
        let file = match &self.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let mut merged = file.overlay(self.overrides()?);
        if let Some(flag) = &self.out {
            merged.run.out = Some(flag.clone());
        }
        let env_out = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
        Ok((merged, env_out))
    }
}

impl CliCommand {
    pub fn kind(&self) -> Command {
        match self {
            CliCommand::Bench(_) => Command::Bench,
            CliCommand::SweepMu(_) => Command::SweepMu,
            CliCommand::Consensus(_) => Command::Consensus,
            CliCommand::Gen(_) => Command::Gen,
            CliCommand::Solve(_) => Command::Solve,
        }
    }

    pub fn layered(&self) -> CliResult<(FileConfig, Option<PathBuf>)> {
        match self {
            CliCommand::Bench(c) | CliCommand::Gen(c) | CliCommand::Solve(c) => c.layered(),
            CliCommand::SweepMu(s) => {
                let (mut cfg, env) = s.common.layered()?;
                if !s.mu_values.is_empty() {
                    cfg.sweep.mu = Some(s.mu_values.clone());
                }
                Ok((cfg, env))
            }
            CliCommand::Consensus(c) => {
                let (mut cfg, env) = c.common.layered()?;
                if c.nodes.is_some() {
                    cfg.consensus.nodes = c.nodes;
                }
                if !c.modes.is_empty() {
                    cfg.consensus.modes = Some(c.modes.clone());
                }
                Ok((cfg, env))
            }
        }
    }
}

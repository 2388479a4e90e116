use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use vmpg::consensus::{generate_consensus, proportional_shards, solve_consensus, ConsensusConfig, ConsensusSpec};
use vmpg::solver::{solve, Method, SolverConfig, TraceRecord};
use vmpg::{DenseVector, Execution};

use crate::config::{ProblemKind, RunSpec};
use crate::error::{CliError, CliResult};
use crate::output::{self, fmt_f64, join_seeds, slug, CsvFile, RunRow, SWEEP_COLUMNS};
use crate::problem::{self, Instance};

/// Runs `job` over `items` in order, on the rayon pool unless sequential.
fn map_ordered<T, R, F>(exec: Execution, items: &[T], job: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        Execution::Parallel => items.par_iter().map(&job).collect(),
        Execution::Sequential => items.iter().map(job).collect(),
    }
}

fn out_dir(spec: &RunSpec) -> CliResult<&Path> {
    fs::create_dir_all(&spec.out).map_err(|source| CliError::Output {
        path: spec.out.clone(),
        source,
    })?;
    Ok(&spec.out)
}

fn elapsed_ms(clock: Instant) -> f64 {
    clock.elapsed().as_secs_f64() * 1e3
}

fn instances(spec: &RunSpec) -> CliResult<Vec<Instance>> {
    map_ordered(spec.exec, &spec.seeds, |&seed| problem::build(&spec.problem, seed, spec.exec))
        .into_iter()
        .collect()
}

fn trace_path(dir: &Path, label: &str, seed: u64) -> PathBuf {
    dir.join(format!("trace_{}_seed{seed}.csv", slug(label)))
}

fn run_one(
    spec: &RunSpec,
    dir: &Path,
    inst: &Instance,
    seed: u64,
    method: Method,
    mu: f64,
) -> CliResult<(RunRow, Vec<TraceRecord>)> {
    let cfg = SolverConfig {
        method,
        mu,
        ..spec.solver.clone()
    };
    let clock = Instant::now();
    let label = method.name();
    let outcome = solve(&*inst.f, &inst.g, &inst.x0, &cfg).map(|res| {
        let iterations = res.iterations();
        (res.trace, iterations, res.objective, res.status.as_str().to_string())
    });
    let wall_ms = elapsed_ms(clock);
    let (trace, iterations, final_objective, status) = recorded(outcome, &label, seed);
    if spec.command != crate::config::Command::SweepMu {
        let meta = [
            ("seed", seed.to_string()),
            ("method", label.clone()),
            ("problem", spec.problem.to_string()),
        ];
        output::write_trace(&trace_path(dir, &label, seed), spec, &meta, &trace, None)?;
    }
    let row = RunRow {
        method: label,
        seed,
        iterations,
        wall_ms,
        final_objective,
        status,
    };
    Ok((row, trace))
}

type Outcome = (Vec<TraceRecord>, usize, f64, String);

/// A solver error becomes an `error` row instead of aborting the batch.
fn recorded(outcome: vmpg::Result<Outcome>, label: &str, seed: u64) -> Outcome {
    outcome.unwrap_or_else(|e| {
        eprintln!("warning: {label} seed {seed} failed: {e}");
        (Vec::new(), 0, f64::NAN, "error".to_string())
    })
}

fn summary_meta(spec: &RunSpec, methods: String) -> Vec<(&'static str, String)> {
    vec![
        ("seeds", join_seeds(&spec.seeds)),
        ("methods", methods),
        ("problem", spec.problem.to_string()),
    ]
}

fn print_aggregates(rows: &[RunRow]) {
    for (method, converged, total, it, _) in output::aggregate(rows) {
        println!(
            "{method}: converged {converged}/{total}, iterations median {} mean {:.1}",
            it.median, it.mean
        );
    }
}

fn exit_for(rows: &[RunRow]) -> i32 {
    if rows.iter().all(RunRow::converged) {
        0
    } else {
        2
    }
}

pub fn bench(spec: &RunSpec) -> CliResult<i32> {
    let dir = out_dir(spec)?;
    let insts = instances(spec)?;
    let jobs: Vec<(Method, usize)> = spec
        .methods
        .iter()
        .flat_map(|&m| (0..spec.seeds.len()).map(move |k| (m, k)))
        .collect();
    let rows = map_ordered(spec.exec, &jobs, |&(m, k)| {
        run_one(spec, dir, &insts[k], spec.seeds[k], m, spec.solver.mu).map(|(row, _)| row)
    })
    .into_iter()
    .collect::<CliResult<Vec<_>>>()?;
    let methods = spec.methods.iter().map(Method::name).collect::<Vec<_>>().join(",");
    output::write_summary(&dir.join("summary.csv"), spec, &summary_meta(spec, methods), &rows)?;
    print_aggregates(&rows);
    Ok(exit_for(&rows))
}

pub fn solve_single(spec: &RunSpec) -> CliResult<i32> {
    let dir = out_dir(spec)?;
    let seed = spec.seeds[0];
    let method = spec.methods[0];
    let inst = problem::build(&spec.problem, seed, spec.exec)?;
    let (row, _) = run_one(spec, dir, &inst, seed, method, spec.solver.mu)?;
    output::write_summary(&dir.join("summary.csv"), spec, &summary_meta(spec, method.name()), std::slice::from_ref(&row))?;
    println!(
        "{} seed {}: {} after {} iterations, F = {}",
        row.method, row.seed, row.status, row.iterations, fmt_f64(row.final_objective)
    );
    Ok(exit_for(&[row]))
}

pub fn sweep_mu(spec: &RunSpec) -> CliResult<i32> {
    if spec.methods.iter().any(|&m| m != Method::VmpgDbb) {
        return Err(CliError::config("sweep-mu only runs vmpg_dbb"));
    }
    let dir = out_dir(spec)?;
    let insts = instances(spec)?;
    let jobs: Vec<(f64, usize)> = spec
        .mu_values
        .iter()
        .flat_map(|&mu| (0..spec.seeds.len()).map(move |k| (mu, k)))
        .collect();
    let results = map_ordered(spec.exec, &jobs, |&(mu, k)| {
        run_one(spec, dir, &insts[k], spec.seeds[k], Method::VmpgDbb, mu)
    })
    .into_iter()
    .collect::<CliResult<Vec<_>>>()?;

    let mu_list = spec.mu_values.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(",");
    let mut meta = summary_meta(spec, Method::VmpgDbb.name());
    meta.push(("mu_values", mu_list));
    let mut long = CsvFile::create(&dir.join("sweep_mu.csv"), spec, &meta, &SWEEP_COLUMNS)?;
    let mut rows = Vec::with_capacity(results.len());
    for (&(mu, k), (mut row, trace)) in jobs.iter().zip(results) {
        for rec in &trace {
            long.row([fmt_f64(mu), spec.seeds[k].to_string(), rec.iter.to_string(), fmt_f64(rec.objective)])?;
        }
        row.method = format!("vmpg_dbb@mu={mu}");
        rows.push(row);
    }
    long.finish()?;
    output::write_summary(&dir.join("summary.csv"), spec, &meta, &rows)?;
    print_aggregates(&rows);
    Ok(exit_for(&rows))
}

pub fn consensus(spec: &RunSpec) -> CliResult<i32> {
    if spec.problem.kind != ProblemKind::Ls {
        return Err(CliError::config("consensus runs least squares only"));
    }
    let dir = out_dir(spec)?;
    let shards = proportional_shards(spec.problem.samples, spec.nodes)?;
    let shard_list = shards.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
    let insts = map_ordered(spec.exec, &spec.seeds, |&seed| {
        generate_consensus(&ConsensusSpec {
            n_nodes: spec.nodes,
            samples: spec.problem.samples,
            features: spec.problem.n,
            lambda: spec.problem.lambda,
            seed,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let jobs: Vec<_> = spec
        .modes
        .iter()
        .flat_map(|&m| (0..spec.seeds.len()).map(move |k| (m, k)))
        .collect();
    let rows = map_ordered(spec.exec, &jobs, |&(mode, k)| -> CliResult<RunRow> {
        let problem = &insts[k].problem;
        let cfg = ConsensusConfig {
            solver: spec.solver.clone(),
            mode,
            exec: spec.exec,
        };
        let clock = Instant::now();
        let seed = spec.seeds[k];
        let outcome = solve_consensus(problem, &DenseVector::zeros(problem.shared_dim()), &cfg).map(|res| {
            let rounds = res.rounds();
            (res.trace, rounds, res.objective, res.status.as_str().to_string())
        });
        let wall_ms = elapsed_ms(clock);
        let (trace, iterations, final_objective, status) = recorded(outcome, mode.as_str(), seed);
        let meta = [
            ("seed", seed.to_string()),
            ("method", mode.as_str().to_string()),
            ("problem", spec.problem.to_string()),
            ("nodes", spec.nodes.to_string()),
            ("shards", shard_list.clone()),
        ];
        output::write_trace(
            &trace_path(dir, mode.as_str(), seed),
            spec,
            &meta,
            &trace,
            Some(problem.bytes_per_round()),
        )?;
        Ok(RunRow {
            method: mode.as_str().to_string(),
            seed,
            iterations,
            wall_ms,
            final_objective,
            status,
        })
    })
    .into_iter()
    .collect::<CliResult<Vec<_>>>()?;
    let modes = spec.modes.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(",");
    let mut meta = summary_meta(spec, modes);
    meta.push(("nodes", spec.nodes.to_string()));
    meta.push(("shards", shard_list));
    output::write_summary(&dir.join("summary.csv"), spec, &meta, &rows)?;
    print_aggregates(&rows);
    Ok(exit_for(&rows))
}

pub fn gen(spec: &RunSpec) -> CliResult<i32> {
    if spec.problem.data.is_some() {
        return Err(CliError::config("gen writes generated data; drop --data"));
    }
    let dir = out_dir(spec)?;
    for &seed in &spec.seeds {
        let name = match spec.problem.kind {
            ProblemKind::Qp => format!("qp_n{}_seed{seed}.csv", spec.problem.n),
            kind => format!("{}_N{}_n{}_seed{seed}.csv", kind.as_str(), spec.problem.samples, spec.problem.n),
        };
        let path = dir.join(name);
        let (header, rows) = problem::generated_table(&spec.problem, seed)?;
        let meta = [("seed", seed.to_string()), ("problem", spec.problem.to_string())];
        let columns: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut file = CsvFile::create(&path, spec, &meta, &columns)?;
        for row in rows {
            file.row(row.into_iter().map(fmt_f64))?;
        }
        file.finish()?;
        println!("{}", path.display());
    }
    Ok(0)
}

//! CSV files with a `#` metadata preamble.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use vmpg::problems::RNG_ALGORITHM;
use vmpg::solver::TraceRecord;

use crate::config::RunSpec;
use crate::error::{CliError, CliResult};

pub const TOOL_VERSION: &str = concat!("vmpg-cli ", env!("CARGO_PKG_VERSION"));

pub const TRACE_COLUMNS: [&str; 8] = [
    "iter",
    "objective",
    "grad_map_norm",
    "step_norm_u",
    "backtracks",
    "u_min",
    "u_max",
    "wall_ms",
];

pub const SUMMARY_COLUMNS: [&str; 12] = [
    "method",
    "seed",
    "iterations",
    "wall_ms",
    "final_objective",
    "status",
    "iter_median",
    "iter_mean",
    "iter_stddev",
    "wall_ms_median",
    "wall_ms_mean",
    "wall_ms_stddev",
];

pub const SWEEP_COLUMNS: [&str; 4] = ["mu", "seed", "iter", "objective"];

/// 17 significant digits, which round-trips every `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn join_seeds(seeds: &[u64]) -> String {
    seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

/// File-name-safe version of a label.
pub fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect()
}

pub struct CsvFile {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvFile {
    /// Creates `path`, writes the metadata preamble and the header row.
    pub fn create(path: &Path, spec: &RunSpec, meta: &[(&str, String)], columns: &[&str]) -> CliResult<Self> {
        let io = |source| CliError::Output {
            path: path.to_path_buf(),
            source,
        };
        let mut buf = BufWriter::new(File::create(path).map_err(io)?);
        let mut lines = vec![
            ("tool", TOOL_VERSION.to_string()),
            ("command", spec.command.as_str().to_string()),
            ("config_hash", spec.config_hash.clone()),
            ("rng", RNG_ALGORITHM.to_string()),
        ];
        lines.extend(meta.iter().map(|(k, v)| (*k, v.clone())));
        for (k, v) in lines {
            writeln!(buf, "# {k}: {v}").map_err(io)?;
        }
        let mut file = CsvFile {
            path: path.to_path_buf(),
            writer: csv::Writer::from_writer(buf),
        };
        file.row(columns.iter().copied())?;
        Ok(file)
    }

    pub fn row<I, S>(&mut self, fields: I) -> CliResult<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(|e| self.csv_error(e))
    }

    fn csv_error(&self, e: csv::Error) -> CliError {
        CliError::Output {
            path: self.path.clone(),
            source: std::io::Error::other(e),
        }
    }

    pub fn finish(mut self) -> CliResult<()> {
        let path = self.path.clone();
        self.writer.flush().map_err(|source| CliError::Output { path, source })
    }
}

pub fn trace_fields(rec: &TraceRecord, timing: bool) -> Vec<String> {
    vec![
        rec.iter.to_string(),
        fmt_f64(rec.objective),
        fmt_f64(rec.grad_map_norm),
        fmt_f64(rec.step_norm_u),
        rec.backtracks.to_string(),
        fmt_f64(rec.u_min),
        fmt_f64(rec.u_max),
        fmt_f64(if timing { rec.wall_ms } else { 0.0 }),
    ]
}

/// Per-iteration trace; `bytes_per_round` adds the consensus cost column.
pub fn write_trace(
    path: &Path,
    spec: &RunSpec,
    meta: &[(&str, String)],
    trace: &[TraceRecord],
    bytes_per_round: Option<u64>,
) -> CliResult<()> {
    let mut columns: Vec<&str> = TRACE_COLUMNS.to_vec();
    if bytes_per_round.is_some() {
        columns.push("bytes_exchanged");
    }
    let mut file = CsvFile::create(path, spec, meta, &columns)?;
    for rec in trace {
        let mut fields = trace_fields(rec, spec.timing);
        if let Some(b) = bytes_per_round {
            fields.push(b.to_string());
        }
        file.row(fields)?;
    }
    file.finish()
}

/// One finished run.
#[derive(Debug, Clone)]
pub struct RunRow {
    pub method: String,
    pub seed: u64,
    pub iterations: usize,
    pub wall_ms: f64,
    pub final_objective: f64,
    pub status: String,
}

impl RunRow {
    pub fn converged(&self) -> bool {
        self.status == "converged"
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub median: f64,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub stddev: f64,
}

pub fn stats(values: &[f64]) -> Stats {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        return Stats {
            median: f64::NAN,
            mean: f64::NAN,
            stddev: f64::NAN,
        };
    }
    let median = if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) };
    let mean = v.iter().sum::<f64>() / k as f64;
    let stddev = if k > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
    } else {
        0.0
    };
    Stats { median, mean, stddev }
}

/// Methods in order of first appearance with their iteration and timing stats.
pub fn aggregate(rows: &[RunRow]) -> Vec<(String, usize, usize, Stats, Stats)> {
    let mut order: Vec<String> = Vec::new();
    for r in rows {
        if !order.contains(&r.method) {
            order.push(r.method.clone());
        }
    }
    order
        .into_iter()
        .map(|m| {
            let mine: Vec<&RunRow> = rows.iter().filter(|r| r.method == m).collect();
            let iters: Vec<f64> = mine.iter().map(|r| r.iterations as f64).collect();
            let wall: Vec<f64> = mine.iter().map(|r| r.wall_ms).collect();
            let converged = mine.iter().filter(|r| r.converged()).count();
            (m, converged, mine.len(), stats(&iters), stats(&wall))
        })
        .collect()
}

/// Data rows followed by one aggregate row per method.
pub fn write_summary(path: &Path, spec: &RunSpec, meta: &[(&str, String)], rows: &[RunRow]) -> CliResult<()> {
    let mut file = CsvFile::create(path, spec, meta, &SUMMARY_COLUMNS)?;
    let wall = |v: f64| fmt_f64(if spec.timing { v } else { 0.0 });
    for r in rows {
        let mut fields = vec![
            r.method.clone(),
            r.seed.to_string(),
            r.iterations.to_string(),
            wall(r.wall_ms),
            fmt_f64(r.final_objective),
            r.status.clone(),
        ];
        fields.extend(std::iter::repeat_n(String::new(), 6));
        file.row(fields)?;
    }
    for (method, converged, total, it, wt) in aggregate(rows) {
        file.row([
            method,
            "aggregate".into(),
            String::new(),
            String::new(),
            String::new(),
            format!("converged={converged}/{total}"),
            fmt_f64(it.median),
            fmt_f64(it.mean),
            fmt_f64(it.stddev),
            wall(wt.median),
            wall(wt.mean),
            wall(wt.stddev),
        ])?;
    }
    file.finish()
}

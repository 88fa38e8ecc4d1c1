// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use tessera::comm::run_in_process;
use tessera::io::{generate_table, GenerateSpec};
use tessera::table::split_blocks;
use tessera::Table;

use crate::op::{OpArgs, OpSpec};
use crate::UsageError;

/// Seed offset separating the right relation's stream from the left's.
const RIGHT_SEED_OFFSET: u64 = 1 << 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Fixed rows per worker; total input grows with the world size.
    Weak,
    /// Fixed total rows split across the workers.
    Strong,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    #[command(flatten)]
    pub op: OpArgs,
    /// Rows per worker and relation in weak mode.
    #[arg(long, default_value_t = 100_000)]
    pub rows_per_worker: usize,
    /// Total rows per relation in strong mode.
    #[arg(long, default_value_t = 2_000_000)]
    pub total_rows: usize,
    /// Comma-separated world sizes.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    pub workers: Vec<usize>,
    /// Repetitions per world size; the median is reported.
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Distinct join keys (defaults to the rows per relation).
    #[arg(long)]
    pub key_cardinality: Option<u64>,
    /// CSV report path.
    #[arg(long, default_value = "bench.csv")]
    pub report: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub world_size: usize,
    pub median_ms: f64,
    pub speedup: f64,
    pub rows_out: usize,
    pub runs_ms: Vec<f64>,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn relation(rows: usize, seed: u64, key_cardinality: u64) -> Result<Table> {
    Ok(generate_table(&GenerateSpec::experiment(rows, seed).with_key_cardinality(key_cardinality))?)
}

/// Per-worker (left, right) inputs for one world size.
fn inputs(args: &BenchArgs, world_size: usize, strong_inputs: Option<&(Table, Table)>) -> Result<Vec<(Table, Table)>> {
    match args.mode {
        Mode::Strong => {
            let (l, r) = strong_inputs.expect("strong inputs generated up front");
            Ok(split_blocks(l, world_size)?.into_iter().zip(split_blocks(r, world_size)?).collect())
        }
        Mode::Weak => {
            let rows = args.rows_per_worker;
            let k = args.key_cardinality.unwrap_or((rows * world_size).max(1) as u64);
            (0..world_size)
                .map(|w| {
                    let seed = args.seed.wrapping_add(w as u64);
                    Ok((relation(rows, seed, k)?, relation(rows, seed.wrapping_add(RIGHT_SEED_OFFSET), k)?))
                })
                .collect()
        }
    }
}

/// One timed repetition: the slowest worker's operator time and the total
/// output rows.
fn run_once(spec: &OpSpec, parts: &[(Table, Table)]) -> Result<(f64, usize)> {
    let per_worker = run_in_process(parts.len(), |ctx| {
        let (l, r) = parts[ctx.rank()].clone();
        ctx.barrier()?;
        let start = Instant::now();
        let out = spec
            .run_distributed(ctx, l, Some(r))
            .map_err(|e| tessera::Error::InvalidArgument(format!("{e:#}")))?;
        Ok((start.elapsed().as_secs_f64() * 1e3, out.num_rows()))
    })?;
    let slowest = per_worker.iter().map(|p| p.0).fold(0.0, f64::max);
    Ok((slowest, per_worker.iter().map(|p| p.1).sum()))
}

pub fn run_bench(args: &BenchArgs, spec: &OpSpec) -> Result<Vec<BenchRow>> {
    if args.workers.is_empty() || args.workers.contains(&0) || args.reps == 0 {
        return Err(UsageError::new("--workers must list positive world sizes and --reps must be positive").into());
    }
    let strong_inputs = match args.mode {
        Mode::Strong => {
            let k = args.key_cardinality.unwrap_or(args.total_rows.max(1) as u64);
            let l = relation(args.total_rows, args.seed, k)?;
            let r = relation(args.total_rows, args.seed.wrapping_add(RIGHT_SEED_OFFSET), k)?;
            Some((l, r))
        }
        Mode::Weak => None,
    };
    let mut sizes = args.workers.clone();
    if !sizes.contains(&1) {
        // The serial baseline is measured even when not reported.
        sizes.insert(0, 1);
    }
    let mut rows = Vec::new();
    for &w in &sizes {
        let parts = inputs(args, w, strong_inputs.as_ref())?;
        let mut runs = Vec::with_capacity(args.reps);
        let mut rows_out = 0;
        for _ in 0..args.reps {
            let (ms, out) = run_once(spec, &parts).with_context(|| format!("world size {w}"))?;
            runs.push(ms);
            rows_out = out;
        }
        eprintln!("world size {w}: runs {runs:.3?} ms");
        rows.push(BenchRow {
            world_size: w,
            median_ms: median(&runs),
            speedup: 0.0,
            rows_out,
            runs_ms: runs,
        });
    }
    let serial = rows.iter().find(|r| r.world_size == 1).expect("baseline present").median_ms;
    for r in rows.iter_mut() {
        r.speedup = serial / r.median_ms;
    }
    rows.retain(|r| args.workers.contains(&r.world_size));
    Ok(rows)
}

pub fn render_report(args: &BenchArgs, spec: &OpSpec, rows: &[BenchRow]) -> String {
    let mut out = String::new();
    let size = match args.mode {
        Mode::Weak => format!("rows_per_worker={}", args.rows_per_worker),
        Mode::Strong => format!("total_rows={}", args.total_rows),
    };
    let _ = writeln!(
        out,
        "# mode={:?} op={} join_type={} algorithm={} {size} reps={} seed={}",
        args.mode, spec.kind, spec.join.join_type, spec.join.algorithm, args.reps, args.seed
    );
    let _ = writeln!(
        out,
        "# median_ms: median over reps of the slowest worker's operator time (shuffle and local compute, no I/O)"
    );
    let _ = writeln!(out, "# speedup: 1-worker median_ms / median_ms");
    let _ = writeln!(out, "world_size,median_ms,speedup,rows_out");
    for r in rows {
        let _ = writeln!(out, "{},{:.3},{:.4},{}", r.world_size, r.median_ms, r.speedup, r.rows_out);
    }
    out
}

pub fn cmd_bench(args: &BenchArgs) -> Result<ExitCode> {
    let spec = args.op.spec()?;
    if !spec.needs_right() {
        return Err(UsageError::new("bench supports join, union, intersect and difference").into());
    }
    let rows = run_bench(args, &spec)?;
    let report = render_report(args, &spec, &rows);
    fs::write(&args.report, &report).with_context(|| format!("writing {}", args.report.display()))?;
    print!("{report}");
    Ok(ExitCode::SUCCESS)
}

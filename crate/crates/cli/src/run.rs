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

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use tessera::comm::{init_context, parse_hosts, run_in_process_with_timeout, ContextConfig, WorkerContext};
use tessera::io::{write_csv, CsvWriteOptions};

use crate::input::InputArgs;
use crate::op::{ensure_world_size, OpArgs, OpSpec};
use crate::timing::TimingRecord;
use crate::{is_usage_error, UsageError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TransportArg {
    /// All workers as threads of this process.
    Local,
    /// This process is one rank of a TCP full mesh.
    Tcp,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub op: OpArgs,
    #[command(flatten)]
    pub inputs: InputArgs,
    /// Number of workers (defaults to the number of --left paths, or for tcp
    /// to the number of hosts).
    #[arg(long)]
    pub world_size: Option<usize>,
    #[arg(long, value_enum, default_value_t = TransportArg::Local)]
    pub transport: TransportArg,
    /// This process's rank (tcp only).
    #[arg(long)]
    pub rank: Option<usize>,
    /// File with one `host:port` per line; line i is rank i (tcp only).
    #[arg(long)]
    pub hosts_file: Option<PathBuf>,
    /// Output CSV path; `{rank}` is replaced by the worker rank.
    #[arg(long)]
    pub output: String,
    /// JSON-lines timing output; `{rank}` is expanded, otherwise records are
    /// appended.
    #[arg(long)]
    pub timing: Option<String>,
    #[arg(long, default_value_t = 30)]
    pub connect_timeout_secs: u64,
    #[arg(long, default_value_t = 300)]
    pub recv_timeout_secs: u64,
}

pub fn expand_rank(template: &str, rank: usize) -> String {
    template.replace("{rank}", &rank.to_string())
}

struct WorkerDone {
    record: TimingRecord,
    output: PathBuf,
}

/// One worker's pipeline: load, barrier, timed distributed operator, write,
/// barrier. The output is removed again if anything after writing fails.
fn worker(ctx: &WorkerContext, args: &RunArgs, spec: &OpSpec) -> Result<WorkerDone> {
    let start = Instant::now();
    let (rank, world_size) = (ctx.rank(), ctx.world_size());
    let left = args.inputs.load_left(rank, world_size)?;
    let right = args.inputs.load_right(rank, world_size)?;
    spec.check_against(&left)?;
    let (rows_in_left, rows_in_right) = (left.num_rows(), right.as_ref().map_or(0, |t| t.num_rows()));
    ctx.barrier()?;

    let op_start = Instant::now();
    let out = spec.run_distributed(ctx, left, right)?;
    let op_ms = op_start.elapsed().as_secs_f64() * 1e3;

    let output = PathBuf::from(expand_rank(&args.output, rank));
    write_csv(&out, &output, &CsvWriteOptions::default()).with_context(|| format!("writing {}", output.display()))?;
    if let Err(e) = ctx.barrier() {
        let _ = fs::remove_file(&output);
        return Err(e.into());
    }
    let record = TimingRecord {
        op: spec.kind.to_string(),
        world_size,
        rank,
        rows_in_left,
        rows_in_right,
        rows_out: out.num_rows(),
        op_wall_clock_ms: op_ms,
        total_wall_clock_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok(WorkerDone { record, output })
}

fn write_timing(path: &Path, records: &[TimingRecord], append: bool) -> Result<()> {
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    let mut file = OpenOptions::new()
        .create(true)
        .write(true)
        .append(append)
        .truncate(!append)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    // One write call so concurrent appenders do not interleave lines.
    file.write_all(text.as_bytes())?;
    Ok(())
}

fn report(done: &WorkerDone) {
    let r = &done.record;
    println!(
        "rank {}: {} rows out -> {} ({:.3} ms op, {:.3} ms total)",
        r.rank,
        r.rows_out,
        done.output.display(),
        r.op_wall_clock_ms,
        r.total_wall_clock_ms
    );
}

/// Picks the error to report when several workers fail: a usage error if any,
/// otherwise the first failure that is not just a consequence of a peer
/// going away.
fn primary_error(errors: Vec<anyhow::Error>) -> anyhow::Error {
    let is_secondary = |e: &anyhow::Error| {
        matches!(
            e.downcast_ref::<tessera::Error>(),
            Some(tessera::Error::Peer { .. } | tessera::Error::Timeout { .. })
        )
    };
    let pos = errors
        .iter()
        .position(is_usage_error)
        .or_else(|| errors.iter().position(|e| !is_secondary(e)))
        .unwrap_or(0);
    errors.into_iter().nth(pos).expect("at least one error")
}

pub fn cmd_run(args: &RunArgs) -> Result<ExitCode> {
    let spec = args.op.spec()?;
    match args.transport {
        TransportArg::Local => run_local(args, &spec),
        TransportArg::Tcp => run_tcp(args, &spec),
    }
}

fn check_common(args: &RunArgs, spec: &OpSpec, world_size: usize) -> Result<()> {
    ensure_world_size(world_size)?;
    args.inputs.check(world_size, spec.needs_right())?;
    if world_size > 1 && !args.output.contains("{rank}") {
        return Err(UsageError::new("--output must contain {rank} when world size > 1").into());
    }
    Ok(())
}

fn run_local(args: &RunArgs, spec: &OpSpec) -> Result<ExitCode> {
    if args.rank.is_some() || args.hosts_file.is_some() {
        return Err(UsageError::new("--rank and --hosts-file apply to --transport tcp only").into());
    }
    let world_size = args.world_size.unwrap_or(args.inputs.left.len().max(1));
    check_common(args, spec, world_size)?;
    let results = run_in_process_with_timeout(world_size, Duration::from_secs(args.recv_timeout_secs), |ctx| {
        Ok(worker(ctx, args, spec))
    })?;
    let mut done = Vec::new();
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(d) => done.push(d),
            Err(e) => errors.push(e),
        }
    }
    if !errors.is_empty() {
        for d in &done {
            let _ = fs::remove_file(&d.output);
        }
        return Err(primary_error(errors));
    }
    for d in &done {
        report(d);
    }
    if let Some(t) = &args.timing {
        let records: Vec<TimingRecord> = done.into_iter().map(|d| d.record).collect();
        write_timing(Path::new(t), &records, false)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run_tcp(args: &RunArgs, spec: &OpSpec) -> Result<ExitCode> {
    let (Some(rank), Some(hosts_file)) = (args.rank, &args.hosts_file) else {
        return Err(UsageError::new("--transport tcp needs --rank and --hosts-file").into());
    };
    let text = fs::read_to_string(hosts_file).with_context(|| format!("reading {}", hosts_file.display()))?;
    let peers = parse_hosts(&text).map_err(|e| UsageError::new(e.to_string()))?;
    let world_size = args.world_size.unwrap_or(peers.len());
    if world_size != peers.len() {
        return Err(UsageError::new(format!(
            "--world-size {world_size} but hosts file lists {} ranks",
            peers.len()
        ))
        .into());
    }
    if rank >= world_size {
        return Err(UsageError::new(format!("--rank {rank} out of range for world size {world_size}")).into());
    }
    check_common(args, spec, world_size)?;
    let mut config = ContextConfig::tcp(peers, rank);
    config.connect_timeout = Duration::from_secs(args.connect_timeout_secs);
    config.recv_timeout = Duration::from_secs(args.recv_timeout_secs);
    let ctx = init_context(config).context("connecting to peers")?;
    let done = worker(&ctx, args, spec)?;
    ctx.close()?;
    report(&done);
    if let Some(t) = &args.timing {
        let expanded = expand_rank(t, rank);
        write_timing(Path::new(&expanded), &[done.record], expanded == *t)?;
    }
    Ok(ExitCode::SUCCESS)
}

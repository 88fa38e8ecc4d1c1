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

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod bench;
mod generate;
mod input;
mod op;
mod run;
mod timing;
mod verify;

/// Error caused by invalid flags or flag combinations; exits with status 2.
#[derive(Debug)]
pub struct UsageError(String);

impl UsageError {
    pub fn new(msg: impl Into<String>) -> Self {
        UsageError(msg.into())
    }
}

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn is_usage_error(err: &anyhow::Error) -> bool {
    err.chain().any(|e| e.is::<UsageError>())
}

/// Distributed columnar table operators: data generation, multi-worker runs,
/// scaling benchmarks and result verification.
#[derive(Parser)]
#[command(name = "tessera", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write seeded pseudo-random CSV part files.
    Generate(generate::GenerateArgs),
    /// Load inputs, run a distributed operator and write per-rank outputs.
    Run(run::RunArgs),
    /// Measure weak or strong scaling over several world sizes.
    Bench(bench::BenchArgs),
    /// Recompute an operator serially and compare with a run's outputs.
    Verify(verify::VerifyArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => generate::cmd_generate(&args),
        Command::Run(args) => run::cmd_run(&args),
        Command::Bench(args) => bench::cmd_bench(&args),
        Command::Verify(args) => verify::cmd_verify(&args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            if is_usage_error(&err) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

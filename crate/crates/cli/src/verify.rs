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

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;
use tessera::io::{read_csv_many, CsvReadOptions};
use tessera::ops::JoinType;
use tessera::{concat, oracle, Table};

use crate::input::InputArgs;
use crate::op::{OpArgs, OpKind};
use crate::run::expand_rank;
use crate::UsageError;

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub op: OpArgs,
    #[command(flatten)]
    pub inputs: InputArgs,
    /// Output files of the run, or a single template containing `{rank}`
    /// together with --world-size.
    #[arg(long, value_delimiter = ',', required = true)]
    pub outputs: Vec<String>,
    #[arg(long)]
    pub world_size: Option<usize>,
    /// Joins whose input product exceeds this use the grouped oracle instead
    /// of the nested-loop one.
    #[arg(long, default_value_t = 25_000_000)]
    pub nested_loop_limit: u64,
}

fn output_paths(args: &VerifyArgs) -> Result<Vec<PathBuf>, UsageError> {
    match (args.outputs.as_slice(), args.world_size) {
        ([template], Some(w)) if template.contains("{rank}") => {
            Ok((0..w).map(|r| PathBuf::from(expand_rank(template, r))).collect())
        }
        (_, _) if args.outputs.iter().any(|o| o.contains("{rank}")) => {
            Err(UsageError::new("an --outputs template needs --world-size and must be the only path"))
        }
        (paths, _) => Ok(paths.iter().map(PathBuf::from).collect()),
    }
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<ExitCode> {
    let spec = args.op.spec()?;
    args.inputs.check(args.inputs.left.len(), spec.needs_right())?;
    let paths = output_paths(args)?;
    let (left, right) = args.inputs.load_all()?;
    spec.check_against(&left)?;

    let expected = spec.run_oracle(&left, right.as_ref(), args.nested_loop_limit)?;
    let opts = CsvReadOptions::default().with_schema(expected.schema().dtypes());
    let parts = read_csv_many(&paths, &opts).context("reading run outputs")?;
    let actual: Table = concat(&parts)?;

    if spec.kind == OpKind::Join && spec.join.join_type == JoinType::Inner {
        let identity = oracle::inner_join_count(&left, right.as_ref().expect("checked"), &spec.join);
        println!("key multiplicity identity: {identity} rows");
        if identity != expected.num_rows() as u64 {
            println!("mismatch: oracle produced {} rows", expected.num_rows());
            return Ok(ExitCode::from(1));
        }
    }
    println!("expected {} rows, found {} rows", expected.num_rows(), actual.num_rows());
    match oracle::first_difference(&expected, &actual) {
        None if expected.num_rows() == actual.num_rows() => {
            println!("verified: outputs match the serial result");
            Ok(ExitCode::SUCCESS)
        }
        None => unreachable!("equal canonical rows imply equal counts"),
        Some((index, description)) => {
            println!("mismatch at canonical row {index}: {description}");
            Ok(ExitCode::from(1))
        }
    }
}

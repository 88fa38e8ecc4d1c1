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
use tessera::io::{generate_table, write_csv, CsvWriteOptions, GenerateSpec};

use crate::UsageError;

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Total rows across all parts.
    #[arg(long)]
    pub rows: usize,
    /// Base seed; part i uses seed + i.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Distinct values of the `id` column (defaults to --rows).
    #[arg(long)]
    pub key_cardinality: Option<u64>,
    /// Output files are named `<prefix>_<part>.csv`.
    #[arg(long)]
    pub out_prefix: String,
    /// Number of part files.
    #[arg(long, default_value_t = 1)]
    pub parts: usize,
}

/// Rows of each part when `rows` is split as evenly as possible.
pub fn part_sizes(rows: usize, parts: usize) -> Vec<usize> {
    (0..parts).map(|i| rows / parts + usize::from(i < rows % parts)).collect()
}

pub fn part_path(prefix: &str, part: usize) -> PathBuf {
    PathBuf::from(format!("{prefix}_{part}.csv"))
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<ExitCode> {
    if args.parts == 0 {
        return Err(UsageError::new("--parts must be at least 1").into());
    }
    if args.key_cardinality == Some(0) {
        return Err(UsageError::new("--key-cardinality must be positive").into());
    }
    let key_cardinality = args.key_cardinality.unwrap_or(args.rows.max(1) as u64);
    for (part, rows) in part_sizes(args.rows, args.parts).into_iter().enumerate() {
        let spec = GenerateSpec::experiment(rows, args.seed.wrapping_add(part as u64)).with_key_cardinality(key_cardinality);
        let table = generate_table(&spec)?;
        let path = part_path(&args.out_prefix, part);
        write_csv(&table, &path, &CsvWriteOptions::default()).with_context(|| format!("writing {}", path.display()))?;
        println!("{}\t{rows}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

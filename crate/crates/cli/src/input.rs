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

//! Input file flags and per-rank partition loading.

use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::Args;
use tessera::io::read_csv;
use tessera::table::split_blocks;
use tessera::{concat, DType, Table};

use crate::op::{parse_dtypes, read_options};
use crate::UsageError;

#[derive(Clone, Debug)]
pub struct DTypeList(pub Vec<DType>);

impl FromStr for DTypeList {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        parse_dtypes(s).map(DTypeList)
    }
}

#[derive(Args, Clone, Debug)]
pub struct InputArgs {
    /// Left input CSV: one file per worker, or a single file split into
    /// contiguous row blocks.
    #[arg(long, value_delimiter = ',', required = true)]
    pub left: Vec<PathBuf>,
    /// Right input CSV, same layout rules as --left.
    #[arg(long, value_delimiter = ',')]
    pub right: Vec<PathBuf>,
    /// Column types of the left input (e.g. `int64,float64`); inferred when
    /// absent.
    #[arg(long)]
    pub left_schema: Option<DTypeList>,
    /// Column types of the right input.
    #[arg(long)]
    pub right_schema: Option<DTypeList>,
}

impl InputArgs {
    pub fn check(&self, world_size: usize, needs_right: bool) -> std::result::Result<(), UsageError> {
        let ok = |n: usize| n == 1 || n == world_size;
        if !ok(self.left.len()) {
            return Err(UsageError::new(format!(
                "--left needs 1 or {world_size} paths, got {}",
                self.left.len()
            )));
        }
        match (needs_right, self.right.len()) {
            (true, 0) => Err(UsageError::new("this operator needs --right")),
            (true, n) if !ok(n) => Err(UsageError::new(format!("--right needs 1 or {world_size} paths, got {n}"))),
            (false, n) if n > 0 => Err(UsageError::new("this operator takes no --right input")),
            _ => Ok(()),
        }
    }

    pub fn load_left(&self, rank: usize, world_size: usize) -> Result<Table> {
        load_partition(&self.left, self.left_schema.as_ref(), rank, world_size)
    }

    pub fn load_right(&self, rank: usize, world_size: usize) -> Result<Option<Table>> {
        if self.right.is_empty() {
            return Ok(None);
        }
        load_partition(&self.right, self.right_schema.as_ref(), rank, world_size).map(Some)
    }

    /// Whole logical inputs, files concatenated in order.
    pub fn load_all(&self) -> Result<(Table, Option<Table>)> {
        let left = load_all(&self.left, self.left_schema.as_ref())?;
        let right = if self.right.is_empty() {
            None
        } else {
            Some(load_all(&self.right, self.right_schema.as_ref())?)
        };
        Ok((left, right))
    }
}

fn load_partition(paths: &[PathBuf], schema: Option<&DTypeList>, rank: usize, world_size: usize) -> Result<Table> {
    let opts = read_options(schema.map(|s| &s.0));
    if paths.len() == world_size {
        let p = &paths[rank];
        return read_csv(p, &opts).with_context(|| format!("reading {}", p.display()));
    }
    let whole = read_csv(&paths[0], &opts).with_context(|| format!("reading {}", paths[0].display()))?;
    Ok(split_blocks(&whole, world_size)?.swap_remove(rank))
}

fn load_all(paths: &[PathBuf], schema: Option<&DTypeList>) -> Result<Table> {
    let opts = read_options(schema.map(|s| &s.0));
    let tables = tessera::io::read_csv_many(paths, &opts)?;
    Ok(concat(&tables)?)
}

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

//! Operator selection shared by `run`, `bench` and `verify`.

use std::fmt;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use tessera::comm::WorkerContext;
use tessera::dist::DistributedTable;
use tessera::io::CsvReadOptions;
use tessera::ops::{JoinAlgorithm, JoinConfig, JoinType, Predicate};
use tessera::{oracle, DType, Table};

use crate::UsageError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OpKind {
    Join,
    Union,
    Intersect,
    Difference,
    Select,
    Project,
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_possible_value().expect("no skipped variants").get_name())
    }
}

#[derive(Args, Clone, Debug)]
pub struct OpArgs {
    /// Operator to execute.
    #[arg(long, value_enum, default_value_t = OpKind::Join)]
    pub op: OpKind,
    /// Join type: inner, left, right or full-outer.
    #[arg(long, default_value = "inner")]
    pub join_type: JoinType,
    /// Local join algorithm: hash or sort.
    #[arg(long, default_value = "hash")]
    pub algorithm: JoinAlgorithm,
    /// Comma-separated key column indices of the left relation.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub left_keys: Vec<usize>,
    /// Key column indices of the right relation (defaults to the left keys).
    #[arg(long, value_delimiter = ',')]
    pub right_keys: Option<Vec<usize>>,
    /// Filter expression for `select`, e.g. `v1 < 0.5 and id != 3`.
    #[arg(long = "where", value_name = "EXPR")]
    pub predicate: Option<String>,
    /// Comma-separated column indices for `project`.
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<usize>>,
}

/// A validated operator description.
#[derive(Clone, Debug)]
pub struct OpSpec {
    pub kind: OpKind,
    pub join: JoinConfig,
    pub predicate: Option<String>,
    pub columns: Vec<usize>,
}

impl OpArgs {
    pub fn spec(&self) -> std::result::Result<OpSpec, UsageError> {
        let right_keys = self.right_keys.clone().unwrap_or_else(|| self.left_keys.clone());
        if self.left_keys.is_empty() || self.left_keys.len() != right_keys.len() {
            return Err(UsageError::new("--left-keys and --right-keys must be non-empty and of equal length"));
        }
        let join = JoinConfig::new(self.join_type, 0, 0)
            .with_algorithm(self.algorithm)
            .with_keys(self.left_keys.clone(), right_keys);
        let spec = OpSpec {
            kind: self.op,
            join,
            predicate: self.predicate.clone(),
            columns: self.columns.clone().unwrap_or_default(),
        };
        match spec.kind {
            OpKind::Select if spec.predicate.is_none() => Err(UsageError::new("select requires --where")),
            OpKind::Project if spec.columns.is_empty() => Err(UsageError::new("project requires --columns")),
            _ => Ok(spec),
        }
    }
}

impl OpSpec {
    pub fn needs_right(&self) -> bool {
        matches!(self.kind, OpKind::Join | OpKind::Union | OpKind::Intersect | OpKind::Difference)
    }

    fn predicate_for(&self, table: &Table) -> Result<Predicate> {
        let expr = self.predicate.as_deref().unwrap_or("true");
        Predicate::parse(expr, table.schema()).map_err(|e| UsageError::new(format!("bad --where expression: {e}")).into())
    }

    /// Parses the predicate against `table` so expression errors surface
    /// before any worker starts.
    pub fn check_against(&self, table: &Table) -> Result<()> {
        match self.kind {
            OpKind::Select => self.predicate_for(table).map(drop),
            OpKind::Project => match self.columns.iter().find(|&&c| c >= table.num_columns()) {
                Some(c) => Err(UsageError::new(format!("--columns index {c} out of range")).into()),
                None => Ok(()),
            },
            _ => Ok(()),
        }
    }

    /// Runs the distributed operator on this worker's partitions.
    pub fn run_distributed(&self, ctx: &WorkerContext, left: Table, right: Option<Table>) -> Result<Table> {
        let l = DistributedTable::new(ctx, left);
        let out = match self.kind {
            OpKind::Select => {
                let pred = self.predicate_for(l.local())?;
                l.select(&pred)?
            }
            OpKind::Project => l.project(&self.columns)?,
            kind => {
                let r = DistributedTable::new(ctx, right.context("operator needs a right input")?);
                match kind {
                    OpKind::Join => l.join(&r, &self.join)?,
                    OpKind::Union => l.union(&r)?,
                    OpKind::Intersect => l.intersect(&r)?,
                    OpKind::Difference => l.difference(&r)?,
                    _ => unreachable!(),
                }
            }
        };
        Ok(out.into_local())
    }

    /// Serial reference result. Joins use the nested-loop oracle unless the
    /// input product exceeds `nested_loop_limit`, in which case the grouped
    /// oracle is used.
    pub fn run_oracle(&self, left: &Table, right: Option<&Table>, nested_loop_limit: u64) -> Result<Table> {
        let right = || right.context("operator needs a right input");
        Ok(match self.kind {
            OpKind::Join => {
                let r = right()?;
                if (left.num_rows() as u64).saturating_mul(r.num_rows() as u64) <= nested_loop_limit {
                    oracle::nested_loop_join(left, r, &self.join)?
                } else {
                    oracle::grouped_join(left, r, &self.join)?
                }
            }
            OpKind::Union => oracle::set_union(left, right()?)?,
            OpKind::Intersect => oracle::set_intersect(left, right()?)?,
            OpKind::Difference => oracle::set_difference(left, right()?)?,
            OpKind::Select => oracle::row_loop_select(left, &self.predicate_for(left)?)?,
            OpKind::Project => oracle::row_loop_project(left, &self.columns)?,
        })
    }
}

/// Parses a comma-separated dtype list such as `int64,float64,utf8,bool`.
pub fn parse_dtypes(s: &str) -> std::result::Result<Vec<DType>, String> {
    s.split(',').map(|t| t.trim().parse::<DType>()).collect()
}

pub fn read_options(schema: Option<&Vec<DType>>) -> CsvReadOptions {
    let opts = CsvReadOptions::default();
    match schema {
        Some(s) => opts.with_schema(s.clone()),
        None => opts,
    }
}

pub fn ensure_world_size(world_size: usize) -> std::result::Result<(), UsageError> {
    if world_size == 0 {
        return Err(UsageError::new("--world-size must be at least 1"));
    }
    Ok(())
}

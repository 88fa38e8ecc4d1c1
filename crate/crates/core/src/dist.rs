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

//! Distributed operators.
//!
//! Joins and set operators shuffle both inputs (hash partition into
//! `world_size` parts, then one all-to-all each) so that equal keys land on
//! the same worker, and then run the local operator. Select and project are
//! purely local and never touch the network.

use crate::comm::WorkerContext;
use crate::error::{Error, Result};
use crate::ops::{self, JoinConfig, Predicate};
use crate::table::Table;

/// One worker's partition of a logical table.
#[derive(Clone)]
pub struct DistributedTable<'c> {
    ctx: &'c WorkerContext,
    local: Table,
}

/// Hash-partitions `table` on `keys` across all workers and exchanges the
/// partitions. Collective.
pub fn shuffle(ctx: &WorkerContext, table: &Table, keys: &[usize]) -> Result<Table> {
    let parts = ops::hash_partition(table, keys, ctx.world_size())?;
    ctx.all_to_all(parts)
}

impl<'c> DistributedTable<'c> {
    pub fn new(ctx: &'c WorkerContext, local: Table) -> Self {
        DistributedTable { ctx, local }
    }

    pub fn ctx(&self) -> &'c WorkerContext {
        self.ctx
    }

    pub fn local(&self) -> &Table {
        &self.local
    }

    pub fn into_local(self) -> Table {
        self.local
    }

    fn same_context(&self, other: &DistributedTable<'_>) -> Result<()> {
        if std::ptr::eq(self.ctx, other.ctx) {
            Ok(())
        } else {
            Err(Error::InvalidArgument("distributed operands live on different contexts".into()))
        }
    }

    fn wrap(&self, local: Table) -> DistributedTable<'c> {
        DistributedTable { ctx: self.ctx, local }
    }

    /// Shuffles both sides on their join keys, then joins locally with
    /// `cfg.algorithm`.
    pub fn join(&self, right: &DistributedTable<'_>, cfg: &JoinConfig) -> Result<DistributedTable<'c>> {
        self.same_context(right)?;
        cfg.validate(&self.local, &right.local)?;
        let l = shuffle(self.ctx, &self.local, &cfg.left_keys)?;
        let r = shuffle(self.ctx, &right.local, &cfg.right_keys)?;
        Ok(self.wrap(ops::join(&l, &r, cfg)?))
    }

    fn set_op(
        &self,
        other: &DistributedTable<'_>,
        local_op: fn(&Table, &Table) -> Result<Table>,
    ) -> Result<DistributedTable<'c>> {
        self.same_context(other)?;
        if !self.local.schema().same_types(other.local.schema()) {
            return Err(Error::SchemaMismatch(format!(
                "set operands have dtypes {:?} and {:?}",
                self.local.schema().dtypes(),
                other.local.schema().dtypes()
            )));
        }
        let all: Vec<usize> = (0..self.local.num_columns()).collect();
        let a = shuffle(self.ctx, &self.local, &all)?;
        let b = shuffle(self.ctx, &other.local, &all)?;
        Ok(self.wrap(local_op(&a, &b)?))
    }

    pub fn union(&self, other: &DistributedTable<'_>) -> Result<DistributedTable<'c>> {
        self.set_op(other, ops::union_distinct)
    }

    pub fn intersect(&self, other: &DistributedTable<'_>) -> Result<DistributedTable<'c>> {
        self.set_op(other, ops::intersect_distinct)
    }

    /// Symmetric difference.
    pub fn difference(&self, other: &DistributedTable<'_>) -> Result<DistributedTable<'c>> {
        self.set_op(other, ops::difference_distinct)
    }

    pub fn select(&self, pred: &Predicate) -> Result<DistributedTable<'c>> {
        Ok(self.wrap(ops::select(&self.local, pred)?))
    }

    pub fn project(&self, columns: &[usize]) -> Result<DistributedTable<'c>> {
        Ok(self.wrap(ops::project(&self.local, columns)?))
    }

    /// Collects all partitions on `root` in rank order.
    pub fn gather(&self, root: usize) -> Result<Option<Table>> {
        self.ctx.gather(&self.local, root)
    }
}

pub fn distributed_join<'c>(
    left: &DistributedTable<'c>,
    right: &DistributedTable<'_>,
    cfg: &JoinConfig,
) -> Result<DistributedTable<'c>> {
    left.join(right, cfg)
}

pub fn distributed_union<'c>(a: &DistributedTable<'c>, b: &DistributedTable<'_>) -> Result<DistributedTable<'c>> {
    a.union(b)
}

pub fn distributed_intersect<'c>(a: &DistributedTable<'c>, b: &DistributedTable<'_>) -> Result<DistributedTable<'c>> {
    a.intersect(b)
}

pub fn distributed_difference<'c>(a: &DistributedTable<'c>, b: &DistributedTable<'_>) -> Result<DistributedTable<'c>> {
    a.difference(b)
}

pub fn distributed_select<'c>(t: &DistributedTable<'c>, pred: &Predicate) -> Result<DistributedTable<'c>> {
    t.select(pred)
}

pub fn distributed_project<'c>(t: &DistributedTable<'c>, columns: &[usize]) -> Result<DistributedTable<'c>> {
    t.project(columns)
}

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

//! Local (single-partition) relational operators.
//!
//! Every operator is a pure function of immutable inputs.

mod join;
mod partition;
mod predicate;
mod setops;
mod sort;

use std::sync::Arc;

pub use join::{hash_join, join, sort_join, JoinAlgorithm, JoinConfig, JoinType};
pub use partition::hash_partition;
pub use predicate::{CmpOp, Predicate, RowFn};
pub use setops::{difference_distinct, distinct, intersect_distinct, union_distinct};
pub use sort::{compare_rows, merge_sorted, sort_by_keys, sort_indices};

use crate::error::{Error, Result};
use crate::table::{take_unchecked, Field, Schema, Table};

/// Rows for which `pred` is true, in input order.
pub fn select(table: &Table, pred: &Predicate) -> Result<Table> {
    pred.validate(table.schema())?;
    match pred {
        Predicate::Const(true) => return Ok(table.clone()),
        Predicate::Const(false) => return Ok(take_unchecked(table, &[])),
        _ => {}
    }
    let mut keep = Vec::new();
    for row in table.rows() {
        if pred.evaluate(&row)? {
            keep.push(row.index());
        }
    }
    if keep.len() == table.num_rows() {
        return Ok(table.clone());
    }
    Ok(take_unchecked(table, &keep))
}

/// Selected columns in the given order. Duplicates are allowed; column
/// buffers are shared with the input.
pub fn project(table: &Table, columns: &[usize]) -> Result<Table> {
    if columns.is_empty() {
        return Err(Error::InvalidArgument("projection needs at least one column".into()));
    }
    table.check_columns(columns)?;
    let fields: Vec<Field> = columns.iter().map(|&c| table.schema().field(c).clone()).collect();
    let cols = columns.iter().map(|&c| Arc::clone(table.column_arc(c))).collect();
    Table::from_arcs(Arc::new(Schema::new(fields)), cols)
}

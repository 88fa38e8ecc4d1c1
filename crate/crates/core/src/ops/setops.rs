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

//! Distinct set operators over whole rows.
//!
//! Rows are identified by their full-row canonical encoding, so nulls compare
//! equal to nulls here (unlike join keys). `difference_distinct` is the
//! symmetric difference, not SQL `EXCEPT`. Each output keeps the first
//! occurrence of every row, `a` before `b`, and takes its column names from
//! `a`.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::table::{concat, take_unchecked, RowEncoder, Table};

fn check_schemas(a: &Table, b: &Table) -> Result<()> {
    if a.schema().same_types(b.schema()) {
        Ok(())
    } else {
        Err(Error::SchemaMismatch(format!(
            "set operands have dtypes {:?} and {:?}",
            a.schema().dtypes(),
            b.schema().dtypes()
        )))
    }
}

fn all_columns(t: &Table) -> Vec<usize> {
    (0..t.num_columns()).collect()
}

fn key_set(t: &Table) -> HashSet<Vec<u8>> {
    let cols = all_columns(t);
    let mut enc = RowEncoder::new();
    (0..t.num_rows()).map(|r| enc.encode(t, r, &cols).to_vec()).collect()
}

/// Indices of the first occurrence of each distinct row of `t` that passes
/// `keep`, recording every emitted key in `seen`.
fn first_occurrences(
    t: &Table,
    seen: &mut HashSet<Vec<u8>>,
    keep: impl Fn(&[u8]) -> bool,
) -> Vec<usize> {
    let cols = all_columns(t);
    let mut enc = RowEncoder::new();
    let mut out = Vec::new();
    for r in 0..t.num_rows() {
        let key = enc.encode(t, r, &cols);
        if keep(key) && !seen.contains(key) {
            seen.insert(key.to_vec());
            out.push(r);
        }
    }
    out
}

fn combine(a: &Table, a_rows: &[usize], b: &Table, b_rows: &[usize]) -> Result<Table> {
    let names: Vec<&str> = a.schema().fields().iter().map(|f| f.name.as_str()).collect();
    let b_part = take_unchecked(b, b_rows).with_names(&names)?;
    concat(&[take_unchecked(a, a_rows), b_part])
}

/// One row per distinct row of `t`.
pub fn distinct(t: &Table) -> Table {
    let rows = first_occurrences(t, &mut HashSet::new(), |_| true);
    take_unchecked(t, &rows)
}

/// One row per distinct row present in `a` or `b`.
pub fn union_distinct(a: &Table, b: &Table) -> Result<Table> {
    check_schemas(a, b)?;
    let mut seen = HashSet::new();
    let a_rows = first_occurrences(a, &mut seen, |_| true);
    let b_rows = first_occurrences(b, &mut seen, |_| true);
    combine(a, &a_rows, b, &b_rows)
}

/// One row per distinct row present in both `a` and `b`.
pub fn intersect_distinct(a: &Table, b: &Table) -> Result<Table> {
    check_schemas(a, b)?;
    let in_b = key_set(b);
    let a_rows = first_occurrences(a, &mut HashSet::new(), |k| in_b.contains(k));
    Ok(take_unchecked(a, &a_rows))
}

/// One row per distinct row present in exactly one of `a` and `b`.
pub fn difference_distinct(a: &Table, b: &Table) -> Result<Table> {
    check_schemas(a, b)?;
    let in_a = key_set(a);
    let in_b = key_set(b);
    let mut seen = HashSet::new();
    let a_rows = first_occurrences(a, &mut seen, |k| !in_b.contains(k));
    let b_rows = first_occurrences(b, &mut seen, |k| !in_a.contains(k));
    combine(a, &a_rows, b, &b_rows)
}

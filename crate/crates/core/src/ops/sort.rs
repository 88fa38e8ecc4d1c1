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

//! Canonical key ordering, stable sort and k-way merge.
//!
//! Ordering: null first; Int64 and Float64 numerically (NaN greatest,
//! `-0.0 == +0.0`); `false < true`; Utf8 byte-lexicographically.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::table::{canonical_f64_bits, cmp_f64, take_unchecked, Column, ColumnData, ColumnBuilder, Table};

#[inline]
fn compare_cells(a: &Column, i: usize, b: &Column, j: usize) -> Ordering {
    match (a.is_valid(i), b.is_valid(j)) {
        (false, false) => return Ordering::Equal,
        (false, true) => return Ordering::Less,
        (true, false) => return Ordering::Greater,
        (true, true) => {}
    }
    match (a.data(), b.data()) {
        (ColumnData::Int64(x), ColumnData::Int64(y)) => x[i].cmp(&y[j]),
        (ColumnData::Float64(x), ColumnData::Float64(y)) => cmp_f64(x[i], y[j]),
        (ColumnData::Bool(x), ColumnData::Bool(y)) => x[i].cmp(&y[j]),
        (ColumnData::Utf8 { .. }, ColumnData::Utf8 { .. }) => {
            a.str_at(i).as_bytes().cmp(b.str_at(j).as_bytes())
        }
        _ => a.dtype().tag().cmp(&b.dtype().tag()),
    }
}

/// Lexicographic comparison of two rows over paired key columns.
#[inline]
pub fn compare_rows(
    left: &Table,
    left_row: usize,
    left_keys: &[usize],
    right: &Table,
    right_row: usize,
    right_keys: &[usize],
) -> Ordering {
    for (&lk, &rk) in left_keys.iter().zip(right_keys) {
        let ord = compare_cells(left.column(lk), left_row, right.column(rk), right_row);
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}

/// Row indices in stable sorted order.
pub fn sort_indices(table: &Table, keys: &[usize]) -> Result<Vec<usize>> {
    table.check_columns(keys)?;
    if let [k] = keys {
        if let Some(ordered) = ordered_keys(table.column(*k)) {
            return Ok(sort_single_key(table.column(*k), ordered));
        }
    }
    let mut idx: Vec<usize> = (0..table.num_rows()).collect();
    idx.sort_by(|&a, &b| compare_rows(table, a, keys, table, b, keys));
    Ok(idx)
}

/// Maps a numeric column to integers whose unsigned order is the canonical
/// order of the values; `None` for Utf8.
fn ordered_keys(col: &Column) -> Option<Vec<u64>> {
    match col.data() {
        ColumnData::Int64(v) => Some(v.iter().map(|&x| (x as u64) ^ (1 << 63)).collect()),
        ColumnData::Float64(v) => Some(
            v.iter()
                .map(|&x| {
                    let b = canonical_f64_bits(x);
                    if b >> 63 == 1 {
                        !b
                    } else {
                        b | 1 << 63
                    }
                })
                .collect(),
        ),
        ColumnData::Bool(v) => Some(v.iter().map(|&x| u64::from(x)).collect()),
        ColumnData::Utf8 { .. } => None,
    }
}

/// Nulls first in row order, then valid rows by key; the row index breaks
/// ties, which keeps the result stable.
fn sort_single_key(col: &Column, ordered: Vec<u64>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..col.len()).filter(|&i| !col.is_valid(i)).collect();
    let mut pairs: Vec<(u64, usize)> = ordered
        .into_iter()
        .enumerate()
        .filter(|&(i, _)| col.is_valid(i))
        .map(|(i, k)| (k, i))
        .collect();
    pairs.sort_unstable();
    idx.extend(pairs.into_iter().map(|(_, i)| i));
    idx
}

pub fn sort_by_keys(table: &Table, keys: &[usize]) -> Result<Table> {
    let idx = sort_indices(table, keys)?;
    Ok(take_unchecked(table, &idx))
}

fn is_sorted(table: &Table, keys: &[usize]) -> bool {
    (1..table.num_rows()).all(|i| compare_rows(table, i - 1, keys, table, i, keys) != Ordering::Greater)
}

/// Stable k-way merge of individually sorted tables. Equal keys are ordered by
/// input position, then by original row order.
pub fn merge_sorted(tables: &[Table], keys: &[usize]) -> Result<Table> {
    let first = tables
        .first()
        .ok_or_else(|| Error::InvalidArgument("merge of zero tables".into()))?;
    for (i, t) in tables.iter().enumerate() {
        if !first.schema().same_types(t.schema()) {
            return Err(Error::SchemaMismatch(format!("merge input {i} has a different schema")));
        }
        t.check_columns(keys)?;
        if !is_sorted(t, keys) {
            return Err(Error::InvalidArgument(format!("merge input {i} is not sorted")));
        }
    }
    if tables.len() == 1 {
        return Ok(first.clone());
    }

    let total: usize = tables.iter().map(Table::num_rows).sum();
    let mut order: Vec<(usize, usize)> = Vec::with_capacity(total);
    let mut heads = vec![0usize; tables.len()];
    loop {
        let mut best: Option<usize> = None;
        for (t, &h) in heads.iter().enumerate() {
            if h >= tables[t].num_rows() {
                continue;
            }
            best = match best {
                Some(b)
                    if compare_rows(&tables[b], heads[b], keys, &tables[t], h, keys)
                        != Ordering::Greater =>
                {
                    Some(b)
                }
                _ => Some(t),
            };
        }
        let Some(b) = best else { break };
        order.push((b, heads[b]));
        heads[b] += 1;
    }

    let columns = (0..first.num_columns())
        .map(|c| {
            let mut builder = ColumnBuilder::with_capacity(first.schema().field(c).dtype, total);
            for &(t, r) in &order {
                builder.push_from(tables[t].column(c), r);
            }
            builder.finish()
        })
        .collect();
    Table::try_new(first.schema().clone(), columns)
}

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

//! Slow reference implementations for checking operator results.
//!
//! These work cell by cell on [`Value`]s and ordered collections, sharing no
//! code path with the optimized operators beyond table construction. Output
//! multisets are compared via [`canonical_rows`].

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::ops::{JoinConfig, JoinType, Predicate};
use crate::table::{canonical_f64_bits, encode_row, ColumnBuilder, Field, Schema, Table, Value};

/// Owned, totally ordered cell used as a key by the oracles.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CellKey {
    Null,
    Int(i64),
    Float(u64),
    Str(String),
    Bool(bool),
}

impl From<Value<'_>> for CellKey {
    fn from(v: Value<'_>) -> Self {
        match v {
            Value::Null => CellKey::Null,
            Value::Int64(x) => CellKey::Int(x),
            Value::Float64(x) => CellKey::Float(canonical_f64_bits(x)),
            Value::Utf8(s) => CellKey::Str(s.to_owned()),
            Value::Bool(b) => CellKey::Bool(b),
        }
    }
}

pub fn row_cells(t: &Table, row: usize, cols: &[usize]) -> Vec<CellKey> {
    cols.iter().map(|&c| t.column(c).value(row).into()).collect()
}

fn all_cols(t: &Table) -> Vec<usize> {
    (0..t.num_columns()).collect()
}

/// Builds a table from per-row cell sources: `(table, Some(row))` copies a
/// row, `(table, None)` emits nulls for that table's columns.
fn build(schema: Schema, parts: &[&Table], rows: &[Vec<Option<usize>>]) -> Result<Table> {
    let mut builders: Vec<ColumnBuilder> = schema
        .fields()
        .iter()
        .map(|f| ColumnBuilder::with_capacity(f.dtype, rows.len()))
        .collect();
    for row in rows {
        let mut c = 0;
        for (t, src) in parts.iter().zip(row) {
            for col in 0..t.num_columns() {
                match src {
                    Some(r) => builders[c].push_value(t.column(col).value(*r)),
                    None => builders[c].push_null(),
                }
                c += 1;
            }
        }
    }
    Table::try_new(schema, builders.into_iter().map(ColumnBuilder::finish).collect())
}

fn joined_schema(left: &Table, right: &Table) -> Schema {
    Schema::new(
        left.schema()
            .fields()
            .iter()
            .chain(right.schema().fields())
            .cloned()
            .collect::<Vec<Field>>(),
    )
}

fn key_matches(left: &Table, l: usize, right: &Table, r: usize, cfg: &JoinConfig) -> bool {
    cfg.left_keys.iter().zip(&cfg.right_keys).all(|(&lk, &rk)| {
        let (a, b) = (left.column(lk).value(l), right.column(rk).value(r));
        !a.is_null() && !b.is_null() && a == b
    })
}

fn check_join(left: &Table, right: &Table, cfg: &JoinConfig) -> Result<()> {
    if cfg.left_keys.is_empty() || cfg.left_keys.len() != cfg.right_keys.len() {
        return Err(Error::InvalidArgument("bad join keys".into()));
    }
    for (&l, &r) in cfg.left_keys.iter().zip(&cfg.right_keys) {
        if l >= left.num_columns() || r >= right.num_columns() {
            return Err(Error::InvalidArgument("join key out of range".into()));
        }
    }
    Ok(())
}

fn finish_join(
    left: &Table,
    right: &Table,
    cfg: &JoinConfig,
    mut pairs: Vec<Vec<Option<usize>>>,
    left_matched: &[bool],
    right_matched: &[bool],
) -> Result<Table> {
    if matches!(cfg.join_type, JoinType::Left | JoinType::FullOuter) {
        for (l, _) in left_matched.iter().enumerate().filter(|(_, m)| !**m) {
            pairs.push(vec![Some(l), None]);
        }
    }
    if matches!(cfg.join_type, JoinType::Right | JoinType::FullOuter) {
        for (r, _) in right_matched.iter().enumerate().filter(|(_, m)| !**m) {
            pairs.push(vec![None, Some(r)]);
        }
    }
    build(joined_schema(left, right), &[left, right], &pairs)
}

/// O(|L|·|R|) join over every row pair.
pub fn nested_loop_join(left: &Table, right: &Table, cfg: &JoinConfig) -> Result<Table> {
    check_join(left, right, cfg)?;
    let mut pairs = Vec::new();
    let mut left_matched = vec![false; left.num_rows()];
    let mut right_matched = vec![false; right.num_rows()];
    for l in 0..left.num_rows() {
        for r in 0..right.num_rows() {
            if key_matches(left, l, right, r, cfg) {
                pairs.push(vec![Some(l), Some(r)]);
                left_matched[l] = true;
                right_matched[r] = true;
            }
        }
    }
    finish_join(left, right, cfg, pairs, &left_matched, &right_matched)
}

/// Join via an ordered map from right keys to rows; same semantics as
/// [`nested_loop_join`] but usable on larger inputs.
pub fn grouped_join(left: &Table, right: &Table, cfg: &JoinConfig) -> Result<Table> {
    check_join(left, right, cfg)?;
    let mut groups: BTreeMap<Vec<CellKey>, Vec<usize>> = BTreeMap::new();
    for r in 0..right.num_rows() {
        let key = row_cells(right, r, &cfg.right_keys);
        if !key.contains(&CellKey::Null) {
            groups.entry(key).or_default().push(r);
        }
    }
    let mut pairs = Vec::new();
    let mut left_matched = vec![false; left.num_rows()];
    let mut right_matched = vec![false; right.num_rows()];
    for l in 0..left.num_rows() {
        let key = row_cells(left, l, &cfg.left_keys);
        if let Some(rs) = groups.get(&key) {
            for &r in rs {
                pairs.push(vec![Some(l), Some(r)]);
                right_matched[r] = true;
            }
            left_matched[l] = true;
        }
    }
    finish_join(left, right, cfg, pairs, &left_matched, &right_matched)
}

/// Join count identity for inner joins: the sum over distinct non-null keys
/// of `count_left(k) * count_right(k)`.
pub fn inner_join_count(left: &Table, right: &Table, cfg: &JoinConfig) -> u64 {
    let count = |t: &Table, keys: &[usize]| {
        let mut m: BTreeMap<Vec<CellKey>, u64> = BTreeMap::new();
        for r in 0..t.num_rows() {
            let k = row_cells(t, r, keys);
            if !k.contains(&CellKey::Null) {
                *m.entry(k).or_default() += 1;
            }
        }
        m
    };
    let lc = count(left, &cfg.left_keys);
    let rc = count(right, &cfg.right_keys);
    lc.iter().map(|(k, n)| n * rc.get(k).copied().unwrap_or(0)).sum()
}

fn distinct_rows(t: &Table) -> (BTreeSet<Vec<CellKey>>, Vec<usize>) {
    let cols = all_cols(t);
    let mut seen = BTreeSet::new();
    let mut order = Vec::new();
    for r in 0..t.num_rows() {
        if seen.insert(row_cells(t, r, &cols)) {
            order.push(r);
        }
    }
    (seen, order)
}

fn set_result(a: &Table, b: &Table, keep_a: Vec<usize>, keep_b: Vec<usize>) -> Result<Table> {
    if !a.schema().same_types(b.schema()) {
        return Err(Error::SchemaMismatch("set oracle operands differ".into()));
    }
    let rows: Vec<Vec<Option<usize>>> = keep_a
        .into_iter()
        .map(|r| vec![Some(r), None])
        .chain(keep_b.into_iter().map(|r| vec![None, Some(r)]))
        .collect();
    // Each output row takes cells from exactly one operand; merge the two
    // halves column by column.
    let mut builders: Vec<ColumnBuilder> = a
        .schema()
        .fields()
        .iter()
        .map(|f| ColumnBuilder::with_capacity(f.dtype, rows.len()))
        .collect();
    for row in &rows {
        let (t, r) = match (row[0], row[1]) {
            (Some(r), _) => (a, r),
            (None, Some(r)) => (b, r),
            _ => unreachable!(),
        };
        for (c, builder) in builders.iter_mut().enumerate() {
            builder.push_value(t.column(c).value(r));
        }
    }
    Table::try_new(a.schema().clone(), builders.into_iter().map(ColumnBuilder::finish).collect())
}

pub fn set_union(a: &Table, b: &Table) -> Result<Table> {
    let (seen_a, keep_a) = distinct_rows(a);
    let (_, distinct_b) = distinct_rows(b);
    let cols = all_cols(b);
    let keep_b = distinct_b
        .into_iter()
        .filter(|&r| !seen_a.contains(&row_cells(b, r, &cols)))
        .collect();
    set_result(a, b, keep_a, keep_b)
}

pub fn set_intersect(a: &Table, b: &Table) -> Result<Table> {
    let (_, distinct_a) = distinct_rows(a);
    let (seen_b, _) = distinct_rows(b);
    let cols = all_cols(a);
    let keep_a = distinct_a
        .into_iter()
        .filter(|&r| seen_b.contains(&row_cells(a, r, &cols)))
        .collect();
    set_result(a, b, keep_a, Vec::new())
}

/// Symmetric difference of the distinct rows.
pub fn set_difference(a: &Table, b: &Table) -> Result<Table> {
    let (seen_a, distinct_a) = distinct_rows(a);
    let (seen_b, distinct_b) = distinct_rows(b);
    let cols = all_cols(a);
    let keep_a = distinct_a
        .into_iter()
        .filter(|&r| !seen_b.contains(&row_cells(a, r, &cols)))
        .collect();
    let keep_b = distinct_b
        .into_iter()
        .filter(|&r| !seen_a.contains(&row_cells(b, r, &cols)))
        .collect();
    set_result(a, b, keep_a, keep_b)
}

pub fn row_loop_select(t: &Table, pred: &Predicate) -> Result<Table> {
    let mut rows = Vec::new();
    for row in t.rows() {
        if pred.evaluate(&row)? {
            rows.push(vec![Some(row.index())]);
        }
    }
    build(t.schema().clone(), &[t], &rows)
}

pub fn row_loop_project(t: &Table, cols: &[usize]) -> Result<Table> {
    if cols.is_empty() || cols.iter().any(|&c| c >= t.num_columns()) {
        return Err(Error::InvalidArgument("bad projection".into()));
    }
    let schema = Schema::new(cols.iter().map(|&c| t.schema().field(c).clone()).collect());
    let mut builders: Vec<ColumnBuilder> = schema
        .fields()
        .iter()
        .map(|f| ColumnBuilder::with_capacity(f.dtype, t.num_rows()))
        .collect();
    for row in t.rows() {
        for (b, &c) in builders.iter_mut().zip(cols) {
            b.push_value(row.get(c));
        }
    }
    Table::try_new(schema, builders.into_iter().map(ColumnBuilder::finish).collect())
}

/// Sorted full-row encodings: two tables hold the same row multiset iff their
/// canonical rows are equal.
pub fn canonical_rows(t: &Table) -> Vec<Vec<u8>> {
    let cols = all_cols(t);
    let mut rows: Vec<Vec<u8>> = (0..t.num_rows())
        .map(|r| encode_row(t, r, &cols).expect("in range").into_bytes())
        .collect();
    rows.sort_unstable();
    rows
}

pub fn same_multiset(a: &Table, b: &Table) -> bool {
    a.schema().same_types(b.schema()) && canonical_rows(a) == canonical_rows(b)
}

/// Index of the first differing canonical row, if any, together with a
/// description of the two rows.
pub fn first_difference(expected: &Table, actual: &Table) -> Option<(usize, String)> {
    let describe = |t: &Table, key: Option<&Vec<u8>>| -> String {
        let Some(key) = key else { return "<missing>".into() };
        let cols = all_cols(t);
        (0..t.num_rows())
            .find(|&r| encode_row(t, r, &cols).map(|k| k.as_bytes() == key.as_slice()).unwrap_or(false))
            .map(|r| t.row(r).to_string())
            .unwrap_or_default()
    };
    let e = canonical_rows(expected);
    let a = canonical_rows(actual);
    let i = (0..e.len().max(a.len())).find(|&i| e.get(i) != a.get(i))?;
    Some((
        i,
        format!(
            "expected {} but found {}",
            describe(expected, e.get(i)),
            describe(actual, a.get(i))
        ),
    ))
}

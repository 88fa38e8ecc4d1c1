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

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tessera::table::{Column, ColumnBuilder, DType, Field, Schema, Table, Value};

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

const FLOATS: [f64; 7] = [0.0, -0.0, 1.5, -2.25, f64::NAN, f64::INFINITY, 1e-300];
const STRINGS: [&str; 7] = ["", "a", "b", "ab", "a\0b", "é", "x,y\"z"];

pub const ALL_DTYPES: [DType; 4] = [DType::Int64, DType::Float64, DType::Utf8, DType::Bool];

/// Random cell of `dtype` from a small domain so that duplicates are common.
pub fn push_random(b: &mut ColumnBuilder, rng: &mut TestRng, null_p: f64, domain: i64) {
    if rng.gen_bool(null_p) {
        b.push_null();
        return;
    }
    match b.dtype() {
        DType::Int64 => b.push_i64(rng.gen_range(0..domain)),
        DType::Float64 => b.push_f64(*FLOATS[..(domain as usize).clamp(1, FLOATS.len())].choose(rng).unwrap()),
        DType::Utf8 => b.push_str(STRINGS[..(domain as usize).clamp(1, STRINGS.len())].choose(rng).unwrap()),
        DType::Bool => b.push_bool(rng.gen()),
    }
}

pub fn random_table_with(schema: &Schema, rows: usize, rng: &mut TestRng, null_p: f64, domain: i64) -> Table {
    let mut builders: Vec<ColumnBuilder> = schema
        .fields()
        .iter()
        .map(|f| ColumnBuilder::with_capacity(f.dtype, rows))
        .collect();
    for _ in 0..rows {
        for b in builders.iter_mut() {
            push_random(b, rng, null_p, domain);
        }
    }
    Table::try_new(schema.clone(), builders.into_iter().map(ColumnBuilder::finish).collect()).unwrap()
}

pub fn random_schema(rng: &mut TestRng, max_cols: usize) -> Schema {
    let n = rng.gen_range(1..=max_cols);
    Schema::new(
        (0..n)
            .map(|i| Field::new(format!("f{i}"), *ALL_DTYPES.choose(rng).unwrap()))
            .collect(),
    )
}

/// Random table with a random schema, 0..=max_rows rows and varied null
/// density (including all-null columns).
pub fn random_table(rng: &mut TestRng, max_rows: usize) -> Table {
    let schema = random_schema(rng, 5);
    let rows = rng.gen_range(0..=max_rows);
    let null_p = *[0.0, 0.1, 0.5, 1.0].choose(rng).unwrap();
    random_table_with(&schema, rows, rng, null_p, 7)
}

/// Join input: key column(s) first, then payload columns. Keys are Int64
/// over `[0, key_card)`, ~10% null.
pub fn join_input(rng: &mut TestRng, rows: usize, key_card: i64, payload: &[DType]) -> Table {
    let mut key = ColumnBuilder::with_capacity(DType::Int64, rows);
    for _ in 0..rows {
        if rng.gen_bool(0.1) {
            key.push_null();
        } else {
            key.push_i64(rng.gen_range(0..key_card));
        }
    }
    let mut cols = vec![("k".to_string(), key.finish())];
    for (i, &dt) in payload.iter().enumerate() {
        let mut b = ColumnBuilder::with_capacity(dt, rows);
        for _ in 0..rows {
            push_random(&mut b, rng, 0.2, 1000);
        }
        cols.push((format!("p{i}"), b.finish()));
    }
    Table::from_columns(cols).unwrap()
}

/// Oracle equality of two rows: cell by cell, null == null, NaN == NaN,
/// -0.0 == +0.0.
pub fn rows_equal_oracle(a: &Table, ai: usize, b: &Table, bi: usize) -> bool {
    (0..a.num_columns()).all(|c| {
        match (a.column(c).value(ai), b.column(c).value(bi)) {
            (Value::Null, Value::Null) => true,
            (Value::Int64(x), Value::Int64(y)) => x == y,
            (Value::Float64(x), Value::Float64(y)) => (x.is_nan() && y.is_nan()) || x == y,
            (Value::Utf8(x), Value::Utf8(y)) => x == y,
            (Value::Bool(x), Value::Bool(y)) => x == y,
            _ => false,
        }
    })
}

pub fn int_column(values: &[i64]) -> Column {
    Column::from_i64(values.to_vec())
}

/// Sorted rows as oracle cells; equal iff the tables hold the same multiset
/// of rows under engine equality.
pub fn cell_multiset(t: &Table) -> Vec<Vec<tessera::oracle::CellKey>> {
    let cols: Vec<usize> = (0..t.num_columns()).collect();
    let mut rows: Vec<_> = (0..t.num_rows()).map(|r| tessera::oracle::row_cells(t, r, &cols)).collect();
    rows.sort();
    rows
}

pub fn assert_same_rows(expected: &Table, actual: &Table, ctx: &str) {
    assert_eq!(expected.schema().dtypes(), actual.schema().dtypes(), "{ctx}: schema");
    assert_eq!(expected.num_rows(), actual.num_rows(), "{ctx}: row count");
    assert!(cell_multiset(expected) == cell_multiset(actual), "{ctx}: row multiset differs");
}

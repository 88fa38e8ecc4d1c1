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

//! Deterministic synthetic tables for tests and benchmarks.
//!
//! Values come from a single splitmix64 stream seeded with `seed`, drawn in
//! row-major order (row 0 column 0, row 0 column 1, ...), one draw per cell:
//!
//! * Int64: `floor(x * k / 2^64)`, uniform over `[0, k)` where `k` is the key
//!   cardinality (default: the row count).
//! * Float64: `(x >> 11) * 2^-53`, uniform over `[0, 1)`.
//! * Bool: the top bit of `x`.
//! * Utf8: `"k"` followed by an Int64-style draw over `[0, k)`.
//!
//! The output depends only on the `GenerateSpec`, so it is identical across
//! platforms.

use crate::error::{Error, Result};
use crate::table::{Column, ColumnBuilder, DType, Field, Schema, Table};

/// splitmix64 (Steele, Lea and Flood), constants as in the public reference
/// implementation.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    #[inline]
    pub fn below(&mut self, bound: u64) -> u64 {
        ((u128::from(self.next_u64()) * u128::from(bound)) >> 64) as u64
    }

    #[inline]
    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

#[derive(Clone, Debug)]
pub struct GenerateSpec {
    pub num_rows: usize,
    pub schema: Schema,
    pub seed: u64,
    pub key_cardinality: Option<u64>,
}

/// One Int64 index column followed by three Float64 columns.
pub fn experiment_schema() -> Schema {
    Schema::new(vec![
        Field::new("id", DType::Int64),
        Field::new("v1", DType::Float64),
        Field::new("v2", DType::Float64),
        Field::new("v3", DType::Float64),
    ])
}

impl GenerateSpec {
    /// The benchmark layout: `id` in `[0, key_cardinality)` plus three uniform
    /// doubles.
    pub fn experiment(num_rows: usize, seed: u64) -> Self {
        GenerateSpec {
            num_rows,
            schema: experiment_schema(),
            seed,
            key_cardinality: None,
        }
    }

    pub fn with_key_cardinality(mut self, k: u64) -> Self {
        self.key_cardinality = Some(k);
        self
    }
}

pub fn generate_table(spec: &GenerateSpec) -> Result<Table> {
    if spec.schema.is_empty() {
        return Err(Error::InvalidArgument("generator schema is empty".into()));
    }
    let k = match spec.key_cardinality {
        Some(0) => return Err(Error::InvalidArgument("key_cardinality must be positive".into())),
        Some(k) => k,
        None => (spec.num_rows as u64).max(1),
    };
    let mut rng = SplitMix64::new(spec.seed);
    let mut builders: Vec<ColumnBuilder> = spec
        .schema
        .fields()
        .iter()
        .map(|f| ColumnBuilder::with_capacity(f.dtype, spec.num_rows))
        .collect();
    let mut text = String::new();
    for _ in 0..spec.num_rows {
        for b in builders.iter_mut() {
            match b.dtype() {
                DType::Int64 => b.push_i64(rng.below(k) as i64),
                DType::Float64 => b.push_f64(rng.unit_f64()),
                DType::Bool => b.push_bool(rng.next_u64() >> 63 == 1),
                DType::Utf8 => {
                    use std::fmt::Write as _;
                    text.clear();
                    let _ = write!(text, "k{}", rng.below(k));
                    b.push_str(&text);
                }
            }
        }
    }
    let columns: Vec<Column> = builders.into_iter().map(ColumnBuilder::finish).collect();
    Table::try_new(spec.schema.clone(), columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comm::serialize_table;
    use crate::table::Value;

    #[test]
    fn splitmix_reference_values() {
        // First outputs for seed 1234567 from the reference C implementation.
        let mut r = SplitMix64::new(1234567);
        let got: Vec<u64> = (0..3).map(|_| r.next_u64()).collect();
        assert_eq!(got, vec![6457827717110365317, 3203168211198807973, 9817491932198370423]);
    }

    #[test]
    fn empty_and_deterministic() {
        let t = generate_table(&GenerateSpec::experiment(0, 1)).unwrap();
        assert_eq!(t.num_rows(), 0);
        assert_eq!(t.schema(), &experiment_schema());
        let a = generate_table(&GenerateSpec::experiment(100, 9)).unwrap();
        let b = generate_table(&GenerateSpec::experiment(100, 9)).unwrap();
        assert_eq!(serialize_table(&a), serialize_table(&b));
        let c = generate_table(&GenerateSpec::experiment(100, 10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn ranges() {
        let t = generate_table(&GenerateSpec::experiment(1000, 3).with_key_cardinality(7)).unwrap();
        for r in t.rows() {
            assert!(matches!(r.get(0), Value::Int64(k) if (0..7).contains(&k)));
            for c in 1..4 {
                assert!(matches!(r.get(c), Value::Float64(x) if (0.0..1.0).contains(&x)));
            }
        }
    }

    #[test]
    fn invalid_specs() {
        let mut spec = GenerateSpec::experiment(10, 1).with_key_cardinality(0);
        assert!(generate_table(&spec).is_err());
        spec.key_cardinality = None;
        spec.schema = Schema::new(vec![]);
        assert!(generate_table(&spec).is_err());
    }
}

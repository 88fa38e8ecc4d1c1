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

//! Hash and sort joins for the four join types.
//!
//! Rows whose key contains a null never match anything, but still appear as
//! padded rows in outer joins. The output schema is the left fields followed
//! by the right fields. Output row order is not part of the contract.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::sort::{compare_rows, sort_indices};
use crate::error::{Error, Result};
use crate::table::{hash_rows, take_optional, Schema, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum JoinType {
    Inner,
    Left,
    Right,
    FullOuter,
}

impl JoinType {
    pub const ALL: [JoinType; 4] = [JoinType::Inner, JoinType::Left, JoinType::Right, JoinType::FullOuter];

    fn keeps_left(self) -> bool {
        matches!(self, JoinType::Left | JoinType::FullOuter)
    }

    fn keeps_right(self) -> bool {
        matches!(self, JoinType::Right | JoinType::FullOuter)
    }
}

impl fmt::Display for JoinType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JoinType::Inner => "inner",
            JoinType::Left => "left",
            JoinType::Right => "right",
            JoinType::FullOuter => "full-outer",
        })
    }
}

impl FromStr for JoinType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "inner" => Ok(JoinType::Inner),
            "left" => Ok(JoinType::Left),
            "right" => Ok(JoinType::Right),
            "full" | "outer" | "full-outer" | "fullouter" => Ok(JoinType::FullOuter),
            other => Err(format!("unknown join type '{other}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum JoinAlgorithm {
    Hash,
    Sort,
}

impl fmt::Display for JoinAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JoinAlgorithm::Hash => "hash",
            JoinAlgorithm::Sort => "sort",
        })
    }
}

impl FromStr for JoinAlgorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hash" => Ok(JoinAlgorithm::Hash),
            "sort" => Ok(JoinAlgorithm::Sort),
            other => Err(format!("unknown join algorithm '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JoinConfig {
    pub join_type: JoinType,
    pub algorithm: JoinAlgorithm,
    pub left_keys: Vec<usize>,
    pub right_keys: Vec<usize>,
}

impl JoinConfig {
    pub fn new(join_type: JoinType, left_key: usize, right_key: usize) -> Self {
        JoinConfig {
            join_type,
            algorithm: JoinAlgorithm::Hash,
            left_keys: vec![left_key],
            right_keys: vec![right_key],
        }
    }

    pub fn inner(left_key: usize, right_key: usize) -> Self {
        Self::new(JoinType::Inner, left_key, right_key)
    }

    pub fn left(left_key: usize, right_key: usize) -> Self {
        Self::new(JoinType::Left, left_key, right_key)
    }

    pub fn right(left_key: usize, right_key: usize) -> Self {
        Self::new(JoinType::Right, left_key, right_key)
    }

    pub fn full_outer(left_key: usize, right_key: usize) -> Self {
        Self::new(JoinType::FullOuter, left_key, right_key)
    }

    pub fn with_algorithm(mut self, algorithm: JoinAlgorithm) -> Self {
        self.algorithm = algorithm;
        self
    }

    pub fn with_keys(mut self, left_keys: Vec<usize>, right_keys: Vec<usize>) -> Self {
        self.left_keys = left_keys;
        self.right_keys = right_keys;
        self
    }

    pub(crate) fn validate(&self, left: &Table, right: &Table) -> Result<()> {
        if self.left_keys.is_empty() || self.left_keys.len() != self.right_keys.len() {
            return Err(Error::InvalidArgument(format!(
                "join needs equal-length non-empty key lists, got {} and {}",
                self.left_keys.len(),
                self.right_keys.len()
            )));
        }
        left.check_columns(&self.left_keys)?;
        right.check_columns(&self.right_keys)?;
        for (&l, &r) in self.left_keys.iter().zip(&self.right_keys) {
            let (lt, rt) = (left.schema().field(l).dtype, right.schema().field(r).dtype);
            if lt != rt {
                return Err(Error::SchemaMismatch(format!(
                    "join key dtypes differ: left column {l} is {lt}, right column {r} is {rt}"
                )));
            }
        }
        Ok(())
    }
}

/// Joins with the algorithm selected in `cfg`.
pub fn join(left: &Table, right: &Table, cfg: &JoinConfig) -> Result<Table> {
    match cfg.algorithm {
        JoinAlgorithm::Hash => hash_join(left, right, cfg),
        JoinAlgorithm::Sort => sort_join(left, right, cfg),
    }
}

fn has_null_key(table: &Table, row: usize, keys: &[usize]) -> bool {
    keys.iter().any(|&k| !table.column(k).is_valid(row))
}

fn keys_equal(a: &Table, ai: usize, a_keys: &[usize], b: &Table, bi: usize, b_keys: &[usize]) -> bool {
    a_keys
        .iter()
        .zip(b_keys)
        .all(|(&ak, &bk)| a.column(ak).cell_eq(ai, b.column(bk), bi))
}

const NIL: usize = usize::MAX;

/// Chained hash table over the non-null-key rows of one input. Buckets are
/// picked from the high bits of a multiplicative remix of the row hash.
struct RowIndex {
    hashes: Vec<u64>,
    heads: Vec<usize>,
    next: Vec<usize>,
    shift: u32,
}

impl RowIndex {
    fn build(table: &Table, keys: &[usize]) -> Self {
        let n = table.num_rows();
        let buckets = (n * 2).next_power_of_two().max(2);
        let mut index = RowIndex {
            hashes: hash_rows(table, keys),
            heads: vec![NIL; buckets],
            next: vec![NIL; n],
            shift: 64 - buckets.trailing_zeros(),
        };
        // Insert in reverse so each chain lists rows in ascending order.
        for row in (0..n).rev() {
            if has_null_key(table, row, keys) {
                continue;
            }
            let b = index.bucket(index.hashes[row]);
            index.next[row] = index.heads[b];
            index.heads[b] = row;
        }
        index
    }

    #[inline]
    fn bucket(&self, h: u64) -> usize {
        (h.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> self.shift) as usize
    }
}

/// Builds a hash table on the smaller input (ties go to the right) and probes
/// it with the other.
pub fn hash_join(left: &Table, right: &Table, cfg: &JoinConfig) -> Result<Table> {
    cfg.validate(left, right)?;
    let build_right = right.num_rows() <= left.num_rows();
    let (build, build_keys, probe, probe_keys) = if build_right {
        (right, &cfg.right_keys, left, &cfg.left_keys)
    } else {
        (left, &cfg.left_keys, right, &cfg.right_keys)
    };
    let (keep_build, keep_probe) = if build_right {
        (cfg.join_type.keeps_right(), cfg.join_type.keeps_left())
    } else {
        (cfg.join_type.keeps_left(), cfg.join_type.keeps_right())
    };

    let index = RowIndex::build(build, build_keys);
    let probe_hashes = hash_rows(probe, probe_keys);
    let mut probe_out: Vec<Option<usize>> = Vec::with_capacity(probe.num_rows());
    let mut build_out: Vec<Option<usize>> = Vec::with_capacity(probe.num_rows());
    let mut build_matched = vec![false; if keep_build { build.num_rows() } else { 0 }];
    for row in 0..probe.num_rows() {
        let mut matched = false;
        if !has_null_key(probe, row, probe_keys) {
            let h = probe_hashes[row];
            let mut cur = index.heads[index.bucket(h)];
            while cur != NIL {
                if index.hashes[cur] == h && keys_equal(probe, row, probe_keys, build, cur, build_keys) {
                    matched = true;
                    probe_out.push(Some(row));
                    build_out.push(Some(cur));
                    if keep_build {
                        build_matched[cur] = true;
                    }
                }
                cur = index.next[cur];
            }
        }
        if !matched && keep_probe {
            probe_out.push(Some(row));
            build_out.push(None);
        }
    }
    if keep_build {
        for (row, _) in build_matched.iter().enumerate().filter(|(_, m)| !**m) {
            probe_out.push(None);
            build_out.push(Some(row));
        }
    }

    if build_right {
        Ok(assemble(left, right, &probe_out, &build_out))
    } else {
        Ok(assemble(left, right, &build_out, &probe_out))
    }
}

/// Sorts both inputs on their keys and merges equal-key runs, emitting the
/// cross product of each pair of matching runs.
pub fn sort_join(left: &Table, right: &Table, cfg: &JoinConfig) -> Result<Table> {
    cfg.validate(left, right)?;
    let (lk, rk) = (&cfg.left_keys, &cfg.right_keys);
    let (l_nulls, l_sorted): (Vec<usize>, Vec<usize>) = sort_indices(left, lk)?
        .into_iter()
        .partition(|&r| has_null_key(left, r, lk));
    let (r_nulls, r_sorted): (Vec<usize>, Vec<usize>) = sort_indices(right, rk)?
        .into_iter()
        .partition(|&r| has_null_key(right, r, rk));

    let keep_left = cfg.join_type.keeps_left();
    let keep_right = cfg.join_type.keeps_right();
    let mut lo: Vec<Option<usize>> = Vec::new();
    let mut ro: Vec<Option<usize>> = Vec::new();

    if keep_left {
        for &l in &l_nulls {
            lo.push(Some(l));
            ro.push(None);
        }
    }
    if keep_right {
        for &r in &r_nulls {
            lo.push(None);
            ro.push(Some(r));
        }
    }

    let (mut i, mut j) = (0, 0);
    while i < l_sorted.len() && j < r_sorted.len() {
        match compare_rows(left, l_sorted[i], lk, right, r_sorted[j], rk) {
            Ordering::Less => {
                if keep_left {
                    lo.push(Some(l_sorted[i]));
                    ro.push(None);
                }
                i += 1;
            }
            Ordering::Greater => {
                if keep_right {
                    lo.push(None);
                    ro.push(Some(r_sorted[j]));
                }
                j += 1;
            }
            Ordering::Equal => {
                let i_end = run_end(left, &l_sorted, i, lk);
                let j_end = run_end(right, &r_sorted, j, rk);
                for &l in &l_sorted[i..i_end] {
                    for &r in &r_sorted[j..j_end] {
                        lo.push(Some(l));
                        ro.push(Some(r));
                    }
                }
                i = i_end;
                j = j_end;
            }
        }
    }
    if keep_left {
        for &l in &l_sorted[i..] {
            lo.push(Some(l));
            ro.push(None);
        }
    }
    if keep_right {
        for &r in &r_sorted[j..] {
            lo.push(None);
            ro.push(Some(r));
        }
    }

    Ok(assemble(left, right, &lo, &ro))
}

fn run_end(table: &Table, sorted: &[usize], start: usize, keys: &[usize]) -> usize {
    let mut end = start + 1;
    while end < sorted.len()
        && compare_rows(table, sorted[start], keys, table, sorted[end], keys) == Ordering::Equal
    {
        end += 1;
    }
    end
}

fn assemble(left: &Table, right: &Table, lo: &[Option<usize>], ro: &[Option<usize>]) -> Table {
    let l = take_optional(left, lo);
    let r = take_optional(right, ro);
    let fields = left
        .schema()
        .fields()
        .iter()
        .chain(right.schema().fields())
        .cloned()
        .collect();
    let columns = (0..l.num_columns())
        .map(|c| Arc::clone(l.column_arc(c)))
        .chain((0..r.num_columns()).map(|c| Arc::clone(r.column_arc(c))))
        .collect();
    Table::from_arcs(Arc::new(Schema::new(fields)), columns).expect("join output shape")
}

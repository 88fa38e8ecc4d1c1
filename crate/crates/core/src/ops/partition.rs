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

use crate::error::{Error, Result};
use crate::table::{hash_rows, take_unchecked, Table};

/// Splits `table` into `num_partitions` tables; row `r` goes to partition
/// `hash_row(encode_row(r, key_columns)) % num_partitions`. Relative order is
/// preserved inside each partition.
pub fn hash_partition(table: &Table, key_columns: &[usize], num_partitions: usize) -> Result<Vec<Table>> {
    if num_partitions == 0 {
        return Err(Error::InvalidArgument("num_partitions must be at least 1".into()));
    }
    table.check_columns(key_columns)?;
    if num_partitions == 1 {
        return Ok(vec![table.clone()]);
    }
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); num_partitions];
    for (row, h) in hash_rows(table, key_columns).into_iter().enumerate() {
        buckets[(h % num_partitions as u64) as usize].push(row);
    }
    Ok(buckets.iter().map(|rows| take_unchecked(table, rows)).collect())
}

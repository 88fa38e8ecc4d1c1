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

use serde::{Deserialize, Serialize};

/// Per-worker timing of one `run`, written as one JSON object per line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub op: String,
    pub world_size: usize,
    pub rank: usize,
    pub rows_in_left: usize,
    pub rows_in_right: usize,
    pub rows_out: usize,
    /// Distributed operator only: shuffle plus local compute, no file I/O.
    pub op_wall_clock_ms: f64,
    /// Load, operator and output write.
    pub total_wall_clock_ms: f64,
}

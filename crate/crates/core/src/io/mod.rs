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

//! CSV input/output and the deterministic benchmark data generator.

mod csv;
mod generate;

pub use self::csv::{parse_table, read_csv, read_csv_many, write_csv, write_csv_to, CsvReadOptions, CsvWriteOptions};
pub use generate::{experiment_schema, generate_table, GenerateSpec, SplitMix64};

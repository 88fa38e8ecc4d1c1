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

//! A distributed-memory, data-parallel columnar table engine.
//!
//! Workers each hold one partition of every logical table. Local operators
//! ([`ops`]) run on a single partition; distributed operators ([`dist`]) are
//! composed from hash partitioning, a bulk-synchronous all-to-all exchange
//! ([`comm`]) and the local operators.

pub mod comm;
pub mod dist;
pub mod error;
pub mod io;
pub mod ops;
pub mod oracle;
pub mod table;

pub use error::{Error, Result};
pub use table::{concat, take_rows, Column, DType, Field, Schema, Table, Value};

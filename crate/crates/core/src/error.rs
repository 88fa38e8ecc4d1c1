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

//! Error types shared by every module of the engine.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("column '{column}' has {actual} rows, expected {expected}")]
    LengthMismatch {
        column: String,
        expected: usize,
        actual: usize,
    },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid column data: {0}")]
    InvalidColumn(String),

    #[error("predicate failed: {0}")]
    Predicate(String),

    #[error("frame decode failed: {0}")]
    Frame(#[from] FrameError),

    #[error("peer {peer}: {message}")]
    Peer { peer: usize, message: String },

    #[error("timed out waiting for peer {peer}: {what}")]
    Timeout { peer: usize, what: String },

    #[error("rank {0} already claimed")]
    RankCollision(usize),

    #[error("malformed address '{0}'")]
    Address(String),

    #[error("handshake failed: {0}")]
    Handshake(String),

    #[error("{path}:{line}: {message}")]
    Csv {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Reasons a `TableFrame` is rejected by the decoder.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated frame: needed {needed} bytes at offset {offset}, {available} available")]
    Truncated {
        offset: usize,
        needed: u64,
        available: usize,
    },
    #[error("unknown dtype tag {0}")]
    UnknownDType(u8),
    #[error("column {column}: {message}")]
    Inconsistent { column: usize, message: String },
    #[error("column {0}: utf8 offsets are not monotone")]
    NonMonotoneOffsets(usize),
    #[error("column {0}: invalid utf-8")]
    InvalidUtf8(usize),
    #[error("{0} trailing bytes after table")]
    TrailingBytes(usize),
}

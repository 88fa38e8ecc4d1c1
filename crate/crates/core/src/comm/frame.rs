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

//! `TableFrame`: the little-endian wire encoding of a table.
//!
//! ```text
//! "CYTF" | version u16 = 1 | column count u32 | row count u64
//! per column:
//!   dtype tag u8 (0 Int64, 1 Float64, 2 Utf8, 3 Bool)
//!   name length u16 | name bytes (UTF-8)
//!   validity length u64 | validity bytes (LSB-first, padded to whole bytes)
//!   Int64 / Float64: values length u64 (bytes) | raw little-endian values
//!   Bool:            one byte per value (0 or 1)
//!   Utf8:            offsets length u64 (bytes) | (rows + 1) u64 offsets
//!                    | data length u64 | data bytes
//! ```
//!
//! The decoder checks every declared length against the remaining input
//! before reading, so malformed frames fail cleanly.

use crate::error::{FrameError, Result};
use crate::table::{Bitmap, Column, ColumnData, DType, Field, Schema, Table};

pub const FRAME_MAGIC: [u8; 4] = *b"CYTF";
pub const FRAME_VERSION: u16 = 1;

pub fn serialize_table(table: &Table) -> Vec<u8> {
    let rows = table.num_rows();
    let mut out = Vec::with_capacity(18 + table.num_columns() * (32 + rows * 9));
    out.extend_from_slice(&FRAME_MAGIC);
    out.extend_from_slice(&FRAME_VERSION.to_le_bytes());
    out.extend_from_slice(&(table.num_columns() as u32).to_le_bytes());
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    for (field, col) in table.schema().fields().iter().zip(table.columns()) {
        out.push(field.dtype.tag());
        // Names longer than u16::MAX bytes are truncated at a char boundary.
        let mut name_len = field.name.len().min(u16::MAX as usize);
        while !field.name.is_char_boundary(name_len) {
            name_len -= 1;
        }
        out.extend_from_slice(&(name_len as u16).to_le_bytes());
        out.extend_from_slice(&field.name.as_bytes()[..name_len]);
        let validity = col.validity().as_bytes();
        out.extend_from_slice(&(validity.len() as u64).to_le_bytes());
        out.extend_from_slice(validity);
        match col.data() {
            ColumnData::Int64(v) => {
                out.extend_from_slice(&((v.len() * 8) as u64).to_le_bytes());
                v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
            }
            ColumnData::Float64(v) => {
                out.extend_from_slice(&((v.len() * 8) as u64).to_le_bytes());
                v.iter().for_each(|x| out.extend_from_slice(&x.to_bits().to_le_bytes()));
            }
            ColumnData::Bool(v) => out.extend(v.iter().map(|&b| u8::from(b))),
            ColumnData::Utf8 { offsets, data } => {
                out.extend_from_slice(&((offsets.len() * 8) as u64).to_le_bytes());
                offsets.iter().for_each(|o| out.extend_from_slice(&o.to_le_bytes()));
                out.extend_from_slice(&(data.len() as u64).to_le_bytes());
                out.extend_from_slice(data);
            }
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: u64) -> std::result::Result<&'a [u8], FrameError> {
        let available = self.buf.len() - self.pos;
        if n > available as u64 {
            return Err(FrameError::Truncated {
                offset: self.pos,
                needed: n,
                available,
            });
        }
        let s = &self.buf[self.pos..self.pos + n as usize];
        self.pos += n as usize;
        Ok(s)
    }

    fn u8(&mut self) -> std::result::Result<u8, FrameError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> std::result::Result<u16, FrameError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> std::result::Result<u32, FrameError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> std::result::Result<u64, FrameError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    /// Reads a u64 length prefix that must equal `expected`.
    fn exact_len(&mut self, expected: u64, column: usize, what: &str) -> std::result::Result<u64, FrameError> {
        let declared = self.u64()?;
        if declared != expected {
            return Err(FrameError::Inconsistent {
                column,
                message: format!("{what} length {declared}, expected {expected}"),
            });
        }
        Ok(declared)
    }
}

fn words(bytes: &[u8]) -> impl Iterator<Item = [u8; 8]> + '_ {
    bytes.chunks_exact(8).map(|c| c.try_into().unwrap())
}

pub fn deserialize_table(frame: &[u8]) -> Result<Table> {
    Ok(decode(frame)?)
}

fn decode(frame: &[u8]) -> std::result::Result<Table, FrameError> {
    let mut r = Reader { buf: frame, pos: 0 };
    let magic: [u8; 4] = match r.take(4) {
        Ok(m) => m.try_into().unwrap(),
        Err(_) => {
            let mut m = [0u8; 4];
            m[..frame.len()].copy_from_slice(frame);
            return Err(FrameError::BadMagic(m));
        }
    };
    if magic != FRAME_MAGIC {
        return Err(FrameError::BadMagic(magic));
    }
    let version = r.u16()?;
    if version != FRAME_VERSION {
        return Err(FrameError::UnsupportedVersion(version));
    }
    let ncols = r.u32()? as usize;
    let rows = r.u64()?;
    if ncols == 0 {
        return Err(FrameError::Inconsistent {
            column: 0,
            message: "frame declares zero columns".into(),
        });
    }
    let oversize = |column: usize| FrameError::Inconsistent {
        column,
        message: format!("row count {rows} too large"),
    };

    let mut fields = Vec::new();
    let mut columns = Vec::new();
    for c in 0..ncols {
        let tag = r.u8()?;
        let dtype = DType::from_tag(tag).ok_or(FrameError::UnknownDType(tag))?;
        let name_len = r.u16()?;
        let name = std::str::from_utf8(r.take(u64::from(name_len))?)
            .map_err(|_| FrameError::InvalidUtf8(c))?
            .to_owned();

        r.exact_len(rows.div_ceil(8), c, "validity")?;
        let validity_bytes = r.take(rows.div_ceil(8))?.to_vec();
        let n = usize::try_from(rows).map_err(|_| oversize(c))?;
        let validity = Bitmap::from_bytes(validity_bytes, n).ok_or_else(|| oversize(c))?;

        let data = match dtype {
            DType::Int64 | DType::Float64 => {
                let len = rows.checked_mul(8).ok_or_else(|| oversize(c))?;
                r.exact_len(len, c, "values")?;
                let raw = r.take(len)?;
                if dtype == DType::Int64 {
                    ColumnData::Int64(words(raw).map(i64::from_le_bytes).collect())
                } else {
                    ColumnData::Float64(words(raw).map(|w| f64::from_bits(u64::from_le_bytes(w))).collect())
                }
            }
            DType::Bool => {
                let raw = r.take(rows)?;
                if raw.iter().any(|&b| b > 1) {
                    return Err(FrameError::Inconsistent {
                        column: c,
                        message: "bool byte other than 0 or 1".into(),
                    });
                }
                ColumnData::Bool(raw.iter().map(|&b| b == 1).collect())
            }
            DType::Utf8 => {
                let len = rows
                    .checked_add(1)
                    .and_then(|x| x.checked_mul(8))
                    .ok_or_else(|| oversize(c))?;
                r.exact_len(len, c, "offsets")?;
                let offsets: Vec<u64> = words(r.take(len)?).map(u64::from_le_bytes).collect();
                let data_len = r.u64()?;
                let data = r.take(data_len)?.to_vec();
                if offsets[0] != 0
                    || offsets.windows(2).any(|w| w[0] > w[1])
                    || *offsets.last().unwrap() != data_len
                {
                    return Err(FrameError::NonMonotoneOffsets(c));
                }
                ColumnData::Utf8 { offsets, data }
            }
        };
        let column = Column::new(data, validity).map_err(|e| match dtype {
            DType::Utf8 => FrameError::InvalidUtf8(c),
            _ => FrameError::Inconsistent {
                column: c,
                message: e.to_string(),
            },
        })?;
        fields.push(Field::new(name, dtype));
        columns.push(column);
    }
    if r.pos != frame.len() {
        return Err(FrameError::TrailingBytes(frame.len() - r.pos));
    }
    Table::try_new(Schema::new(fields), columns).map_err(|e| FrameError::Inconsistent {
        column: 0,
        message: e.to_string(),
    })
}

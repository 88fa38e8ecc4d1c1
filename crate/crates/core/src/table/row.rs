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

//! Canonical row encoding and FNV-1a row hashing.
//!
//! Each column in the subset contributes a presence byte (`0x00` null,
//! `0x01` present); a present value is followed by its dtype tag and the
//! canonical value bytes:
//!
//! | dtype   | bytes                                              |
//! |---------|----------------------------------------------------|
//! | Int64   | 8 bytes little-endian                              |
//! | Float64 | 8 bytes little-endian of the canonical bit pattern |
//! | Bool    | 1 byte                                             |
//! | Utf8    | u32 little-endian length, then the bytes           |
//!
//! Two rows are engine-equal on a column subset iff their encodings are
//! byte-equal.

use super::column::ColumnData;
use super::value::canonical_f64_bits;
use super::Table;
use crate::error::{Error, Result};

pub const FNV_OFFSET_BASIS: u64 = 0xCBF2_9CE4_8422_2325;
pub const FNV_PRIME: u64 = 0x0000_0100_0000_01B3;

#[inline]
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    fnv_bytes(FNV_OFFSET_BASIS, bytes)
}

/// Canonical bytes of one row restricted to a column subset.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowKey(Vec<u8>);

impl RowKey {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }
}

pub fn encode_row(table: &Table, row_index: usize, column_subset: &[usize]) -> Result<RowKey> {
    if row_index >= table.num_rows() {
        return Err(Error::IndexOutOfRange {
            what: "row",
            index: row_index,
            len: table.num_rows(),
        });
    }
    table.check_columns(column_subset)?;
    let mut buf = Vec::new();
    encode_into(table, row_index, column_subset, &mut buf);
    Ok(RowKey(buf))
}

pub fn hash_row(key: &RowKey) -> u64 {
    fnv1a64(&key.0)
}

#[inline]
pub(crate) fn encode_into(table: &Table, row: usize, cols: &[usize], buf: &mut Vec<u8>) {
    for &c in cols {
        let col = table.column(c);
        if !col.is_valid(row) {
            buf.push(0x00);
            continue;
        }
        buf.push(0x01);
        buf.push(col.dtype().tag());
        match col.data() {
            ColumnData::Int64(v) => buf.extend_from_slice(&v[row].to_le_bytes()),
            ColumnData::Float64(v) => {
                buf.extend_from_slice(&canonical_f64_bits(v[row]).to_le_bytes())
            }
            ColumnData::Bool(v) => buf.push(u8::from(v[row])),
            ColumnData::Utf8 { .. } => {
                let s = col.str_at(row).as_bytes();
                buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
                buf.extend_from_slice(s);
            }
        }
    }
}

#[inline(always)]
fn fnv_byte(h: u64, b: u8) -> u64 {
    (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
}

#[inline(always)]
fn fnv_bytes(h: u64, bytes: &[u8]) -> u64 {
    bytes.iter().fold(h, |h, &b| fnv_byte(h, b))
}

/// FNV-1a hash of every row's encoding over `cols`, computed one column at a
/// time. Because FNV-1a is a byte stream hash, `hash_rows(t, cols)[r]` equals
/// `hash_row(&encode_row(t, r, cols)?)`. Indices are not checked.
pub(crate) fn hash_rows(table: &Table, cols: &[usize]) -> Vec<u64> {
    let mut hashes = vec![FNV_OFFSET_BASIS; table.num_rows()];
    for &c in cols {
        let col = table.column(c);
        let tag = col.dtype().tag();
        let feed = |r: usize, h: &mut u64, value: &[u8]| {
            *h = if col.is_valid(r) {
                fnv_bytes(fnv_byte(fnv_byte(*h, 0x01), tag), value)
            } else {
                fnv_byte(*h, 0x00)
            };
        };
        match col.data() {
            ColumnData::Int64(v) => {
                for (r, (h, x)) in hashes.iter_mut().zip(v).enumerate() {
                    feed(r, h, &x.to_le_bytes());
                }
            }
            ColumnData::Float64(v) => {
                for (r, (h, x)) in hashes.iter_mut().zip(v).enumerate() {
                    feed(r, h, &canonical_f64_bits(*x).to_le_bytes());
                }
            }
            ColumnData::Bool(v) => {
                for (r, (h, x)) in hashes.iter_mut().zip(v).enumerate() {
                    feed(r, h, &[u8::from(*x)]);
                }
            }
            ColumnData::Utf8 { .. } => {
                for (r, h) in hashes.iter_mut().enumerate() {
                    if col.is_valid(r) {
                        let s = col.str_at(r).as_bytes();
                        let mut x = fnv_byte(fnv_byte(*h, 0x01), tag);
                        x = fnv_bytes(x, &(s.len() as u32).to_le_bytes());
                        *h = fnv_bytes(x, s);
                    } else {
                        *h = fnv_byte(*h, 0x00);
                    }
                }
            }
        }
    }
    hashes
}

/// Reusable encoder for hot loops; avoids one allocation per row.
#[derive(Debug, Default)]
pub struct RowEncoder {
    buf: Vec<u8>,
}

impl RowEncoder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Encodes a row into the internal buffer. Indices are not checked.
    #[inline]
    pub fn encode(&mut self, table: &Table, row: usize, cols: &[usize]) -> &[u8] {
        self.buf.clear();
        encode_into(table, row, cols, &mut self.buf);
        &self.buf
    }

    #[inline]
    pub fn hash(&mut self, table: &Table, row: usize, cols: &[usize]) -> u64 {
        fnv1a64(self.encode(table, row, cols))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{Column, DType};

    #[test]
    fn columnwise_hashes_match_row_encoding() {
        let t = Table::from_columns(vec![
            ("i", Column::from_opt_i64(&[Some(1), None, Some(-5)])),
            ("f", Column::from_opt_f64(&[Some(-0.0), Some(f64::NAN), None])),
            ("s", Column::from_opt_strs(&[Some(""), Some("ab"), None])),
            ("b", Column::from_opt_bool(&[None, Some(true), Some(false)])),
        ])
        .unwrap();
        let cols = [3, 0, 2, 1];
        let hashes = hash_rows(&t, &cols);
        for (r, h) in hashes.iter().enumerate() {
            assert_eq!(*h, hash_row(&encode_row(&t, r, &cols).unwrap()));
        }
    }

    #[test]
    fn empty_input_hashes_to_offset_basis() {
        assert_eq!(fnv1a64(&[]), 0xCBF29CE484222325);
        assert_eq!(hash_row(&RowKey(Vec::new())), 0xCBF29CE484222325);
    }

    #[test]
    fn fnv_reference_vectors() {
        // Published FNV-1a 64-bit test vectors.
        assert_eq!(fnv1a64(b"a"), 0xAF63DC4C8601EC8C);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171F73967E8);
    }

    #[test]
    fn int_zero_encoding() {
        let t = Table::from_columns(vec![("a", Column::from_i64(vec![0]))]).unwrap();
        let key = encode_row(&t, 0, &[0]).unwrap();
        let mut expected = vec![0x01, DType::Int64.tag()];
        expected.extend_from_slice(&[0; 8]);
        assert_eq!(key.as_bytes(), expected.as_slice());
    }

    #[test]
    fn signed_zeros_and_nans_collapse() {
        let t = Table::from_columns(vec![(
            "f",
            Column::from_f64(vec![-0.0, 0.0, f64::NAN, -f64::NAN, f64::from_bits(0x7FF0_0000_0000_0001)]),
        )])
        .unwrap();
        let k: Vec<_> = (0..5).map(|r| encode_row(&t, r, &[0]).unwrap()).collect();
        assert_eq!(k[0], k[1]);
        assert_eq!(k[2], k[3]);
        assert_eq!(k[2], k[4]);
        assert_ne!(k[0], k[2]);
    }

    #[test]
    fn null_differs_from_every_value() {
        let t = Table::from_columns(vec![
            ("i", Column::from_opt_i64(&[None, Some(0)])),
            ("s", Column::from_opt_strs(&[None, Some("")])),
        ])
        .unwrap();
        assert_ne!(encode_row(&t, 0, &[0]).unwrap(), encode_row(&t, 1, &[0]).unwrap());
        assert_ne!(encode_row(&t, 0, &[1]).unwrap(), encode_row(&t, 1, &[1]).unwrap());
        assert_eq!(encode_row(&t, 0, &[0]).unwrap().as_bytes(), &[0x00]);
    }

    #[test]
    fn utf8_is_prefix_unambiguous() {
        let t = Table::from_columns(vec![
            ("x", Column::from_strs(&["ab", "a"])),
            ("y", Column::from_strs(&["c", "bc"])),
        ])
        .unwrap();
        assert_ne!(encode_row(&t, 0, &[0, 1]).unwrap(), encode_row(&t, 1, &[0, 1]).unwrap());
    }

    #[test]
    fn type_tag_separates_dtypes() {
        let t = Table::from_columns(vec![
            ("i", Column::from_i64(vec![0])),
            ("f", Column::from_f64(vec![0.0])),
        ])
        .unwrap();
        assert_ne!(encode_row(&t, 0, &[0]).unwrap(), encode_row(&t, 0, &[1]).unwrap());
    }

    #[test]
    fn out_of_range_indices() {
        let t = Table::from_columns(vec![("i", Column::from_i64(vec![0]))]).unwrap();
        assert!(encode_row(&t, 1, &[0]).is_err());
        assert!(encode_row(&t, 0, &[1]).is_err());
    }
}

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

//! Contiguous, homogeneously typed column buffers.

use super::bitmap::Bitmap;
use super::value::{canonical_f64_bits, DType, Value};
use crate::error::{Error, Result};

/// Value buffer of a column. Null slots hold a default value (0, false, or
/// an empty string).
#[derive(Clone, Debug)]
pub enum ColumnData {
    Int64(Vec<i64>),
    Float64(Vec<f64>),
    Bool(Vec<bool>),
    Utf8 { offsets: Vec<u64>, data: Vec<u8> },
}

impl ColumnData {
    pub fn dtype(&self) -> DType {
        match self {
            ColumnData::Int64(_) => DType::Int64,
            ColumnData::Float64(_) => DType::Float64,
            ColumnData::Bool(_) => DType::Bool,
            ColumnData::Utf8 { .. } => DType::Utf8,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ColumnData::Int64(v) => v.len(),
            ColumnData::Float64(v) => v.len(),
            ColumnData::Bool(v) => v.len(),
            ColumnData::Utf8 { offsets, .. } => offsets.len().saturating_sub(1),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// An immutable column: a value buffer plus a validity bitmap (bit set means
/// the value is present).
#[derive(Clone, Debug)]
pub struct Column {
    data: ColumnData,
    validity: Bitmap,
}

impl Column {
    /// Validates buffer shapes. Utf8 offsets must start at zero, be monotone
    /// and end at the byte-buffer length, and each value must be valid UTF-8.
    pub fn new(data: ColumnData, validity: Bitmap) -> Result<Self> {
        let len = data.len();
        if validity.len() != len {
            return Err(Error::InvalidColumn(format!(
                "validity has {} bits for {} values",
                validity.len(),
                len
            )));
        }
        if let ColumnData::Utf8 { offsets, data } = &data {
            if offsets.is_empty() {
                return Err(Error::InvalidColumn("utf8 offsets must be non-empty".into()));
            }
            if offsets[0] != 0 || *offsets.last().unwrap() != data.len() as u64 {
                return Err(Error::InvalidColumn(
                    "utf8 offsets must span the byte buffer".into(),
                ));
            }
            if offsets.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::InvalidColumn("utf8 offsets not monotone".into()));
            }
            for w in offsets.windows(2) {
                std::str::from_utf8(&data[w[0] as usize..w[1] as usize])
                    .map_err(|e| Error::InvalidColumn(format!("invalid utf-8: {e}")))?;
            }
        }
        Ok(Column { data, validity })
    }

    pub fn from_i64(values: Vec<i64>) -> Self {
        let validity = Bitmap::new_set(values.len());
        Column {
            data: ColumnData::Int64(values),
            validity,
        }
    }

    pub fn from_f64(values: Vec<f64>) -> Self {
        let validity = Bitmap::new_set(values.len());
        Column {
            data: ColumnData::Float64(values),
            validity,
        }
    }

    pub fn from_bool(values: Vec<bool>) -> Self {
        let validity = Bitmap::new_set(values.len());
        Column {
            data: ColumnData::Bool(values),
            validity,
        }
    }

    pub fn from_strs<S: AsRef<str>>(values: &[S]) -> Self {
        let mut b = ColumnBuilder::with_capacity(DType::Utf8, values.len());
        for v in values {
            b.push_str(v.as_ref());
        }
        b.finish()
    }

    pub fn from_opt_i64(values: &[Option<i64>]) -> Self {
        let mut b = ColumnBuilder::with_capacity(DType::Int64, values.len());
        values.iter().for_each(|v| b.push_value(v.map_or(Value::Null, Value::Int64)));
        b.finish()
    }

    pub fn from_opt_f64(values: &[Option<f64>]) -> Self {
        let mut b = ColumnBuilder::with_capacity(DType::Float64, values.len());
        values.iter().for_each(|v| b.push_value(v.map_or(Value::Null, Value::Float64)));
        b.finish()
    }

    pub fn from_opt_bool(values: &[Option<bool>]) -> Self {
        let mut b = ColumnBuilder::with_capacity(DType::Bool, values.len());
        values.iter().for_each(|v| b.push_value(v.map_or(Value::Null, Value::Bool)));
        b.finish()
    }

    pub fn from_opt_strs<S: AsRef<str>>(values: &[Option<S>]) -> Self {
        let mut b = ColumnBuilder::with_capacity(DType::Utf8, values.len());
        for v in values {
            match v {
                Some(s) => b.push_str(s.as_ref()),
                None => b.push_null(),
            }
        }
        b.finish()
    }

    pub fn nulls(dtype: DType, len: usize) -> Self {
        let mut b = ColumnBuilder::with_capacity(dtype, len);
        (0..len).for_each(|_| b.push_null());
        b.finish()
    }

    pub fn dtype(&self) -> DType {
        self.data.dtype()
    }

    pub fn len(&self) -> usize {
        self.validity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn data(&self) -> &ColumnData {
        &self.data
    }

    pub fn validity(&self) -> &Bitmap {
        &self.validity
    }

    #[inline]
    pub fn is_valid(&self, i: usize) -> bool {
        self.validity.get(i)
    }

    pub fn null_count(&self) -> usize {
        self.len() - self.validity.count_set()
    }

    pub fn i64_values(&self) -> Option<&[i64]> {
        match &self.data {
            ColumnData::Int64(v) => Some(v),
            _ => None,
        }
    }

    pub fn f64_values(&self) -> Option<&[f64]> {
        match &self.data {
            ColumnData::Float64(v) => Some(v),
            _ => None,
        }
    }

    #[inline]
    pub fn str_at(&self, i: usize) -> &str {
        match &self.data {
            ColumnData::Utf8 { offsets, data } => {
                let bytes = &data[offsets[i] as usize..offsets[i + 1] as usize];
                std::str::from_utf8(bytes).expect("utf8 validated at construction")
            }
            _ => panic!("str_at on {} column", self.dtype()),
        }
    }

    /// Cell at row `i`. Panics when `i` is out of range.
    #[inline]
    pub fn value(&self, i: usize) -> Value<'_> {
        if !self.validity.get(i) {
            return Value::Null;
        }
        match &self.data {
            ColumnData::Int64(v) => Value::Int64(v[i]),
            ColumnData::Float64(v) => Value::Float64(v[i]),
            ColumnData::Bool(v) => Value::Bool(v[i]),
            ColumnData::Utf8 { .. } => Value::Utf8(self.str_at(i)),
        }
    }

    /// Engine equality of two cells, assuming both columns share a dtype.
    #[inline]
    pub(crate) fn cell_eq(&self, i: usize, other: &Column, j: usize) -> bool {
        match (self.is_valid(i), other.is_valid(j)) {
            (false, false) => return true,
            (true, true) => {}
            _ => return false,
        }
        match (&self.data, &other.data) {
            (ColumnData::Int64(a), ColumnData::Int64(b)) => a[i] == b[j],
            (ColumnData::Float64(a), ColumnData::Float64(b)) => {
                canonical_f64_bits(a[i]) == canonical_f64_bits(b[j])
            }
            (ColumnData::Bool(a), ColumnData::Bool(b)) => a[i] == b[j],
            (ColumnData::Utf8 { .. }, ColumnData::Utf8 { .. }) => self.str_at(i) == other.str_at(j),
            _ => false,
        }
    }
}

/// Value identity: same dtype, same null positions, bit-identical present
/// values.
impl PartialEq for Column {
    fn eq(&self, other: &Self) -> bool {
        if self.dtype() != other.dtype() || self.validity != other.validity {
            return false;
        }
        (0..self.len()).all(|i| {
            if !self.is_valid(i) {
                return true;
            }
            match (&self.data, &other.data) {
                (ColumnData::Int64(a), ColumnData::Int64(b)) => a[i] == b[i],
                (ColumnData::Float64(a), ColumnData::Float64(b)) => a[i].to_bits() == b[i].to_bits(),
                (ColumnData::Bool(a), ColumnData::Bool(b)) => a[i] == b[i],
                _ => self.str_at(i) == other.str_at(i),
            }
        })
    }
}

/// Append-only builder producing a [`Column`].
#[derive(Debug)]
pub struct ColumnBuilder {
    data: ColumnData,
    validity: Bitmap,
}

impl ColumnBuilder {
    pub fn with_capacity(dtype: DType, capacity: usize) -> Self {
        let data = match dtype {
            DType::Int64 => ColumnData::Int64(Vec::with_capacity(capacity)),
            DType::Float64 => ColumnData::Float64(Vec::with_capacity(capacity)),
            DType::Bool => ColumnData::Bool(Vec::with_capacity(capacity)),
            DType::Utf8 => {
                let mut offsets = Vec::with_capacity(capacity + 1);
                offsets.push(0);
                ColumnData::Utf8 {
                    offsets,
                    data: Vec::new(),
                }
            }
        };
        ColumnBuilder {
            data,
            validity: Bitmap::with_capacity(capacity),
        }
    }

    pub fn dtype(&self) -> DType {
        self.data.dtype()
    }

    pub fn len(&self) -> usize {
        self.validity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn push_null(&mut self) {
        match &mut self.data {
            ColumnData::Int64(v) => v.push(0),
            ColumnData::Float64(v) => v.push(0.0),
            ColumnData::Bool(v) => v.push(false),
            ColumnData::Utf8 { offsets, data } => offsets.push(data.len() as u64),
        }
        self.validity.push(false);
    }

    pub fn push_i64(&mut self, value: i64) {
        match &mut self.data {
            ColumnData::Int64(v) => v.push(value),
            _ => panic!("push_i64 into {} builder", self.dtype()),
        }
        self.validity.push(true);
    }

    pub fn push_f64(&mut self, value: f64) {
        match &mut self.data {
            ColumnData::Float64(v) => v.push(value),
            _ => panic!("push_f64 into {} builder", self.dtype()),
        }
        self.validity.push(true);
    }

    pub fn push_bool(&mut self, value: bool) {
        match &mut self.data {
            ColumnData::Bool(v) => v.push(value),
            _ => panic!("push_bool into {} builder", self.dtype()),
        }
        self.validity.push(true);
    }

    pub fn push_str(&mut self, value: &str) {
        match &mut self.data {
            ColumnData::Utf8 { offsets, data } => {
                data.extend_from_slice(value.as_bytes());
                offsets.push(data.len() as u64);
            }
            _ => panic!("push_str into {} builder", self.dtype()),
        }
        self.validity.push(true);
    }

    /// Appends a value of the builder's dtype. Panics on a dtype mismatch.
    pub fn push_value(&mut self, value: Value<'_>) {
        match value {
            Value::Null => self.push_null(),
            Value::Int64(v) => self.push_i64(v),
            Value::Float64(v) => self.push_f64(v),
            Value::Bool(v) => self.push_bool(v),
            Value::Utf8(v) => self.push_str(v),
        }
    }

    /// Copies row `i` of `src`, which must share the builder's dtype.
    #[inline]
    pub fn push_from(&mut self, src: &Column, i: usize) {
        if !src.is_valid(i) {
            self.push_null();
            return;
        }
        match (&mut self.data, &src.data) {
            (ColumnData::Int64(d), ColumnData::Int64(s)) => d.push(s[i]),
            (ColumnData::Float64(d), ColumnData::Float64(s)) => d.push(s[i]),
            (ColumnData::Bool(d), ColumnData::Bool(s)) => d.push(s[i]),
            (ColumnData::Utf8 { offsets, data }, ColumnData::Utf8 { offsets: so, data: sd }) => {
                data.extend_from_slice(&sd[so[i] as usize..so[i + 1] as usize]);
                offsets.push(data.len() as u64);
            }
            (d, _) => panic!("push_from {} column into {} builder", src.dtype(), d.dtype()),
        }
        self.validity.push(true);
    }

    /// Appends every row of `src`.
    pub fn extend_from(&mut self, src: &Column) {
        if src.validity.all_set() {
            match (&mut self.data, &src.data) {
                (ColumnData::Int64(d), ColumnData::Int64(s)) => d.extend_from_slice(s),
                (ColumnData::Float64(d), ColumnData::Float64(s)) => d.extend_from_slice(s),
                (ColumnData::Bool(d), ColumnData::Bool(s)) => d.extend_from_slice(s),
                _ => {
                    (0..src.len()).for_each(|i| self.push_from(src, i));
                    return;
                }
            }
            (0..src.len()).for_each(|_| self.validity.push(true));
        } else {
            (0..src.len()).for_each(|i| self.push_from(src, i));
        }
    }

    pub fn finish(self) -> Column {
        Column {
            data: self.data,
            validity: self.validity,
        }
    }
}

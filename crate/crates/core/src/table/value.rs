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

use std::cmp::Ordering;
use std::fmt;

/// Physical type of a column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DType {
    Int64,
    Float64,
    Utf8,
    Bool,
}

impl DType {
    /// Tag byte used by both the row encoding and the wire format.
    pub fn tag(self) -> u8 {
        match self {
            DType::Int64 => 0,
            DType::Float64 => 1,
            DType::Utf8 => 2,
            DType::Bool => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<DType> {
        match tag {
            0 => Some(DType::Int64),
            1 => Some(DType::Float64),
            2 => Some(DType::Utf8),
            3 => Some(DType::Bool),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DType::Int64 => "int64",
            DType::Float64 => "float64",
            DType::Utf8 => "utf8",
            DType::Bool => "bool",
        }
    }
}

impl fmt::Display for DType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "int64" | "i64" | "int" => Ok(DType::Int64),
            "float64" | "f64" | "double" => Ok(DType::Float64),
            "utf8" | "str" | "string" => Ok(DType::Utf8),
            "bool" | "boolean" => Ok(DType::Bool),
            other => Err(format!("unknown dtype '{other}'")),
        }
    }
}

/// Canonical bit pattern of a float: `-0.0` folds to `+0.0`, every NaN folds
/// to the quiet NaN `0x7FF8000000000000`.
#[inline]
pub fn canonical_f64_bits(v: f64) -> u64 {
    if v.is_nan() {
        0x7FF8_0000_0000_0000
    } else if v == 0.0 {
        0
    } else {
        v.to_bits()
    }
}

/// Total order over floats consistent with engine equality: NaN sorts above
/// every other value and the two zeros are equal.
#[inline]
pub fn cmp_f64(a: f64, b: f64) -> Ordering {
    f64::from_bits(canonical_f64_bits(a)).total_cmp(&f64::from_bits(canonical_f64_bits(b)))
}

/// A borrowed view of a single cell.
#[derive(Clone, Copy, Debug)]
pub enum Value<'a> {
    Null,
    Int64(i64),
    Float64(f64),
    Utf8(&'a str),
    Bool(bool),
}

impl Value<'_> {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn dtype(&self) -> Option<DType> {
        match self {
            Value::Null => None,
            Value::Int64(_) => Some(DType::Int64),
            Value::Float64(_) => Some(DType::Float64),
            Value::Utf8(_) => Some(DType::Utf8),
            Value::Bool(_) => Some(DType::Bool),
        }
    }

    pub fn to_scalar(&self) -> Scalar {
        match *self {
            Value::Null => Scalar::Null,
            Value::Int64(v) => Scalar::Int64(v),
            Value::Float64(v) => Scalar::Float64(v),
            Value::Utf8(v) => Scalar::Utf8(v.to_owned()),
            Value::Bool(v) => Scalar::Bool(v),
        }
    }

    /// Canonical ordering: nulls first, then values of the same type in their
    /// natural order. Values of different types order by type tag.
    pub fn canonical_cmp(&self, other: &Value<'_>) -> Ordering {
        match (self, other) {
            (Value::Null, Value::Null) => Ordering::Equal,
            (Value::Null, _) => Ordering::Less,
            (_, Value::Null) => Ordering::Greater,
            (Value::Int64(a), Value::Int64(b)) => a.cmp(b),
            (Value::Float64(a), Value::Float64(b)) => cmp_f64(*a, *b),
            (Value::Utf8(a), Value::Utf8(b)) => a.as_bytes().cmp(b.as_bytes()),
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (a, b) => a.dtype().map(DType::tag).cmp(&b.dtype().map(DType::tag)),
        }
    }
}

/// Engine equality: null equals null, NaN equals NaN, `-0.0` equals `+0.0`.
impl PartialEq for Value<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.canonical_cmp(other) == Ordering::Equal
    }
}

impl Eq for Value<'_> {}

impl fmt::Display for Value<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("null"),
            Value::Int64(v) => write!(f, "{v}"),
            Value::Float64(v) => write!(f, "{v}"),
            Value::Utf8(v) => write!(f, "{v:?}"),
            Value::Bool(v) => write!(f, "{v}"),
        }
    }
}

/// An owned cell value, used for predicate literals and row construction.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Null,
    Int64(i64),
    Float64(f64),
    Utf8(String),
    Bool(bool),
}

impl Scalar {
    pub fn as_value(&self) -> Value<'_> {
        match self {
            Scalar::Null => Value::Null,
            Scalar::Int64(v) => Value::Int64(*v),
            Scalar::Float64(v) => Value::Float64(*v),
            Scalar::Utf8(v) => Value::Utf8(v),
            Scalar::Bool(v) => Value::Bool(*v),
        }
    }

    pub fn dtype(&self) -> Option<DType> {
        self.as_value().dtype()
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::Int64(v)
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Float64(v)
    }
}

impl From<bool> for Scalar {
    fn from(v: bool) -> Self {
        Scalar::Bool(v)
    }
}

impl From<&str> for Scalar {
    fn from(v: &str) -> Self {
        Scalar::Utf8(v.to_owned())
    }
}

impl<T: Into<Scalar>> From<Option<T>> for Scalar {
    fn from(v: Option<T>) -> Self {
        v.map_or(Scalar::Null, Into::into)
    }
}

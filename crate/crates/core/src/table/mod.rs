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

//! Columnar table model.
//!
//! A [`Table`] is an immutable schema plus equal-length [`Column`]s. Columns
//! are reference counted so projections and partitions can share buffers, and
//! tables are `Send + Sync` so workers can hand them to each other freely.

mod bitmap;
mod column;
mod row;
mod value;

use std::fmt;
use std::sync::Arc;

pub use bitmap::Bitmap;
pub use column::{Column, ColumnBuilder, ColumnData};
pub use row::{encode_row, fnv1a64, hash_row, RowEncoder, RowKey, FNV_OFFSET_BASIS, FNV_PRIME};
pub(crate) use row::hash_rows;
pub use value::{canonical_f64_bits, cmp_f64, DType, Scalar, Value};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Field {
    pub name: String,
    pub dtype: DType,
}

impl Field {
    pub fn new(name: impl Into<String>, dtype: DType) -> Self {
        Field {
            name: name.into(),
            dtype,
        }
    }
}

/// Ordered list of fields. Names may repeat; position is the identity.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Schema {
    fields: Vec<Field>,
}

impl Schema {
    pub fn new(fields: Vec<Field>) -> Self {
        Schema { fields }
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn field(&self, i: usize) -> &Field {
        &self.fields[i]
    }

    pub fn dtypes(&self) -> Vec<DType> {
        self.fields.iter().map(|f| f.dtype).collect()
    }

    /// True when both schemas have the same dtype sequence, ignoring names.
    pub fn same_types(&self, other: &Schema) -> bool {
        self.fields.len() == other.fields.len()
            && self.fields.iter().zip(&other.fields).all(|(a, b)| a.dtype == b.dtype)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }
}

impl FromIterator<(String, DType)> for Schema {
    fn from_iter<I: IntoIterator<Item = (String, DType)>>(iter: I) -> Self {
        Schema::new(iter.into_iter().map(|(n, d)| Field::new(n, d)).collect())
    }
}

/// An immutable columnar table.
#[derive(Clone)]
pub struct Table {
    schema: Arc<Schema>,
    columns: Vec<Arc<Column>>,
    num_rows: usize,
}

impl Table {
    /// Builds a table, checking that there is at least one column, that the
    /// column count and dtypes match the schema and that all columns have the
    /// same length.
    pub fn try_new(schema: Schema, columns: Vec<Column>) -> Result<Self> {
        Self::from_arcs(Arc::new(schema), columns.into_iter().map(Arc::new).collect())
    }

    pub(crate) fn from_arcs(schema: Arc<Schema>, columns: Vec<Arc<Column>>) -> Result<Self> {
        if schema.is_empty() {
            return Err(Error::InvalidArgument("a table needs at least one column".into()));
        }
        if schema.len() != columns.len() {
            return Err(Error::SchemaMismatch(format!(
                "schema has {} fields but {} columns were given",
                schema.len(),
                columns.len()
            )));
        }
        let num_rows = columns[0].len();
        for (field, col) in schema.fields().iter().zip(&columns) {
            if field.dtype != col.dtype() {
                return Err(Error::SchemaMismatch(format!(
                    "field '{}' is {} but column is {}",
                    field.name,
                    field.dtype,
                    col.dtype()
                )));
            }
            if col.len() != num_rows {
                return Err(Error::LengthMismatch {
                    column: field.name.clone(),
                    expected: num_rows,
                    actual: col.len(),
                });
            }
        }
        Ok(Table {
            schema,
            columns,
            num_rows,
        })
    }

    /// Convenience constructor from `(name, column)` pairs.
    pub fn from_columns<S: Into<String>>(columns: Vec<(S, Column)>) -> Result<Self> {
        let (fields, cols): (Vec<_>, Vec<_>) = columns
            .into_iter()
            .map(|(n, c)| (Field::new(n, c.dtype()), c))
            .unzip();
        Table::try_new(Schema::new(fields), cols)
    }

    /// Zero-row table with the given schema.
    pub fn empty(schema: Schema) -> Result<Self> {
        let cols = schema.fields().iter().map(|f| Column::nulls(f.dtype, 0)).collect();
        Table::try_new(schema, cols)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.num_rows == 0
    }

    pub fn column(&self, i: usize) -> &Column {
        &self.columns[i]
    }

    pub(crate) fn column_arc(&self, i: usize) -> &Arc<Column> {
        &self.columns[i]
    }

    pub fn columns(&self) -> impl Iterator<Item = &Column> {
        self.columns.iter().map(|c| c.as_ref())
    }

    pub fn row(&self, i: usize) -> RowView<'_> {
        assert!(i < self.num_rows, "row {i} out of range ({})", self.num_rows);
        RowView { table: self, row: i }
    }

    pub fn rows(&self) -> impl Iterator<Item = RowView<'_>> {
        (0..self.num_rows).map(move |row| RowView { table: self, row })
    }

    /// Same table with the column names replaced.
    pub fn with_names<S: AsRef<str>>(&self, names: &[S]) -> Result<Table> {
        if names.len() != self.num_columns() {
            return Err(Error::InvalidArgument(format!(
                "{} names for {} columns",
                names.len(),
                self.num_columns()
            )));
        }
        let schema = Schema::new(
            self.schema
                .fields()
                .iter()
                .zip(names)
                .map(|(f, n)| Field::new(n.as_ref(), f.dtype))
                .collect(),
        );
        Table::from_arcs(Arc::new(schema), self.columns.clone())
    }

    pub(crate) fn check_column(&self, i: usize) -> Result<()> {
        if i >= self.num_columns() {
            return Err(Error::IndexOutOfRange {
                what: "column",
                index: i,
                len: self.num_columns(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_columns(&self, cols: &[usize]) -> Result<()> {
        cols.iter().try_for_each(|&c| self.check_column(c))
    }
}

/// Value identity: equal schemas (names and dtypes) and value-identical
/// columns.
impl PartialEq for Table {
    fn eq(&self, other: &Self) -> bool {
        self.num_rows == other.num_rows
            && self.schema == other.schema
            && self.columns.iter().zip(&other.columns).all(|(a, b)| a == b)
    }
}

impl fmt::Debug for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Table[{} rows] {:?}", self.num_rows, self.schema.dtypes())?;
        for r in self.rows().take(20) {
            writeln!(f, "  {r}")?;
        }
        if self.num_rows > 20 {
            writeln!(f, "  ...")?;
        }
        Ok(())
    }
}

/// Borrowed view of one row.
#[derive(Clone, Copy)]
pub struct RowView<'a> {
    table: &'a Table,
    row: usize,
}

impl<'a> RowView<'a> {
    pub fn index(&self) -> usize {
        self.row
    }

    pub fn len(&self) -> usize {
        self.table.num_columns()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell in column `col`. Panics when `col` is out of range.
    pub fn get(&self, col: usize) -> Value<'a> {
        self.table.columns[col].value(self.row)
    }

    pub fn values(&self) -> impl Iterator<Item = Value<'a>> + '_ {
        (0..self.len()).map(move |c| self.get(c))
    }
}

impl fmt::Display for RowView<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for c in 0..self.len() {
            if c > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", self.get(c))?;
        }
        f.write_str(")")
    }
}

/// Row-wise concatenation in list order. All inputs must share a dtype
/// sequence; names are taken from the first table.
pub fn concat(tables: &[Table]) -> Result<Table> {
    let first = tables
        .first()
        .ok_or_else(|| Error::InvalidArgument("concat of zero tables".into()))?;
    for (i, t) in tables.iter().enumerate().skip(1) {
        if !first.schema.same_types(&t.schema) {
            return Err(Error::SchemaMismatch(format!(
                "table {i} has dtypes {:?}, expected {:?}",
                t.schema.dtypes(),
                first.schema.dtypes()
            )));
        }
    }
    let non_empty: Vec<&Table> = tables.iter().filter(|t| t.num_rows > 0).collect();
    match non_empty.len() {
        0 => return Ok(first.clone()),
        1 if non_empty[0].schema == first.schema => {
            return Ok(non_empty[0].clone())
        }
        _ => {}
    }
    let total: usize = non_empty.iter().map(|t| t.num_rows).sum();
    let columns = (0..first.num_columns())
        .map(|c| {
            let mut b = ColumnBuilder::with_capacity(first.schema.field(c).dtype, total);
            non_empty.iter().for_each(|t| b.extend_from(t.column(c)));
            Arc::new(b.finish())
        })
        .collect();
    Table::from_arcs(first.schema.clone(), columns)
}

/// New table whose row `i` is input row `indices[i]`.
pub fn take_rows(table: &Table, indices: &[usize]) -> Result<Table> {
    if let Some(&bad) = indices.iter().find(|&&i| i >= table.num_rows) {
        return Err(Error::IndexOutOfRange {
            what: "row",
            index: bad,
            len: table.num_rows,
        });
    }
    Ok(take_unchecked(table, indices))
}

pub(crate) fn take_unchecked(table: &Table, indices: &[usize]) -> Table {
    let columns = table
        .columns
        .iter()
        .map(|col| Arc::new(take_column(col, indices)))
        .collect();
    Table::from_arcs(table.schema.clone(), columns).expect("take preserves shape")
}

fn take_column(col: &Column, indices: &[usize]) -> Column {
    gather_column(col, indices.len(), indices.iter().map(|&i| Some(i)))
}

/// Copies the rows named by `indices` (`None` gives a null) into a new column.
fn gather_column(col: &Column, len: usize, indices: impl Iterator<Item = Option<usize>>) -> Column {
    fn numeric<T: Copy + Default>(
        v: &[T],
        col: &Column,
        len: usize,
        indices: impl Iterator<Item = Option<usize>>,
        validity: &mut Bitmap,
    ) -> Vec<T> {
        let mut out = Vec::with_capacity(len);
        for idx in indices {
            match idx {
                Some(i) if col.is_valid(i) => {
                    out.push(v[i]);
                    validity.push(true);
                }
                _ => {
                    out.push(T::default());
                    validity.push(false);
                }
            }
        }
        out
    }
    let mut validity = Bitmap::with_capacity(len);
    let data = match col.data() {
        ColumnData::Int64(v) => ColumnData::Int64(numeric(v, col, len, indices, &mut validity)),
        ColumnData::Float64(v) => ColumnData::Float64(numeric(v, col, len, indices, &mut validity)),
        ColumnData::Bool(v) => ColumnData::Bool(numeric(v, col, len, indices, &mut validity)),
        ColumnData::Utf8 { .. } => {
            let mut b = ColumnBuilder::with_capacity(DType::Utf8, len);
            for idx in indices {
                match idx {
                    Some(i) => b.push_from(col, i),
                    None => b.push_null(),
                }
            }
            return b.finish();
        }
    };
    Column::new(data, validity).expect("gather preserves shape")
}

/// Like [`take_rows`], but `None` produces an all-null row. Used for outer
/// join padding.
pub(crate) fn take_optional(table: &Table, indices: &[Option<usize>]) -> Table {
    let columns = table
        .columns
        .iter()
        .map(|col| Arc::new(gather_column(col, indices.len(), indices.iter().copied())))
        .collect();
    Table::from_arcs(table.schema.clone(), columns).expect("take preserves shape")
}

/// Contiguous block `[offset, offset + len)` of rows.
pub fn slice(table: &Table, offset: usize, len: usize) -> Result<Table> {
    let end = offset
        .checked_add(len)
        .filter(|&e| e <= table.num_rows)
        .ok_or(Error::IndexOutOfRange {
            what: "row",
            index: offset.saturating_add(len),
            len: table.num_rows,
        })?;
    let idx: Vec<usize> = (offset..end).collect();
    Ok(take_unchecked(table, &idx))
}

/// Splits a table into `parts` contiguous row blocks whose sizes differ by at
/// most one, larger blocks first.
pub fn split_blocks(table: &Table, parts: usize) -> Result<Vec<Table>> {
    if parts == 0 {
        return Err(Error::InvalidArgument("cannot split into zero blocks".into()));
    }
    let n = table.num_rows;
    let mut offset = 0;
    (0..parts)
        .map(|p| {
            let len = n / parts + usize::from(p < n % parts);
            let block = slice(table, offset, len);
            offset += len;
            block
        })
        .collect()
}

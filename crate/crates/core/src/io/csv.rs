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

//! RFC 4180 style CSV.
//!
//! Quoted fields may contain delimiters, doubled quotes and line breaks;
//! records end with LF or CRLF. An unquoted empty field (or the configured
//! null token) is null. A quoted empty field `""` is the empty string, which
//! is how the writer keeps empty strings apart from nulls.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::thread;

use crate::error::{Error, Result};
use crate::table::{Column, ColumnBuilder, DType, Field, Schema, Table};

#[derive(Clone, Debug)]
pub struct CsvReadOptions {
    pub delimiter: u8,
    pub has_header: bool,
    pub use_threads: bool,
    /// Explicit column types; inferred when `None`.
    pub schema: Option<Vec<DType>>,
    pub infer_rows: usize,
    /// Unquoted text read as null, in addition to the empty field.
    pub null_token: String,
}

impl Default for CsvReadOptions {
    fn default() -> Self {
        CsvReadOptions {
            delimiter: b',',
            has_header: true,
            use_threads: true,
            schema: None,
            infer_rows: 1000,
            null_token: String::new(),
        }
    }
}

impl CsvReadOptions {
    pub fn with_schema(mut self, schema: Vec<DType>) -> Self {
        self.schema = Some(schema);
        self
    }

    pub fn use_threads(mut self, on: bool) -> Self {
        self.use_threads = on;
        self
    }

    fn validate(&self) -> Result<()> {
        if matches!(self.delimiter, b'\r' | b'\n' | b'"') {
            return Err(Error::InvalidArgument(format!(
                "delimiter {:?} is not allowed",
                self.delimiter as char
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct CsvWriteOptions {
    pub delimiter: u8,
    pub write_header: bool,
}

impl Default for CsvWriteOptions {
    fn default() -> Self {
        CsvWriteOptions {
            delimiter: b',',
            write_header: true,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct FieldSpan {
    start: usize,
    end: usize,
    quoted: bool,
}

/// Parsed records, stored flat: all unescaped field bytes in `bytes`.
#[derive(Default)]
struct Records {
    bytes: Vec<u8>,
    fields: Vec<FieldSpan>,
    /// (first field index, source line) per record.
    starts: Vec<(usize, usize)>,
}

impl Records {
    fn len(&self) -> usize {
        self.starts.len()
    }

    fn record(&self, i: usize) -> &[FieldSpan] {
        let start = self.starts[i].0;
        let end = self.starts.get(i + 1).map_or(self.fields.len(), |s| s.0);
        &self.fields[start..end]
    }

    fn line(&self, i: usize) -> usize {
        self.starts[i].1
    }

    fn text(&self, f: &FieldSpan) -> &[u8] {
        &self.bytes[f.start..f.end]
    }
}

fn parse_records(data: &[u8], delim: u8, path: &str) -> Result<Records> {
    let mut rec = Records::default();
    let mut pos = 0;
    let mut line = 1;
    let err = |line: usize, message: &str| Error::Csv {
        path: path.to_owned(),
        line,
        message: message.to_owned(),
    };
    while pos < data.len() {
        rec.starts.push((rec.fields.len(), line));
        loop {
            let start = rec.bytes.len();
            let quoted = data.get(pos) == Some(&b'"');
            if quoted {
                let open_line = line;
                pos += 1;
                loop {
                    let Some(&b) = data.get(pos) else {
                        return Err(err(open_line, "unterminated quoted field"));
                    };
                    if b == b'"' {
                        if data.get(pos + 1) == Some(&b'"') {
                            rec.bytes.push(b'"');
                            pos += 2;
                            continue;
                        }
                        pos += 1;
                        break;
                    }
                    if b == b'\n' {
                        line += 1;
                    }
                    rec.bytes.push(b);
                    pos += 1;
                }
            } else {
                let rest = &data[pos..];
                let n = rest
                    .iter()
                    .position(|&b| b == delim || b == b'\n' || b == b'\r')
                    .unwrap_or(rest.len());
                rec.bytes.extend_from_slice(&rest[..n]);
                pos += n;
                // A lone CR (not followed by LF) is field content.
                while data.get(pos) == Some(&b'\r') && data.get(pos + 1) != Some(&b'\n') && pos + 1 < data.len() {
                    rec.bytes.push(b'\r');
                    pos += 1;
                    let rest = &data[pos..];
                    let n = rest
                        .iter()
                        .position(|&b| b == delim || b == b'\n' || b == b'\r')
                        .unwrap_or(rest.len());
                    rec.bytes.extend_from_slice(&rest[..n]);
                    pos += n;
                }
            }
            rec.fields.push(FieldSpan {
                start,
                end: rec.bytes.len(),
                quoted,
            });
            match data.get(pos) {
                None => break,
                Some(&b) if b == delim => pos += 1,
                Some(b'\n') => {
                    pos += 1;
                    line += 1;
                    break;
                }
                Some(b'\r') => {
                    pos += if data.get(pos + 1) == Some(&b'\n') { 2 } else { 1 };
                    line += 1;
                    break;
                }
                Some(_) => return Err(err(line, "unexpected character after closing quote")),
            }
        }
    }
    Ok(rec)
}

fn is_null(f: &FieldSpan, text: &[u8], null_token: &str) -> bool {
    !f.quoted && (text.is_empty() || (!null_token.is_empty() && text == null_token.as_bytes()))
}

fn parse_bool(s: &str) -> Option<bool> {
    if s.eq_ignore_ascii_case("true") {
        Some(true)
    } else if s.eq_ignore_ascii_case("false") {
        Some(false)
    } else {
        None
    }
}

fn infer_dtype<'a>(values: impl Iterator<Item = &'a str> + Clone) -> DType {
    let mut vals = values.peekable();
    if vals.peek().is_none() {
        return DType::Utf8;
    }
    if vals.clone().all(|v| v.trim().parse::<i64>().is_ok()) {
        DType::Int64
    } else if vals.clone().all(|v| v.trim().parse::<f64>().is_ok()) {
        DType::Float64
    } else if vals.all(|v| parse_bool(v.trim()).is_some()) {
        DType::Bool
    } else {
        DType::Utf8
    }
}

/// Reads one CSV file into a table.
pub fn read_csv(path: impl AsRef<Path>, opts: &CsvReadOptions) -> Result<Table> {
    opts.validate()?;
    let path = path.as_ref();
    let display = path.display().to_string();
    let data = fs::read(path).map_err(|e| Error::Csv {
        path: display.clone(),
        line: 0,
        message: format!("cannot read file: {e}"),
    })?;
    parse_table(&data, opts, &display)
}

/// Parses CSV text held in memory. `source` names it in error messages.
pub fn parse_table(data: &[u8], opts: &CsvReadOptions, source: &str) -> Result<Table> {
    opts.validate()?;
    let rec = parse_records(data, opts.delimiter, source)?;
    let csv_err = |line: usize, message: String| Error::Csv {
        path: source.to_owned(),
        line,
        message,
    };
    fn utf8<'b>(bytes: &'b [u8], line: usize, source: &str) -> Result<&'b str> {
        std::str::from_utf8(bytes).map_err(|_| Error::Csv {
            path: source.to_owned(),
            line,
            message: "field is not valid UTF-8".into(),
        })
    }

    let first_data = usize::from(opts.has_header && rec.len() > 0);
    let width = if opts.has_header && rec.len() > 0 {
        rec.record(0).len()
    } else if let Some(s) = &opts.schema {
        s.len()
    } else if rec.len() > 0 {
        rec.record(0).len()
    } else {
        return Err(csv_err(0, "empty file without header or schema".into()));
    };
    if let Some(s) = &opts.schema {
        if s.len() != width {
            return Err(csv_err(
                1,
                format!("schema has {} columns but the file has {width}", s.len()),
            ));
        }
    }
    for i in first_data..rec.len() {
        let got = rec.record(i).len();
        if got != width {
            return Err(csv_err(rec.line(i), format!("expected {width} fields, found {got}")));
        }
    }

    let names: Vec<String> = if opts.has_header && rec.len() > 0 {
        rec.record(0)
            .iter()
            .map(|f| utf8(rec.text(f), 1, source).map(str::to_owned))
            .collect::<Result<_>>()?
    } else {
        (0..width).map(|c| format!("c{c}")).collect()
    };

    let dtypes: Vec<DType> = match &opts.schema {
        Some(s) => s.clone(),
        None => {
            let sample_end = rec.len().min(first_data.saturating_add(opts.infer_rows));
            (0..width)
                .map(|c| {
                    let mut samples = Vec::new();
                    for i in first_data..sample_end {
                        let f = &rec.record(i)[c];
                        let text = rec.text(f);
                        if !is_null(f, text, &opts.null_token) {
                            samples.push(utf8(text, rec.line(i), source)?);
                        }
                    }
                    Ok(infer_dtype(samples.iter().copied()))
                })
                .collect::<Result<_>>()?
        }
    };

    let nrows = rec.len() - first_data;
    let mut builders: Vec<ColumnBuilder> = dtypes.iter().map(|&d| ColumnBuilder::with_capacity(d, nrows)).collect();
    for i in first_data..rec.len() {
        let line = rec.line(i);
        for (c, (f, b)) in rec.record(i).iter().zip(builders.iter_mut()).enumerate() {
            let text = rec.text(f);
            let dtype = b.dtype();
            if is_null(f, text, &opts.null_token) || (dtype != DType::Utf8 && text.is_empty()) {
                b.push_null();
                continue;
            }
            let s = utf8(text, line, source)?;
            let bad = || csv_err(line, format!("column {c} ({}): cannot parse {s:?} as {dtype}", names[c]));
            match dtype {
                DType::Int64 => b.push_i64(s.trim().parse().map_err(|_| bad())?),
                DType::Float64 => b.push_f64(s.trim().parse().map_err(|_| bad())?),
                DType::Bool => b.push_bool(parse_bool(s.trim()).ok_or_else(bad)?),
                DType::Utf8 => b.push_str(s),
            }
        }
    }
    let fields = names.into_iter().zip(&dtypes).map(|(n, &d)| Field::new(n, d)).collect();
    let columns: Vec<Column> = builders.into_iter().map(ColumnBuilder::finish).collect();
    Table::try_new(Schema::new(fields), columns)
}

/// Reads several files, one table per path in order. Files are parsed on
/// separate threads when `use_threads` is set. Fails with the error of the
/// first failing path.
pub fn read_csv_many<P: AsRef<Path> + Sync>(paths: &[P], opts: &CsvReadOptions) -> Result<Vec<Table>> {
    if !opts.use_threads || paths.len() <= 1 {
        return paths.iter().map(|p| read_csv(p, opts)).collect();
    }
    let results: Vec<Result<Table>> = thread::scope(|scope| {
        let handles: Vec<_> = paths.iter().map(|p| scope.spawn(move || read_csv(p, opts))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("csv reader thread panicked"))
            .collect()
    });
    results.into_iter().collect()
}

/// Formats a float so that parsing it back yields the same bits, and so that
/// it always reads as a float (integral values keep a `.0`).
pub(crate) fn format_f64(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "NaN".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let abs = v.abs();
    let s = if abs != 0.0 && !(1e-5..1e16).contains(&abs) {
        format!("{v:e}")
    } else {
        format!("{v}")
    };
    if s.contains(['.', 'e']) {
        s
    } else {
        s + ".0"
    }
}

fn write_text(out: &mut impl Write, s: &str, delim: u8, always_quote_empty: bool) -> std::io::Result<()> {
    let needs_quotes = (always_quote_empty && s.is_empty())
        || s.bytes().any(|b| b == delim || b == b'"' || b == b'\n' || b == b'\r');
    if needs_quotes {
        out.write_all(b"\"")?;
        out.write_all(s.replace('"', "\"\"").as_bytes())?;
        out.write_all(b"\"")
    } else {
        out.write_all(s.as_bytes())
    }
}

/// Writes a table as CSV with LF line endings. Nulls are empty fields and
/// empty strings are written as `""`.
pub fn write_csv(table: &Table, path: impl AsRef<Path>, opts: &CsvWriteOptions) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut out = BufWriter::with_capacity(1 << 16, file);
    write_csv_to(table, &mut out, opts)?;
    out.flush()?;
    Ok(())
}

pub fn write_csv_to(table: &Table, out: &mut impl Write, opts: &CsvWriteOptions) -> Result<()> {
    let d = opts.delimiter;
    if opts.write_header {
        for (i, f) in table.schema().fields().iter().enumerate() {
            if i > 0 {
                out.write_all(&[d])?;
            }
            write_text(out, &f.name, d, table.num_columns() == 1)?;
        }
        out.write_all(b"\n")?;
    }
    let mut itoa = String::new();
    for row in 0..table.num_rows() {
        for (c, col) in table.columns().enumerate() {
            if c > 0 {
                out.write_all(&[d])?;
            }
            if !col.is_valid(row) {
                continue;
            }
            itoa.clear();
            match col.dtype() {
                DType::Int64 => {
                    use std::fmt::Write as _;
                    let _ = write!(itoa, "{}", col.i64_values().unwrap()[row]);
                    out.write_all(itoa.as_bytes())?;
                }
                DType::Float64 => out.write_all(format_f64(col.f64_values().unwrap()[row]).as_bytes())?,
                DType::Bool => {
                    let v = matches!(col.value(row), crate::table::Value::Bool(true));
                    out.write_all(if v { b"true" } else { b"false" })?;
                }
                DType::Utf8 => write_text(out, col.str_at(row), d, true)?,
            }
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

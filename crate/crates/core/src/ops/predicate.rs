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

//! Row filters for `select`.
//!
//! A predicate is either a host closure over a [`RowView`] or an expression
//! tree of column/literal comparisons. Comparisons against a null cell (or a
//! null literal) evaluate to `false`, and `Not` simply negates, so
//! `Not(col > 1)` is `true` for a null cell. This collapses SQL's three-valued
//! logic to two values.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::table::{cmp_f64, DType, RowView, Scalar, Schema, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    fn accepts(self, ord: Ordering) -> bool {
        match self {
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::Ne => ord != Ordering::Equal,
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::Le => ord != Ordering::Greater,
            CmpOp::Gt => ord == Ordering::Greater,
            CmpOp::Ge => ord != Ordering::Less,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

pub type RowFn = Arc<dyn Fn(&RowView<'_>) -> std::result::Result<bool, String> + Send + Sync>;

#[derive(Clone)]
pub enum Predicate {
    Const(bool),
    Compare {
        column: usize,
        op: CmpOp,
        literal: Scalar,
    },
    And(Box<Predicate>, Box<Predicate>),
    Or(Box<Predicate>, Box<Predicate>),
    Not(Box<Predicate>),
    Func(RowFn),
}

impl Predicate {
    pub fn compare(column: usize, op: CmpOp, literal: impl Into<Scalar>) -> Self {
        Predicate::Compare {
            column,
            op,
            literal: literal.into(),
        }
    }

    /// Wraps a closure. An `Err` aborts the `select` call.
    pub fn func<F>(f: F) -> Self
    where
        F: Fn(&RowView<'_>) -> std::result::Result<bool, String> + Send + Sync + 'static,
    {
        Predicate::Func(Arc::new(f))
    }

    pub fn and(self, other: Predicate) -> Self {
        Predicate::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Predicate) -> Self {
        Predicate::Or(Box::new(self), Box::new(other))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        Predicate::Not(Box::new(self))
    }

    /// Checks column references and literal types against a schema.
    pub fn validate(&self, schema: &Schema) -> Result<()> {
        match self {
            Predicate::Const(_) | Predicate::Func(_) => Ok(()),
            Predicate::Compare {
                column, literal, ..
            } => {
                if *column >= schema.len() {
                    return Err(Error::IndexOutOfRange {
                        what: "predicate column",
                        index: *column,
                        len: schema.len(),
                    });
                }
                let col_type = schema.field(*column).dtype;
                let compatible = match literal.dtype() {
                    None => true,
                    Some(lit) => lit == col_type || (is_numeric(lit) && is_numeric(col_type)),
                };
                if compatible {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument(format!(
                        "cannot compare {col_type} column {column} with {literal:?}"
                    )))
                }
            }
            Predicate::And(a, b) | Predicate::Or(a, b) => {
                a.validate(schema)?;
                b.validate(schema)
            }
            Predicate::Not(a) => a.validate(schema),
        }
    }

    pub fn evaluate(&self, row: &RowView<'_>) -> Result<bool> {
        Ok(match self {
            Predicate::Const(b) => *b,
            Predicate::Compare {
                column,
                op,
                literal,
            } => match compare_values(row.get(*column), literal.as_value()) {
                Some(ord) => op.accepts(ord),
                None => false,
            },
            Predicate::And(a, b) => a.evaluate(row)? && b.evaluate(row)?,
            Predicate::Or(a, b) => a.evaluate(row)? || b.evaluate(row)?,
            Predicate::Not(a) => !a.evaluate(row)?,
            Predicate::Func(f) => f(row).map_err(Error::Predicate)?,
        })
    }

    /// Columns referenced by comparison nodes. `None` when the tree contains
    /// a closure, whose accesses are unknown.
    pub fn referenced_columns(&self) -> Option<Vec<usize>> {
        let mut out = Vec::new();
        self.collect_columns(&mut out).then_some(out)
    }

    fn collect_columns(&self, out: &mut Vec<usize>) -> bool {
        match self {
            Predicate::Const(_) => true,
            Predicate::Compare { column, .. } => {
                out.push(*column);
                true
            }
            Predicate::And(a, b) | Predicate::Or(a, b) => a.collect_columns(out) && b.collect_columns(out),
            Predicate::Not(a) => a.collect_columns(out),
            Predicate::Func(_) => false,
        }
    }

    /// Rewrites column references through `mapping` (old index -> new index).
    pub fn remap_columns(&self, mapping: &dyn Fn(usize) -> usize) -> Predicate {
        match self {
            Predicate::Compare {
                column,
                op,
                literal,
            } => Predicate::Compare {
                column: mapping(*column),
                op: *op,
                literal: literal.clone(),
            },
            Predicate::And(a, b) => a.remap_columns(mapping).and(b.remap_columns(mapping)),
            Predicate::Or(a, b) => a.remap_columns(mapping).or(b.remap_columns(mapping)),
            Predicate::Not(a) => a.remap_columns(mapping).not(),
            other => other.clone(),
        }
    }

    /// Parses a filter expression such as `c1 > 0.5 and not (name == "x")`.
    ///
    /// Columns are written `c<index>`, `#<index>` or by field name. Literals
    /// are integers, floats, quoted strings, `true`, `false` or `null`.
    /// Integer literals compared with a float column are widened.
    pub fn parse(expr: &str, schema: &Schema) -> Result<Predicate> {
        let tokens = tokenize(expr)?;
        let mut p = Parser {
            tokens,
            pos: 0,
            schema,
        };
        let pred = p.parse_or()?;
        if p.pos != p.tokens.len() {
            return Err(Error::InvalidArgument(format!(
                "unexpected token {:?} in predicate",
                p.tokens[p.pos]
            )));
        }
        pred.validate(schema)?;
        Ok(pred)
    }
}

impl fmt::Debug for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Const(b) => write!(f, "{b}"),
            Predicate::Compare {
                column,
                op,
                literal,
            } => write!(f, "c{column} {} {literal:?}", op.symbol()),
            Predicate::And(a, b) => write!(f, "({a:?} and {b:?})"),
            Predicate::Or(a, b) => write!(f, "({a:?} or {b:?})"),
            Predicate::Not(a) => write!(f, "not {a:?}"),
            Predicate::Func(_) => f.write_str("<fn>"),
        }
    }
}

fn is_numeric(d: DType) -> bool {
    matches!(d, DType::Int64 | DType::Float64)
}

fn compare_values(cell: Value<'_>, lit: Value<'_>) -> Option<Ordering> {
    match (cell, lit) {
        (Value::Null, _) | (_, Value::Null) => None,
        (Value::Int64(a), Value::Float64(b)) => Some(cmp_f64(a as f64, b)),
        (Value::Float64(a), Value::Int64(b)) => Some(cmp_f64(a, b as f64)),
        (a, b) if a.dtype() == b.dtype() => Some(a.canonical_cmp(&b)),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    Op(CmpOp),
    LParen,
    RParen,
}

fn tokenize(s: &str) -> Result<Vec<Token>> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |m: String| Error::InvalidArgument(format!("predicate: {m}"));
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'(' => {
                out.push(Token::LParen);
                i += 1;
            }
            b')' => {
                out.push(Token::RParen);
                i += 1;
            }
            b'=' | b'!' | b'<' | b'>' => {
                let two = bytes.get(i + 1) == Some(&b'=');
                let op = match (c, two) {
                    (b'=', true) => CmpOp::Eq,
                    (b'=', false) => CmpOp::Eq,
                    (b'!', true) => CmpOp::Ne,
                    (b'<', true) => CmpOp::Le,
                    (b'<', false) => CmpOp::Lt,
                    (b'>', true) => CmpOp::Ge,
                    (b'>', false) => CmpOp::Gt,
                    _ => return Err(err(format!("bad operator at byte {i}"))),
                };
                out.push(Token::Op(op));
                i += if two { 2 } else { 1 };
            }
            b'"' | b'\'' => {
                let quote = c;
                let mut value = String::new();
                i += 1;
                loop {
                    let Some(&b) = bytes.get(i) else {
                        return Err(err("unterminated string".into()));
                    };
                    if b == quote {
                        if bytes.get(i + 1) == Some(&quote) {
                            value.push(quote as char);
                            i += 2;
                            continue;
                        }
                        i += 1;
                        break;
                    }
                    let ch = s[i..].chars().next().unwrap();
                    value.push(ch);
                    i += ch.len_utf8();
                }
                out.push(Token::Str(value));
            }
            b'0'..=b'9' | b'-' | b'+' | b'.' => {
                let start = i;
                i += 1;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || matches!(bytes[i], b'.' | b'-' | b'+'))
                {
                    i += 1;
                }
                let text = &s[start..i];
                if let Ok(v) = text.parse::<i64>() {
                    out.push(Token::Int(v));
                } else if let Ok(v) = text.parse::<f64>() {
                    out.push(Token::Float(v));
                } else {
                    return Err(err(format!("bad number '{text}'")));
                }
            }
            _ if c.is_ascii_alphabetic() || c == b'_' || c == b'#' => {
                let start = i;
                i += 1;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token::Ident(s[start..i].to_owned()));
            }
            _ => return Err(err(format!("unexpected character at byte {i}"))),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    schema: &'a Schema,
}

impl Parser<'_> {
    fn peek_keyword(&self, kw: &str) -> bool {
        matches!(self.tokens.get(self.pos), Some(Token::Ident(s)) if s.eq_ignore_ascii_case(kw))
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn parse_or(&mut self) -> Result<Predicate> {
        let mut left = self.parse_and()?;
        while self.peek_keyword("or") {
            self.pos += 1;
            left = left.or(self.parse_and()?);
        }
        Ok(left)
    }

    fn parse_and(&mut self) -> Result<Predicate> {
        let mut left = self.parse_unary()?;
        while self.peek_keyword("and") {
            self.pos += 1;
            left = left.and(self.parse_unary()?);
        }
        Ok(left)
    }

    fn parse_unary(&mut self) -> Result<Predicate> {
        if self.peek_keyword("not") {
            self.pos += 1;
            return Ok(self.parse_unary()?.not());
        }
        if self.peek_keyword("true") {
            self.pos += 1;
            return Ok(Predicate::Const(true));
        }
        if self.peek_keyword("false") {
            self.pos += 1;
            return Ok(Predicate::Const(false));
        }
        match self.next() {
            Some(Token::LParen) => {
                let inner = self.parse_or()?;
                match self.next() {
                    Some(Token::RParen) => Ok(inner),
                    _ => Err(Error::InvalidArgument("predicate: expected ')'".into())),
                }
            }
            Some(Token::Ident(name)) => {
                let column = self.resolve_column(&name)?;
                let op = match self.next() {
                    Some(Token::Op(op)) => op,
                    t => {
                        return Err(Error::InvalidArgument(format!(
                            "predicate: expected comparison after '{name}', found {t:?}"
                        )))
                    }
                };
                let literal = self.parse_literal(column)?;
                Ok(Predicate::Compare {
                    column,
                    op,
                    literal,
                })
            }
            t => Err(Error::InvalidArgument(format!("predicate: unexpected {t:?}"))),
        }
    }

    fn resolve_column(&self, name: &str) -> Result<usize> {
        if let Some(i) = self.schema.index_of(name) {
            return Ok(i);
        }
        let digits = name.strip_prefix('#').or_else(|| name.strip_prefix('c'));
        digits
            .and_then(|d| d.parse::<usize>().ok())
            .ok_or_else(|| Error::InvalidArgument(format!("predicate: unknown column '{name}'")))
    }

    fn parse_literal(&mut self, column: usize) -> Result<Scalar> {
        let col_type = self.schema.fields().get(column).map(|f| f.dtype);
        match self.next() {
            Some(Token::Int(v)) if col_type == Some(DType::Float64) => Ok(Scalar::Float64(v as f64)),
            Some(Token::Int(v)) => Ok(Scalar::Int64(v)),
            Some(Token::Float(v)) => Ok(Scalar::Float64(v)),
            Some(Token::Str(s)) => Ok(Scalar::Utf8(s)),
            Some(Token::Ident(s)) if s.eq_ignore_ascii_case("true") => Ok(Scalar::Bool(true)),
            Some(Token::Ident(s)) if s.eq_ignore_ascii_case("false") => Ok(Scalar::Bool(false)),
            Some(Token::Ident(s)) if s.eq_ignore_ascii_case("null") => Ok(Scalar::Null),
            t => Err(Error::InvalidArgument(format!("predicate: expected literal, found {t:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{Column, Table};

    fn table() -> Table {
        Table::from_columns(vec![
            ("id", Column::from_opt_i64(&[Some(1), None, Some(3)])),
            ("x", Column::from_f64(vec![0.25, 0.75, f64::NAN])),
            ("s", Column::from_strs(&["a", "b", "c"])),
        ])
        .unwrap()
    }

    fn eval(p: &Predicate, t: &Table) -> Vec<bool> {
        t.rows().map(|r| p.evaluate(&r).unwrap()).collect()
    }

    #[test]
    fn null_comparisons_are_false_and_not_flips() {
        let t = table();
        let p = Predicate::compare(0, CmpOp::Gt, 0i64);
        assert_eq!(eval(&p, &t), vec![true, false, true]);
        assert_eq!(eval(&p.not(), &t), vec![false, true, false]);
        let null_lit = Predicate::compare(0, CmpOp::Eq, Scalar::Null);
        assert_eq!(eval(&null_lit, &t), vec![false; 3]);
    }

    #[test]
    fn nan_is_greatest() {
        let t = table();
        let p = Predicate::compare(1, CmpOp::Gt, 0.5);
        assert_eq!(eval(&p, &t), vec![false, true, true]);
    }

    #[test]
    fn parse_expressions() {
        let t = table();
        let p = Predicate::parse("x > 0.5 and not (s == 'c')", t.schema()).unwrap();
        assert_eq!(eval(&p, &t), vec![false, true, false]);
        let p = Predicate::parse("c0 <= 1 or #2 = \"c\"", t.schema()).unwrap();
        assert_eq!(eval(&p, &t), vec![true, false, true]);
        let p = Predicate::parse("x >= 1", t.schema()).unwrap();
        assert!(matches!(p, Predicate::Compare { literal: Scalar::Float64(_), .. }));
        assert_eq!(eval(&Predicate::parse("false", t.schema()).unwrap(), &t), vec![false; 3]);
    }

    #[test]
    fn parse_errors() {
        let t = table();
        assert!(Predicate::parse("c9 > 1", t.schema()).is_err());
        assert!(Predicate::parse("s > 1", t.schema()).is_err());
        assert!(Predicate::parse("(x > 1", t.schema()).is_err());
        assert!(Predicate::parse("x > 1 extra", t.schema()).is_err());
        assert!(Predicate::parse("'open", t.schema()).is_err());
    }

    #[test]
    fn closure_errors_surface() {
        let t = table();
        let p = Predicate::func(|r| if r.index() == 1 { Err("boom".into()) } else { Ok(true) });
        let results: Vec<_> = t.rows().map(|r| p.evaluate(&r)).collect();
        assert!(results[0].is_ok());
        assert!(matches!(results[1], Err(Error::Predicate(_))));
    }
}

//! CSV and JSON plumbing shared by the serializable result types.
//!
//! Numbers are written in the shortest representation that parses back to
//! the same value, so identical inputs give byte-identical files and every
//! file reads back losslessly. Lines starting with `#` are comments.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Shortest round-trip decimal form.
pub fn fmt_num<T: Real>(x: T) -> String {
    format!("{x:?}")
}

pub fn parse_num<T: Real>(s: &str) -> Result<T> {
    s.trim()
        .parse::<T>()
        .map_err(|_| Error::Parse(format!("not a number: `{s}`")))
}

/// Header plus rows of already-formatted cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_to<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_path(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Reads a table, checking that the header is exactly `expected`.
    pub fn read_from<R: Read>(input: R, expected: &[&str]) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .has_headers(true)
            .from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(|s| s.to_string()).collect();
        if header != expected {
            return Err(Error::Parse(format!(
                "unexpected columns {header:?}, expected {expected:?}"
            )));
        }
        let mut table = Table {
            header,
            rows: Vec::new(),
        };
        for rec in r.records() {
            table
                .rows
                .push(rec?.iter().map(|s| s.to_string()).collect());
        }
        Ok(table)
    }

    pub fn read_path(path: impl AsRef<Path>, expected: &[&str]) -> Result<Self> {
        Self::read_from(File::open(path)?, expected)
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<V: Serialize + ?Sized>(path: impl AsRef<Path>, value: &V) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn numbers_round_trip_f64(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            prop_assert_eq!(parse_num::<f64>(&fmt_num(x)).unwrap().to_bits(), x.to_bits());
        }

        #[test]
        fn numbers_round_trip_f32(x in proptest::num::f32::NORMAL | proptest::num::f32::ZERO) {
            prop_assert_eq!(parse_num::<f32>(&fmt_num(x)).unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn table_round_trip_skips_comments() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1.0".into(), "-2e-7".into()]);
        let s = format!("# generated\n{}", t.to_csv_string().unwrap());
        let back = Table::read_from(s.as_bytes(), &["a", "b"]).unwrap();
        assert_eq!(back, t);
        assert!(Table::read_from(s.as_bytes(), &["a", "c"]).is_err());
    }
}

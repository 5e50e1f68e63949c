//! Versioned CSV tables: a `# schema=<name>/<version>` line, a header row,
//! then RFC 4180 records with LF line endings.

use super::ExperimentError;
use std::fs;
use std::path::Path;

pub const SCHEMA_PREFIX: &str = "# schema=";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    pub schema: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Shortest text that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

impl Table {
    pub fn new<S: Into<String>>(schema: &str, header: impl IntoIterator<Item = S>) -> Self {
        Table { schema: schema.to_string(), header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width for {}", self.schema);
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("{SCHEMA_PREFIX}{}\n", self.schema).into_bytes();
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        out.extend(w.into_inner().expect("in-memory flush"));
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), ExperimentError> {
        fs::write(path, self.to_bytes()).map_err(|e| ExperimentError::io(path, e))
    }

    /// Reads a table, checking that its schema is `schema`.
    pub fn read(path: &Path, schema: &str) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
        let (first, body) = text.split_once('\n').unwrap_or((&text, ""));
        let found = first.strip_prefix(SCHEMA_PREFIX).unwrap_or("");
        if found != schema {
            return Err(ExperimentError::Schema {
                path: path.display().to_string(),
                expected: schema.to_string(),
                found: found.to_string(),
            });
        }
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
        let bad = |e: csv::Error| ExperimentError::Parse { path: path.display().to_string(), message: e.to_string() };
        let header = r.headers().map_err(bad)?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec.map_err(bad)?.iter().map(str::to_string).collect());
        }
        Ok(Table { schema: schema.to_string(), header, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize, ExperimentError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ExperimentError::MissingColumn { schema: self.schema.clone(), column: name.to_string() })
    }

    /// Parses cell `(row, col)`.
    pub fn parse<T: std::str::FromStr>(&self, row: usize, col: usize) -> Result<T, ExperimentError> {
        let cell = &self.rows[row][col];
        cell.parse().map_err(|_| ExperimentError::Parse {
            path: self.schema.clone(),
            message: format!("row {}, column {}: cannot parse {cell:?}", row + 1, self.header[col]),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 1e300, -0.0, f64::INFINITY, f64::NEG_INFINITY, 5e-324] {
            assert_eq!(num(v).parse::<f64>().unwrap().to_bits(), v.to_bits(), "{v}");
        }
        assert!(num(f64::NAN).parse::<f64>().unwrap().is_nan());
    }

    #[test]
    fn layout_and_quoting() {
        let mut t = Table::new("demo/1", ["a", "b"]);
        t.push(vec!["add(x, 1.0)".into(), num(0.5)]);
        assert_eq!(String::from_utf8(t.to_bytes()).unwrap(), "# schema=demo/1\na,b\n\"add(x, 1.0)\",0.5\n");
    }

    #[test]
    fn read_back_and_schema_check() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let mut t = Table::new("demo/1", ["a", "b"]);
        t.push(vec!["say \"hi\", twice".into(), "2".into()]);
        t.write(&p).unwrap();
        let back = Table::read(&p, "demo/1").unwrap();
        assert_eq!(back, t);
        assert_eq!(back.parse::<u32>(0, back.column("b").unwrap()).unwrap(), 2);
        assert!(matches!(Table::read(&p, "demo/2"), Err(ExperimentError::Schema { .. })));
        assert!(matches!(back.column("c"), Err(ExperimentError::MissingColumn { .. })));
    }
}

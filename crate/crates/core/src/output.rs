//! Plot-ready tables in CSV or JSON-lines form.
//!
//! Numbers are written in shortest round-trip form so identical inputs give
//! byte-identical files.

use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::fcs::{FcsResult, SweepRow};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format!("{}", x),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x).map(Value::Number).unwrap_or(Value::Null),
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    JsonLines,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::JsonLines => "jsonl",
        }
    }
}

/// A table with a fixed header; every row has one cell per column.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputTable {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl OutputTable {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Shape(format!("row has {} cells, header has {}", row.len(), self.columns.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn write_to(&self, w: impl Write, format: Format) -> Result<()> {
        match format {
            Format::Csv => {
                let mut out = csv::Writer::from_writer(w);
                out.write_record(&self.columns)?;
                for row in &self.rows {
                    out.write_record(row.iter().map(Cell::render))?;
                }
                out.flush()?;
            }
            Format::JsonLines => {
                let mut w = std::io::BufWriter::new(w);
                for row in &self.rows {
                    let obj: Map<String, Value> = self.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                    writeln!(w, "{}", Value::Object(obj))?;
                }
                w.flush()?;
            }
        }
        Ok(())
    }

    pub fn write(&self, path: &Path, format: Format) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {}", path.display(), e)))?;
        self.write_to(f, format)
    }

    pub fn to_string(&self, format: Format) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf, format).expect("in-memory write");
        String::from_utf8(buf).expect("utf-8 output")
    }
}

fn num<R: Real>(x: R) -> Cell {
    Cell::Num(x.as_f64())
}

/// `location,weight,which`.
pub fn measure_table<R: Real>(system: &FcsResult<R>, reservoir: &FcsResult<R>) -> OutputTable {
    let mut t = OutputTable::new(&["location", "weight", "which"]);
    for (which, r) in [("system", system), ("reservoir", reservoir)] {
        for a in r.measure.atoms() {
            t.push(vec![num(a.location), num(a.weight), Cell::Text(which.into())]).expect("arity");
        }
    }
    t
}

/// `gamma,re,im,source`.
pub fn char_table<R: Real>(sources: &[(&str, &[(R, crate::scalar::Cx<R>)])]) -> OutputTable {
    let mut t = OutputTable::new(&["gamma", "re", "im", "source"]);
    for (name, samples) in sources {
        for (g, z) in samples.iter() {
            t.push(vec![num(*g), num(z.re), num(z.im), Cell::Text(name.to_string())]).expect("arity");
        }
    }
    t
}

/// `lambda,t,distance,mean_R,mean_S,m2,m3,m4`.
pub fn sweep_table<R: Real>(rows: &[SweepRow<R>]) -> OutputTable {
    let mut t = OutputTable::new(&["lambda", "t", "distance", "mean_R", "mean_S", "m2", "m3", "m4"]);
    for r in rows {
        t.push(vec![
            num(r.lambda),
            num(r.t),
            num(r.distance),
            num(r.mean_r),
            num(r.mean_s),
            num(r.moments[1]),
            num(r.moments[2]),
            num(r.moments[3]),
        ])
        .expect("arity");
    }
    t
}

/// Writes pretty JSON with a trailing newline.
pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::Io(format!("{}: {}", path.display(), e)))
}

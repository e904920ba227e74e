use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Provenance written at the top of every output.
#[derive(Debug, Clone)]
pub struct Header {
    pub command: &'static str,
    pub seed: u64,
    pub params: Vec<(String, String)>,
}

impl Header {
    pub fn new(command: &'static str, seed: u64) -> Self {
        Self { command, seed, params: Vec::new() }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    pub fn csv_lines(&self) -> String {
        let mut s = format!("# eln {} {} seed={}\n", env!("CARGO_PKG_VERSION"), self.command, self.seed);
        if !self.params.is_empty() {
            let kv: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            s.push_str(&format!("# params {}\n", kv.join(" ")));
        }
        s
    }

    pub fn json(&self) -> Value {
        let params: Map<String, Value> = self.params.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
        json!({
            "tool": "eln",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "seed": self.seed,
            "params": params,
        })
    }
}

pub fn open(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// A header plus a rectangular table, as commented CSV or as JSON records.
pub fn write_table(out: &mut dyn Write, header: &Header, format: Format, columns: &[&str], rows: &[Vec<Value>]) -> Result<()> {
    match format {
        Format::Csv => {
            out.write_all(header.csv_lines().as_bytes())?;
            writeln!(out, "{}", columns.join(","))?;
            for row in rows {
                let cells: Vec<String> = row.iter().map(cell).collect();
                writeln!(out, "{}", cells.join(","))?;
            }
        }
        Format::Json => {
            let records: Vec<Value> = rows
                .iter()
                .map(|r| Value::Object(columns.iter().map(|c| c.to_string()).zip(r.iter().cloned()).collect()))
                .collect();
            let doc = json!({ "meta": header.json(), "rows": records });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// A header plus one JSON object (CSV renders it as a two-column key/value table).
pub fn write_record(out: &mut dyn Write, header: &Header, format: Format, record: Map<String, Value>) -> Result<()> {
    match format {
        Format::Json => {
            let mut doc = Map::new();
            doc.insert("meta".into(), header.json());
            doc.extend(record);
            writeln!(out, "{}", serde_json::to_string_pretty(&Value::Object(doc))?)?;
        }
        Format::Csv => {
            out.write_all(header.csv_lines().as_bytes())?;
            writeln!(out, "key,value")?;
            for (k, v) in &record {
                writeln!(out, "{k},{}", cell(v))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

use std::io::Write;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::Format;
use crate::error::CliError;

pub type Row = Map<String, Value>;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_hash: String,
    pub task: String,
    pub rows: Vec<Row>,
}

impl Report {
    pub fn new(task: &str, config_hash: String, rows: Vec<Row>) -> Self {
        Self { tool: "fmoments", version: fourier_moments::VERSION, config_hash, task: task.into(), rows }
    }

    pub fn write<W: Write>(&self, w: W, format: Format) -> Result<(), CliError> {
        match format {
            Format::Json => self.write_json(w),
            Format::Csv => self.write_csv(w),
        }
    }

    fn write_json<W: Write>(&self, mut w: W) -> Result<(), CliError> {
        serde_json::to_writer_pretty(&mut w, self).map_err(|e| CliError::Io(e.to_string()))?;
        writeln!(w).map_err(io)
    }

    /// One line per row; nested values are embedded as JSON text.
    fn write_csv<W: Write>(&self, w: W) -> Result<(), CliError> {
        let mut keys: Vec<&str> = Vec::new();
        for row in &self.rows {
            for k in row.keys() {
                if !keys.contains(&k.as_str()) {
                    keys.push(k);
                }
            }
        }
        let mut wr = csv::Writer::from_writer(w);
        let header = ["version", "config_hash", "task"].into_iter().chain(keys.iter().copied());
        wr.write_record(header).map_err(csv_err)?;
        for row in &self.rows {
            let mut rec = vec![self.version.to_string(), self.config_hash.clone(), self.task.clone()];
            rec.extend(keys.iter().map(|k| cell(row.get(*k))));
            wr.write_record(&rec).map_err(csv_err)?;
        }
        wr.flush().map_err(io)
    }
}

fn cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(v) => v.to_string(),
    }
}

fn io(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// Build a row from `key => value` pairs, keeping their order.
#[macro_export]
macro_rules! row {
    ($($k:expr => $v:expr),* $(,)?) => {{
        let mut m = $crate::report::Row::new();
        $( m.insert($k.to_string(), serde_json::to_value($v).expect("row value serializes")); )*
        m
    }};
}

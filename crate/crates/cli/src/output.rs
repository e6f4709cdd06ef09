use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde_json::Value;

use crate::args::Format;
use crate::error::CliError;

/// Flattens nested objects into dotted keys; arrays stay JSON text.
fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        Value::String(s) => out.push((prefix.to_owned(), s.clone())),
        Value::Null => out.push((prefix.to_owned(), String::new())),
        other => out.push((prefix.to_owned(), other.to_string())),
    }
}

/// Header plus one row per object.
pub fn csv_rows(rows: &[Value]) -> Result<Vec<u8>, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header: Option<Vec<String>> = None;
    for row in rows {
        let mut cells = Vec::new();
        flatten("", row, &mut cells);
        let keys: Vec<String> = cells.iter().map(|(k, _)| k.clone()).collect();
        match &header {
            None => {
                writer.write_record(&keys)?;
                header = Some(keys);
            }
            Some(h) if *h != keys => {
                return Err(CliError::Internal("rows with differing columns".into()));
            }
            Some(_) => {}
        }
        writer.write_record(cells.iter().map(|(_, v)| v))?;
    }
    writer
        .into_inner()
        .map_err(|e| CliError::Internal(e.to_string()))
}

pub fn render(value: &Value, format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Json => {
            let mut bytes = serde_json::to_vec_pretty(value)?;
            bytes.push(b'\n');
            Ok(bytes)
        }
        Format::Csv => csv_rows(std::slice::from_ref(value)),
    }
}

pub fn emit(bytes: &[u8], out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let mut file = File::create(path).map_err(|e| CliError::io(path, e))?;
            file.write_all(bytes).map_err(|e| CliError::io(path, e))
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

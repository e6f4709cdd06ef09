//! Datasets as CSV with header `x1,...,xd,y`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use intweight::regression::Sample;

use crate::error::CliError;

pub fn read_samples<R: Read>(reader: R, source: &str) -> Result<Vec<Sample>, CliError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| CliError::invalid(format!("{source}: {e}")))?
        .clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(CliError::invalid(format!("{source}: empty dataset")));
    }
    let dim = header.len() - 1;
    let expected: Vec<String> = (1..=dim).map(|k| format!("x{k}")).chain(["y".to_owned()]).collect();
    if dim == 0 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(CliError::invalid(format!(
            "{source}: line 1: header must be {}",
            expected.join(",")
        )));
    }
    let mut samples = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::invalid(format!("{source}: line {line}: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let values = record
            .iter()
            .map(|field| field.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| CliError::invalid(format!("{source}: line {line}: non-numeric field")))?;
        let (y, x) = values.split_last().expect("header fixes the width");
        if let Some(bad) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(CliError::invalid(format!("{source}: line {line}: {bad} is outside [0, 1]")));
        }
        samples.push(Sample { x: x.to_vec(), y: *y });
    }
    if samples.is_empty() {
        return Err(CliError::invalid(format!("{source}: no samples")));
    }
    Ok(samples)
}

pub fn load(path: &Path) -> Result<Vec<Sample>, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_samples(file, &path.display().to_string())
}

pub fn write_samples<W: Write>(writer: W, samples: &[Sample], dim: usize) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(writer);
    let header: Vec<String> = (1..=dim).map(|k| format!("x{k}")).chain(["y".to_owned()]).collect();
    w.write_record(&header)?;
    for s in samples {
        w.write_record(s.x.iter().chain(std::iter::once(&s.y)).map(|v| format!("{v:?}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save(path: &Path, samples: &[Sample], dim: usize) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_samples(file, samples, dim)
}

//! Series input, CSV output and the error type that maps onto exit codes.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use mtspec::taper::TimeSeries;
use mtspec::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Numeric(#[from] Error),
}

impl CliError {
    /// 2 for bad input or arguments, 3 for numerical or pipeline failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Numeric(e) => match root_cause(e) {
                Error::InvalidArgument(_) | Error::Domain { .. } => 2,
                _ => 3,
            },
        }
    }
}

fn root_cause(e: &Error) -> &Error {
    match e {
        Error::Stage { source, .. } => root_cause(source),
        other => other,
    }
}

/// One sample per line in the first column. A first line that does not
/// parse as a number is taken as a header.
pub fn read_series(path: &Path) -> Result<TimeSeries, CliError> {
    let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut samples = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let Some(field) = record.get(0).filter(|f| !f.is_empty()) else {
            continue;
        };
        match field.parse::<f64>() {
            Ok(x) => samples.push(x),
            Err(_) if line == 0 => {}
            Err(_) => {
                return Err(CliError::Io(format!(
                    "{}: line {}: {field:?} is not a number",
                    path.display(),
                    line + 1
                )))
            }
        }
    }
    TimeSeries::new(samples).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Writes a header and numeric rows; floats use the shortest representation
/// that parses back to the same value.
pub fn write_csv(path: Option<&Path>, header: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    let fail = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row.iter().map(|x| x.to_string())).map_err(fail)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

pub fn stdout_write(bytes: &[u8]) -> Result<(), CliError> {
    io::stdout().lock().write_all(bytes).map_err(|e| CliError::Io(e.to_string()))
}

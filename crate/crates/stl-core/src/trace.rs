use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace must contain at least one sample")]
    Empty,
    #[error("timestamps must be strictly increasing (violated at index {index})")]
    NonMonotonicTime { index: usize },
    #[error("non-finite value in `{channel}` at index {index}")]
    NonFiniteValue { channel: String, index: usize },
    #[error("channel `{channel}` has {got} values, expected {expected}")]
    LengthMismatch { channel: String, expected: usize, got: usize },
    #[error("duplicate channel name `{0}`")]
    DuplicateChannel(String),
    #[error("trace file must have a `t` column first, found `{0}`")]
    MissingTimeColumn(String),
    #[error("row {row} has {got} fields, expected {expected}")]
    RaggedRow { row: usize, expected: usize, got: usize },
    #[error("could not parse `{text}` as a number (row {row}, column `{column}`)")]
    InvalidNumber { row: usize, column: String, text: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Immutable, uniformly sampled multi-channel signal record.
///
/// Timestamps are strictly increasing seconds; every channel holds one
/// finite value per timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    times: Vec<f64>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Trace {
    pub fn new(
        times: Vec<f64>,
        channels: Vec<(String, Vec<f64>)>,
    ) -> Result<Self, TraceError> {
        if times.is_empty() {
            return Err(TraceError::Empty);
        }
        for (i, t) in times.iter().enumerate() {
            if !t.is_finite() {
                return Err(TraceError::NonFiniteValue { channel: "t".into(), index: i });
            }
            if i > 0 && times[i - 1] >= *t {
                return Err(TraceError::NonMonotonicTime { index: i });
            }
        }
        let mut names = Vec::with_capacity(channels.len());
        let mut columns = Vec::with_capacity(channels.len());
        for (name, values) in channels {
            if names.contains(&name) {
                return Err(TraceError::DuplicateChannel(name));
            }
            if values.len() != times.len() {
                return Err(TraceError::LengthMismatch {
                    channel: name,
                    expected: times.len(),
                    got: values.len(),
                });
            }
            if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                return Err(TraceError::NonFiniteValue { channel: name, index: i });
            }
            names.push(name);
            columns.push(values);
        }
        Ok(Trace { times, names, columns })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees at least one sample
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn channel_names(&self) -> &[String] {
        &self.names
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub(crate) fn columns(&self) -> (&[f64], &[String], &[Vec<f64>]) {
        (&self.times, &self.names, &self.columns)
    }

    /// Read a trace from CSV text with header `t,<signal>,...`.
    pub fn from_csv(reader: impl Read) -> Result<Self, TraceError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        let mut fields = header.iter();
        match fields.next() {
            Some("t") => {}
            Some(other) => return Err(TraceError::MissingTimeColumn(other.to_string())),
            None => return Err(TraceError::Empty),
        }
        let names: Vec<String> = fields.map(|s| s.to_string()).collect();
        let mut times = Vec::new();
        let mut columns = vec![Vec::new(); names.len()];
        for (row_idx, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != names.len() + 1 {
                return Err(TraceError::RaggedRow {
                    row: row_idx + 2,
                    expected: names.len() + 1,
                    got: record.len(),
                });
            }
            let parse = |text: &str, column: &str| -> Result<f64, TraceError> {
                text.parse().map_err(|_| TraceError::InvalidNumber {
                    row: row_idx + 2,
                    column: column.to_string(),
                    text: text.to_string(),
                })
            };
            times.push(parse(&record[0], "t")?);
            for (i, name) in names.iter().enumerate() {
                columns[i].push(parse(&record[i + 1], name)?);
            }
        }
        Trace::new(times, names.into_iter().zip(columns).collect())
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self, TraceError> {
        Self::from_csv(std::fs::File::open(path)?)
    }

    /// Write the trace as CSV with header `t,<signal>,...`.
    pub fn to_csv(&self, writer: impl Write) -> Result<(), TraceError> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend(self.names.iter().cloned());
        wtr.write_record(&header)?;
        for i in 0..self.times.len() {
            let mut row = vec![self.times[i].to_string()];
            row.extend(self.columns.iter().map(|c| c[i].to_string()));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

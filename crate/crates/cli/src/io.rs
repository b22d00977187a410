//! Numeric CSV input and output.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use biarch_core::{DataMatrix, Matrix};

use crate::error::{IoError, Result};

/// Whether the first record is a header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeaderMode {
    Present,
    Absent,
    /// A header if any field of the first record is not a number.
    #[default]
    Detect,
}

impl From<bool> for HeaderMode {
    fn from(has_header: bool) -> Self {
        if has_header {
            HeaderMode::Present
        } else {
            HeaderMode::Absent
        }
    }
}

/// A parsed CSV body with its column names.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvData {
    pub data: DataMatrix,
    pub header: Option<Vec<String>>,
}

impl CsvData {
    /// Header names, or `x1..xm` when the file had none.
    pub fn column_names(&self) -> Vec<String> {
        match &self.header {
            Some(h) => h.clone(),
            None => numbered("x", self.data.m()),
        }
    }
}

/// `prefix1, prefix2, ...`
pub fn numbered(prefix: &str, len: usize) -> Vec<String> {
    (1..=len).map(|i| format!("{prefix}{i}")).collect()
}

pub fn read_csv(path: impl AsRef<Path>, header: impl Into<HeaderMode>, delimiter: u8) -> Result<CsvData> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| IoError::io(path, e))?;
    read_csv_from(file, header.into(), delimiter)
}

/// Reads a rectangular numeric CSV. Line numbers in errors are 1-based
/// file lines, columns are 1-based fields.
pub fn read_csv_from<R: Read>(reader: R, header: HeaderMode, delimiter: u8) -> Result<CsvData> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut names = None;
    let mut width = None;
    let mut values = Vec::new();
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| IoError::Csv(e.to_string()))?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        if i == 0 {
            let is_header = match header {
                HeaderMode::Present => true,
                HeaderMode::Absent => false,
                HeaderMode::Detect => rec.iter().any(|f| f.parse::<f64>().is_err()),
            };
            if is_header {
                names = Some(rec.iter().map(str::to_owned).collect::<Vec<_>>());
                width = Some(rec.len());
                continue;
            }
        }
        let expected = *width.get_or_insert(rec.len());
        if rec.len() != expected {
            return Err(IoError::RaggedRows {
                line,
                expected,
                found: rec.len(),
            });
        }
        for (j, field) in rec.iter().enumerate() {
            let v = field.parse::<f64>().map_err(|_| IoError::Parse {
                line,
                col: j + 1,
                value: field.to_owned(),
            })?;
            values.push(v);
        }
        rows += 1;
    }
    let cols = match width {
        Some(w) if rows > 0 && w > 0 => w,
        _ => return Err(IoError::EmptyFile),
    };
    let data = DataMatrix::new(Matrix::from_vec(rows, cols, values)?)?;
    Ok(CsvData {
        data,
        header: names,
    })
}

/// Shortest decimal that parses back to the same value.
pub fn format_real(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_matrix_csv<W: Write>(out: W, header: &[String], m: &Matrix) -> Result<()> {
    if header.len() != m.cols() {
        return Err(IoError::Csv(format!(
            "{} header names for {} columns",
            header.len(),
            m.cols()
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| IoError::Csv(e.to_string());
    w.write_record(header).map_err(csv_err)?;
    for row in m.row_iter() {
        w.write_record(row.iter().map(|&v| format_real(v))).map_err(csv_err)?;
    }
    w.flush().map_err(|e| IoError::Csv(e.to_string()))?;
    Ok(())
}

pub fn write_matrix_file(path: impl AsRef<Path>, header: &[String], m: &Matrix) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| IoError::io(path, e))?;
    write_matrix_csv(std::io::BufWriter::new(file), header, m)
}

//! Text formats: observation CSV files, group files, conditioning grids,
//! matrix CSV, tabulated generators and kernels, quantity JSON.
//!
//! Every reader has a `&str`/`Read` entry point so the parsers can be
//! exercised without touching the file system.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::block::{Partition, SchemeKind};
use crate::concordance::ConcordanceQuantities;
use crate::conditional::{ConditioningGrid, TabulatedKernel};
use crate::data::ObservationMatrix;
use crate::elliptical::TabulatedGenerator;
use crate::error::{Error, Result};
use crate::variance::VarianceInput;

/// How an observation file is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadOptions {
    /// The first line holds column names.
    pub header: bool,
    /// Fail on a non-finite or missing value instead of dropping its row.
    pub strict: bool,
    pub delimiter: u8,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            header: true,
            strict: false,
            delimiter: b',',
        }
    }
}

/// A loaded sample and the rows that were dropped on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadReport {
    pub data: ObservationMatrix,
    /// 1-based line numbers of dropped rows.
    pub dropped_lines: Vec<usize>,
}

impl LoadReport {
    pub fn dropped(&self) -> usize {
        self.dropped_lines.len()
    }
}

fn is_missing(field: &str) -> bool {
    matches!(field.to_ascii_lowercase().as_str(), "" | "na" | "nan" | "null")
}

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io(e.to_string()),
        _ => parse_error(line, 0, e.to_string()),
    }
}

fn csv_reader<R: Read>(reader: R, delimiter: u8) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .delimiter(delimiter)
        .comment(Some(b'#'))
        .from_reader(reader)
}

/// Reads a numeric CSV. Rows with a missing or non-finite value are
/// dropped, or rejected in strict mode; text that is not a number is always
/// a parse error.
pub fn read_observations<R: Read>(reader: R, options: LoadOptions) -> Result<LoadReport> {
    let mut rdr = csv_reader(reader, options.delimiter);
    let mut names: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dropped_lines = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(idx + 1);
        if let Some(w) = width {
            if record.len() != w {
                return Err(parse_error(line, record.len().min(w) + 1, format!("expected {w} fields, found {}", record.len())));
            }
        } else {
            width = Some(record.len());
        }
        if idx == 0 && options.header {
            names = Some(record.iter().map(str::to_string).collect());
            continue;
        }
        let mut row = Vec::with_capacity(record.len());
        let mut finite = true;
        for (j, field) in record.iter().enumerate() {
            let v = if is_missing(field) {
                f64::NAN
            } else {
                field
                    .parse::<f64>()
                    .map_err(|_| parse_error(line, j + 1, format!("'{field}' is not a number")))?
            };
            if !v.is_finite() {
                if options.strict {
                    return Err(parse_error(line, j + 1, format!("non-finite value '{field}'")));
                }
                finite = false;
            }
            row.push(v);
        }
        if finite {
            rows.push(row);
        } else {
            dropped_lines.push(line);
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyAfterFiltering);
    }
    let mut data = ObservationMatrix::from_rows(&rows)?;
    if let Some(names) = names {
        data = data.with_names(names)?;
    }
    Ok(LoadReport { data, dropped_lines })
}

/// [`read_observations`] on a file.
pub fn load_observations(path: impl AsRef<Path>, options: LoadOptions) -> Result<LoadReport> {
    read_observations(File::open(path)?, options)
}

/// Parses a `column,group` file. A column is named by its header name or
/// by its 1-based index; group ids are 1-based and must form 1..K. A first
/// line whose group field is not an integer is taken as a header.
pub fn read_group_file<R: Read>(reader: R, names: Option<&[String]>, p: usize) -> Result<Partition> {
    let mut rdr = csv_reader(reader, b',');
    let mut membership: Vec<Option<usize>> = vec![None; p];
    for (idx, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(idx + 1);
        if record.len() != 2 {
            return Err(parse_error(line, 1, format!("expected 'column,group', found {} fields", record.len())));
        }
        let group = match record[1].parse::<usize>() {
            Ok(g) if g >= 1 => g,
            Ok(_) => return Err(parse_error(line, 2, "group ids start at 1")),
            Err(_) if idx == 0 => continue,
            Err(_) => return Err(parse_error(line, 2, format!("'{}' is not a group id", &record[1]))),
        };
        let column = resolve_column(&record[0], names, p).map_err(|m| parse_error(line, 1, m))?;
        if membership[column].replace(group).is_some() {
            return Err(Error::InvalidPartition(format!("column '{}' assigned twice", &record[0])));
        }
    }
    let mut ids = Vec::with_capacity(p);
    for (j, g) in membership.into_iter().enumerate() {
        match g {
            Some(g) => ids.push(g),
            None => {
                let label = names.and_then(|n| n.get(j)).cloned().unwrap_or_else(|| (j + 1).to_string());
                return Err(Error::InvalidPartition(format!("column '{label}' has no group")));
            }
        }
    }
    Partition::from_one_based(&ids)
}

fn resolve_column(field: &str, names: Option<&[String]>, p: usize) -> std::result::Result<usize, String> {
    if let Some(j) = names.and_then(|n| n.iter().position(|name| name == field)) {
        return Ok(j);
    }
    match field.parse::<usize>() {
        Ok(i) if (1..=p).contains(&i) => Ok(i - 1),
        Ok(i) => Err(format!("column index {i} outside 1..{p}")),
        Err(_) => Err(format!("unknown column '{field}'")),
    }
}

/// [`read_group_file`] on a file.
pub fn load_group_file(path: impl AsRef<Path>, names: Option<&[String]>, p: usize) -> Result<Partition> {
    read_group_file(File::open(path)?, names, p)
}

/// `start:stop:step`, a single value, or a comma-separated list of values.
pub fn parse_grid(text: &str) -> Result<ConditioningGrid> {
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("invalid grid value '{}'", s.trim())))
    };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.len() {
        3 => ConditioningGrid::range(number(parts[0])?, number(parts[1])?, number(parts[2])?),
        1 => {
            let points = text
                .split(',')
                .map(|s| number(s).map(|v| vec![v]))
                .collect::<Result<Vec<_>>>()?;
            ConditioningGrid::new(points)
        }
        _ => Err(Error::Config(format!("grid '{text}' is not start:stop:step"))),
    }
}

/// Comma-separated numbers, e.g. portfolio weights.
pub fn parse_number_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .enumerate()
        .map(|(i, s)| {
            let v = s
                .trim()
                .parse::<f64>()
                .map_err(|_| parse_error(1, i + 1, format!("'{}' is not a number", s.trim())))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_error(1, i + 1, "non-finite value"))
            }
        })
        .collect()
}

/// Shortest decimal with 15 significant digits that denotes `v`.
pub fn format_value(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.14e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let all: String = mantissa.chars().filter(|c| *c != '.').collect();
    let digits = all.trim_end_matches('0');
    let body = if (0..15).contains(&exp) {
        let e = exp as usize;
        if digits.len() <= e + 1 {
            format!("{digits}{}", "0".repeat(e + 1 - digits.len()))
        } else {
            format!("{}.{}", &digits[..=e], &digits[e + 1..])
        }
    } else if (-5..0).contains(&exp) {
        format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
    } else if digits.len() == 1 {
        format!("{digits}e{exp}")
    } else {
        format!("{}.{}e{exp}", &digits[..1], &digits[1..])
    };
    format!("{sign}{body}")
}

/// A square matrix with row and column labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatrix {
    pub names: Vec<String>,
    pub values: DMatrix<f64>,
}

/// Column names of a p-column sample: its own or V1..Vp.
pub fn column_names(data: &ObservationMatrix) -> Vec<String> {
    match data.names() {
        Some(n) => n.to_vec(),
        None => (1..=data.p()).map(|j| format!("V{j}")).collect(),
    }
}

/// Writes a square matrix as CSV with a header line and row labels.
pub fn write_matrix_csv<W: Write>(values: &DMatrix<f64>, names: &[String], writer: W) -> Result<()> {
    if values.nrows() != names.len() || values.ncols() != names.len() {
        return Err(Error::LengthMismatch {
            expected: values.nrows(),
            actual: names.len(),
        });
    }
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(std::iter::once("").chain(names.iter().map(String::as_str)))
        .map_err(io)?;
    for (i, name) in names.iter().enumerate() {
        let row: Vec<String> = std::iter::once(name.clone())
            .chain((0..values.ncols()).map(|j| format_value(values[(i, j)])))
            .collect();
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a matrix written by [`write_matrix_csv`].
pub fn read_matrix_csv<R: Read>(reader: R) -> Result<LabeledMatrix> {
    let mut rdr = csv_reader(reader, b',');
    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r.map_err(csv_error)?,
        None => return Err(parse_error(1, 1, "empty matrix file")),
    };
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let p = names.len();
    if p == 0 {
        return Err(parse_error(1, 2, "header has no column names"));
    }
    let mut values = DMatrix::zeros(p, p);
    let mut rows = 0;
    for (i, record) in records.enumerate() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(i + 2);
        if i >= p {
            return Err(parse_error(line, 1, format!("more than {p} rows")));
        }
        if record.len() != p + 1 {
            return Err(parse_error(line, 1, format!("expected {} fields, found {}", p + 1, record.len())));
        }
        for j in 0..p {
            let field = &record[j + 1];
            values[(i, j)] = field
                .parse::<f64>()
                .map_err(|_| parse_error(line, j + 2, format!("'{field}' is not a number")))?;
        }
        rows += 1;
    }
    if rows != p {
        return Err(parse_error(rows + 2, 1, format!("expected {p} rows, found {rows}")));
    }
    Ok(LabeledMatrix { names, values })
}

/// Two numeric columns, with an optional header line.
pub fn read_two_columns<R: Read>(reader: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv_reader(reader, b',');
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (idx, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(idx + 1);
        if record.len() != 2 {
            return Err(parse_error(line, 1, format!("expected 2 fields, found {}", record.len())));
        }
        let parsed: Vec<std::result::Result<f64, _>> = record.iter().map(str::parse::<f64>).collect();
        if idx == 0 && parsed.iter().all(|v| v.is_err()) {
            continue;
        }
        for (j, v) in parsed.into_iter().enumerate() {
            let v = v.map_err(|_| parse_error(line, j + 1, format!("'{}' is not a number", &record[j])))?;
            if j == 0 { a.push(v) } else { b.push(v) }
        }
    }
    Ok((a, b))
}

/// A density generator tabulated as `u,g` rows.
pub fn read_tabulated_generator<R: Read>(reader: R) -> Result<TabulatedGenerator> {
    let (u, g) = read_two_columns(reader)?;
    TabulatedGenerator::new(u, g)
}

/// A kernel tabulated as `u,k` rows over [0, support].
pub fn read_tabulated_kernel<R: Read>(reader: R) -> Result<TabulatedKernel> {
    let (u, k) = read_two_columns(reader)?;
    TabulatedKernel::new(u, k)
}

/// Concordance quantities as a JSON object with keys `P`..`U`.
pub fn parse_quantities_json(text: &str) -> Result<ConcordanceQuantities> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("quantities: {e}")))
}

/// Input of a variance evaluation from stored quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceRequest {
    pub quantities: ConcordanceQuantities,
    pub n: usize,
    pub g1: usize,
    pub g2: usize,
    /// Averaging count; defaults to min(g1, g2).
    #[serde(rename = "N", default)]
    pub n_avg: Option<usize>,
    pub scheme: SchemeKind,
}

impl VarianceRequest {
    pub fn input(&self) -> VarianceInput {
        VarianceInput {
            quantities: self.quantities,
            n: self.n,
            g1: self.g1,
            g2: self.g2,
            n_avg: self.n_avg.unwrap_or(self.g1.min(self.g2)),
            kind: self.scheme,
        }
    }
}

pub fn parse_variance_request(text: &str) -> Result<VarianceRequest> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("variance request: {e}")))
}

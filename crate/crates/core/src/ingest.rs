//! Schema-driven loading of survey extracts.
//!
//! A schema file is a JSON document of the form
//!
//! ```json
//! {
//!   "columns": [
//!     { "name": "CITZNSTP_A", "kind": "categorical",
//!       "categories": [ { "code": 1, "label": "Yes" }, { "code": 2, "label": "No" } ],
//!       "missing_codes": [7, 8, 9] },
//!     { "name": "EMPWKHRS3_A", "kind": "numeric", "missing_codes": [97, 98, 99] }
//!   ]
//! }
//! ```
//!
//! `categories` is required for categorical columns and must be empty for
//! numeric ones. `missing_codes` is optional; an empty cell is always missing.
//! For numeric columns an integral value listed in `missing_codes` is missing.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub type Code = i64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Categorical,
    Numeric,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub code: Code,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<Category>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub missing_codes: Vec<Code>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl ColumnSchema {
    pub fn categorical(name: &str, categories: &[(Code, &str)], missing_codes: &[Code]) -> Self {
        ColumnSchema {
            name: name.to_string(),
            kind: ColumnKind::Categorical,
            categories: categories
                .iter()
                .map(|&(code, label)| Category { code, label: label.to_string() })
                .collect(),
            missing_codes: missing_codes.to_vec(),
            description: None,
        }
    }

    pub fn numeric(name: &str, missing_codes: &[Code]) -> Self {
        ColumnSchema {
            name: name.to_string(),
            kind: ColumnKind::Numeric,
            categories: Vec::new(),
            missing_codes: missing_codes.to_vec(),
            description: None,
        }
    }

    pub fn with_description(mut self, text: &str) -> Self {
        self.description = Some(text.to_string());
        self
    }

    pub fn is_categorical(&self) -> bool {
        self.kind == ColumnKind::Categorical
    }

    pub fn has_code(&self, code: Code) -> bool {
        self.categories.iter().any(|c| c.code == code)
    }

    pub fn label(&self, code: Code) -> Option<&str> {
        self.categories.iter().find(|c| c.code == code).map(|c| c.label.as_str())
    }

    /// Position of `code` in the declared category order.
    pub fn code_index(&self, code: Code) -> Option<usize> {
        self.categories.iter().position(|c| c.code == code)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for c in &self.categories {
            if !seen.insert(c.code) {
                return Err(Error::InvalidSchema(format!(
                    "duplicate code {} in column `{}`",
                    c.code, self.name
                )));
            }
        }
        if let Some(m) = self.missing_codes.iter().find(|m| seen.contains(m)) {
            return Err(Error::InvalidSchema(format!(
                "missing code {m} is also a category of `{}`",
                self.name
            )));
        }
        match self.kind {
            ColumnKind::Categorical if self.categories.is_empty() => Err(Error::InvalidSchema(
                format!("categorical column `{}` has no categories", self.name),
            )),
            ColumnKind::Numeric if !self.categories.is_empty() => Err(Error::InvalidSchema(
                format!("numeric column `{}` declares categories", self.name),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SchemaDocument {
    columns: Vec<ColumnSchema>,
}

pub fn validate_schema(schema: &[ColumnSchema]) -> Result<()> {
    let mut names = HashSet::new();
    for col in schema {
        col.validate()?;
        if !names.insert(col.name.as_str()) {
            return Err(Error::InvalidSchema(format!("duplicate column `{}`", col.name)));
        }
    }
    Ok(())
}

pub fn parse_schema(text: &str) -> Result<Vec<ColumnSchema>> {
    let doc: SchemaDocument = serde_json::from_str(text)?;
    validate_schema(&doc.columns)?;
    Ok(doc.columns)
}

pub fn load_schema(path: impl AsRef<Path>) -> Result<Vec<ColumnSchema>> {
    parse_schema(&std::fs::read_to_string(path)?)
}

pub fn schema_to_json(schema: &[ColumnSchema]) -> Result<String> {
    let doc = SchemaDocument { columns: schema.to_vec() };
    Ok(serde_json::to_string_pretty(&doc)?)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Code(Code),
    Real(f64),
    Missing,
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn code(&self) -> Option<Code> {
        match *self {
            Cell::Code(c) => Some(c),
            _ => None,
        }
    }

    pub fn real(&self) -> Option<f64> {
        match *self {
            Cell::Real(v) => Some(v),
            _ => None,
        }
    }
}

/// Immutable column-typed table. Missing cells are stored as [`Cell::Missing`];
/// [`Dataset::mask`] exposes them as a boolean matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    schema: Vec<ColumnSchema>,
    rows: Vec<Vec<Cell>>,
}

impl Dataset {
    /// Builds a dataset, checking every cell against the schema.
    pub fn new(schema: Vec<ColumnSchema>, rows: Vec<Vec<Cell>>) -> Result<Self> {
        validate_schema(&schema)?;
        for (r, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::MalformedRow { row: r + 1, expected: schema.len(), found: row.len() });
            }
            for (col, cell) in schema.iter().zip(row) {
                match (col.kind, cell) {
                    (_, Cell::Missing) => {}
                    (ColumnKind::Categorical, Cell::Code(c)) if col.has_code(*c) => {}
                    (ColumnKind::Numeric, Cell::Real(v)) if v.is_finite() => {}
                    _ => {
                        return Err(Error::BadCode {
                            row: r + 1,
                            column: col.name.clone(),
                            code: format!("{cell:?}"),
                        })
                    }
                }
            }
        }
        Ok(Dataset { schema, rows })
    }

    pub fn empty(schema: Vec<ColumnSchema>) -> Self {
        Dataset { schema, rows: Vec::new() }
    }

    pub fn schema(&self) -> &[ColumnSchema] {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.schema.len()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.schema
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<&ColumnSchema> {
        Ok(&self.schema[self.column_index(name)?])
    }

    pub fn cell(&self, row: usize, col: usize) -> Cell {
        self.rows[row][col]
    }

    pub fn mask(&self) -> Vec<Vec<bool>> {
        self.rows.iter().map(|r| r.iter().map(Cell::is_missing).collect()).collect()
    }

    pub fn missing_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_cols()];
        for row in &self.rows {
            for (c, cell) in row.iter().enumerate() {
                if cell.is_missing() {
                    counts[c] += 1;
                }
            }
        }
        counts
    }

    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Codes of a categorical column; `None` for missing cells.
    pub fn codes(&self, name: &str) -> Result<Vec<Option<Code>>> {
        let c = self.column_index(name)?;
        if !self.schema[c].is_categorical() {
            return Err(Error::NotCategorical(name.to_string()));
        }
        Ok(self.rows.iter().map(|r| r[c].code()).collect())
    }

    pub fn reals(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let c = self.column_index(name)?;
        if self.schema[c].is_categorical() {
            return Err(Error::NotNumeric(name.to_string()));
        }
        Ok(self.rows.iter().map(|r| r[c].real()).collect())
    }
}

/// Counts surfaced after every load.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub rows_read: usize,
    pub rows_dropped: usize,
    pub missing_per_column: Vec<(String, usize)>,
}

impl LoadReport {
    pub fn for_dataset(data: &Dataset, rows_dropped: usize) -> Self {
        LoadReport {
            rows_read: data.n_rows() + rows_dropped,
            rows_dropped,
            missing_per_column: data
                .schema()
                .iter()
                .map(|c| c.name.clone())
                .zip(data.missing_counts())
                .collect(),
        }
    }

    fn log(&self) {
        log::info!("rows read: {}, rows dropped: {}", self.rows_read, self.rows_dropped);
        for (name, count) in &self.missing_per_column {
            if *count > 0 {
                log::info!("  {name}: {count} missing");
            }
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &[ColumnSchema], delimiter: u8) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_csv(file, schema, delimiter)
}

pub fn read_csv<R: Read>(reader: R, schema: &[ColumnSchema], delimiter: u8) -> Result<Dataset> {
    validate_schema(schema)?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .has_headers(true)
        .from_reader(reader);

    let header = rdr.headers()?.clone();
    let mut positions = vec![usize::MAX; schema.len()];
    for (pos, name) in header.iter().enumerate() {
        let name = name.trim();
        let idx = schema
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))?;
        positions[idx] = pos;
    }
    if let Some(missing) = positions.iter().position(|&p| p == usize::MAX) {
        return Err(Error::UnknownColumn(schema[missing].name.clone()));
    }

    let mut rows = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row_no = r + 1;
        if record.len() != header.len() {
            return Err(Error::MalformedRow { row: row_no, expected: header.len(), found: record.len() });
        }
        let row = schema
            .iter()
            .zip(&positions)
            .map(|(col, &pos)| parse_cell(col, record[pos].trim(), row_no))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }

    let data = Dataset { schema: schema.to_vec(), rows };
    LoadReport::for_dataset(&data, 0).log();
    Ok(data)
}

fn parse_cell(col: &ColumnSchema, text: &str, row: usize) -> Result<Cell> {
    if text.is_empty() {
        return Ok(Cell::Missing);
    }
    match col.kind {
        ColumnKind::Categorical => {
            let bad = || Error::BadCode { row, column: col.name.clone(), code: text.to_string() };
            let code: Code = text.parse().map_err(|_| bad())?;
            if col.missing_codes.contains(&code) {
                Ok(Cell::Missing)
            } else if col.has_code(code) {
                Ok(Cell::Code(code))
            } else {
                Err(bad())
            }
        }
        ColumnKind::Numeric => {
            let value: f64 = text
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::NumericParse {
                    row,
                    column: col.name.clone(),
                    value: text.to_string(),
                })?;
            let is_missing_code = value.fract() == 0.0
                && value.abs() < 1e15
                && col.missing_codes.contains(&(value as Code));
            Ok(if is_missing_code { Cell::Missing } else { Cell::Real(value) })
        }
    }
}

/// Writes the dataset back out in schema column order. Missing cells are
/// written as the column's first missing code, or left empty when it has none.
pub fn write_csv<W: Write>(data: &Dataset, writer: W, delimiter: u8) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().delimiter(delimiter).from_writer(writer);
    wtr.write_record(data.schema.iter().map(|c| c.name.as_str()))?;
    for row in &data.rows {
        let fields = data.schema.iter().zip(row).map(|(col, cell)| match cell {
            Cell::Code(c) => c.to_string(),
            Cell::Real(v) => v.to_string(),
            Cell::Missing => col.missing_codes.first().map(|m| m.to_string()).unwrap_or_default(),
        });
        wtr.write_record(fields)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_csv(data: &Dataset, path: impl AsRef<Path>, delimiter: u8) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(data, std::io::BufWriter::new(file), delimiter)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub size: usize,
    pub seed: u64,
}

/// Uniform sample without replacement by partial Fisher-Yates over row
/// indices. Selected rows keep their original relative order.
pub fn sample_rows(data: &Dataset, spec: SampleSpec) -> Result<Dataset> {
    Ok(data.select_rows(&sample_indices(data.n_rows(), spec)?))
}

/// The sorted row indices [`sample_rows`] would select from `n` rows.
pub fn sample_indices(n: usize, spec: SampleSpec) -> Result<Vec<usize>> {
    if spec.size > n {
        return Err(Error::SampleTooLarge { size: spec.size, rows: n });
    }
    let mut rng = rng::seeded(spec.seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..spec.size {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    let mut chosen = idx[..spec.size].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Listwise deletion over `columns`. Returns the filtered data and the number
/// of rows dropped.
pub fn complete_cases(data: &Dataset, columns: &[&str]) -> Result<(Dataset, usize)> {
    let keep = complete_case_rows(data, columns)?;
    let dropped = data.n_rows() - keep.len();
    let out = data.select_rows(&keep);
    if dropped > 0 {
        LoadReport::for_dataset(&out, dropped).log();
    }
    Ok((out, dropped))
}

/// Indices of the rows [`complete_cases`] keeps.
pub fn complete_case_rows(data: &Dataset, columns: &[&str]) -> Result<Vec<usize>> {
    let cols = columns.iter().map(|c| data.column_index(c)).collect::<Result<Vec<_>>>()?;
    Ok((0..data.n_rows()).filter(|&r| cols.iter().all(|&c| !data.rows[r][c].is_missing())).collect())
}

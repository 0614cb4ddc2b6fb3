use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use crate::data::schema::{ColumnKind, Schema};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Number(f64),
}

impl Cell {
    pub fn as_text(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            Cell::Number(_) => None,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Cell::Number(x) => Some(*x),
            Cell::Text(_) => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Number(x) => x.to_string(),
        }
    }
}

/// Raw tabular data validated against a schema. Every row holds one cell per
/// schema column, in schema column order.
#[derive(Debug, Clone)]
pub struct Dataset {
    schema: Schema,
    rows: Vec<Vec<Cell>>,
    source_name: String,
    dropped: usize,
}

impl Dataset {
    pub fn new(schema: Schema, rows: Vec<Vec<Cell>>, source_name: impl Into<String>) -> Result<Self> {
        schema.validate()?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != schema.columns.len() {
                return Err(Error::Data(format!(
                    "row {i} has {} cells, schema declares {}",
                    row.len(),
                    schema.columns.len()
                )));
            }
            for (cell, col) in row.iter().zip(&schema.columns) {
                let ok = match col.kind {
                    ColumnKind::Categorical => cell.as_text().is_some(),
                    ColumnKind::Numeric => cell.as_number().is_some_and(f64::is_finite),
                };
                if !ok {
                    return Err(Error::Data(format!("row {i}: bad cell for column `{}`", col.name)));
                }
            }
        }
        let ds = Dataset {
            schema,
            rows,
            source_name: source_name.into(),
            dropped: 0,
        };
        ds.check_labels()?;
        Ok(ds)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn source_name(&self) -> &str {
        &self.source_name
    }

    /// Rows discarded at load time because of missing or unparseable cells.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    /// Replaces the schema (e.g. to change the protected subset or strata)
    /// keeping the rows. Column layout must be unchanged.
    pub fn with_schema(mut self, schema: Schema) -> Result<Self> {
        if schema.columns != self.schema.columns {
            return Err(Error::Schema("replacement schema changes the column layout".into()));
        }
        schema.validate()?;
        self.schema = schema;
        Ok(self)
    }

    fn check_labels(&self) -> Result<()> {
        let idx = self
            .schema
            .column_index(&self.schema.label_column)
            .expect("validated schema");
        let others: BTreeSet<&str> = self
            .rows
            .iter()
            .filter_map(|r| r[idx].as_text())
            .filter(|v| !self.schema.favorable.iter().any(|f| f == v))
            .collect();
        if self.schema.unfavorable.is_empty() {
            if others.len() > 1 {
                return Err(Error::Data(format!(
                    "label column `{}` has more than two distinct values: {:?}",
                    self.schema.label_column, others
                )));
            }
        } else if let Some(bad) = others.iter().find(|v| !self.schema.unfavorable.iter().any(|u| u == *v)) {
            return Err(Error::Data(format!(
                "label column `{}` has undeclared value `{bad}`",
                self.schema.label_column
            )));
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .delimiter(self.schema.delimiter)
            .from_writer(writer);
        if self.schema.has_header {
            w.write_record(self.schema.columns.iter().map(|c| c.name.as_str()))?;
        }
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush().map_err(|source| Error::Io {
            path: "<csv writer>".into(),
            source,
        })?;
        Ok(())
    }
}

/// Loads a delimited text file. Rows with a missing or unparseable cell are
/// dropped and counted.
pub fn load_dataset(path: &Path, schema: &Schema) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| schema.name.clone());
    read_dataset(file, schema, name)
}

pub fn read_dataset<R: Read>(reader: R, schema: &Schema, source_name: impl Into<String>) -> Result<Dataset> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(schema.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let positions: Vec<usize> = if schema.has_header {
        let header = rdr.headers()?.clone();
        schema
            .columns
            .iter()
            .map(|c| {
                header
                    .iter()
                    .position(|h| h == c.name)
                    .ok_or_else(|| Error::Schema(format!("header lacks column `{}`", c.name)))
            })
            .collect::<Result<_>>()?
    } else {
        (0..schema.columns.len()).collect()
    };

    let mut rows = Vec::new();
    let mut dropped = 0;
    for record in rdr.records() {
        let record = record?;
        // a blank line parses as a single empty field
        if record.len() <= 1 && record.get(0).is_none_or(str::is_empty) && schema.columns.len() > 1 {
            continue;
        }
        let parsed: Option<Vec<Cell>> = schema
            .columns
            .iter()
            .zip(&positions)
            .map(|(col, &pos)| {
                let raw = record.get(pos)?;
                if schema.is_missing(raw) {
                    return None;
                }
                match col.kind {
                    ColumnKind::Categorical => Some(Cell::Text(raw.to_owned())),
                    ColumnKind::Numeric => raw.parse::<f64>().ok().filter(|x| x.is_finite()).map(Cell::Number),
                }
            })
            .collect();
        match parsed {
            Some(row) => rows.push(row),
            None => dropped += 1,
        }
    }

    let ds = Dataset {
        schema: schema.clone(),
        rows,
        source_name: source_name.into(),
        dropped,
    };
    ds.check_labels()?;
    Ok(ds)
}

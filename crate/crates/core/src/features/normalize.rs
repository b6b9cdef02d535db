//! Min-max scaling into `[0, 1]`.

use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::schema::Dataset;

pub const PARAMS_HEADER: &str = "column,min,max";

/// Per-column minimum and maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub columns: Vec<String>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormalizationParams {
    /// Fits the column ranges of `rows`.
    pub fn fit(columns: &[&str], rows: &[Vec<f64>]) -> Result<Self> {
        check_rows(columns.len(), rows)?;
        let mut min = vec![f64::INFINITY; columns.len()];
        let mut max = vec![f64::NEG_INFINITY; columns.len()];
        for row in rows {
            for (j, &x) in row.iter().enumerate() {
                min[j] = min[j].min(x);
                max[j] = max[j].max(x);
            }
        }
        if rows.is_empty() {
            min.fill(0.0);
            max.fill(0.0);
        }
        Ok(NormalizationParams { columns: columns.iter().map(|c| c.to_string()).collect(), min, max })
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    /// Scales one value of column `j`. Values outside the fitted range are
    /// clamped, and a constant column maps to 0.
    pub fn scale(&self, j: usize, x: f64) -> f64 {
        let (lo, hi) = (self.min[j], self.max[j]);
        if hi > lo {
            ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }

    pub fn apply_row(&self, row: &mut [f64]) {
        for (j, x) in row.iter_mut().enumerate() {
            *x = self.scale(j, *x);
        }
    }

    pub fn apply(&self, rows: &mut [Vec<f64>]) -> Result<()> {
        check_rows(self.width(), rows)?;
        for row in rows {
            self.apply_row(row);
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.min.len() != self.columns.len() || self.max.len() != self.columns.len() {
            return Err(Error::dimension("normalization params", self.columns.len(), self.min.len()));
        }
        for (j, c) in self.columns.iter().enumerate() {
            if !(self.min[j].is_finite() && self.max[j].is_finite() && self.min[j] <= self.max[j]) {
                return Err(Error::Data(format!(
                    "normalization range of `{c}` is invalid: [{}, {}]",
                    self.min[j], self.max[j]
                )));
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = BufWriter::new(writer);
        writeln!(w, "{PARAMS_HEADER}")?;
        for (j, c) in self.columns.iter().enumerate() {
            writeln!(w, "{c},{},{}", self.min[j], self.max[j])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let header = rdr.headers()?.iter().collect::<Vec<_>>().join(",");
        if header != PARAMS_HEADER {
            return Err(Error::Schema(format!("normalization header `{header}` is not `{PARAMS_HEADER}`")));
        }
        let mut p = NormalizationParams { columns: Vec::new(), min: Vec::new(), max: Vec::new() };
        for rec in rdr.records() {
            let rec = rec?;
            let num = |j: usize| {
                let v = rec.get(j).unwrap_or("");
                v.parse::<f64>().map_err(|_| Error::Data(format!("bad normalization value `{v}`")))
            };
            p.columns.push(rec.get(0).unwrap_or("").to_string());
            p.min.push(num(1)?);
            p.max.push(num(2)?);
        }
        p.validate()?;
        Ok(p)
    }

    pub fn read_csv_file(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    /// Errors unless the columns equal `expected`, in order.
    pub fn check_columns(&self, expected: &[&str]) -> Result<()> {
        if self.columns.iter().map(String::as_str).ne(expected.iter().copied()) {
            return Err(Error::Schema(format!(
                "normalization columns [{}] do not match [{}]",
                self.columns.join(","),
                expected.join(",")
            )));
        }
        Ok(())
    }

    /// The ranges of `columns`, in that order.
    pub fn select(&self, columns: &[&str]) -> Result<Self> {
        let mut out = NormalizationParams { columns: Vec::new(), min: Vec::new(), max: Vec::new() };
        for c in columns {
            let j = self
                .columns
                .iter()
                .position(|x| x == c)
                .ok_or_else(|| Error::Schema(format!("no normalization range for column `{c}`")))?;
            out.columns.push(self.columns[j].clone());
            out.min.push(self.min[j]);
            out.max.push(self.max[j]);
        }
        Ok(out)
    }
}

fn check_rows(width: usize, rows: &[Vec<f64>]) -> Result<()> {
    for (i, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(Error::dimension(format!("row {i}"), width, row.len()));
        }
        if let Some(j) = row.iter().position(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!("row {i}, column {j}: value {} is not finite", row[j])));
        }
    }
    Ok(())
}

/// Scales a dataset with `params`, or with ranges fitted on the dataset itself.
pub fn normalize(
    dataset: &Dataset,
    params: Option<&NormalizationParams>,
) -> Result<(Dataset, NormalizationParams)> {
    let columns = dataset.feature_columns();
    let mut rows: Vec<Vec<f64>> = dataset.rows.iter().map(|r| r.features.clone()).collect();
    let params = match params {
        Some(p) => {
            p.check_columns(columns)?;
            p.clone()
        }
        None => NormalizationParams::fit(columns, &rows)?,
    };
    params.apply(&mut rows)?;
    let mut out = dataset.clone();
    for (row, features) in out.rows.iter_mut().zip(rows) {
        row.features = features;
    }
    Ok((out, params))
}

use crate::ability::{fit_linear_profile, LinearFit};
use crate::error::{Error, Result};
use serde::Serialize;
use std::io::Read;

const MISSING: &str = "NA";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub skill: String,
    /// Difficulty of the benchmark skill in [0,1].
    pub proficiency: f64,
    /// One entry per worker column; `None` where the cell is `NA`.
    pub accuracy: Vec<Option<f64>>,
}

/// Accuracy of several workers on benchmark skills of known difficulty.
///
/// CSV layout: `skill,proficiency,<worker>,<worker>...`, with `NA` for absent cells.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkTable {
    pub columns: Vec<String>,
    pub rows: Vec<BenchmarkRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ColumnFit {
    pub column: String,
    pub fit: LinearFit,
}

fn cell(raw: &str, field: impl Fn() -> String) -> Result<f64> {
    let v: f64 = raw.trim().parse().map_err(|_| Error::load(field(), format!("`{raw}` is not a number")))?;
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::load(field(), format!("{v} is outside [0,1]")));
    }
    Ok(v)
}

impl BenchmarkTable {
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.len() < 3 || &header[0] != "skill" || &header[1] != "proficiency" {
            return Err(Error::load("header", "expected `skill,proficiency,<worker>...`"));
        }
        let columns: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
        let mut rows = Vec::new();
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let skill = rec[0].to_string();
            let proficiency = cell(&rec[1], || format!("row {}: proficiency", r + 1))?;
            let accuracy = columns
                .iter()
                .enumerate()
                .map(|(k, col)| {
                    let raw = &rec[k + 2];
                    if raw == MISSING {
                        Ok(None)
                    } else {
                        cell(raw, || format!("row {}: {col}", r + 1)).map(Some)
                    }
                })
                .collect::<Result<_>>()?;
            rows.push(BenchmarkRow { skill, proficiency, accuracy });
        }
        Ok(BenchmarkTable { columns, rows })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_reader(text.as_bytes())
    }

    /// (difficulty, accuracy) pairs of a column, skipping absent cells.
    pub fn points(&self, column: &str) -> Result<Vec<(f64, f64)>> {
        let k = self
            .columns
            .iter()
            .position(|c| c == column)
            .ok_or_else(|| Error::param(format!("no column `{column}` (have {:?})", self.columns)))?;
        Ok(self.rows.iter().filter_map(|r| r.accuracy[k].map(|y| (r.proficiency, y))).collect())
    }

    pub fn fit(&self, column: &str) -> Result<LinearFit> {
        fit_linear_profile(&self.points(column)?)
    }

    pub fn fit_all(&self) -> Result<Vec<ColumnFit>> {
        self.columns
            .iter()
            .map(|c| {
                Ok(ColumnFit {
                    column: c.clone(),
                    fit: self.fit(c)?,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_na_and_fits() {
        let t = BenchmarkTable::parse("skill,proficiency,x,y\na,0.0,1.0,NA\nb,0.5,0.75,0.5\nc,1.0,0.5,NA\n").unwrap();
        assert_eq!(t.columns, vec!["x", "y"]);
        assert_eq!(t.rows[0].accuracy, vec![Some(1.0), None]);
        let f = t.fit("x").unwrap();
        assert!((f.a - 0.5).abs() < 1e-12);
        assert!(matches!(t.fit("y"), Err(Error::DegenerateFit(_))));
        assert!(t.fit("z").is_err());
    }

    #[test]
    fn rejects_bad_cells() {
        assert!(BenchmarkTable::parse("skill,proficiency,x\na,0.2,1.5\n").is_err());
        assert!(BenchmarkTable::parse("skill,proficiency,x\na,0.2,n/a\n").is_err());
        assert!(BenchmarkTable::parse("name,p,x\na,0.2,0.5\n").is_err());
    }
}

//! Delimited numeric tables and JSON summaries.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

pub const PROFILE_COLUMNS: [&str; 17] = [
    "x", "u", "v", "w", "B2", "B3", "zeta2", "zeta3", "T", "rho", "p", "p_t", "T_e", "T_i", "J2", "J3", "residual_worst",
];

/// A header line plus rows of floats, written with 17 significant digits so
/// that reading the file back reproduces every value exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.header.len(), "row width does not match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| CliError::Config("empty table".into()))?
            .split(',')
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|c| c.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Config(format!("table row {}: {e}", k + 1)))?;
            if row.len() != header.len() {
                return Err(CliError::Config(format!("table row {} has {} cells, header has {}", k + 1, row.len(), header.len())));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_atomic(path, self.render().as_bytes())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_round_trip_exactly() {
        let mut t = Table::new(&["x", "y"]);
        for v in [0.1, -1.0 / 3.0, 1e-300, f64::MAX, -0.0, 2.0f64.sqrt()] {
            t.push(vec![v, v * 7.0]);
        }
        t.push(vec![f64::NAN, 1.0]);
        let back = Table::parse(&t.render()).unwrap();
        assert_eq!(back.header, t.header);
        for (a, b) in back.rows.iter().zip(&t.rows) {
            for (x, y) in a.iter().zip(b) {
                assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()));
            }
        }
    }

    #[test]
    fn ragged_rows_are_rejected() {
        assert!(Table::parse("a,b\n1,2\n3\n").is_err());
        assert!(Table::parse("a\nx\n").is_err());
    }
}

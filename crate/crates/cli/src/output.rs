use std::path::PathBuf;

use serde_json::Value;

use crate::commands::CliError;

/// Version of the JSON layout and CSV column order.
pub const SCHEMA_VERSION: u32 = 1;

/// A JSON report and an optional CSV table.
pub struct Artifacts {
    pub json: Value,
    pub csv: Option<Table>,
    pub out: Option<PathBuf>,
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(CliError::csv)?;
        for row in &self.rows {
            w.write_record(row).map_err(CliError::csv)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::io(e.to_string()))
    }
}

impl Artifacts {
    /// Writes `out` (JSON) and `out` with a `.csv` extension, or prints the
    /// JSON to stdout when no path is given.
    pub fn emit(&self) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(&self.json).map_err(|e| CliError::io(e.to_string()))?;
        match &self.out {
            None => println!("{text}"),
            Some(path) => {
                std::fs::write(path, text + "\n").map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
                if let Some(table) = &self.csv {
                    let csv_path = path.with_extension("csv");
                    std::fs::write(&csv_path, table.render()?).map_err(|e| CliError::io(format!("{}: {e}", csv_path.display())))?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_quotes_labels_with_commas() {
        let mut t = Table::new(vec!["region", "c_hat"]);
        t.push(vec!["grating(4,0.5)".into(), "0.25".into()]);
        assert_eq!(t.render().ok().unwrap(), "region,c_hat\n\"grating(4,0.5)\",0.25\n");
    }
}

//! Measured B-H curves from CSV (`h_A_per_m,b_tesla`).

use std::path::Path;

use cvsr_core::material::MaterialCurve;

use crate::config::ConfigError;

const HEADER: [&str; 2] = ["h_A_per_m", "b_tesla"];

pub fn load_curve_csv(path: &Path) -> Result<MaterialCurve, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_curve_csv(&text).map_err(|reason| ConfigError::Invalid {
        field: "material.curve_csv".into(),
        reason: format!("{}: {reason}", path.display()),
    })
}

/// Parses the curve table. H must be strictly increasing and the table
/// must pass through the origin.
pub fn parse_curve_csv(text: &str) -> Result<MaterialCurve, String> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| e.to_string())?;
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(format!("header must be `{}`", HEADER.join(",")));
    }
    let mut points = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let field = |i: usize| -> Result<f64, String> {
            rec.get(i)
                .ok_or_else(|| format!("row {}: missing column", k + 2))?
                .parse::<f64>()
                .map_err(|e| format!("row {}: {e}", k + 2))
        };
        points.push((field(0)?, field(1)?));
    }
    MaterialCurve::table(&points).map_err(|e| e.to_string())
}

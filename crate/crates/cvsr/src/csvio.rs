//! Waveform CSV files.
//!
//! Header cells are `<channel>_<unit>` (`t_s,i_ac_A,b_middle_T`). Values are
//! written in scientific notation with 17 significant digits, which parses
//! back to the identical `f64`. Lines end with `\n`.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use cvsr_core::analysis::TimeSeries;
use cvsr_core::solver::CHANNELS;

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

/// 17 significant digits; non-finite values are spelled `NaN`/`inf`.
pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn header_cell(name: &str, unit: &str) -> String {
    format!("{name}_{unit}")
}

/// Writes the series to `out` with every channel in storage order.
pub fn write_series<W: Write>(ts: &TimeSeries, out: W) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(ts.channels().iter().map(|c| header_cell(&c.name, &c.unit)))?;
    let mut row = Vec::with_capacity(ts.channels().len());
    for k in 0..ts.len() {
        row.clear();
        row.extend(ts.channels().iter().map(|c| format_value(c.data[k])));
        w.write_record(&row)?;
    }
    w.flush()
}

pub fn emit_csv(ts: &TimeSeries, path: &Path) -> Result<(), CsvError> {
    let io_err = |source| CsvError::Io {
        path: path.to_path_buf(),
        source,
    };
    if ts.is_empty() {
        return Err(CsvError::Format {
            path: path.to_path_buf(),
            reason: "refusing to write an empty series".into(),
        });
    }
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut buf = io::BufWriter::new(file);
    write_series(ts, &mut buf).map_err(io_err)?;
    buf.flush().map_err(io_err)
}

/// Splits `i_ac_A` into (`i_ac`, `A`) using the known channel table, so
/// channel names containing `_` stay intact.
fn split_header(cell: &str) -> Option<(String, String)> {
    if let Some((n, u)) = CHANNELS.iter().find(|(n, u)| cell == header_cell(n, u)) {
        return Some((n.to_string(), u.to_string()));
    }
    let (n, u) = cell.rsplit_once('_')?;
    Some((n.to_string(), u.to_string()))
}

/// Parses text produced by [`write_series`]. The time step is recovered
/// from the first and last time stamps.
pub fn parse_series(text: &str) -> Result<TimeSeries, String> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header: Vec<(String, String)> = rdr
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(|c| split_header(c).ok_or_else(|| format!("header cell `{c}` has no unit suffix")))
        .collect::<Result<_, _>>()?;
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        for (col, cell) in cols.iter_mut().zip(rec.iter()) {
            col.push(cell.parse().map_err(|e| format!("row {}: `{cell}`: {e}", k + 2))?);
        }
    }
    let t = header
        .iter()
        .position(|(n, _)| n == "t")
        .map(|i| &cols[i])
        .ok_or("missing time column `t_s`")?;
    if t.len() < 2 {
        return Err("need at least two samples".into());
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    let mut ts = TimeSeries::new(dt).map_err(|e| e.to_string())?;
    for ((name, unit), data) in header.into_iter().zip(cols) {
        ts.push_channel(&name, &unit, data).map_err(|e| e.to_string())?;
    }
    Ok(ts)
}

pub fn read_csv(path: &Path) -> Result<TimeSeries, CsvError> {
    let text = std::fs::read_to_string(path).map_err(|source| CsvError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_series(&text).map_err(|reason| CsvError::Format {
        path: path.to_path_buf(),
        reason,
    })
}

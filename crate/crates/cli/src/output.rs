//! CSV emission: an echoed-config comment block, one header row, then one
//! record per grid point. Floats print as shortest round-trip decimals,
//! missing values as `NA`. File output goes through a temporary sibling
//! and a final rename so a failed run never leaves a partial file.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::sweep::{SweepResult, SweepRow};

/// Quotes a field per RFC 4180 when it contains a comma, quote or newline.
fn csv_field(raw: &str) -> String {
    if raw.contains(',') || raw.contains('"') || raw.contains('\n') || raw.contains('\r') {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw.to_string()
    }
}

fn float_cell(v: Option<f64>) -> String {
    match v {
        Some(x) => x.to_string(),
        None => "NA".into(),
    }
}

fn bool_cell(v: Option<bool>) -> String {
    match v {
        Some(b) => b.to_string(),
        None => "NA".into(),
    }
}

fn row_cells(columns: &[&str], row: &SweepRow) -> Vec<String> {
    columns
        .iter()
        .map(|col| match *col {
            "omega" => row.omega.to_string(),
            "T" => row.temperature.to_string(),
            "E_simon" => float_cell(row.e_simon),
            "E_product" => float_cell(row.e_product),
            "E_sum" => float_cell(row.e_sum),
            "tripartite_fully_inseparable" => bool_cell(row.tripartite_fully_inseparable),
            "F_tele" => float_cell(row.f_tele),
            "beats_classical_tele" => bool_cell(row.beats_classical_tele),
            "F_clone" => float_cell(row.f_clone),
            "beats_classical_clone" => bool_cell(row.beats_classical_clone),
            "error" => csv_field(row.error.as_deref().unwrap_or("")),
            other => unreachable!("unknown column {other}"),
        })
        .collect()
}

/// Writes the full CSV document to `w`.
pub fn write_csv(
    result: &SweepResult,
    echo: &[(String, String)],
    w: &mut dyn Write,
) -> io::Result<()> {
    for (key, value) in echo {
        writeln!(w, "# {key} = {value}")?;
    }
    writeln!(w, "{}", result.columns.join(","))?;
    for row in &result.rows {
        writeln!(w, "{}", row_cells(&result.columns, row).join(","))?;
    }
    Ok(())
}

/// Writes the CSV to `dest` atomically (temporary file + rename).
pub fn emit_csv(result: &SweepResult, echo: &[(String, String)], dest: &Path) -> io::Result<()> {
    let tmp = dest.with_extension("csv.tmp");
    {
        let file = fs::File::create(&tmp)?;
        let mut writer = io::BufWriter::new(file);
        if let Err(e) = write_csv(result, echo, &mut writer) {
            drop(writer);
            let _ = fs::remove_file(&tmp);
            return Err(e);
        }
        writer.flush()?;
    }
    match fs::rename(&tmp, dest) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

//! CSV/JSON emission with a reproducibility metadata block.
//!
//! Floats are printed with 17 significant digits (`{:.16e}`), which
//! round-trips f64 exactly; re-emitting a re-parsed file is byte-identical.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::CliError;

/// 17-significant-digit scientific form; exact round trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Reproducibility metadata carried by every output file.
pub struct Meta {
    pub command_line: String,
    pub seed: u64,
    pub stream: u64,
}

impl Meta {
    pub fn csv_block(&self) -> String {
        format!(
            "# generator = cg-lab {}\n# reproduce = {}\n# seed = {}\n# stream = {}\n",
            env!("CARGO_PKG_VERSION"),
            self.command_line,
            self.seed,
            self.stream
        )
    }

    pub fn json_value(&self) -> Value {
        serde_json::json!({
            "generator": format!("cg-lab {}", env!("CARGO_PKG_VERSION")),
            "reproduce": self.command_line,
            "seed": self.seed,
            "stream": self.stream,
        })
    }
}

/// Renders a CSV document: metadata comments, header, then rows.
pub fn render_csv(meta: &Meta, header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = meta.csv_block();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Renders a JSON document with the metadata under `"meta"`; key order is
/// the serializer's stable (sorted) order.
pub fn render_json(meta: &Meta, mut body: Value) -> String {
    if let Value::Object(map) = &mut body {
        map.insert("meta".into(), meta.json_value());
    }
    let mut s = serde_json::to_string_pretty(&body).expect("valid json");
    s.push('\n');
    s
}

/// Writes to `path` or, when absent, to stdout.
pub fn write_out(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, content).map_err(|e| {
            CliError::Runtime(format!("cannot write {}: {e}", p.display()))
        }),
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| CliError::Runtime(format!("cannot write stdout: {e}"))),
    }
}

/// Reads radii from a plain CSV: one value per line (first column), `#`
/// comments and a non-numeric header row are skipped.
pub fn read_radii_csv(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    let mut radii = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let first = line.split(',').next().unwrap_or("").trim();
        match first.parse::<f64>() {
            Ok(v) => radii.push(v),
            Err(_) if lineno < 8 => continue, // header row
            Err(_) => {
                return Err(CliError::Validation(format!(
                    "{}:{}: not a number: {first:?}",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    if radii.is_empty() {
        return Err(CliError::Validation(format!(
            "{}: no radii found",
            path.display()
        )));
    }
    Ok(radii)
}

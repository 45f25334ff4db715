//! Report and series files. Every file is written to a temporary sibling and
//! renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use hmhd_core::experiments::{ExperimentReport, Series};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;

/// First line of every series file.
pub const CSV_VERSION: &str = "#hmhd-series v1";
pub const CSV_HEADER: &str = "t,norm_name,value";
pub const REPORT_SCHEMA: &str = "hmhd-report/1";

pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

pub fn series_csv(series: &[Series]) -> String {
    let mut s = format!("{CSV_VERSION}\n{CSV_HEADER}\n");
    for ser in series {
        for (t, v) in ser.times.iter().zip(&ser.values) {
            s.push_str(&format!("{t},{},{v}\n", ser.name));
        }
    }
    s
}

/// Parses a series file into `(t, name, value)` rows. The version line is
/// optional so hand-written files are accepted.
pub fn parse_series_csv(text: &str) -> Result<Vec<(f64, String, f64)>, String> {
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if i == 0 && line != CSV_VERSION {
                return Err(format!("unsupported series version '{line}'"));
            }
            continue;
        }
        if !header_seen {
            if line.replace(' ', "") != CSV_HEADER {
                return Err(format!("line {}: expected header '{CSV_HEADER}'", i + 1));
            }
            header_seen = true;
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("line {}: expected 3 columns", i + 1));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| format!("line {}: bad number '{s}'", i + 1));
        rows.push((num(parts[0])?, parts[1].to_string(), num(parts[2])?));
    }
    Ok(rows)
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Wraps a result with the resolved configuration, its hash and a timestamp
/// kept in its own top-level field.
pub fn envelope(command: &str, cfg: &RunConfig, result: impl Serialize) -> Value {
    json!({
        "schema": REPORT_SCHEMA,
        "command": command,
        "config_hash": cfg.hash(),
        "config": cfg.echo(),
        "result": result,
        "timestamp": timestamp(),
    })
}

pub fn write_json(path: &Path, value: &Value) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Writes `<dir>/<name>.json` (without the series) and `<dir>/<name>.csv`.
pub fn write_report(dir: &Path, name: &str, command: &str, cfg: &RunConfig, report: &ExperimentReport) -> std::io::Result<PathBuf> {
    let csv = dir.join(format!("{name}.csv"));
    write_atomic(&csv, series_csv(&report.series).as_bytes())?;
    let mut slim = report.clone();
    slim.series.clear();
    let mut v = serde_json::to_value(&slim).expect("reports serialize");
    v["series_csv"] = json!(format!("{name}.csv"));
    v["series_names"] = json!(report.series.iter().map(|s| s.name.clone()).collect::<Vec<_>>());
    let path = dir.join(format!("{name}.json"));
    write_json(&path, &envelope(command, cfg, v))?;
    Ok(path)
}

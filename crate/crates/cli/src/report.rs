//! Report rows, CSV and summary writers.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const CSV_COLUMNS: [&str; 9] =
    ["instance", "analysis", "quantity", "t_or_x", "value", "tol", "horizon", "truncated", "method"];

/// One `(time or point, quantity)` observation. `method` records where the
/// number came from, prefixed `criterion:`, `detector:` or `check:`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub instance: String,
    pub analysis: String,
    pub quantity: String,
    pub t_or_x: Option<f64>,
    pub value: f64,
    pub tol: Option<f64>,
    pub horizon: Option<f64>,
    pub truncated: bool,
    pub method: String,
}

/// Stable sort by `(instance, analysis, t_or_x)`; rows without a position come first.
pub fn sort_rows(rows: &mut [Row]) {
    rows.sort_by(|a, b| {
        a.instance.cmp(&b.instance).then_with(|| a.analysis.cmp(&b.analysis)).then_with(|| match (a.t_or_x, b.t_or_x) {
            (None, None) => std::cmp::Ordering::Equal,
            (None, Some(_)) => std::cmp::Ordering::Less,
            (Some(_), None) => std::cmp::Ordering::Greater,
            (Some(x), Some(y)) => x.total_cmp(&y),
        })
    });
}

pub fn write_csv<W: Write>(out: W, rows: &[Row]) -> anyhow::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[Row]) -> anyhow::Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    Ok(String::from_utf8(buf)?)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `<name>.csv` and `<name>.summary.json` under `dir`.
pub fn write_files(dir: &Path, name: &str, rows: &[Row], summary: &impl Serialize) -> anyhow::Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let csv_path = dir.join(format!("{name}.csv"));
    let json_path = dir.join(format!("{name}.summary.json"));
    let file = std::fs::File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
    write_csv(std::io::BufWriter::new(file), rows)?;
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    std::fs::write(&json_path, text).with_context(|| format!("writing {}", json_path.display()))?;
    Ok((csv_path, json_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(analysis: &str, t: Option<f64>, value: f64) -> Row {
        Row {
            instance: "a".into(),
            analysis: analysis.into(),
            quantity: "q".into(),
            t_or_x: t,
            value,
            tol: Some(0.5),
            horizon: None,
            truncated: false,
            method: "detector:DirectScan".into(),
        }
    }

    #[test]
    fn sorting_is_stable_and_keyed() {
        let mut rows = vec![row("b", Some(2.0), 1.0), row("a", Some(3.0), 2.0), row("a", None, 3.0), row("a", Some(3.0), 4.0)];
        sort_rows(&mut rows);
        let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
        assert_eq!(values, vec![3.0, 2.0, 4.0, 1.0]);
    }

    #[test]
    fn csv_layout() {
        let text = csv_string(&[row("a", Some(1.5), 0.25)]).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(lines.next().unwrap(), "a,a,q,1.5,0.25,0.5,,false,detector:DirectScan");
    }

    #[test]
    fn hashing() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}

//! CSV and manifest emission for experiment artifacts.
//!
//! Reals are written in scientific notation with 17 significant digits, so
//! parsing an emitted file recovers every f64 bit-exactly. Each run directory
//! gets a `config.json` (the fully resolved configuration), a `plot.py` stub
//! that renders the CSVs, and a `manifest.json` listing every emitted file
//! with its data row count.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::optimizer::TrainingTrace;
use crate::quadrature::Grid;

/// 17 significant digits: enough for bit-exact f64 round-trips.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub const TRACE_HEADER: [&str; 4] = ["epoch", "energy", "l2_error", "linf_error"];
pub const FIELD_HEADER: [&str; 3] = ["x", "u", "u_exact"];
pub const SLICE_HEADER: [&str; 3] = ["eps1", "eps2", "energy"];

/// One emitted file with its number of data rows (0 for non-CSV files).
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct FileRecord {
    pub name: String,
    pub rows: usize,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    timestamp_unix: u64,
    config: &'a C,
    files: &'a [FileRecord],
}

/// Collects artifacts for one run directory and writes the closing manifest.
#[derive(Debug)]
pub struct Reporter {
    dir: PathBuf,
    files: Vec<FileRecord>,
}

impl Reporter {
    pub fn create(dir: impl Into<PathBuf>) -> Result<Reporter> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Reporter {
            dir,
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[FileRecord] {
        &self.files
    }

    /// Writes a CSV with a trailing newline; every row must match the header
    /// width.
    pub fn emit_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        for row in rows {
            if row.len() != header.len() {
                return Err(Error::RowWidthMismatch {
                    expected: header.len(),
                    got: row.len(),
                });
            }
        }
        let path = self.dir.join(name);
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        let io_err = |e| Error::io(&path, e);
        writeln!(w, "{}", header.join(",")).map_err(io_err)?;
        for row in rows {
            writeln!(w, "{}", row.join(",")).map_err(io_err)?;
        }
        w.flush().map_err(io_err)?;
        self.files.push(FileRecord {
            name: name.to_string(),
            rows: rows.len(),
        });
        Ok(path)
    }

    /// Writes a non-CSV artifact (scripts, JSON blobs) verbatim.
    pub fn emit_text(&mut self, name: &str, content: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        self.files.push(FileRecord {
            name: name.to_string(),
            rows: 0,
        });
        Ok(path)
    }

    /// Writes `plot.py`, `config.json`, then `manifest.json`, and returns the
    /// final file list.
    pub fn finish<C: Serialize>(mut self, config: &C, seed: u64) -> Result<Vec<FileRecord>> {
        self.emit_text("plot.py", PLOT_SCRIPT)?;
        let config_json =
            serde_json::to_string_pretty(config).expect("config serializes to JSON");
        self.emit_text("config.json", &config_json)?;

        let timestamp_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let manifest = Manifest {
            tool: "ritzlab",
            version: env!("CARGO_PKG_VERSION"),
            seed,
            timestamp_unix,
            config,
            files: &self.files,
        };
        let path = self.dir.join("manifest.json");
        let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes to JSON");
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        Ok(self.files)
    }
}

/// Rows for a training trace: epoch 0 (initial state) followed by one row per
/// epoch, matching [`TRACE_HEADER`]. Error columns are empty when the run has
/// no reference field.
pub fn trace_rows(trace: &TrainingTrace) -> Vec<Vec<String>> {
    std::iter::once(&trace.initial)
        .chain(trace.records.iter())
        .map(|r| {
            vec![
                r.epoch.to_string(),
                fmt_f64(r.objective),
                r.rel_l2.map(fmt_f64).unwrap_or_default(),
                r.linf.map(fmt_f64).unwrap_or_default(),
            ]
        })
        .collect()
}

/// Rows for a field dump matching [`FIELD_HEADER`].
pub fn field_rows(grid: &Grid, u: &[f64], exact: Option<&[f64]>) -> Vec<Vec<String>> {
    grid.points()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            vec![
                fmt_f64(x),
                fmt_f64(u[i]),
                exact.map(|e| fmt_f64(e[i])).unwrap_or_default(),
            ]
        })
        .collect()
}

/// Minimal CSV reader for round-trip checks: header plus string fields.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .unwrap_or_default()
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    Ok((header, rows))
}

const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Render the CSV artifacts in this directory with matplotlib."""
import csv
import glob
import math
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def load(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    data = [[float(c) if c else math.nan for c in row] for row in rows[1:]]
    return header, data


for path in sorted(glob.glob(os.path.join(HERE, "*.csv"))):
    name = os.path.basename(path)[:-4]
    header, rows = load(path)
    if not rows or not all(isinstance(v, float) for v in rows[0]):
        continue
    cols = list(zip(*rows))
    fig, ax = plt.subplots(figsize=(6, 4))
    if header[:3] == ["eps1", "eps2", "energy"]:
        n = math.isqrt(len(rows))
        surface = [cols[2][i * n:(i + 1) * n] for i in range(n)]
        im = ax.imshow(surface, origin="lower", aspect="auto",
                       extent=[min(cols[1]), max(cols[1]), min(cols[0]), max(cols[0])])
        fig.colorbar(im, ax=ax, label="energy")
        ax.set_xlabel("eps2")
        ax.set_ylabel("eps1")
    elif header[0] == "x":
        for label, col in zip(header[1:], cols[1:]):
            ax.plot(cols[0], col, label=label)
        ax.set_xlabel("x")
        ax.legend()
    elif header[0] == "epoch":
        ax.plot(cols[0], cols[1])
        ax.set_xlabel("epoch")
        ax.set_ylabel(header[1])
    else:
        plt.close(fig)
        continue
    ax.set_title(name)
    fig.tight_layout()
    fig.savefig(os.path.join(HERE, name + ".png"), dpi=140)
    plt.close(fig)

print("plots written to", HERE)
"#;

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn f64_formatting_round_trips_bit_exactly() {
        for x in [
            0.25,
            adversarial(),
            -28.144773234035136,
            1.0 / 3.0,
            f64::MIN_POSITIVE,
            -0.0,
            1e300,
        ] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} -> {s} -> {back}");
        }
    }

    fn adversarial() -> f64 {
        // a value whose shortest decimal is long
        0.1 + 0.2
    }

    #[test]
    fn csv_emission_and_row_counts() {
        let dir = tempdir().unwrap();
        let mut rep = Reporter::create(dir.path().join("run")).unwrap();
        let rows = vec![
            vec!["1".into(), fmt_f64(1.5)],
            vec!["2".into(), fmt_f64(-2.5)],
        ];
        let path = rep.emit_csv("t.csv", &["epoch", "energy"], &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.ends_with('\n'));
        assert_eq!(text.lines().count(), 3);
        assert_eq!(rep.files()[0], FileRecord { name: "t.csv".into(), rows: 2 });

        let (header, parsed) = read_csv(&path).unwrap();
        assert_eq!(header, vec!["epoch", "energy"]);
        let back: f64 = parsed[1][1].parse().unwrap();
        assert_eq!(back, -2.5);
    }

    #[test]
    fn mismatched_row_width_rejected() {
        let dir = tempdir().unwrap();
        let mut rep = Reporter::create(dir.path()).unwrap();
        let bad = vec![vec!["1".into()]];
        assert!(matches!(
            rep.emit_csv("bad.csv", &["a", "b"], &bad),
            Err(Error::RowWidthMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn finish_writes_config_and_manifest() {
        #[derive(Serialize)]
        struct Conf {
            name: &'static str,
        }
        let dir = tempdir().unwrap();
        let mut rep = Reporter::create(dir.path()).unwrap();
        rep.emit_csv("a.csv", &["v"], &[vec!["1".into()]]).unwrap();
        let files = rep.finish(&Conf { name: "demo" }, 7).unwrap();
        assert!(files.iter().any(|f| f.name == "a.csv" && f.rows == 1));
        assert!(files.iter().any(|f| f.name == "config.json"));
        assert!(files.iter().any(|f| f.name == "plot.py"));
        let manifest: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("manifest.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(manifest["seed"], 7);
        assert_eq!(manifest["config"]["name"], "demo");
        let listed = manifest["files"].as_array().unwrap();
        // every listed file exists with the declared row count
        for f in listed {
            let p = dir.path().join(f["name"].as_str().unwrap());
            assert!(p.exists(), "{p:?} listed but missing");
            if f["name"].as_str().unwrap().ends_with(".csv") {
                let text = std::fs::read_to_string(&p).unwrap();
                assert_eq!(text.lines().count(), 1 + f["rows"].as_u64().unwrap() as usize);
            }
        }
    }
}

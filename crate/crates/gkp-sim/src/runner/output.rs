use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::Command;

use num_complex::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// A result table; every row carries its own wall time and an optional error tag.
#[derive(Clone, Debug)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Row>,
}

#[derive(Clone, Debug)]
pub struct Row {
    pub cells: Vec<String>,
    pub seconds: f64,
    pub error: Option<String>,
}

impl Table {
    pub fn new(name: &str, header: Vec<String>) -> Self {
        Self { name: name.into(), header, rows: Vec::new() }
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

/// Columns `label_re`, `label_im`, `label_abs` for each label.
pub fn complex_columns<'a>(labels: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    labels.into_iter().flat_map(|l| [format!("{l}_re"), format!("{l}_im"), format!("{l}_abs")]).collect()
}

pub fn complex_cells(z: Complex64) -> [String; 3] {
    [num(z.re), num(z.im), num(z.norm())]
}

/// Shortest round-trip representation; scientific notation outside a readable range.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v == 0.0 || (1e-4..1e15).contains(&v.abs()) || v.is_infinite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn nan_cells(n: usize) -> Vec<String> {
    vec!["NaN".into(); n]
}

/// Writes `<name>.csv` for each table. With `split_timings`, wall times go to a separate
/// `timings.csv` so the result files are reproducible byte for byte.
pub fn write_tables(dir: &Path, tables: &[Table], split_timings: bool) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for t in tables {
        let path = dir.join(format!("{}.csv", t.name));
        let mut w = csv::Writer::from_path(&path)?;
        let mut header = t.header.clone();
        if !split_timings {
            header.push("wall_time_s".into());
        }
        header.push("error".into());
        w.write_record(&header)?;
        for r in &t.rows {
            let mut rec = r.cells.clone();
            if !split_timings {
                rec.push(num(r.seconds));
            }
            rec.push(r.error.clone().unwrap_or_default());
            w.write_record(&rec)?;
        }
        w.flush()?;
        written.push(path);
    }
    if split_timings {
        let path = dir.join("timings.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["table", "row", "wall_time_s"])?;
        for t in tables {
            for (i, r) in t.rows.iter().enumerate() {
                w.write_record([t.name.clone(), i.to_string(), num(r.seconds)])?;
            }
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool_version: String,
    pub convention_version: String,
    pub config_sha256: String,
    pub git_revision: Option<String>,
    pub seed: u64,
    pub threads: usize,
    pub deterministic: bool,
    pub rows: usize,
    pub failures: usize,
    pub files: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn git_revision() -> Option<String> {
    let out = Command::new("git").args(["rev-parse", "HEAD"]).output().ok()?;
    out.status.success().then(|| String::from_utf8_lossy(&out.stdout).trim().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.0, 1.0, -0.25, 1e-20, 3.0e20, 0.1 + 0.2, -7.5e-5, f64::MIN_POSITIVE] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v, "{}", num(v));
        }
        assert_eq!(num(f64::NAN), "NaN");
    }

    #[test]
    fn sha_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn timings_are_split_on_request() {
        let dir = std::env::temp_dir().join(format!("gkp-out-{}", std::process::id()));
        let mut t = Table::new("t", vec!["a".into()]);
        t.rows.push(Row { cells: vec!["1".into()], seconds: 0.5, error: None });
        t.rows.push(Row { cells: vec!["NaN".into()], seconds: 0.1, error: Some("boom".into()) });
        let files = write_tables(&dir, &[t.clone()], true).unwrap();
        assert_eq!(files.len(), 2);
        assert_eq!(fs::read_to_string(dir.join("t.csv")).unwrap(), "a,error\n1,\nNaN,boom\n");
        write_tables(&dir, &[t], false).unwrap();
        assert_eq!(fs::read_to_string(dir.join("t.csv")).unwrap(), "a,wall_time_s,error\n1,0.5,\nNaN,0.1,boom\n");
        fs::remove_dir_all(dir).ok();
    }
}

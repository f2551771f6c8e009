//! Artifact writing: run manifest, CSV tables, gnuplot scripts, reports.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::failure::Failure;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Config,
    /// SHA-256 of each input file; inputs left at their defaults are absent.
    pub input_digests: BTreeMap<String, String>,
    pub version: String,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &str, config: Config) -> Self {
        RunManifest {
            command: command.to_string(),
            config,
            input_digests: BTreeMap::new(),
            version: triality_core::VERSION.to_string(),
            timings: BTreeMap::new(),
        }
    }

    pub fn add_input(&mut self, name: &str, bytes: &[u8]) {
        self.input_digests.insert(name.to_string(), sha256_hex(bytes));
    }

    /// Runs `f` and records its duration under `stage`.
    pub fn time<R>(&mut self, stage: &str, f: impl FnOnce() -> R) -> R {
        let start = Instant::now();
        let out = f();
        self.timings.insert(stage.to_string(), start.elapsed().as_secs_f64());
        out
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let io = |e: std::io::Error| Failure::io(format!("writing {}: {e}", path.display()));
    let mut file = fs::File::create(&tmp).map_err(io)?;
    file.write_all(contents).map_err(io)?;
    file.sync_all().map_err(io)?;
    drop(file);
    fs::rename(&tmp, path).map_err(io)
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Table {
    header: Vec<&'static str>,
    body: String,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            body: String::new(),
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.header.len());
        let line: Vec<String> = values.iter().map(|v| fmt17(*v)).collect();
        self.body.push_str(&line.join(","));
        self.body.push('\n');
    }

    pub fn render(&self) -> String {
        format!("{}\n{}", self.header.join(","), self.body)
    }
}

/// Artifacts of one command, written to the output directory.
pub struct Artifacts {
    dir: PathBuf,
    pub written: BTreeMap<String, String>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::io(format!("creating {}: {e}", dir.display())))?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            written: BTreeMap::new(),
        })
    }

    /// Writes a file and records its digest for the report.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), Failure> {
        write_atomic(&self.dir.join(name), contents.as_bytes())?;
        self.written.insert(name.to_string(), sha256_hex(contents.as_bytes()));
        Ok(())
    }

    pub fn write_report(&self, report: &serde_json::Value) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(report).expect("report serializes");
        text.push('\n');
        write_atomic(&self.dir.join("report.json"), text.as_bytes())
    }
}

/// Gnuplot script for a CSV; the manifest is carried as comments.
pub fn gnuplot_script(manifest: &RunManifest, csv: &str, plots: &[(&str, &str, &str)]) -> String {
    let mut s = String::new();
    let json = serde_json::to_string_pretty(&manifest_for_script(manifest)).expect("manifest serializes");
    for line in json.lines() {
        s.push_str("# ");
        s.push_str(line);
        s.push('\n');
    }
    s.push_str("set datafile separator ','\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str("set grid\n");
    for (i, (x, y, title)) in plots.iter().enumerate() {
        if i > 0 {
            s.push_str("pause -1 'next plot'\n");
        }
        s.push_str(&format!("set title '{title}'\nset xlabel '{x}'\nset ylabel '{y}'\n"));
        s.push_str(&format!("plot '{csv}' using '{x}':'{y}' with lines\n"));
    }
    s
}

/// Timings and input digests change between runs of the same config (a
/// replay reads a report instead of the original file); scripts leave them
/// out so that those runs emit identical files.
fn manifest_for_script(m: &RunManifest) -> serde_json::Value {
    let mut v = serde_json::to_value(m).expect("manifest serializes");
    if let Some(o) = v.as_object_mut() {
        o.remove("timings");
        o.remove("input_digests");
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.9325537838493363e20, 0.0, -1e-300] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(mantissa.len(), 17);
        }
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, b"one\n").unwrap();
        write_atomic(&p, b"two\n").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two\n");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.row(&[1.0, 0.5]);
        assert_eq!(t.render(), "a,b\n1.0000000000000000e0,5.0000000000000000e-1\n");
    }

    #[test]
    fn digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}

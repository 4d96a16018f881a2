//! Sample files, grids and output sinks.
//!
//! A sample file is a single-column CSV: `# key=value` metadata lines, a `q`
//! header, then one value per line in shortest round-trip form.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use qubit_purification::Rate;

use crate::args::{TimeArg, TimesArg};
use crate::error::CliError;

pub const SAMPLE_HEADER: &str = "q";

/// Relative tolerance when matching times and rates across files and flags.
pub const MATCH_TOL: f64 = 1e-9;

pub fn same_value(a: f64, b: f64) -> bool {
    (a - b).abs() <= MATCH_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Parses `start:end:points` into evenly spaced points including both ends.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Config(format!("grid '{spec}' is not of the form start:end:points"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(bad());
    };
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if !(a.is_finite() && b.is_finite()) || n == 0 {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n)
        .map(|i| {
            if i == n - 1 {
                b
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        })
        .collect())
}

pub fn rate(eta: f64) -> Result<Rate, CliError> {
    Ok(Rate::new(eta)?)
}

impl TimeArg {
    /// Physical time `t`.
    pub fn resolve(&self, eta: Rate) -> f64 {
        match (self.t, self.etat) {
            (Some(t), _) => t,
            (None, Some(s)) => s / eta.get(),
            (None, None) => unreachable!("clap requires one of --t and --etat"),
        }
    }
}

impl TimesArg {
    pub fn is_empty(&self) -> bool {
        self.t.is_none() && self.etat.is_none() && self.etat_grid.is_none()
    }

    /// Physical times `t`, in the order given.
    pub fn resolve(&self, eta: Rate) -> Result<Vec<f64>, CliError> {
        let times = if let Some(t) = &self.t {
            t.clone()
        } else if let Some(s) = &self.etat {
            s.iter().map(|s| s / eta.get()).collect()
        } else if let Some(g) = &self.etat_grid {
            parse_grid(g)?.iter().map(|s| s / eta.get()).collect()
        } else {
            return Err(CliError::Config(
                "give times with --t, --etat or --etat-grid".into(),
            ));
        };
        if times.is_empty() {
            return Err(CliError::Config("empty time list".into()));
        }
        Ok(times)
    }
}

/// Writes to a file, or to standard output when no path is given.
pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| CliError::write(dir, e))?;
            }
            let f = fs::File::create(p).map_err(|e| CliError::write(p, e))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

pub fn write_all(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    let label = path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("<stdout>"));
    let mut w = open_output(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| CliError::write(&label, e))
}

/// Metadata and values of one sample file.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleFile {
    pub metadata: BTreeMap<String, String>,
    pub values: Vec<f64>,
}

impl SampleFile {
    pub fn number(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.metadata
            .get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| CliError::Config(format!("metadata '{key}' is not a number: {v}")))
            })
            .transpose()
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = String::with_capacity(self.values.len() * 22 + 256);
        for (k, v) in &self.metadata {
            text.push_str(&format!("# {k}={v}\n"));
        }
        text.push_str(SAMPLE_HEADER);
        text.push('\n');
        for v in &self.values {
            text.push_str(&format!("{v}\n"));
        }
        fs::write(path, text).map_err(|e| CliError::write(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
        let mut metadata = BTreeMap::new();
        let mut values = Vec::new();
        let mut header = false;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((k, v)) = meta.split_once('=') {
                    metadata.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            if !header {
                if line != SAMPLE_HEADER {
                    return Err(CliError::read(
                        path,
                        format!("expected header '{SAMPLE_HEADER}', found '{line}'"),
                    ));
                }
                header = true;
                continue;
            }
            let v: f64 = line.parse().map_err(|_| {
                CliError::read(path, format!("line {}: '{line}' is not a number", n + 1))
            })?;
            values.push(v);
        }
        if values.is_empty() {
            return Err(CliError::read(path, "no samples"));
        }
        Ok(SampleFile { metadata, values })
    }
}

/// Formats an optional number for a CSV cell.
pub fn cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

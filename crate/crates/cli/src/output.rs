//! CSV payloads and JSON sidecars.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::CliError;

/// Truncation check attached to a result.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Convergence {
    pub phonon_dim: usize,
    /// What `drift` measures.
    pub measure: String,
    pub drift: f64,
    pub tolerance: f64,
    pub converged: bool,
}

/// Table plus metadata produced by one command.
#[derive(Clone, Debug)]
pub struct ResultBundle {
    pub command: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
    pub convergence: Option<Convergence>,
    pub meta: Map<String, Value>,
    /// Checks that failed; a non-empty list turns into exit code 3 after the
    /// bundle is written.
    pub failures: Vec<String>,
}

impl ResultBundle {
    pub fn new(command: &'static str, header: Vec<&'static str>) -> Self {
        Self { command, header, rows: Vec::new(), convergence: None, meta: Map::new(), failures: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| *h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// One header line, then one line per row with every value in
    /// 17-significant-digit scientific notation.
    pub fn csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn sidecar(&self, cfg: &RunConfig, wall_time: f64) -> Value {
        json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "wall_time_s": wall_time,
            "config": cfg.to_map(),
            "config_text": cfg.to_text(),
            "columns": self.header,
            "rows": self.rows.len(),
            "convergence": self.convergence,
            "results": Value::Object(self.meta.clone()),
            "failures": self.failures,
        })
    }

    /// Writes the CSV to `path` and the sidecar next to it with a `.json`
    /// extension.
    pub fn write(&self, cfg: &RunConfig, path: &Path, wall_time: f64) -> Result<PathBuf, CliError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.csv())?;
        let side = sidecar_path(path);
        let text = serde_json::to_string_pretty(&self.sidecar(cfg, wall_time)).expect("json values are finite or null");
        fs::write(&side, text + "\n")?;
        Ok(side)
    }
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

//! Result files, schema `linrate-result/1`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::{BenchError, Result};

pub const RESULT_SCHEMA: &str = "linrate-result/1";

/// One solver at one sweep value. `failure` is set exactly when `error` is absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointRecord {
    pub axis_value: f64,
    pub solver: String,
    /// Best of the timed repetitions; absent when timing is off or the solve failed.
    pub seconds: Option<f64>,
    pub error: Option<f64>,
    pub steps: Option<usize>,
    pub iterations: Option<usize>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultRecord {
    pub schema: String,
    pub generator: String,
    pub config: ExperimentConfig,
    pub points: Vec<PointRecord>,
}

impl ResultRecord {
    pub fn new(config: ExperimentConfig, points: Vec<PointRecord>) -> Self {
        Self {
            schema: RESULT_SCHEMA.to_string(),
            generator: format!("linrate-bench {}", env!("CARGO_PKG_VERSION")),
            config,
            points,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text)?;
        if r.schema != RESULT_SCHEMA {
            return Err(BenchError::Config(format!("unsupported result schema `{}`", r.schema)));
        }
        r.check()?;
        Ok(r)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| BenchError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    /// Errors nonnegative, timings positive, failures exclusive with errors.
    pub fn check(&self) -> Result<()> {
        for p in &self.points {
            let ok = p.error.is_none_or(|e| e >= 0.0)
                && p.seconds.is_none_or(|s| s > 0.0)
                && p.error.is_some() != p.failure.is_some();
            if !ok {
                return Err(BenchError::Config(format!("malformed point {p:?}")));
            }
        }
        Ok(())
    }

    /// Writes a sibling temporary file and renames it over `path`.
    pub fn write_atomic(&self, path: &Path) -> Result<()> {
        let io = |source| BenchError::Io { path: path.display().to_string(), source };
        let text = self.to_json()?;
        let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        std::fs::create_dir_all(dir).map_err(io)?;
        let stem = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let tmp = dir.join(format!(".{stem}.{}.tmp", std::process::id()));
        let result = (|| {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(text.as_bytes())?;
            f.write_all(b"\n")?;
            f.sync_all()?;
            std::fs::rename(&tmp, path)
        })();
        if result.is_err() {
            let _ = std::fs::remove_file(&tmp);
        }
        result.map_err(io)
    }
}

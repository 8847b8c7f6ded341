//! Key=value run configuration. Lines are `key = value`; `#` starts a
//! comment. Every key must belong to the command's documented set.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

pub struct RunConfig {
    values: BTreeMap<String, String>,
    base_dir: PathBuf,
}

impl RunConfig {
    /// Parses the file and rejects keys outside `allowed`.
    pub fn load(path: &Path, allowed: &[&str]) -> CliResult<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!(
                    "config {}:{}: expected key = value",
                    path.display(),
                    lineno + 1
                ))
            })?;
            let key = key.trim().to_string();
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::Usage(format!(
                    "config {}:{}: unknown key `{key}` (allowed: {})",
                    path.display(),
                    lineno + 1,
                    allowed.join(", ")
                )));
            }
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::Usage(format!(
                    "config {}:{}: duplicate key `{key}`",
                    path.display(),
                    lineno + 1
                )));
            }
        }
        let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Ok(RunConfig { values, base_dir })
    }

    pub fn str_opt(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn str_req(&self, key: &str) -> CliResult<&str> {
        self.str_opt(key)
            .ok_or_else(|| CliError::Usage(format!("config: missing required key `{key}`")))
    }

    /// Paths are resolved relative to the config file's directory.
    pub fn path_req(&self, key: &str) -> CliResult<PathBuf> {
        let raw = self.str_req(key)?;
        let p = Path::new(raw);
        let resolved = if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        };
        if !resolved.exists() {
            return Err(CliError::Data(format!(
                "config `{key}`: path {} does not exist",
                resolved.display()
            )));
        }
        Ok(resolved)
    }

    pub fn parse_opt<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.str_opt(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                CliError::Usage(format!("config `{key}`: cannot parse `{raw}`"))
            }),
        }
    }

    pub fn parse_or<T: std::str::FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        Ok(self.parse_opt(key)?.unwrap_or(default))
    }

    /// Comma-separated list of values.
    pub fn list_opt<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<Vec<T>>> {
        match self.str_opt(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|s| {
                    s.trim().parse::<T>().map_err(|_| {
                        CliError::Usage(format!("config `{key}`: cannot parse `{}`", s.trim()))
                    })
                })
                .collect::<CliResult<Vec<T>>>()
                .map(Some),
        }
    }
}

//! Flat `key=value` configuration files.
//!
//! One assignment per line; blank lines and `#` comments are ignored.
//! Command-line flags override file values, and keys a subcommand does not
//! know are rejected with their line number.

use std::path::Path;

use crate::CliError;

#[derive(Debug, Default)]
pub struct FileConfig {
    entries: Vec<(usize, String, String)>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut entries = Vec::new();
        for (index, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::validation(format!(
                    "{}:{}: expected key=value, got `{line}`",
                    path.display(),
                    index + 1
                )));
            };
            entries.push((index + 1, key.trim().to_string(), value.trim().to_string()));
        }
        Ok(FileConfig { entries })
    }

    /// Rejects keys outside the subcommand's vocabulary, naming the line.
    pub fn check_keys(&self, path: &Path, allowed: &[&str]) -> Result<(), CliError> {
        for (line, key, _) in &self.entries {
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::validation(format!(
                    "{}:{line}: unknown key `{key}`",
                    path.display()
                )));
            }
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(_, k, _)| k == key)
            .map(|(_, _, v)| v.as_str())
    }

    /// Typed read of a file value; errors name the key.
    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                CliError::validation(format!("config key `{key}`: cannot parse `{raw}`"))
            }),
        }
    }
}

/// Flag value if present, else file value, else the default.
pub fn resolve<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Flag value if present, else file value, else an error naming the field.
pub fn require<T>(flag: Option<T>, file: Option<T>, field: &str) -> Result<T, CliError> {
    flag.or(file)
        .ok_or_else(|| CliError::validation(format!("missing required value `{field}`")))
}

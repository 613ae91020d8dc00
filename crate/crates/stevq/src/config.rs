//! Plain key-value config files. Every long flag can also be set here
//! (same name, e.g. `tau-mem = 1.5`); explicit flags win over the file.

use std::collections::HashMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{AppError, Result};

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        let mut values = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(AppError::Config(format!(
                    "{} line {}: expected 'key = value', got '{raw}'",
                    path.display(),
                    i + 1
                )));
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Fills `slot` from the config when the flag was not given.
    pub fn merge<T: FromStr>(&self, slot: &mut Option<T>, key: &str) -> Result<()>
    where
        T::Err: Display,
    {
        if slot.is_none() {
            if let Some(raw) = self.get(key) {
                let value = raw.parse::<T>().map_err(|e| {
                    AppError::Config(format!("config key '{key}': bad value '{raw}' ({e})"))
                })?;
                *slot = Some(value);
            }
        }
        Ok(())
    }

    /// Boolean flags: the config can switch them on (`key = true`).
    pub fn merge_flag(&self, slot: &mut bool, key: &str) -> Result<()> {
        if !*slot {
            if let Some(raw) = self.get(key) {
                *slot = raw.parse::<bool>().map_err(|_| {
                    AppError::Config(format!("config key '{key}': bad boolean '{raw}'"))
                })?;
            }
        }
        Ok(())
    }

    /// List-valued keys (comma-separated) merged into repeatable flags.
    pub fn merge_list<T: FromStr>(&self, slot: &mut Vec<T>, key: &str) -> Result<()>
    where
        T::Err: Display,
    {
        if slot.is_empty() {
            if let Some(raw) = self.get(key) {
                for part in raw.split(',') {
                    let value = part.trim().parse::<T>().map_err(|e| {
                        AppError::Config(format!("config key '{key}': bad value '{part}' ({e})"))
                    })?;
                    slot.push(value);
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn write(name: &str, text: &str) -> PathBuf {
        let dir = std::env::temp_dir().join("stevq-config-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn parses_comments_and_values() {
        let p = write(
            "ok.cfg",
            "# comment\npooling = mean\ntau-mem = 1.5 # trailing\n\n",
        );
        let cfg = ConfigFile::load(&p).unwrap();
        assert_eq!(cfg.get("pooling"), Some("mean"));
        let mut tau: Option<f64> = None;
        cfg.merge(&mut tau, "tau-mem").unwrap();
        assert_eq!(tau, Some(1.5));
    }

    #[test]
    fn flags_win_over_file() {
        let p = write("wins.cfg", "alpha = 0.3\n");
        let cfg = ConfigFile::load(&p).unwrap();
        let mut alpha = Some(0.9f64);
        cfg.merge(&mut alpha, "alpha").unwrap();
        assert_eq!(alpha, Some(0.9));
    }

    #[test]
    fn malformed_lines_are_rejected() {
        let p = write("bad.cfg", "just-a-word\n");
        assert!(ConfigFile::load(&p).is_err());
        let p = write("badval.cfg", "threads = many\n");
        let cfg = ConfigFile::load(&p).unwrap();
        let mut threads: Option<usize> = None;
        assert!(cfg.merge(&mut threads, "threads").is_err());
    }
}

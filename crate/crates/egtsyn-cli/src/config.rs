//! Flat key=value configuration files.
//!
//! A config file supplies defaults for long flags: one `key=value` pair per
//! line, `#` starts a comment, blank lines are ignored. Keys use the flag
//! name without the leading dashes (`epochs=300`, `batch-size=64`). A flag
//! given explicitly on the command line always wins over the file.

use crate::CliError;
use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

/// Parsed config file plus bookkeeping for unused-key warnings.
#[derive(Debug)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
    consumed: BTreeMap<String, bool>,
}

impl ConfigMap {
    /// Reads `path` if given; `None` yields an empty map.
    pub fn load(path: Option<&Path>) -> Result<ConfigMap, CliError> {
        let mut entries = BTreeMap::new();
        if let Some(path) = path {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            for (idx, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(CliError::Usage(format!(
                        "config {} line {}: expected key=value, got `{raw}`",
                        path.display(),
                        idx + 1
                    )));
                };
                entries.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        let consumed = entries.keys().map(|k| (k.clone(), false)).collect();
        Ok(ConfigMap { entries, consumed })
    }

    /// Raw lookup, marking the key as consumed.
    pub fn get(&mut self, key: &str) -> Option<&str> {
        if let Some(flag) = self.consumed.get_mut(key) {
            *flag = true;
        }
        self.entries.get(key).map(String::as_str)
    }

    /// Resolves a flag: explicit value, then config entry, then `default`.
    pub fn or_default<T>(&mut self, explicit: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        if let Some(v) = explicit {
            self.get(key);
            return Ok(v);
        }
        match self.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|e| CliError::Usage(format!("config key `{key}`: {e}"))),
            None => Ok(default),
        }
    }

    /// Resolves a flag that must come from somewhere: explicit or config.
    pub fn required<T>(&mut self, explicit: Option<T>, key: &str) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        if let Some(v) = explicit {
            self.get(key);
            return Ok(v);
        }
        match self.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|e| CliError::Usage(format!("config key `{key}`: {e}"))),
            None => Err(CliError::Usage(format!("missing required flag --{key}"))),
        }
    }

    /// Prints one stderr warning per config key no flag ever looked at.
    pub fn warn_unused(&self) {
        for (key, used) in &self.consumed {
            if !used {
                eprintln!("warning: config key `{key}` was not used by this subcommand");
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_config(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_pairs_and_comments() {
        let f = write_config("epochs=12 # fast\n\n# full line comment\nlr=0.5\n");
        let mut cfg = ConfigMap::load(Some(f.path())).unwrap();
        assert_eq!(cfg.get("epochs"), Some("12"));
        assert_eq!(cfg.get("lr"), Some("0.5"));
        assert_eq!(cfg.get("missing"), None);
    }

    #[test]
    fn explicit_value_wins_over_file() {
        let f = write_config("epochs=12\n");
        let mut cfg = ConfigMap::load(Some(f.path())).unwrap();
        let v: u32 = cfg.or_default(Some(7), "epochs", 300).unwrap();
        assert_eq!(v, 7);
    }

    #[test]
    fn file_value_wins_over_default() {
        let f = write_config("epochs=12\n");
        let mut cfg = ConfigMap::load(Some(f.path())).unwrap();
        let v: u32 = cfg.or_default(None, "epochs", 300).unwrap();
        assert_eq!(v, 12);
    }

    #[test]
    fn default_applies_without_file() {
        let mut cfg = ConfigMap::load(None).unwrap();
        let v: u32 = cfg.or_default(None, "epochs", 300).unwrap();
        assert_eq!(v, 300);
    }

    #[test]
    fn malformed_line_is_a_usage_error() {
        let f = write_config("epochs\n");
        match ConfigMap::load(Some(f.path())) {
            Err(CliError::Usage(msg)) => assert!(msg.contains("line 1")),
            other => panic!("expected usage error, got {other:?}"),
        }
    }

    #[test]
    fn unparseable_value_names_the_key() {
        let f = write_config("epochs=twelve\n");
        let mut cfg = ConfigMap::load(Some(f.path())).unwrap();
        let err = cfg.or_default::<u32>(None, "epochs", 300).unwrap_err();
        match err {
            CliError::Usage(msg) => assert!(msg.contains("epochs")),
            other => panic!("expected usage error, got {other:?}"),
        }
    }

    #[test]
    fn required_errors_when_absent_everywhere() {
        let mut cfg = ConfigMap::load(None).unwrap();
        let err = cfg.required::<String>(None, "variant").unwrap_err();
        match err {
            CliError::Usage(msg) => assert!(msg.contains("--variant")),
            other => panic!("expected usage error, got {other:?}"),
        }
    }
}

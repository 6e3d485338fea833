//! Flat key=value run configuration: one assignment per line, `#` comments,
//! unknown keys rejected. Command-line flags override file values.

use std::collections::HashMap;
use std::path::Path;

pub const KNOWN_KEYS: &[&str] = &[
    "alpha",
    "dim",
    "nx",
    "tmax",
    "tau-kernel",
    "kernel-tol",
    "kernel-tmax",
    "candidates",
    "max-degree",
    "method",
    "np",
    "p-left",
    "p-right",
    "extension",
    "p-star",
    "shift-cap",
    "tau-safety",
    "cg-tol",
    "seed",
    "out",
];

#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    values: HashMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value, got `{raw}`", lineno + 1))?;
            let key = key.trim().replace('_', "-");
            let value = value.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(format!("line {}: unknown key `{key}`", lineno + 1));
            }
            if values.insert(key.clone(), value).is_some() {
                return Err(format!("line {}: duplicate key `{key}`", lineno + 1));
            }
        }
        Ok(FileConfig { values })
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| format!("config key `{key}`: cannot parse `{raw}`")),
        }
    }

    /// Serialize back in canonical (sorted) key=value form.
    #[allow(dead_code)] // exercised by the round-trip invariant test
    pub fn serialize(&self) -> String {
        let mut keys: Vec<&String> = self.values.keys().collect();
        keys.sort();
        let mut out = String::new();
        for k in keys {
            out.push_str(k);
            out.push('=');
            out.push_str(&self.values[k]);
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let c = FileConfig::parse("alpha=0.5\n# comment\nnx = 33\n").unwrap();
        assert_eq!(c.get::<f64>("alpha").unwrap(), Some(0.5));
        assert_eq!(c.get::<usize>("nx").unwrap(), Some(33));
        assert!(FileConfig::parse("bogus=1\n").is_err());
        assert!(FileConfig::parse("alpha=0.5\nalpha=0.7\n").is_err());
        assert!(FileConfig::parse("alpha 0.5\n").is_err());
    }

    #[test]
    fn round_trip_is_idempotent() {
        let c = FileConfig::parse("nx=33\nalpha=0.5\nmethod=reference\n").unwrap();
        let s1 = c.serialize();
        let s2 = FileConfig::parse(&s1).unwrap().serialize();
        assert_eq!(s1, s2);
    }
}

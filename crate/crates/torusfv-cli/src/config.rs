//! Flat, sectioned key-value configuration (INI-like).
//!
//! The format is deliberately minimal so study configurations stay
//! reproducible: `[section]` headers, `key = value` lines, `#` comments.
//! Unknown sections or keys are errors, not warnings.

use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

#[derive(Debug, Clone)]
struct Section {
    name: String,
    entries: Vec<Entry>,
}

/// Parsed configuration with consumption tracking: every key must be read
/// by the command that owns the file, otherwise `finish` reports it.
#[derive(Debug, Clone)]
pub struct Config {
    sections: Vec<Section>,
    consumed: BTreeSet<(String, String)>,
    known_sections: BTreeSet<String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut sections: Vec<Section> = Vec::new();
        let mut current: Option<usize> = None;
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| {
                        ConfigError(format!("line {line_no}: malformed section header"))
                    })?
                    .trim();
                if name.is_empty() {
                    return Err(ConfigError(format!("line {line_no}: empty section name")));
                }
                if sections.iter().any(|s| s.name == name) {
                    return Err(ConfigError(format!(
                        "line {line_no}: duplicate section [{name}]"
                    )));
                }
                sections.push(Section {
                    name: name.to_string(),
                    entries: Vec::new(),
                });
                current = Some(sections.len() - 1);
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError(format!("line {line_no}: expected `key = value`"))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(ConfigError(format!("line {line_no}: empty key")));
            }
            let section = current.ok_or_else(|| {
                ConfigError(format!("line {line_no}: key `{key}` outside any section"))
            })?;
            if sections[section].entries.iter().any(|e| e.key == key) {
                return Err(ConfigError(format!(
                    "line {line_no}: duplicate key `{key}` in [{}]",
                    sections[section].name
                )));
            }
            sections[section].entries.push(Entry {
                key,
                value,
                line: line_no,
            });
        }
        Ok(Self {
            sections,
            consumed: BTreeSet::new(),
            known_sections: BTreeSet::new(),
        })
    }

    /// Declare a section the command understands (it may still be absent).
    pub fn allow_section(&mut self, name: &str) {
        self.known_sections.insert(name.to_string());
    }

    pub fn has_section(&self, name: &str) -> bool {
        self.sections.iter().any(|s| s.name == name)
    }

    fn lookup(&mut self, section: &str, key: &str) -> Option<String> {
        self.known_sections.insert(section.to_string());
        let value = self
            .sections
            .iter()
            .find(|s| s.name == section)?
            .entries
            .iter()
            .find(|e| e.key == key)
            .map(|e| e.value.clone());
        if value.is_some() {
            self.consumed
                .insert((section.to_string(), key.to_string()));
        }
        value
    }

    pub fn get_str(&mut self, section: &str, key: &str) -> Option<String> {
        self.lookup(section, key)
    }

    pub fn require_str(&mut self, section: &str, key: &str) -> Result<String, ConfigError> {
        self.lookup(section, key)
            .ok_or_else(|| ConfigError(format!("missing {section}.{key}")))
    }

    pub fn get_f64(&mut self, section: &str, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.lookup(section, key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<f64>()
                .map(Some)
                .map_err(|_| ConfigError(format!("{section}.{key}: not a number: `{raw}`"))),
        }
    }

    pub fn require_f64(&mut self, section: &str, key: &str) -> Result<f64, ConfigError> {
        self.get_f64(section, key)?
            .ok_or_else(|| ConfigError(format!("missing {section}.{key}")))
    }

    pub fn get_usize(&mut self, section: &str, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.lookup(section, key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<usize>()
                .map(Some)
                .map_err(|_| ConfigError(format!("{section}.{key}: not an integer: `{raw}`"))),
        }
    }

    pub fn require_usize(&mut self, section: &str, key: &str) -> Result<usize, ConfigError> {
        self.get_usize(section, key)?
            .ok_or_else(|| ConfigError(format!("missing {section}.{key}")))
    }

    pub fn get_u64(&mut self, section: &str, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.lookup(section, key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<u64>()
                .map(Some)
                .map_err(|_| ConfigError(format!("{section}.{key}: not an integer: `{raw}`"))),
        }
    }

    /// Comma-separated list of cell counts.
    pub fn require_usize_list(
        &mut self,
        section: &str,
        key: &str,
    ) -> Result<Vec<usize>, ConfigError> {
        let raw = self.require_str(section, key)?;
        raw.split(',')
            .map(|tok| {
                tok.trim().parse::<usize>().map_err(|_| {
                    ConfigError(format!("{section}.{key}: not an integer: `{tok}`"))
                })
            })
            .collect()
    }

    /// Error out on any key or section the command did not consume.
    pub fn finish(&self) -> Result<(), ConfigError> {
        for section in &self.sections {
            if !self.known_sections.contains(&section.name) {
                return Err(ConfigError(format!("unknown section [{}]", section.name)));
            }
            for entry in &section.entries {
                let id = (section.name.clone(), entry.key.clone());
                if !self.consumed.contains(&id) {
                    return Err(ConfigError(format!(
                        "line {}: unknown key {}.{}",
                        entry.line, section.name, entry.key
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let mut cfg = Config::parse(
            "# header\n[grid]\nd = 2 # inline\nn = 32\n\n[time]\ndt = 0.5\n",
        )
        .unwrap();
        assert_eq!(cfg.require_usize("grid", "d").unwrap(), 2);
        assert_eq!(cfg.require_usize("grid", "n").unwrap(), 32);
        assert_eq!(cfg.require_f64("time", "dt").unwrap(), 0.5);
        cfg.finish().unwrap();
    }

    #[test]
    fn unknown_key_is_error() {
        let mut cfg = Config::parse("[grid]\nd = 2\ntypo = 1\n").unwrap();
        let _ = cfg.require_usize("grid", "d").unwrap();
        let err = cfg.finish().unwrap_err();
        assert!(err.0.contains("grid.typo"), "{err}");
    }

    #[test]
    fn unknown_section_is_error() {
        let cfg = Config::parse("[nonsense]\nx = 1\n").unwrap();
        assert!(cfg.finish().unwrap_err().0.contains("[nonsense]"));
    }

    #[test]
    fn missing_key_names_the_field() {
        let mut cfg = Config::parse("[physics]\nmu = 0.1\n").unwrap();
        let err = cfg.require_f64("physics", "gamma").unwrap_err();
        assert!(err.0.contains("physics.gamma"));
    }

    #[test]
    fn rejects_duplicates_and_malformed_lines() {
        assert!(Config::parse("[a]\nx = 1\nx = 2\n").is_err());
        assert!(Config::parse("[a]\n[a]\n").is_err());
        assert!(Config::parse("x = 1\n").is_err());
        assert!(Config::parse("[a]\njust a line\n").is_err());
    }

    #[test]
    fn list_parsing() {
        let mut cfg = Config::parse("[study]\nlevels = 16, 32,64\n").unwrap();
        assert_eq!(
            cfg.require_usize_list("study", "levels").unwrap(),
            vec![16, 32, 64]
        );
    }
}

//! TOML run configuration. Keys carry their unit as a suffix (`length_mm`, `power_w`).

use crate::CliError;
use std::path::Path;

pub struct Config {
    root: toml::Table,
    origin: String,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let root = text.parse::<toml::Table>().map_err(|e| CliError::Usage(format!("{origin}: {e}")))?;
        Ok(Self { root, origin: origin.to_string() })
    }

    pub fn has(&self, name: &str) -> bool {
        self.root.contains_key(name)
    }

    /// Section `name`, rejecting keys outside `allowed`.
    pub fn section(&self, name: &str, allowed: &[&str]) -> Result<Section<'_>, CliError> {
        let table = self
            .root
            .get(name)
            .and_then(|v| v.as_table())
            .ok_or_else(|| CliError::Usage(format!("{}: missing section [{name}]", self.origin)))?;
        Section::new(name, table, allowed)
    }

    pub fn optional_section(&self, name: &str, allowed: &[&str]) -> Result<Option<Section<'_>>, CliError> {
        if self.has(name) {
            self.section(name, allowed).map(Some)
        } else {
            Ok(None)
        }
    }
}

pub struct Section<'a> {
    name: String,
    table: &'a toml::Table,
}

impl<'a> Section<'a> {
    fn new(name: &str, table: &'a toml::Table, allowed: &[&str]) -> Result<Self, CliError> {
        if let Some(k) = table.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(CliError::Usage(format!("unknown key `{k}` in [{name}]")));
        }
        Ok(Self { name: name.to_string(), table })
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.table.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(x)) => Ok(Some(*x)),
            Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(_) => Err(CliError::Usage(format!("[{}] {key} must be a number", self.name))),
        }
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        self.opt_f64(key)?.ok_or_else(|| self.missing(key))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.opt_f64(key)?.unwrap_or(default))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.table.get(key) {
            None => Ok(default),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(*i as usize),
            Some(_) => Err(CliError::Usage(format!("[{}] {key} must be a non-negative integer", self.name))),
        }
    }

    pub fn opt_str(&self, key: &str) -> Result<Option<&'a str>, CliError> {
        match self.table.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.as_str())),
            Some(_) => Err(CliError::Usage(format!("[{}] {key} must be a string", self.name))),
        }
    }

    fn missing(&self, key: &str) -> CliError {
        CliError::Usage(format!("missing required key `{key}` in [{}]", self.name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_key_names_the_key() {
        let c = Config::parse("[sfg]\npump_nm = 1051.14\n", "test").unwrap();
        let s = c.section("sfg", &["pump_nm", "signal_nm"]).unwrap();
        assert_eq!(s.f64("pump_nm").unwrap(), 1051.14);
        let err = s.f64("signal_nm").unwrap_err().to_string();
        assert!(err.contains("signal_nm"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let c = Config::parse("[sfg]\npump_um = 1.05\n", "test").unwrap();
        assert!(c.section("sfg", &["pump_nm"]).is_err());
    }

    #[test]
    fn integers_accepted_as_numbers() {
        let c = Config::parse("[a]\nx_mm = 4\n", "test").unwrap();
        assert_eq!(c.section("a", &["x_mm"]).unwrap().f64("x_mm").unwrap(), 4.0);
    }
}

//! Run configuration: defaults, flat key/value config files, and CLI
//! overrides, with precedence flags > file > defaults.

use alpha_riccati::{Error, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl OutputFormat {
    pub fn wants_csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    pub fn wants_json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }
}

impl std::str::FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "both" => Ok(Self::Both),
            other => Err(format!("unknown format '{other}' (csv|json|both)")),
        }
    }
}

/// Everything a command run needs, snapshotted into the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub grid_n: usize,
    pub grid_m: f64,
    pub precision_bits: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub ds0: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub max_steps: usize,
    pub moment_tol: f64,
    pub verify_ceiling: f64,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
    /// Reserved for test perturbations; no production path draws from it.
    pub seed: u64,
    pub dump_operators: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid_n: 700,
            grid_m: 6.0,
            precision_bits: 256,
            newton_tol: 1e-10,
            newton_max_iter: 25,
            ds0: 1e-2,
            ds_min: 1e-5,
            ds_max: 0.1,
            max_steps: 2000,
            moment_tol: 1e-6,
            verify_ceiling: 1e-5,
            out_dir: PathBuf::from("out"),
            format: OutputFormat::Both,
            seed: 0,
            dump_operators: false,
        }
    }
}

impl RunConfig {
    /// Applies `key = value` lines from a flat config file. Blank lines and
    /// `#` comments are skipped.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "{}:{}: expected key = value",
                    path.display(),
                    lineno + 1
                )));
            };
            self.apply_kv(key.trim(), value.trim()).map_err(|e| {
                Error::Config(format!("{}:{}: {e}", path.display(), lineno + 1))
            })?;
        }
        Ok(())
    }

    fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("invalid value '{value}' for {key}")))
        }
        match key {
            "grid_n" => self.grid_n = parse(key, value)?,
            "grid_m" => self.grid_m = parse(key, value)?,
            "precision_bits" => self.precision_bits = parse(key, value)?,
            "newton_tol" => self.newton_tol = parse(key, value)?,
            "newton_max_iter" => self.newton_max_iter = parse(key, value)?,
            "ds0" => self.ds0 = parse(key, value)?,
            "ds_min" => self.ds_min = parse(key, value)?,
            "ds_max" => self.ds_max = parse(key, value)?,
            "max_steps" => self.max_steps = parse(key, value)?,
            "moment_tol" => self.moment_tol = parse(key, value)?,
            "verify_ceiling" => self.verify_ceiling = parse(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "format" => {
                self.format = value.parse().map_err(Error::Config)?;
            }
            "seed" => self.seed = parse(key, value)?,
            "dump_operators" => self.dump_operators = parse(key, value)?,
            other => {
                return Err(Error::Config(format!("unknown config key '{other}'")));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_n == 0 {
            return Err(Error::Config("grid_n must be positive".into()));
        }
        if !(self.grid_m > 0.0) {
            return Err(Error::Config("grid_m must be positive".into()));
        }
        if self.precision_bits < 64 {
            return Err(Error::Config("precision_bits must be >= 64".into()));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::Config("newton_tol must be positive".into()));
        }
        if self.newton_max_iter == 0 || self.max_steps == 0 {
            return Err(Error::Config("iteration budgets must be positive".into()));
        }
        if !(self.ds0 > 0.0 && self.ds_min > 0.0 && self.ds_max >= self.ds0) {
            return Err(Error::Config("continuation steps must be positive".into()));
        }
        Ok(())
    }

    pub fn newton_settings(&self) -> alpha_riccati::solver::NewtonSettings {
        alpha_riccati::solver::NewtonSettings {
            tolerance: self.newton_tol,
            max_iterations: self.newton_max_iter,
        }
    }

    pub fn continuation_controls(&self) -> alpha_riccati::continuation::ContinuationControls {
        alpha_riccati::continuation::ContinuationControls {
            ds0: self.ds0,
            ds_min: self.ds_min,
            ds_max: self.ds_max,
            max_steps: self.max_steps,
            newton_tol: self.newton_tol,
            moment_tol: self.moment_tol,
            ..Default::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flag_precedence_is_callers_concern() {
        let mut cfg = RunConfig::default();
        let dir = std::env::temp_dir().join("ar-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.conf");
        std::fs::write(&path, "# comment\ngrid_n = 300\nformat = csv\n").unwrap();
        cfg.apply_file(&path).unwrap();
        assert_eq!(cfg.grid_n, 300);
        assert!(cfg.format.wants_csv() && !cfg.format.wants_json());
    }

    #[test]
    fn bad_keys_and_values_are_config_errors() {
        let mut cfg = RunConfig::default();
        assert!(cfg.apply_kv("no_such_key", "1").is_err());
        assert!(cfg.apply_kv("grid_n", "many").is_err());
        cfg.grid_n = 0;
        assert!(cfg.validate().is_err());
    }
}

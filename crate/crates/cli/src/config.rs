use std::path::Path;

use serde::Deserialize;

use crate::args::{GlobalArgs, ReportFormat};
use crate::CliError;

/// Keys accepted in a `--config` TOML file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub report: Option<ReportFormat>,
    pub k: Option<usize>,
    pub threshold: Option<usize>,
    pub frames: Option<usize>,
    pub sigma: Option<f64>,
    pub kappa: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
    }
}

/// Options after merging flags, config file and defaults.
#[derive(Debug)]
pub struct Settings {
    pub tol: f64,
    pub max_iter: Option<usize>,
    pub threads: Option<usize>,
    pub seed: u64,
    pub report: ReportFormat,
    pub file: FileConfig,
}

pub const DEFAULT_FRAMES: usize = 5;
pub const DEFAULT_SIGMA: f64 = 0.05;
pub const DEFAULT_KAPPA: f64 = 1.0;

impl Settings {
    pub fn resolve(flags: &GlobalArgs) -> Result<Settings, CliError> {
        let file = match &flags.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let s = Settings {
            tol: flags.tol.or(file.tol).unwrap_or(1e-12),
            max_iter: flags.max_iter.or(file.max_iter),
            threads: flags.threads.or(file.threads),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            report: flags.report.or(file.report).unwrap_or_default(),
            file,
        };
        if !(s.tol > 0.0 && s.tol < 1.0) {
            return Err(CliError::input(format!("--tol must be in (0, 1), got {}", s.tol)));
        }
        if s.max_iter == Some(0) {
            return Err(CliError::input("--max-iter must be at least 1"));
        }
        if s.threads == Some(0) {
            return Err(CliError::input("--threads must be at least 1"));
        }
        Ok(s)
    }

    pub fn cg(&self) -> qc3d::lbs3d::CgOptions {
        qc3d::lbs3d::CgOptions {
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }

    pub fn eigen(&self) -> qc3d::spectral::EigenOptions {
        qc3d::spectral::EigenOptions {
            seed: self.seed,
            ..Default::default()
        }
    }

    /// Flag, then config; `None` when both are absent.
    pub fn pick<T: Copy>(&self, flag: Option<T>, from_file: impl Fn(&FileConfig) -> Option<T>) -> Option<T> {
        flag.or_else(|| from_file(&self.file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config_override_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "tol = 1e-10\nseed = 7\nreport = \"json\"\nframes = 9\n").unwrap();
        let flags = GlobalArgs {
            tol: Some(1e-11),
            config: Some(path),
            ..Default::default()
        };
        let s = Settings::resolve(&flags).unwrap();
        assert_eq!(s.tol, 1e-11);
        assert_eq!(s.seed, 7);
        assert_eq!(s.report, ReportFormat::Json);
        assert_eq!(s.max_iter, None);
        assert_eq!(s.pick(None, |f| f.frames), Some(9));
        assert_eq!(s.pick(Some(3), |f| f.frames), Some(3));
    }

    #[test]
    fn bad_config_is_an_input_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "tolerance = 1e-10\n").unwrap();
        let flags = GlobalArgs {
            config: Some(path),
            ..Default::default()
        };
        assert_eq!(Settings::resolve(&flags).unwrap_err().code, 2);
        let flags = GlobalArgs {
            tol: Some(2.0),
            ..Default::default()
        };
        assert_eq!(Settings::resolve(&flags).unwrap_err().code, 2);
    }
}

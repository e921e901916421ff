//! JSON run configuration and command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use fracfite::verify::{Scenario, SweepSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: Format,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            format: Format::default(),
        }
    }
}

/// A scenario or a sweep, plus output controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Values given on the command line; they take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub grading: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| CliError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(dir) = &o.out {
            self.output.dir = dir.clone();
        }
        if let Some(f) = o.format {
            self.output.format = f;
        }
        if let Some(s) = self.scenario.as_mut() {
            if let Some(n) = o.n {
                s.n = n;
            }
            if let Some(r) = o.grading {
                s.grading = r;
            }
        }
        if let Some(s) = self.sweep.as_mut() {
            if let Some(n) = o.n {
                s.n = n;
            }
            if let Some(r) = o.grading {
                s.grading = r;
            }
            if let Some(seed) = o.seed {
                s.seed = seed;
            }
        }
    }

    pub fn scenario(&self) -> CliResult<&Scenario> {
        self.scenario
            .as_ref()
            .ok_or_else(|| CliError::Config("missing field `scenario`".into()))
    }

    /// Checks invariants before any computation.
    pub fn validate(&self) -> CliResult<()> {
        if self.scenario.is_some() && self.sweep.is_some() {
            return Err(CliError::Config(
                "give either `scenario` or `sweep`, not both".into(),
            ));
        }
        if let Some(s) = &self.scenario {
            s.validate()?;
        }
        if let Some(s) = &self.sweep {
            s.scenarios()?.iter().try_for_each(Scenario::validate)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fracfite::verify::CoefSpec;

    #[test]
    fn parses_coefficient_forms() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"scenario": {"alpha": 0.75, "a": 0, "b": 0.1, "c": 2,
                "p": {"table": [[0, 1], [2, 3]]}, "v": {"poly": [1, 0.5]},
                "f_a": 1, "g_a": 0}}"#,
        )
        .unwrap();
        let s = cfg.scenario().unwrap();
        assert_eq!(s.p, CoefSpec::Table(vec![[0.0, 1.0], [2.0, 3.0]]));
        assert_eq!(s.v, Some(CoefSpec::Poly(vec![1.0, 0.5])));
        assert_eq!(s.n, 1024);
        assert_eq!(cfg.output, OutputConfig::default());
        let c: CoefSpec = serde_json::from_str(r#"{"const": 2.5}"#).unwrap();
        assert_eq!(c, CoefSpec::Const(2.5));
    }

    #[test]
    fn rejects_unknown_fields() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"scenaro": {}}"#).is_err());
    }

    #[test]
    fn overrides_win() {
        let mut cfg: RunConfig = serde_json::from_str(
            r#"{"sweep": {"alphas": [0.75], "p_sups": [1], "lengths": [1], "directions": 2, "seed": 5}}"#,
        )
        .unwrap();
        cfg.apply(&Overrides {
            seed: Some(9),
            n: Some(64),
            format: Some(Format::Json),
            ..Overrides::default()
        });
        let s = cfg.sweep.as_ref().unwrap();
        assert_eq!((s.seed, s.n), (9, 64));
        assert_eq!(cfg.output.format, Format::Json);
        cfg.validate().unwrap();
    }
}

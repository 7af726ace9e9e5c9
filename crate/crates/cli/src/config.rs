//! JSON run configuration.

use crate::CliError;
use harmap_core::{DomainSpec, Thresholds};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

fn default_tol() -> f64 {
    1e-12
}

fn default_max_iter() -> usize {
    100_000
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub case: CaseSpec,
    pub resolutions: Vec<usize>,
    #[serde(default)]
    pub thresholds: Thresholds,
    /// Parameter name to list of values, used by `sweep`.
    #[serde(default)]
    pub sweep: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub fields: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CaseSpec {
    Analytic {
        family: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
        domain: Option<DomainSpec>,
        ambient_dim: Option<usize>,
    },
    Solver {
        domain: DomainSpec,
        boundary: BoundarySpec,
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BoundarySpec {
    /// Boundary values of a named analytic family.
    Trace {
        family: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
        ambient_dim: Option<usize>,
    },
    Constant {
        value: Vec<f64>,
    },
    /// One row per boundary node in grid boundary order, either inline or
    /// from a comma-separated file (relative to the config file).
    Table {
        values: Option<Vec<Vec<f64>>>,
        path: Option<PathBuf>,
    },
}

impl CaseConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.resolutions.is_empty() {
            return bad("resolutions must not be empty".into());
        }
        if self.resolutions.windows(2).any(|w| w[0] >= w[1]) {
            return bad("resolutions must be strictly increasing".into());
        }
        let min = match self.case {
            CaseSpec::Analytic { .. } => 4,
            CaseSpec::Solver { .. } => 8,
        };
        if self.resolutions[0] < min {
            return bad(format!(
                "resolution {} below the minimum of {min}",
                self.resolutions[0]
            ));
        }
        self.thresholds.validate().map_err(CliError::Config)?;
        if let CaseSpec::Solver { tol, max_iter, .. } = &self.case {
            if tol.is_nan() || *tol <= 0.0 || *max_iter == 0 {
                return bad("solver tol and max_iter must be positive".into());
            }
        }
        for (name, values) in &self.sweep {
            if values.is_empty() {
                return bad(format!("sweep range for `{name}` is empty"));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return bad(format!("sweep range for `{name}` has a non-finite value"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let cfg = CaseConfig::from_json(
            r#"{"case": {"kind": "analytic", "family": "catenoid"}, "resolutions": [32, 64]}"#,
        )
        .unwrap();
        assert_eq!(cfg.resolutions, vec![32, 64]);
        assert_eq!(cfg.thresholds, Thresholds::default());
    }

    #[test]
    fn threshold_overrides_keep_defaults() {
        let cfg = CaseConfig::from_json(
            r#"{"case": {"kind": "analytic", "family": "enneper"}, "resolutions": [16],
                "thresholds": {"eps_umb": 1e-5, "masked_limit": 0.1}}"#,
        )
        .unwrap();
        assert_eq!(cfg.thresholds.geometry.eps_umb, 1e-5);
        assert_eq!(cfg.thresholds.masked_limit, 0.1);
        assert_eq!(cfg.thresholds.sin2theta_mask, 1e-3);
    }

    #[test]
    fn solver_config() {
        let cfg = CaseConfig::from_json(
            r#"{"case": {"kind": "solver",
                         "domain": {"shape": "rectangle", "u_min": 0, "u_max": 1, "v_min": 0, "v_max": 1},
                         "boundary": {"type": "trace", "family": "quadratic"}},
                "resolutions": [32]}"#,
        )
        .unwrap();
        match cfg.case {
            CaseSpec::Solver { tol, boundary, .. } => {
                assert_eq!(tol, 1e-12);
                assert!(matches!(boundary, BoundarySpec::Trace { .. }));
            }
            _ => panic!("expected solver case"),
        }
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            r#"{"case": {"kind": "analytic", "family": "catenoid"}, "resolutions": []}"#,
            r#"{"case": {"kind": "analytic", "family": "catenoid"}, "resolutions": [64, 32]}"#,
            r#"{"case": {"kind": "analytic", "family": "catenoid"}, "resolutions": [32, 32]}"#,
            r#"{"case": {"kind": "analytic", "family": "catenoid"}, "resolutions": [2]}"#,
            r#"{"case": {"kind": "analytic", "family": "catenoid"}, "resolutions": [8],
                "thresholds": {"eps_flat": -1}}"#,
            r#"{"case": {"kind": "analytic", "family": "catenoid"}, "resolutions": [8],
                "sweep": {"alpha": []}}"#,
            r#"{"case": {"kind": "analytic", "family": "catenoid"}, "resolutions": [8], "extra": 1}"#,
            r#"{"case": {"kind": "other"}, "resolutions": [8]}"#,
        ] {
            assert!(CaseConfig::from_json(text).is_err(), "{text}");
        }
    }
}

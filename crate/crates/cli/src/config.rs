//! Experiment configuration files.

use exact_diffusion::drift::{make_piecewise_constant, make_piecewise_sine, DriftSpec};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftConfig {
    PiecewiseConstant { a1: f64, a2: f64 },
    PiecewiseSine { theta1: f64, theta2: f64 },
}

impl DriftConfig {
    pub fn build(&self) -> DriftSpec {
        match *self {
            DriftConfig::PiecewiseConstant { a1, a2 } => make_piecewise_constant(a1, a2),
            DriftConfig::PiecewiseSine { theta1, theta2 } => make_piecewise_sine(theta1, theta2),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    #[default]
    Exact,
    /// A second independent Euler sample; a sanity run for the KS machinery.
    Euler,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Comparison {
    pub dt: f64,
    pub n: usize,
    #[serde(default)]
    pub reference: Reference,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ValidateSettings {
    pub filter: Option<String>,
    pub n: Option<usize>,
    pub param_sets: Option<usize>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub drift: Option<DriftConfig>,
    #[serde(default)]
    pub x: f64,
    #[serde(rename = "T", default = "one")]
    pub t: f64,
    #[serde(default = "one_path")]
    pub n_paths: usize,
    /// Extra skeleton times in `(0, T)`; `0` and `T` are always emitted.
    #[serde(default)]
    pub times: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    pub comparison: Option<Comparison>,
    pub validate: Option<ValidateSettings>,
    #[serde(default)]
    pub output: Outputs,
}

fn one() -> f64 {
    1.0
}

fn one_path() -> usize {
    1
}

impl ExperimentConfig {
    /// Reads and checks a config; relative output paths are taken relative to
    /// the config file's directory.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let mut cfg: Self =
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.output.csv,
            &mut cfg.output.svg,
            &mut cfg.output.json,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<(), String> {
        if !self.x.is_finite() {
            return Err(format!("x must be finite, got {}", self.x));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(format!("T must be positive, got {}", self.t));
        }
        if self.n_paths == 0 {
            return Err("n_paths must be at least 1".into());
        }
        if let Some(bad) = self.times.iter().find(|s| !(**s >= 0.0 && **s <= self.t)) {
            return Err(format!("time {bad} outside [0, T]"));
        }
        match self.drift {
            Some(DriftConfig::PiecewiseConstant { a1, a2 })
                if !(a1.is_finite() && a2.is_finite()) =>
            {
                return Err("drift slopes must be finite".into())
            }
            Some(DriftConfig::PiecewiseSine { theta1, theta2 })
                if !(theta1.is_finite() && theta2.is_finite()) =>
            {
                return Err("sine phases must be finite".into())
            }
            _ => {}
        }
        if let Some(c) = &self.comparison {
            if !(c.dt > 0.0 && c.dt <= self.t) {
                return Err(format!("comparison.dt must lie in (0, T], got {}", c.dt));
            }
            if c.n < 2 {
                return Err("comparison.n must be at least 2".into());
            }
        }
        if let Some(v) = &self.validate {
            if v.n.is_some_and(|n| n < 100) {
                return Err("validate.n must be at least 100".into());
            }
        }
        Ok(())
    }

    pub fn drift(&self) -> Result<DriftSpec, String> {
        self.drift
            .as_ref()
            .map(DriftConfig::build)
            .ok_or_else(|| "config has no drift".to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_compare_config() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{"drift": {"family": "piecewise_sine", "theta1": 3.665, "theta2": 0.785},
                "x": 0, "T": 1, "n_paths": 10, "seed": 4,
                "comparison": {"dt": 1e-4, "n": 10},
                "output": {"csv": "a.csv"}}"#,
        )
        .unwrap();
        assert_eq!(
            cfg.drift,
            Some(DriftConfig::PiecewiseSine {
                theta1: 3.665,
                theta2: 0.785
            })
        );
        assert_eq!(cfg.comparison.unwrap().reference, Reference::Exact);
        assert!(cfg.times.is_empty());
    }

    #[test]
    fn rejects_bad_values() {
        let parse = |s: &str| serde_json::from_str::<ExperimentConfig>(s).unwrap();
        assert!(parse(r#"{"T": -1}"#).check().is_err());
        assert!(parse(r#"{"T": 1, "times": [2]}"#).check().is_err());
        assert!(parse(r#"{"n_paths": 0}"#).check().is_err());
        assert!(parse(r#"{"comparison": {"dt": 0, "n": 5}}"#)
            .check()
            .is_err());
        assert!(
            serde_json::from_str::<ExperimentConfig>(r#"{"drift": {"family": "cubic"}}"#).is_err()
        );
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"typo": 1}"#).is_err());
    }
}

//! Experiment configuration: JSON file, command-line flags, or both.

use std::path::{Path, PathBuf};

use nstable::catalog;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyStability,
    SemigroupScan,
    CommuteCheck,
    SimulateBgw,
    SimulateCtbp,
    Sample,
    LimitCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    /// Counting / offspring family specs. `commute-check` takes two.
    #[serde(rename = "N", default, skip_serializing_if = "Vec::is_empty")]
    pub counts: Vec<String>,
    #[serde(rename = "X", default, skip_serializing_if = "Option::is_none")]
    pub law: Option<String>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<String>,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(rename = "c-grid", default, skip_serializing_if = "Option::is_none")]
    pub c_grid: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            counts: Vec::new(),
            law: None,
            transform: None,
            generator: None,
            unit: None,
            c: None,
            c_grid: None,
            n: None,
            seed: 0,
            order: None,
            generations: None,
            t: None,
            tol: None,
            threads: None,
            out: None,
            csv: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let config: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    /// The config with fields that do not affect results cleared.
    pub fn for_hashing(&self) -> Self {
        Self { threads: None, out: None, csv: None, ..self.clone() }
    }

    /// Rejects unknown names and malformed specs before anything runs.
    pub fn validate(&self) -> Result<(), CliError> {
        for spec in &self.counts {
            catalog::parse_family(spec)?;
        }
        if let Some(spec) = &self.law {
            catalog::parse_law(spec)?;
        }
        if let Some(spec) = &self.transform {
            catalog::parse_transform(spec)?;
        }
        if let Some(spec) = &self.generator {
            catalog::parse_generator(spec)?;
        }
        if let Some(unit) = &self.unit {
            parse_unit(unit)?;
        }
        if let Some(grid) = &self.c_grid {
            parse_grid(grid)?;
        }
        Ok(())
    }
}

pub fn parse_unit(name: &str) -> Result<nstable::sim::UnitLaw, CliError> {
    use nstable::sim::UnitLaw;
    match name {
        "exp1" => Ok(UnitLaw::Exp1),
        "rademacher" => Ok(UnitLaw::Rademacher),
        other => Err(CliError::Config(format!("unknown unit law `{other}`; valid names: exp1, rademacher"))),
    }
}

/// `a..b` or `a..b,step` (inclusive, default step 1), or a comma list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |reason: &str| CliError::Config(format!("malformed grid `{spec}`: {reason}"));
    let number = |s: &str| -> Result<f64, CliError> {
        let s = s.trim();
        match s {
            "e" => Ok(std::f64::consts::E),
            _ => s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| bad(&format!("`{s}` is not a number"))),
        }
    };
    if let Some((a, rest)) = spec.split_once("..") {
        let (b, step) = match rest.split_once(',') {
            Some((b, step)) => (number(b)?, number(step)?),
            None => (number(rest)?, 1.0),
        };
        let a = number(a)?;
        if step <= 0.0 || b < a {
            return Err(bad("need a ≤ b and a positive step"));
        }
        let count = ((b - a) / step + 1e-9).floor() as usize + 1;
        if count > 100_000 {
            return Err(bad("more than 100000 points"));
        }
        return Ok((0..count).map(|k| a + k as f64 * step).collect());
    }
    let values = spec.split(',').map(number).collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(bad("empty"));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("1..16").unwrap(), (1..=16).map(f64::from).collect::<Vec<_>>());
        assert_eq!(parse_grid("1..3,0.5").unwrap(), vec![1.0, 1.5, 2.0, 2.5, 3.0]);
        assert_eq!(parse_grid("1.25, 2, e").unwrap(), vec![1.25, 2.0, std::f64::consts::E]);
        for bad in ["3..1", "1..x", "1..2,0", "", "a,b"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn config_round_trips() {
        let mut config = ExperimentConfig::new(Command::VerifyStability);
        config.counts = vec!["geometric:p=0.5".into()];
        config.law = Some("exp1".into());
        config.c = Some(2.0);
        config.n = Some(100_000);
        config.seed = 42;
        config.c_grid = Some("1..16".into());
        let text = serde_json::to_string_pretty(&config).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, config);
        assert_eq!(serde_json::to_string_pretty(&back).unwrap(), text);
    }

    #[test]
    fn unknown_fields_and_names_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"command":"sample","bogus":1}"#).is_err());
        let mut config = ExperimentConfig::new(Command::Sample);
        config.law = Some("cauchy".into());
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("kovalenko-half"), "{err}");
    }
}

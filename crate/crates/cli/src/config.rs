//! TOML run configuration. Every key can be overridden by the matching flag.

use anyhow::{Context, Result};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub task: TaskSection,
    #[serde(default)]
    pub numeric: NumericSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: Option<String>,
    pub nu: Option<f64>,
    pub lambda_plus: Option<f64>,
    pub lambda_minus: Option<f64>,
    pub m2: Option<f64>,
    pub c: Option<f64>,
    pub sigma: Option<f64>,
    pub mu: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSection {
    #[serde(rename = "T")]
    pub t: Option<OneOrMany>,
    pub a1: Option<OneOrMany>,
    pub a2: Option<OneOrMany>,
    pub h: Option<OneOrMany>,
    pub a: Option<f64>,
    pub x1: Option<f64>,
    pub x2: Option<f64>,
    pub beta: Option<OneOrMany>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericSection {
    pub tol: Option<f64>,
    pub method: Option<String>,
    pub family: Option<String>,
    pub gwr_m: Option<usize>,
    pub shift_a: Option<f64>,
    pub omega_plus: Option<f64>,
    pub omega_minus: Option<f64>,
    pub omega_ell: Option<f64>,
    pub n_xi: Option<usize>,
    pub n_ell: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub out: Option<PathBuf>,
    pub digits: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn into_vec(self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Flag values win over config values.
pub fn list(flag: &[f64], cfg: &Option<OneOrMany>) -> Vec<f64> {
    if !flag.is_empty() {
        return flag.to_vec();
    }
    cfg.clone().map(OneOrMany::into_vec).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_lists() {
        let c: RunConfig = toml::from_str(
            r#"
            [model]
            kind = "kobol"
            nu = 0.2
            [task]
            T = 0.25
            a1 = [-0.075, 0.0]
            [numeric]
            method = "gwr"
            "#,
        )
        .unwrap();
        assert_eq!(c.model.nu, Some(0.2));
        assert_eq!(list(&[], &c.task.t), vec![0.25]);
        assert_eq!(list(&[], &c.task.a1), vec![-0.075, 0.0]);
        assert_eq!(list(&[1.0], &c.task.a1), vec![1.0]);
        assert_eq!(c.numeric.method.as_deref(), Some("gwr"));
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(toml::from_str::<RunConfig>("[model]\nnu = 0.2\nlambda = 1.0\n").is_err());
    }
}

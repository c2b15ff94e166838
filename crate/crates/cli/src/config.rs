//! Run configuration: strict JSON plus dotted-path overrides.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use windfield_core::models::ModelParams;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Eval,
    Indicatrix,
    Geodesic,
    Navigate,
    Ball,
    Classify,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Eval => "eval",
            Command::Indicatrix => "indicatrix",
            Command::Geodesic => "geodesic",
            Command::Navigate => "navigate",
            Command::Ball => "ball",
            Command::Classify => "classify",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    /// Must match the command given on the command line when present.
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub indicatrix: IndicatrixConfig,
    #[serde(default)]
    pub geodesic: GeodesicConfig,
    #[serde(default)]
    pub navigate: NavigateConfig,
    #[serde(default)]
    pub ball: BallConfig,
    #[serde(default)]
    pub classify: ClassifyConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_seed() -> u64 {
    7
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    #[serde(default)]
    pub params: ModelParams,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IndicatrixConfig {
    pub points: Vec<Vec<f64>>,
    pub directions: usize,
}

impl Default for IndicatrixConfig {
    fn default() -> Self {
        IndicatrixConfig {
            points: Vec::new(),
            directions: 64,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeodesicConfig {
    pub p: Vec<f64>,
    pub v: Vec<f64>,
    pub span: f64,
    /// Rescale `v` to `F(v) = 1` before integrating.
    pub normalize: bool,
    pub h_max: f64,
}

impl Default for GeodesicConfig {
    fn default() -> Self {
        GeodesicConfig {
            p: Vec::new(),
            v: Vec::new(),
            span: 1.0,
            normalize: false,
            h_max: 0.01,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NavigateConfig {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub t_max: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub directions: Option<usize>,
}

impl Default for NavigateConfig {
    fn default() -> Self {
        NavigateConfig {
            p: Vec::new(),
            q: Vec::new(),
            t_max: 4.0,
            tol: 1e-7,
            max_iter: 80,
            directions: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub resolution: usize,
    #[serde(default)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BallConfig {
    pub p0: Vec<f64>,
    pub r: f64,
    /// Defaults to a box of half-width `2r` around `p0` with 128 cells per axis.
    pub grid: Option<GridConfig>,
    pub backward: bool,
}

impl Default for BallConfig {
    fn default() -> Self {
        BallConfig {
            p0: Vec::new(),
            r: 1.0,
            grid: None,
            backward: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyConfig {
    pub samples: usize,
    /// Explicit sample points; replaces random sampling.
    pub points: Option<Vec<Vec<f64>>>,
    /// Sampling box; defaults to the catalog box of the model.
    pub sample_box: Option<Vec<(f64, f64)>>,
    pub tol: f64,
    pub cross_check_flags: usize,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            samples: 10,
            points: None,
            sample_box: None,
            tol: 1e-6,
            cross_check_flags: 3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub samples: usize,
    pub directions: usize,
    pub geodesics: usize,
    pub sample_box: Option<Vec<(f64, f64)>>,
    /// Multiplies every check tolerance.
    pub tol_scale: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            samples: 50,
            directions: 16,
            geodesics: 5,
            sample_box: None,
            tol_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub csv: bool,
    pub svg: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { csv: true, svg: true }
    }
}

/// Applies `key=value` overrides to a raw config document.
///
/// `key` is a dotted path; missing intermediate objects are created. `value`
/// is parsed as JSON and taken as a string when that fails.
pub fn apply_overrides(doc: &mut Value, sets: &[String]) -> Result<(), CliError> {
    for set in sets {
        let (key, raw) = set
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override `{set}` is not of the form key=value")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let parts: Vec<&str> = key.split('.').collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(CliError::Config(format!("override key `{key}` has an empty segment")));
        }
        let mut node = &mut *doc;
        for part in &parts[..parts.len() - 1] {
            let obj = node
                .as_object_mut()
                .ok_or_else(|| CliError::Config(format!("override `{key}`: `{part}` is not inside an object")))?;
            node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
        }
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("override `{key}` does not address an object field")))?;
        obj.insert(parts[parts.len() - 1].to_string(), value);
    }
    Ok(())
}

/// Parses a config document after overrides.
pub fn load(text: &str, sets: &[String]) -> Result<(RunConfig, Value), CliError> {
    let mut doc: Value =
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config is not valid JSON: {e}")))?;
    apply_overrides(&mut doc, sets)?;
    let config: RunConfig =
        serde_json::from_value(doc).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
    // re-serialize so that defaults are visible in the embedded copy
    let effective = serde_json::to_value(&config).map_err(|e| CliError::Config(e.to_string()))?;
    Ok((config, effective))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_create_and_replace_leaves() {
        let mut doc = serde_json::json!({"model": {"name": "figure3"}});
        apply_overrides(
            &mut doc,
            &[
                "navigate.t_max=2.5".into(),
                "model.name=hyperbolic".into(),
                "model.params.k=-1".into(),
            ],
        )
        .unwrap();
        assert_eq!(doc["navigate"]["t_max"], 2.5);
        assert_eq!(doc["model"]["name"], "hyperbolic");
        assert_eq!(doc["model"]["params"]["k"], -1);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = load(r#"{"model": {"name": "figure3"}, "colour": 1}"#, &[]).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        let err = load(r#"{"model": {"name": "figure3"}}"#, &["ball.radius=1".into()]).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
    }

    #[test]
    fn malformed_override() {
        assert!(load(r#"{"model": {"name": "figure3"}}"#, &["seed".into()]).is_err());
        assert!(load(r#"{"model": {"name": "figure3"}}"#, &["model.name.x=1".into()]).is_err());
    }
}

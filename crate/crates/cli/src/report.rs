use std::collections::BTreeMap;

use qslant_core::geoflow::{ConditionResidual, CurvatureSummary, HarmonicityReport, UmbilicalReport};
use qslant_core::hstructure::StructureTag;
use qslant_core::slantlab::Verdict;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        ToolInfo {
            name: "qslant".into(),
            version: TOOL_VERSION.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapInfo {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub domain_dim: usize,
    pub codomain_dim: usize,
    pub components: Vec<String>,
    pub params: BTreeMap<String, f64>,
    pub affine: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureOut {
    pub is_semi_slant: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    /// Radians; `null` for the complex case, a trivial fiber, or no semi-slant decomposition.
    pub theta: Option<f64>,
    pub theta_display: String,
    pub cos2: Option<f64>,
    pub d1_dim: usize,
    pub d2_dim: usize,
    pub omega_d2_dim: usize,
    pub mu_dim: usize,
    pub spectrum: Vec<f64>,
    pub identity_residuals: BTreeMap<String, f64>,
    /// `max |R̂² + id|` on the vertical space, where R̂ is defined.
    pub rhat_square_residual: Option<f64>,
    /// Largest gap between θ and the directly measured angle of `R X` to the fiber.
    pub angle_oracle_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointOut {
    pub point: Vec<f64>,
    pub rank: usize,
    pub vertical_dim: usize,
    pub is_riemannian: bool,
    pub horizontal_singular_values: Vec<f64>,
    pub energy_density: f64,
    pub eikonal_residual: f64,
    pub structures: BTreeMap<StructureTag, StructureOut>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessOut {
    pub structure: StructureTag,
    pub first_point: usize,
    pub second_point: usize,
    pub first_angle: Option<f64>,
    pub second_angle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationOut {
    pub verdict: Verdict,
    pub rank: usize,
    pub vertical_dim: usize,
    pub angles: BTreeMap<StructureTag, Option<f64>>,
    pub angle_display: BTreeMap<StructureTag, String>,
    pub d1_dims: BTreeMap<StructureTag, usize>,
    pub d2_dims: BTreeMap<StructureTag, usize>,
    pub shared_d1_dim: Option<usize>,
    pub d1_spread: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessOut>,
    pub even_fiber_ok: Option<bool>,
    pub notes: Vec<String>,
}

/// A check that could not run, with the machine-readable reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub check: String,
    pub structure: Option<StructureTag>,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub map: MapInfo,
    pub structure: String,
    pub seed: u64,
    pub tol: f64,
    pub checks: Vec<String>,
    pub points: Vec<Vec<f64>>,
    pub classification: ClassificationOut,
    pub point_reports: Vec<PointOut>,
    pub conditions: Vec<ConditionResidual>,
    pub curvature: Vec<CurvatureSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harmonicity: Option<HarmonicityReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub umbilical: Option<UmbilicalReport>,
    pub skipped: Vec<Skipped>,
    pub failures: Vec<String>,
    pub passed: bool,
}

/// Rounds every float to 15 significant digits.
pub fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("checked f64");
            let r: f64 = format!("{x:.14e}").parse().expect("formatted float parses");
            if let Some(m) = serde_json::Number::from_f64(r) {
                *n = m;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_numbers),
        Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

/// Pretty JSON with rounded floats and a trailing newline. Field order is
/// declaration order and every map is a `BTreeMap`, so equal values give
/// byte-identical text.
pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut v = serde_json::to_value(value).map_err(|e| CliError::Config(format!("serializing report: {e}")))?;
    round_numbers(&mut v);
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| CliError::Config(format!("serializing report: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("parsing report: {e}")))
}

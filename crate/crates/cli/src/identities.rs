use qslant_core::exprmap::MapSpec;
use qslant_core::hstructure::AxiomReport;
use serde::{Deserialize, Serialize};

use crate::analyze::analyze;
use crate::config::{AnalysisConfig, Check};
use crate::error::CliResult;
use crate::report::{Report, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentitiesReport {
    pub schema_version: u32,
    pub structure: String,
    pub dim: usize,
    pub axioms: AxiomReport,
    /// Algebraic and connection identities of a map, when one was given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<Report>,
    pub passed: bool,
}

/// Quaternion axioms of the structure, plus the identity suite of `spec`
/// (classification and identities only) when a map is given.
pub fn identities(spec: Option<&MapSpec>, dim: usize, config: &AnalysisConfig) -> CliResult<IdentitiesReport> {
    let dim = spec.map_or(dim, |s| s.domain_dim);
    let h = config.structure.load_unchecked(dim)?;
    let axioms = h.validate();
    let map = match spec {
        Some(s) if axioms.passed => {
            let mut cfg = config.clone();
            cfg.checks = [Check::Classify, Check::Identities].into_iter().collect();
            Some(analyze(s, &cfg)?)
        }
        _ => None,
    };
    let passed = axioms.passed && map.as_ref().is_none_or(|r| r.passed);
    Ok(IdentitiesReport {
        schema_version: SCHEMA_VERSION,
        structure: config.structure.label(),
        dim: h.dim(),
        axioms,
        map,
        passed,
    })
}

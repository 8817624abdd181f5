use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use qslant_core::exprmap::{MapSpec, SampleBox};
use qslant_core::hstructure::HypercomplexStructure;
use qslant_core::numkernel::{FdConfig, Vector};
use qslant_core::slantlab::CLUSTER_TOL;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_POINTS: usize = 5;
pub const DEFAULT_BOX: SampleBox = SampleBox(-1.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Classify,
    Identities,
    Integrability,
    Harmonicity,
    Geodesic,
    Decomposition,
    Umbilical,
}

impl Check {
    pub const ALL: [Check; 7] = [
        Check::Classify,
        Check::Identities,
        Check::Integrability,
        Check::Harmonicity,
        Check::Geodesic,
        Check::Decomposition,
        Check::Umbilical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Check::Classify => "classify",
            Check::Identities => "identities",
            Check::Integrability => "integrability",
            Check::Harmonicity => "harmonicity",
            Check::Geodesic => "geodesic",
            Check::Decomposition => "decomposition",
            Check::Umbilical => "umbilical",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Check {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Check> {
        Check::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim())
            .ok_or_else(|| {
                let known: Vec<_> = Check::ALL.iter().map(|c| c.as_str()).collect();
                CliError::Config(format!("unknown check `{s}` (known: {})", known.join(", ")))
            })
    }
}

/// Parses a comma-separated check list.
pub fn parse_checks(list: &str) -> CliResult<BTreeSet<Check>> {
    let set = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(Check::from_str)
        .collect::<CliResult<BTreeSet<_>>>()?;
    if set.is_empty() {
        return Err(CliError::Config("empty check list".into()));
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq)]
pub enum StructureSource {
    Canonical,
    File(PathBuf),
}

impl StructureSource {
    pub fn label(&self) -> String {
        match self {
            StructureSource::Canonical => "canonical".into(),
            StructureSource::File(p) => p.display().to_string(),
        }
    }

    /// Reads the structure without checking the axioms; `dim` only matters
    /// for the canonical structure.
    pub fn load_unchecked(&self, dim: usize) -> CliResult<HypercomplexStructure> {
        Ok(match self {
            StructureSource::Canonical => HypercomplexStructure::canonical(dim / 4)?,
            StructureSource::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                HypercomplexStructure::from_json(&text)?
            }
        })
    }

    /// Loads the structure for `R^dim` and rejects one that violates the axioms.
    pub fn load(&self, dim: usize) -> CliResult<HypercomplexStructure> {
        let h = self.load_unchecked(dim)?;
        if h.dim() != dim {
            return Err(qslant_core::Error::DimensionMismatch(format!(
                "structure acts on R^{} but the map domain is R^{dim}",
                h.dim()
            ))
            .into());
        }
        let axioms = h.validate();
        if !axioms.passed {
            let (name, worst) = axioms
                .residuals
                .iter()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("axiom list is nonempty");
            return Err(CliError::Config(format!(
                "structure violates `{name}` (residual {worst:e})"
            )));
        }
        Ok(h)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub structure: StructureSource,
    /// Number of random points; `None` uses the spec's explicit points, if any.
    pub points: Option<usize>,
    pub seed: u64,
    /// Eigenvalue clustering tolerance for the semi-slant decomposition.
    pub tol: f64,
    pub checks: BTreeSet<Check>,
    /// Checks were named explicitly, so an unavailable frame is an error.
    pub checks_explicit: bool,
    pub fd: FdConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            structure: StructureSource::Canonical,
            points: None,
            seed: DEFAULT_SEED,
            tol: CLUSTER_TOL,
            checks: Check::ALL.into_iter().collect(),
            checks_explicit: false,
            fd: FdConfig::default(),
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.points == Some(0) {
            return Err(CliError::Config("--points must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(CliError::Config(format!("--tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }

    pub fn runs(&self, c: Check) -> bool {
        self.checks.contains(&c)
    }
}

/// Explicit spec points unless a count is forced; otherwise uniform draws
/// from the sample box with a ChaCha8 generator seeded by `seed`.
pub fn sample_points(spec: &MapSpec, count: Option<usize>, seed: u64) -> Vec<Vector> {
    if count.is_none() {
        if let Some(pts) = &spec.sample_points {
            if !pts.is_empty() {
                return pts.iter().map(|p| Vector::from_vec(p.clone())).collect();
            }
        }
    }
    let SampleBox(lo, hi) = spec.sample_box.unwrap_or(DEFAULT_BOX);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count.unwrap_or(DEFAULT_POINTS))
        .map(|_| Vector::from_fn(spec.domain_dim, |_, _| rng.random_range(lo..hi)))
        .collect()
}

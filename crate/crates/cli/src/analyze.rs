use std::collections::BTreeMap;

use qslant_core::exprmap::MapSpec;
use qslant_core::geoflow::{
    connection_identity_residuals, curvature_summary, fiber_decomposition_residual, harmonicity_report,
    integrability_d1_residual, integrability_d2_residual, point_contexts, product_decomposition_residual,
    totally_geodesic_residual, umbilical_report, ConditionResidual, PointContext,
};
use qslant_core::hstructure::StructureTag;
use qslant_core::numkernel::{angle_to_subspace, Matrix, Vector};
use qslant_core::slantlab::{
    classify, energy_density, rhat, Classification, SemiSlantReport, TangentSplit, Verdict,
};
use qslant_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::{sample_points, AnalysisConfig, Check};
use crate::error::{CliError, CliResult};
use crate::report::{
    ClassificationOut, MapInfo, PointOut, Report, Skipped, StructureOut, ToolInfo, WitnessOut,
    SCHEMA_VERSION,
};

/// Residual bound for the algebraic identities of `φ, ω, B, C` and `R̂² = −id`.
pub const IDENTITY_TOL: f64 = 1e-9;
/// Bound on `|θ − ∠(R X, ker F_*)|` for random unit `X ∈ D₂`.
pub const ANGLE_ORACLE_TOL: f64 = 1e-8;
/// Random unit vectors of `D₂` per point and structure in the angle oracle.
pub const ANGLE_ORACLE_SAMPLES: usize = 20;

/// The four identities that hold for every structure, semi-slant or not.
const UNCONDITIONAL_IDENTITIES: [&str; 4] = [
    "phi^2 + B omega = -id",
    "C^2 + omega B = -id",
    "omega phi + C omega = 0",
    "B C + phi B = 0",
];

fn amax(m: &Matrix) -> f64 {
    if m.is_empty() {
        0.0
    } else {
        m.amax()
    }
}

/// `max |R̂² + id|`, or `None` where `R̂` is undefined (θ = π/2 with `D₂ ≠ 0`,
/// or no semi-slant decomposition).
pub fn rhat_square_residual(rep: &SemiSlantReport) -> Option<f64> {
    let m = rhat(rep).ok()?;
    let k = m.nrows();
    Some(amax(&(&m * &m + Matrix::identity(k, k))))
}

/// Measures `∠(R X, ker F_*)` directly for random unit `X ∈ D₂` and returns
/// the largest deviation from the reported angle.
pub fn angle_oracle_residual(rep: &SemiSlantReport, samples: usize, rng: &mut ChaCha8Rng) -> Option<f64> {
    let theta = rep.theta?;
    if rep.d2.is_empty() {
        return None;
    }
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let c = Vector::from_fn(rep.d2.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = c.norm();
        if norm == 0.0 {
            continue;
        }
        let x = rep.d2.basis() * (c / norm);
        let angle = angle_to_subspace(&(&rep.r * x), &rep.vertical);
        worst = worst.max((angle - theta).abs());
    }
    Some(worst)
}

fn structure_out(rep: &SemiSlantReport, oracle: Option<f64>) -> StructureOut {
    StructureOut {
        is_semi_slant: rep.is_semi_slant,
        failure: rep.failure.clone(),
        theta: rep.theta,
        theta_display: rep.theta_display(),
        cos2: rep.cos2,
        d1_dim: rep.d1.dim(),
        d2_dim: rep.d2.dim(),
        omega_d2_dim: rep.omega_d2.dim(),
        mu_dim: rep.mu.dim(),
        spectrum: rep.spectrum.clone(),
        identity_residuals: rep.identity_residuals.clone(),
        rhat_square_residual: rhat_square_residual(rep),
        angle_oracle_residual: oracle,
    }
}

fn point_out(
    f: &qslant_core::exprmap::SmoothMap,
    split: &TangentSplit,
    reports: &BTreeMap<StructureTag, SemiSlantReport>,
    oracle: &BTreeMap<StructureTag, Option<f64>>,
) -> CliResult<PointOut> {
    Ok(PointOut {
        point: split.point.iter().copied().collect(),
        rank: split.rank,
        vertical_dim: split.vertical.dim(),
        is_riemannian: split.is_riemannian,
        horizontal_singular_values: split.horizontal_singular_values.clone(),
        energy_density: energy_density(f, &split.point)?,
        eikonal_residual: split.eikonal_residual,
        structures: reports
            .iter()
            .map(|(t, r)| (*t, structure_out(r, oracle.get(t).copied().flatten())))
            .collect(),
    })
}

fn classification_out(cls: &Classification) -> ClassificationOut {
    let mut angle_display = BTreeMap::new();
    if let Some(first) = cls.points.first() {
        for (t, r) in &first.reports {
            angle_display.insert(*t, r.theta_display());
        }
    }
    ClassificationOut {
        verdict: cls.verdict,
        rank: cls.rank(),
        vertical_dim: cls.vertical_dim(),
        angles: cls.angles.clone(),
        angle_display,
        d1_dims: cls.d1_dims.clone(),
        d2_dims: cls.d2_dims.clone(),
        shared_d1_dim: cls.shared_d1.as_ref().map(|s| s.dim()),
        d1_spread: cls.d1_spread,
        witness: cls.witness.as_ref().map(|w| WitnessOut {
            structure: w.structure,
            first_point: w.first_point,
            second_point: w.second_point,
            first_angle: w.first_angle,
            second_angle: w.second_angle,
        }),
        even_fiber_ok: cls.even_fiber_ok,
        notes: cls.notes.clone(),
    }
}

fn map_info(spec: &MapSpec, f: &qslant_core::exprmap::SmoothMap) -> MapInfo {
    MapInfo {
        name: f.name().to_string(),
        description: spec.description.clone(),
        domain_dim: spec.domain_dim,
        codomain_dim: spec.codomain_dim,
        components: spec.components.clone(),
        params: spec.params.clone(),
        affine: f.is_affine(),
    }
}

/// Collects evaluator results, skips and failures in a fixed order.
struct Collector<'a> {
    config: &'a AnalysisConfig,
    conditions: Vec<ConditionResidual>,
    skipped: Vec<Skipped>,
    failures: Vec<String>,
}

impl Collector<'_> {
    fn skip(&mut self, check: Check, tag: Option<StructureTag>, e: &Error) {
        self.skipped.push(Skipped {
            check: check.as_str().into(),
            structure: tag,
            code: e.code().into(),
            message: e.to_string(),
        });
    }

    /// Routes an evaluator error: unavailable frames are an input error only
    /// when the check was requested by name; unmet preconditions are skips.
    fn absorb(&mut self, check: Check, tag: Option<StructureTag>, e: Error) -> CliResult<()> {
        match e {
            Error::Unsupported(_) if self.config.checks_explicit => Err(e.into()),
            Error::Unsupported(_) | Error::Precondition(_) | Error::Undefined(_) => {
                self.skip(check, tag, &e);
                Ok(())
            }
            other => Err(other.into()),
        }
    }

    fn condition(&mut self, check: Check, tag: StructureTag, r: qslant_core::Result<ConditionResidual>) -> CliResult<()> {
        match r {
            Ok(r) => {
                if r.agrees_with_oracle == Some(false) {
                    self.failures.push(format!(
                        "{check}: {} on {tag} disagrees with its oracle (residual {:e}, oracle {:e}, tolerance {:e})",
                        r.condition_id,
                        r.max_residual,
                        r.oracle_residual.unwrap_or(f64::NAN),
                        r.tolerance
                    ));
                }
                self.conditions.push(r);
                Ok(())
            }
            Err(e) => self.absorb(check, Some(tag), e),
        }
    }
}

/// Runs the configured checks on one map and assembles the report.
pub fn analyze(spec: &MapSpec, config: &AnalysisConfig) -> CliResult<Report> {
    config.validate()?;
    let f = spec.build_for_structure()?;
    let frames = spec.frame_set()?;
    let h = config.structure.load(f.domain_dim())?;
    let pts = sample_points(spec, config.points, config.seed);
    let cls = classify(&f, &h, &pts, config.tol)?;

    let mut out = Collector {
        config,
        conditions: Vec::new(),
        skipped: Vec::new(),
        failures: Vec::new(),
    };

    if cls.even_fiber_ok == Some(false) {
        out.failures.push(format!(
            "classify: some slant angle differs from pi/2 but the fiber dimension {} is odd",
            cls.vertical_dim()
        ));
    }

    let identities = config.runs(Check::Identities);
    let mut point_reports = Vec::with_capacity(cls.points.len());
    for (i, pa) in cls.points.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1 + i as u64));
        let mut oracle = BTreeMap::new();
        for (tag, rep) in &pa.reports {
            let o = if identities {
                angle_oracle_residual(rep, ANGLE_ORACLE_SAMPLES, &mut rng)
            } else {
                None
            };
            oracle.insert(*tag, o);
        }
        let po = point_out(&f, &pa.split, &pa.reports, &oracle)?;
        if identities {
            identity_failures(i, &po, &mut out.failures);
        }
        point_reports.push(po);
    }

    let geometry_checks = [
        Check::Identities,
        Check::Integrability,
        Check::Harmonicity,
        Check::Geodesic,
        Check::Decomposition,
        Check::Umbilical,
    ];
    let wants_geometry = geometry_checks.iter().any(|c| config.runs(*c));
    let mut curvature = Vec::new();
    let mut harmonicity = None;
    let mut umbilical = None;
    if wants_geometry && cls.verdict == Verdict::NotRiemannian {
        let e = Error::Precondition("the map is not Riemannian at the sampled points".into());
        for c in geometry_checks.iter().filter(|c| config.runs(**c)) {
            out.skip(*c, None, &e);
        }
    } else if wants_geometry {
        let ctxs = point_contexts(&f, &cls, frames.as_ref(), config.fd)?;
        curvature = ctxs.iter().map(curvature_summary).collect();
        run_conditions(&ctxs, &mut out)?;
        if config.runs(Check::Harmonicity) {
            match harmonicity_report(&ctxs) {
                Ok(r) => {
                    if !r.consistent {
                        out.failures.push(format!(
                            "harmonicity: hypotheses hold but the tension is {:e}",
                            r.tension_max
                        ));
                    }
                    harmonicity = Some(r);
                }
                Err(e) => out.absorb(Check::Harmonicity, None, e)?,
            }
        }
        if config.runs(Check::Umbilical) {
            match umbilical_report(&ctxs) {
                Ok(r) => {
                    if !r.consistent {
                        out.failures.push(
                            "umbilical: fibers are totally umbilical but the mean curvature \
                             leaves some omega D2"
                                .into(),
                        );
                    }
                    umbilical = Some(r);
                }
                Err(e) => out.absorb(Check::Umbilical, None, e)?,
            }
        }
    }

    let passed = out.failures.is_empty();
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        tool: ToolInfo::default(),
        map: map_info(spec, &f),
        structure: config.structure.label(),
        seed: config.seed,
        tol: config.tol,
        checks: config.checks.iter().map(|c| c.as_str().to_string()).collect(),
        points: pts.iter().map(|p| p.iter().copied().collect()).collect(),
        classification: classification_out(&cls),
        point_reports,
        conditions: out.conditions,
        curvature,
        harmonicity,
        umbilical,
        skipped: out.skipped,
        failures: out.failures,
        passed,
    })
}

fn identity_failures(i: usize, po: &PointOut, failures: &mut Vec<String>) {
    if po.is_riemannian && po.eikonal_residual > qslant_core::slantlab::EIKONAL_TOL {
        failures.push(format!(
            "identities: point {i} violates 2e(F) = |F_*|^2 = rank (residual {:e})",
            po.eikonal_residual
        ));
    }
    for (tag, s) in &po.structures {
        for (name, &r) in &s.identity_residuals {
            let applies = s.is_semi_slant || UNCONDITIONAL_IDENTITIES.contains(&name.as_str());
            if applies && r.abs() > IDENTITY_TOL {
                failures.push(format!("identities: point {i} {tag} `{name}` residual {r:e}"));
            }
        }
        if let Some(r) = s.rhat_square_residual.filter(|r| *r > IDENTITY_TOL) {
            failures.push(format!("identities: point {i} {tag} `R-hat^2 = -id` residual {r:e}"));
        }
        if let Some(r) = s.angle_oracle_residual.filter(|r| *r > ANGLE_ORACLE_TOL) {
            failures.push(format!(
                "identities: point {i} {tag} slant angle differs from the measured angle by {r:e}"
            ));
        }
    }
}

fn run_conditions(ctxs: &[PointContext], out: &mut Collector) -> CliResult<()> {
    let config = out.config;
    for tag in StructureTag::ALL {
        if config.runs(Check::Identities) {
            match connection_identity_residuals(ctxs, tag) {
                Ok(list) => {
                    for r in list {
                        if !r.passed {
                            out.failures.push(format!(
                                "identities: {} on {tag} residual {:e} exceeds {:e}",
                                r.condition_id, r.max_residual, r.tolerance
                            ));
                        }
                        out.conditions.push(r);
                    }
                }
                Err(e) => out.absorb(Check::Identities, Some(tag), e)?,
            }
        }
        if config.runs(Check::Integrability) {
            out.condition(Check::Integrability, tag, integrability_d1_residual(ctxs, tag))?;
            out.condition(Check::Integrability, tag, integrability_d2_residual(ctxs, tag))?;
        }
        if config.runs(Check::Geodesic) {
            out.condition(Check::Geodesic, tag, totally_geodesic_residual(ctxs, tag))?;
        }
        if config.runs(Check::Decomposition) {
            out.condition(Check::Decomposition, tag, product_decomposition_residual(ctxs, tag))?;
            out.condition(Check::Decomposition, tag, fiber_decomposition_residual(ctxs, tag))?;
        }
    }
    Ok(())
}

/// Reads a map spec from a path, or from the built-in corpus by name.
pub fn load_spec(name_or_path: &str) -> CliResult<MapSpec> {
    let path = std::path::Path::new(name_or_path);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        return Ok(MapSpec::from_json(&text)?);
    }
    match crate::corpus::builtin(name_or_path) {
        Some(entry) => Ok(entry.spec),
        None => Err(CliError::io(path, "no such file and no built-in corpus entry of that name")),
    }
}

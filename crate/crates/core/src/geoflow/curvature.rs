use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::conditions::{condition_tolerance, integrability_d1_residual, PointContext};
use crate::error::{Error, Result};
use crate::hstructure::StructureTag;

/// Mean curvatures and tension at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSummary {
    /// `H = (1/dim V) Σ T_{v_i} v_i` (horizontal).
    pub fiber_mean_curvature: Vec<f64>,
    /// `H̃`, the `(range F_*)^⊥` part of the horizontal trace of `∇F_*` divided by `l`.
    pub range_mean_curvature: Vec<f64>,
    pub tension: Vec<f64>,
    /// `max ‖T_{v_i} v_j − δ_ij H‖` over an orthonormal vertical basis.
    pub umbilical_residual: f64,
}

pub fn curvature_summary(ctx: &PointContext) -> CurvatureSummary {
    let g = &ctx.geom;
    let h = g.fiber_mean_curvature();
    let vs = g.split.vertical.vectors();
    let mut umb = 0.0f64;
    for (i, vi) in vs.iter().enumerate() {
        for (j, vj) in vs.iter().enumerate() {
            let mut d = g.oneill_t(vi, vj);
            if i == j {
                d -= &h;
            }
            umb = umb.max(d.norm());
        }
    }
    CurvatureSummary {
        fiber_mean_curvature: h.iter().copied().collect(),
        range_mean_curvature: g.range_mean_curvature().iter().copied().collect(),
        tension: g.tension().iter().copied().collect(),
        umbilical_residual: umb,
    }
}

/// Harmonicity diagnostics: the tension field, `H̃`, the trace of `∇F_*`
/// over each `D₂^R`, and integrability of each `D₁^R`. When `H̃ = 0`, `D₁^R`
/// is integrable and the `D₂^R` trace vanishes, the map must be harmonic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicityReport {
    pub points: Vec<CurvatureSummary>,
    pub tension_max: f64,
    pub range_mean_curvature_max: f64,
    pub d2_trace_max: BTreeMap<StructureTag, f64>,
    /// `None` when integrability could not be evaluated (no frame).
    pub d1_integrable: BTreeMap<StructureTag, Option<bool>>,
    pub hypotheses_hold: BTreeMap<StructureTag, Option<bool>>,
    pub harmonic: bool,
    /// No structure satisfies the hypotheses while the tension is nonzero.
    pub consistent: bool,
    pub tolerance: f64,
}

pub fn harmonicity_report(ctxs: &[PointContext]) -> Result<HarmonicityReport> {
    if ctxs.is_empty() {
        return Err(Error::Precondition("no sample points".into()));
    }
    let fd = ctxs.iter().map(|c| c.geom.fd_error).fold(0.0, f64::max);
    let tol = condition_tolerance(fd);
    let points: Vec<CurvatureSummary> = ctxs.iter().map(curvature_summary).collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tension_max = points.iter().map(|s| norm(&s.tension)).fold(0.0, f64::max);
    let range_mean_curvature_max = points
        .iter()
        .map(|s| norm(&s.range_mean_curvature))
        .fold(0.0, f64::max);
    let harmonic = tension_max <= tol;
    let mut d2_trace_max = BTreeMap::new();
    let mut d1_integrable = BTreeMap::new();
    let mut hypotheses_hold = BTreeMap::new();
    for tag in StructureTag::ALL {
        let mut trace = 0.0f64;
        for ctx in ctxs {
            let rep = ctx.report(tag)?;
            trace = trace.max(ctx.geom.partial_trace(rep.d2.basis()).norm());
        }
        d2_trace_max.insert(tag, trace);
        let integrable = match integrability_d1_residual(ctxs, tag) {
            Ok(r) => r.oracle_vanishes,
            Err(Error::Unsupported(_) | Error::Precondition(_)) => None,
            Err(e) => return Err(e),
        };
        d1_integrable.insert(tag, integrable);
        let hyp = integrable.map(|i| i && range_mean_curvature_max <= tol && trace <= tol);
        hypotheses_hold.insert(tag, hyp);
    }
    let consistent = harmonic || !hypotheses_hold.values().any(|h| *h == Some(true));
    Ok(HarmonicityReport {
        points,
        tension_max,
        range_mean_curvature_max,
        d2_trace_max,
        d1_integrable,
        hypotheses_hold,
        harmonic,
        consistent,
        tolerance: tol,
    })
}

/// Totally umbilical fibers: `T_X Y = ⟨X, Y⟩ H`. When they are, `H` must lie in
/// every `ω_R D₂^R` (so `H = 0` whenever some `D₂^R` is trivial).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UmbilicalReport {
    pub points: Vec<CurvatureSummary>,
    pub umbilical_residual: f64,
    pub umbilical: bool,
    pub mean_curvature_norms: Vec<f64>,
    /// `max ‖H − P_{ω D₂} H‖` per structure, evaluated when umbilical.
    pub mean_curvature_defects: BTreeMap<StructureTag, f64>,
    /// Minimal fibers forced by a complex-case structure; `None` if no structure is complex.
    pub minimal_check: Option<bool>,
    /// Every forced consequence holds.
    pub consistent: bool,
    pub tolerance: f64,
}

pub fn umbilical_report(ctxs: &[PointContext]) -> Result<UmbilicalReport> {
    if ctxs.is_empty() {
        return Err(Error::Precondition("no sample points".into()));
    }
    let fd = ctxs.iter().map(|c| c.geom.fd_error).fold(0.0, f64::max);
    let tol = condition_tolerance(fd);
    let points: Vec<CurvatureSummary> = ctxs.iter().map(curvature_summary).collect();
    let umbilical_residual = points.iter().map(|s| s.umbilical_residual).fold(0.0, f64::max);
    let umbilical = umbilical_residual <= tol;
    let mean_curvature_norms: Vec<f64> = ctxs.iter().map(|c| c.geom.fiber_mean_curvature().norm()).collect();
    let mut mean_curvature_defects = BTreeMap::new();
    let mut consistent = true;
    let mut complex_case = false;
    if umbilical {
        for tag in StructureTag::ALL {
            let mut worst = 0.0f64;
            for ctx in ctxs {
                let rep = ctx.report(tag)?;
                if rep.is_semi_slant && rep.d2.is_empty() && !rep.d1.is_empty() {
                    complex_case = true;
                }
                let h = ctx.geom.fiber_mean_curvature();
                worst = worst.max((&h - rep.omega_d2.project(&h)).norm());
            }
            consistent &= worst <= tol;
            mean_curvature_defects.insert(tag, worst);
        }
    }
    let minimal_check = complex_case.then(|| mean_curvature_norms.iter().all(|&n| n <= tol));
    if minimal_check == Some(false) {
        consistent = false;
    }
    Ok(UmbilicalReport {
        points,
        umbilical_residual,
        umbilical,
        mean_curvature_norms,
        mean_curvature_defects,
        minimal_check,
        consistent,
        tolerance: tol,
    })
}

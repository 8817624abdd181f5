use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::decompose::{semi_slant_decompose, SemiSlantReport};
use super::split::{split_tangent, TangentSplit};
use crate::error::{Error, Result};
use crate::exprmap::SmoothMap;
use crate::hstructure::{HypercomplexStructure, StructureTag};
use crate::numkernel::{principal_angles, Subspace, Vector};

/// Angles at different points (and across structures) are compared with this.
pub const ANGLE_TOL: f64 = 1e-8;
/// Largest principal angle allowed between per-structure `D₁` spaces to count as one.
pub const SHARED_D1_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    NotRiemannian,
    Generic,
    AlmostHSemiSlant,
    HSemiSlant,
    StrictlyHSemiSlant,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::NotRiemannian => "not_riemannian",
            Verdict::Generic => "generic",
            Verdict::AlmostHSemiSlant => "almost_h_semi_slant",
            Verdict::HSemiSlant => "h_semi_slant",
            Verdict::StrictlyHSemiSlant => "strictly_h_semi_slant",
        }
    }

    pub fn parse(s: &str) -> Option<Verdict> {
        [
            Verdict::NotRiemannian,
            Verdict::Generic,
            Verdict::AlmostHSemiSlant,
            Verdict::HSemiSlant,
            Verdict::StrictlyHSemiSlant,
        ]
        .into_iter()
        .find(|v| v.as_str() == s)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Split plus per-structure reports at one sample point.
#[derive(Debug, Clone)]
pub struct PointAnalysis {
    pub split: TangentSplit,
    pub reports: BTreeMap<StructureTag, SemiSlantReport>,
}

/// Two sample points at which an angle (or distribution dimension) differs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleWitness {
    pub structure: StructureTag,
    pub first_point: usize,
    pub second_point: usize,
    pub first_angle: Option<f64>,
    pub second_angle: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub points: Vec<PointAnalysis>,
    pub verdict: Verdict,
    /// `D₁` common to I, J, K at the first point, when one exists.
    pub shared_d1: Option<Subspace>,
    pub angles: BTreeMap<StructureTag, Option<f64>>,
    pub d1_dims: BTreeMap<StructureTag, usize>,
    pub d2_dims: BTreeMap<StructureTag, usize>,
    /// Largest principal angle between per-structure `D₁` spaces over all points.
    pub d1_spread: f64,
    pub witness: Option<AngleWitness>,
    /// Even fiber dimension is forced when some angle is not `π/2`;
    /// `None` when that situation does not arise.
    pub even_fiber_ok: Option<bool>,
    pub notes: Vec<String>,
}

impl Classification {
    pub fn first(&self) -> &PointAnalysis {
        &self.points[0]
    }

    pub fn report(&self, tag: StructureTag) -> Option<&SemiSlantReport> {
        self.points.first().and_then(|p| p.reports.get(&tag))
    }

    pub fn rank(&self) -> usize {
        self.first().split.rank
    }

    pub fn vertical_dim(&self) -> usize {
        self.first().split.vertical.dim()
    }
}

fn same_angle(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => (x - y).abs() <= ANGLE_TOL,
        (None, None) => true,
        _ => false,
    }
}

/// Angle used when comparing structures: the complex case counts as `0`.
fn effective_angle(rep: &SemiSlantReport) -> f64 {
    rep.theta.unwrap_or(0.0)
}

fn max_principal_angle(a: &Subspace, b: &Subspace) -> Result<f64> {
    if a.dim() != b.dim() {
        return Ok(FRAC_PI_2);
    }
    Ok(principal_angles(a, b)?.into_iter().fold(0.0, f64::max))
}

/// Classifies `f` against `h` using the given sample points.
///
/// Finitely many points can only refute constancy of the angles, so a
/// positive verdict means "consistent with" the definition at these points.
pub fn classify(
    f: &SmoothMap,
    h: &HypercomplexStructure,
    points: &[Vector],
    tol: f64,
) -> Result<Classification> {
    if points.is_empty() {
        return Err(Error::Precondition("classification needs at least one point".into()));
    }
    if f.domain_dim() != h.dim() {
        return Err(Error::DimensionMismatch(format!(
            "map domain is R^{} but the structure acts on R^{}",
            f.domain_dim(),
            h.dim()
        )));
    }
    let splits = points
        .iter()
        .map(|p| split_tangent(f, p))
        .collect::<Result<Vec<_>>>()?;
    let rank0 = splits[0].rank;
    if let Some(s) = splits.iter().find(|s| s.rank != rank0) {
        return Err(Error::ConstantRank {
            at_point: rank0,
            nearby: s.rank,
        });
    }
    let mut out = Classification {
        points: Vec::new(),
        verdict: Verdict::NotRiemannian,
        shared_d1: None,
        angles: BTreeMap::new(),
        d1_dims: BTreeMap::new(),
        d2_dims: BTreeMap::new(),
        d1_spread: 0.0,
        witness: None,
        even_fiber_ok: None,
        notes: Vec::new(),
    };
    if let Some((i, _)) = splits.iter().enumerate().find(|(_, s)| !s.is_riemannian) {
        out.notes.push(format!("horizontal singular values differ from 1 at point {i}"));
        out.points = splits
            .into_iter()
            .map(|split| PointAnalysis {
                split,
                reports: BTreeMap::new(),
            })
            .collect();
        return Ok(out);
    }

    for split in splits {
        let mut reports = BTreeMap::new();
        for tag in StructureTag::ALL {
            reports.insert(tag, semi_slant_decompose(&split, tag, h.get(tag), tol)?);
        }
        out.points.push(PointAnalysis { split, reports });
    }

    let first = &out.points[0].reports;
    for tag in StructureTag::ALL {
        out.angles.insert(tag, first[&tag].theta);
        out.d1_dims.insert(tag, first[&tag].d1.dim());
        out.d2_dims.insert(tag, first[&tag].d2.dim());
    }

    out.verdict = Verdict::Generic;
    for (i, pa) in out.points.iter().enumerate() {
        if let Some((tag, rep)) = pa.reports.iter().find(|(_, r)| !r.is_semi_slant) {
            out.notes.push(format!(
                "{tag} at point {i}: {}",
                rep.failure.as_deref().unwrap_or("not semi-slant")
            ));
            return Ok(out);
        }
    }
    for tag in StructureTag::ALL {
        let base = &out.points[0].reports[&tag];
        for (i, pa) in out.points.iter().enumerate().skip(1) {
            let rep = &pa.reports[&tag];
            if !same_angle(base.theta, rep.theta) || base.d1.dim() != rep.d1.dim() {
                out.witness = Some(AngleWitness {
                    structure: tag,
                    first_point: 0,
                    second_point: i,
                    first_angle: base.theta,
                    second_angle: rep.theta,
                });
                out.notes.push(format!("{tag}-angle is not constant across sample points"));
                return Ok(out);
            }
        }
    }

    let mut shared = true;
    for pa in &out.points {
        let r = &pa.reports;
        for (a, b) in [
            (StructureTag::I, StructureTag::J),
            (StructureTag::J, StructureTag::K),
            (StructureTag::I, StructureTag::K),
        ] {
            let spread = max_principal_angle(&r[&a].d1, &r[&b].d1)?;
            out.d1_spread = out.d1_spread.max(spread);
            if spread > SHARED_D1_TOL {
                shared = false;
            }
        }
    }

    let any_oblique = StructureTag::ALL
        .iter()
        .any(|t| out.angles[t] != Some(FRAC_PI_2));
    if any_oblique {
        let even = out.vertical_dim() % 2 == 0;
        out.even_fiber_ok = Some(even);
        if !even {
            out.notes.push("odd fiber dimension although some angle differs from pi/2".into());
        }
    }

    if shared {
        out.shared_d1 = Some(out.points[0].reports[&StructureTag::I].d1.clone());
        let a: Vec<f64> = StructureTag::ALL
            .iter()
            .map(|t| effective_angle(&out.points[0].reports[t]))
            .collect();
        let equal = (a[0] - a[1]).abs() <= ANGLE_TOL && (a[1] - a[2]).abs() <= ANGLE_TOL;
        out.verdict = if equal {
            Verdict::StrictlyHSemiSlant
        } else {
            Verdict::HSemiSlant
        };
    } else {
        out.notes.push(format!(
            "D1 differs between structures (largest principal angle {:e})",
            out.d1_spread
        ));
        out.verdict = Verdict::AlmostHSemiSlant;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprmap::load_map_spec;
    use crate::slantlab::CLUSTER_TOL;

    fn run(domain: usize, comps: &[&str], params: serde_json::Value) -> Classification {
        let doc = serde_json::json!({
            "domain_dim": domain, "codomain_dim": comps.len(), "components": comps, "params": params,
        });
        let f = load_map_spec(&doc.to_string()).unwrap();
        let h = HypercomplexStructure::canonical(domain / 4).unwrap();
        let pts: Vec<Vector> = (0..3)
            .map(|k| Vector::from_fn(domain, |i, _| ((i * 7 + k * 3) % 5) as f64 * 0.3 - 0.6))
            .collect();
        classify(&f, &h, &pts, CLUSTER_TOL).unwrap()
    }

    #[test]
    fn slanted_projection_is_strict() {
        let c = run(
            8,
            &["x2", "x1*sin(alpha) - x3*cos(alpha)", "2012", "x4"],
            serde_json::json!({"alpha": 0.4}),
        );
        assert_eq!(c.verdict, Verdict::StrictlyHSemiSlant);
        assert!(c.angles.values().all(|a| *a == Some(FRAC_PI_2)));
        assert_eq!(c.shared_d1.as_ref().unwrap().dim(), 4);
    }

    #[test]
    fn rotated_blocks_give_distinct_angles() {
        let c = run(
            12,
            &[
                "x5*cos(alpha) - x7*sin(alpha)",
                "gamma",
                "x6*sin(beta) - x8*cos(beta)",
                "x9",
                "x11",
                "x12",
                "x10",
            ],
            serde_json::json!({"alpha": 0.3, "beta": 0.2, "gamma": 2.0}),
        );
        assert_eq!(c.verdict, Verdict::HSemiSlant, "{:?}", c.notes);
        let cos_i = c.angles[&StructureTag::I].unwrap().cos();
        let cos_k = c.angles[&StructureTag::K].unwrap().cos();
        assert!((cos_i - 0.5f64.sin()).abs() < 1e-9);
        assert!((cos_k - 0.5f64.cos()).abs() < 1e-9);
        assert_eq!(c.angles[&StructureTag::J], Some(FRAC_PI_2));
    }

    #[test]
    fn scaled_map_is_not_riemannian() {
        let c = run(4, &["2*x1"], serde_json::json!({}));
        assert_eq!(c.verdict, Verdict::NotRiemannian);
    }

    #[test]
    fn verdict_names_round_trip() {
        for v in ["generic", "almost_h_semi_slant", "strictly_h_semi_slant"] {
            assert_eq!(Verdict::parse(v).unwrap().as_str(), v);
        }
    }
}

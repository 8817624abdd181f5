use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::point::{FrameField, Lifted, PointGeometry, StructureOps};
use crate::error::{Error, Result};
use crate::exprmap::{FrameSet, SmoothMap};
use crate::hstructure::StructureTag;
use crate::numkernel::{FdConfig, Matrix, Subspace, Vector};
use crate::slantlab::{Classification, PointAnalysis, SemiSlantReport};

/// Base tolerance of every second-order residual; the finite-difference
/// error indicator of the projector derivatives is added on top.
pub const CONDITION_TOL: f64 = 1e-5;
/// Frame values must lie in their distribution to this accuracy.
pub const FRAME_TOL: f64 = 1e-8;

pub fn condition_tolerance(fd_error: f64) -> f64 {
    CONDITION_TOL + 100.0 * fd_error
}

/// Result of evaluating one displayed condition (or identity) over all
/// frame pairs at all points, with the independent oracle where one exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResidual {
    pub condition_id: String,
    pub structure: Option<StructureTag>,
    pub max_residual: f64,
    pub oracle_residual: Option<f64>,
    pub frame_pairs_evaluated: usize,
    pub tolerance: f64,
    /// `max_residual ≤ tolerance`, i.e. the condition holds.
    pub passed: bool,
    pub oracle_vanishes: Option<bool>,
    /// The condition and the oracle agree about vanishing.
    pub agrees_with_oracle: Option<bool>,
    /// Extra hypothesis of the equivalence, when it has one.
    pub hypothesis_holds: Option<bool>,
}

struct Acc {
    id: String,
    tag: Option<StructureTag>,
    max: f64,
    oracle: Option<f64>,
    pairs: usize,
    fd_error: f64,
    hypothesis: Option<bool>,
}

impl Acc {
    fn new(id: &str, tag: Option<StructureTag>, with_oracle: bool) -> Self {
        Acc {
            id: id.to_string(),
            tag,
            max: 0.0,
            oracle: with_oracle.then_some(0.0),
            pairs: 0,
            fd_error: 0.0,
            hypothesis: None,
        }
    }

    fn at_point(&mut self, g: &PointGeometry) {
        self.fd_error = self.fd_error.max(g.fd_error);
    }

    fn push(&mut self, residual: f64, oracle: Option<f64>) {
        self.pairs += 1;
        self.max = self.max.max(residual);
        if let Some(v) = oracle {
            self.observe_oracle(v);
        }
    }

    fn observe_oracle(&mut self, v: f64) {
        if let Some(o) = self.oracle.as_mut() {
            *o = o.max(v);
        }
    }

    fn finish(self) -> ConditionResidual {
        let tolerance = condition_tolerance(self.fd_error);
        let passed = self.max <= tolerance;
        let oracle_vanishes = self.oracle.map(|o| o <= tolerance);
        let agrees = match (oracle_vanishes, self.hypothesis) {
            (Some(_), Some(false)) => None,
            (Some(ov), _) => Some(ov == passed),
            (None, _) => None,
        };
        ConditionResidual {
            condition_id: self.id,
            structure: self.tag,
            max_residual: self.max,
            oracle_residual: self.oracle,
            frame_pairs_evaluated: self.pairs,
            tolerance,
            passed,
            oracle_vanishes,
            agrees_with_oracle: agrees,
            hypothesis_holds: self.hypothesis,
        }
    }
}

/// Smooth local frames at one point.
#[derive(Debug, Clone)]
pub struct LocalFrames {
    pub vertical: Vec<FrameField>,
    pub horizontal: Vec<FrameField>,
    /// `None` when no smooth frame is available for that distribution.
    pub d1: BTreeMap<StructureTag, Option<Vec<FrameField>>>,
    pub d2: BTreeMap<StructureTag, Option<Vec<FrameField>>>,
}

fn check_frame(g: &PointGeometry, fields: &[FrameField], target: &Subspace, what: &str) -> Result<()> {
    let values = fields.iter().map(|f| f.value(g)).collect::<Result<Vec<_>>>()?;
    let span = Subspace::span_of_vectors(g.dim(), &values)?;
    let defect = span.containment_defect(target);
    if span.dim() != target.dim() || defect > FRAME_TOL {
        return Err(Error::Spec(format!(
            "frame for {what} spans a {}-dimensional space (containment defect {defect:e}) \
             but the distribution has dimension {} at {:?}",
            span.dim(),
            target.dim(),
            g.point().as_slice()
        )));
    }
    Ok(())
}

/// Vertical and horizontal frames are the projector fields applied to the
/// basis at `p`, which are smooth wherever the rank is constant. Frames of
/// `D₁`/`D₂` are constant for affine maps and must be supplied otherwise.
pub fn build_frames(
    f: &SmoothMap,
    g: &PointGeometry,
    analysis: &PointAnalysis,
    user: Option<&FrameSet>,
) -> Result<LocalFrames> {
    let mut frames = LocalFrames {
        vertical: g.split.vertical.vectors().into_iter().map(FrameField::Vertical).collect(),
        horizontal: g.split.horizontal.vectors().into_iter().map(FrameField::Horizontal).collect(),
        d1: BTreeMap::new(),
        d2: BTreeMap::new(),
    };
    if let Some(u) = user {
        if !u.vertical.is_empty() {
            frames.vertical = u.vertical.iter().cloned().map(FrameField::Expr).collect();
            check_frame(g, &frames.vertical, &g.split.vertical, "the vertical space")?;
        }
        if !u.horizontal.is_empty() {
            frames.horizontal = u.horizontal.iter().cloned().map(FrameField::Expr).collect();
            check_frame(g, &frames.horizontal, &g.split.horizontal, "the horizontal space")?;
        }
    }
    for (tag, rep) in &analysis.reports {
        for (which, space, slot, supplied) in [
            ("D1", &rep.d1, &mut frames.d1, user.and_then(|u| u.d1.get(tag))),
            ("D2", &rep.d2, &mut frames.d2, user.and_then(|u| u.d2.get(tag))),
        ] {
            let frame = if space.is_empty() {
                Some(Vec::new())
            } else if f.is_affine() {
                Some(space.vectors().into_iter().map(FrameField::Constant).collect())
            } else if let Some(fields) = supplied {
                let list: Vec<FrameField> = fields.iter().cloned().map(FrameField::Expr).collect();
                check_frame(g, &list, space, &format!("{which}^{tag}"))?;
                Some(list)
            } else {
                None
            };
            slot.insert(*tag, frame);
        }
    }
    Ok(frames)
}

/// Geometry, reports and frames at one sample point.
#[derive(Debug, Clone)]
pub struct PointContext {
    pub geom: PointGeometry,
    pub analysis: PointAnalysis,
    pub frames: LocalFrames,
}

impl PointContext {
    pub fn report(&self, tag: StructureTag) -> Result<&SemiSlantReport> {
        self.analysis
            .reports
            .get(&tag)
            .ok_or_else(|| Error::Precondition(format!("no {tag} decomposition (map is not Riemannian)")))
    }

    fn semi_slant_report(&self, tag: StructureTag) -> Result<&SemiSlantReport> {
        let rep = self.report(tag)?;
        if !rep.is_semi_slant {
            return Err(Error::Precondition(format!("{tag} decomposition is not semi-slant")));
        }
        Ok(rep)
    }

    fn d1_frame(&self, tag: StructureTag) -> Result<&[FrameField]> {
        frame_or_unsupported(&self.frames.d1, tag, "d1")
    }

    fn d2_frame(&self, tag: StructureTag) -> Result<&[FrameField]> {
        frame_or_unsupported(&self.frames.d2, tag, "d2")
    }
}

fn frame_or_unsupported<'a>(
    m: &'a BTreeMap<StructureTag, Option<Vec<FrameField>>>,
    tag: StructureTag,
    key: &str,
) -> Result<&'a [FrameField]> {
    m.get(&tag).and_then(|f| f.as_deref()).ok_or_else(|| {
        Error::Unsupported(format!(
            "no smooth frame for {}^{tag} of a non-affine map; supply `frames.{key}.{tag}` in the map spec",
            key.to_uppercase()
        ))
    })
}

/// Builds point contexts for every analyzed point of a classification.
pub fn point_contexts(
    f: &SmoothMap,
    cls: &Classification,
    user: Option<&FrameSet>,
    fd: FdConfig,
) -> Result<Vec<PointContext>> {
    cls.points
        .iter()
        .map(|pa| {
            let geom = PointGeometry::new(f, &pa.split.point, fd)?;
            let frames = build_frames(f, &geom, pa, user)?;
            Ok(PointContext {
                geom,
                analysis: pa.clone(),
                frames,
            })
        })
        .collect()
}

struct Pair {
    x: Vector,
    yl: Lifted,
}

fn pair(g: &PointGeometry, a: &FrameField, b: &FrameField) -> Result<Pair> {
    let x = a.value(g)?;
    let yl = b.lift(g, &x)?;
    Ok(Pair { x, yl })
}

/// `a = ∇̂_X φY + T_X ωY` and `b = T_X φY + H∇_X ωY` for a vertical field `Y`
/// (with `B`, `C` in place of `φ`, `ω` and `A` in place of `T` for the
/// other argument types, the same formulas apply).
fn split_terms(g: &PointGeometry, ops: &StructureOps, p: &Pair, horizontal_dir: bool) -> (Vector, Vector) {
    let vr = ops.vr(&p.yl, &p.x);
    let hr = ops.hr(&p.yl, &p.x);
    let tensor = |w: &Vector| {
        if horizontal_dir {
            g.oneill_a(&p.x, w)
        } else {
            g.oneill_t(&p.x, w)
        }
    };
    let a = ops.vdiff(&vr) + tensor(&hr.value);
    let b = tensor(&vr.value) + ops.hdiff(&hr);
    (a, b)
}

/// The eight first-order identities relating `∇̂`, `T`, `A` and `φ, ω, B, C`
/// (vertical pairs, horizontal pairs, and the two mixed orders; each
/// identity split into its vertical and horizontal part).
pub fn connection_identity_residuals(ctxs: &[PointContext], tag: StructureTag) -> Result<Vec<ConditionResidual>> {
    const IDS: [&str; 8] = [
        "connection_identity/vertical_pair/vertical_part",
        "connection_identity/vertical_pair/horizontal_part",
        "connection_identity/horizontal_pair/vertical_part",
        "connection_identity/horizontal_pair/horizontal_part",
        "connection_identity/vertical_then_horizontal/vertical_part",
        "connection_identity/vertical_then_horizontal/horizontal_part",
        "connection_identity/horizontal_then_vertical/vertical_part",
        "connection_identity/horizontal_then_vertical/horizontal_part",
    ];
    let mut accs: Vec<Acc> = IDS.iter().map(|id| Acc::new(id, Some(tag), false)).collect();
    for ctx in ctxs {
        let g = &ctx.geom;
        let rep = ctx.report(tag)?;
        let ops = StructureOps { g, r: &rep.r };
        accs.iter_mut().for_each(|a| a.at_point(g));
        let fr = &ctx.frames;
        // (directions, fields, direction is horizontal, field is vertical, slot)
        let groups: [(&[FrameField], &[FrameField], bool, bool, usize); 4] = [
            (&fr.vertical, &fr.vertical, false, true, 0),
            (&fr.horizontal, &fr.horizontal, true, false, 2),
            (&fr.vertical, &fr.horizontal, false, false, 4),
            (&fr.horizontal, &fr.vertical, true, true, 6),
        ];
        for (dirs, fields, horizontal_dir, vertical_field, slot) in groups {
            for a in dirs {
                for b in fields {
                    let p = pair(g, a, b)?;
                    let (lhs_v, lhs_h) = split_terms(g, &ops, &p, horizontal_dir);
                    let y = &p.yl.value;
                    let tensor = if horizontal_dir { g.oneill_a(&p.x, y) } else { g.oneill_t(&p.x, y) };
                    // vertical and horizontal parts of ∇_X Y, then R applied to them
                    let (vpart, hpart) = if vertical_field {
                        (ops.vdiff(&p.yl), tensor)
                    } else {
                        (tensor, ops.hdiff(&p.yl))
                    };
                    let rhs_v = ops.vr_at(&vpart) + ops.vr_at(&hpart);
                    let rhs_h = ops.hr_at(&vpart) + ops.hr_at(&hpart);
                    accs[slot].push((lhs_v - rhs_v).norm(), None);
                    accs[slot + 1].push((lhs_h - rhs_h).norm(), None);
                }
            }
        }
    }
    Ok(accs.into_iter().map(Acc::finish).collect())
}

fn bracket(a: &Pair, b: &Pair) -> Vector {
    // a = (X, Y lifted along X), b = (Y, X lifted along Y)
    &a.yl.deriv - &b.yl.deriv
}

/// Integrability of `D₁^R`: `Q(∇̂_X φY − ∇̂_Y φX) = 0` and `T_X φY = T_Y φX`
/// on `D₁`; oracle `‖(I − P_{D₁})[X, Y]‖`.
pub fn integrability_d1_residual(ctxs: &[PointContext], tag: StructureTag) -> Result<ConditionResidual> {
    let mut acc = Acc::new("integrability_d1", Some(tag), true);
    for ctx in ctxs {
        let g = &ctx.geom;
        let rep = ctx.semi_slant_report(tag)?;
        let frame = ctx.d1_frame(tag)?;
        acc.at_point(g);
        let ops = StructureOps { g, r: &rep.r };
        let q = rep.d2.projector();
        let off_d1 = Matrix::identity(g.dim(), g.dim()) - rep.d1.projector();
        for i in 0..frame.len() {
            for j in i + 1..frame.len() {
                let xy = pair(g, &frame[i], &frame[j])?;
                let yx = pair(g, &frame[j], &frame[i])?;
                let phi_y = ops.vr(&xy.yl, &xy.x);
                let phi_x = ops.vr(&yx.yl, &yx.x);
                let vert = &q * (ops.vdiff(&phi_y) - ops.vdiff(&phi_x));
                let hor = g.oneill_t(&xy.x, &phi_y.value) - g.oneill_t(&yx.x, &phi_x.value);
                let oracle = (&off_d1 * bracket(&xy, &yx)).norm();
                acc.push(vert.norm().max(hor.norm()), Some(oracle));
            }
        }
    }
    Ok(acc.finish())
}

/// Integrability of `D₂^R`: `P(∇̂_X φY − ∇̂_Y φX + T_X ωY − T_Y ωX) = 0`
/// on `D₂`; oracle `‖P_{D₁}[X, Y]‖`.
pub fn integrability_d2_residual(ctxs: &[PointContext], tag: StructureTag) -> Result<ConditionResidual> {
    let mut acc = Acc::new("integrability_d2", Some(tag), true);
    for ctx in ctxs {
        let g = &ctx.geom;
        let rep = ctx.semi_slant_report(tag)?;
        let frame = ctx.d2_frame(tag)?;
        acc.at_point(g);
        let ops = StructureOps { g, r: &rep.r };
        let p1 = rep.d1.projector();
        for i in 0..frame.len() {
            for j in i + 1..frame.len() {
                let xy = pair(g, &frame[i], &frame[j])?;
                let yx = pair(g, &frame[j], &frame[i])?;
                let phi_y = ops.vr(&xy.yl, &xy.x);
                let phi_x = ops.vr(&yx.yl, &yx.x);
                let w = ops.vdiff(&phi_y) - ops.vdiff(&phi_x)
                    + g.oneill_t(&xy.x, &ops.hr_at(&xy.yl.value))
                    - g.oneill_t(&yx.x, &ops.hr_at(&yx.yl.value));
                let oracle = (&p1 * bracket(&xy, &yx)).norm();
                acc.push((&p1 * w).norm(), Some(oracle));
            }
        }
    }
    Ok(acc.finish())
}

/// Totally geodesic map: the vertical-pair and mixed-pair conditions, with
/// the Hessian over the full coordinate frame as oracle. The equivalence
/// assumes `Q̄ (∇F_*)(Z₁, Z₂) = 0` on horizontal pairs, recorded separately.
pub fn totally_geodesic_residual(ctxs: &[PointContext], tag: StructureTag) -> Result<ConditionResidual> {
    let mut acc = Acc::new("totally_geodesic", Some(tag), true);
    let mut hypothesis = 0.0f64;
    let mut hyp_tol = CONDITION_TOL;
    for ctx in ctxs {
        let g = &ctx.geom;
        let rep = ctx.report(tag)?;
        acc.at_point(g);
        hyp_tol = hyp_tol.max(condition_tolerance(g.fd_error));
        let ops = StructureOps { g, r: &rep.r };
        let fr = &ctx.frames;
        for a in &fr.vertical {
            for b in fr.vertical.iter().chain(&fr.horizontal) {
                let p = pair(g, a, b)?;
                let (x, y) = split_terms(g, &ops, &p, false);
                let cond = ops.hr_at(&x) + ops.hr_at(&y);
                acc.push(cond.norm(), None);
            }
        }
        let n = g.dim();
        let mut oracle = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let (ei, ej) = (unit(n, i), unit(n, j));
                oracle = oracle.max(g.second_form(&ei, &ej).value.norm());
            }
        }
        acc.observe_oracle(oracle);
        for z1 in g.split.horizontal.vectors() {
            for z2 in g.split.horizontal.vectors() {
                hypothesis = hypothesis.max(g.second_form(&z1, &z2).range_perp_component.norm());
            }
        }
    }
    acc.hypothesis = Some(hypothesis <= hyp_tol);
    Ok(acc.finish())
}

fn unit(n: usize, i: usize) -> Vector {
    let mut e = Vector::zeros(n);
    e[i] = 1.0;
    e
}

/// Local product of the fibers and the horizontal leaves: vertical-pair and
/// horizontal-pair conditions; oracles `‖H∇_X Y‖` and `‖V∇_Z W‖`.
pub fn product_decomposition_residual(ctxs: &[PointContext], tag: StructureTag) -> Result<ConditionResidual> {
    let mut acc = Acc::new("product_decomposition", Some(tag), true);
    for ctx in ctxs {
        let g = &ctx.geom;
        let rep = ctx.report(tag)?;
        acc.at_point(g);
        let ops = StructureOps { g, r: &rep.r };
        let fr = &ctx.frames;
        for a in &fr.vertical {
            for b in &fr.vertical {
                let p = pair(g, a, b)?;
                let (x, y) = split_terms(g, &ops, &p, false);
                let cond = ops.hr_at(&x) + ops.hr_at(&y);
                acc.push(cond.norm(), Some(ops.hdiff(&p.yl).norm()));
            }
        }
        for a in &fr.horizontal {
            for b in &fr.horizontal {
                let p = pair(g, a, b)?;
                let (x, y) = split_terms(g, &ops, &p, true);
                let cond = ops.vr_at(&x) + ops.vr_at(&y);
                acc.push(cond.norm(), Some(ops.vdiff(&p.yl).norm()));
            }
        }
    }
    Ok(acc.finish())
}

/// Local product of the fibers by the leaves of `D₁` and `D₂`: the `D₁`-pair
/// conditions (`Q`-part and `ω`-part) and the `D₂`-pair conditions
/// (`P`-part and horizontal part); oracles `‖(I − P_{D₁})∇_U V‖` and
/// `‖(I − P_{D₂})∇_X Y‖`.
pub fn fiber_decomposition_residual(ctxs: &[PointContext], tag: StructureTag) -> Result<ConditionResidual> {
    let mut acc = Acc::new("fiber_decomposition", Some(tag), true);
    for ctx in ctxs {
        let g = &ctx.geom;
        let rep = ctx.semi_slant_report(tag)?;
        let f1 = ctx.d1_frame(tag)?;
        let f2 = ctx.d2_frame(tag)?;
        acc.at_point(g);
        let ops = StructureOps { g, r: &rep.r };
        let n = g.dim();
        let p1 = rep.d1.projector();
        let q = rep.d2.projector();
        let id = Matrix::identity(n, n);
        for a in f1 {
            for b in f1 {
                let p = pair(g, a, b)?;
                let phi_v = ops.vr(&p.yl, &p.x);
                let nh = ops.vdiff(&phi_v);
                let t = g.oneill_t(&p.x, &phi_v.value);
                let q_part = (&q * (ops.vr_at(&nh) + ops.vr_at(&t))).norm();
                let w_part = (ops.hr_at(&nh) + ops.hr_at(&t)).norm();
                let oracle = ((&id - &p1) * &p.yl.deriv).norm();
                acc.push(q_part.max(w_part), Some(oracle));
            }
        }
        for a in f2 {
            for b in f2 {
                let p = pair(g, a, b)?;
                let (x, y) = split_terms(g, &ops, &p, false);
                let p_part = (&p1 * (ops.vr_at(&x) + ops.vr_at(&y))).norm();
                let h_part = (ops.hr_at(&x) + ops.hr_at(&y)).norm();
                let oracle = ((&id - &q) * &p.yl.deriv).norm();
                acc.push(p_part.max(h_part), Some(oracle));
            }
        }
    }
    Ok(acc.finish())
}

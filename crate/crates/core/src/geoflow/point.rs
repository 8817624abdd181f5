use crate::error::{Error, Result};
use crate::exprmap::{Field, SmoothMap, VectorFieldExpr};
use crate::numkernel::{projector_derivative, FdConfig, Hessian3Tensor, Matrix, Vector};
use crate::slantlab::{split_tangent, SemiSlantReport, TangentSplit};

/// Verticality of a supplied vector is checked to this relative accuracy.
pub const VERTICAL_TOL: f64 = 1e-9;

/// `(∇F_*)(X, Y)` split along `range F_* ⊕ (range F_*)^⊥`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondFormValue {
    pub value: Vector,
    pub range_component: Vector,
    pub range_perp_component: Vector,
}

/// Everything needed for second-order quantities at one point: the split,
/// the Hessian, and the derivative of the vertical projector along each
/// coordinate axis (directional derivatives are linear combinations).
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub split: TangentSplit,
    pub pv: Matrix,
    pub ph: Matrix,
    pub range_projector: Matrix,
    pub hessian: Hessian3Tensor,
    dpv_axes: Vec<Matrix>,
    /// Largest finite-difference self-consistency indicator over the axes.
    pub fd_error: f64,
}

impl PointGeometry {
    pub fn new(f: &SmoothMap, p: &Vector, fd: FdConfig) -> Result<Self> {
        let split = split_tangent(f, p)?;
        let hessian = f.hessian(p)?;
        let n = f.domain_dim();
        let mut dpv_axes = Vec::with_capacity(n);
        let mut fd_error: f64 = 0.0;
        for a in 0..n {
            // The projector derivative is linear in the Hessian, so it
            // vanishes exactly wherever the Hessian does.
            if hessian.is_zero() {
                dpv_axes.push(Matrix::zeros(n, n));
                continue;
            }
            let mut e = Vector::zeros(n);
            e[a] = 1.0;
            let d = projector_derivative(f, p, &e, fd)?;
            fd_error = fd_error.max(d.error);
            dpv_axes.push(d.estimate);
        }
        Ok(PointGeometry {
            pv: split.vertical_projector(),
            ph: split.horizontal_projector(),
            range_projector: split.range_projector(),
            split,
            hessian,
            dpv_axes,
            fd_error,
        })
    }

    pub fn point(&self) -> &Vector {
        &self.split.point
    }

    pub fn dim(&self) -> usize {
        self.pv.nrows()
    }

    /// `d P_V [d]`.
    pub fn dpv(&self, d: &Vector) -> Matrix {
        let n = self.dim();
        let mut out = Matrix::zeros(n, n);
        for (a, m) in self.dpv_axes.iter().enumerate() {
            if d[a] != 0.0 {
                out += m * d[a];
            }
        }
        out
    }

    pub fn is_vertical(&self, v: &Vector) -> bool {
        (&self.ph * v).norm() <= VERTICAL_TOL * (1.0 + v.norm())
    }

    pub fn is_horizontal(&self, v: &Vector) -> bool {
        (&self.pv * v).norm() <= VERTICAL_TOL * (1.0 + v.norm())
    }

    /// On flat spaces `(∇F_*)(X, Y) = Σ X^a Y^b ∂_a ∂_b F`.
    pub fn second_form(&self, x: &Vector, y: &Vector) -> SecondFormValue {
        let value = self.hessian.contract(x, y);
        let range_component = &self.range_projector * &value;
        let range_perp_component = &value - &range_component;
        SecondFormValue {
            value,
            range_component,
            range_perp_component,
        }
    }

    /// `τ(F) = trace ∇F_*` in the coordinate frame.
    pub fn tension(&self) -> Vector {
        self.hessian.trace()
    }

    /// Trace of `∇F_*` over the orthonormal frame given by the columns of `q`.
    pub fn tension_in_frame(&self, q: &Matrix) -> Vector {
        let mut acc = Vector::zeros(self.hessian.out_dim);
        for c in q.column_iter() {
            let c = c.into_owned();
            acc += self.hessian.contract(&c, &c);
        }
        acc
    }

    /// Trace of `∇F_*` over an orthonormal basis (columns) of a subspace.
    pub fn partial_trace(&self, basis: &Matrix) -> Vector {
        self.tension_in_frame(basis)
    }

    fn oneill(&self, e: &Vector, w: &Vector) -> Vector {
        let d = self.dpv(e);
        &self.ph * (&d * (&self.pv * w)) - &self.pv * (&d * (&self.ph * w))
    }

    /// `T_E W = H∇_{VE} VW + V∇_{VE} HW`.
    pub fn oneill_t(&self, e: &Vector, w: &Vector) -> Vector {
        self.oneill(&(&self.pv * e), w)
    }

    /// `A_E W = H∇_{HE} VW + V∇_{HE} HW`.
    pub fn oneill_a(&self, e: &Vector, w: &Vector) -> Vector {
        self.oneill(&(&self.ph * e), w)
    }

    /// `H = (1/dim V) Σ T_{v_i} v_i`; zero for trivial fibers.
    pub fn fiber_mean_curvature(&self) -> Vector {
        let vs = self.split.vertical.vectors();
        let mut acc = Vector::zeros(self.dim());
        for v in &vs {
            acc += self.oneill_t(v, v);
        }
        if vs.is_empty() {
            acc
        } else {
            acc / vs.len() as f64
        }
    }

    /// `H̃ = (1/l) Q̄ Σ (∇F_*)(Z_i, Z_i)` over an orthonormal horizontal basis.
    pub fn range_mean_curvature(&self) -> Vector {
        let zs = self.split.horizontal.vectors();
        let mut acc = Vector::zeros(self.hessian.out_dim);
        for z in &zs {
            acc += self.second_form(z, z).range_perp_component;
        }
        if zs.is_empty() {
            acc
        } else {
            acc / zs.len() as f64
        }
    }

    /// `∇̂_X Y = V ∇_X Y` for a field `Y` and a vertical vector `X`.
    pub fn vertical_connection(&self, x: &Vector, y: &dyn Field) -> Result<Vector> {
        if !self.is_vertical(x) {
            return Err(Error::Precondition("direction of the vertical connection is not vertical".into()));
        }
        Ok(&self.pv * y.derivative(self.point(), x)?)
    }
}

pub fn second_fundamental_form(f: &SmoothMap, p: &Vector, x: &Vector, y: &Vector) -> Result<SecondFormValue> {
    let split = split_tangent(f, p)?;
    let value = f.hessian(p)?.contract(x, y);
    let range_component = split.range_projector() * &value;
    let range_perp_component = &value - &range_component;
    Ok(SecondFormValue {
        value,
        range_component,
        range_perp_component,
    })
}

pub fn tension(f: &SmoothMap, p: &Vector) -> Result<Vector> {
    Ok(f.hessian(p)?.trace())
}

pub fn oneill_t(f: &SmoothMap, p: &Vector, e: &Vector, w: &Vector) -> Result<Vector> {
    Ok(PointGeometry::new(f, p, FdConfig::default())?.oneill_t(e, w))
}

pub fn oneill_a(f: &SmoothMap, p: &Vector, e: &Vector, w: &Vector) -> Result<Vector> {
    Ok(PointGeometry::new(f, p, FdConfig::default())?.oneill_a(e, w))
}

pub fn vertical_connection(
    f: &SmoothMap,
    p: &Vector,
    x_field: &VectorFieldExpr,
    y_field: &VectorFieldExpr,
) -> Result<Vector> {
    let g = PointGeometry::new(f, p, FdConfig::default())?;
    g.vertical_connection(&x_field.value(p)?, y_field)
}

/// Value of a field at the base point together with its flat derivative
/// along one fixed direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Lifted {
    pub value: Vector,
    pub deriv: Vector,
}

impl Lifted {
    pub fn apply(&self, m: &Matrix) -> Lifted {
        Lifted {
            value: m * &self.value,
            deriv: m * &self.deriv,
        }
    }

    /// `q ↦ P_V(q) W(q)`.
    pub fn vertical(&self, g: &PointGeometry, dir: &Vector) -> Lifted {
        Lifted {
            value: &g.pv * &self.value,
            deriv: g.dpv(dir) * &self.value + &g.pv * &self.deriv,
        }
    }

    /// `q ↦ P_H(q) W(q)`.
    pub fn horizontal(&self, g: &PointGeometry, dir: &Vector) -> Lifted {
        Lifted {
            value: &g.ph * &self.value,
            deriv: -(g.dpv(dir) * &self.value) + &g.ph * &self.deriv,
        }
    }
}

/// A smooth local vector field used as a frame element.
#[derive(Debug, Clone)]
pub enum FrameField {
    /// User-supplied expression field.
    Expr(VectorFieldExpr),
    /// Constant field (only valid where the relevant distribution is constant).
    Constant(Vector),
    /// `q ↦ P_V(q) v`: vertical everywhere, smooth wherever the rank is constant.
    Vertical(Vector),
    /// `q ↦ P_H(q) v`.
    Horizontal(Vector),
}

impl FrameField {
    pub fn value(&self, g: &PointGeometry) -> Result<Vector> {
        Ok(match self {
            FrameField::Expr(e) => e.value(g.point())?,
            FrameField::Constant(v) => v.clone(),
            FrameField::Vertical(v) => &g.pv * v,
            FrameField::Horizontal(v) => &g.ph * v,
        })
    }

    /// The field with its derivative along `dir`.
    pub fn lift(&self, g: &PointGeometry, dir: &Vector) -> Result<Lifted> {
        let n = g.dim();
        Ok(match self {
            FrameField::Expr(e) => Lifted {
                value: e.value(g.point())?,
                deriv: e.derivative(g.point(), dir)?,
            },
            FrameField::Constant(v) => Lifted {
                value: v.clone(),
                deriv: Vector::zeros(n),
            },
            FrameField::Vertical(v) => Lifted {
                value: v.clone(),
                deriv: Vector::zeros(n),
            }
            .vertical(g, dir),
            FrameField::Horizontal(v) => Lifted {
                value: v.clone(),
                deriv: Vector::zeros(n),
            }
            .horizontal(g, dir),
        })
    }
}

/// Pieces of the structure acting on a lifted field, with the defining
/// projections taken at the moving point.
pub struct StructureOps<'a> {
    pub g: &'a PointGeometry,
    pub r: &'a Matrix,
}

impl StructureOps<'_> {
    /// `φ` or `B` (both are `V R`), as a field.
    pub fn vr(&self, w: &Lifted, dir: &Vector) -> Lifted {
        w.apply(self.r).vertical(self.g, dir)
    }

    /// `ω` or `C` (both are `H R`), as a field.
    pub fn hr(&self, w: &Lifted, dir: &Vector) -> Lifted {
        w.apply(self.r).horizontal(self.g, dir)
    }

    /// `φ v` / `B z` at the base point.
    pub fn vr_at(&self, v: &Vector) -> Vector {
        &self.g.pv * (self.r * v)
    }

    /// `ω v` / `C z` at the base point.
    pub fn hr_at(&self, v: &Vector) -> Vector {
        &self.g.ph * (self.r * v)
    }

    pub fn vdiff(&self, w: &Lifted) -> Vector {
        &self.g.pv * &w.deriv
    }

    pub fn hdiff(&self, w: &Lifted) -> Vector {
        &self.g.ph * &w.deriv
    }
}

/// Defects `(∇_X ω)Y` and `(∇_X φ)Y` for a vertical direction and a vertical field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParallelDefects {
    pub omega: f64,
    pub phi: f64,
}

pub fn parallel_defects(
    g: &PointGeometry,
    report: &SemiSlantReport,
    x: &Vector,
    y: &FrameField,
) -> Result<ParallelDefects> {
    if !g.is_vertical(x) {
        return Err(Error::Precondition("direction is not vertical".into()));
    }
    let ops = StructureOps { g, r: &report.r };
    let yl = y.lift(g, x)?.vertical(g, x);
    let nabla_hat_y = ops.vdiff(&yl);
    let omega_y = ops.hr(&yl, x);
    let phi_y = ops.vr(&yl, x);
    let omega = ops.hdiff(&omega_y) - ops.hr_at(&nabla_hat_y);
    let phi = ops.vdiff(&phi_y) - ops.vr_at(&nabla_hat_y);
    Ok(ParallelDefects {
        omega: omega.norm(),
        phi: phi.norm(),
    })
}

pub fn omega_parallel_residual(
    f: &SmoothMap,
    p: &Vector,
    report: &SemiSlantReport,
    x_field: &VectorFieldExpr,
    y_field: &VectorFieldExpr,
) -> Result<ParallelDefects> {
    let g = PointGeometry::new(f, p, FdConfig::default())?;
    let x = x_field.value(p)?;
    parallel_defects(&g, report, &x, &FrameField::Expr(y_field.clone()))
}

/// `‖T_{φX} φX + cos²θ T_X X‖` for `X ∈ D₂`, which vanishes when `ω` is parallel.
pub fn parallel_omega_consequence(g: &PointGeometry, report: &SemiSlantReport, x: &Vector) -> f64 {
    let phi_x = &g.pv * (&report.r * x);
    let c2 = report.cos2.unwrap_or(0.0);
    (g.oneill_t(&phi_x, &phi_x) + g.oneill_t(x, x) * c2).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprmap::load_map_spec;

    fn sphere() -> SmoothMap {
        load_map_spec(r#"{"domain_dim": 4, "codomain_dim": 1, "components": ["norm(x1, x2, x3, x4)"]}"#)
            .unwrap()
    }

    fn p() -> Vector {
        Vector::from_vec(vec![0.7, -1.1, 0.4, 0.9])
    }

    fn field(rows: &[[f64; 4]; 4]) -> VectorFieldExpr {
        VectorFieldExpr::linear(&Matrix::from_fn(4, 4, |i, j| rows[i][j]))
    }

    // x ↦ I x and x ↦ J x with the canonical structure
    fn ix() -> VectorFieldExpr {
        field(&[[0., -1., 0., 0.], [1., 0., 0., 0.], [0., 0., 0., -1.], [0., 0., 1., 0.]])
    }
    fn jx() -> VectorFieldExpr {
        field(&[[0., 0., -1., 0.], [0., 0., 0., 1.], [1., 0., 0., 0.], [0., -1., 0., 0.]])
    }

    #[test]
    fn sphere_second_fundamental_form() {
        let p = p();
        let r = p.norm();
        let v = ix().value(&p).unwrap() / r;
        let s = second_fundamental_form(&sphere(), &p, &v, &v).unwrap();
        assert!((s.value[0] - 1.0 / r).abs() < 1e-14);
        assert!((tension(&sphere(), &p).unwrap()[0] - 3.0 / r).abs() < 1e-14);
    }

    #[test]
    fn sphere_oneill_t_is_radial() {
        let p = p();
        let r2 = p.norm_squared();
        let g = PointGeometry::new(&sphere(), &p, FdConfig::default()).unwrap();
        let x = ix().value(&p).unwrap();
        let y = jx().value(&p).unwrap();
        let want = -&p * (x.dot(&x) / r2);
        assert!((g.oneill_t(&x, &x) - want).amax() < 1e-8);
        assert!(g.oneill_t(&x, &y).amax() < 1e-8);
        assert!((g.oneill_t(&x, &y) - g.oneill_t(&y, &x)).amax() < 1e-8);
        assert!((g.oneill_t(&x, &(&y * 3.0)) - g.oneill_t(&x, &y) * 3.0).amax() < 1e-12);
        assert!((g.fiber_mean_curvature().norm() - 1.0 / p.norm()).abs() < 1e-8);
    }

    #[test]
    fn sphere_oneill_a_vanishes_radially() {
        let p = p();
        let g = PointGeometry::new(&sphere(), &p, FdConfig::default()).unwrap();
        let x = ix().value(&p).unwrap();
        assert!(g.oneill_a(&p, &x).amax() < 1e-8);
        assert!(g.oneill_a(&p, &p).amax() < 1e-8);
    }

    #[test]
    fn sphere_connection_of_rotation_fields() {
        // D(Jx)·Ix = J I x = −K x, already tangent to the sphere
        let p = p();
        let got = vertical_connection(&sphere(), &p, &ix(), &jx()).unwrap();
        let k = Matrix::from_row_slice(4, 4, &[0., 0., 0., -1., 0., 0., -1., 0., 0., 1., 0., 0., 1., 0., 0., 0.]);
        assert!((got + k * &p).amax() < 1e-12);
        assert!(matches!(
            vertical_connection(&sphere(), &p, &VectorFieldExpr::linear(&Matrix::identity(4, 4)), &jx()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn affine_map_has_flat_geometry() {
        let f = load_map_spec(r#"{"domain_dim": 4, "codomain_dim": 2, "components": ["x1 - x3", "x2"]}"#)
            .unwrap();
        let g = PointGeometry::new(&f, &p(), FdConfig::default()).unwrap();
        let v = g.split.vertical.vectors();
        assert_eq!(g.oneill_t(&v[0], &v[1]).amax(), 0.0);
        assert_eq!(g.tension().amax(), 0.0);
        assert_eq!(g.fd_error, 0.0);
    }

    #[test]
    fn lifted_vertical_field_matches_direct_difference() {
        let p = p();
        let g = PointGeometry::new(&sphere(), &p, FdConfig::default()).unwrap();
        let dir = ix().value(&p).unwrap();
        let v = Vector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let l = FrameField::Vertical(v.clone()).lift(&g, &dir).unwrap();
        let h = 1e-5;
        let (plus, _) = crate::numkernel::vertical_projector(&sphere(), &(&p + &dir * h)).unwrap();
        let (minus, _) = crate::numkernel::vertical_projector(&sphere(), &(&p - &dir * h)).unwrap();
        let direct = (plus - minus) * &v / (2.0 * h);
        assert!((l.deriv - direct).amax() < 1e-8);
    }
}

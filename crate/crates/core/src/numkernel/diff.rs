//! Exact derivatives of expression maps and finite-difference derivatives
//! of their kernel projector fields.

use serde::{Deserialize, Serialize};

use super::dual::{Dual, Jet2, Scalar};
use super::linalg::{kernel_basis, svd, Matrix, Vector, RANK_RTOL};
use crate::error::{Error, Result};
use crate::exprmap::{Expr, SmoothMap};

/// Second derivatives `∂²F^c/∂x^a∂x^b`, one symmetric matrix per output.
#[derive(Debug, Clone, PartialEq)]
pub struct Hessian3Tensor {
    pub out_dim: usize,
    pub in_dim: usize,
    pub entries: Vec<Matrix>,
}

impl Hessian3Tensor {
    pub fn get(&self, c: usize, a: usize, b: usize) -> f64 {
        self.entries[c][(a, b)]
    }

    /// `Σ X^a Y^b ∂_a∂_b F`, a vector in the codomain.
    pub fn contract(&self, x: &Vector, y: &Vector) -> Vector {
        Vector::from_iterator(self.out_dim, self.entries.iter().map(|h| x.dot(&(h * y))))
    }

    /// Per-output trace (the flat Laplacian of each component).
    pub fn trace(&self) -> Vector {
        Vector::from_iterator(self.out_dim, self.entries.iter().map(|h| h.trace()))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|h| h.amax() == 0.0)
    }
}

fn evaluate<S: Scalar>(exprs: &[Expr], inputs: &[S]) -> Result<Vec<S>> {
    exprs
        .iter()
        .enumerate()
        .map(|(c, e)| {
            let v = e.eval(inputs).map_err(|reason| Error::Evaluation {
                component: c + 1,
                reason,
            })?;
            if !v.is_finite() {
                return Err(Error::Evaluation {
                    component: c + 1,
                    reason: "non-finite value or derivative (singular point)".into(),
                });
            }
            Ok(v)
        })
        .collect()
}

pub fn eval_components(exprs: &[Expr], p: &Vector) -> Result<Vector> {
    let x: Vec<f64> = p.iter().copied().collect();
    Ok(Vector::from_vec(evaluate(exprs, &x)?))
}

/// Jacobian (rows = outputs) by one forward-mode pass per output.
pub fn jacobian_of(exprs: &[Expr], p: &Vector) -> Result<Matrix> {
    let n = p.len();
    let x: Vec<Dual> = (0..n).map(|i| Dual::variable(p[i], i, n)).collect();
    let vals = evaluate(exprs, &x)?;
    let mut j = Matrix::zeros(exprs.len(), n);
    for (c, v) in vals.iter().enumerate() {
        for a in 0..n {
            j[(c, a)] = v.g[a];
        }
    }
    Ok(j)
}

pub fn hessian_of(exprs: &[Expr], p: &Vector) -> Result<Hessian3Tensor> {
    let n = p.len();
    let x: Vec<Jet2> = (0..n).map(|i| Jet2::variable(p[i], i, n)).collect();
    let vals = evaluate(exprs, &x)?;
    Ok(Hessian3Tensor {
        out_dim: exprs.len(),
        in_dim: n,
        entries: vals
            .into_iter()
            .map(|v| Matrix::from_row_slice(n, n, &v.h))
            .collect(),
    })
}

pub fn jacobian(f: &SmoothMap, p: &Vector) -> Result<Matrix> {
    f.jacobian(p)
}

pub fn hessian(f: &SmoothMap, p: &Vector) -> Result<Hessian3Tensor> {
    f.hessian(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FdScheme {
    /// Plain central differences, second order.
    Central,
    /// Central differences at `h` and `h/2` combined by Richardson
    /// extrapolation, fourth order.
    Richardson,
}

/// Step control for projector-field derivatives: `h = rel_step·(1 + |p|∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdConfig {
    pub rel_step: f64,
    pub scheme: FdScheme,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig {
            rel_step: 1e-4,
            scheme: FdScheme::Richardson,
        }
    }
}

impl FdConfig {
    pub fn step(&self, p: &Vector) -> f64 {
        self.rel_step * (1.0 + p.amax())
    }
}

/// Finite-difference estimate with its self-consistency indicator
/// `max|D(h) − D(h/2)|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorDerivative {
    pub estimate: Matrix,
    pub error: f64,
}

/// Orthogonal projector onto `ker F_*` at `q`, together with the rank.
pub fn vertical_projector(f: &SmoothMap, q: &Vector) -> Result<(Matrix, usize)> {
    let jac = f.jacobian(q)?;
    let n = f.domain_dim();
    let ker = kernel_basis(&jac, RANK_RTOL)?;
    Ok((ker.projector(), n - ker.dim()))
}

fn rank_at(f: &SmoothMap, q: &Vector) -> Result<usize> {
    Ok(svd(&f.jacobian(q)?)?.rank(RANK_RTOL))
}

/// Directional derivative of `q ↦ P_ker(q)` along `direction` at `p`.
///
/// The rank is sampled at every stencil point; any change is reported as a
/// constant-rank violation since the projector field is not smooth there.
pub fn projector_derivative(
    f: &SmoothMap,
    p: &Vector,
    direction: &Vector,
    fd: FdConfig,
) -> Result<ProjectorDerivative> {
    let n = f.domain_dim();
    if direction.len() != n {
        return Err(Error::DimensionMismatch("direction length differs from domain".into()));
    }
    if direction.amax() == 0.0 {
        return Ok(ProjectorDerivative {
            estimate: Matrix::zeros(n, n),
            error: 0.0,
        });
    }
    let rank0 = rank_at(f, p)?;
    let h = fd.step(p);
    let central = |step: f64| -> Result<Matrix> {
        let (plus, rp) = vertical_projector(f, &(p + direction * step))?;
        let (minus, rm) = vertical_projector(f, &(p - direction * step))?;
        for r in [rp, rm] {
            if r != rank0 {
                return Err(Error::ConstantRank {
                    at_point: rank0,
                    nearby: r,
                });
            }
        }
        Ok((plus - minus) / (2.0 * step))
    };
    let coarse = central(h)?;
    let fine = central(h / 2.0)?;
    let error = (&coarse - &fine).amax();
    let estimate = match fd.scheme {
        FdScheme::Central => coarse,
        FdScheme::Richardson => (fine * 4.0 - coarse) / 3.0,
    };
    Ok(ProjectorDerivative { estimate, error })
}

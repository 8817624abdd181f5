//! Dense decompositions, orthonormal subspaces, principal angles and projectors.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative rank threshold: singular values at or below this fraction of
/// the largest one count as zero.
pub const RANK_RTOL: f64 = 1e-10;
/// Absolute floor for the rank threshold.
pub const RANK_ATOL: f64 = 1e-12;
/// A singular value below this fraction of the largest, but above
/// [`RANK_RTOL`], makes the numerical rank ambiguous.
pub const RANK_AMBIGUITY_RTOL: f64 = 1e-6;


/// Thin singular value decomposition `m = U diag(sigma) Vᵀ` with
/// `sigma` sorted nonincreasing.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    pub fn sigma_max(&self) -> f64 {
        self.sigma.first().copied().unwrap_or(0.0)
    }

    pub fn reconstruct(&self) -> Matrix {
        let k = self.sigma.len();
        let mut us = self.u.clone();
        for j in 0..k {
            us.column_mut(j).scale_mut(self.sigma[j]);
        }
        us * self.v.transpose()
    }

    /// Number of singular values above `threshold(sigma_max, rtol)`.
    pub fn rank(&self, rtol: f64) -> usize {
        let thr = rank_threshold(self.sigma_max(), rtol);
        self.sigma.iter().filter(|&&s| s > thr).count()
    }
}

pub fn rank_threshold(sigma_max: f64, rtol: f64) -> f64 {
    (rtol * sigma_max).max(RANK_ATOL)
}

pub fn svd(m: &Matrix) -> Result<Svd> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    let (r, c) = m.shape();
    let k = r.min(c);
    if k == 0 {
        return Ok(Svd {
            u: Matrix::zeros(r, 0),
            sigma: Vec::new(),
            v: Matrix::zeros(c, 0),
        });
    }
    // nalgebra's bidiagonal SVD occasionally returns factors that do not
    // reconstruct rank-deficient wide matrices, so the factorization is
    // delegated to faer.
    let fm = faer::Mat::<f64>::from_fn(r, c, |i, j| m[(i, j)]);
    let dec = fm
        .thin_svd()
        .map_err(|e| Error::Numeric(format!("SVD did not converge: {e:?}")))?;
    let (u, s, v) = (dec.U(), dec.S().column_vector(), dec.V());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let su = Matrix::from_fn(r, k, |i, j| u[(i, order[j])]);
    let sv = Matrix::from_fn(c, k, |i, j| v[(i, order[j])]);
    let sigma: Vec<f64> = order.iter().map(|&j| s[j].max(0.0)).collect();
    let out = Svd { u: su, sigma, v: sv };
    let scale = 1.0 + m.amax();
    if (out.reconstruct() - m).amax() > 1e-10 * scale {
        return Err(Error::Numeric("SVD factors do not reconstruct the matrix".into()));
    }
    Ok(out)
}

/// A linear subspace of `R^ambient_dim` stored as an orthonormal basis
/// (one basis vector per column).
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    ambient_dim: usize,
    basis: Matrix,
}

impl Subspace {
    pub fn zero(ambient_dim: usize) -> Self {
        Subspace {
            ambient_dim,
            basis: Matrix::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Subspace {
            ambient_dim,
            basis: Matrix::identity(ambient_dim, ambient_dim),
        }
    }

    /// Wraps columns that are already orthonormal; fails if the Gram
    /// matrix deviates from the identity by more than 1e-12.
    pub fn from_orthonormal(basis: Matrix) -> Result<Self> {
        let gram = basis.transpose() * &basis;
        let dev = (gram - Matrix::identity(basis.ncols(), basis.ncols())).amax();
        if dev > 1e-12 {
            return Err(Error::Numeric(format!(
                "basis is not orthonormal (Gram deviation {dev:e})"
            )));
        }
        Ok(Subspace {
            ambient_dim: basis.nrows(),
            basis,
        })
    }

    /// Orthonormal basis for the column space of `m`, dropping directions
    /// whose singular value falls under the rank threshold.
    pub fn span_of(m: &Matrix) -> Result<Self> {
        let ambient_dim = m.nrows();
        if m.ncols() == 0 || m.amax() == 0.0 {
            return Ok(Subspace::zero(ambient_dim));
        }
        let dec = svd(m)?;
        let r = dec.rank(RANK_RTOL);
        Ok(Subspace {
            ambient_dim,
            basis: dec.u.columns(0, r).into_owned(),
        })
    }

    pub fn span_of_vectors(ambient_dim: usize, vs: &[Vector]) -> Result<Self> {
        if vs.is_empty() {
            return Ok(Subspace::zero(ambient_dim));
        }
        Self::span_of(&Matrix::from_columns(vs))
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn vectors(&self) -> Vec<Vector> {
        self.basis.column_iter().map(|c| c.into_owned()).collect()
    }

    pub fn projector(&self) -> Matrix {
        projector(self)
    }

    pub fn project(&self, v: &Vector) -> Vector {
        &self.basis * (self.basis.transpose() * v)
    }

    /// Coordinates of `v` in this basis.
    pub fn coords(&self, v: &Vector) -> Vector {
        self.basis.transpose() * v
    }

    /// The orthogonal complement in the ambient space.
    pub fn complement(&self) -> Subspace {
        let n = self.ambient_dim;
        if self.is_empty() {
            return Subspace::full(n);
        }
        if self.dim() == n {
            return Subspace::zero(n);
        }
        let q = Matrix::identity(n, n) - self.projector();
        Subspace {
            ambient_dim: n,
            basis: eigenspace_above(&q, 0.5),
        }
    }

    /// Orthogonal complement of `inner` inside `self` (`inner` must be a
    /// subspace of `self`).
    pub fn complement_within(&self, inner: &Subspace) -> Result<Subspace> {
        if inner.is_empty() {
            return Ok(self.clone());
        }
        let residual = Matrix::identity(self.ambient_dim, self.ambient_dim) - inner.projector();
        let m = residual * &self.basis;
        let dec = svd(&m)?;
        let want = self.dim().saturating_sub(inner.dim());
        let basis = dec.u.columns(0, want).into_owned();
        Ok(Subspace {
            ambient_dim: self.ambient_dim,
            basis,
        })
    }

    /// Largest distance from a unit vector of `self` to `other`, measured as
    /// the sine of the largest principal angle (0 when `self ⊆ other`).
    pub fn containment_defect(&self, other: &Subspace) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let resid = &self.basis - other.projector() * &self.basis;
        resid.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `max ‖(I − P) R P‖` restricted to this subspace: zero iff the
    /// subspace is invariant under `r`.
    pub fn invariance_defect(&self, r: &Matrix) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let image = r * &self.basis;
        let resid = &image - self.projector() * &image;
        resid.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn transformed(&self, q: &Matrix) -> Result<Subspace> {
        Subspace::span_of(&(q * &self.basis))
    }
}

/// Eigenvectors of a symmetric matrix whose eigenvalues exceed `cut`,
/// in ascending index order of the decomposition.
fn eigenspace_above(sym: &Matrix, cut: f64) -> Matrix {
    let eig = SymmetricEigen::new(sym.clone());
    let cols: Vec<Vector> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > cut)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        Matrix::zeros(sym.nrows(), 0)
    } else {
        Matrix::from_columns(&cols)
    }
}

/// Orthonormal basis of the null space `{v : ‖m v‖ ≤ thr}` where the
/// threshold is `rank_tol · σ_max` (floored at [`RANK_ATOL`]).
pub fn kernel_basis(m: &Matrix, rank_tol: f64) -> Result<Subspace> {
    let c = m.ncols();
    if m.nrows() == 0 || m.amax() == 0.0 {
        return Ok(Subspace::full(c));
    }
    let dec = svd(m)?;
    let r = dec.rank(rank_tol);
    let row_space = Subspace {
        ambient_dim: c,
        basis: dec.v.columns(0, r).into_owned(),
    };
    Ok(row_space.complement())
}

/// Principal angles between two subspaces, nondecreasing, each in `[0, π/2]`.
///
/// Cosines come from the singular values of `AᵀB`; small angles are
/// recovered from the sines (singular values of the part of the smaller
/// space orthogonal to the larger) since `acos` loses half the digits near 1.
pub fn principal_angles(a: &Subspace, b: &Subspace) -> Result<Vec<f64>> {
    if a.ambient_dim != b.ambient_dim {
        return Err(Error::DimensionMismatch(format!(
            "principal angles between subspaces of R^{} and R^{}",
            a.ambient_dim, b.ambient_dim
        )));
    }
    let (small, large) = if a.dim() <= b.dim() { (a, b) } else { (b, a) };
    if small.is_empty() {
        return Ok(Vec::new());
    }
    let cross = small.basis.transpose() * &large.basis;
    let cos = svd(&cross)?.sigma;
    let resid = &small.basis - large.projector() * &small.basis;
    let mut sin = svd(&resid)?.sigma;
    sin.reverse();
    let angles = (0..small.dim())
        .map(|i| {
            let c = cos.get(i).copied().unwrap_or(0.0).clamp(0.0, 1.0);
            let s = sin.get(i).copied().unwrap_or(0.0).clamp(0.0, 1.0);
            if c * c >= 0.5 {
                s.asin()
            } else {
                c.acos()
            }
        })
        .collect::<Vec<_>>();
    let mut sorted = angles;
    sorted.sort_by(f64::total_cmp);
    Ok(sorted)
}

/// Angle between a nonzero vector and a subspace.
pub fn angle_to_subspace(v: &Vector, s: &Subspace) -> f64 {
    let inside = s.project(v);
    let outside = v - &inside;
    outside.norm().atan2(inside.norm())
}

/// Orthogonal projector `B Bᵀ` onto a subspace.
pub fn projector(s: &Subspace) -> Matrix {
    &s.basis * s.basis.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn e(n: usize, i: usize) -> Vector {
        let mut v = Vector::zeros(n);
        v[i] = 1.0;
        v
    }

    #[test]
    fn svd_of_identity_and_diagonal() {
        let s = svd(&Matrix::identity(3, 3)).unwrap();
        assert_eq!(s.sigma, vec![1.0, 1.0, 1.0]);
        let d = Matrix::from_diagonal(&Vector::from_vec(vec![3.0, 0.0]));
        let s = svd(&d).unwrap();
        assert!((s.sigma[0] - 3.0).abs() < 1e-15);
        assert!(s.sigma[1].abs() < 1e-15);
    }

    #[test]
    fn svd_reconstructs_and_sorts() {
        let m = Matrix::from_row_slice(
            5,
            3,
            &[
                0.3, -1.2, 2.0, 4.1, 0.5, -0.7, 0.0, 1.0, 1.0, -2.2, 3.3, 0.1, 0.9, 0.9, -0.4,
            ],
        );
        let s = svd(&m).unwrap();
        assert!((s.reconstruct() - &m).norm() < 1e-10 * m.norm());
        assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
        let gu = s.u.transpose() * &s.u - Matrix::identity(3, 3);
        let gv = s.v.transpose() * &s.v - Matrix::identity(3, 3);
        assert!(gu.amax() < 1e-12 && gv.amax() < 1e-12);
    }

    #[test]
    fn svd_rejects_nan() {
        let mut m = Matrix::identity(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(matches!(svd(&m), Err(Error::Numeric(_))));
    }

    #[test]
    fn kernel_of_identity_and_zero() {
        assert_eq!(kernel_basis(&Matrix::identity(4, 4), RANK_RTOL).unwrap().dim(), 0);
        assert_eq!(kernel_basis(&Matrix::zeros(2, 5), RANK_RTOL).unwrap().dim(), 5);
    }

    #[test]
    fn kernel_is_orthonormal_and_annihilated() {
        let m = Matrix::from_row_slice(2, 4, &[1.0, 2.0, 0.0, -1.0, 0.0, 1.0, 1.0, 1.0]);
        let k = kernel_basis(&m, RANK_RTOL).unwrap();
        assert_eq!(k.dim(), 2);
        assert!((&m * k.basis()).amax() < 1e-14);
        let g = k.basis().transpose() * k.basis() - Matrix::identity(2, 2);
        assert!(g.amax() < 1e-12);
    }

    #[test]
    fn principal_angle_examples() {
        let e1 = Subspace::span_of_vectors(3, &[e(3, 0)]).unwrap();
        let e2 = Subspace::span_of_vectors(3, &[e(3, 1)]).unwrap();
        let diag = Subspace::span_of_vectors(3, &[e(3, 0) + e(3, 1)]).unwrap();
        assert!(principal_angles(&e1, &e1).unwrap()[0].abs() < 1e-15);
        assert!((principal_angles(&e1, &e2).unwrap()[0] - FRAC_PI_2).abs() < 1e-15);
        assert!((principal_angles(&e1, &diag).unwrap()[0] - FRAC_PI_4).abs() < 1e-15);
        assert!(principal_angles(&Subspace::zero(3), &e1).unwrap().is_empty());
    }

    #[test]
    fn equal_subspaces_have_tiny_angles() {
        // A rotated basis of the same plane: acos alone would give ~1e-8.
        let a = Subspace::span_of_vectors(4, &[e(4, 0), e(4, 1)]).unwrap();
        let b = Subspace::span_of_vectors(4, &[e(4, 0) + e(4, 1) * 3.0, e(4, 1) - e(4, 0)]).unwrap();
        for t in principal_angles(&a, &b).unwrap() {
            assert!(t < 1e-14, "{t}");
        }
    }

    #[test]
    fn projector_examples() {
        assert_eq!(projector(&Subspace::full(3)), Matrix::identity(3, 3));
        let s = Subspace::span_of_vectors(2, &[e(2, 0)]).unwrap();
        assert_eq!(projector(&s), Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn complement_within_splits_dimension() {
        let outer = Subspace::span_of_vectors(4, &[e(4, 0), e(4, 1), e(4, 2)]).unwrap();
        let inner = Subspace::span_of_vectors(4, &[e(4, 0) + e(4, 1)]).unwrap();
        let rest = outer.complement_within(&inner).unwrap();
        assert_eq!(rest.dim(), 2);
        assert!((inner.basis().transpose() * rest.basis()).amax() < 1e-15);
        assert!(rest.containment_defect(&outer) < 1e-15);
    }
}

use crate::error::{Error, Result};
use crate::exprmap::SmoothMap;
use crate::numkernel::{
    rank_threshold, svd, Matrix, Subspace, Vector, RANK_AMBIGUITY_RTOL, RANK_RTOL,
};

/// Horizontal singular values must lie within this distance of 1.
pub const RIEMANNIAN_TOL: f64 = 1e-9;
/// Tolerance of `‖F_*‖²_F = rank` for Riemannian maps.
pub const EIKONAL_TOL: f64 = 1e-9;

/// Orthogonal splittings of the domain and codomain at one point.
#[derive(Debug, Clone)]
pub struct TangentSplit {
    pub point: Vector,
    pub jacobian: Matrix,
    /// `ker F_*`.
    pub vertical: Subspace,
    /// `(ker F_*)^⊥`.
    pub horizontal: Subspace,
    pub range: Subspace,
    pub range_perp: Subspace,
    pub horizontal_singular_values: Vec<f64>,
    pub rank: usize,
    pub is_riemannian: bool,
    /// `|‖F_*‖²_F − rank|`.
    pub eikonal_residual: f64,
}

impl TangentSplit {
    pub fn domain_dim(&self) -> usize {
        self.vertical.ambient_dim()
    }

    pub fn vertical_projector(&self) -> Matrix {
        self.vertical.projector()
    }

    pub fn horizontal_projector(&self) -> Matrix {
        self.horizontal.projector()
    }

    pub fn range_projector(&self) -> Matrix {
        self.range.projector()
    }

    /// The eikonal identity only constrains Riemannian maps.
    pub fn eikonal_holds(&self) -> bool {
        !self.is_riemannian || self.eikonal_residual <= EIKONAL_TOL
    }
}

pub fn split_tangent(f: &SmoothMap, p: &Vector) -> Result<TangentSplit> {
    let jac = f.jacobian(p)?;
    let (n_out, n_in) = jac.shape();
    let dec = svd(&jac)?;
    let smax = dec.sigma_max();
    let lo = rank_threshold(smax, RANK_RTOL);
    let hi = rank_threshold(smax, RANK_AMBIGUITY_RTOL);
    if let Some(&s) = dec.sigma.iter().find(|&&s| s > lo && s <= hi) {
        return Err(Error::AmbiguousRank { sigma: s });
    }
    let rank = dec.sigma.iter().filter(|&&s| s > lo).count();
    let horizontal = Subspace::from_orthonormal(dec.v.columns(0, rank).into_owned())?;
    let range = Subspace::from_orthonormal(dec.u.columns(0, rank).into_owned())?;
    let vertical = horizontal.complement();
    let range_perp = range.complement();
    debug_assert_eq!(vertical.dim() + rank, n_in);
    debug_assert_eq!(range_perp.dim() + rank, n_out);
    let horizontal_singular_values = dec.sigma[..rank].to_vec();
    let is_riemannian = horizontal_singular_values
        .iter()
        .all(|s| (s - 1.0).abs() <= RIEMANNIAN_TOL);
    let eikonal_residual = (jac.norm_squared() - rank as f64).abs();
    Ok(TangentSplit {
        point: p.clone(),
        jacobian: jac,
        vertical,
        horizontal,
        range,
        range_perp,
        horizontal_singular_values,
        rank,
        is_riemannian,
        eikonal_residual,
    })
}

/// `e(F)(p) = ½ ‖(F_*)_p‖²` (Hilbert–Schmidt norm).
pub fn energy_density(f: &SmoothMap, p: &Vector) -> Result<f64> {
    Ok(0.5 * f.jacobian(p)?.norm_squared())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprmap::load_map_spec;

    fn map(domain: usize, comps: &[&str]) -> SmoothMap {
        let doc = serde_json::json!({
            "domain_dim": domain, "codomain_dim": comps.len(), "components": comps,
            "params": {"alpha": 0.7}
        });
        load_map_spec(&doc.to_string()).unwrap()
    }

    #[test]
    fn slanted_projection_is_riemannian_rank_three() {
        let f = map(8, &["x2", "x1*sin(alpha) - x3*cos(alpha)", "2012", "x4"]);
        let s = split_tangent(&f, &Vector::from_element(8, 0.3)).unwrap();
        assert_eq!((s.rank, s.vertical.dim()), (3, 5));
        assert!(s.is_riemannian && s.eikonal_holds());
        assert_eq!(s.range_perp.dim(), 1);
    }

    #[test]
    fn identity_has_trivial_fiber() {
        let f = map(4, &["x1", "x2", "x3", "x4"]);
        let s = split_tangent(&f, &Vector::zeros(4)).unwrap();
        assert_eq!(s.vertical.dim(), 0);
        assert!(s.is_riemannian);
    }

    #[test]
    fn scaling_breaks_isometry() {
        let f = map(4, &["2*x1"]);
        let s = split_tangent(&f, &Vector::zeros(4)).unwrap();
        assert!(!s.is_riemannian);
        assert!((s.horizontal_singular_values[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn near_threshold_rank_is_ambiguous() {
        let f = map(4, &["x1", "1e-8*x2"]);
        assert!(matches!(
            split_tangent(&f, &Vector::zeros(4)),
            Err(Error::AmbiguousRank { .. })
        ));
    }

    #[test]
    fn energy_density_examples() {
        let p = Vector::from_vec(vec![0.3, -0.8, 1.1, 0.4]);
        assert_eq!(energy_density(&map(4, &["0", "0"]), &p).unwrap(), 0.0);
        let norm = map(4, &["norm(x1, x2, x3, x4)"]);
        assert!((energy_density(&norm, &p).unwrap() - 0.5).abs() < 1e-15);
    }
}

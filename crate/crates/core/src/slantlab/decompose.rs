use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use nalgebra::SymmetricEigen;

use super::split::TangentSplit;
use crate::error::{Error, Result};
use crate::hstructure::StructureTag;
use crate::numkernel::{svd, Matrix, Subspace};

/// Default eigenvalue clustering tolerance (absolute; the spectrum lies in `[0, 1]`).
pub const CLUSTER_TOL: f64 = 1e-8;
/// `|cos θ|` at or below this is reported as exactly `π/2`.
pub const RIGHT_ANGLE_COS_TOL: f64 = 1e-9;

/// Decomposition `ker F_* = D₁ ⊕ D₂` for one almost complex structure `R`.
///
/// `phi`, `omega`, `b`, `c` are expressed in the orthonormal bases of the
/// split: `phi = VᵀRV`, `omega = HᵀRV`, `b = VᵀRH`, `c = HᵀRH`, where `V`,
/// `H` are the vertical and horizontal bases.
#[derive(Debug, Clone)]
pub struct SemiSlantReport {
    pub structure_tag: StructureTag,
    pub vertical: Subspace,
    pub horizontal: Subspace,
    pub r: Matrix,
    pub d1: Subspace,
    pub d2: Subspace,
    /// `cos²θ` of the lower cluster; absent when `d2` is empty or not a single cluster.
    pub cos2: Option<f64>,
    pub theta: Option<f64>,
    pub omega_d2: Subspace,
    pub mu: Subspace,
    pub phi: Matrix,
    pub omega: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    /// Eigenvalues of `φᵀφ` (`= −φ²`), descending.
    pub spectrum: Vec<f64>,
    pub identity_residuals: BTreeMap<String, f64>,
    pub is_semi_slant: bool,
    /// Why the decomposition is not semi-slant, if it is not.
    pub failure: Option<String>,
    /// Bases of `d1`, `d2` in vertical coordinates.
    e1: Matrix,
    e2: Matrix,
}

impl SemiSlantReport {
    pub fn d1_coords(&self) -> &Matrix {
        &self.e1
    }

    pub fn d2_coords(&self) -> &Matrix {
        &self.e2
    }

    pub fn is_right_angle(&self) -> bool {
        self.theta == Some(FRAC_PI_2)
    }

    /// Human-readable angle; the complex case (`d2` empty) prints as `0`.
    pub fn theta_display(&self) -> String {
        match (self.theta, self.is_semi_slant) {
            (Some(t), _) if t == FRAC_PI_2 => "pi/2".to_string(),
            (Some(t), _) => format!("{t:.12}"),
            (None, false) => "undefined (not semi-slant)".to_string(),
            (None, true) if self.d1.is_empty() => "n/a (trivial fiber)".to_string(),
            (None, true) => "0 (complex case)".to_string(),
        }
    }
}

/// Splits an index set of ascending values into clusters separated by gaps larger than `tol`.
fn cluster_count(sorted: &[f64], tol: f64) -> usize {
    if sorted.is_empty() {
        return 0;
    }
    1 + sorted.windows(2).filter(|w| (w[1] - w[0]).abs() > tol).count()
}

fn columns_of(m: &Matrix, idx: &[usize]) -> Matrix {
    Matrix::from_fn(m.nrows(), idx.len(), |i, j| m[(i, idx[j])])
}

pub fn semi_slant_decompose(
    split: &TangentSplit,
    tag: StructureTag,
    r: &Matrix,
    tol: f64,
) -> Result<SemiSlantReport> {
    if !split.is_riemannian {
        return Err(Error::Precondition(
            "semi-slant decomposition needs a Riemannian map".into(),
        ));
    }
    let n = split.domain_dim();
    if r.nrows() != n || r.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "structure is {}x{}, domain is R^{n}",
            r.nrows(),
            r.ncols()
        )));
    }
    let v = split.vertical.basis();
    let h = split.horizontal.basis();
    let k = v.ncols();
    let phi = v.transpose() * r * v;
    let omega = h.transpose() * r * v;
    let b = v.transpose() * r * h;
    let c = h.transpose() * r * h;

    // φᵀφ is symmetric by construction and equals −φ² up to rounding.
    let s = phi.transpose() * &phi;
    // nalgebra refuses to decompose an empty matrix (trivial fiber).
    let eig = if k == 0 {
        SymmetricEigen {
            eigenvectors: Matrix::zeros(0, 0),
            eigenvalues: nalgebra::DVector::zeros(0),
        }
    } else {
        SymmetricEigen::new(s)
    };
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let spectrum: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let upper: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| eig.eigenvalues[i] >= 1.0 - tol)
        .collect();
    let lower: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| eig.eigenvalues[i] < 1.0 - tol)
        .collect();
    let e1 = columns_of(&eig.eigenvectors, &upper);
    let e2 = columns_of(&eig.eigenvectors, &lower);
    let d1 = Subspace::span_of(&(v * &e1))?;
    let d2 = Subspace::span_of(&(v * &e2))?;

    // The eigenvalue-1 cluster only certifies |φx| ≈ 1; R-invariance of the
    // whole space is a separate condition.
    let invariance = d1.invariance_defect(r);
    if invariance > tol.sqrt() + 1e-12 {
        return Err(Error::Structural(format!(
            "{tag}: eigenvalue-1 eigenspace is not {tag}-invariant (defect {invariance:e})"
        )));
    }

    let mut lower_vals: Vec<f64> = lower.iter().map(|&i| eig.eigenvalues[i]).collect();
    lower_vals.sort_by(f64::total_cmp);
    let clusters = cluster_count(&lower_vals, tol);
    let width = lower_vals.last().zip(lower_vals.first()).map(|(a, b)| a - b);
    let (is_semi_slant, failure, cos2) = match width {
        None => (true, None, None),
        Some(w) if w <= tol => {
            let mean = lower_vals.iter().sum::<f64>() / lower_vals.len() as f64;
            (true, None, Some(mean.clamp(0.0, 1.0)))
        }
        Some(w) => (
            false,
            Some(format!(
                "eigenvalues below 1 form {} clusters (spread {w:e})",
                clusters.max(2)
            )),
            None,
        ),
    };
    // Square roots of eigenvalues lose half the digits near 0 and 1, so the
    // angle is taken from singular values of φ and ω restricted to D₂.
    let mean_sv = |m: Matrix| -> Result<f64> {
        let sv = svd(&m)?.sigma;
        Ok(sv.iter().sum::<f64>() / sv.len().max(1) as f64)
    };
    let theta = match cos2 {
        None => None,
        Some(_) => {
            let cos = mean_sv(&phi * &e2)?;
            let sin = mean_sv(&omega * &e2)?;
            Some(if cos <= RIGHT_ANGLE_COS_TOL { FRAC_PI_2 } else { sin.atan2(cos) })
        }
    };
    let cos2 = theta.map(|t| if t == FRAC_PI_2 { 0.0 } else { t.cos().powi(2) });

    let omega_d2 = Subspace::span_of(&(h * &omega * &e2))?;
    let mu = split.horizontal.complement_within(&omega_d2)?;

    let mut report = SemiSlantReport {
        structure_tag: tag,
        vertical: split.vertical.clone(),
        horizontal: split.horizontal.clone(),
        r: r.clone(),
        d1,
        d2,
        cos2,
        theta,
        omega_d2,
        mu,
        phi,
        omega,
        b,
        c,
        spectrum,
        identity_residuals: BTreeMap::new(),
        is_semi_slant,
        failure,
        e1,
        e2,
    };
    report.identity_residuals = structural_identities(&report);
    Ok(report)
}

/// Max-entry residuals of the algebraic identities satisfied by `φ, ω, B, C`.
pub fn structural_identities(rep: &SemiSlantReport) -> BTreeMap<String, f64> {
    let k = rep.phi.nrows();
    let l = rep.c.nrows();
    let (phi, omega, b, c) = (&rep.phi, &rep.omega, &rep.b, &rep.c);
    let mut out = BTreeMap::new();
    let mut put = |name: &str, v: f64| {
        out.insert(name.to_string(), v);
    };
    let amax = |m: Matrix| if m.is_empty() { 0.0 } else { m.amax() };
    put("phi^2 + B omega = -id", amax(phi * phi + b * omega + Matrix::identity(k, k)));
    put("C^2 + omega B = -id", amax(c * c + omega * b + Matrix::identity(l, l)));
    put("omega phi + C omega = 0", amax(omega * phi + c * omega));
    put("B C + phi B = 0", amax(b * c + phi * b));
    let c2 = rep.cos2.unwrap_or(0.0);
    let e2 = &rep.e2;
    put("phi^2 = -cos^2 on D2", amax(phi * phi * e2 + e2 * c2));
    // B maps the horizontal space into D₂, i.e. has no D₁ component.
    put("B(horizontal) in D2", amax(rep.e1.transpose() * b));
    put("D1 invariant", rep.d1.invariance_defect(&rep.r));
    put("mu invariant", rep.mu.invariance_defect(&rep.r));
    let m = e2.ncols();
    put(
        "<phi X, phi Y> = cos^2 <X, Y>",
        amax(e2.transpose() * phi.transpose() * phi * e2 - Matrix::identity(m, m) * c2),
    );
    put(
        "<omega X, omega Y> = sin^2 <X, Y>",
        amax(e2.transpose() * omega.transpose() * omega * e2 - Matrix::identity(m, m) * (1.0 - c2)),
    );
    put(
        "dim omega D2 + dim mu = dim horizontal",
        (rep.omega_d2.dim() + rep.mu.dim()) as f64 - l as f64,
    );
    out
}

/// `R̂ = φ P + sec θ · φ Q` on the vertical space, in vertical coordinates,
/// where `P`, `Q` project onto `D₁`, `D₂`.
pub fn rhat(rep: &SemiSlantReport) -> Result<Matrix> {
    if !rep.is_semi_slant {
        return Err(Error::Precondition(format!(
            "{}: R-hat needs a semi-slant decomposition",
            rep.structure_tag
        )));
    }
    let p = &rep.e1 * rep.e1.transpose();
    let q = &rep.e2 * rep.e2.transpose();
    if rep.e2.ncols() == 0 {
        return Ok(&rep.phi * p);
    }
    if rep.is_right_angle() {
        return Err(Error::Undefined(format!(
            "R-hat for {} needs sec θ, but θ = π/2",
            rep.structure_tag
        )));
    }
    let sec = 1.0 / rep.cos2.unwrap_or(1.0).sqrt();
    Ok(&rep.phi * p + &rep.phi * q * sec)
}

/// [`rhat`] pushed forward to an endomorphism of the ambient space (zero on the horizontal part).
pub fn rhat_ambient(rep: &SemiSlantReport) -> Result<Matrix> {
    let v = rep.vertical.basis();
    Ok(v * rhat(rep)? * v.transpose())
}

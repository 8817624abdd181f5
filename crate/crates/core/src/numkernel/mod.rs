//! Dense linear algebra and forward-mode differentiation.
//!
//! All routines are pure functions of their inputs. Subspaces are carried
//! as orthonormal bases; downstream code only relies on basis-independent
//! quantities (projectors, principal angles, norms), so the orientation of
//! SVD bases never matters.

mod diff;
mod dual;
mod linalg;

pub use diff::{
    eval_components, hessian, hessian_of, jacobian, jacobian_of, projector_derivative,
    vertical_projector, FdConfig, FdScheme, Hessian3Tensor, ProjectorDerivative,
};
pub use dual::{Dual, Jet2, Scalar};
pub use linalg::{
    angle_to_subspace, kernel_basis, principal_angles, projector, rank_threshold, svd, Matrix,
    Subspace, Svd, Vector, RANK_AMBIGUITY_RTOL, RANK_ATOL, RANK_RTOL,
};

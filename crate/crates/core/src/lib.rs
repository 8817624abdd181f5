//! Numerical analysis of semi-slant Riemannian maps from flat hyperkähler
//! space `R^4m` to `R^n`.
//!
//! The crate is layered bottom-up:
//!
//! - [`numkernel`]: SVD-based subspaces, principal angles, projectors and
//!   forward-mode derivatives of expression maps.
//! - [`exprmap`]: the expression language and map-specification documents.
//! - [`hstructure`]: hypercomplex structures `(I, J, K)` on `R^4m`.
//! - [`slantlab`]: pointwise vertical/horizontal splitting, semi-slant
//!   decomposition per structure and the overall classification.
//! - [`geoflow`]: second fundamental form, O'Neill tensors, connection
//!   identities and residual evaluators for integrability, harmonicity,
//!   total geodesy, product decompositions and umbilical fibers.
//!
//! Both domain and codomain carry Euclidean metrics, so every Levi-Civita
//! connection is plain coordinate differentiation and the second
//! fundamental form `(∇F_*)(X, Y)` is the Hessian contraction
//! `Σ X^a Y^b ∂_a∂_b F`.

pub mod error;
pub mod exprmap;
pub mod geoflow;
pub mod hstructure;
pub mod numkernel;
pub mod slantlab;

pub use error::{Error, Result};

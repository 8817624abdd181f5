//! Pointwise first-order analysis: tangent splittings, semi-slant
//! decompositions for each of I, J, K, and the overall classification.

mod classify;
mod decompose;
mod split;

pub use classify::{
    classify, AngleWitness, Classification, PointAnalysis, Verdict, ANGLE_TOL, SHARED_D1_TOL,
};
pub use decompose::{
    rhat, rhat_ambient, semi_slant_decompose, structural_identities, SemiSlantReport, CLUSTER_TOL,
    RIGHT_ANGLE_COS_TOL,
};
pub use split::{energy_density, split_tangent, TangentSplit, EIKONAL_TOL, RIEMANNIAN_TOL};

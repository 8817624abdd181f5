//! Second-order geometry of a map between flat spaces.
//!
//! Both metrics are Euclidean, so the Levi-Civita connections are plain
//! coordinate differentiation and `(∇F_*)(X, Y)` is the Hessian contracted
//! with `X` and `Y`. The O'Neill tensors and the vertical connection are
//! built from the derivative of the kernel projector field, which is
//! estimated by finite differences; residual tolerances include its error
//! indicator.

mod conditions;
mod curvature;
mod point;

pub use conditions::{
    build_frames, condition_tolerance, connection_identity_residuals, fiber_decomposition_residual,
    integrability_d1_residual, integrability_d2_residual, point_contexts, product_decomposition_residual,
    totally_geodesic_residual, ConditionResidual, LocalFrames, PointContext, CONDITION_TOL, FRAME_TOL,
};
pub use curvature::{
    curvature_summary, harmonicity_report, umbilical_report, CurvatureSummary, HarmonicityReport,
    UmbilicalReport,
};
pub use point::{
    omega_parallel_residual, oneill_a, oneill_t, parallel_defects, parallel_omega_consequence,
    second_fundamental_form, tension, vertical_connection, FrameField, Lifted, ParallelDefects,
    PointGeometry, SecondFormValue, StructureOps, VERTICAL_TOL,
};

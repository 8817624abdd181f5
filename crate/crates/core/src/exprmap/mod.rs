//! Expression language for smooth maps and vector fields, and the
//! map-specification document format.

mod expr;
mod field;
mod parser;
mod spec;

pub use expr::{BinOp, Expr, Func};
pub use field::{bracket, ConstantField, Field, VectorFieldExpr};
pub use parser::parse_expr;
pub use spec::{load_map_spec, FrameSet, FrameSpec, MapSpec, SampleBox, SmoothMap};

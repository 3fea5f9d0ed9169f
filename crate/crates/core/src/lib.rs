//! Exact symbolic tensor calculus for conformally Fedosov structures.

pub mod check;
pub mod connection;
pub mod curvature;
pub mod error;
pub mod examples;
pub mod expr;
pub mod linalg;
pub mod sample;
pub mod structure;
pub mod tensor;
pub mod tractor;

pub use check::{Check, Status, Suite};
pub use connection::Connection;
pub use curvature::{decompose_curvature, full_decompose, CurvatureDecomposition};
pub use error::{Error, ExprError, Result};
pub use examples::ExampleSpec;
pub use expr::{parse_expr, RationalExpr};
pub use structure::{check_structure, FedosovStructure, GaugeTransform};
pub use tensor::{inverse_two_form, Chart, Tensor, Variance};
pub use tractor::{TractorContext, TractorSection};

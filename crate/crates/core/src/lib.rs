// NaN-aware `!(x <= tol)` checks and index loops over fixed-size blocks are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::op_ref)]

pub mod bench;
pub mod curve;
pub mod distance;
pub mod error;
pub mod field;
pub mod generate;
pub mod group;
pub mod io;
pub mod matrix;
pub mod properties;
pub mod sampling;
pub mod sim;

pub use curve::{build_curve, ec_distance, CurveQueryResult, DiscretizedCurve, SearchOptions};
pub use error::{Error, Result};
pub use field::{evaluate_field, FieldEvaluation, FieldOptions, GainLaw, GainSchedule};
pub use group::{Group, GroupElement, GroupKind, Twist};
pub use matrix::{frobenius_norm, mat_exp, mat_log, SquareMatrix};

//! Exact calculus on step-function representatives of `L^p(0, 1)`.

mod exponent;
mod interval;
mod step;

pub use exponent::{conjugate, Exponent, MAX_P, MIN_P};
pub use interval::IntervalUnion;
pub use step::{
    distance_identity_check, linear_combine, pairing, PiecewiseConstantFn, MERGE_TOL,
};
pub(crate) use step::for_each_overlap;

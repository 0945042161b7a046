//! Computable random variables with values in L^p(0,1).
//!
//! Elements of L^p are represented exactly as piecewise-constant functions on
//! half-open cells of (0,1]. On top of that representation the crate offers
//! duality tools, random variables over the unit interval with their simple
//! approximations, Bochner expectations by quadrature, and exact pushforward
//! probabilities of ball events. The [`verify`] module runs the numeric
//! acceptance suite used by the `lpvar` binary.

pub mod bochner;
pub mod distribution;
pub mod duality;
pub mod error;
pub mod lpspace;
pub mod numeric;
pub mod rv;
pub mod verify;

pub use bochner::{ExpectationMethod, ExpectationResult};
pub use distribution::{BallEvent, Event, MCEstimate, PushforwardRow};
pub use duality::{DenseFamily, NormingFunctional};
pub use error::{Error, Result};
pub use lpspace::{conjugate, Exponent, IntervalUnion, PiecewiseConstantFn};
pub use rv::{AffineForm, LpRandomVariable, PettisApproximation, SimpleCell, SimpleLpRV};
pub use verify::{CriterionResult, VerificationReport};

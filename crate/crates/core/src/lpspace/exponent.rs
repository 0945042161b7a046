use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible exponent (exclusive).
pub const MIN_P: f64 = 1.0 + 1e-9;
/// Largest admissible exponent (exclusive).
pub const MAX_P: f64 = 1e9;

/// A Hölder-conjugate pair `(p, q)` with `1/p + 1/q = 1`.
///
/// Only `p` is serialized; `q` is rederived on load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExponentRepr", into = "ExponentRepr")]
pub struct Exponent {
    p: f64,
    q: f64,
}

#[derive(Serialize, Deserialize)]
struct ExponentRepr {
    p: f64,
}

impl TryFrom<ExponentRepr> for Exponent {
    type Error = Error;

    fn try_from(repr: ExponentRepr) -> Result<Self> {
        conjugate(repr.p).map_err(|e| Error::invalid(e.to_string()))
    }
}

impl From<Exponent> for ExponentRepr {
    fn from(e: Exponent) -> Self {
        ExponentRepr { p: e.p }
    }
}

/// Builds the conjugate pair for `p`, rejecting `p` outside `(1 + 1e-9, 1e9)`.
pub fn conjugate(p: f64) -> Result<Exponent> {
    if !(p > MIN_P && p < MAX_P) {
        return Err(Error::domain(format!(
            "exponent p = {p} outside the admissible interval ({MIN_P}, {MAX_P:e})"
        )));
    }
    Ok(Exponent {
        p,
        q: p / (p - 1.0),
    })
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        conjugate(p)
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }

    #[inline]
    pub fn q(&self) -> f64 {
        self.q
    }

    /// The pair with the roles of `p` and `q` swapped.
    pub fn dual(&self) -> Exponent {
        Exponent {
            p: self.q,
            q: self.p,
        }
    }
}

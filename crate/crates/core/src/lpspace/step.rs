use std::fmt;

use serde::{Deserialize, Serialize};

use super::exponent::Exponent;
use crate::error::{Error, Result};
use crate::numeric::pow_abs;

/// Breakpoints closer than this are identified.
pub const MERGE_TOL: f64 = 1e-12;

/// A step function on `(0, 1)`, the exact representative of an element of
/// `L^p(0, 1)`.
///
/// Cell `i` is the half-open interval `(b[i-1], b[i]]` carrying `values[i-1]`.
/// Every constructor returns the canonical form: breakpoints at least
/// [`MERGE_TOL`] apart, no two adjacent cells with the same value, and no
/// negative zeros. Two step functions are a.e. equal iff their canonical
/// forms are identical.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepRepr", into = "StepRepr")]
pub struct PiecewiseConstantFn {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct StepRepr {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<StepRepr> for PiecewiseConstantFn {
    type Error = Error;

    fn try_from(repr: StepRepr) -> Result<Self> {
        PiecewiseConstantFn::new(repr.breakpoints, repr.values)
            .map_err(|e| Error::invalid(e.to_string()))
    }
}

impl From<PiecewiseConstantFn> for StepRepr {
    fn from(f: PiecewiseConstantFn) -> Self {
        StepRepr {
            breakpoints: f.breakpoints,
            values: f.values,
        }
    }
}

impl fmt::Debug for PiecewiseConstantFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Step[")?;
        for (i, (a, b, v)) in self.cells().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "({a}, {b}]: {v}")?;
        }
        f.write_str("]")
    }
}

impl PiecewiseConstantFn {
    /// Validates the raw representation and returns its canonical form.
    ///
    /// Checks run in order and the first violation is reported.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("values must be nonempty"));
        }
        if breakpoints.len() != values.len() + 1 {
            return Err(Error::invalid(format!(
                "expected {} breakpoints for {} values, got {}",
                values.len() + 1,
                values.len(),
                breakpoints.len()
            )));
        }
        if let Some(i) = breakpoints.iter().position(|b| !b.is_finite()) {
            return Err(Error::invalid(format!("breakpoint {i} is not finite")));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::invalid(format!(
                "first breakpoint must be 0, got {}",
                breakpoints[0]
            )));
        }
        let last = breakpoints[breakpoints.len() - 1];
        if last != 1.0 {
            return Err(Error::invalid(format!(
                "last breakpoint must be 1, got {last}"
            )));
        }
        if let Some(i) = breakpoints.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::invalid(format!(
                "breakpoints must be increasing: b[{}] = {} < b[{}] = {}",
                i + 1,
                breakpoints[i + 1],
                i,
                breakpoints[i]
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("value {i} is not finite")));
        }
        Ok(Self::canonical_from(&breakpoints, &values))
    }

    /// Canonicalizes validated data: drops sub-tolerance cells, then merges
    /// equal neighbours.
    fn canonical_from(breakpoints: &[f64], values: &[f64]) -> Self {
        let n = values.len();
        let mut bs = Vec::with_capacity(n + 1);
        let mut vs: Vec<f64> = Vec::with_capacity(n);
        bs.push(0.0);
        for i in 1..=n {
            let right = breakpoints[i];
            let v = values[i - 1] + 0.0;
            let left = *bs.last().unwrap();
            if right - left < MERGE_TOL {
                if i == n {
                    if vs.is_empty() {
                        bs.push(1.0);
                        vs.push(v);
                    } else {
                        *bs.last_mut().unwrap() = 1.0;
                    }
                }
                continue;
            }
            if vs.last() == Some(&v) {
                *bs.last_mut().unwrap() = right;
            } else {
                bs.push(right);
                vs.push(v);
            }
        }
        // Dropping a sliver can leave equal neighbours behind.
        let mut out_b = Vec::with_capacity(bs.len());
        let mut out_v: Vec<f64> = Vec::with_capacity(vs.len());
        out_b.push(0.0);
        for (i, &v) in vs.iter().enumerate() {
            if out_v.last() == Some(&v) {
                *out_b.last_mut().unwrap() = bs[i + 1];
            } else {
                out_b.push(bs[i + 1]);
                out_v.push(v);
            }
        }
        *out_b.last_mut().unwrap() = 1.0;
        PiecewiseConstantFn {
            breakpoints: out_b,
            values: out_v,
        }
    }

    /// Re-runs canonicalization; a no-op on any constructed value.
    pub fn canonical(&self) -> Self {
        Self::canonical_from(&self.breakpoints, &self.values)
    }

    pub fn constant(value: f64) -> Self {
        assert!(value.is_finite(), "constant value must be finite");
        PiecewiseConstantFn {
            breakpoints: vec![0.0, 1.0],
            values: vec![value + 0.0],
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// The indicator of `(a, c]` for `0 <= a <= c <= 1`.
    pub fn indicator(a: f64, c: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&c) || a > c {
            return Err(Error::domain(format!(
                "indicator endpoints must satisfy 0 <= a <= c <= 1, got ({a}, {c})"
            )));
        }
        Ok(Self::canonical_from(&[0.0, a, c, 1.0], &[0.0, 1.0, 0.0]))
    }

    /// `1_(0, c)`, the value of the indicator process at `c`.
    pub fn initial_indicator(c: f64) -> Result<Self> {
        Self::indicator(0.0, c)
    }

    /// Step function on the uniform grid `{j / n}` with the given cell values.
    pub fn on_uniform_grid(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        let breakpoints = (0..=n).map(|j| j as f64 / n as f64).collect();
        Self::new(breakpoints, values)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn num_cells(&self) -> usize {
        self.values.len()
    }

    /// Iterates over `(left, right, value)` for each cell.
    pub fn cells(&self) -> impl ExactSizeIterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, &v)| (w[0], w[1], v))
    }

    pub fn is_zero(&self) -> bool {
        self.values.len() == 1 && self.values[0] == 0.0
    }

    /// Value at `t`, or `None` outside `(0, 1]`.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        if !(t > 0.0 && t <= 1.0) {
            return None;
        }
        let i = self.breakpoints.partition_point(|&b| b < t);
        Some(self.values[i.max(1) - 1])
    }

    /// `∫ |f|^p`, summed exactly cell by cell.
    pub fn lp_norm_pow(&self, e: Exponent) -> f64 {
        let p = e.p();
        self.cells().map(|(a, b, v)| pow_abs(v, p) * (b - a)).sum()
    }

    pub fn lp_norm(&self, e: Exponent) -> f64 {
        pow_abs(self.lp_norm_pow(e), 1.0 / e.p())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn integral(&self) -> f64 {
        self.cells().map(|(a, b, v)| v * (b - a)).sum()
    }

    /// `∫ w(t) f(t) dt` for a weight with antiderivative `w_int`.
    pub fn integral_weighted(&self, w_int: impl Fn(f64) -> f64) -> f64 {
        self.cells()
            .map(|(a, b, v)| v * (w_int(b) - w_int(a)))
            .sum()
    }

    /// Applies `g` to every cell value.
    pub fn map_values(&self, g: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.breakpoints.clone(),
            self.values.iter().map(|&v| g(v)).collect(),
        )
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map_values(|v| c * v)
            .expect("scaling a step function by a finite factor stays finite")
    }

    pub fn sub(&self, other: &Self) -> Self {
        linear_combine(&[1.0, -1.0], &[self, other]).expect("two operands")
    }

    pub fn add(&self, other: &Self) -> Self {
        linear_combine(&[1.0, 1.0], &[self, other]).expect("two operands")
    }

    /// `‖self − other‖_p^p` without materializing the difference.
    pub fn distance_pow(&self, other: &Self, e: Exponent) -> f64 {
        let p = e.p();
        let mut acc = 0.0;
        for_each_overlap(self, other, |w, a, b| acc += pow_abs(a - b, p) * w);
        acc
    }

    pub fn distance(&self, other: &Self, e: Exponent) -> f64 {
        pow_abs(self.distance_pow(other, e), 1.0 / e.p())
    }

    /// a.e.-equality up to `tol` in the sup norm.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let mut ok = true;
        for_each_overlap(self, other, |_, a, b| ok &= (a - b).abs() <= tol);
        ok
    }

    /// `(t, f(t))` at every cell midpoint.
    pub fn midpoint_samples(&self) -> Vec<(f64, f64)> {
        self.cells().map(|(a, b, v)| (0.5 * (a + b), v)).collect()
    }
}

/// Walks the common refinement of `f` and `g`, calling
/// `visit(width, f_value, g_value)` on each piece.
pub(crate) fn for_each_overlap(
    f: &PiecewiseConstantFn,
    g: &PiecewiseConstantFn,
    mut visit: impl FnMut(f64, f64, f64),
) {
    let (fb, gb) = (&f.breakpoints, &g.breakpoints);
    let (mut i, mut j) = (1, 1);
    let mut left = 0.0;
    while i < fb.len() && j < gb.len() {
        let (rf, rg) = (fb[i], gb[j]);
        let right;
        if (rf - rg).abs() < MERGE_TOL {
            right = rf.max(rg);
            visit(right - left, f.values[i - 1], g.values[j - 1]);
            i += 1;
            j += 1;
        } else if rf < rg {
            right = rf;
            visit(right - left, f.values[i - 1], g.values[j - 1]);
            i += 1;
        } else {
            right = rg;
            visit(right - left, f.values[i - 1], g.values[j - 1]);
            j += 1;
        }
        left = right;
    }
}

/// `∫ x y` over `(0, 1)`, exact on the common refinement.
pub fn pairing(x: &PiecewiseConstantFn, y: &PiecewiseConstantFn) -> f64 {
    let mut acc = 0.0;
    for_each_overlap(x, y, |w, a, b| acc += a * b * w);
    acc
}

/// Merged, tolerance-deduplicated breakpoints of all `fs`.
fn common_refinement(fs: &[&PiecewiseConstantFn]) -> Vec<f64> {
    let mut all: Vec<f64> = fs
        .iter()
        .flat_map(|f| f.breakpoints[1..f.breakpoints.len() - 1].iter().copied())
        .collect();
    all.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(all.len() + 2);
    out.push(0.0);
    for b in all {
        if b - out.last().unwrap() >= MERGE_TOL {
            out.push(b);
        }
    }
    if 1.0 - out.last().unwrap() < MERGE_TOL {
        out.pop();
    }
    out.push(1.0);
    out
}

/// `Σ coeffs[j] · fs[j]`, pointwise on the common refinement.
///
/// Each refined cell sums its terms over a fixed pairwise tree, so a cell's
/// value depends only on the terms active on it. The cost is
/// `O(E log n)` for `E` breakpoints over `n` functions.
pub fn linear_combine(
    coeffs: &[f64],
    fs: &[&PiecewiseConstantFn],
) -> Result<PiecewiseConstantFn> {
    if fs.is_empty() {
        return Err(Error::domain("linear_combine needs at least one function"));
    }
    if coeffs.len() != fs.len() {
        return Err(Error::domain(format!(
            "linear_combine got {} coefficients for {} functions",
            coeffs.len(),
            fs.len()
        )));
    }
    if let Some(c) = coeffs.iter().find(|c| !c.is_finite()) {
        return Err(Error::domain(format!("coefficient {c} is not finite")));
    }
    let grid = common_refinement(fs);

    // Sweep the refinement left to right. Each function's current term sits
    // in a leaf of a fixed-shape summation tree, so a cell's value depends
    // only on the terms active there and not on the order of updates.
    let mut events: Vec<(f64, usize, usize)> = fs
        .iter()
        .enumerate()
        .flat_map(|(i, f)| {
            f.breakpoints[1..f.breakpoints.len() - 1]
                .iter()
                .enumerate()
                .map(move |(j, &b)| (b, i, j + 1))
        })
        .collect();
    events.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));

    let leaves = fs.len().next_power_of_two();
    let mut tree = vec![0.0; 2 * leaves];
    for (i, (&c, f)) in coeffs.iter().zip(fs).enumerate() {
        tree[leaves + i] = c * f.values[0];
    }
    for node in (1..leaves).rev() {
        tree[node] = tree[2 * node] + tree[2 * node + 1];
    }

    let mut next = 0;
    let mut acc = Vec::with_capacity(grid.len() - 1);
    for w in grid.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        while next < events.len() && events[next].0 < mid {
            let (_, i, j) = events[next];
            let mut node = leaves + i;
            tree[node] = coeffs[i] * fs[i].values[j];
            while node > 1 {
                node /= 2;
                tree[node] = tree[2 * node] + tree[2 * node + 1];
            }
            next += 1;
        }
        acc.push(tree[1]);
    }
    PiecewiseConstantFn::new(grid, acc)
}

/// `‖1_(0,a) − 1_(0,b)‖_p^p`; equals `|a − b|`.
pub fn distance_identity_check(a: f64, b: f64, e: Exponent) -> Result<f64> {
    for (name, v) in [("a", a), ("b", b)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::domain(format!("{name} = {v} must lie in (0, 1)")));
        }
    }
    let fa = PiecewiseConstantFn::initial_indicator(a)?;
    let fb = PiecewiseConstantFn::initial_indicator(b)?;
    Ok(fa.distance_pow(&fb, e))
}

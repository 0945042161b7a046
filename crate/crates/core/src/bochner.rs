//! Bochner integrability and expectation.
//!
//! Simple variables are integrated exactly. Anything carrying a multiple of
//! the indicator process goes through the midpoint rule in `ω`; node
//! evaluations run in parallel but are reduced in a fixed order, so results
//! are bit-stable across thread counts.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lpspace::{linear_combine, pairing, Exponent, PiecewiseConstantFn};
use crate::numeric::{midpoints, pairwise_sum};
use crate::rv::{LpRandomVariable, SimpleLpRV};

/// Placeholder for [`ExpectationResult::max_dual_residual`] before a check.
pub const RESIDUAL_UNSET: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectationMethod {
    ExactSimple,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationResult {
    pub expectation: PiecewiseConstantFn,
    pub method: ExpectationMethod,
    /// Quadrature nodes used; `0` on the exact path.
    pub node_count: usize,
    /// Largest dual residual seen, or [`RESIDUAL_UNSET`].
    pub max_dual_residual: f64,
}

impl ExpectationResult {
    pub fn with_dual_residual(mut self, residual: f64) -> Self {
        self.max_dual_residual = residual;
        self
    }

    /// `t,value` rows at every cell midpoint of the expectation.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value\n");
        for (t, v) in self.expectation.midpoint_samples() {
            writeln!(out, "{t},{v}").unwrap();
        }
        out
    }
}

fn check_nodes(nodes: usize) -> Result<()> {
    if nodes < 2 {
        return Err(Error::domain(format!(
            "quadrature needs at least 2 nodes, got {nodes}"
        )));
    }
    Ok(())
}

/// The simple part, if `xi` has no indicator-process component.
fn as_simple(xi: &LpRandomVariable) -> Result<Option<SimpleLpRV>> {
    let form = xi.affine_form()?;
    Ok((form.chi_coef == 0.0).then_some(form.base))
}

/// `ξ(ω_i)` at the midpoint nodes, in node order.
fn sample_nodes(xi: &LpRandomVariable, nodes: usize) -> Result<Vec<PiecewiseConstantFn>> {
    midpoints(nodes)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|w| xi.evaluate(w))
        .collect()
}

/// Midpoint-rule mean of `h(ξ(ω_i))`.
fn node_mean(
    xi: &LpRandomVariable,
    nodes: usize,
    h: impl Fn(&PiecewiseConstantFn) -> f64 + Sync,
) -> Result<f64> {
    let terms = midpoints(nodes)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|w| xi.evaluate(w).map(|f| h(&f)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&terms) / nodes as f64)
}

/// `∫ ‖ξ(ω)‖_p dω`: exact for simple variables, midpoint rule otherwise.
pub fn norm_integral(xi: &LpRandomVariable, nodes: usize, e: Exponent) -> Result<f64> {
    if let Some(s) = as_simple(xi)? {
        let terms: Vec<f64> = s
            .cells()
            .iter()
            .map(|c| c.set.measure() * c.value.lp_norm(e))
            .collect();
        return Ok(pairwise_sum(&terms));
    }
    check_nodes(nodes)?;
    node_mean(xi, nodes, |f| f.lp_norm(e))
}

/// `E(ξ)`: `Σ λ(A_k) X_k` for simple variables, `(1/M) Σ ξ(ω_i)` otherwise.
pub fn expectation(xi: &LpRandomVariable, nodes: usize) -> Result<ExpectationResult> {
    if let Some(s) = as_simple(xi)? {
        let weights: Vec<f64> = s.cells().iter().map(|c| c.set.measure()).collect();
        let values: Vec<&PiecewiseConstantFn> = s.cells().iter().map(|c| &c.value).collect();
        return Ok(ExpectationResult {
            expectation: linear_combine(&weights, &values)?,
            method: ExpectationMethod::ExactSimple,
            node_count: 0,
            max_dual_residual: RESIDUAL_UNSET,
        });
    }
    check_nodes(nodes)?;
    let samples = sample_nodes(xi, nodes)?;
    let weights = vec![1.0 / nodes as f64; nodes];
    let refs: Vec<&PiecewiseConstantFn> = samples.iter().collect();
    Ok(ExpectationResult {
        expectation: linear_combine(&weights, &refs)?,
        method: ExpectationMethod::Quadrature,
        node_count: nodes,
        max_dual_residual: RESIDUAL_UNSET,
    })
}

/// `max_Y |Φ(Y) − ⟨candidate, Y⟩|` with `Φ(Y) = ∫ ⟨ξ(ω), Y⟩ dω`.
///
/// `Φ` is summed exactly for simple variables and by the midpoint rule
/// otherwise.
pub fn dual_residual(
    xi: &LpRandomVariable,
    candidate: &PiecewiseConstantFn,
    tests: &[PiecewiseConstantFn],
    nodes: usize,
) -> Result<f64> {
    if tests.is_empty() {
        return Err(Error::domain("dual residual needs at least one test function"));
    }
    let phi: Box<dyn Fn(&PiecewiseConstantFn) -> f64> = match as_simple(xi)? {
        Some(s) => Box::new(move |y| {
            let terms: Vec<f64> = s
                .cells()
                .iter()
                .map(|c| c.set.measure() * pairing(&c.value, y))
                .collect();
            pairwise_sum(&terms)
        }),
        None => {
            check_nodes(nodes)?;
            let samples = sample_nodes(xi, nodes)?;
            Box::new(move |y| {
                let terms: Vec<f64> = samples.iter().map(|f| pairing(f, y)).collect();
                pairwise_sum(&terms) / nodes as f64
            })
        }
    };
    Ok(tests
        .iter()
        .map(|y| (phi(y) - pairing(candidate, y)).abs())
        .fold(0.0, f64::max))
}

/// Both sides of the interchange `∫ ⟨χ(ω), y⟩ dω = ∫ (1 − t) y(t) dt`:
/// the left by the midpoint rule in `ω`, the right exactly on `y`'s cells.
pub fn fubini_check(y: &PiecewiseConstantFn, nodes: usize) -> Result<(f64, f64)> {
    check_nodes(nodes)?;
    let lhs = node_mean(&LpRandomVariable::IndicatorProcess, nodes, |f| pairing(f, y))?;
    let rhs = y.integral_weighted(|t| t - 0.5 * t * t);
    Ok((lhs, rhs))
}

/// The `n` indicators of `((j−1)/n, j/n]`.
pub fn uniform_indicators(n: usize) -> Vec<PiecewiseConstantFn> {
    (1..=n)
        .map(|j| {
            PiecewiseConstantFn::indicator((j - 1) as f64 / n as f64, j as f64 / n as f64)
                .expect("grid endpoints lie in [0, 1]")
        })
        .collect()
}

/// `t ↦ 1 − t` replaced by its cell averages on a uniform `n`-cell grid.
pub fn averaged_one_minus_t(n: usize) -> PiecewiseConstantFn {
    PiecewiseConstantFn::on_uniform_grid(
        (1..=n)
            .map(|j| 1.0 - (j as f64 - 0.5) / n as f64)
            .collect(),
    )
    .expect("finite values")
}

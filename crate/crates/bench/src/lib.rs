//! Fixtures shared by the benchmarks.

use lpvar_core::PiecewiseConstantFn;

/// A deterministic step function with `cells` equal cells and values in
/// `[-1, 1]`.
pub fn sawtooth(cells: usize) -> PiecewiseConstantFn {
    let values = (0..cells)
        .map(|i| ((i * 7919) % 201) as f64 / 100.0 - 1.0)
        .collect();
    PiecewiseConstantFn::on_uniform_grid(values).expect("finite values on a uniform grid")
}

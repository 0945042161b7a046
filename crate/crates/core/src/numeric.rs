//! Small numeric helpers shared by the quadrature and norm code.

/// `|v|^p`, computed as `exp(p * ln|v|)` with `v == 0` mapped to `0`.
#[inline]
pub fn pow_abs(v: f64, p: f64) -> f64 {
    let a = v.abs();
    if a == 0.0 {
        0.0
    } else if a == 1.0 {
        1.0
    } else {
        (p * a.ln()).exp()
    }
}

/// Pairwise (cascade) summation in a fixed order.
///
/// The split points depend only on the slice length, so the result is
/// bit-identical however the terms were produced.
pub fn pairwise_sum(terms: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if terms.len() <= BLOCK {
        return terms.iter().sum();
    }
    let mid = terms.len() / 2;
    pairwise_sum(&terms[..mid]) + pairwise_sum(&terms[mid..])
}

/// Midpoint-rule nodes `(i - 1/2) / m` for `i = 1..=m`.
pub fn midpoints(m: usize) -> impl ExactSizeIterator<Item = f64> + Clone {
    let inv = 1.0 / m as f64;
    (0..m).map(move |i| (i as f64 + 0.5) * inv)
}

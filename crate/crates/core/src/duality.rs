//! Norming functionals, the norm-as-supremum characterization over a dyadic
//! family of step functions, and the weak-continuity modulus of the
//! indicator process.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lpspace::{for_each_overlap, pairing, Exponent, PiecewiseConstantFn};
use crate::numeric::pow_abs;

/// Norms below this are treated as zero when building functionals.
pub const DEGENERATE_NORM: f64 = 1e-12;

/// Largest `2^level · (2·value_levels + 1)` accepted for a dyadic family.
pub const MAX_FAMILY_GRID: u64 = 1 << 24;

/// Largest family that [`DenseFamily::members`] will materialize.
pub const MAX_ENUMERATED_MEMBERS: u128 = 1 << 20;

/// A unit-norm element of `L^q` attaining `‖reference‖_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormingFunctional {
    reference: PiecewiseConstantFn,
    representer: PiecewiseConstantFn,
    exponent: Exponent,
}

impl NormingFunctional {
    pub fn reference(&self) -> &PiecewiseConstantFn {
        &self.reference
    }

    pub fn representer(&self) -> &PiecewiseConstantFn {
        &self.representer
    }

    pub fn exponent(&self) -> Exponent {
        self.exponent
    }

    /// Applies the functional to `z`.
    pub fn apply(&self, z: &PiecewiseConstantFn) -> f64 {
        pairing(z, &self.representer)
    }
}

/// Builds `Y = sign(x)|x|^{p−1} / ‖x‖_p^{p−1}`, the norming representer of `x`.
pub fn norming_functional(x: &PiecewiseConstantFn, e: Exponent) -> Result<NormingFunctional> {
    let norm = x.lp_norm(e);
    if norm <= DEGENERATE_NORM {
        return Err(Error::Degenerate(format!(
            "‖x‖_p = {norm:e} is too small to have a canonical norming functional"
        )));
    }
    let pm1 = e.p() - 1.0;
    let representer = x.map_values(|v| v.signum() * pow_abs(v / norm, pm1))?;
    Ok(NormingFunctional {
        reference: x.clone(),
        representer,
        exponent: e,
    })
}

/// All step functions on the dyadic grid `{j / 2^level}` whose cell values lie
/// on the `(2·value_levels + 1)`-point uniform grid of `[−bound, bound]`.
///
/// The family is never materialized unless asked for; it is identified by its
/// parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FamilyParams", into = "FamilyParams")]
pub struct DenseFamily {
    level: u32,
    value_levels: u32,
    bound: f64,
}

#[derive(Serialize, Deserialize)]
struct FamilyParams {
    level: u32,
    value_levels: u32,
    bound: f64,
}

impl TryFrom<FamilyParams> for DenseFamily {
    type Error = Error;

    fn try_from(p: FamilyParams) -> Result<Self> {
        dyadic_dense_family(p.level, p.value_levels, p.bound)
            .map_err(|e| Error::invalid(e.to_string()))
    }
}

impl From<DenseFamily> for FamilyParams {
    fn from(f: DenseFamily) -> Self {
        FamilyParams {
            level: f.level,
            value_levels: f.value_levels,
            bound: f.bound,
        }
    }
}

pub fn dyadic_dense_family(level: u32, value_levels: u32, bound: f64) -> Result<DenseFamily> {
    if level < 1 {
        return Err(Error::domain("dyadic level must be at least 1"));
    }
    if value_levels < 1 {
        return Err(Error::domain("value_levels must be at least 1"));
    }
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::domain(format!("bound {bound} must be positive and finite")));
    }
    let grid = 1u64
        .checked_shl(level)
        .filter(|_| level < 40)
        .and_then(|cells| cells.checked_mul(2 * u64::from(value_levels) + 1));
    match grid {
        Some(g) if g <= MAX_FAMILY_GRID => Ok(DenseFamily {
            level,
            value_levels,
            bound,
        }),
        _ => Err(Error::Resource(format!(
            "dyadic family with level {level} and {value_levels} value levels exceeds the \
             size cap of {MAX_FAMILY_GRID} grid entries; use a smaller level or fewer value levels"
        ))),
    }
}

impl DenseFamily {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn value_levels(&self) -> u32 {
        self.value_levels
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn num_cells(&self) -> usize {
        1 << self.level
    }

    /// Value-grid spacing `B / L`.
    pub fn step(&self) -> f64 {
        self.bound / f64::from(self.value_levels)
    }

    /// Declared density radius: `B / L`.
    pub fn density_radius(&self) -> f64 {
        self.step()
    }

    /// `(2L + 1)^(2^level)`, or `None` if it overflows `u128`.
    pub fn len(&self) -> Option<u128> {
        let base = 2 * u128::from(self.value_levels) + 1;
        let mut acc: u128 = 1;
        for _ in 0..self.num_cells() {
            acc = acc.checked_mul(base)?;
        }
        Some(acc)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn grid_value(&self, digit: i64) -> f64 {
        (digit - i64::from(self.value_levels)) as f64 * self.step()
    }

    /// The member with mixed-radix index `index`; cell 0 is the least
    /// significant digit and digit `d` maps to the value `(d − L)·B/L`.
    pub fn member(&self, index: u128) -> Result<PiecewiseConstantFn> {
        if self.len().is_some_and(|n| index >= n) {
            return Err(Error::domain(format!("member index {index} out of range")));
        }
        let base = 2 * u128::from(self.value_levels) + 1;
        let mut rest = index;
        let values = (0..self.num_cells())
            .map(|_| {
                let d = (rest % base) as i64;
                rest /= base;
                self.grid_value(d)
            })
            .collect();
        PiecewiseConstantFn::on_uniform_grid(values)
    }

    /// Every member in index order. Fails with a resource error on families
    /// larger than [`MAX_ENUMERATED_MEMBERS`].
    pub fn members(&self) -> Result<Vec<PiecewiseConstantFn>> {
        match self.len() {
            Some(n) if n <= MAX_ENUMERATED_MEMBERS => (0..n).map(|i| self.member(i)).collect(),
            _ => Err(Error::Resource(format!(
                "family too large to enumerate (cap {MAX_ENUMERATED_MEMBERS})"
            ))),
        }
    }

    /// `∫ x` over each dyadic cell.
    fn cell_masses(&self, x: &PiecewiseConstantFn) -> Vec<f64> {
        let n = self.num_cells();
        let mut masses = vec![0.0; n];
        let index = cell_index_fn(n);
        for_each_overlap(x, &index, |w, v, i| masses[i as usize] += v * w);
        masses
    }

    /// The member minimizing `‖x − m‖_p`. The objective separates over dyadic
    /// cells, so each cell picks its own best grid value.
    pub fn nearest_member(&self, x: &PiecewiseConstantFn, e: Exponent) -> PiecewiseConstantFn {
        let n = self.num_cells();
        let mut pieces: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
        let index = cell_index_fn(n);
        for_each_overlap(x, &index, |w, v, i| pieces[i as usize].push((w, v)));
        let l = i64::from(self.value_levels);
        let values = pieces
            .iter()
            .map(|cell| {
                let cost = |v: f64| -> f64 {
                    cell.iter().map(|&(w, xv)| w * pow_abs(xv - v, e.p())).sum()
                };
                (0..=2 * l)
                    .map(|d| self.grid_value(d))
                    .map(|v| (cost(v), v))
                    .min_by(|a, b| a.0.total_cmp(&b.0))
                    .map(|(_, v)| v)
                    .unwrap()
            })
            .collect();
        PiecewiseConstantFn::on_uniform_grid(values).expect("grid values are finite")
    }
}

/// Step function whose value on dyadic cell `i` is `i`.
fn cell_index_fn(n: usize) -> PiecewiseConstantFn {
    PiecewiseConstantFn::on_uniform_grid((0..n).map(|i| i as f64).collect())
        .expect("finite cell indices")
}

/// `max_j |L_j(x)|` over the norming functionals of every nonzero member of
/// `fam`.
///
/// Computed exactly without enumerating the family. A member is described by
/// integer levels `u_i ∈ {0..L}` and signs; aligning signs with the cell masses
/// `a_i = ∫_{cell i} x` is optimal, leaving the ratio
/// `N(u) / D(u)^r` with `N = Σ|a_i| u_i^{p−1}`, `D = w Σ u_i^p`, `r = 1 − 1/p`.
/// Because `D ↦ D^r` is concave, a maximizer also maximizes the separable
/// `N − μ D` for some `μ > 0`, so it lies on the path traced by lowering `μ`
/// from infinity; that path raises one cell by one level at a time. Within a
/// block of simultaneous raises the ratio is quasi-convex in the added `D`, so
/// its maximum sits at a block endpoint, which the sweep also visits.
pub fn norm_via_sup(x: &PiecewiseConstantFn, fam: &DenseFamily, e: Exponent) -> Result<f64> {
    let p = e.p();
    let r = 1.0 - 1.0 / p;
    let n = fam.num_cells();
    let w = 1.0 / n as f64;
    let levels = fam.value_levels as usize;
    let g: Vec<f64> = (0..=levels).map(|l| pow_abs(l as f64, p - 1.0)).collect();
    let f: Vec<f64> = (0..=levels).map(|l| pow_abs(l as f64, p)).collect();

    let alphas: Vec<f64> = fam.cell_masses(x).into_iter().map(f64::abs).collect();
    let mut events: Vec<(f64, f64, usize, usize)> = Vec::new();
    for (i, &alpha) in alphas.iter().enumerate() {
        if alpha == 0.0 {
            continue;
        }
        for l in 0..levels {
            let mu = alpha * (g[l + 1] - g[l]) / (w * (f[l + 1] - f[l]));
            events.push((mu, alpha, i, l));
        }
    }
    if events.is_empty() {
        return Ok(0.0);
    }
    events.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(b.1.total_cmp(&a.1))
            .then(a.2.cmp(&b.2))
            .then(a.3.cmp(&b.3))
    });

    let h = fam.step();
    let (mut num, mut den) = (0.0, 0.0);
    let mut best = 0.0f64;
    for &(_, alpha, _, l) in &events {
        num += alpha * (g[l + 1] - g[l]);
        den += w * (f[l + 1] - f[l]);
        // Skip members whose norm is numerically zero.
        if h * pow_abs(den, 1.0 / p) > DEGENERATE_NORM {
            best = best.max(num / pow_abs(den, r));
        }
    }
    Ok(best)
}

/// `(|⟨1_(0,a) − 1_(0,b), y⟩|, ‖y‖_q·|a − b|^{1/p})`; the first never exceeds
/// the second.
pub fn weak_modulus_check(
    a: f64,
    b: f64,
    y: &PiecewiseConstantFn,
    e: Exponent,
) -> Result<(f64, f64)> {
    for (name, v) in [("a", a), ("b", b)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::domain(format!("{name} = {v} must lie in (0, 1)")));
        }
    }
    let diff = PiecewiseConstantFn::initial_indicator(a)?
        .sub(&PiecewiseConstantFn::initial_indicator(b)?);
    let lhs = pairing(&diff, y).abs();
    let bound = y.lp_norm(e.dual()) * pow_abs(a - b, 1.0 / e.p());
    Ok((lhs, bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpspace::conjugate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ind(a: f64, c: f64) -> PiecewiseConstantFn {
        PiecewiseConstantFn::indicator(a, c).unwrap()
    }

    /// Brute force over every member's norming functional.
    fn sup_by_enumeration(x: &PiecewiseConstantFn, fam: &DenseFamily, e: Exponent) -> f64 {
        fam.members()
            .unwrap()
            .iter()
            .filter(|m| m.lp_norm(e) > DEGENERATE_NORM)
            .map(|m| norming_functional(m, e).unwrap().apply(x).abs())
            .fold(0.0, f64::max)
    }

    fn random_step(rng: &mut ChaCha8Rng, max_cells: usize, bound: f64) -> PiecewiseConstantFn {
        let cells = rng.random_range(1..=max_cells);
        let mut cuts: Vec<f64> = (1..cells).map(|_| rng.random::<f64>()).collect();
        cuts.sort_by(f64::total_cmp);
        let mut bps = vec![0.0];
        bps.extend(cuts);
        bps.push(1.0);
        let vals = (0..cells).map(|_| rng.random_range(-bound..=bound)).collect();
        PiecewiseConstantFn::new(bps, vals).unwrap()
    }

    #[test]
    fn quarter_indicator_functional() {
        let e = conjugate(2.0).unwrap();
        let nf = norming_functional(&ind(0.0, 0.25), e).unwrap();
        assert!(nf.representer().approx_eq(&ind(0.0, 0.25).scale(2.0), 1e-14));
        assert!((nf.apply(nf.reference()) - 0.5).abs() < 1e-12);
        assert!((nf.representer().lp_norm(e.dual()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constants_are_self_norming() {
        for p in [1.5, 2.0, 3.0] {
            let e = conjugate(p).unwrap();
            for c in [1.0, -1.0] {
                let x = PiecewiseConstantFn::constant(c);
                let nf = norming_functional(&x, e).unwrap();
                assert_eq!(nf.representer(), &x);
                assert!((nf.apply(&x) - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_has_no_norming_functional() {
        let e = conjugate(2.0).unwrap();
        let err = norming_functional(&PiecewiseConstantFn::zero(), e).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
        let tiny = PiecewiseConstantFn::constant(1e-14);
        assert!(norming_functional(&tiny, e).is_err());
    }

    #[test]
    fn norming_invariants_on_random_functions() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for p in [1.5, 2.0, 3.0] {
            let e = conjugate(p).unwrap();
            for _ in 0..500 {
                let x = random_step(&mut rng, 32, 10.0);
                let nf = norming_functional(&x, e).unwrap();
                assert!((nf.apply(&x) - x.lp_norm(e)).abs() <= 1e-10);
                assert!((nf.representer().lp_norm(e.dual()) - 1.0).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn family_counts() {
        assert_eq!(dyadic_dense_family(1, 1, 1.0).unwrap().len(), Some(9));
        // 5^4 enumerated directly
        let fam = dyadic_dense_family(2, 2, 1.0).unwrap();
        assert_eq!(fam.members().unwrap().len(), 625);
        assert_eq!(fam.len(), Some(625));
        assert_eq!(dyadic_dense_family(8, 16, 1.0).unwrap().len(), None);
    }

    #[test]
    fn family_parameter_errors() {
        assert!(matches!(dyadic_dense_family(0, 1, 1.0), Err(Error::Domain(_))));
        assert!(matches!(dyadic_dense_family(1, 0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(dyadic_dense_family(1, 1, 0.0), Err(Error::Domain(_))));
        let err = dyadic_dense_family(30, 4, 1.0).unwrap_err();
        assert!(matches!(err, Error::Resource(ref m) if m.contains("smaller level")));
        assert!(matches!(
            dyadic_dense_family(8, 16, 1.0).unwrap().members(),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn family_serializes_as_parameters() {
        let fam = dyadic_dense_family(3, 2, 1.5).unwrap();
        let json = serde_json::to_string(&fam).unwrap();
        assert_eq!(json, r#"{"level":3,"value_levels":2,"bound":1.5}"#);
        assert_eq!(serde_json::from_str::<DenseFamily>(&json).unwrap(), fam);
        assert!(serde_json::from_str::<DenseFamily>(r#"{"level":0,"value_levels":2,"bound":1.5}"#).is_err());
    }

    #[test]
    fn members_respect_norm_bound() {
        let fam = dyadic_dense_family(2, 2, 1.0).unwrap();
        let e = conjugate(2.0).unwrap();
        for m in fam.members().unwrap() {
            assert!(m.lp_norm(e) <= fam.bound() + fam.density_radius());
        }
    }

    #[test]
    fn sup_matches_enumeration_on_small_families() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for (k, l) in [(1, 1), (1, 3), (2, 1), (2, 2), (3, 1)] {
            let fam = dyadic_dense_family(k, l, 1.0).unwrap();
            for p in [1.5, 2.0, 3.0] {
                let e = conjugate(p).unwrap();
                for _ in 0..20 {
                    let x = random_step(&mut rng, 6, 2.0);
                    let fast = norm_via_sup(&x, &fam, e).unwrap();
                    let slow = sup_by_enumeration(&x, &fam, e);
                    assert!((fast - slow).abs() <= 1e-12, "k={k} l={l} p={p}: {fast} vs {slow}");
                }
            }
        }
    }

    #[test]
    fn members_attain_their_own_norm() {
        let fam = dyadic_dense_family(2, 2, 1.0).unwrap();
        for p in [1.5, 2.0, 3.0] {
            let e = conjugate(p).unwrap();
            for m in fam.members().unwrap() {
                let s = norm_via_sup(&m, &fam, e).unwrap();
                assert!((s - m.lp_norm(e)).abs() <= 1e-10, "{m:?}");
            }
        }
    }

    #[test]
    fn sup_of_zero_is_zero() {
        let fam = dyadic_dense_family(3, 2, 1.0).unwrap();
        let e = conjugate(2.0).unwrap();
        assert_eq!(norm_via_sup(&PiecewiseConstantFn::zero(), &fam, e).unwrap(), 0.0);
    }

    #[test]
    fn off_grid_indicator_two_sided_bound() {
        let fam = dyadic_dense_family(8, 4, 1.0).unwrap();
        for p in [1.5, 2.0, 3.0] {
            let e = conjugate(p).unwrap();
            let x = ind(0.0, 0.3);
            let norm = x.lp_norm(e);
            // distance to the family via the nearest member, then the triangle inequality
            let dist = x.distance(&fam.nearest_member(&x, e), e);
            assert!(dist <= 2f64.powf(-8.0 / p));
            let s = norm_via_sup(&x, &fam, e).unwrap();
            assert!(s <= norm + 1e-10);
            assert!(s >= norm - 2.0 * dist, "p={p}: {s} vs {norm} - 2*{dist}");
        }
    }

    #[test]
    fn nearest_member_matches_enumeration() {
        let fam = dyadic_dense_family(2, 2, 1.0).unwrap();
        let members = fam.members().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let e = conjugate(2.0).unwrap();
        for _ in 0..20 {
            let x = random_step(&mut rng, 5, 1.0);
            let best = members.iter().map(|m| x.distance(m, e)).fold(f64::INFINITY, f64::min);
            let near = x.distance(&fam.nearest_member(&x, e), e);
            assert!((best - near).abs() < 1e-12);
        }
    }

    #[test]
    fn density_on_own_grid() {
        let fam = dyadic_dense_family(4, 3, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for p in [1.5, 2.0, 3.0] {
            let e = conjugate(p).unwrap();
            for _ in 0..200 {
                let vals = (0..fam.num_cells()).map(|_| rng.random_range(-2.0..=2.0)).collect();
                let x = PiecewiseConstantFn::on_uniform_grid(vals).unwrap();
                assert!(x.distance(&fam.nearest_member(&x, e), e) <= fam.density_radius());
            }
        }
    }

    #[test]
    fn weak_modulus_examples() {
        let e = conjugate(2.0).unwrap();
        let (lhs, bound) = weak_modulus_check(0.3, 0.3, &ind(0.1, 0.9), e).unwrap();
        assert_eq!((lhs, bound), (0.0, 0.0));

        let one = PiecewiseConstantFn::constant(1.0);
        let (lhs, bound) = weak_modulus_check(0.1, 0.9, &one, e).unwrap();
        assert!((lhs - 0.8).abs() < 1e-15);
        assert!((bound - 0.8f64.sqrt()).abs() < 1e-15);

        let (lhs, bound) = weak_modulus_check(0.25, 0.75, &ind(0.0, 0.5), e).unwrap();
        assert!((lhs - 0.25).abs() < 1e-15);
        assert!((bound - 0.5).abs() < 1e-15);
    }

    #[test]
    fn weak_modulus_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in [1.5, 2.0, 3.0] {
            let e = conjugate(p).unwrap();
            for _ in 0..10 {
                let y = random_step(&mut rng, 16, 10.0);
                for i in 1..=50 {
                    for j in 1..=50 {
                        let (a, b) = (i as f64 / 51.0, j as f64 / 51.0);
                        let (lhs, bound) = weak_modulus_check(a, b, &y, e).unwrap();
                        assert!(lhs <= bound + 1e-12);
                    }
                }
            }
        }
    }
}

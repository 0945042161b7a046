//! `L^p(0,1)`-valued random variables on `Ω = (0, 1)` with Lebesgue measure.
//!
//! Three kinds are supported: the indicator process `χ(ω) = 1_(0,ω)`, simple
//! random variables (finitely many step functions on a partition of `Ω` into
//! interval unions), and finite linear combinations of these. Every variable
//! reduces to an [`AffineForm`] `c·χ + S` with `S` simple, which is what the
//! exact preimage computation works on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lpspace::{linear_combine, Exponent, IntervalUnion, PiecewiseConstantFn, MERGE_TOL};
use crate::numeric::pow_abs;

/// Levels above this are refused by [`dyadic_approx`] to bound memory.
pub const MAX_MATERIALIZED_LEVEL: u32 = 20;
/// Upper end of the admissible dyadic levels.
pub const MAX_DYADIC_LEVEL: u32 = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimpleCell {
    pub set: IntervalUnion,
    pub value: PiecewiseConstantFn,
}

/// Finitely many step functions attached to the pieces of a partition of
/// `(0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SimpleRepr", into = "SimpleRepr")]
pub struct SimpleLpRV {
    cells: Vec<SimpleCell>,
    /// `(a, c, cell)` for every interval, sorted by `a`.
    lookup: Vec<(f64, f64, usize)>,
}

#[derive(Serialize, Deserialize)]
struct SimpleRepr {
    cells: Vec<SimpleCell>,
}

impl TryFrom<SimpleRepr> for SimpleLpRV {
    type Error = Error;

    fn try_from(repr: SimpleRepr) -> Result<Self> {
        SimpleLpRV::from_cells(repr.cells).map_err(|e| Error::invalid(e.to_string()))
    }
}

impl From<SimpleLpRV> for SimpleRepr {
    fn from(s: SimpleLpRV) -> Self {
        SimpleRepr { cells: s.cells }
    }
}

impl SimpleLpRV {
    /// Checks that the sets are pairwise disjoint with total measure 1
    /// (both to `1e-12`). Cells with empty sets are dropped.
    pub fn new(cells: Vec<(IntervalUnion, PiecewiseConstantFn)>) -> Result<Self> {
        Self::from_cells(
            cells
                .into_iter()
                .map(|(set, value)| SimpleCell { set, value })
                .collect(),
        )
    }

    pub fn from_cells(cells: Vec<SimpleCell>) -> Result<Self> {
        let cells: Vec<SimpleCell> = cells.into_iter().filter(|c| !c.set.is_empty()).collect();
        let mut lookup: Vec<(f64, f64, usize)> = cells
            .iter()
            .enumerate()
            .flat_map(|(k, c)| c.set.intervals().iter().map(move |&(a, b)| (a, b, k)))
            .collect();
        lookup.sort_by(|x, y| x.0.total_cmp(&y.0));
        for w in lookup.windows(2) {
            if w[1].0 < w[0].1 - MERGE_TOL {
                return Err(Error::domain(format!(
                    "cells {} and {} overlap on ({}, {}]",
                    w[0].2,
                    w[1].2,
                    w[1].0,
                    w[0].1.min(w[1].1)
                )));
            }
        }
        let total: f64 = cells.iter().map(|c| c.set.measure()).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!(
                "cell measures sum to {total}, not 1"
            )));
        }
        Ok(SimpleLpRV { cells, lookup })
    }

    /// The constant variable `ω ↦ f`.
    pub fn constant(f: PiecewiseConstantFn) -> Self {
        Self::new(vec![(IntervalUnion::full(), f)]).expect("full interval has measure 1")
    }

    pub fn cells(&self) -> &[SimpleCell] {
        &self.cells
    }

    pub fn cell_index(&self, omega: f64) -> Option<usize> {
        let i = self.lookup.partition_point(|&(_, c, _)| c < omega);
        self.lookup
            .get(i)
            .filter(|&&(a, _, _)| a < omega)
            .map(|&(_, _, k)| k)
    }

    pub fn value_at(&self, omega: f64) -> Result<&PiecewiseConstantFn> {
        check_omega(omega)?;
        self.cell_index(omega)
            .map(|k| &self.cells[k].value)
            .ok_or_else(|| Error::Integrity(format!("ω = {omega} lies in no cell")))
    }

    /// Common refinement of `Σ coef_j · S_j` as a single simple variable.
    pub fn combine(terms: &[(f64, &SimpleLpRV)]) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::domain("cannot combine an empty list of simple variables"));
        }
        let mut cuts: Vec<f64> = terms
            .iter()
            .flat_map(|(_, s)| s.lookup.iter().flat_map(|&(a, c, _)| [a, c]))
            .chain([0.0, 1.0])
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|b, a| *b - *a < MERGE_TOL);

        // Group the elementary atoms by the tuple of cells they fall into.
        let mut keys: Vec<Vec<usize>> = Vec::new();
        let mut pieces: Vec<Vec<(f64, f64)>> = Vec::new();
        let mut by_key = std::collections::HashMap::new();
        for w in cuts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let key: Option<Vec<usize>> = terms.iter().map(|(_, s)| s.cell_index(mid)).collect();
            let Some(key) = key else { continue };
            let slot = *by_key.entry(key.clone()).or_insert_with(|| {
                keys.push(key);
                pieces.push(Vec::new());
                keys.len() - 1
            });
            pieces[slot].push((w[0], w[1]));
        }
        let coeffs: Vec<f64> = terms.iter().map(|(c, _)| *c).collect();
        let cells = keys
            .into_iter()
            .zip(pieces)
            .map(|(key, pieces)| {
                let fs: Vec<&PiecewiseConstantFn> = key
                    .iter()
                    .zip(terms)
                    .map(|(&k, (_, s))| &s.cells[k].value)
                    .collect();
                Ok((IntervalUnion::new(pieces)?, linear_combine(&coeffs, &fs)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(cells)
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if omega > 0.0 && omega < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("ω = {omega} must lie in (0, 1)")))
    }
}

/// An evaluable map `ω ↦ ξ(ω) ∈ L^p(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub enum LpRandomVariable {
    /// `χ(ω) = 1_(0,ω)`.
    IndicatorProcess,
    Simple(SimpleLpRV),
    /// `Σ coef · term`.
    Composite(Vec<(f64, LpRandomVariable)>),
}

/// `c·χ + base`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineForm {
    pub chi_coef: f64,
    pub base: SimpleLpRV,
}

impl LpRandomVariable {
    pub fn kind(&self) -> &'static str {
        match self {
            LpRandomVariable::IndicatorProcess => "indicator_process",
            LpRandomVariable::Simple(_) => "simple",
            LpRandomVariable::Composite(_) => "composite",
        }
    }

    pub fn evaluate(&self, omega: f64) -> Result<PiecewiseConstantFn> {
        check_omega(omega)?;
        match self {
            LpRandomVariable::IndicatorProcess => PiecewiseConstantFn::initial_indicator(omega),
            LpRandomVariable::Simple(s) => s.value_at(omega).cloned(),
            LpRandomVariable::Composite(terms) => {
                if terms.is_empty() {
                    return Ok(PiecewiseConstantFn::zero());
                }
                let values = terms
                    .iter()
                    .map(|(_, t)| t.evaluate(omega))
                    .collect::<Result<Vec<_>>>()?;
                let coeffs: Vec<f64> = terms.iter().map(|(c, _)| *c).collect();
                let refs: Vec<&PiecewiseConstantFn> = values.iter().collect();
                linear_combine(&coeffs, &refs)
            }
        }
    }

    /// Reduces to `c·χ + S`.
    pub fn affine_form(&self) -> Result<AffineForm> {
        let mut chi_coef = 0.0;
        let mut simples: Vec<(f64, &SimpleLpRV)> = Vec::new();
        self.collect_terms(1.0, &mut chi_coef, &mut simples);
        let base = match simples.as_slice() {
            [] => SimpleLpRV::constant(PiecewiseConstantFn::zero()),
            [(c, s)] if *c == 1.0 => (*s).clone(),
            _ => SimpleLpRV::combine(&simples)?,
        };
        Ok(AffineForm { chi_coef, base })
    }

    fn collect_terms<'a>(
        &'a self,
        scale: f64,
        chi_coef: &mut f64,
        simples: &mut Vec<(f64, &'a SimpleLpRV)>,
    ) {
        match self {
            LpRandomVariable::IndicatorProcess => *chi_coef += scale,
            LpRandomVariable::Simple(s) => simples.push((scale, s)),
            LpRandomVariable::Composite(terms) => {
                for (c, t) in terms {
                    t.collect_terms(scale * c, chi_coef, simples);
                }
            }
        }
    }
}

impl From<SimpleLpRV> for LpRandomVariable {
    fn from(s: SimpleLpRV) -> Self {
        LpRandomVariable::Simple(s)
    }
}

/// The dyadic approximation `χ_k`: on `((j−1)/2^k, j/2^k]` it takes the value
/// `1_(0, j/2^k)`.
pub fn dyadic_approx(k: u32) -> Result<SimpleLpRV> {
    if !(1..=MAX_DYADIC_LEVEL).contains(&k) {
        return Err(Error::domain(format!(
            "dyadic level {k} outside 1..={MAX_DYADIC_LEVEL}"
        )));
    }
    if k > MAX_MATERIALIZED_LEVEL {
        return Err(Error::Resource(format!(
            "dyadic level {k} would materialize 2^{k} cells; the limit is level {MAX_MATERIALIZED_LEVEL}"
        )));
    }
    let n = 1u64 << k;
    let scale = 1.0 / n as f64;
    let cells = (1..=n)
        .map(|j| {
            let (a, c) = ((j - 1) as f64 * scale, j as f64 * scale);
            Ok((
                IntervalUnion::interval(a, c)?,
                PiecewiseConstantFn::initial_indicator(c)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    SimpleLpRV::new(cells)
}

/// `sup_ω ‖χ(ω) − approx(ω)‖_p`, computed exactly.
///
/// On each interval of a cell the map `ω ↦ ‖1_(0,ω) − v‖_p^p` is affine
/// between breakpoints of `v`, so the supremum over the interval is the
/// largest one-sided limit at its endpoints or at an interior breakpoint. The
/// value returned may therefore be a supremum that is never attained.
pub fn sup_error_vs_indicator(approx: &SimpleLpRV, e: Exponent) -> Result<f64> {
    let mut worst = 0.0f64;
    for cell in approx.cells() {
        for &(a, c) in cell.set.intervals() {
            let interior = cell
                .value
                .breakpoints()
                .iter()
                .copied()
                .filter(|&b| b > a && b < c);
            for w in std::iter::once(a).chain(interior).chain(std::iter::once(c)) {
                let g = PiecewiseConstantFn::initial_indicator(w)?.distance_pow(&cell.value, e);
                worst = worst.max(g);
            }
        }
    }
    Ok(pow_abs(worst, 1.0 / e.p()))
}

/// `{ω : ‖c·1_(0,ω) − z‖_p < radius}`.
///
/// `g(ω) = ∫_0^ω |c − z|^p + ∫_ω^1 |z|^p` is affine on every cell of `z`, so
/// the strict sublevel set is found by one linear root per cell.
fn indicator_sublevel(
    c: f64,
    z: &PiecewiseConstantFn,
    radius: f64,
    e: Exponent,
) -> IntervalUnion {
    let p = e.p();
    let level = pow_abs(radius, p);
    let mut g = z.lp_norm_pow(e);
    let mut pieces = Vec::new();
    for (b0, b1, v) in z.cells() {
        let slope = pow_abs(c - v, p) - pow_abs(v, p);
        let g1 = g + slope * (b1 - b0);
        if slope == 0.0 {
            if g < level {
                pieces.push((b0, b1));
            }
        } else {
            let root = b0 + (level - g) / slope;
            if slope > 0.0 {
                if root > b0 {
                    pieces.push((b0, root.min(b1)));
                }
            } else if root < b1 {
                pieces.push((root.max(b0), b1));
            }
        }
        g = g1;
    }
    IntervalUnion::new(pieces).expect("pieces lie inside cells of z")
}

/// The exact preimage `{ω : ‖ξ(ω) − center‖_p < radius}`.
pub fn ball_preimage(
    xi: &LpRandomVariable,
    center: &PiecewiseConstantFn,
    radius: f64,
    e: Exponent,
) -> Result<IntervalUnion> {
    if radius.is_nan() || radius <= 0.0 {
        return Err(Error::domain(format!("radius {radius} must be positive")));
    }
    let form = xi.affine_form()?;
    let mut out = IntervalUnion::empty();
    for cell in form.base.cells() {
        let hit = if form.chi_coef == 0.0 {
            if cell.value.distance(center, e) < radius {
                cell.set.clone()
            } else {
                continue;
            }
        } else {
            let z = center.sub(&cell.value);
            cell.set
                .intersection(&indicator_sublevel(form.chi_coef, &z, radius, e))
        };
        out = out.union(&hit);
    }
    Ok(out)
}

/// `{ω : ‖approx(ω) − ξ(ω)‖_p ≥ radius}`, computed exactly.
pub fn exceedance_set(
    approx: &SimpleLpRV,
    xi: &LpRandomVariable,
    radius: f64,
    e: Exponent,
) -> Result<IntervalUnion> {
    let mut out = IntervalUnion::empty();
    for cell in approx.cells() {
        let close = ball_preimage(xi, &cell.value, radius, e)?;
        out = out.union(&cell.set.difference(&close));
    }
    Ok(out)
}

/// Output of [`pettis_disjointify`].
#[derive(Debug, Clone, PartialEq)]
pub struct PettisApproximation {
    /// The truncated simple variable `ξ̃_k`.
    pub approximation: SimpleLpRV,
    /// `N_k`: members past this index are folded into the first one.
    pub truncation_index: usize,
    /// Measure reassigned to the first member (truncated tail plus any part
    /// of `Ω` no ball covers).
    pub tail_measure: f64,
    pub uncovered_measure: f64,
}

/// Simple approximation of `ξ` from an ordered family of centers.
///
/// `E_j = ξ^{-1}(B(X_j, 2^{-k}))`, `A_1 = E_1`, `A_j = E_j \ (A_1 ∪ … ∪ A_{j−1})`.
/// The smallest `N` whose tail `Σ_{j>N} λ(A_j)` (plus uncovered measure) is
/// below `2^{-k}` is kept, and the tail is reassigned to `X_1`.
pub fn pettis_disjointify(
    xi: &LpRandomVariable,
    family: &[PiecewiseConstantFn],
    k: u32,
    e: Exponent,
) -> Result<PettisApproximation> {
    if family.is_empty() {
        return Err(Error::domain("family of centers must be nonempty"));
    }
    if !(1..=52).contains(&k) {
        return Err(Error::domain(format!("k = {k} outside 1..=52")));
    }
    let radius = (-(k as f64)).exp2();

    let mut covered = IntervalUnion::empty();
    let mut parts = Vec::with_capacity(family.len());
    for x in family {
        let a = ball_preimage(xi, x, radius, e)?.difference(&covered);
        covered = covered.union(&a);
        parts.push(a);
    }
    let uncovered = covered.complement();
    let uncovered_measure = uncovered.measure();
    if uncovered_measure >= radius {
        return Err(Error::Coverage {
            uncovered: uncovered_measure,
            threshold: radius,
        });
    }

    // tail[j] = Σ_{i ≥ j} λ(A_i) + uncovered
    let mut tail = vec![uncovered_measure; parts.len() + 1];
    for j in (0..parts.len()).rev() {
        tail[j] = tail[j + 1] + parts[j].measure();
    }
    let n_k = (1..=parts.len())
        .find(|&n| tail[n] < radius)
        .expect("the full family leaves only the uncovered part");

    let mut first = parts[0].union(&uncovered);
    for a in &parts[n_k..] {
        first = first.union(a);
    }
    let mut cells = vec![(first, family[0].clone())];
    cells.extend(
        parts
            .into_iter()
            .zip(family)
            .take(n_k)
            .skip(1)
            .map(|(a, x)| (a, x.clone())),
    );
    Ok(PettisApproximation {
        approximation: SimpleLpRV::new(cells)?,
        truncation_index: n_k,
        tail_measure: tail[n_k],
        uncovered_measure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpspace::conjugate;

    fn ind(a: f64, c: f64) -> PiecewiseConstantFn {
        PiecewiseConstantFn::indicator(a, c).unwrap()
    }

    fn iu(a: f64, c: f64) -> IntervalUnion {
        IntervalUnion::interval(a, c).unwrap()
    }

    #[test]
    fn dyadic_sup_error_equals_rate() {
        for k in 1..=8 {
            let approx = dyadic_approx(k).unwrap();
            for p in [1.5, 2.0, 3.0] {
                let e = conjugate(p).unwrap();
                let sup = sup_error_vs_indicator(&approx, e).unwrap();
                let rate = (-f64::from(k) / p).exp2();
                assert!((sup - rate).abs() <= 1e-12 * rate, "k={k} p={p}: {sup} vs {rate}");
            }
        }
    }

    #[test]
    fn sup_error_sees_interior_breakpoints() {
        // a constant value 1_(0,1/2) on the whole of (0,1]: distance^p = |ω − 1/2|
        let approx = SimpleLpRV::constant(ind(0.0, 0.5));
        let e = conjugate(2.0).unwrap();
        let sup = sup_error_vs_indicator(&approx, e).unwrap();
        assert!((sup - 0.5f64.sqrt()).abs() < 1e-15);
        let constant_mid = SimpleLpRV::constant(ind(0.25, 0.75).scale(0.5));
        let s = sup_error_vs_indicator(&constant_mid, e).unwrap();
        let brute = (0..=1000)
            .map(|i| {
                let w = f64::from(i) / 1000.0;
                ind(0.0, w).distance(&constant_mid.cells()[0].value, e)
            })
            .fold(0.0, f64::max);
        assert!(s >= brute - 1e-12 && s <= brute + 1e-3);
    }

    #[test]
    fn chi_at_point_three() {
        let f = LpRandomVariable::IndicatorProcess.evaluate(0.3).unwrap();
        assert_eq!(f.breakpoints(), &[0.0, 0.3, 1.0]);
        assert_eq!(f.values(), &[1.0, 0.0]);
    }

    #[test]
    fn evaluate_rejects_outside_omega() {
        for w in [0.0, 1.0, -0.5, 2.0, f64::NAN] {
            assert!(matches!(
                LpRandomVariable::IndicatorProcess.evaluate(w),
                Err(Error::Domain(_))
            ));
        }
    }

    #[test]
    fn constant_simple_variable() {
        let f = ind(0.2, 0.6);
        let xi = LpRandomVariable::Simple(SimpleLpRV::constant(f.clone()));
        for w in [0.01, 0.5, 0.99] {
            assert_eq!(xi.evaluate(w).unwrap(), f);
        }
    }

    #[test]
    fn simple_rejects_bad_partitions() {
        let f = PiecewiseConstantFn::zero();
        let overlap = SimpleLpRV::new(vec![(iu(0.0, 0.6), f.clone()), (iu(0.5, 1.0), f.clone())]);
        assert!(matches!(overlap, Err(Error::Domain(ref m)) if m.contains("overlap")));
        let short = SimpleLpRV::new(vec![(iu(0.0, 0.5), f.clone())]);
        assert!(matches!(short, Err(Error::Domain(ref m)) if m.contains("sum")));
    }

    #[test]
    fn dyadic_level_one_at_point_six() {
        let xi = LpRandomVariable::Simple(dyadic_approx(1).unwrap());
        assert_eq!(xi.evaluate(0.6).unwrap(), PiecewiseConstantFn::constant(1.0));
        assert_eq!(xi.evaluate(0.5).unwrap(), ind(0.0, 0.5));
    }

    #[test]
    fn dyadic_level_two_values() {
        let s = dyadic_approx(2).unwrap();
        assert_eq!(s.cells().len(), 4);
        let expect = [ind(0.0, 0.25), ind(0.0, 0.5), ind(0.0, 0.75), PiecewiseConstantFn::constant(1.0)];
        for (cell, want) in s.cells().iter().zip(&expect) {
            assert_eq!(&cell.value, want);
        }
    }

    #[test]
    fn dyadic_exact_at_right_endpoints_and_bounded() {
        let e = conjugate(2.0).unwrap();
        let k = 3;
        let s = LpRandomVariable::Simple(dyadic_approx(k).unwrap());
        let chi = LpRandomVariable::IndicatorProcess;
        for j in 1..8 {
            let w = j as f64 / 8.0;
            let err = s.evaluate(w).unwrap().distance(&chi.evaluate(w).unwrap(), e);
            assert_eq!(err, 0.0);
        }
        let bound = 2f64.powf(-(k as f64) / 2.0);
        let mut worst = 0.0f64;
        for i in 1..10_000 {
            let w = i as f64 / 10_000.0;
            let err = s.evaluate(w).unwrap().distance(&chi.evaluate(w).unwrap(), e);
            worst = worst.max(err);
        }
        assert!(worst <= bound + 1e-12);
        assert!(worst > 0.9 * bound);
    }

    #[test]
    fn dyadic_level_range() {
        assert!(matches!(dyadic_approx(0), Err(Error::Domain(_))));
        assert!(matches!(dyadic_approx(31), Err(Error::Domain(_))));
        assert!(matches!(dyadic_approx(25), Err(Error::Resource(_))));
    }

    #[test]
    fn preimage_of_ball_around_zero() {
        for p in [1.5, 2.0, 3.0] {
            let e = conjugate(p).unwrap();
            for eps in [0.1, 0.5, 0.9] {
                let pre = ball_preimage(
                    &LpRandomVariable::IndicatorProcess,
                    &PiecewiseConstantFn::zero(),
                    eps,
                    e,
                )
                .unwrap();
                assert_eq!(pre.intervals().len(), 1);
                let (a, c) = pre.intervals()[0];
                assert_eq!(a, 0.0);
                assert!((c - eps.powf(p)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn preimage_of_ball_around_one() {
        let e = conjugate(2.0).unwrap();
        let pre = ball_preimage(
            &LpRandomVariable::IndicatorProcess,
            &PiecewiseConstantFn::constant(1.0),
            0.5,
            e,
        )
        .unwrap();
        assert_eq!(pre.intervals(), &[(0.75, 1.0)]);
    }

    #[test]
    fn preimage_small_radius() {
        let e = conjugate(2.0).unwrap();
        let pre = ball_preimage(
            &LpRandomVariable::IndicatorProcess,
            &PiecewiseConstantFn::zero(),
            1e-4,
            e,
        )
        .unwrap();
        assert_eq!(pre.intervals().len(), 1);
        assert!((pre.intervals()[0].1 - 1e-8).abs() < 1e-20);
    }

    #[test]
    fn preimage_rejects_nonpositive_radius() {
        let e = conjugate(2.0).unwrap();
        let chi = LpRandomVariable::IndicatorProcess;
        let z = PiecewiseConstantFn::zero();
        assert!(ball_preimage(&chi, &z, 0.0, e).is_err());
        assert!(ball_preimage(&chi, &z, -1.0, e).is_err());
        assert!(ball_preimage(&chi, &z, f64::NAN, e).is_err());
    }

    #[test]
    fn simple_preimage_takes_whole_cells() {
        let e = conjugate(2.0).unwrap();
        let s = dyadic_approx(2).unwrap();
        // ‖1_(0,j/4)‖_2 = sqrt(j/4) < 0.8 for j = 1, 2
        let pre = ball_preimage(&s.into(), &PiecewiseConstantFn::zero(), 0.8, e).unwrap();
        assert_eq!(pre.intervals(), &[(0.0, 0.5)]);
    }

    #[test]
    fn composite_reduces_to_affine_form() {
        let s = dyadic_approx(1).unwrap();
        let xi = LpRandomVariable::Composite(vec![
            (2.0, LpRandomVariable::IndicatorProcess),
            (-1.0, LpRandomVariable::Simple(s.clone())),
            (0.5, LpRandomVariable::Composite(vec![(2.0, LpRandomVariable::Simple(s))])),
        ]);
        let form = xi.affine_form().unwrap();
        assert_eq!(form.chi_coef, 2.0);
        for w in [0.1, 0.4, 0.7, 0.95] {
            let direct = xi.evaluate(w).unwrap();
            let via_form = PiecewiseConstantFn::initial_indicator(w)
                .unwrap()
                .scale(2.0)
                .add(form.base.value_at(w).unwrap());
            assert!(direct.approx_eq(&via_form, 1e-14), "ω = {w}");
        }
    }

    #[test]
    fn composite_preimage_matches_pointwise() {
        let e = conjugate(1.5).unwrap();
        let xi = LpRandomVariable::Composite(vec![
            (-0.7, LpRandomVariable::IndicatorProcess),
            (1.0, LpRandomVariable::Simple(dyadic_approx(2).unwrap())),
        ]);
        let center = PiecewiseConstantFn::new(vec![0.0, 0.3, 0.8, 1.0], vec![0.2, -0.1, 0.5]).unwrap();
        let radius = 0.45;
        let pre = ball_preimage(&xi, &center, radius, e).unwrap();
        let level = radius.powf(1.5);
        for i in 1..2000 {
            let w = i as f64 / 2000.0;
            let g = xi.evaluate(w).unwrap().distance_pow(&center, e);
            if (g - level).abs() < 1e-10 {
                continue;
            }
            assert_eq!(pre.contains(w), g < level, "ω = {w}");
        }
    }

    #[test]
    fn disjointify_against_matched_dyadic_family() {
        let e = conjugate(2.0).unwrap();
        let chi = LpRandomVariable::IndicatorProcess;
        for k in 1..=4u32 {
            let m = 2 * k + 1;
            let n = 1usize << m;
            let family: Vec<_> = (1..=n)
                .map(|j| PiecewiseConstantFn::initial_indicator(j as f64 / n as f64).unwrap())
                .collect();
            let out = pettis_disjointify(&chi, &family, k, e).unwrap();
            assert_eq!(out.uncovered_measure, 0.0);
            let r = (-(k as f64)).exp2();
            let bad = exceedance_set(&out.approximation, &chi, r, e).unwrap();
            assert!(bad.measure() < r);
            assert!(out.tail_measure < r);
            let total: f64 = out.approximation.cells().iter().map(|c| c.set.measure()).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn disjointify_simple_with_member_values_is_identity() {
        let e = conjugate(2.0).unwrap();
        let s = dyadic_approx(3).unwrap();
        let family: Vec<_> = s.cells().iter().map(|c| c.value.clone()).collect();
        let xi = LpRandomVariable::Simple(s.clone());
        // Distinct members are sqrt(1/8) apart and every cell has measure 1/8,
        // so from k = 3 on no cell shares a ball or falls into the tail.
        for k in 3..=5 {
            let out = pettis_disjointify(&xi, &family, k, e).unwrap();
            for i in 1..1000 {
                let w = i as f64 / 1000.0;
                assert_eq!(out.approximation.value_at(w).unwrap(), s.value_at(w).unwrap());
            }
        }
        // Coarser k: first index wins and the tail folds into X_1, but the
        // error contract still holds.
        for k in 1..=2 {
            let r = (-(k as f64)).exp2();
            let out = pettis_disjointify(&xi, &family, k, e).unwrap();
            if k == 1 {
                assert_eq!(out.approximation.value_at(0.2).unwrap(), &family[0]);
            }
            let bad = exceedance_set(&out.approximation, &xi, r, e).unwrap();
            assert!(bad.measure() < r);
        }
    }

    #[test]
    fn disjointify_zero_family_fails_coverage() {
        let e = conjugate(2.0).unwrap();
        let err = pettis_disjointify(
            &LpRandomVariable::IndicatorProcess,
            &[PiecewiseConstantFn::zero()],
            1,
            e,
        )
        .unwrap_err();
        match err {
            Error::Coverage { uncovered, threshold } => {
                assert!((uncovered - 0.75).abs() < 1e-15);
                assert_eq!(threshold, 0.5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn disjointify_truncates_tail_to_first_member() {
        // Centers beyond the first few each catch a little mass; the tail rule
        // folds them into X_1.
        let e = conjugate(2.0).unwrap();
        let chi = LpRandomVariable::IndicatorProcess;
        let family: Vec<_> = (1..=64)
            .map(|j| PiecewiseConstantFn::initial_indicator(j as f64 / 64.0).unwrap())
            .collect();
        let out = pettis_disjointify(&chi, &family, 2, e).unwrap();
        assert!(out.truncation_index <= 64);
        assert!(out.tail_measure < 0.25);
        let first = &out.approximation.cells()[0];
        assert_eq!(first.value, family[0]);
    }

    #[test]
    fn simple_json_round_trip_is_bit_stable() {
        let s = dyadic_approx(3).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.starts_with(r#"{"cells":[{"set":[[0.0,0.125]],"value":{"breakpoints""#));
        let back: SimpleLpRV = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }
}

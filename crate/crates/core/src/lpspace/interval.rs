use serde::{Deserialize, Serialize};

use super::step::MERGE_TOL;
use crate::error::{Error, Result};

/// A finite union of disjoint half-open intervals `(a, c] ⊂ (0, 1]`, kept
/// sorted with touching pieces merged and sub-tolerance pieces dropped.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct IntervalUnion {
    intervals: Vec<(f64, f64)>,
}

impl TryFrom<Vec<[f64; 2]>> for IntervalUnion {
    type Error = Error;

    fn try_from(raw: Vec<[f64; 2]>) -> Result<Self> {
        IntervalUnion::new(raw.into_iter().map(|[a, c]| (a, c)))
            .map_err(|e| Error::invalid(e.to_string()))
    }
}

impl From<IntervalUnion> for Vec<[f64; 2]> {
    fn from(u: IntervalUnion) -> Self {
        u.intervals.into_iter().map(|(a, c)| [a, c]).collect()
    }
}

impl IntervalUnion {
    /// Builds a union from arbitrary (possibly overlapping, unsorted) pieces.
    pub fn new(pieces: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut raw = Vec::new();
        for (a, c) in pieces {
            if !(a.is_finite() && c.is_finite()) || a < 0.0 || c > 1.0 || a > c {
                return Err(Error::domain(format!(
                    "interval ({a}, {c}] is not a subinterval of (0, 1]"
                )));
            }
            raw.push((a, c));
        }
        Ok(Self::normalized(raw))
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// `(0, 1]`.
    pub fn full() -> Self {
        IntervalUnion {
            intervals: vec![(0.0, 1.0)],
        }
    }

    pub fn interval(a: f64, c: f64) -> Result<Self> {
        Self::new([(a, c)])
    }

    fn normalized(mut raw: Vec<(f64, f64)>) -> Self {
        raw.retain(|(a, c)| c - a >= MERGE_TOL);
        raw.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (a, c) in raw {
            match out.last_mut() {
                Some(last) if a <= last.1 + MERGE_TOL => last.1 = last.1.max(c),
                _ => out.push((a, c)),
            }
        }
        IntervalUnion { intervals: out }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Lebesgue measure.
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, c)| c - a).sum()
    }

    pub fn contains(&self, t: f64) -> bool {
        let i = self.intervals.partition_point(|&(_, c)| c < t);
        self.intervals.get(i).is_some_and(|&(a, _)| a < t)
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut raw = self.intervals.clone();
        raw.extend_from_slice(&other.intervals);
        Self::normalized(raw)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let (xs, ys) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < xs.len() && j < ys.len() {
            let lo = xs[i].0.max(ys[j].0);
            let hi = xs[i].1.min(ys[j].1);
            if hi > lo {
                out.push((lo, hi));
            }
            if xs[i].1 < ys[j].1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self::normalized(out)
    }

    /// Complement relative to `(0, 1]`.
    pub fn complement(&self) -> Self {
        let mut out = Vec::with_capacity(self.intervals.len() + 1);
        let mut cursor = 0.0;
        for &(a, c) in &self.intervals {
            if a > cursor {
                out.push((cursor, a));
            }
            cursor = c;
        }
        if cursor < 1.0 {
            out.push((cursor, 1.0));
        }
        Self::normalized(out)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.intersection(&other.complement())
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.intersection(other).is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iu(pieces: &[(f64, f64)]) -> IntervalUnion {
        IntervalUnion::new(pieces.iter().copied()).unwrap()
    }

    #[test]
    fn merges_touching_and_overlapping() {
        let u = iu(&[(0.5, 0.7), (0.0, 0.25), (0.25, 0.4), (0.6, 0.9)]);
        assert_eq!(u.intervals(), &[(0.0, 0.4), (0.5, 0.9)]);
        assert!((u.measure() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn half_open_membership() {
        let u = iu(&[(0.2, 0.4)]);
        assert!(!u.contains(0.2));
        assert!(u.contains(0.4));
        assert!(u.contains(0.3));
        assert!(!u.contains(0.41));
        assert!(!IntervalUnion::empty().contains(0.5));
    }

    #[test]
    fn complement_and_difference() {
        let u = iu(&[(0.1, 0.2), (0.5, 1.0)]);
        assert_eq!(u.complement().intervals(), &[(0.0, 0.1), (0.2, 0.5)]);
        assert_eq!(IntervalUnion::full().complement(), IntervalUnion::empty());
        let d = IntervalUnion::full().difference(&u);
        assert_eq!(d, u.complement());
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(IntervalUnion::new([(-0.1, 0.5)]).is_err());
        assert!(IntervalUnion::new([(0.6, 0.5)]).is_err());
        assert!(IntervalUnion::new([(0.0, 1.5)]).is_err());
        assert!(serde_json::from_str::<IntervalUnion>("[[0.2,0.1]]").is_err());
    }

    fn arb_union() -> impl Strategy<Value = IntervalUnion> {
        prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 0..8).prop_map(|v| {
            IntervalUnion::new(v.into_iter().map(|(a, b)| (a.min(b), a.max(b)))).unwrap()
        })
    }

    proptest! {
        #[test]
        fn inclusion_exclusion(a in arb_union(), b in arb_union()) {
            let lhs = a.union(&b).measure() + a.intersection(&b).measure();
            prop_assert!((lhs - a.measure() - b.measure()).abs() < 1e-10);
        }

        #[test]
        fn complement_partitions_unit_interval(a in arb_union()) {
            let c = a.complement();
            prop_assert!(a.is_disjoint(&c));
            prop_assert!((a.measure() + c.measure() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn membership_agrees_with_algebra(a in arb_union(), b in arb_union(), t in 0.0f64..1.0) {
            let near_edge = a.intervals().iter().chain(b.intervals())
                .any(|&(x, y)| (t - x).abs() < 1e-9 || (t - y).abs() < 1e-9);
            prop_assume!(!near_edge);
            prop_assert_eq!(a.union(&b).contains(t), a.contains(t) || b.contains(t));
            prop_assert_eq!(a.intersection(&b).contains(t), a.contains(t) && b.contains(t));
            prop_assert_eq!(a.difference(&b).contains(t), a.contains(t) && !b.contains(t));
        }
    }
}

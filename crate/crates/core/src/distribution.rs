//! Pushforward probabilities `P(ξ ∈ O)` for events `O` built from open
//! `L^p` balls by finite union, intersection and complement.

use std::fmt::Write as _;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lpspace::{Exponent, IntervalUnion, PiecewiseConstantFn};
use crate::rv::{ball_preimage, LpRandomVariable};

/// Smallest Monte Carlo sample size accepted.
pub const MIN_SAMPLES: usize = 100;

/// Samples per deterministic chunk of the Monte Carlo loop.
const CHUNK: usize = 4096;

/// The open ball `{Y : ‖Y − center‖_p < radius}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallEvent {
    pub center: PiecewiseConstantFn,
    pub radius: f64,
    pub exponent: Exponent,
}

impl BallEvent {
    pub fn new(center: PiecewiseConstantFn, radius: f64, exponent: Exponent) -> Result<Self> {
        if radius.is_nan() || radius <= 0.0 {
            return Err(Error::domain(format!("ball radius {radius} must be positive")));
        }
        Ok(BallEvent {
            center,
            radius,
            exponent,
        })
    }

    pub fn contains(&self, f: &PiecewiseConstantFn) -> bool {
        f.distance(&self.center, self.exponent) < self.radius
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Ball(BallEvent),
    Union(Vec<Event>),
    Intersection(Vec<Event>),
    Complement(Box<Event>),
}

impl From<BallEvent> for Event {
    fn from(b: BallEvent) -> Self {
        Event::Ball(b)
    }
}

impl Event {
    pub fn ball(center: PiecewiseConstantFn, radius: f64, e: Exponent) -> Result<Self> {
        BallEvent::new(center, radius, e).map(Event::Ball)
    }

    pub fn union(self, other: Event) -> Self {
        Event::Union(vec![self, other])
    }

    pub fn intersect(self, other: Event) -> Self {
        Event::Intersection(vec![self, other])
    }

    pub fn complement(self) -> Self {
        Event::Complement(Box::new(self))
    }

    /// `ξ^{-1}(O)` as an exact interval union.
    pub fn preimage(&self, xi: &LpRandomVariable) -> Result<IntervalUnion> {
        Ok(match self {
            Event::Ball(b) => ball_preimage(xi, &b.center, b.radius, b.exponent)?,
            Event::Union(parts) => parts.iter().try_fold(IntervalUnion::empty(), |acc, e| {
                Ok::<_, Error>(acc.union(&e.preimage(xi)?))
            })?,
            Event::Intersection(parts) => {
                parts.iter().try_fold(IntervalUnion::full(), |acc, e| {
                    Ok::<_, Error>(acc.intersection(&e.preimage(xi)?))
                })?
            }
            Event::Complement(inner) => inner.preimage(xi)?.complement(),
        })
    }

    /// Membership by direct norm evaluation.
    pub fn contains(&self, f: &PiecewiseConstantFn) -> bool {
        match self {
            Event::Ball(b) => b.contains(f),
            Event::Union(parts) => parts.iter().any(|e| e.contains(f)),
            Event::Intersection(parts) => parts.iter().all(|e| e.contains(f)),
            Event::Complement(inner) => !inner.contains(f),
        }
    }

    /// A compact, comma-free label, e.g. `ball[p=2 center=0 r=0.5]`.
    pub fn descriptor(&self) -> String {
        fn join(parts: &[Event]) -> String {
            parts.iter().map(Event::descriptor).collect::<Vec<_>>().join("|")
        }
        match self {
            Event::Ball(b) => {
                let center = match b.center.values() {
                    [c] => format!("{c}"),
                    _ => format!("step({} cells)", b.center.num_cells()),
                };
                format!("ball[p={} center={} r={}]", b.exponent.p(), center, b.radius)
            }
            Event::Union(parts) => format!("union[{}]", join(parts)),
            Event::Intersection(parts) => format!("intersection[{}]", join(parts)),
            Event::Complement(inner) => format!("not[{}]", inner.descriptor()),
        }
    }
}

/// `P(ξ ∈ O) = λ(ξ^{-1}(O))`.
pub fn pushforward_exact(xi: &LpRandomVariable, event: &Event) -> Result<f64> {
    Ok(event.preimage(xi)?.measure().clamp(0.0, 1.0))
}

/// A Monte Carlo probability estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

impl MCEstimate {
    fn from_hits(hits: usize, samples: usize, seed: u64) -> Self {
        let estimate = hits as f64 / samples as f64;
        MCEstimate {
            estimate,
            std_error: (estimate * (1.0 - estimate) / samples as f64).sqrt(),
            samples,
            seed,
        }
    }
}

/// Maps 53 random bits to the open interval `(0, 1)`.
#[inline]
fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// The uniform draws `ω_start, …, ω_{start+len−1}` of stream `seed`.
///
/// Draw `i` is the `i`-th 64-bit output of ChaCha8 keyed by `seed`, reached by
/// seeking, so any split of the index range reproduces the same values.
pub fn uniform_draws(seed: u64, start: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(2 * u128::from(start));
    (0..len).map(|_| open_unit(rng.next_u64())).collect()
}

/// Fraction of `n` seeded uniform draws `ω` with `ξ(ω) ∈ O`.
pub fn pushforward_mc(
    xi: &LpRandomVariable,
    event: &Event,
    samples: usize,
    seed: u64,
) -> Result<MCEstimate> {
    if samples < MIN_SAMPLES {
        return Err(Error::domain(format!(
            "Monte Carlo needs at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    let chunks = samples.div_ceil(CHUNK);
    let hits = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let len = CHUNK.min(samples - start);
            let mut hits = 0usize;
            for w in uniform_draws(seed, start as u64, len) {
                if event.contains(&xi.evaluate(w)?) {
                    hits += 1;
                }
            }
            Ok(hits)
        })
        .collect::<Result<Vec<usize>>>()?
        .into_iter()
        .sum();
    Ok(MCEstimate::from_hits(hits, samples, seed))
}

/// `P(‖χ‖_p < ε)` through the exact preimage; equals `ε^p`.
pub fn problem2_answer(epsilon: f64, e: Exponent) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::domain(format!("epsilon = {epsilon} must lie in (0, 1)")));
    }
    let event = Event::ball(PiecewiseConstantFn::zero(), epsilon, e)?;
    pushforward_exact(&LpRandomVariable::IndicatorProcess, &event)
}

/// One exported comparison of the exact and simulated probability of an
/// event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushforwardRow {
    pub event: String,
    pub exact: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub n: usize,
    pub seed: u64,
}

impl PushforwardRow {
    pub fn compute(xi: &LpRandomVariable, event: &Event, n: usize, seed: u64) -> Result<Self> {
        let exact = pushforward_exact(xi, event)?;
        let mc = pushforward_mc(xi, event, n, seed)?;
        Ok(PushforwardRow {
            event: event.descriptor(),
            exact,
            estimate: mc.estimate,
            std_error: mc.std_error,
            n,
            seed,
        })
    }
}

pub const PUSHFORWARD_CSV_HEADER: &str = "event_descriptor,exact,estimate,std_error,n,seed";

pub fn pushforward_csv(rows: &[PushforwardRow]) -> String {
    let mut out = format!("{PUSHFORWARD_CSV_HEADER}\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.event, r.exact, r.estimate, r.std_error, r.n, r.seed
        )
        .unwrap();
    }
    out
}

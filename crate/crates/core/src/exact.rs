//! Brute-force exact distribution of the urn system on tiny instances.
//!
//! Every step branches over all `2^n` draw vectors, so a run of `depth`
//! steps visits up to `2^(n * depth)` draw paths. Probabilities are kept as
//! arbitrary-precision rationals so that merged compositions sum exactly.
//!
//! Two views are offered: [`enumerate_paths`] lists every draw path with
//! its own probability, and [`enumerate`] merges paths ending in the same
//! composition (computed step by step, so the two views are independent
//! routes to the same numbers).

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::urn::{DrawVector, UrnState};

pub type Rational = BigRational;

/// Per-agent `(black, white)` counts.
pub type Composition = Vec<(u64, u64)>;

/// Largest allowed `n * depth`.
pub const MAX_PATH_BITS: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    t: u64,
    outcomes: BTreeMap<Composition, Rational>,
}

impl OutcomeDistribution {
    /// Time index of every composition in the distribution.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn probability(&self, composition: &[(u64, u64)]) -> Option<&Rational> {
        self.outcomes.get(composition)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Composition, &Rational)> {
        self.outcomes.iter()
    }

    pub fn total(&self) -> Rational {
        self.outcomes.values().sum()
    }

    /// `[{"composition": [[B, W], ...], "prob": "num/den"}, ...]` in
    /// lexicographic composition order.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.outcomes
                .iter()
                .map(|(comp, p)| {
                    let pairs: Vec<[u64; 2]> = comp.iter().map(|&(b, w)| [b, w]).collect();
                    json!({ "composition": pairs, "prob": rational_string(p) })
                })
                .collect(),
        )
    }
}

/// One draw path of an enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawPath {
    pub draws: Vec<DrawVector>,
    pub probability: Rational,
    pub composition: Composition,
}

impl DrawPath {
    pub fn to_json(&self) -> Value {
        let draws: Vec<String> = self.draws.iter().map(|d| d.to_string()).collect();
        let pairs: Vec<[u64; 2]> = self.composition.iter().map(|&(b, w)| [b, w]).collect();
        json!({ "draws": draws, "prob": rational_string(&self.probability), "composition": pairs })
    }
}

/// Always `num/den`, including integers (`1/1`).
pub fn rational_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn guard(g: &Graph, depth: usize) -> Result<()> {
    if g.n().saturating_mul(depth) > MAX_PATH_BITS {
        Err(Error::EnumerationTooLarge {
            n: g.n(),
            depth,
            limit: MAX_PATH_BITS,
        })
    } else {
        Ok(())
    }
}

fn composition_of(state: &UrnState) -> Composition {
    state.black().iter().copied().zip(state.white().iter().copied()).collect()
}

/// All positive-probability draw vectors from `comp`, with their
/// probability and the composition they lead to.
fn branches(g: &Graph, comp: &Composition) -> Vec<(DrawVector, Rational, Composition)> {
    let n = g.n();
    let den: BigInt = comp.iter().map(|&(b, w)| BigInt::from(b + w)).product();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << n) {
        let draws = DrawVector((0..n).map(|i| mask >> i & 1 == 1).collect());
        let mut num = BigInt::one();
        for (i, &(b, w)) in comp.iter().enumerate() {
            num *= if draws.is_black(i) { b } else { w };
        }
        if num.is_zero() {
            continue;
        }
        let next = comp
            .iter()
            .enumerate()
            .map(|(i, &(b, w))| {
                let k = g
                    .neighbors(i)
                    .iter()
                    .filter(|&&j| draws.is_black(j as usize))
                    .count() as u64;
                (b + k, w + g.degree(i) as u64 - k)
            })
            .collect();
        out.push((draws, Rational::new(num, den.clone()), next));
    }
    out
}

/// Exact distribution of compositions after `depth` further steps from
/// `init`, merging identical compositions.
pub fn enumerate(g: &Graph, init: &UrnState, depth: usize) -> Result<OutcomeDistribution> {
    guard(g, depth)?;
    init.check(g)?;
    let mut current = BTreeMap::new();
    current.insert(composition_of(init), Rational::one());
    for _ in 0..depth {
        let mut next: BTreeMap<Composition, Rational> = BTreeMap::new();
        for (comp, p) in &current {
            for (_, q, to) in branches(g, comp) {
                *next.entry(to).or_insert_with(Rational::zero) += p * q;
            }
        }
        current = next;
    }
    Ok(OutcomeDistribution {
        t: init.t() + depth as u64,
        outcomes: current,
    })
}

/// Every positive-probability draw path of length `depth` from `init`.
pub fn enumerate_paths(g: &Graph, init: &UrnState, depth: usize) -> Result<Vec<DrawPath>> {
    guard(g, depth)?;
    init.check(g)?;
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(depth);
    walk(g, &composition_of(init), Rational::one(), depth, &mut prefix, &mut out);
    Ok(out)
}

fn walk(
    g: &Graph,
    comp: &Composition,
    p: Rational,
    remaining: usize,
    prefix: &mut Vec<DrawVector>,
    out: &mut Vec<DrawPath>,
) {
    if remaining == 0 {
        out.push(DrawPath {
            draws: prefix.clone(),
            probability: p,
            composition: comp.clone(),
        });
        return;
    }
    for (draws, q, next) in branches(g, comp) {
        prefix.push(draws);
        walk(g, &next, &p * q, remaining - 1, prefix, out);
        prefix.pop();
    }
}

/// `E[B_i^{t+1} - B_i^t | state]` computed by one-step enumeration.
pub fn one_step_expectation(g: &Graph, init: &UrnState) -> Result<Vec<Rational>> {
    let dist = enumerate(g, init, 1)?;
    let mut expectation = vec![Rational::zero(); g.n()];
    for (comp, p) in dist.iter() {
        for (i, &(b, _)) in comp.iter().enumerate() {
            let gain = BigInt::from(b) - BigInt::from(init.black()[i]);
            expectation[i] += p * Rational::from_integer(gain);
        }
    }
    Ok(expectation)
}

/// Closed form of the one-step drift: `sum_{j in N(i)} B_j / S_j`.
pub fn expected_increment(g: &Graph, state: &UrnState) -> Vec<Rational> {
    (0..g.n())
        .map(|i| {
            g.neighbors(i)
                .iter()
                .map(|&j| {
                    let j = j as usize;
                    Rational::new(
                        BigInt::from(state.black()[j]),
                        BigInt::from(state.black()[j] + state.white()[j]),
                    )
                })
                .sum()
        })
        .collect()
}

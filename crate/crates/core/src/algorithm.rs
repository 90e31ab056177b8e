//! MacLeod's in-situ permutation algorithm and its instrumented cost.
//!
//! For each index `i` the algorithm walks the cycle through `i` until it
//! either returns to `i` (so `i` is the smallest index of its cycle, the
//! cycle leader) or meets a smaller index. Leaders rotate their cycle with a
//! single value buffer. The major cost is the number of steps taken by the
//! leader search after the first probe `p(i)`.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use num_bigint::BigUint;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_size, Error, Result};
use crate::recurrence::ExactDistribution;
use crate::streams::{self, Domain};

/// Largest size accepted by [`cost_distribution_bruteforce`].
pub const BRUTEFORCE_CAP: usize = 8;

/// A bijection on `{1..n}`, stored 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    /// `p = (2, 3, .., n, 1)`, the worst case for the leader search.
    pub fn cyclic_shift(n: usize) -> Self {
        Self((0..n).map(|i| (i + 1) % n).collect())
    }

    /// Validates a 0-based index map.
    pub fn from_zero_based(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for (pos, &target) in map.iter().enumerate() {
            if target >= n {
                return Err(Error::Validation(format!(
                    "entry {} at position {} is out of range 1..={}",
                    target + 1,
                    pos + 1,
                    n
                )));
            }
            if std::mem::replace(&mut seen[target], true) {
                return Err(Error::Validation(format!(
                    "entry {} appears more than once",
                    target + 1
                )));
            }
        }
        Ok(Self(map))
    }

    pub fn from_one_based(map: &[usize]) -> Result<Self> {
        let zero_based = map
            .iter()
            .map(|&v| {
                v.checked_sub(1)
                    .ok_or_else(|| Error::Validation("indices are 1-based; found 0".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_zero_based(zero_based)
    }

    /// Uniform random permutation (Fisher-Yates).
    pub fn random<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut map: Vec<usize> = (0..n).collect();
        map.shuffle(rng);
        Self(map)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_zero_based(&self) -> &[usize] {
        &self.0
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|v| v + 1).collect()
    }

    /// Number of cycles, by marking (independent of the in-place walk).
    pub fn cycle_count(&self) -> usize {
        let mut seen = vec![false; self.len()];
        let mut cycles = 0;
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            cycles += 1;
            let mut j = start;
            while !seen[j] {
                seen[j] = true;
                j = self.0[j];
            }
        }
        cycles
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.one_based().iter().join(" "))
    }
}

/// Parses whitespace-separated 1-based indices.
impl FromStr for Permutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let map = s
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>()
                    .map_err(|_| Error::Validation(format!("not an index: {tok:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if map.is_empty() {
            return Err(Error::Validation("empty permutation".into()));
        }
        Self::from_one_based(&map)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CostRecord {
    /// Leader-search loop iterations: the major cost.
    pub search_steps: u64,
    pub value_writes: u64,
    pub cycle_leaders: u64,
}

/// Replaces `x` by `(x[p(1)], .., x[p(n)])` using one value buffer and a few
/// indices, and reports the work done. `p` is only read.
pub fn permute_in_place<T: Clone>(x: &mut [T], p: &Permutation) -> Result<CostRecord> {
    if x.len() != p.len() {
        return Err(Error::Validation(format!(
            "sequence has length {} but the permutation has length {}",
            x.len(),
            p.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::Validation("empty sequence".into()));
    }
    let p = p.as_zero_based();
    let mut cost = CostRecord::default();
    for i in 0..x.len() {
        let mut j = p[i];
        while j > i {
            j = p[j];
            cost.search_steps += 1;
        }
        if j != i {
            continue;
        }
        cost.cycle_leaders += 1;
        let buffer = x[i].clone();
        let mut j = i;
        while p[j] != i {
            x[j] = x[p[j]].clone();
            cost.value_writes += 1;
            j = p[j];
        }
        x[j] = buffer;
        cost.value_writes += 1;
    }
    Ok(cost)
}

/// Exact law of the search cost over all `n!` permutations, `1 <= n <= 8`.
pub fn cost_distribution_bruteforce(n: usize) -> Result<ExactDistribution> {
    check_size(
        "n",
        n,
        1,
        BRUTEFORCE_CAP,
        " (enumeration is n!; use Monte Carlo sampling for larger n)",
    )?;
    let mut counts = vec![BigUint::zero(); n * (n - 1) / 2 + 1];
    let mut scratch: Vec<usize> = vec![0; n];
    for map in (0..n).permutations(n) {
        let p = Permutation(map);
        let rec = permute_in_place(&mut scratch, &p)?;
        counts[rec.search_steps as usize] += 1u32;
    }
    Ok(ExactDistribution::from_counts(n, &counts))
}

/// Search costs of `trials` uniform random permutations of size `n`. Trial
/// `t` uses the stream `(seed, n, t)`, so the output does not depend on
/// the worker count.
pub fn cost_sample(n: usize, trials: usize, seed: u64) -> Result<Vec<u64>> {
    if n == 0 || trials == 0 {
        return Err(Error::Domain(
            "cost_sample needs n >= 1 and trials >= 1".into(),
        ));
    }
    (0..trials as u64)
        .into_par_iter()
        .map_init(
            || vec![0u32; n],
            |scratch, t| {
                let mut rng = streams::stream(seed, Domain::CostSample { n: n as u64 }, t);
                let p = Permutation::random(n, &mut rng);
                permute_in_place(scratch, &p).map(|rec| rec.search_steps)
            },
        )
        .collect()
}

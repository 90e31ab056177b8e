//! The limit law of the normalized cost.
//!
//! `Y_n = (X_n - E X_n) / n` converges in distribution to the mean-zero
//! solution of
//!
//! ```text
//! Y = U Y + (1 - U) Y' + C(U),   C(u) = (1-u) ln(1-u) + u ln u + u,
//! ```
//!
//! with `U` uniform on `[0, 1]` and `Y`, `Y'`, `U` independent. Matching the
//! second and third moments of both sides gives `E Y^2 = 3 E C(U)^2` and
//! `E Y^3 = 2 (3 sigma^2 A + B)` with `A = E[C(U) (U^2 + (1-U)^2)]` and
//! `B = E C(U)^3`, so the limit constants reduce to one-dimensional integrals.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::recurrence::MomentTable;
use crate::streams::{self, Domain};
use crate::summation::sum;
use crate::{EULER_GAMMA, SIGMA2};

/// Samples generated per seeded stream in [`LimitPool::step`].
pub const POOL_CHUNK: usize = 4096;
pub const DEFAULT_QUADRATURE_TOLERANCE: f64 = 1e-10;

/// The toll `C(u)` of the limit equation, with `0 ln 0 = 0`.
pub fn toll_c(u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Domain(format!(
            "toll C(u) needs 0 <= u <= 1, got {u}"
        )));
    }
    Ok(toll_unchecked(u))
}

#[inline]
fn x_ln_x(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

#[inline]
fn toll_unchecked(u: f64) -> f64 {
    // (1-u) is exact for u >= 1/2; below that ln_1p keeps the small-u digits.
    let left = if u < 0.5 {
        (1.0 - u) * (-u).ln_1p()
    } else {
        x_ln_x(1.0 - u)
    };
    left + x_ln_x(u) + u
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitConstants {
    pub gamma: f64,
    pub sigma2: f64,
    /// `int_0^1 C(u) (u^2 + (1-u)^2) du`
    #[serde(rename = "A")]
    pub a: f64,
    /// `int_0^1 C(u)^3 du`
    #[serde(rename = "B")]
    pub b: f64,
    /// `E Y^3`
    #[serde(rename = "M3")]
    pub m3: f64,
    /// `int_0^1 C(u) du`; zero, forced by `E Y = 0`.
    #[serde(skip)]
    pub toll_mean: f64,
    /// `3 int_0^1 C(u)^2 du`; equals `sigma2`.
    #[serde(skip)]
    pub toll_second_moment_identity: f64,
}

impl LimitConstants {
    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    /// Leading constant `M3 / (4 sigma^5)` of the standardized rate.
    pub fn rate_constant(&self) -> f64 {
        self.m3 / (4.0 * self.sigma2.powf(2.5))
    }
}

fn integrate(integrand: &'static str, f: impl Fn(f64) -> f64, tolerance: f64) -> Result<f64> {
    // C is analytic inside (0, 1) with log-type endpoints; splitting at 1/2
    // keeps both tanh-sinh halves one-sided.
    let half_tol = tolerance / 2.0;
    let mut estimate = 0.0;
    let mut achieved = 0.0;
    for (a, b) in [(0.0, 0.5), (0.5, 1.0)] {
        let out = quadrature::double_exponential::integrate(&f, a, b, half_tol);
        estimate += out.integral;
        achieved += out.error_estimate;
    }
    if achieved.is_nan() || achieved > tolerance || !estimate.is_finite() {
        return Err(Error::Precision {
            integrand,
            estimate,
            achieved,
            tolerance,
        });
    }
    Ok(estimate)
}

/// Limit constants by quadrature, `0 < tolerance <= 1e-6`.
pub fn limit_constants(tolerance: f64) -> Result<LimitConstants> {
    if !(tolerance > 0.0 && tolerance <= 1e-6) {
        return Err(Error::Domain(format!(
            "quadrature tolerance must lie in (0, 1e-6], got {tolerance}"
        )));
    }
    let c = toll_unchecked;
    let a = integrate(
        "C(u)(u^2+(1-u)^2)",
        |u| c(u) * (u * u + (1.0 - u) * (1.0 - u)),
        tolerance,
    )?;
    let b = integrate("C(u)^3", |u| c(u).powi(3), tolerance)?;
    let toll_mean = integrate("C(u)", c, tolerance)?;
    let toll_second = integrate("C(u)^2", |u| c(u).powi(2), tolerance)?;
    Ok(LimitConstants {
        gamma: EULER_GAMMA,
        sigma2: SIGMA2,
        a,
        b,
        m3: 2.0 * (3.0 * SIGMA2 * a + b),
        toll_mean,
        toll_second_moment_identity: 3.0 * toll_second,
    })
}

/// A population of samples approximating the law after `generation`
/// applications of the limit map.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitPool {
    pub values: Vec<f64>,
    pub generation: u64,
}

impl LimitPool {
    pub fn zeros(pool_size: usize) -> Self {
        Self {
            values: vec![0.0; pool_size],
            generation: 0,
        }
    }

    /// One application of the limit map to the empirical law of `self`.
    ///
    /// The input pool is first shifted to mean zero: every shift of a fixed
    /// point is again a fixed point, so without this projection the pool mean
    /// performs a random walk. Output sample `i` of generation `g` draws from
    /// stream `(seed, g, i / POOL_CHUNK)`.
    pub fn step(&self, seed: u64) -> LimitPool {
        let len = self.values.len();
        let shift = sum(self.values.iter().copied()) / len as f64;
        let prev: Vec<f64> = self.values.iter().map(|v| v - shift).collect();
        let generation = self.generation + 1;
        let mut values = vec![0.0; len];
        values
            .par_chunks_mut(POOL_CHUNK)
            .enumerate()
            .for_each(|(chunk, out)| {
                let mut rng = streams::stream(seed, Domain::LimitPool { generation }, chunk as u64);
                for slot in out {
                    let u: f64 = rng.random();
                    let y1 = prev[rng.random_range(0..len)];
                    let y2 = prev[rng.random_range(0..len)];
                    *slot = u * y1 + (1.0 - u) * y2 + toll_unchecked(u);
                }
            });
        LimitPool { values, generation }
    }
}

/// Population iteration of the limit map from the all-zero pool.
pub fn simulate_limit(pool_size: usize, generations: u64, seed: u64) -> Result<LimitPool> {
    if pool_size == 0 {
        return Err(Error::Domain("pool_size must be positive".into()));
    }
    let mut pool = LimitPool::zeros(pool_size);
    for _ in 0..generations {
        pool = pool.step(seed);
    }
    Ok(pool)
}

/// Direct recursive evaluation of the limit map to a fixed depth (zeros at
/// the leaves). Costs `2^depth` per sample; a cross-check for the pool.
pub fn simulate_limit_recursive(samples: usize, depth: u32, seed: u64) -> Vec<f64> {
    fn draw<R: Rng>(rng: &mut R, depth: u32) -> f64 {
        if depth == 0 {
            return 0.0;
        }
        let u: f64 = rng.random();
        let y1 = draw(rng, depth - 1);
        let y2 = draw(rng, depth - 1);
        u * y1 + (1.0 - u) * y2 + toll_unchecked(u)
    }
    (0..samples as u64)
        .into_par_iter()
        .map(|i| draw(&mut streams::stream(seed, Domain::RecursiveLimit, i), depth))
        .collect()
}

/// Toll of the normalized recurrence,
/// `C_n(k) = (m_k + m_{n-1-k} - m_n + k) / n`, for `0 <= k < n`.
pub fn finite_toll(table: &MomentTable, n: usize, k: usize) -> Result<f64> {
    check_split(n, k)?;
    let m = |i| table.mean(i);
    Ok((m(k)? + m(n - 1 - k)? - m(n)? + k as f64) / n as f64)
}

/// [`finite_toll`] in exact arithmetic; needs a rational-mode table.
pub fn finite_toll_exact(table: &MomentTable, n: usize, k: usize) -> Result<BigRational> {
    check_split(n, k)?;
    let exact = table
        .exact()
        .ok_or_else(|| Error::Domain("exact toll needs a rational moment table".into()))?;
    if n >= exact.len() {
        return Err(Error::MissingRows {
            covered: exact.len() - 1,
            requested: n,
        });
    }
    let m = |i: usize| &exact[i].mean;
    let sum = m(k) + m(n - 1 - k) - m(n) + BigRational::from_integer(BigInt::from(k));
    Ok(sum / BigRational::from_integer(BigInt::from(n)))
}

fn check_split(n: usize, k: usize) -> Result<()> {
    if n == 0 || k >= n {
        return Err(Error::Domain(format!(
            "split index k = {k} needs 0 <= k < n = {n}"
        )));
    }
    Ok(())
}

/// Subproblems up to this size are drawn from their tabulated law.
pub const SAMPLER_TABLE_CUTOFF: usize = 64;

/// Draws `X_k` by unrolling the split recurrence down to subproblems of at
/// most `cutoff` keys, whose costs are then drawn by inverse CDF from laws
/// tabulated with the same recurrence.
#[derive(Debug, Clone)]
pub struct CostSampler {
    cdfs: Vec<Vec<f64>>,
}

impl CostSampler {
    pub fn new(cutoff: usize) -> Self {
        let mut pmfs: Vec<Vec<f64>> = vec![vec![1.0]];
        for n in 1..=cutoff {
            let mut pmf = vec![0.0; n * (n - 1) / 2 + 1];
            for j in 0..n {
                let (left, right) = (&pmfs[j], &pmfs[n - 1 - j]);
                for (a, pa) in left.iter().enumerate() {
                    for (b, pb) in right.iter().enumerate() {
                        pmf[a + b + j] += pa * pb;
                    }
                }
            }
            pmf.iter_mut().for_each(|p| *p /= n as f64);
            pmfs.push(pmf);
        }
        let cdfs = pmfs
            .into_iter()
            .map(|pmf| {
                let mut acc = 0.0;
                pmf.into_iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect()
            })
            .collect();
        Self { cdfs }
    }

    pub fn cutoff(&self) -> usize {
        self.cdfs.len() - 1
    }

    pub fn sample<R: Rng>(&self, k: usize, rng: &mut R, stack: &mut Vec<usize>) -> u64 {
        let mut cost = 0u64;
        stack.clear();
        stack.push(k);
        while let Some(size) = stack.pop() {
            if size <= 1 {
                continue;
            }
            if let Some(cdf) = self.cdfs.get(size) {
                let u: f64 = rng.random();
                // rounding can leave the last entry a hair below 1
                let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                cost += idx as u64;
                continue;
            }
            let j = rng.random_range(0..size);
            cost += j as u64;
            stack.push(j);
            stack.push(size - 1 - j);
        }
        cost
    }
}

impl Default for CostSampler {
    fn default() -> Self {
        Self::new(SAMPLER_TABLE_CUTOFF)
    }
}

/// Samples of `Y_n = (X_n - m_n) / n`; trial `t` uses stream `(seed, n, t)`.
pub fn simulate_yn(n: usize, trials: usize, table: &MomentTable, seed: u64) -> Result<Vec<f64>> {
    simulate_yn_with(&CostSampler::default(), n, trials, table, seed)
}

pub fn simulate_yn_with(
    sampler: &CostSampler,
    n: usize,
    trials: usize,
    table: &MomentTable,
    seed: u64,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Domain("simulate_yn needs n >= 1".into()));
    }
    let mean = table.mean(n)?;
    let nf = n as f64;
    Ok((0..trials as u64)
        .into_par_iter()
        .map_init(Vec::new, |stack, t| {
            let mut rng = streams::stream(seed, Domain::FiniteCost { n: n as u64 }, t);
            (sampler.sample(n, &mut rng, stack) as f64 - mean) / nf
        })
        .collect())
}

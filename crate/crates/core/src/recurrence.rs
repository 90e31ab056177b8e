//! Exact laws and moments of the major cost `X_n`.
//!
//! The cost obeys the split recurrence
//!
//! ```text
//! X_0 = 0,   X_n = X_I + X'_{n-1-I} + I,   I uniform on {0, .., n-1},
//! ```
//!
//! with `X`, `X'` and `I` independent. Distributions are computed exactly as
//! permutation counts over `n!`; moments come from the conditional expansion
//! of `E X_n^r` given the split index.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, One, ToPrimitive, Zero};
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{check_size, Error, Result};
use crate::summation::two_sum;
use crate::{EULER_GAMMA, SIGMA2};

/// Largest `n` accepted by [`exact_distribution`].
pub const DEFAULT_DISTRIBUTION_CAP: usize = 40;
/// Largest `n_max` for exact rational moments.
pub const RATIONAL_MOMENT_CAP: usize = 200;
/// Largest `n_max` for the floating-point moment recurrences.
pub const FLOAT_MOMENT_CAP: usize = 30_000;

/// The exact law of `X_n`: cost value to probability, zero entries omitted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactDistribution {
    n: usize,
    probabilities: BTreeMap<u64, BigRational>,
}

impl ExactDistribution {
    /// Builds the law from per-cost permutation counts (which must total `n!`).
    pub(crate) fn from_counts(n: usize, counts: &[BigUint]) -> Self {
        let total: BigUint = counts.iter().sum();
        let denom = BigInt::from(total);
        let probabilities = counts
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| {
                (
                    k as u64,
                    BigRational::new(BigInt::from(c.clone()), denom.clone()),
                )
            })
            .collect();
        Self { n, probabilities }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probabilities(&self) -> &BTreeMap<u64, BigRational> {
        &self.probabilities
    }

    pub fn probability(&self, cost: u64) -> BigRational {
        self.probabilities
            .get(&cost)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn min_cost(&self) -> u64 {
        *self.probabilities.keys().next().expect("nonempty support")
    }

    pub fn max_cost(&self) -> u64 {
        *self
            .probabilities
            .keys()
            .next_back()
            .expect("nonempty support")
    }

    pub fn total_mass(&self) -> BigRational {
        self.probabilities.values().sum()
    }

    /// `E X_n^r` as an exact rational.
    pub fn raw_moment(&self, r: u32) -> BigRational {
        self.probabilities
            .iter()
            .map(|(&k, p)| p * BigRational::from_integer(BigInt::from(k).pow(r)))
            .sum()
    }

    /// Cumulative probabilities as `f64`, indexed by cost `0..=max_cost`.
    pub fn cdf_f64(&self) -> Vec<f64> {
        let mut cdf = vec![0.0; self.max_cost() as usize + 1];
        let mut acc = BigRational::zero();
        let mut next = self.probabilities.iter().peekable();
        for (k, slot) in cdf.iter_mut().enumerate() {
            if let Some((_, p)) = next.next_if(|(&c, _)| c == k as u64) {
                acc += p;
            }
            *slot = acc.to_f64().unwrap_or(f64::NAN);
        }
        cdf
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("distribution serializes")
    }
}

/// Renders a rational as `p/q`, including integers (`1/1`).
pub fn rational_string(q: &BigRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

struct ProbabilityMap<'a>(&'a BTreeMap<u64, BigRational>);

impl Serialize for ProbabilityMap<'_> {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (k, p) in self.0 {
            map.serialize_entry(&k.to_string(), &rational_string(p))?;
        }
        map.end()
    }
}

impl Serialize for ExactDistribution {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(2))?;
        map.serialize_entry("n", &self.n)?;
        map.serialize_entry("probabilities", &ProbabilityMap(&self.probabilities))?;
        map.end()
    }
}

/// Exact law of `X_n` for `1 <= n <= DEFAULT_DISTRIBUTION_CAP`.
pub fn exact_distribution(n: usize) -> Result<ExactDistribution> {
    exact_distribution_capped(n, DEFAULT_DISTRIBUTION_CAP)
}

pub fn exact_distribution_capped(n: usize, cap: usize) -> Result<ExactDistribution> {
    check_size("n", n, 1, cap, "")?;
    let counts = permutation_counts(n);
    Ok(ExactDistribution::from_counts(n, &counts[n]))
}

/// Laws of `X_1, .., X_{n_max}` from a single bottom-up pass.
pub fn exact_distributions(n_max: usize, cap: usize) -> Result<Vec<ExactDistribution>> {
    check_size("n", n_max, 1, cap, "")?;
    let counts = permutation_counts(n_max);
    Ok((1..=n_max)
        .map(|n| ExactDistribution::from_counts(n, &counts[n]))
        .collect())
}

/// `counts[n][k]` = number of permutations of size `n` with cost `k`, for
/// every `n <= n_max`. Dense in `k` over `0..=n(n-1)/2`.
///
/// Multiplying the recurrence by `n!` gives integer weights:
/// `N_n(k) = sum_j C(n-1, j) * (N_j * N_{n-1-j})(k - j)`.
fn permutation_counts(n_max: usize) -> Vec<Vec<BigUint>> {
    let mut counts: Vec<Vec<BigUint>> = Vec::with_capacity(n_max + 1);
    counts.push(vec![BigUint::one()]);
    for n in 1..=n_max {
        let width = n * (n - 1) / 2 + 1;
        let mut row = vec![BigUint::zero(); width];
        // splits j and n-1-j share one convolution and one binomial weight
        for j in 0..=(n - 1) / 2 {
            let k = n - 1 - j;
            let conv = convolve(&counts[j], &counts[k]);
            let weight = binomial(BigUint::from(n - 1), BigUint::from(j));
            let shifts: &[usize] = if j == k { &[j] } else { &[j, k] };
            for (c, v) in conv.into_iter().enumerate() {
                if v.is_zero() {
                    continue;
                }
                let term = &weight * v;
                for &shift in shifts {
                    row[c + shift] += &term;
                }
            }
        }
        counts.push(row);
    }
    counts
}

fn convolve(a: &[BigUint], b: &[BigUint]) -> Vec<BigUint> {
    let mut out = vec![BigUint::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if !y.is_zero() {
                out[i + j] += x * y;
            }
        }
    }
    out
}

/// Arithmetic used for [`moments_exact`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentMode {
    /// Exact rationals, raw-moment recurrences. `n_max <= 200`.
    Rational,
    /// binary64 central-moment recurrences with compensated sums.
    Float,
    /// Double-double central-moment recurrences; the high-precision
    /// reference for spot checks of `Float`.
    Extended,
}

impl fmt::Display for MomentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MomentMode::Rational => "rational",
            MomentMode::Float => "float",
            MomentMode::Extended => "extended",
        })
    }
}

/// Moments of `X_n` for one `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentRow {
    pub n: usize,
    /// `m_n = E X_n`
    pub mean: f64,
    /// `s_n = E X_n^2`
    pub second: f64,
    /// `t_n = E X_n^3`
    pub third: f64,
    pub variance: f64,
    /// Third cumulant (= third central moment).
    pub kappa3: f64,
    /// `Var(X_n) / n^2`; `None` for `n = 0`.
    pub sigma2_n: Option<f64>,
}

/// Exact raw moments for one `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactMoments {
    pub mean: BigRational,
    pub second: BigRational,
    pub third: BigRational,
}

impl ExactMoments {
    pub fn variance(&self) -> BigRational {
        &self.second - &self.mean * &self.mean
    }

    pub fn kappa3(&self) -> BigRational {
        let m = &self.mean;
        let three = BigRational::from_integer(3.into());
        let two = BigRational::from_integer(2.into());
        &self.third - three * m * &self.second + two * m * m * m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    mode: MomentMode,
    rows: Vec<MomentRow>,
    exact: Option<Vec<ExactMoments>>,
}

impl MomentTable {
    pub fn mode(&self) -> MomentMode {
        self.mode
    }

    pub fn n_max(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn rows(&self) -> &[MomentRow] {
        &self.rows
    }

    pub fn row(&self, n: usize) -> Result<&MomentRow> {
        self.rows.get(n).ok_or(Error::MissingRows {
            covered: self.n_max(),
            requested: n,
        })
    }

    /// Exact rows, present in rational mode only.
    pub fn exact(&self) -> Option<&[ExactMoments]> {
        self.exact.as_deref()
    }

    pub fn mean(&self, n: usize) -> Result<f64> {
        Ok(self.row(n)?.mean)
    }

    pub fn csv_header() -> &'static str {
        "n,mean,variance,kappa3,sigma2_n"
    }

    /// One CSV line (no newline) in [`Self::csv_header`] order. Rational
    /// tables print exact `p/q` values.
    pub fn csv_line(&self, n: usize) -> Result<String> {
        let row = self.row(n)?;
        if let Some(exact) = &self.exact {
            let e = &exact[n];
            let s2 = if n == 0 {
                String::new()
            } else {
                let n2 = BigRational::from_integer(BigInt::from(n * n));
                rational_string(&(e.variance() / n2))
            };
            return Ok(format!(
                "{},{},{},{},{}",
                n,
                rational_string(&e.mean),
                rational_string(&e.variance()),
                rational_string(&e.kappa3()),
                s2
            ));
        }
        Ok(format!(
            "{},{},{},{},{}",
            n,
            row.mean,
            row.variance,
            row.kappa3,
            row.sigma2_n.map(|s| s.to_string()).unwrap_or_default()
        ))
    }

    /// Full table as CSV, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::csv_header());
        out.push('\n');
        for n in 0..self.rows.len() {
            out.push_str(&self.csv_line(n).expect("row in range"));
            out.push('\n');
        }
        out
    }
}

/// Moments `E X_n^r`, `r = 1, 2, 3`, for every `n <= n_max`.
pub fn moments_exact(n_max: usize, mode: MomentMode) -> Result<MomentTable> {
    match mode {
        MomentMode::Rational => {
            check_size(
                "n_max",
                n_max,
                1,
                RATIONAL_MOMENT_CAP,
                " (use float mode beyond)",
            )?;
            let exact = rational_raw_moments(n_max);
            let rows = exact
                .iter()
                .enumerate()
                .map(|(n, e)| {
                    let variance = e.variance();
                    let sigma2_n = (n > 0).then(|| {
                        (&variance / BigRational::from_integer(BigInt::from(n * n)))
                            .to_f64()
                            .unwrap_or(f64::NAN)
                    });
                    MomentRow {
                        n,
                        mean: to_f64(&e.mean),
                        second: to_f64(&e.second),
                        third: to_f64(&e.third),
                        variance: to_f64(&variance),
                        kappa3: to_f64(&e.kappa3()),
                        sigma2_n,
                    }
                })
                .collect();
            Ok(MomentTable {
                mode,
                rows,
                exact: Some(exact),
            })
        }
        MomentMode::Float => {
            check_size("n_max", n_max, 1, FLOAT_MOMENT_CAP, "")?;
            Ok(MomentTable {
                mode,
                rows: central_rows::<f64>(n_max),
                exact: None,
            })
        }
        MomentMode::Extended => {
            check_size("n_max", n_max, 1, FLOAT_MOMENT_CAP, "")?;
            Ok(MomentTable {
                mode,
                rows: central_rows::<TwoFloat>(n_max),
                exact: None,
            })
        }
    }
}

fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

fn int(v: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Raw moments by conditioning on the split index `j` (with `k = n-1-j`):
///
/// ```text
/// n m_n = 2 P + n(n-1)/2
/// n s_n = 2 S + sum j^2 + 2 sum m_j m_k + 2 (n-1) P
/// n t_n = 2 T + sum j^3 + 6 sum s_j m_k + 3 (2 Q2 - 2(n-1) Q1 + (n-1)^2 P)
///         + 3 (n-1) S + 3 (n-1) sum m_j m_k
/// ```
///
/// where `P, S, T` are prefix sums of `m, s, t` over `j < n` and
/// `Q1 = sum j m_j`, `Q2 = sum j^2 m_j`.
fn rational_raw_moments(n_max: usize) -> Vec<ExactMoments> {
    let mut m: Vec<BigRational> = vec![BigRational::zero()];
    let mut s: Vec<BigRational> = vec![BigRational::zero()];
    let mut t: Vec<BigRational> = vec![BigRational::zero()];
    let (mut p, mut ss, mut tt) = (
        BigRational::zero(),
        BigRational::zero(),
        BigRational::zero(),
    );
    let (mut q1, mut q2) = (BigRational::zero(), BigRational::zero());
    for n in 1..=n_max {
        let j_prev = n - 1;
        p += &m[j_prev];
        ss += &s[j_prev];
        tt += &t[j_prev];
        q1 += &m[j_prev] * int(j_prev);
        q2 += &m[j_prev] * int(j_prev * j_prev);

        let nm1 = int(n - 1);
        let sum_j2 = int((n - 1) * n * (2 * n - 1) / 6);
        let sum_j3 = int(((n - 1) * n / 2) * ((n - 1) * n / 2));
        let mut mm = BigRational::zero();
        let mut sm = BigRational::zero();
        for j in 0..n {
            let k = n - 1 - j;
            mm += &m[j] * &m[k];
            sm += &s[j] * &m[k];
        }
        let two = int(2);
        let three = int(3);
        let nr = int(n);

        let mean = (&two * &p + int(n * (n - 1) / 2)) / &nr;
        let second = (&two * &ss + &sum_j2 + &two * &mm + &two * &nm1 * &p) / &nr;
        let cross = &two * &q2 - &two * &nm1 * &q1 + &nm1 * &nm1 * &p;
        let third = (&two * &tt
            + sum_j3
            + int(6) * &sm
            + &three * cross
            + &three * &nm1 * &ss
            + &three * &nm1 * &mm)
            / &nr;
        m.push(mean);
        s.push(second);
        t.push(third);
    }
    m.into_iter()
        .zip(s)
        .zip(t)
        .map(|((mean, second), third)| ExactMoments {
            mean,
            second,
            third,
        })
        .collect()
}

/// Scalars the central-moment recurrence runs in.
trait RecScalar: Float + FromPrimitive {
    /// Adds `x` into a `(sum, error)` accumulator.
    fn accumulate(acc: &mut (Self, Self), x: Self);

    fn from_usize_exact(v: usize) -> Self {
        Self::from_usize(v).expect("representable")
    }

    fn as_f64(self) -> f64;

    /// Division by an exactly representable integer.
    fn div_int(self, d: usize) -> Self;
}

impl RecScalar for f64 {
    #[inline]
    fn accumulate(acc: &mut (f64, f64), x: f64) {
        let (s, e) = two_sum(acc.0, x);
        acc.0 = s;
        acc.1 += e;
    }

    fn as_f64(self) -> f64 {
        self
    }

    fn div_int(self, d: usize) -> Self {
        self / d as f64
    }
}

impl RecScalar for TwoFloat {
    #[inline]
    fn accumulate(acc: &mut (TwoFloat, TwoFloat), x: TwoFloat) {
        acc.0 += x;
    }

    fn as_f64(self) -> f64 {
        self.hi() + self.lo()
    }

    // TwoFloat / TwoFloat in twofloat 0.8 drops the low word; the f64
    // divisor path is accurate.
    fn div_int(self, d: usize) -> Self {
        self / d as f64
    }
}

fn total<S: RecScalar>(acc: (S, S)) -> S {
    acc.0 + acc.1
}

/// Central moments through the centered recurrence
///
/// ```text
/// X_n - m_n = (X_j - m_j) + (X'_k - m_k) + D_n(j),   D_n(j) = j + m_j + m_k - m_n,
/// v_n  = (1/n) sum_j [v_j + v_k + D^2]
/// k3_n = (1/n) sum_j [k3_j + k3_k + 3 D (v_j + v_k) + D^3]
/// ```
///
/// which never forms the large raw moments and so avoids the cancellation
/// in `t - 3ms + 2m^3`. The convolution sums are recomputed per `n`.
fn central_rows<S: RecScalar>(n_max: usize) -> Vec<MomentRow> {
    let zero = S::zero();
    let two = S::from_f64(2.0).unwrap();
    let three = S::from_f64(3.0).unwrap();
    let mut m = vec![zero; n_max + 1];
    let mut v = vec![zero; n_max + 1];
    let mut k3 = vec![zero; n_max + 1];
    let mut mean_prefix = (zero, zero);
    let mut var_prefix = (zero, zero);
    let mut k3_prefix = (zero, zero);
    let idx: Vec<S> = (0..=n_max).map(S::from_usize_exact).collect();
    for n in 1..=n_max {
        S::accumulate(&mut mean_prefix, m[n - 1]);
        S::accumulate(&mut var_prefix, v[n - 1]);
        S::accumulate(&mut k3_prefix, k3[n - 1]);
        let half_pairs = S::from_usize_exact(n * (n - 1) / 2);
        let mn = (half_pairs + two * total(mean_prefix)).div_int(n);
        m[n] = mn;
        let mut d2 = (zero, zero);
        let mut d3 = (zero, zero);
        let mut dv = (zero, zero);
        for j in 0..n {
            let k = n - 1 - j;
            let d = idx[j] + m[j] + m[k] - mn;
            let dd = d * d;
            S::accumulate(&mut d2, dd);
            S::accumulate(&mut d3, dd * d);
            S::accumulate(&mut dv, d * (v[j] + v[k]));
        }
        v[n] = (two * total(var_prefix) + total(d2)).div_int(n);
        k3[n] = (two * total(k3_prefix) + three * total(dv) + total(d3)).div_int(n);
    }
    (0..=n_max)
        .map(|n| {
            let (mean, var, c3) = (m[n], v[n], k3[n]);
            let second = var + mean * mean;
            let third = c3 + three * mean * var + mean * mean * mean;
            MomentRow {
                n,
                mean: mean.as_f64(),
                second: second.as_f64(),
                third: third.as_f64(),
                variance: var.as_f64(),
                kappa3: c3.as_f64(),
                sigma2_n: (n > 0).then(|| var.div_int(n).div_int(n).as_f64()),
            }
        })
        .collect()
}

/// Deviations of the computed moments from their leading asymptotics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub n: usize,
    /// `m_n - n ln n - (gamma - 2) n`
    pub mean_residual: f64,
    /// `n (sigma^2 - ln n / n - v_n / n^2)`
    pub variance_residual: f64,
    /// `k3_n / n^3 - M3`
    pub cumulant_residual: f64,
}

impl Residual {
    pub fn csv_header() -> &'static str {
        "mean_residual,variance_residual,cumulant_residual"
    }

    pub fn csv_fields(&self) -> String {
        format!(
            "{},{},{}",
            self.mean_residual, self.variance_residual, self.cumulant_residual
        )
    }
}

/// Residuals at each requested `n >= 1`; `m3` is the limit third moment.
pub fn asymptotic_residuals(table: &MomentTable, ns: &[usize], m3: f64) -> Result<Vec<Residual>> {
    ns.iter()
        .map(|&n| {
            if n == 0 {
                return Err(Error::Domain("residuals need n >= 1".into()));
            }
            let row = table.row(n)?;
            let nf = n as f64;
            let ln = nf.ln();
            Ok(Residual {
                n,
                mean_residual: row.mean - nf * ln - (EULER_GAMMA - 2.0) * nf,
                variance_residual: nf * (SIGMA2 - ln / nf - row.variance / (nf * nf)),
                cumulant_residual: row.kappa3 / (nf * nf * nf) - m3,
            })
        })
        .collect()
}

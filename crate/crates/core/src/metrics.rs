//! Probability metrics and the convergence-rate series.
//!
//! For `V`, `W` with equal first and second moments and finite third
//! moments, the Zolotarev metric is sandwiched as
//!
//! ```text
//! |E V^3 - E W^3| / 6  <=  zeta_3(V, W)  <=  (|V|_3^2 + |V|_3 |W|_3 + |W|_3^2) l_3(V, W) / 6
//! ```
//!
//! where `l_p` is the minimal `L_p` distance over couplings. The supremum
//! defining `zeta_3` is never evaluated directly; only these two bounds are.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::limit::{simulate_limit, simulate_yn, LimitConstants};
use crate::recurrence::MomentTable;
use crate::sample_stats::SampleSummary;
use crate::summation::sum;

/// Minimal `l_p` distance between two equal-size samples, via the quantile
/// (sorted order) coupling.
pub fn lp_distance_empirical(a: &[f64], b: &[f64], p: f64) -> Result<f64> {
    let (sa, sb) = sorted_pair(a, b)?;
    if p.is_nan() || p < 1.0 {
        return Err(Error::Domain(format!("l_p needs p >= 1, got {p}")));
    }
    let mean = sum(sa.iter().zip(&sb).map(|(x, y)| (x - y).abs().powf(p))) / sa.len() as f64;
    Ok(mean.powf(1.0 / p))
}

fn sorted_pair(a: &[f64], b: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("l_p distance of an empty sample".into()));
    }
    if a.len() != b.len() {
        return Err(Error::Domain(format!(
            "l_p distance needs equal sample sizes, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_unstable_by(f64::total_cmp);
    sb.sort_unstable_by(f64::total_cmp);
    Ok((sa, sb))
}

/// Lower bound `|E V^3 - E W^3| / 6`; inputs are third moments of
/// standardized variables.
pub fn zeta3_lower_bound(third_moment_v: f64, third_moment_w: f64) -> f64 {
    (third_moment_v - third_moment_w).abs() / 6.0
}

/// Upper bound `(a^2 + a b + b^2) l_3 / 6` from the `L_3` norms `a`, `b`.
pub fn zeta3_upper_bound(norm3_v: f64, norm3_w: f64, l3: f64) -> Result<f64> {
    if !(norm3_v >= 0.0 && norm3_w >= 0.0 && l3 >= 0.0) {
        return Err(Error::Domain(format!(
            "zeta_3 upper bound needs nonnegative inputs, got ({norm3_v}, {norm3_w}, {l3})"
        )));
    }
    Ok(upper_prefactor(norm3_v, norm3_w) * l3)
}

fn upper_prefactor(a: f64, b: f64) -> f64 {
    (a * a + a * b + b * b) / 6.0
}

/// Monte Carlo settings for the upper-bound leg of [`rate_series`]. The
/// finite-`n` sample and the limit pool share `samples` so the quantile
/// coupling pairs them one to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McConfig {
    pub samples: usize,
    pub generations: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    pub n: usize,
    pub sigma2_n: f64,
    /// `zeta_3` lower bound from exact moments.
    pub lower_bound: f64,
    /// `(M3 / (4 sigma^5)) ln n / n`
    pub predicted: f64,
    pub upper_bound_estimate: Option<f64>,
    pub upper_se: Option<f64>,
}

impl RatePoint {
    pub fn csv_header() -> &'static str {
        "n,sigma2_n,lower_bound,predicted,upper_bound_estimate,upper_se"
    }

    pub fn csv_line(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{}",
            self.n,
            self.sigma2_n,
            self.lower_bound,
            self.predicted,
            opt(self.upper_bound_estimate),
            opt(self.upper_se)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSeries {
    pub points: Vec<RatePoint>,
    /// `(n, reason)` for requested sizes that cannot be standardized.
    pub excluded: Vec<(usize, String)>,
}

/// The standardized third-moment lower bound at `n`.
pub fn lower_bound_at(n: usize, table: &MomentTable, constants: &LimitConstants) -> Result<f64> {
    let row = table.row(n)?;
    let sigma2_n = row
        .sigma2_n
        .filter(|s| *s > 0.0)
        .ok_or_else(|| Error::Domain(format!("sigma^2({n}) = 0; cannot standardize")))?;
    let nf = n as f64;
    let finite = row.kappa3 / (nf * nf * nf * sigma2_n.powf(1.5));
    let limit = constants.m3 / constants.sigma2.powf(1.5);
    Ok(zeta3_lower_bound(finite, limit))
}

/// Lemma-style sandwich bounds and the predicted leading term for each `n`.
pub fn rate_series(
    n_values: &[usize],
    table: &MomentTable,
    constants: &LimitConstants,
    mc: Option<&McConfig>,
) -> Result<RateSeries> {
    let mut excluded = Vec::new();
    let mut usable = Vec::new();
    for &n in n_values {
        if n <= 1 {
            excluded.push((
                n,
                format!("n = {n}: zero variance, standardization undefined"),
            ));
        } else {
            table.row(n)?;
            usable.push(n);
        }
    }

    let limit_sample = match mc {
        Some(cfg) if !usable.is_empty() => {
            let sigma = constants.sigma();
            let pool = simulate_limit(cfg.samples, cfg.generations, cfg.seed)?;
            Some(
                pool.values
                    .into_iter()
                    .map(|y| y / sigma)
                    .collect::<Vec<f64>>(),
            )
        }
        _ => None,
    };

    let points = usable
        .par_iter()
        .map(|&n| {
            let row = table.row(n)?;
            let sigma2_n = row.sigma2_n.unwrap_or(0.0);
            let nf = n as f64;
            let lower_bound = lower_bound_at(n, table, constants)?;
            let predicted = constants.rate_constant() * nf.ln() / nf;
            let (upper, se) = match (mc, &limit_sample) {
                (Some(cfg), Some(xs)) => {
                    let ys = simulate_yn(n, cfg.samples, table, cfg.seed)?;
                    let sd = sigma2_n.sqrt();
                    let zs: Vec<f64> = ys.into_iter().map(|y| y / sd).collect();
                    let (u, s) = upper_estimate(&zs, xs)?;
                    (Some(u), Some(s))
                }
                _ => (None, None),
            };
            Ok(RatePoint {
                n,
                sigma2_n,
                lower_bound,
                predicted,
                upper_bound_estimate: upper,
                upper_se: se,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateSeries { points, excluded })
}

/// Upper bound from samples and its delta-method standard error, treating
/// the coupled differences and the norm summands as i.i.d. means.
pub fn upper_estimate(v: &[f64], w: &[f64]) -> Result<(f64, f64)> {
    let (sv, sw) = sorted_pair(v, w)?;
    let cubes: Vec<f64> = sv
        .iter()
        .zip(&sw)
        .map(|(x, y)| (x - y).abs().powi(3))
        .collect();
    let (l3, l3_se) = cube_root_of_mean(&cubes);
    let abs_v: Vec<f64> = v.iter().map(|x| x.abs().powi(3)).collect();
    let abs_w: Vec<f64> = w.iter().map(|x| x.abs().powi(3)).collect();
    let (a, a_se) = cube_root_of_mean(&abs_v);
    let (b, b_se) = cube_root_of_mean(&abs_w);
    let prefactor = upper_prefactor(a, b);
    let upper = zeta3_upper_bound(a, b, l3)?;
    let d_a = l3 * (2.0 * a + b) / 6.0;
    let d_b = l3 * (a + 2.0 * b) / 6.0;
    let se = ((prefactor * l3_se).powi(2) + (d_a * a_se).powi(2) + (d_b * b_se).powi(2)).sqrt();
    Ok((upper, se))
}

/// `(mean x)^(1/3)` and its delta-method standard error.
fn cube_root_of_mean(xs: &[f64]) -> (f64, f64) {
    let s = SampleSummary::of(xs);
    let root = s.mean.cbrt();
    let se = if root > 0.0 {
        s.mean_se / (3.0 * root * root)
    } else {
        0.0
    };
    (root, se)
}

/// Least-squares fit of `L_n n / ln n = intercept + slope / ln n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub intercept: f64,
    pub slope: f64,
    /// `M3 / (4 sigma^5)`
    pub predicted_constant: f64,
    pub relative_error: f64,
    pub points: usize,
}

pub fn fit_rate_constant(points: &[RatePoint], constants: &LimitConstants) -> Result<RateFit> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.n >= 2)
        .map(|p| {
            let ln = (p.n as f64).ln();
            (1.0 / ln, p.lower_bound * p.n as f64 / ln)
        })
        .collect();
    if usable.len() < 2 {
        return Err(Error::Domain("rate fit needs at least two points".into()));
    }
    let (intercept, slope) = least_squares(&usable)?;
    let predicted_constant = constants.rate_constant();
    Ok(RateFit {
        intercept,
        slope,
        predicted_constant,
        relative_error: (intercept - predicted_constant).abs() / predicted_constant,
        points: usable.len(),
    })
}

/// Ordinary least squares `y = a + b x`; returns `(a, b)`.
fn least_squares(xy: &[(f64, f64)]) -> Result<(f64, f64)> {
    let n = xy.len() as f64;
    let mx = sum(xy.iter().map(|p| p.0)) / n;
    let my = sum(xy.iter().map(|p| p.1)) / n;
    let sxx = sum(xy.iter().map(|p| (p.0 - mx).powi(2)));
    let sxy = sum(xy.iter().map(|p| (p.0 - mx) * (p.1 - my)));
    if sxx == 0.0 {
        return Err(Error::Domain(
            "rate fit needs at least two distinct n".into(),
        ));
    }
    let slope = sxy / sxx;
    Ok((my - slope * mx, slope))
}

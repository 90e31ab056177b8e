//! Moment summaries of Monte Carlo samples, with large-sample standard errors.

use serde::Serialize;

use crate::summation::sum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleSummary {
    pub count: usize,
    pub mean: f64,
    pub mean_se: f64,
    /// Central second moment (divisor `count`).
    pub variance: f64,
    pub variance_se: f64,
    /// Central third moment.
    pub third_central: f64,
    pub third_central_se: f64,
    /// `E|x|^3` about zero.
    pub abs_third: f64,
}

impl SampleSummary {
    pub fn of(xs: &[f64]) -> Self {
        assert!(!xs.is_empty(), "summary of an empty sample");
        let count = xs.len();
        let nf = count as f64;
        let mean = sum(xs.iter().copied()) / nf;
        let central = |r: i32| sum(xs.iter().map(|&x| (x - mean).powi(r))) / nf;
        let (m2, m3, m4, m6) = (central(2), central(3), central(4), central(6));
        // delta-method variances of the plug-in central moments
        let var_m2 = (m4 - m2 * m2).max(0.0);
        let var_m3 = (m6 - m3 * m3 - 6.0 * m4 * m2 + 9.0 * m2 * m2 * m2).max(0.0);
        Self {
            count,
            mean,
            mean_se: (m2 / nf).sqrt(),
            variance: m2,
            variance_se: (var_m2 / nf).sqrt(),
            third_central: m3,
            third_central_se: (var_m3 / nf).sqrt(),
            abs_third: sum(xs.iter().map(|x| x.abs().powi(3))) / nf,
        }
    }

    /// `(E|x|^3)^(1/3)`.
    pub fn norm3(&self) -> f64 {
        self.abs_third.cbrt()
    }
}

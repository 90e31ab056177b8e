//! Float-mode moments against the double-double reference run.

use insitu::recurrence::{moments_exact, MomentMode};

#[test]
fn float_matches_extended_at_spot_sizes() {
    let float = moments_exact(10_000, MomentMode::Float).unwrap();
    let ext = moments_exact(10_000, MomentMode::Extended).unwrap();
    for n in [1_000usize, 10_000] {
        let (f, e) = (float.rows()[n], ext.rows()[n]);
        for (a, b) in [
            (f.mean, e.mean),
            (f.variance, e.variance),
            (f.kappa3, e.kappa3),
        ] {
            assert!(((a - b) / b).abs() <= 1e-12, "n={n}: {a} vs {b}");
        }
    }
}

#[test]
fn mean_closed_form_at_scale() {
    // m_n = (n+1) H_n - 2n
    let table = moments_exact(30_000, MomentMode::Float).unwrap();
    let mut h = 0.0f64;
    let mut comp = 0.0f64;
    for n in 1..=30_000usize {
        let (s, e) = insitu::summation::two_sum(h, 1.0 / n as f64);
        h = s;
        comp += e;
        let closed = (n as f64 + 1.0) * (h + comp) - 2.0 * n as f64;
        let got = table.rows()[n].mean;
        assert!(
            (got - closed).abs() <= 1e-12 * closed.abs().max(1.0),
            "n={n}"
        );
    }
}

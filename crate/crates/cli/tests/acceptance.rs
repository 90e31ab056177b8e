//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any failed.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use rand::Rng;

use insitu::algorithm::{cost_distribution_bruteforce, permute_in_place, Permutation};
use insitu::limit::{limit_constants, simulate_limit, LimitConstants};
use insitu::metrics::{fit_rate_constant, lower_bound_at, rate_series, McConfig};
use insitu::recurrence::{
    asymptotic_residuals, exact_distribution, moments_exact, MomentMode, MomentTable,
};
use insitu::sample_stats::SampleSummary;
use insitu::streams::{stream, Domain};

/// Twelve log-spaced sizes from 1e3 to 3e4, as `--grid 1000:30000:12` gives.
const GRID: [usize; 12] = [
    1000, 1362, 1856, 2528, 3445, 4693, 6393, 8709, 11865, 16164, 22021, 30000,
];
const SEED: u64 = 1;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Shared {
    table: MomentTable,
    pass_time: Duration,
    constants: LimitConstants,
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Spread of a sequence relative to its largest magnitude.
fn relative_spread(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = xs.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    (max - min) / scale
}

fn c1() -> Outcome {
    let start = Instant::now();
    for n in 1..=8 {
        let brute = cost_distribution_bruteforce(n).map_err(|e| e.to_string())?;
        let exact = exact_distribution(n).map_err(|e| e.to_string())?;
        if brute != exact {
            return Err(format!("laws differ at n = {n}"));
        }
    }
    let t = start.elapsed();
    check(
        t < Duration::from_secs(10),
        format!("n = 1..8 identical, {:.2} s", t.as_secs_f64()),
    )
}

fn c2() -> Outcome {
    let q = |a: i64, b: i64| BigRational::new(a.into(), b.into());
    let table = moments_exact(12, MomentMode::Rational).map_err(|e| e.to_string())?;
    let exact = table.exact().ok_or("rational table has no exact rows")?;
    let e3 = &exact[3];
    if (
        e3.mean.clone(),
        e3.variance(),
        e3.kappa3(),
        e3.third.clone(),
    ) != (q(4, 3), q(8, 9), q(11, 27), q(19, 3))
    {
        return Err("n = 3 moments are not 4/3, 8/9, 11/27, 19/3".into());
    }
    for (n, e) in exact.iter().enumerate() {
        let law = exact_distribution(n.max(1)).map_err(|e| e.to_string())?;
        let (m1, m2, m3) = if n == 0 {
            (q(0, 1), q(0, 1), q(0, 1))
        } else {
            (law.raw_moment(1), law.raw_moment(2), law.raw_moment(3))
        };
        if (e.mean.clone(), e.second.clone(), e.third.clone()) != (m1, m2, m3) {
            return Err(format!("moment table disagrees with the law at n = {n}"));
        }
    }
    Ok("n = 3 exact, table equals law-derived moments for n <= 12".into())
}

fn c3(s: &Shared) -> Outcome {
    let r = asymptotic_residuals(&s.table, &GRID, s.constants.m3).map_err(|e| e.to_string())?;
    let ratios: Vec<f64> = r
        .iter()
        .map(|r| r.mean_residual / (r.n as f64).ln())
        .collect();
    let spread = relative_spread(&ratios);
    let t = s.pass_time.as_secs_f64();
    check(
        spread < 0.20 && t < 60.0,
        format!(
            "r_n/ln n from {:.4} to {:.4}, spread {:.2}% (< 20%), moment pass {:.1} s (< 60 s)",
            ratios[0],
            ratios[ratios.len() - 1],
            100.0 * spread,
            t
        ),
    )
}

fn c4(s: &Shared) -> Outcome {
    let r = asymptotic_residuals(&s.table, &GRID, s.constants.m3).map_err(|e| e.to_string())?;
    let v: Vec<f64> = r.iter().map(|r| r.variance_residual).collect();
    let spread = relative_spread(&v);
    check(
        spread < 0.25,
        format!(
            "n(sigma^2 - ln n/n - sigma^2(n)) from {:.4} to {:.4}, spread {:.2}% (< 25%)",
            v[0],
            v[v.len() - 1],
            100.0 * spread
        ),
    )
}

fn c5(s: &Shared) -> Outcome {
    let m3 = s.constants.m3;
    let r = asymptotic_residuals(&s.table, &GRID, m3).map_err(|e| e.to_string())?;
    let last = r.last().ok_or("empty grid")?;
    let rel = last.cumulant_residual.abs() / m3;
    let scaled: Vec<f64> = r
        .iter()
        .map(|r| r.n as f64 * r.cumulant_residual.abs())
        .collect();
    let max = scaled.iter().copied().fold(0.0, f64::max);
    // bounded: the scaled residual never exceeds twice its value at the grid start
    let bounded = max <= 2.0 * scaled[0];
    check(
        rel <= 0.01 && bounded,
        format!(
            "|k3/n^3 - M3|/M3 = {:.2e} at n = 3e4 (<= 1%), n|k3/n^3 - M3| in [{:.4}, {:.4}], max <= 2x start",
            rel,
            scaled.iter().copied().fold(f64::INFINITY, f64::min),
            max
        ),
    )
}

fn c6(s: &Shared) -> Outcome {
    let mean = s.constants.toll_mean.abs();
    let second = (s.constants.toll_second_moment_identity
        - (2.0 - std::f64::consts::PI.powi(2) / 6.0))
        .abs();
    check(
        mean <= 1e-8 && second <= 1e-8,
        format!("|int C| = {mean:.1e}, |3 int C^2 - sigma^2| = {second:.1e} (<= 1e-8)"),
    )
}

fn c7(s: &Shared) -> Outcome {
    let pool = simulate_limit(1_000_000, 50, SEED).map_err(|e| e.to_string())?;
    let st = SampleSummary::of(&pool.values);
    let z_mean = st.mean / st.mean_se;
    let z_var = (st.variance - s.constants.sigma2) / st.variance_se;
    let z_third = (st.third_central - s.constants.m3) / st.third_central_se;
    check(
        z_mean.abs() <= 3.0 && z_var.abs() <= 3.0 && z_third.abs() <= 3.0,
        format!(
            "mean {:.5} ({z_mean:+.2} se), variance {:.5} ({z_var:+.2} se), third {:.5} ({z_third:+.2} se)",
            st.mean, st.variance, st.third_central
        ),
    )
}

fn c8(s: &Shared) -> Outcome {
    let series = rate_series(&GRID, &s.table, &s.constants, None).map_err(|e| e.to_string())?;
    let fit = fit_rate_constant(&series.points, &s.constants).map_err(|e| e.to_string())?;
    let n = 10_000usize;
    let l1 = lower_bound_at(n, &s.table, &s.constants).map_err(|e| e.to_string())?;
    let l2 = lower_bound_at(2 * n, &s.table, &s.constants).map_err(|e| e.to_string())?;
    let nf = n as f64;
    let predicted = (2.0 * nf).ln() / (2.0 * nf.ln());
    let ratio_err = ((l2 / l1) - predicted).abs() / predicted;
    check(
        fit.relative_error <= 0.10 && ratio_err <= 0.10,
        format!(
            "intercept {:.4} vs M3/(4 sigma^5) = {:.4} ({:.1}% off), L_2n/L_n = {:.4} vs {:.4} ({:.1}% off)",
            fit.intercept,
            fit.predicted_constant,
            100.0 * fit.relative_error,
            l2 / l1,
            predicted,
            100.0 * ratio_err
        ),
    )
}

fn c9(s: &Shared) -> Outcome {
    let ns = [GRID[0], GRID[4], GRID[8], GRID[11]];
    let mc = McConfig {
        samples: 50_000,
        generations: 30,
        seed: SEED,
    };
    let series = rate_series(&ns, &s.table, &s.constants, Some(&mc)).map_err(|e| e.to_string())?;
    let mut worst = f64::INFINITY;
    for p in &series.points {
        let (u, se) = p
            .upper_bound_estimate
            .zip(p.upper_se)
            .ok_or_else(|| format!("no Monte Carlo estimate at n = {}", p.n))?;
        worst = worst.min(u + 3.0 * se - p.lower_bound);
    }
    check(
        worst >= 0.0 && series.points.len() == ns.len(),
        format!(
            "{} points, min(upper + 3 se - lower) = {worst:.3e} (>= 0)",
            series.points.len()
        ),
    )
}

fn c10() -> Outcome {
    const MAX_N: usize = 100_000;
    let mut rng = stream(SEED, Domain::Instances, 0);
    for trial in 0..1000 {
        let n = if trial == 0 {
            MAX_N
        } else {
            rng.random_range(1..=MAX_N)
        };
        let p = Permutation::random(n, &mut rng);
        let original: Vec<u64> = (0..n as u64).map(|i| i.wrapping_mul(0x9E37_79B9)).collect();
        let mut x = original.clone();
        let rec = permute_in_place(&mut x, &p).map_err(|e| e.to_string())?;
        let expected: Vec<u64> = p.as_zero_based().iter().map(|&j| original[j]).collect();
        let bound = (n * (n - 1) / 2) as u64;
        if x != expected {
            return Err(format!("wrong post-state at trial {trial} (n = {n})"));
        }
        if rec.value_writes != n as u64 || rec.search_steps > bound {
            return Err(format!(
                "cost contract broken at trial {trial} (n = {n}): {rec:?}"
            ));
        }
    }
    for n in (1..=64).chain([1000, 10_000]) {
        let mut x: Vec<usize> = (0..n).collect();
        let rec =
            permute_in_place(&mut x, &Permutation::cyclic_shift(n)).map_err(|e| e.to_string())?;
        if rec.search_steps != (n * (n - 1) / 2) as u64 {
            return Err(format!(
                "cyclic shift at n = {n} costs {}",
                rec.search_steps
            ));
        }
    }
    Ok("1000 random instances (n <= 1e5) correct, cyclic shift attains n(n-1)/2".into())
}

fn run_cli(args: &[&str], threads: &str, dir: &Path) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_insitu"))
        .args(args)
        .args(["--threads", threads])
        .current_dir(dir)
        .env_clear()
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "`insitu {}` exited with {}: {}",
            args.join(" "),
            out.status,
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok(out.stdout)
}

fn c11() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    std::fs::write(dir.path().join("perm.txt"), "4 1 6 2 5 3\n").map_err(|e| e.to_string())?;
    let cases: [&[&str]; 12] = [
        &["dist", "--n", "7"],
        &["dist", "--n", "7", "--format", "csv"],
        &["moments", "--nmax", "400"],
        &["moments", "--nmax", "40", "--exact", "--format", "json"],
        &["algo", "--perm-file", "perm.txt"],
        &["brute", "--n", "6"],
        &[
            "limit",
            "--pool",
            "50000",
            "--generations",
            "12",
            "--seed",
            "7",
        ],
        &[
            "limit",
            "--pool",
            "20000",
            "--generations",
            "5",
            "--format",
            "lines",
        ],
        &[
            "rate",
            "--grid",
            "100:3000:4",
            "--trials",
            "8000",
            "--generations",
            "12",
        ],
        &[
            "sample", "--kind", "cost", "--n", "300", "--trials", "3000", "--seed", "9",
        ],
        &[
            "sample", "--kind", "yn", "--n", "2000", "--trials", "5000", "--seed", "9",
        ],
        &[
            "sample", "--n", "500", "--trials", "4000", "--format", "binary", "--out", "yn.bin",
        ],
    ];
    for args in cases {
        let mut outputs = Vec::new();
        for threads in ["1", "1", "4"] {
            let mut bytes = run_cli(args, threads, dir.path())?;
            if args.contains(&"--out") {
                bytes = std::fs::read(dir.path().join("yn.bin")).map_err(|e| e.to_string())?;
                bytes.extend(
                    std::fs::read(dir.path().join("yn.bin.meta.json"))
                        .map_err(|e| e.to_string())?,
                );
            }
            outputs.push(bytes);
        }
        if outputs[0].is_empty() || outputs.iter().any(|o| o != &outputs[0]) {
            return Err(format!("`insitu {}` is not reproducible", args.join(" ")));
        }
    }
    Ok(format!(
        "{} invocations byte-identical across reruns and --threads 1/4",
        cases.len()
    ))
}

fn main() {
    let start = Instant::now();
    let constants = limit_constants(1e-10).expect("limit constants");
    let t = Instant::now();
    let table = moments_exact(30_000, MomentMode::Float).expect("moment pass");
    let shared = Shared {
        table,
        pass_time: t.elapsed(),
        constants,
    };

    let criteria: Vec<Criterion> = vec![
        ("keystone equivalence", Box::new(c1)),
        ("exact small-n moments", Box::new(c2)),
        ("mean expansion", Box::new(|| c3(&shared))),
        ("variance expansion", Box::new(|| c4(&shared))),
        ("third cumulant limit", Box::new(|| c5(&shared))),
        ("quadrature identities", Box::new(|| c6(&shared))),
        ("limit pool moments", Box::new(|| c7(&shared))),
        ("rate and constant", Box::new(|| c8(&shared))),
        ("sandwich consistency", Box::new(|| c9(&shared))),
        ("algorithm contract", Box::new(c10)),
        ("reproducibility", Box::new(c11)),
    ];

    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail} [{secs:.1} s]", k + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {}: {name}: {detail} [{secs:.1} s]", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failures} failed, {:.1} s",
        criteria.len() - failures,
        start.elapsed().as_secs_f64()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}

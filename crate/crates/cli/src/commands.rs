use std::fmt::Write as _;

use anyhow::{bail, ensure, Context, Result};
use serde_json::{json, Value};

use insitu::algorithm::{cost_distribution_bruteforce, cost_sample, permute_in_place, Permutation};
use insitu::limit::{limit_constants, simulate_limit, simulate_yn};
use insitu::metrics::{fit_rate_constant, rate_series, McConfig, RatePoint};
use insitu::recurrence::{
    asymptotic_residuals, exact_distribution, moments_exact, rational_string, MomentMode,
    MomentTable, Residual,
};
use insitu::sample_stats::SampleSummary;

use crate::config::{parse_grid, Command, Format, RunConfig, SampleKind};
use crate::output::{comment_header, meta, Artifact};

const DEFAULT_NMAX: usize = 1000;
const DEFAULT_RATE_GRID: &str = "1000:30000:12";
const DEFAULT_SAMPLE_TRIALS: usize = 10_000;

pub fn dispatch(command: Command, config: &RunConfig) -> Result<Artifact> {
    let format = config.format_for(command);
    let meta = meta(command, config);
    match command {
        Command::Dist => dist(config, format, meta),
        Command::Moments => moments(config, format, meta),
        Command::Algo => algo(config, format, meta),
        Command::Brute => brute(config, format, meta),
        Command::Limit => limit(config, format, meta),
        Command::Rate => rate(config, format, meta),
        Command::Sample => sample(config, format, meta),
    }
}

fn unsupported(command: Command, format: Format) -> anyhow::Error {
    anyhow::anyhow!(
        "format {format:?} is not available for `{}`",
        command.name()
    )
}

fn dist(config: &RunConfig, format: Format, meta: Value) -> Result<Artifact> {
    let law = exact_distribution(config.require_n()?)?;
    match format {
        Format::Json => {
            let mut value = law.to_json();
            value["meta"] = meta;
            Ok(Artifact::json(&value))
        }
        Format::Csv => {
            let mut s = comment_header(&meta);
            s.push_str("cost,probability\n");
            for (k, p) in law.probabilities() {
                writeln!(s, "{k},{}", rational_string(p))?;
            }
            Ok(Artifact::text(s))
        }
        other => Err(unsupported(Command::Dist, other)),
    }
}

fn moments(config: &RunConfig, format: Format, meta: Value) -> Result<Artifact> {
    let grid = config.grid_values()?;
    let n_max = match (&grid, config.nmax) {
        (Some(g), None) => *g.iter().max().context("empty grid")?,
        (_, Some(n)) => n,
        (None, None) => DEFAULT_NMAX,
    };
    let mode = if config.exact {
        MomentMode::Rational
    } else {
        MomentMode::Float
    };
    let table = moments_exact(n_max, mode)?;
    let rows: Vec<usize> = match grid {
        Some(g) => {
            if let Some(&n) = g.iter().find(|&&n| n > n_max) {
                bail!("grid point {n} exceeds --nmax {n_max}");
            }
            g
        }
        None => (0..=n_max).collect(),
    };
    let m3 = limit_constants(config.tol)?.m3;
    let positive: Vec<usize> = rows.iter().copied().filter(|&n| n >= 1).collect();
    let residuals = asymptotic_residuals(&table, &positive, m3)?;
    let residual_for = |n: usize| residuals.iter().find(|r| r.n == n);

    match format {
        Format::Csv => {
            let mut s = comment_header(&meta);
            writeln!(
                s,
                "{},{}",
                MomentTable::csv_header(),
                Residual::csv_header()
            )?;
            for &n in &rows {
                let tail = residual_for(n)
                    .map(Residual::csv_fields)
                    .unwrap_or_else(|| ",,".into());
                writeln!(s, "{},{tail}", table.csv_line(n)?)?;
            }
            Ok(Artifact::text(s))
        }
        Format::Json => {
            let out: Vec<Value> = rows
                .iter()
                .map(|&n| {
                    let row = table.row(n)?;
                    let mut v = json!({
                        "n": n,
                        "mean": row.mean,
                        "variance": row.variance,
                        "kappa3": row.kappa3,
                        "sigma2_n": row.sigma2_n,
                    });
                    if let Some(exact) = table.exact() {
                        let e = &exact[n];
                        v["exact"] = json!({
                            "mean": rational_string(&e.mean),
                            "variance": rational_string(&e.variance()),
                            "kappa3": rational_string(&e.kappa3()),
                        });
                    }
                    if let Some(r) = residual_for(n) {
                        v["mean_residual"] = json!(r.mean_residual);
                        v["variance_residual"] = json!(r.variance_residual);
                        v["cumulant_residual"] = json!(r.cumulant_residual);
                    }
                    Ok(v)
                })
                .collect::<Result<_>>()?;
            Ok(Artifact::json(&json!({
                "meta": meta,
                "mode": mode,
                "M3": m3,
                "rows": out,
            })))
        }
        other => Err(unsupported(Command::Moments, other)),
    }
}

fn algo(config: &RunConfig, format: Format, meta: Value) -> Result<Artifact> {
    let text = match &config.perm_file {
        Some(path) => std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?,
        None => std::io::read_to_string(std::io::stdin()).context("cannot read stdin")?,
    };
    let p: Permutation = text.parse()?;
    let mut values: Vec<usize> = (1..=p.len()).collect();
    let rec = permute_in_place(&mut values, &p)?;
    match format {
        Format::Json => Ok(Artifact::json(&json!({
            "meta": meta,
            "n": p.len(),
            "output": values,
            "search_steps": rec.search_steps,
            "value_writes": rec.value_writes,
            "cycle_leaders": rec.cycle_leaders,
        }))),
        Format::Lines => {
            let mut s = comment_header(&meta);
            writeln!(s, "# search_steps={}", rec.search_steps)?;
            writeln!(s, "# value_writes={}", rec.value_writes)?;
            writeln!(s, "# cycle_leaders={}", rec.cycle_leaders)?;
            for v in values {
                writeln!(s, "{v}")?;
            }
            Ok(Artifact::text(s))
        }
        other => Err(unsupported(Command::Algo, other)),
    }
}

fn brute(config: &RunConfig, format: Format, meta: Value) -> Result<Artifact> {
    let n = config.require_n()?;
    let brute = cost_distribution_bruteforce(n)?;
    let recurrence = exact_distribution(n)?;
    let pass = brute == recurrence;
    let verdict = if pass {
        format!(
            "PASS: brute-force law equals recurrence law (support {}..{})",
            brute.min_cost(),
            brute.max_cost()
        )
    } else {
        format!("FAIL: brute-force law differs from recurrence law at n = {n}")
    };
    let mut artifact = match format {
        Format::Lines => Artifact::text(format!("{}{verdict}\n", comment_header(&meta))),
        Format::Json => Artifact::json(&json!({
            "meta": meta,
            "n": n,
            "pass": pass,
            "verdict": verdict,
            "bruteforce": brute.to_json(),
            "recurrence": recurrence.to_json(),
        })),
        other => return Err(unsupported(Command::Brute, other)),
    };
    artifact.failed = !pass;
    Ok(artifact)
}

fn limit(config: &RunConfig, format: Format, meta: Value) -> Result<Artifact> {
    let constants = limit_constants(config.tol)?;
    let pool = simulate_limit(config.pool, config.generations, config.seed)?;
    match format {
        Format::Json => {
            let s = SampleSummary::of(&pool.values);
            Ok(Artifact::json(&json!({
                "meta": meta,
                "constants": constants,
                "identities": {
                    "toll_mean": constants.toll_mean,
                    "three_toll_second_moment": constants.toll_second_moment_identity,
                },
                "rate_constant": constants.rate_constant(),
                "pool": {
                    "size": pool.values.len(),
                    "generations": pool.generation,
                    "summary": s,
                    "norm3": s.norm3(),
                },
            })))
        }
        Format::Lines => Ok(Artifact::text(float_lines(&meta, &pool.values))),
        Format::Binary => Ok(binary(meta, &pool.values)),
        other => Err(unsupported(Command::Limit, other)),
    }
}

fn float_lines(meta: &Value, values: &[f64]) -> String {
    let mut s = comment_header(meta);
    for v in values {
        let _ = writeln!(s, "{v}");
    }
    s
}

fn binary(meta: Value, values: &[f64]) -> Artifact {
    Artifact {
        bytes: values.iter().flat_map(|v| v.to_le_bytes()).collect(),
        sidecar: Some(meta),
        failed: false,
    }
}

fn rate(config: &RunConfig, format: Format, meta: Value) -> Result<Artifact> {
    let grid = parse_grid(config.grid.as_deref().unwrap_or(DEFAULT_RATE_GRID))?;
    let n_max = *grid.iter().max().context("empty grid")?;
    let table = moments_exact(n_max.max(1), MomentMode::Float)?;
    let constants = limit_constants(config.tol)?;
    let mc = config.trials.filter(|&t| t > 0).map(|samples| McConfig {
        samples,
        generations: config.generations,
        seed: config.seed,
    });
    let series = rate_series(&grid, &table, &constants, mc.as_ref())?;
    let fit = (series.points.len() >= 2)
        .then(|| fit_rate_constant(&series.points, &constants))
        .transpose()?;
    match format {
        Format::Csv => {
            let mut s = comment_header(&meta);
            for (n, why) in &series.excluded {
                writeln!(s, "# excluded n={n}: {why}")?;
            }
            writeln!(s, "{}", RatePoint::csv_header())?;
            for p in &series.points {
                writeln!(s, "{}", p.csv_line())?;
            }
            if let Some(f) = fit {
                writeln!(
                    s,
                    "# fit: intercept={},slope={},predicted_constant={},relative_error={},points={}",
                    f.intercept, f.slope, f.predicted_constant, f.relative_error, f.points
                )?;
            }
            Ok(Artifact::text(s))
        }
        Format::Json => Ok(Artifact::json(&json!({
            "meta": meta,
            "points": series.points,
            "excluded": series.excluded,
            "fit": fit,
            "constants": constants,
        }))),
        other => Err(unsupported(Command::Rate, other)),
    }
}

fn sample(config: &RunConfig, format: Format, meta: Value) -> Result<Artifact> {
    let n = config.require_n()?;
    let trials = config.trials.unwrap_or(DEFAULT_SAMPLE_TRIALS);
    ensure!(trials >= 1, "--trials must be at least 1");
    match config.kind {
        SampleKind::Cost => {
            let costs = cost_sample(n, trials, config.seed)?;
            let mut s = comment_header(&meta);
            match format {
                Format::Lines => {}
                Format::Csv => s.push_str("trial,cost\n"),
                other => return Err(unsupported(Command::Sample, other)),
            }
            for (t, c) in costs.iter().enumerate() {
                if format == Format::Csv {
                    write!(s, "{t},")?;
                }
                writeln!(s, "{c}")?;
            }
            Ok(Artifact::text(s))
        }
        SampleKind::Yn => {
            let table = moments_exact(n, MomentMode::Float)?;
            let ys = simulate_yn(n, trials, &table, config.seed)?;
            match format {
                Format::Lines => Ok(Artifact::text(float_lines(&meta, &ys))),
                Format::Csv => {
                    let mut s = comment_header(&meta);
                    s.push_str("trial,yn\n");
                    for (t, y) in ys.iter().enumerate() {
                        writeln!(s, "{t},{y}")?;
                    }
                    Ok(Artifact::text(s))
                }
                Format::Binary => Ok(binary(meta, &ys)),
                other => Err(unsupported(Command::Sample, other)),
            }
        }
    }
}

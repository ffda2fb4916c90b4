//! Execution of one resolved experiment.

use std::time::Instant;

use nstable::catalog;
use nstable::sim::{self, CtbpMethod, OffspringLaw};
use nstable::stats::{self, uniform_grid};
use nstable::transform::{self, bunge_map};
use nstable::{GeneratingDistribution, SimReport, Verdict};
use serde_json::json;

use crate::config::{parse_grid, parse_unit, Command, ExperimentConfig};
use crate::report::{write_columns, Report};
use crate::CliError;

const COMMUTE_TOLERANCE: f64 = 1e-10;

fn required<'a, T>(value: &'a Option<T>, flag: &str, command: Command) -> Result<&'a T, CliError> {
    value.as_ref().ok_or_else(|| CliError::Config(format!("{} requires --{flag}", name(command))))
}

fn name(command: Command) -> String {
    serde_json::to_value(command).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn offspring(config: &ExperimentConfig, index: usize) -> Result<OffspringLaw, CliError> {
    let spec = config
        .counts
        .get(index)
        .ok_or_else(|| CliError::Config(format!("{} requires --N", name(config.command))))?;
    Ok(OffspringLaw::new(catalog::parse_family(spec)?)?)
}

/// Builds records sharing the command name, sample size and seed.
struct Recorder<'a> {
    config: &'a ExperimentConfig,
    start: Instant,
    n: usize,
    reports: Vec<SimReport>,
}

impl Recorder<'_> {
    fn push(&mut self, statistic: &str, value: f64, threshold: f64, pass: bool) {
        self.reports.push(SimReport {
            experiment: name(self.config.command),
            statistic_name: statistic.into(),
            value,
            threshold,
            verdict: Verdict::from_bool(pass),
            n: self.n,
            seed: self.config.seed,
            runtime_ms: self.start.elapsed().as_millis() as u64,
        });
    }
}

/// Runs the experiment; returns the report and optional CSV columns.
pub fn run(config: &ExperimentConfig) -> Result<(Report, Option<Vec<Vec<f64>>>), CliError> {
    config.validate()?;
    let mut rec = Recorder { config, start: Instant::now(), n: 0, reports: Vec::new() };
    let seed = config.seed;
    let (results, columns) = match config.command {
        Command::VerifyStability => {
            let counts = offspring(config, 0)?;
            let law = catalog::parse_law(required(&config.law, "X", config.command)?)?;
            let c = *required(&config.c, "c", config.command)?;
            rec.n = config.n.unwrap_or(100_000);
            let check = sim::random_sum_check(&counts, &law, c, rec.n, seed)?;
            rec.push(check.statistic_name(), check.value(), check.threshold, check.verdict.passed());
            (serde_json::to_value(check).expect("plain data"), None)
        }
        Command::SemigroupScan => {
            let l = catalog::parse_transform(required(&config.transform, "L", config.command)?)?;
            let grid = parse_grid(required(&config.c_grid, "c-grid", config.command)?)?;
            rec.n = grid.len();
            let scan = transform::semigroup_scan(&l, &grid, config.order.unwrap_or(nstable::series::DEFAULT_ORDER));
            rec.push("closed_under_products", f64::from(u8::from(scan.closed_under_products)), 1.0, scan.closed_under_products);
            eprintln!("accepted {:?} ({:?})", scan.accepted, scan.classification);
            (serde_json::to_value(scan).expect("plain data"), None)
        }
        Command::CommuteCheck => {
            let grid = uniform_grid(0.0, 1.0, 101);
            let tol = config.tol.unwrap_or(COMMUTE_TOLERANCE);
            let (gap, pairs) = if config.counts.len() == 2 {
                let (a, b) = (offspring(config, 0)?, offspring(config, 1)?);
                (transform::commute_check(|s| a.pgf(s), |s| b.pgf(s), &grid), 1)
            } else if config.counts.is_empty() {
                let l = catalog::parse_transform(required(&config.transform, "L", config.command)?)?;
                let scales = parse_grid(required(&config.c_grid, "c-grid", config.command)?)?;
                let maps = scales.iter().map(|&c| bunge_map(&l, c)).collect::<Result<Vec<_>, _>>()?;
                let mut worst: f64 = 0.0;
                for a in &maps {
                    for b in &maps {
                        worst = worst.max(transform::commute_check(|s| a.eval(s), |s| b.eval(s), &grid));
                    }
                }
                (worst, maps.len() * maps.len())
            } else {
                return Err(CliError::Config("commute-check takes two --N specs, or --L with --c-grid".into()));
            };
            rec.n = grid.len();
            rec.push("commute_gap", gap, tol, gap < tol);
            (json!({ "gap": gap, "pairs": pairs }), None)
        }
        Command::SimulateBgw => {
            let law = offspring(config, 0)?;
            let k = config.generations.unwrap_or(20);
            rec.n = config.n.unwrap_or(10_000);
            let run = sim::simulate_bgw(&law, k, rec.n, seed)?;
            let finals: Vec<f64> = run.final_sizes().iter().map(|&v| v as f64).collect();
            let (mean, se) = stats::mean_and_stderr(&finals);
            let expected = law.mean().powi(k as i32);
            if expected.is_finite() {
                let z = if se > 0.0 { (mean - expected).abs() / se } else if mean == expected { 0.0 } else { f64::INFINITY };
                rec.push("branching_identity_z", z, 5.0, z < 5.0);
            }
            let overflow = run.overflow_count() as f64 / rec.n as f64;
            rec.push("overflow_fraction", overflow, 1.0, overflow < 1.0);
            let extinct = finals.iter().filter(|&&v| v == 0.0).count() as f64 / rec.n as f64;
            let results = json!({
                "generations": k,
                "mean_final": mean,
                "stderr_final": se,
                "expected_mean": if expected.is_finite() { json!(expected) } else { json!("infinite") },
                "extinct_fraction": extinct,
                "extinction_probability": sim::extinction_probability(&law),
                "overflow_count": run.overflow_count(),
            });
            let columns = run.trajectories.iter().map(|t| t.iter().map(|&v| v as f64).collect()).collect();
            (results, Some(columns))
        }
        Command::SimulateCtbp => {
            let h = catalog::parse_generator(required(&config.generator, "H", config.command)?)?;
            let t = config.t.unwrap_or(1.0);
            rec.n = config.n.unwrap_or(10_000);
            let method = sim::default_ctbp_method(&h);
            let samples = sim::simulate_ctbp(&h, t, rec.n, seed, method)?;
            let capped = samples.iter().filter(|s| s.capped).count();
            let mut results = json!({ "t": t, "method": method, "capped": capped });
            if matches!(h, GeneratingDistribution::ThetaH { .. }) {
                let pops: Vec<f64> = samples.iter().map(|s| s.population).collect();
                let (mean, se) = stats::mean_and_stderr(&pops);
                let expected = ((h.mean() - 1.0) * t).exp();
                let z = (mean - expected).abs() / se.max(f64::MIN_POSITIVE);
                rec.push("mean_growth_z", z, 5.0, z < 5.0);
                results["mean_population"] = json!(mean);
                results["expected_mean"] = json!(expected);
            } else {
                let check = sim::ctbp_limit_check(&h, t, rec.n, seed)?;
                rec.push(&check.statistic_name, check.value, check.threshold, check.verdict.passed());
            }
            let columns = samples
                .iter()
                .map(|s| vec![if method == CtbpMethod::Marginal { s.log_population } else { s.population }])
                .collect();
            (results, Some(columns))
        }
        Command::Sample => {
            let law = catalog::parse_law(required(&config.law, "X", config.command)?)?;
            rec.n = config.n.unwrap_or(100_000);
            let xs = law.sample_n(rec.n, seed);
            let threshold = config.tol.unwrap_or_else(|| stats::gap_threshold(rec.n));
            let (statistic, gap) = match law.laplace_transform(1.0) {
                Some(_) => ("laplace_gap", stats::laplace_gap(&xs, |u| law.laplace_transform(u).unwrap_or(f64::NAN), &uniform_grid(0.0, 10.0, 101))),
                None => ("ecf_gap", stats::ecf_gap(&xs, |u| law.chf(u), &uniform_grid(-10.0, 10.0, 201))),
            };
            rec.push(statistic, gap, threshold, gap < threshold);
            let mut sorted = xs.clone();
            sorted.sort_by(f64::total_cmp);
            let results = json!({ "law": law, "median": sorted[sorted.len() / 2], statistic: gap });
            (results, Some(xs.into_iter().map(|x| vec![x]).collect()))
        }
        Command::LimitCheck => {
            rec.n = config.n.unwrap_or(10_000);
            if let Some(unit) = &config.unit {
                let c_seq = parse_grid(config.c_grid.as_deref().unwrap_or("10,100,1000"))?;
                let report = sim::weak_limit_equivalence(parse_unit(unit)?, &c_seq, rec.n, seed)?;
                rec.push("systematic_gap_monotone", f64::from(u8::from(report.monotone)), 1.0, report.monotone);
                (serde_json::to_value(report).expect("plain data"), None)
            } else if let Some(spec) = &config.generator {
                let h = catalog::parse_generator(spec)?;
                let check = sim::ctbp_limit_check(&h, config.t.unwrap_or(4.0), rec.n, seed)?;
                rec.push(&check.statistic_name, check.value, check.threshold, check.verdict.passed());
                (serde_json::to_value(check).expect("plain data"), None)
            } else {
                let law = offspring(config, 0)?;
                let l = catalog::parse_transform(required(&config.transform, "L", config.command)?)?;
                let k = config.generations.unwrap_or(20);
                let samples = sim::scaling_limit_samples(&law, k, rec.n, seed)?;
                let gap = stats::laplace_gap(&samples.values, |u| l.eval(u), &uniform_grid(0.0, 5.0, 51));
                let threshold = config.tol.unwrap_or_else(|| stats::gap_threshold(rec.n));
                rec.push("laplace_gap", gap, threshold, gap < threshold);
                let results = json!({ "generations": k, "norming": samples.norming, "overflow_count": samples.overflow_count });
                (results, Some(samples.values.into_iter().map(|v| vec![v]).collect()))
            }
        }
    };
    Ok((Report::new(config.clone(), rec.reports, results), columns))
}

/// Runs, prints JSON lines, and writes the requested files.
pub fn execute(config: &ExperimentConfig) -> Result<Report, CliError> {
    let (report, columns) = run(config)?;
    for record in &report.reports {
        println!("{}", record.to_json_line());
    }
    if let Some(path) = &config.out {
        report.write(path)?;
    }
    if let Some(path) = &config.csv {
        let columns = columns.ok_or_else(|| CliError::Config(format!("{} produces no samples for --csv", name(config.command))))?;
        write_columns(path, &columns)?;
    }
    eprintln!(
        "{}: {} (hash {})",
        name(config.command),
        if report.all_passed() { "pass" } else { "fail" },
        report.hash
    );
    Ok(report)
}

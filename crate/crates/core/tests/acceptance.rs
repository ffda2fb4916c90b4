//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Every stochastic criterion uses the fixed master seed [`SEED`].

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nstable::families::chebyshev_t;
use nstable::sim::{
    self, ctbp_limit_check, extinction_frequency, extinction_probability, random_sum_check, scaling_limit_samples,
    simulate_bgw, simulate_ctbp, CtbpMethod, OffspringLaw,
};
use nstable::stats::{self, uniform_grid};
use nstable::transform::{bunge_map, commute_check, poincare_residual, semigroup_scan};
use nstable::{ClosedFormLaw, GeneratingDistribution, LaplaceSpec, PgfFamily, StableExponent};

const SEED: u64 = 42;

struct Outcome {
    pass: bool,
    detail: String,
}

/// Collects sub-checks of one criterion.
#[derive(Default)]
struct Checks {
    pass: bool,
    notes: Vec<String>,
    failures: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Self { pass: true, ..Default::default() }
    }

    fn check(&mut self, ok: bool, what: String) {
        if ok {
            self.notes.push(what);
        } else {
            self.pass = false;
            self.failures.push(what);
        }
    }

    fn within(&mut self, elapsed: Duration, budget_s: f64) {
        let s = elapsed.as_secs_f64();
        self.check(s < budget_s, format!("runtime {s:.1}s < {budget_s}s"));
    }

    fn finish(self) -> Outcome {
        let detail = if self.pass {
            self.notes.join("; ")
        } else {
            format!("FAILED: {}", self.failures.join("; "))
        };
        Outcome { pass: self.pass, detail }
    }
}

fn offspring(f: PgfFamily) -> OffspringLaw {
    OffspringLaw::new(f).expect("valid offspring law")
}

fn geometric_exponential_stability() -> Outcome {
    let start = Instant::now();
    let mut c = Checks::new();
    let n = 100_000;
    let geo = offspring(PgfFamily::geometric(0.5).unwrap());
    let good = random_sum_check(&geo, &ClosedFormLaw::Exponential1, 2.0, n, SEED).unwrap();
    c.check(good.uses_ks && good.stat.ks_pvalue > 1e-3, format!("c=2 KS p={:.3e} > 1e-3", good.stat.ks_pvalue));
    let bad = random_sum_check(&geo, &ClosedFormLaw::Exponential1, 3.0, n, SEED).unwrap();
    c.check(bad.stat.ks_pvalue < 1e-6, format!("c=3 KS p={:.3e} < 1e-6", bad.stat.ks_pvalue));
    c.within(start.elapsed(), 10.0);
    c.finish()
}

fn index_law() -> Outcome {
    let start = Instant::now();
    let mut c = Checks::new();
    let n = 100_000;
    let geo = offspring(PgfFamily::geometric(1.0 / 3.0).unwrap());
    for alpha in [0.75, 1.0, 1.5, 2.0] {
        let law = ClosedFormLaw::linnik(alpha, 1.0).unwrap();
        let scale = 3f64.powf(1.0 / alpha);
        let good = random_sum_check(&geo, &law, scale, n, SEED).unwrap();
        c.check(
            good.verdict.passed(),
            format!("α={alpha} c=3^(1/α) {}={:.3e} (threshold {:.3e})", good.statistic_name(), good.value(), good.threshold),
        );
        if alpha != 1.0 {
            let bad = random_sum_check(&geo, &law, 3.0, n, SEED).unwrap();
            c.check(
                !bad.verdict.passed() && bad.stat.ks_pvalue < 1e-6,
                format!("α={alpha} c=3 rejected, {}={:.3e}, KS p={:.1e}", bad.statistic_name(), bad.value(), bad.stat.ks_pvalue),
            );
        }
    }
    c.within(start.elapsed(), 60.0);
    c.finish()
}

fn poincare_residuals() -> Outcome {
    let mut c = Checks::new();
    let grid = uniform_grid(0.0, 20.0, 2001);
    for scale in [1.5, 2.0, 3.0, 10.0] {
        let phi = PgfFamily::geometric(1.0 / scale).unwrap();
        let r = poincare_residual(|s| phi.eval(s), &LaplaceSpec::Exponential, scale, &grid);
        c.check(r < 1e-10, format!("geometric/exp c={scale}: {r:.1e}"));
    }
    for (p, k) in [(0.5, 2u32), (0.25, 3), (0.8, 5)] {
        let phi = PgfFamily::negative_binomial_km(p, k).unwrap();
        let shape = 1.0 / k as f64;
        let l = LaplaceSpec::gamma(shape, shape).unwrap();
        let r = poincare_residual(|s| phi.eval(s), &l, 1.0 / p, &grid);
        c.check(r < 1e-10, format!("negbin-kM/gamma p={p} k={k}: {r:.1e}"));
    }
    c.finish()
}

fn semigroup_scans() -> Outcome {
    let start = Instant::now();
    let mut c = Checks::new();
    let order = nstable::series::DEFAULT_ORDER;
    let integers: Vec<f64> = (1..=16).map(f64::from).collect();
    let cosh = semigroup_scan(&LaplaceSpec::Cosh, &integers, order);
    c.check(cosh.accepted == [1.0, 4.0, 9.0, 16.0], format!("cosh accepts {:?}", cosh.accepted));
    let delta = semigroup_scan(&LaplaceSpec::Delta1, &[1.0, 1.5, 2.0, 2.5, 3.0], order);
    c.check(delta.accepted == [1.0, 2.0, 3.0], format!("delta1 accepts {:?}", delta.accepted));
    let gamma = semigroup_scan(&LaplaceSpec::standard_gamma(2.0 / 3.0).unwrap(), &[1.5, 2.0, 3.0], order);
    c.check(gamma.accepted.is_empty(), format!("gamma(2/3) accepts {:?}", gamma.accepted));
    let grid = [1.25, 1.5, 2.0, std::f64::consts::E, 4.0];
    let exp = semigroup_scan(&LaplaceSpec::Exponential, &grid, order);
    c.check(exp.accepted == grid, format!("exponential accepts {} of {}", exp.accepted.len(), grid.len()));
    c.within(start.elapsed(), 30.0);
    c.finish()
}

fn bunge_closed_forms() -> Outcome {
    let mut c = Checks::new();
    let grid = uniform_grid(0.0, 1.0, 101);
    for scale in [1.25, 2.0, std::f64::consts::E, 4.0, 10.0] {
        let map = bunge_map(&LaplaceSpec::Exponential, scale).unwrap();
        let geo = PgfFamily::geometric(1.0 / scale).unwrap();
        let gap = grid.iter().map(|&s| (map.eval(s) - geo.eval(s)).abs()).fold(0.0, f64::max);
        c.check(gap < 1e-12, format!("exponential c={scale}: {gap:.1e}"));
    }
    let map = bunge_map(&LaplaceSpec::Cosh, 4.0).unwrap();
    let gap = grid.iter().map(|&s| (map.eval(s) - s * s / (2.0 - s * s)).abs()).fold(0.0, f64::max);
    c.check(gap < 1e-12, format!("cosh c=4: {gap:.1e}"));
    c.finish()
}

fn commutation() -> Outcome {
    let mut c = Checks::new();
    let grid = uniform_grid(0.0, 1.0, 101);
    let geos: Vec<PgfFamily> = [0.1, 0.25, 0.5, 0.75, 0.9].iter().map(|&p| PgfFamily::geometric(p).unwrap()).collect();
    let mut worst: f64 = 0.0;
    for a in &geos {
        for b in &geos {
            worst = worst.max(commute_check(|s| a.eval(s), |s| b.eval(s), &grid));
        }
    }
    c.check(worst < 1e-10, format!("geometric pairs: {worst:.1e}"));
    let coshes = [bunge_map(&LaplaceSpec::Cosh, 4.0).unwrap(), bunge_map(&LaplaceSpec::Cosh, 9.0).unwrap()];
    let mut worst: f64 = 0.0;
    for a in &coshes {
        for b in &coshes {
            worst = worst.max(commute_check(|s| a.eval(s), |s| b.eval(s), &grid));
        }
    }
    c.check(worst < 1e-10, format!("cosh c∈{{4,9}} pairs: {worst:.1e}"));
    let geo = PgfFamily::geometric(0.5).unwrap();
    let cheb = |s: f64| if s == 0.0 { 0.0 } else { 1.0 / chebyshev_t(2, 1.0 / s) };
    let cross = commute_check(|s| geo.eval(s), cheb, &grid);
    c.check(cross > 1e-3, format!("geometric(0.5) vs chebyshev(2): {cross:.2e}"));
    c.finish()
}

fn extinction_dichotomy() -> Outcome {
    let mut c = Checks::new();
    let n = 10_000;
    let sub = offspring(PgfFamily::masses(vec![0.2, 0.8]).unwrap());
    let freq = extinction_frequency(&sub, 200, n, SEED).unwrap();
    c.check(freq > 0.999, format!("mean 0.8: extinct {freq}"));
    for family in [PgfFamily::geometric(0.5).unwrap(), PgfFamily::masses(vec![0.25, 0.25, 0.5]).unwrap()] {
        let law = offspring(family.clone());
        let q = extinction_probability(&law);
        let survival = 1.0 - extinction_frequency(&law, 100, n, SEED).unwrap();
        let stderr = (q * (1.0 - q) / n as f64).sqrt();
        c.check(
            (survival - (1.0 - q)).abs() <= 5.0 * stderr,
            format!("{}: survival {survival} vs 1-q={} (5·se={:.1e})", family.name(), 1.0 - q, 5.0 * stderr),
        );
    }
    c.finish()
}

fn exp1_cdf(x: f64) -> f64 {
    if x <= 0.0 { 0.0 } else { -(-x).exp_m1() }
}

fn scaling_limits() -> Outcome {
    let start = Instant::now();
    let mut c = Checks::new();
    let n = 10_000;
    let bgw = scaling_limit_samples(&offspring(PgfFamily::geometric(0.5).unwrap()), 25, n, SEED).unwrap();
    let ks = stats::ks_one_sample(&bgw.values, exp1_cdf).unwrap();
    c.check(ks.p_value > 1e-3 && bgw.overflow_count == 0, format!("BGW N_25/2^25 p={:.3e}", ks.p_value));
    let yule = ctbp_limit_check(&GeneratingDistribution::yule(), 8.0, n, SEED).unwrap();
    c.check(yule.verdict.passed(), format!("Yule e^-t N(t) p={:.3e}", yule.value));
    let neveu = ctbp_limit_check(&GeneratingDistribution::neveu(), 4.0, n, SEED).unwrap();
    c.check(neveu.verdict.passed(), format!("Neveu e^-t ln N(t) p={:.3e}", neveu.value));
    c.within(start.elapsed(), 300.0);
    c.finish()
}

fn corrected_geom_h_marginal() -> Outcome {
    let mut c = Checks::new();
    let grid = uniform_grid(0.0, 1.0, 101);
    let psi0 = PgfFamily::geometric_h_ctbp(0.0).unwrap();
    let id_gap = grid.iter().map(|&s| (psi0.eval(s) - s).abs()).fold(0.0, f64::max);
    c.check(id_gap < 1e-12, format!("ψ_0 = id: {id_gap:.1e}"));
    let worst_one = [0.1, 0.5, 1.0, 2.0, 5.0]
        .iter()
        .map(|&t| (PgfFamily::geometric_h_ctbp(t).unwrap().eval(1.0) - 1.0).abs())
        .fold(0.0, f64::max);
    c.check(worst_one < 1e-12, format!("ψ_t(1) = 1: {worst_one:.1e}"));
    let n = 1_000_000;
    let samples = simulate_ctbp(&GeneratingDistribution::shifted_geometric(), 1.0, n, SEED, CtbpMethod::EventDriven).unwrap();
    let masses = PgfFamily::geometric_h_ctbp(1.0).unwrap().series(10).unwrap();
    let mut worst_z: f64 = 0.0;
    for k in 1..=10 {
        let freq = samples.iter().filter(|s| s.population == k as f64).count() as f64 / n as f64;
        let p = masses.coeff(k);
        worst_z = worst_z.max((freq - p).abs() / (p * (1.0 - p) / n as f64).sqrt());
    }
    c.check(worst_z < 4.0, format!("CTBP masses k=1..10 max |z|={worst_z:.2}"));
    c.finish()
}

fn all_closed_form_laws() -> Vec<ClosedFormLaw> {
    vec![
        ClosedFormLaw::Exponential1,
        ClosedFormLaw::gamma(0.5, 0.5).unwrap(),
        ClosedFormLaw::gamma(3.0, 2.0).unwrap(),
        ClosedFormLaw::linnik(0.75, 1.0).unwrap(),
        ClosedFormLaw::linnik(1.0, 1.0).unwrap(),
        ClosedFormLaw::linnik(1.5, 2.0).unwrap(),
        ClosedFormLaw::laplace(1.0).unwrap(),
        ClosedFormLaw::mittag_leffler(0.5, 1.0).unwrap(),
        ClosedFormLaw::mittag_leffler(0.9, 2.0).unwrap(),
        ClosedFormLaw::KovalenkoHalf,
        ClosedFormLaw::gaussian_mix(1.0).unwrap(),
        ClosedFormLaw::stable(StableExponent::symmetric(1.5, 1.0).unwrap()).unwrap(),
        ClosedFormLaw::stable(StableExponent::positive(0.5, 1.0).unwrap()).unwrap(),
        ClosedFormLaw::stable(StableExponent::new(1.2, 1.0, 1.0).unwrap()).unwrap(),
    ]
}

fn sampler_transform_agreement() -> Outcome {
    let mut c = Checks::new();
    let n = 100_000;
    let threshold = stats::gap_threshold(n);
    for law in all_closed_form_laws() {
        let xs = law.sample_n(n, SEED);
        let (kind, gap) = match law.laplace_transform(1.0) {
            Some(_) => ("laplace", stats::laplace_gap(&xs, |u| law.laplace_transform(u).unwrap(), &uniform_grid(0.0, 10.0, 101))),
            None => ("chf", stats::ecf_gap(&xs, |u| law.chf(u), &uniform_grid(-10.0, 10.0, 201))),
        };
        c.check(gap < threshold, format!("{} {kind} gap {gap:.2e}", law.name()));
    }
    c.notes.push(format!("threshold {threshold:.2e}"));
    c.finish()
}

/// Serialized outputs of a bundle of experiments.
fn experiment_bytes(seed: u64) -> Vec<String> {
    let geo = offspring(PgfFamily::geometric(0.5).unwrap());
    let check = random_sum_check(&geo, &ClosedFormLaw::linnik(1.5, 1.0).unwrap(), 2f64.powf(1.0 / 1.5), 5_000, seed).unwrap();
    let bgw = simulate_bgw(&geo, 12, 500, seed).unwrap();
    let ctbp = simulate_ctbp(&GeneratingDistribution::shifted_geometric(), 1.5, 500, seed, CtbpMethod::EventDriven).unwrap();
    let weak = sim::weak_limit_equivalence(sim::UnitLaw::Rademacher, &[10.0, 100.0], 2_000, seed).unwrap();
    let scan = semigroup_scan(&LaplaceSpec::Cosh, &[1.0, 2.0, 4.0], 32);
    let samples = ClosedFormLaw::mittag_leffler(0.7, 1.0).unwrap().sample_n(1_000, seed);
    vec![
        serde_json::to_string(&check).unwrap(),
        serde_json::to_string(&bgw).unwrap(),
        serde_json::to_string(&ctbp).unwrap(),
        serde_json::to_string(&weak).unwrap(),
        serde_json::to_string(&scan).unwrap(),
        serde_json::to_string(&samples).unwrap(),
    ]
}

fn determinism() -> Outcome {
    let mut c = Checks::new();
    let first = experiment_bytes(SEED);
    let second = experiment_bytes(SEED);
    c.check(first == second, "same seed, repeated run: identical bytes".into());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let threaded = pool.install(|| experiment_bytes(SEED));
    c.check(first == threaded, "same seed, 4 worker threads: identical bytes".into());
    let other = experiment_bytes(SEED + 1);
    c.check(first != other, "different seed: different bytes".into());
    c.finish()
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("geometric/exponential stability", geometric_exponential_stability),
        ("index law c = E[N]^(1/α)", index_law),
        ("functional equation residual", poincare_residuals),
        ("semigroup scans", semigroup_scans),
        ("Bunge-map closed forms", bunge_closed_forms),
        ("commutation", commutation),
        ("extinction dichotomy", extinction_dichotomy),
        ("scaling limits", scaling_limits),
        ("corrected geomH marginal", corrected_geom_h_marginal),
        ("sampler/transform agreement", sampler_transform_agreement),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| Outcome {
            pass: false,
            detail: format!(
                "panicked: {}",
                e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
            ),
        });
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<34} {} [{:.1}s] {}",
            i + 1,
            name,
            if outcome.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            outcome.detail
        );
    }
    println!("acceptance: {} passed, {} failed", criteria.len() - failed, failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Monte Carlo engines for Galton–Watson and continuous-time branching
//! processes, and random-sum stability checks.
//!
//! Every routine is a pure function of its arguments and a master seed.
//! Replica `i` draws from `SeedTree::stream(i, role)`, so results do not
//! depend on the number of worker threads.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp1, Gamma, Open01, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{GeneratingDistribution, PgfFamily};
use crate::rng::{SeedTree, SimRng, StreamRole};
use crate::stable::ClosedFormLaw;
use crate::stats::{self, TwoSampleStat};

/// Populations above this are frozen and flagged.
pub const POPULATION_CAP: u64 = 1_000_000_000;
/// Events per CTBP replica before the explosion guard trips.
pub const EVENT_CAP: u64 = 100_000_000;
/// KS significance level for pass/fail verdicts.
pub const KS_LEVEL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(pass: bool) -> Self {
        if pass { Self::Pass } else { Self::Fail }
    }

    pub fn passed(self) -> bool {
        self == Self::Pass
    }
}

/// One pass/fail record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub experiment: String,
    pub statistic_name: String,
    pub value: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    pub n: usize,
    pub seed: u64,
    pub runtime_ms: u64,
}

impl SimReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report fields are plain data")
    }
}

/// Negative-binomial failure count with real shape `r`, as a Poisson–Gamma
/// mixture.
fn negative_binomial<R: Rng + ?Sized>(r: f64, p: f64, rng: &mut R) -> u64 {
    if p >= 1.0 || r <= 0.0 {
        return 0;
    }
    let lambda = Gamma::new(r, (1.0 - p) / p).expect("positive shape and scale").sample(rng);
    if !(lambda > 0.0) {
        return 0;
    }
    match Poisson::new(lambda) {
        Ok(d) => d.sample(rng) as u64,
        Err(_) => u64::MAX,
    }
}

/// Geometric draw on `{1, 2, ...}` with success probability `p`.
fn geometric<R: Rng + ?Sized>(p: f64, rng: &mut R) -> u64 {
    if p >= 1.0 {
        return 1;
    }
    let e: f64 = Exp1.sample(rng);
    let k = (e / -(-p).ln_1p()).floor();
    if k >= u64::MAX as f64 { u64::MAX } else { 1 + k as u64 }
}

/// `ln X` for `X ~ Gamma(shape, 1)`, stable for tiny shapes.
fn ln_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        return Gamma::new(shape, 1.0).expect("positive shape").sample(rng).ln();
    }
    let boosted = Gamma::new(shape + 1.0, 1.0).expect("positive shape").sample(rng);
    let u: f64 = Open01.sample(rng);
    boosted.ln() + u.ln() / shape
}

/// A draw from the Sibuya law, as `ln N` and, when it fits, `N` itself.
///
/// `N` is geometric with a `Beta(p, 1-p)` success probability `W`; `W` is
/// handled in log space because it routinely underflows for small `p`.
pub fn sample_sibuya<R: Rng + ?Sized>(p: f64, rng: &mut R) -> (f64, Option<u64>) {
    if p >= 1.0 {
        return (0.0, Some(1));
    }
    let ln_x = ln_gamma_variate(p, rng);
    let ln_y = ln_gamma_variate(1.0 - p, rng);
    let top = ln_x.max(ln_y);
    let ln_w = ln_x - (top + ((ln_x - top).exp() + (ln_y - top).exp()).ln());
    let ln_rate = if ln_w < -30.0 { ln_w } else { (-(-ln_w.exp()).ln_1p()).ln() };
    let e: f64 = Exp1.sample(rng);
    let ln_ratio = e.ln() - ln_rate;
    if ln_ratio > 40.0 {
        return (ln_ratio, None);
    }
    let k = 1 + (e / ln_rate.exp()).floor() as u64;
    ((k as f64).ln(), Some(k))
}

/// First exit time of `{-n+1, ..., n-1}` by a simple symmetric walk.
fn walk_exit_time<R: Rng + ?Sized>(n: u32, rng: &mut R) -> u64 {
    let n = n as i64;
    let (mut pos, mut steps) = (0i64, 0u64);
    while pos.abs() < n {
        pos += if rng.random::<bool>() { 1 } else { -1 };
        steps += 1;
    }
    steps
}

/// Offspring law of a Galton–Watson process, backed by a PGF family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffspringLaw {
    pub family: PgfFamily,
}

impl OffspringLaw {
    pub fn new(family: PgfFamily) -> Result<Self> {
        if family.is_defective() {
            return Err(Error::Unsupported {
                op: "OffspringLaw::new",
                what: format!("{} with mass at infinity", family.name()),
            });
        }
        if let PgfFamily::Theta { theta, q, .. } = family {
            GeneratingDistribution::theta(theta, q)?;
        }
        Ok(Self { family })
    }

    pub fn pgf(&self, s: f64) -> f64 {
        self.family.eval(s)
    }

    pub fn mean(&self) -> f64 {
        self.family.mean()
    }

    /// `P(N = k)` for small `k`, read off the PGF series.
    pub fn masses(&self, upto: usize) -> Result<Vec<f64>> {
        Ok(self.family.series(upto)?.coeffs().to_vec())
    }

    /// `E[N ln N] < ∞`, the condition for `c^k` norming.
    pub fn has_n_log_n_moment(&self) -> bool {
        self.mean().is_finite()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.sample_sum(1, u64::MAX, rng)
    }

    /// Sum of `m` independent draws. Once the running total exceeds `cap`
    /// the result is only known to exceed `cap`.
    pub fn sample_sum<R: Rng + ?Sized>(&self, m: u64, cap: u64, rng: &mut R) -> u64 {
        if m == 0 {
            return 0;
        }
        match self.family {
            PgfFamily::Identity => m,
            PgfFamily::Geometric { p } => m.saturating_add(negative_binomial(m as f64, p, rng)),
            PgfFamily::NegBinKM { p, k } => {
                let extra = negative_binomial(m as f64 / k as f64, p, rng);
                m.saturating_add(extra.saturating_mul(k as u64))
            }
            PgfFamily::ChebyshevHitting { n: 1 } => m,
            // the exit time of {±2} is twice a geometric(1/2) count
            PgfFamily::ChebyshevHitting { n: 2 } => 2u64.saturating_mul(m.saturating_add(negative_binomial(m as f64, 0.5, rng))),
            PgfFamily::Masses { ref masses } => {
                let (mut remaining, mut rest, mut total) = (m, 1.0, 0u64);
                for (k, &pk) in masses.iter().enumerate() {
                    if remaining == 0 {
                        break;
                    }
                    let last = k + 1 == masses.len();
                    let share = if last || rest <= 0.0 { 1.0 } else { (pk / rest).clamp(0.0, 1.0) };
                    let x = Binomial::new(remaining, share).expect("probability in [0, 1]").sample(rng);
                    total = total.saturating_add(x.saturating_mul(k as u64));
                    remaining -= x;
                    rest -= pk;
                }
                total
            }
            PgfFamily::GeomHCtbp { t } => {
                event_driven(&GeneratingDistribution::ShiftedGeomH, m, t, cap, rng).population as u64
            }
            PgfFamily::Theta { p, theta, q } => {
                let h = GeneratingDistribution::ThetaH { theta, q };
                let t = -p.ln() * h.time_scale();
                event_driven(&h, m, t, cap, rng).population as u64
            }
            PgfFamily::Sibuya { .. } | PgfFamily::ChebyshevHitting { .. } => {
                let mut total = 0u64;
                for _ in 0..m {
                    let one = match self.family {
                        PgfFamily::Sibuya { p } => sample_sibuya(p, rng).1.unwrap_or(u64::MAX),
                        PgfFamily::ChebyshevHitting { n } => walk_exit_time(n, rng),
                        _ => unreachable!(),
                    };
                    total = total.saturating_add(one);
                    if total > cap {
                        break;
                    }
                }
                total
            }
        }
    }
}

/// Trajectories `N_0 = 1, N_1, ..., N_k` of independent replicas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BgwRun {
    pub generations: usize,
    pub trajectories: Vec<Vec<u64>>,
    /// The replica hit [`POPULATION_CAP`] and was frozen there.
    pub overflowed: Vec<bool>,
}

impl BgwRun {
    pub fn final_sizes(&self) -> Vec<u64> {
        self.trajectories.iter().map(|t| t[self.generations]).collect()
    }

    pub fn overflow_count(&self) -> usize {
        self.overflowed.iter().filter(|&&o| o).count()
    }
}

fn require_replicas(op: &'static str, replicas: usize) -> Result<()> {
    if replicas == 0 {
        Err(Error::InsufficientSamples { op, min: 1, got: 0 })
    } else {
        Ok(())
    }
}

pub fn simulate_bgw(offspring: &OffspringLaw, generations: usize, replicas: usize, seed: u64) -> Result<BgwRun> {
    require_replicas("simulate_bgw", replicas)?;
    let tree = SeedTree::new(seed, "bgw");
    let runs: Vec<(Vec<u64>, bool)> = (0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = tree.stream(i, StreamRole::Primary);
            let mut path = Vec::with_capacity(generations + 1);
            let mut size = 1u64;
            let mut overflow = false;
            path.push(size);
            for _ in 0..generations {
                if !overflow && size > 0 {
                    size = offspring.sample_sum(size, POPULATION_CAP, &mut rng);
                    if size > POPULATION_CAP {
                        size = POPULATION_CAP;
                        overflow = true;
                    }
                }
                path.push(size);
            }
            (path, overflow)
        })
        .collect();
    let (trajectories, overflowed) = runs.into_iter().unzip();
    Ok(BgwRun { generations, trajectories, overflowed })
}

/// Fraction of replicas extinct by generation `horizon`.
pub fn extinction_frequency(offspring: &OffspringLaw, horizon: usize, replicas: usize, seed: u64) -> Result<f64> {
    let run = simulate_bgw(offspring, horizon, replicas, seed)?;
    Ok(run.final_sizes().iter().filter(|&&n| n == 0).count() as f64 / replicas as f64)
}

/// Smallest root of `φ(q) = q` in `[0, 1]`, by iterating from 0.
pub fn extinction_probability(offspring: &OffspringLaw) -> f64 {
    let mut q = 0.0;
    for _ in 0..1_000_000 {
        let next = offspring.pgf(q);
        if (next - q).abs() < 1e-16 {
            return next;
        }
        q = next;
    }
    q
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Norming {
    /// `c^k` with `c` the offspring mean.
    Mean { constant: f64 },
    /// Empirical median of `N_k`; used when `E[N ln N] = ∞`, where no
    /// geometric norming exists.
    Median { constant: f64 },
}

impl Norming {
    pub fn constant(&self) -> f64 {
        match *self {
            Self::Mean { constant } | Self::Median { constant } => constant,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSamples {
    /// `N_k / norming`, extinct replicas included as zeros.
    pub values: Vec<f64>,
    pub norming: Norming,
    pub overflow_count: usize,
}

pub fn scaling_limit_samples(offspring: &OffspringLaw, generations: usize, replicas: usize, seed: u64) -> Result<ScalingSamples> {
    let run = simulate_bgw(offspring, generations, replicas, seed)?;
    let sizes: Vec<f64> = run.final_sizes().iter().map(|&n| n as f64).collect();
    let c = offspring.mean();
    let norming = if offspring.has_n_log_n_moment() {
        Norming::Mean { constant: c.powi(generations as i32) }
    } else {
        let mut sorted = sizes.clone();
        sorted.sort_by(f64::total_cmp);
        Norming::Median { constant: sorted[sorted.len() / 2].max(1.0) }
    };
    let k = norming.constant();
    Ok(ScalingSamples {
        values: sizes.iter().map(|n| n / k).collect(),
        norming,
        overflow_count: run.overflow_count(),
    })
}

/// Paired draws of `X_1 + … + X_N` and `cX` on independent streams.
pub fn random_sum_samples(counts: &OffspringLaw, law: &ClosedFormLaw, c: f64, n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let tree = SeedTree::new(seed, "random-sum");
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut count_rng = tree.stream(i, StreamRole::Counts);
            let mut sum_rng = tree.stream(i, StreamRole::Primary);
            let mut ref_rng = tree.stream(i, StreamRole::Reference);
            let count = counts.sample(&mut count_rng);
            let sum: f64 = (0..count).map(|_| law.sample(&mut sum_rng)).sum();
            (sum, c * law.sample(&mut ref_rng))
        })
        .unzip()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomSumCheck {
    pub stat: TwoSampleStat,
    /// KS decides the verdict; otherwise the ECF gap does (infinite
    /// variance targets).
    pub uses_ks: bool,
    pub threshold: f64,
    pub verdict: Verdict,
}

impl RandomSumCheck {
    pub fn statistic_name(&self) -> &'static str {
        if self.uses_ks { "ks_pvalue" } else { "ecf_gap" }
    }

    pub fn value(&self) -> f64 {
        if self.uses_ks { self.stat.ks_pvalue } else { self.stat.ecf_gap }
    }
}

/// Two-sample comparison of `X_1 + … + X_N` against `cX`.
pub fn random_sum_check(counts: &OffspringLaw, law: &ClosedFormLaw, c: f64, n: usize, seed: u64) -> Result<RandomSumCheck> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::param("c", c, "must be positive"));
    }
    let (sums, scaled) = random_sum_samples(counts, law, c, n, seed);
    let stat = stats::two_sample(&sums, &scaled)?;
    let uses_ks = law.has_finite_variance();
    let (threshold, pass) = if uses_ks {
        (KS_LEVEL, stat.ks_pvalue > KS_LEVEL)
    } else {
        let t = stats::gap_threshold(n);
        (t, stat.ecf_gap < t)
    };
    Ok(RandomSumCheck { stat, uses_ks, threshold, verdict: Verdict::from_bool(pass) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CtbpMethod {
    /// Race of exponential clocks, one per particle.
    EventDriven,
    /// Direct draw from the known marginal law of `N(t)`.
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CtbpSample {
    /// `N(t)`; may be `+∞` when only its logarithm is representable.
    pub population: f64,
    pub log_population: f64,
    pub events: u64,
    /// Stopped at the population or event cap before time `t`.
    pub capped: bool,
}

fn event_driven<R: Rng + ?Sized>(h: &GeneratingDistribution, start: u64, t_end: f64, cap: u64, rng: &mut R) -> CtbpSample {
    let (mut pop, mut time, mut events) = (start, 0.0, 0u64);
    let mut capped = false;
    while pop > 0 {
        let e: f64 = Exp1.sample(rng);
        time += e / pop as f64;
        if time > t_end {
            break;
        }
        pop = (pop - 1).saturating_add(h.sample(rng));
        events += 1;
        if pop > cap || events >= EVENT_CAP {
            capped = true;
            break;
        }
    }
    let population = pop as f64;
    CtbpSample { population, log_population: population.ln(), events, capped }
}

/// `N(t_end)` from one ancestor, for each replica.
pub fn simulate_ctbp(h: &GeneratingDistribution, t_end: f64, replicas: usize, seed: u64, method: CtbpMethod) -> Result<Vec<CtbpSample>> {
    require_replicas("simulate_ctbp", replicas)?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::param("t", t_end, "must be finite and nonnegative"));
    }
    if !h.is_non_explosive()? {
        return Err(Error::Unsupported { op: "simulate_ctbp", what: format!("{} may explode", h.name()) });
    }
    let marginal_p = (-t_end).exp();
    if method == CtbpMethod::Marginal && !matches!(h, GeneratingDistribution::YuleH | GeneratingDistribution::NeveuH) {
        return Err(Error::Unsupported {
            op: "simulate_ctbp",
            what: format!("marginal sampling for {}", h.name()),
        });
    }
    let tree = SeedTree::new(seed, "ctbp");
    Ok((0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = tree.stream(i, StreamRole::Primary);
            match (method, h) {
                (CtbpMethod::EventDriven, _) => event_driven(h, 1, t_end, POPULATION_CAP, &mut rng),
                (CtbpMethod::Marginal, GeneratingDistribution::YuleH) => {
                    let n = geometric(marginal_p, &mut rng) as f64;
                    CtbpSample { population: n, log_population: n.ln(), events: 0, capped: false }
                }
                (CtbpMethod::Marginal, _) => {
                    let (log_population, exact) = sample_sibuya(marginal_p, &mut rng);
                    let population = exact.map_or(log_population.exp(), |n| n as f64);
                    CtbpSample { population, log_population, events: 0, capped: false }
                }
            }
        })
        .collect())
}

/// The engine used by [`ctbp_limit_check`]: exact marginals where event
/// simulation is infeasible (infinite-mean broods).
pub fn default_ctbp_method(h: &GeneratingDistribution) -> CtbpMethod {
    if h.mean().is_finite() { CtbpMethod::EventDriven } else { CtbpMethod::Marginal }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCheck {
    pub statistic_name: String,
    pub value: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    pub capped: usize,
}

fn exp1_cdf(x: f64) -> f64 {
    if x <= 0.0 { 0.0 } else { -(-x).exp_m1() }
}

/// Compares the normalized population at `t_end` with the limit law:
/// `e^{-t}N(t)` against Exp(1) (Yule), `e^{-2t}N(t)` against the law with
/// transform `2/(1+√(1+4u))` (shifted geometric), and `e^{-t} ln N(t)`
/// against Exp(1) (Neveu).
pub fn ctbp_limit_check(h: &GeneratingDistribution, t_end: f64, replicas: usize, seed: u64) -> Result<LimitCheck> {
    let samples = simulate_ctbp(h, t_end, replicas, seed, default_ctbp_method(h))?;
    let capped = samples.iter().filter(|s| s.capped).count();
    match h {
        GeneratingDistribution::YuleH | GeneratingDistribution::NeveuH => {
            let values: Vec<f64> = samples
                .iter()
                .map(|s| {
                    let x = if *h == GeneratingDistribution::YuleH { s.population } else { s.log_population };
                    (-t_end).exp() * x
                })
                .collect();
            let ks = stats::ks_one_sample(&values, exp1_cdf)?;
            Ok(LimitCheck {
                statistic_name: "ks_pvalue".into(),
                value: ks.p_value,
                threshold: KS_LEVEL,
                verdict: Verdict::from_bool(ks.p_value > KS_LEVEL),
                capped,
            })
        }
        GeneratingDistribution::ShiftedGeomH => {
            let norm = (-(h.mean() - 1.0) * t_end).exp();
            let values: Vec<f64> = samples.iter().map(|s| norm * s.population).collect();
            let gap = stats::laplace_gap(
                &values,
                |u| 2.0 / (1.0 + (1.0 + 4.0 * u).sqrt()),
                &stats::uniform_grid(0.0, 5.0, 51),
            );
            Ok(LimitCheck {
                statistic_name: "laplace_gap".into(),
                value: gap,
                threshold: 0.02,
                verdict: Verdict::from_bool(gap < 0.02),
                capped,
            })
        }
        GeneratingDistribution::ThetaH { .. } => Err(Error::Unsupported {
            op: "ctbp_limit_check",
            what: "closed-form limit law for thetaH".into(),
        }),
    }
}

/// Summand law for [`weak_limit_equivalence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitLaw {
    /// Exp(1) summands; normalized by `c`.
    Exp1,
    /// `±1` with equal probability; normalized by `√c`.
    Rademacher,
}

impl UnitLaw {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Exp1 => "exp1",
            Self::Rademacher => "rademacher",
        }
    }

    fn norming(&self, c: f64) -> f64 {
        match self {
            Self::Exp1 => c,
            Self::Rademacher => c.sqrt(),
        }
    }

    /// Sum of `m` independent draws.
    fn sum<R: Rng + ?Sized>(&self, m: u64, rng: &mut R) -> f64 {
        if m == 0 {
            return 0.0;
        }
        match self {
            Self::Exp1 => Gamma::new(m as f64, 1.0).expect("positive shape").sample(rng),
            Self::Rademacher => {
                let heads = Binomial::new(m, 0.5).expect("valid").sample(rng);
                2.0 * heads as f64 - m as f64
            }
        }
    }

    /// Transform gap of a sample to the strictly stable exponent `g`
    /// composed with `L`: Laplace gap for Exp1, ECF gap for Rademacher.
    fn gap(&self, xs: &[f64], random: bool) -> f64 {
        match self {
            Self::Exp1 => {
                let grid = stats::uniform_grid(0.0, 5.0, 51);
                if random {
                    stats::laplace_gap(xs, |u| 1.0 / (1.0 + u), &grid)
                } else {
                    stats::laplace_gap(xs, |u| (-u).exp(), &grid)
                }
            }
            Self::Rademacher => {
                let grid = stats::uniform_grid(-10.0, 10.0, 201);
                let target = |u: f64| {
                    let g = u * u / 2.0;
                    num_complex::Complex64::new(if random { 1.0 / (1.0 + g) } else { (-g).exp() }, 0.0)
                };
                stats::ecf_gap(xs, target, &grid)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakLimitEntry {
    pub c: f64,
    /// Gap of `(U_1 + … + U_{N_c})/a(c)` to `L(g(·))`.
    pub random_gap: f64,
    /// Gap of `(U_1 + … + U_{[c]})/a(c)` to `e^{-g(·)}`.
    pub deterministic_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakLimitReport {
    pub unit: UnitLaw,
    pub n: usize,
    pub entries: Vec<WeakLimitEntry>,
    /// Monte Carlo noise level `4/√n`.
    pub noise: f64,
    /// `max(0, gap - noise)` never increases along the sequence, for both
    /// the random and the deterministic sums.
    pub monotone: bool,
}

/// Compares random sums with `N_c ~ geometric(1/c)` and deterministic sums
/// of `[c]` terms along an increasing `c` sequence.
pub fn weak_limit_equivalence(unit: UnitLaw, c_sequence: &[f64], n: usize, seed: u64) -> Result<WeakLimitReport> {
    require_replicas("weak_limit_equivalence", n)?;
    let tree = SeedTree::new(seed, "weak-limit");
    let mut entries = Vec::with_capacity(c_sequence.len());
    for (j, &c) in c_sequence.iter().enumerate() {
        let counts = OffspringLaw::new(PgfFamily::geometric(1.0 / c)?)?;
        let a = unit.norming(c);
        let (random, deterministic): (Vec<f64>, Vec<f64>) = (0..n as u64)
            .into_par_iter()
            .map(|i| {
                let replica = (j as u64) << 40 | i;
                let mut count_rng = tree.stream(replica, StreamRole::Counts);
                let mut rng = tree.stream(replica, StreamRole::Primary);
                let m = counts.sample(&mut count_rng);
                let r = unit.sum(m, &mut rng) / a;
                let d = unit.sum(c.floor() as u64, &mut rng) / a;
                (r, d)
            })
            .unzip();
        entries.push(WeakLimitEntry {
            c,
            random_gap: unit.gap(&random, true),
            deterministic_gap: unit.gap(&deterministic, false),
        });
    }
    let noise = stats::gap_threshold(n);
    let systematic = |g: f64| (g - noise).max(0.0);
    let monotone = entries.windows(2).all(|w| {
        systematic(w[1].random_gap) <= systematic(w[0].random_gap)
            && systematic(w[1].deterministic_gap) <= systematic(w[0].deterministic_gap)
    });
    Ok(WeakLimitReport { unit, n, entries, noise, monotone })
}

/// Seeded stream for ad-hoc sampling by callers.
pub fn sampling_stream(seed: u64, experiment: &str) -> SimRng {
    SeedTree::new(seed, experiment).stream(0, StreamRole::Primary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law(f: PgfFamily) -> OffspringLaw {
        OffspringLaw::new(f).unwrap()
    }

    #[test]
    fn deterministic_offspring() {
        let one = simulate_bgw(&law(PgfFamily::constant(1)), 10, 50, 1).unwrap();
        assert!(one.trajectories.iter().all(|t| t.iter().all(|&n| n == 1)));
        let two = simulate_bgw(&law(PgfFamily::constant(2)), 10, 50, 1).unwrap();
        for t in &two.trajectories {
            for (k, &n) in t.iter().enumerate() {
                assert_eq!(n, 1 << k);
            }
        }
        assert_eq!(extinction_frequency(&law(PgfFamily::constant(2)), 10, 100, 1).unwrap(), 0.0);
        let s = scaling_limit_samples(&law(PgfFamily::constant(2)), 12, 100, 1).unwrap();
        assert!(s.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn geometric_growth_matches_branching_identity() {
        let run = simulate_bgw(&law(PgfFamily::geometric(0.5).unwrap()), 20, 10_000, 2).unwrap();
        let finals: Vec<f64> = run.final_sizes().iter().map(|&n| n as f64).collect();
        let (mean, se) = stats::mean_and_stderr(&finals);
        assert!((mean - 2f64.powi(20)).abs() < 5.0 * se, "{mean} ± {se}");
        assert_eq!(run.overflow_count(), 0);
    }

    #[test]
    fn extinction_examples() {
        let sub = law(PgfFamily::masses(vec![0.2, 0.8]).unwrap());
        assert!(extinction_frequency(&sub, 200, 10_000, 3).unwrap() > 0.999);
        let critical = law(PgfFamily::masses(vec![0.5, 0.0, 0.5]).unwrap());
        assert!(extinction_frequency(&critical, 10_000, 2_000, 4).unwrap() > 0.98);
        let supercritical = law(PgfFamily::masses(vec![0.25, 0.25, 0.5]).unwrap());
        let q = extinction_probability(&supercritical);
        assert!((q - 0.5).abs() < 1e-12);
        let n = 10_000;
        let freq = extinction_frequency(&supercritical, 60, n, 5).unwrap();
        assert!((freq - q).abs() < 5.0 * (q * (1.0 - q) / n as f64).sqrt());
    }

    #[test]
    fn convolution_samplers_match_pgf_masses() {
        let families = [
            PgfFamily::geometric(0.4).unwrap(),
            PgfFamily::negative_binomial_km(0.5, 2).unwrap(),
            PgfFamily::negative_binomial_km(0.3, 3).unwrap(),
            PgfFamily::chebyshev_hitting(2).unwrap(),
            PgfFamily::chebyshev_hitting(3).unwrap(),
            PgfFamily::sibuya(0.6).unwrap(),
            PgfFamily::masses(vec![0.1, 0.2, 0.3, 0.4]).unwrap(),
            PgfFamily::geometric_h_ctbp(0.3).unwrap(),
            PgfFamily::theta_member(0.6, 0.5, 0.2).unwrap(),
        ];
        let n = 1_000_000;
        for (idx, fam) in families.into_iter().enumerate() {
            let offspring = law(fam.clone());
            // sums of two draws have PGF φ²
            let squared = fam.series(12).unwrap();
            let squared = squared.mul(&squared);
            let mut rng = sampling_stream(idx as u64, "masses");
            let mut single = [0usize; 13];
            let mut double = [0usize; 13];
            for _ in 0..n {
                let a = offspring.sample(&mut rng) as usize;
                let b = offspring.sample_sum(2, u64::MAX, &mut rng) as usize;
                if a < 13 {
                    single[a] += 1;
                }
                if b < 13 {
                    double[b] += 1;
                }
            }
            let masses = offspring.masses(12).unwrap();
            for k in 0..13 {
                for (counts, p) in [(single[k], masses[k]), (double[k], squared.coeff(k))] {
                    let freq = counts as f64 / n as f64;
                    let se = (p * (1.0 - p) / n as f64).sqrt().max(1e-9);
                    assert!((freq - p).abs() < 4.0 * se, "{fam:?} k={k}: {freq} vs {p}");
                }
            }
        }
    }

    #[test]
    fn sibuya_log_sampler_tail() {
        // P(N > n) ≈ n^{-p}/Γ(1-p): check the log-scale tail
        let p: f64 = 0.1;
        let mut rng = sampling_stream(9, "sibuya-tail");
        let n = 200_000;
        let logs: Vec<f64> = (0..n).map(|_| sample_sibuya(p, &mut rng).0).collect();
        for y in [50.0, 200.0] {
            let freq = logs.iter().filter(|&&l| l > y).count() as f64 / n as f64;
            let expected = (-p * y).exp() / gamma_fn(1.0 - p);
            let se = (expected * (1.0 - expected) / n as f64).sqrt();
            assert!((freq - expected).abs() < 5.0 * se, "y={y}: {freq} vs {expected}");
        }
        assert!(logs.iter().all(|&l| l >= 0.0));
    }

    /// Γ(x) by upward recurrence to x ≥ 10 and a Stirling series.
    fn gamma_fn(x: f64) -> f64 {
        let mut z = x;
        let mut prod = 1.0;
        while z < 10.0 {
            prod *= z;
            z += 1.0;
        }
        let ln = (z - 0.5) * z.ln() - z + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * z)
            - 1.0 / (360.0 * z.powi(3))
            + 1.0 / (1260.0 * z.powi(5));
        ln.exp() / prod
    }

    #[test]
    fn ctbp_means() {
        let n = 10_000;
        for (h, t) in [(GeneratingDistribution::yule(), 3.0), (GeneratingDistribution::shifted_geometric(), 2.0)] {
            let samples = simulate_ctbp(&h, t, n, 6, CtbpMethod::EventDriven).unwrap();
            let pops: Vec<f64> = samples.iter().map(|s| s.population).collect();
            let (mean, se) = stats::mean_and_stderr(&pops);
            let expected = ((h.mean() - 1.0) * t).exp();
            assert!((mean - expected).abs() < 5.0 * se, "{h:?}: {mean} ± {se} vs {expected}");
        }
        let at_zero = simulate_ctbp(&GeneratingDistribution::yule(), 0.0, 100, 6, CtbpMethod::EventDriven).unwrap();
        assert!(at_zero.iter().all(|s| s.population == 1.0));
    }

    #[test]
    fn neveu_event_driven_agrees_with_marginal() {
        let h = GeneratingDistribution::neveu();
        let t = 0.5;
        let n = 20_000;
        let tree = SeedTree::new(7, "neveu-censored");
        let events: Vec<CtbpSample> = (0..n as u64)
            .into_par_iter()
            .map(|i| event_driven(&h, 1, t, 100_000, &mut tree.stream(i, StreamRole::Primary)))
            .collect();
        let marginal = PgfFamily::neveu_member(t).unwrap().series(8).unwrap();
        for k in 1..=8 {
            // censored replicas sit above the cap, far from small k
            let freq = events.iter().filter(|s| !s.capped && s.population == k as f64).count() as f64 / n as f64;
            let p = marginal.coeff(k);
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() < 4.5 * se, "k={k}: {freq} vs {p}");
        }
        let direct = simulate_ctbp(&h, t, n, 7, CtbpMethod::Marginal).unwrap();
        for k in 1..=8 {
            let freq = direct.iter().filter(|s| s.population == k as f64).count() as f64 / n as f64;
            let p = marginal.coeff(k);
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() < 4.5 * se, "k={k}: {freq} vs {p}");
        }
    }

    #[test]
    fn ctbp_skeleton_matches_bgw() {
        let h = GeneratingDistribution::yule();
        let dt = 0.5;
        let offspring = law(h.marginal(dt).unwrap());
        let bgw = simulate_bgw(&offspring, 4, 5_000, 8).unwrap();
        for k in 1..=4 {
            let skeleton: Vec<f64> = bgw.trajectories.iter().map(|t| t[k] as f64).collect();
            let ctbp: Vec<f64> = simulate_ctbp(&h, k as f64 * dt, 5_000, 9, CtbpMethod::EventDriven)
                .unwrap()
                .iter()
                .map(|s| s.population)
                .collect();
            let ks = stats::ks_two_sample(&skeleton, &ctbp).unwrap();
            assert!(ks.p_value > 1e-3, "k={k}: {ks:?}");
        }
    }

    #[test]
    fn random_sum_examples() {
        let geo = law(PgfFamily::geometric(0.5).unwrap());
        let r = random_sum_check(&geo, &ClosedFormLaw::Exponential1, 2.0, 20_000, 10).unwrap();
        assert!(r.uses_ks && r.verdict.passed(), "{r:?}");
        let nb = law(PgfFamily::negative_binomial_km(0.5, 2).unwrap());
        let gamma = ClosedFormLaw::gamma(0.5, 0.5).unwrap();
        let r = random_sum_check(&nb, &gamma, 2.0, 20_000, 11).unwrap();
        assert!(r.verdict.passed(), "{r:?}");
        let cauchy_mix = ClosedFormLaw::linnik(1.0, 1.0).unwrap();
        let r = random_sum_check(&geo, &cauchy_mix, 2.0, 20_000, 12).unwrap();
        assert!(!r.uses_ks && r.verdict.passed(), "{r:?}");
    }

    #[test]
    fn null_calibration_of_ks() {
        // two independent streams of the same law give roughly uniform p-values
        let pvals: Vec<f64> = (0..100)
            .map(|rep| {
                let a = ClosedFormLaw::Exponential1.sample_n(2_000, 1000 + rep);
                let b = ClosedFormLaw::Exponential1.sample_n(2_000, 5000 + rep);
                stats::ks_two_sample(&a, &b).unwrap().p_value
            })
            .collect();
        let below_tenth = pvals.iter().filter(|&&p| p < 0.1).count();
        let below_half = pvals.iter().filter(|&&p| p < 0.5).count();
        assert!(below_tenth <= 22, "{below_tenth}");
        assert!((30..=70).contains(&below_half), "{below_half}");
    }

    #[test]
    fn weak_limits() {
        let report = weak_limit_equivalence(UnitLaw::Exp1, &[10.0, 100.0, 1000.0], 10_000, 13).unwrap();
        assert!(report.monotone, "{report:?}");
        assert!(report.entries[2].random_gap < report.noise);
        let report = weak_limit_equivalence(UnitLaw::Rademacher, &[1000.0], 10_000, 14).unwrap();
        assert!(report.entries[0].random_gap < 0.03, "{report:?}");
        assert!(report.entries[0].deterministic_gap < 0.03, "{report:?}");
    }

    #[test]
    fn runs_are_deterministic() {
        let offspring = law(PgfFamily::geometric(0.5).unwrap());
        let a = simulate_bgw(&offspring, 8, 500, 77).unwrap();
        let b = simulate_bgw(&offspring, 8, 500, 77).unwrap();
        assert_eq!(a, b);
        let c = simulate_bgw(&offspring, 8, 500, 78).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn chebyshev_offspring_scales_to_cosh_law() {
        let s = scaling_limit_samples(&law(PgfFamily::chebyshev_hitting(2).unwrap()), 12, 10_000, 16).unwrap();
        assert_eq!(s.norming, Norming::Mean { constant: 4f64.powi(12) });
        let gap = stats::laplace_gap(&s.values, |u| 1.0 / (2.0 * u).sqrt().cosh(), &stats::uniform_grid(0.0, 5.0, 51));
        assert!(gap < 0.02, "{gap}");
    }

    #[test]
    fn geometric_brood_limit_law() {
        let check = ctbp_limit_check(&GeneratingDistribution::shifted_geometric(), 5.0, 10_000, 17).unwrap();
        assert!(check.verdict.passed(), "{check:?}");
        assert_eq!(check.capped, 0);
        assert!(ctbp_limit_check(&GeneratingDistribution::theta(0.5, 0.0).unwrap(), 1.0, 1_000, 1).is_err());
    }

    #[test]
    fn median_norming_for_infinite_mean() {
        let s = scaling_limit_samples(&law(PgfFamily::sibuya(0.7).unwrap()), 3, 1_000, 15).unwrap();
        assert!(matches!(s.norming, Norming::Median { .. }));
    }
}

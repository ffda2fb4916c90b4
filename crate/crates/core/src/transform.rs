//! Laplace-transform machinery.
//!
//! For a Laplace transform `L` with inverse `L^←`, the candidate PGF at
//! scale `c` is `φ_c(s) = L(c·L^←(s))`. The set of `c` for which `φ_c` is a
//! PGF is a multiplicative semigroup; [`semigroup_scan`] probes it on a grid.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{GeneratingDistribution, PgfFamily};
use crate::quad;
use crate::series::{PgfFailure, PgfVerdict, TruncatedSeries, NONNEG_TOLERANCE};

/// Laplace transforms `u ↦ E[e^{-uY}]` of the standard laws in the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "transform", rename_all = "kebab-case")]
pub enum LaplaceSpec {
    /// `1/(1+u)`, the standard exponential law.
    Exponential,
    /// `e^{-u}`, the point mass at 1.
    Delta1,
    /// `1/cosh(√(2u))`.
    Cosh,
    /// `(1 + u/rate)^{-shape}`.
    Gamma { shape: f64, rate: f64 },
    /// `2/(1 + √(1+4u))`.
    GeomHLimit,
    /// `1/(1 + βu^α)`.
    MittagLeffler { alpha: f64, beta: f64 },
}

impl LaplaceSpec {
    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(Error::param("shape", shape, "must be positive"));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::param("rate", rate, "must be positive"));
        }
        Ok(Self::Gamma { shape, rate })
    }

    /// Gamma law with mean 1.
    pub fn standard_gamma(shape: f64) -> Result<Self> {
        Self::gamma(shape, shape)
    }

    pub fn mittag_leffler(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::param("alpha", alpha, "must lie in (0, 1]"));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::param("beta", beta, "must be positive"));
        }
        Ok(Self::MittagLeffler { alpha, beta })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Exponential => "exponential",
            Self::Delta1 => "delta1",
            Self::Cosh => "cosh",
            Self::Gamma { .. } => "gamma",
            Self::GeomHLimit => "geomH-limit",
            Self::MittagLeffler { .. } => "mittag-leffler",
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            Self::Exponential => 1.0 / (1.0 + u),
            Self::Delta1 => (-u).exp(),
            Self::Cosh => 1.0 / (2.0 * u).sqrt().cosh(),
            Self::Gamma { shape, rate } => (1.0 + u / rate).powf(-shape),
            Self::GeomHLimit => 2.0 / (1.0 + (1.0 + 4.0 * u).sqrt()),
            Self::MittagLeffler { alpha, beta } => 1.0 / (1.0 + beta * u.powf(alpha)),
        }
    }

    /// Principal-branch continuation to `Re z ≥ 0`.
    pub fn eval_complex(&self, z: Complex64) -> Result<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        Ok(match *self {
            Self::Exponential => one / (one + z),
            Self::Delta1 => (-z).exp(),
            Self::Cosh => one / (2.0 * z).sqrt().cosh(),
            Self::Gamma { shape, rate } => (one + z / rate).powf(-shape),
            Self::GeomHLimit => 2.0 / (one + (one + 4.0 * z).sqrt()),
            Self::MittagLeffler { alpha, beta } => {
                if z == Complex64::new(0.0, 0.0) {
                    one
                } else {
                    one / (one + beta * z.powf(alpha))
                }
            }
        })
    }

    /// `L'(0) = -E[Y]`.
    pub fn deriv_at_0(&self) -> f64 {
        match *self {
            Self::Exponential | Self::Delta1 | Self::Cosh | Self::GeomHLimit => -1.0,
            Self::Gamma { shape, rate } => -shape / rate,
            Self::MittagLeffler { alpha, beta } => {
                if alpha == 1.0 { -beta } else { f64::NEG_INFINITY }
            }
        }
    }

    /// `lim_{u→∞} L(u)`, the mass of `Y` at zero.
    pub fn atom(&self) -> f64 {
        0.0
    }

    /// Largest argument at which `L` is still resolved in double precision.
    pub fn u_max(&self) -> f64 {
        match self {
            Self::Delta1 => 745.0,
            Self::Cosh => 2.8e5,
            _ => 1e300,
        }
    }

    /// Exact Taylor coefficients of `φ_c` when they are known in closed
    /// form.
    pub fn series_hint(&self, c: f64, order: usize) -> Option<TruncatedSeries> {
        match *self {
            Self::Exponential => PgfFamily::geometric(1.0 / c).ok()?.series(order).ok(),
            Self::Delta1 => {
                let k = c.round();
                (c == k && k >= 0.0 && k as usize <= order).then(|| TruncatedSeries::monomial(k as usize, order))
            }
            Self::Cosh => {
                let n = c.sqrt().round();
                (n >= 1.0 && n * n == c).then(|| PgfFamily::chebyshev_hitting(n as u32).ok()?.series(order).ok())?
            }
            _ => None,
        }
    }
}

/// `L^←(s)`, by bracketing and bisection on the decreasing `L`.
pub fn laplace_inverse(laplace: &LaplaceSpec, s: f64) -> Result<f64> {
    if !(s > laplace.atom() && s <= 1.0) {
        return Err(Error::domain(
            "laplace_inverse",
            format!("s = {s} outside ({}, 1] for {}", laplace.atom(), laplace.name()),
        ));
    }
    if s == 1.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while laplace.eval(hi) > s {
        lo = hi;
        hi *= 2.0;
        if hi > laplace.u_max() {
            return Err(Error::domain(
                "laplace_inverse",
                format!("s = {s} is below the resolvable range of {}", laplace.name()),
            ));
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if laplace.eval(mid) > s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let closer = if (laplace.eval(lo) - s).abs() <= (laplace.eval(hi) - s).abs() { lo } else { hi };
    Ok(closer)
}

/// `s ↦ L(c·L^←(s))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BungeMap {
    pub laplace: LaplaceSpec,
    pub c: f64,
}

impl BungeMap {
    /// Values outside `(atom, 1]` are clamped to the endpoints.
    pub fn eval(&self, s: f64) -> f64 {
        if s <= self.laplace.atom() {
            return self.laplace.atom();
        }
        if s >= 1.0 {
            return 1.0;
        }
        match laplace_inverse(&self.laplace, s) {
            Ok(u) => self.laplace.eval(self.c * u),
            Err(_) => self.laplace.atom(),
        }
    }
}

pub fn bunge_map(laplace: &LaplaceSpec, c: f64) -> Result<BungeMap> {
    if !(c >= 1.0 && c.is_finite()) {
        return Err(Error::param("c", c, "scale must be finite and at least 1"));
    }
    Ok(BungeMap { laplace: *laplace, c })
}

/// `sup_u |φ(L(u)) - L(cu)|`.
pub fn poincare_residual<F: Fn(f64) -> f64>(phi: F, laplace: &LaplaceSpec, c: f64, u_grid: &[f64]) -> f64 {
    u_grid
        .iter()
        .map(|&u| (phi(laplace.eval(u)) - laplace.eval(c * u)).abs())
        .fold(0.0, f64::max)
}

/// `sup_s |φ(ψ(s)) - ψ(φ(s))|`.
pub fn commute_check<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(phi: F, psi: G, s_grid: &[f64]) -> f64 {
    s_grid
        .iter()
        .map(|&s| (phi(psi(s)) - psi(phi(s))).abs())
        .fold(0.0, f64::max)
}

/// Gap `sup_u |φ_c(e^{-u/c}) - L(u)|` for each `c`, which vanishes as
/// `N_c/c` converges to the law of `L`.
pub fn scaling_limit_check(laplace: &LaplaceSpec, c_sequence: &[f64], u_grid: &[f64]) -> Result<Vec<f64>> {
    c_sequence
        .iter()
        .map(|&c| {
            let map = bunge_map(laplace, c)?;
            Ok(u_grid
                .iter()
                .map(|&u| (map.eval((-u / c).exp()) - laplace.eval(u)).abs())
                .fold(0.0, f64::max))
        })
        .collect()
}

/// `L^←(s)` of the limit law `Y` of `e^{-(c-1)t}N(t)`, where `c = h'(1)`.
///
/// Computed as `(1-s)·exp(-∫_s^1 r(x) dx)` with
/// `r(x) = (c-1)/(h(x)-x) + 1/(1-x)`, which is integrable at 1 and
/// normalizes `Y` to mean 1.
pub fn ct_laplace_inverse(h: &GeneratingDistribution, s: f64) -> Result<f64> {
    let c = h.mean();
    if !c.is_finite() || c <= 1.0 {
        return Err(Error::Unsupported {
            op: "ct_laplace_inverse",
            what: format!("{} is not supercritical with finite mean", h.name()),
        });
    }
    let q = h.extinction_probability();
    if !(s > q && s <= 1.0) {
        return Err(Error::domain("ct_laplace_inverse", format!("s = {s} outside ({q}, 1]")));
    }
    if s == 1.0 {
        return Ok(0.0);
    }
    let r = |v: f64| (c - 1.0) / h.drift(v) + 1.0 / v;
    let integral = quad::integrate(r, 0.0, 1.0 - s, 1e-13)?.value;
    Ok((1.0 - s) * (-integral).exp())
}

/// Extrapolates `(1 - L(u))/u` to `u = 0` along a decreasing sequence by
/// polynomial (Neville) extrapolation over the last few terms.
pub fn laplace_mean_limit(laplace: &LaplaceSpec, u_sequence: &[f64]) -> Result<f64> {
    if u_sequence.is_empty() || u_sequence.iter().any(|&u| !(u > 0.0)) {
        return Err(Error::domain("laplace_mean_limit", "needs a positive u-sequence"));
    }
    let tail = &u_sequence[u_sequence.len().saturating_sub(6)..];
    let xs: Vec<f64> = tail.to_vec();
    let mut ys: Vec<f64> = xs.iter().map(|&u| (1.0 - laplace.eval(u)) / u).collect();
    let n = xs.len();
    for level in 1..n {
        for i in 0..n - level {
            let (x0, x1) = (xs[i], xs[i + level]);
            ys[i] = (x0 * ys[i + 1] - x1 * ys[i]) / (x0 - x1);
        }
    }
    Ok(ys[0])
}

const LADDER_TOP: f64 = 0.25;
const LADDER_POINTS: usize = 22;
const LADDER_DEPTH: usize = 3;
const LADDER_SNR: f64 = 1e4;
const EXPONENT_TOLERANCE: f64 = 0.02;
const VALUE_NOISE: f64 = 1e-13;
const PROBE_POINTS: usize = 24;
const PROBE_ORDER: usize = 12;
const PROBE_TOLERANCE: f64 = 1e-12;

/// Outcome of the PGF-ness test for one scale `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgfnessReport {
    pub c: f64,
    #[serde(flatten)]
    pub verdict: PgfVerdict,
    /// Exact coefficients were available and checked.
    pub series_checked: bool,
    /// Leading small-`s` exponents found before stopping.
    pub exponents: Vec<f64>,
}

fn rejection(failure: PgfFailure, first_bad_index: Option<usize>, worst_violation: f64, tolerance_used: f64) -> PgfVerdict {
    PgfVerdict {
        is_pgf: false,
        first_bad_index,
        worst_violation,
        tolerance_used,
        total_mass: f64::NAN,
        failure: Some(failure),
    }
}

fn acceptance(total_mass: f64) -> PgfVerdict {
    PgfVerdict {
        is_pgf: true,
        first_bad_index: None,
        worst_violation: 0.0,
        tolerance_used: NONNEG_TOLERANCE,
        total_mass,
        failure: None,
    }
}

/// Peels off the leading terms `a_k s^{ρ_k}` of `φ` near 0. Each `ρ_k` must
/// be an integer above the previous one and each `a_k` positive.
fn exponent_ladder<F: Fn(f64) -> f64>(phi: F) -> (Vec<f64>, Option<PgfVerdict>) {
    let s: Vec<f64> = (0..LADDER_POINTS).map(|j| LADDER_TOP * 0.5f64.powi(j as i32)).collect();
    let mut f: Vec<f64> = s.iter().map(|&x| phi(x)).collect();
    let mut noise: Vec<f64> = f.iter().map(|v| VALUE_NOISE * v.abs() + f64::MIN_POSITIVE).collect();
    let mut exponents = Vec::new();
    let mut previous = f64::NEG_INFINITY;
    for level in 0..LADDER_DEPTH {
        let resolved = |j: usize| f[j].abs() > LADDER_SNR * noise[j];
        let pair = (0..f.len() - 1)
            .rev()
            .find(|&j| resolved(j) && resolved(j + 1) && f[j].signum() == f[j + 1].signum());
        let Some(j) = pair else { break };
        let rho = (f[j] / f[j + 1]).log2();
        let rounded = rho.round();
        exponents.push(rho);
        if (rho - rounded).abs() > EXPONENT_TOLERANCE || rounded < 0.0 || rounded <= previous {
            let failure = PgfFailure::NonIntegerExponent { level, exponent: rho };
            return (exponents, Some(rejection(failure, None, (rho - rounded).abs(), EXPONENT_TOLERANCE)));
        }
        if f[j] < 0.0 {
            let value = f[j] / s[j].powf(rounded);
            let failure = PgfFailure::NegativeCoefficient { index: rounded as usize, value };
            return (exponents, Some(rejection(failure, Some(rounded as usize), value, 0.0)));
        }
        let k = 2f64.powf(rounded);
        f = (0..f.len() - 1).map(|i| f[i] - k * f[i + 1]).collect();
        noise = (0..noise.len() - 1).map(|i| noise[i] + k * noise[i + 1]).collect();
        previous = rounded;
    }
    (exponents, None)
}

/// Signs of forward differences up to order 12 on an even grid of `[0, 1]`.
fn difference_probes<F: Fn(f64) -> f64>(phi: F) -> Option<PgfVerdict> {
    let h = 1.0 / PROBE_POINTS as f64;
    let values: Vec<f64> = (0..=PROBE_POINTS).map(|i| phi(i as f64 * h)).collect();
    if let Some(i) = values.iter().position(|&v| !(-PROBE_TOLERANCE..=1.0 + PROBE_TOLERANCE).contains(&v)) {
        return Some(rejection(PgfFailure::NotMonotone { at: i as f64 * h }, None, values[i], PROBE_TOLERANCE));
    }
    let mut diffs = values;
    for order in 1..=PROBE_ORDER {
        diffs = diffs.windows(2).map(|w| w[1] - w[0]).collect();
        let tolerance = 2f64.powi(order as i32) * PROBE_TOLERANCE;
        if let Some(i) = diffs.iter().position(|&d| d < -tolerance) {
            let failure = PgfFailure::NegativeDifference { order, at: i as f64 * h, value: diffs[i] };
            return Some(rejection(failure, None, diffs[i], tolerance));
        }
    }
    None
}

/// Decides whether `φ_c = L(c·L^←(·))` is a PGF.
///
/// Exact coefficients are checked when the transform supplies them; the
/// small-`s` exponent ladder and forward-difference probes run in every
/// case.
pub fn pgfness_of_map(laplace: &LaplaceSpec, c: f64, order: usize) -> PgfnessReport {
    let map = BungeMap { laplace: *laplace, c };
    let phi = |s: f64| map.eval(s);
    let mut report = PgfnessReport { c, verdict: acceptance(1.0), series_checked: false, exponents: Vec::new() };
    if c == 1.0 {
        report.exponents.push(1.0);
        return report;
    }
    if let Some(series) = laplace.series_hint(c, order) {
        report.series_checked = true;
        report.verdict = series.check_pgf(NONNEG_TOLERANCE);
        if !report.verdict.is_pgf {
            return report;
        }
    }
    let (exponents, failure) = exponent_ladder(phi);
    report.exponents = exponents;
    if let Some(verdict) = failure.or_else(|| difference_probes(phi)) {
        report.verdict = verdict;
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanClassification {
    FullInterval,
    Trivial,
    Naturals,
    Squares,
    /// Powers of the given base.
    Cyclic(f64),
    Unclassified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemigroupScan {
    pub transform: LaplaceSpec,
    pub c_grid: Vec<f64>,
    pub verdicts: Vec<PgfnessReport>,
    pub accepted: Vec<f64>,
    pub classification: ScanClassification,
    /// Products of accepted scales that fall on the grid are accepted.
    pub closed_under_products: bool,
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn is_integer(c: f64) -> bool {
    same(c, c.round())
}

fn is_square(c: f64) -> bool {
    is_integer(c) && {
        let r = c.round().sqrt().round();
        r * r == c.round()
    }
}

fn is_power_of(c: f64, base: f64) -> bool {
    if c <= 0.0 || base <= 1.0 {
        return false;
    }
    let k = (c.ln() / base.ln()).round();
    k >= 0.0 && same(c, base.powf(k))
}

/// Matches the accepted set against the templates in a fixed order; the
/// first exact match on the grid wins.
pub fn classify(c_grid: &[f64], accepted: &[f64]) -> ScanClassification {
    let matches = |pred: &dyn Fn(f64) -> bool| {
        let expected: Vec<f64> = c_grid.iter().copied().filter(|&c| pred(c)).collect();
        expected.len() == accepted.len() && expected.iter().zip(accepted).all(|(a, b)| same(*a, *b))
    };
    if matches(&|_| true) {
        return ScanClassification::FullInterval;
    }
    if matches(&|c| same(c, 1.0)) {
        return ScanClassification::Trivial;
    }
    if matches(&is_integer) {
        return ScanClassification::Naturals;
    }
    if matches(&is_square) {
        return ScanClassification::Squares;
    }
    if let Some(&base) = accepted.iter().find(|&&c| c > 1.0 && !same(c, 1.0)) {
        if matches(&|c| is_power_of(c, base)) {
            return ScanClassification::Cyclic(base);
        }
    }
    ScanClassification::Unclassified
}

fn closed_under_products(c_grid: &[f64], accepted: &[f64]) -> bool {
    accepted.iter().all(|&a| {
        accepted.iter().all(|&b| {
            let prod = a * b;
            !c_grid.iter().any(|&c| same(c, prod)) || accepted.iter().any(|&c| same(c, prod))
        })
    })
}

/// Tests every `c` of the grid in parallel and classifies the accepted set.
pub fn semigroup_scan(laplace: &LaplaceSpec, c_grid: &[f64], order: usize) -> SemigroupScan {
    let verdicts: Vec<PgfnessReport> = c_grid.par_iter().map(|&c| pgfness_of_map(laplace, c, order)).collect();
    let accepted: Vec<f64> = verdicts.iter().filter(|r| r.verdict.is_pgf).map(|r| r.c).collect();
    SemigroupScan {
        transform: *laplace,
        c_grid: c_grid.to_vec(),
        classification: classify(c_grid, &accepted),
        closed_under_products: closed_under_products(c_grid, &accepted),
        verdicts,
        accepted,
    }
}

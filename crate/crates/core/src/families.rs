//! Named probability generating functions and composition semigroups.
//!
//! Each [`PgfFamily`] member carries a closed-form evaluator on `[0, 1]`, a
//! mean, and a series seed. Families that form a continuous composition
//! semigroup expose their member at time `t` (parameter `p = e^{-t}`).
//!
//! [`GeneratingDistribution`] describes the brood law `H` that drives a
//! continuous-time Markov branching process; its marginal PGF at time `t`
//! is a member of one of the semigroup families.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Open01};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::series::TruncatedSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum PgfFamily {
    /// `φ(s) = s`, the law `δ₁`.
    Identity,
    /// `ps / (1 - (1-p)s)` on `{1, 2, ...}`.
    Geometric { p: f64 },
    /// PGF of `k·M`-type counts: `p^{1/k} s / (1 - (1-p)s^k)^{1/k}`.
    NegBinKM { p: f64, k: u32 },
    /// `1 - (1-s)^p`; infinite mean for `p < 1`.
    Sibuya { p: f64 },
    /// `1 / T_n(1/s)`: exit time of `{±n}` by a simple symmetric walk.
    ChebyshevHitting { n: u32 },
    /// Marginal at time `t` of the branching process with brood PGF
    /// `s² / (2 - s)`.
    GeomHCtbp { t: f64 },
    /// `1 - [p(1-s)^{-θ} + (1-p)(1-q)^{-θ}]^{-1/θ}`.
    Theta { p: f64, theta: f64, q: f64 },
    /// Finite support, `masses[k] = P(N = k)`.
    Masses { masses: Vec<f64> },
}

fn check_unit_open_closed(name: &'static str, p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::param(name, p, "must lie in (0, 1]"))
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::param("t", t, "must be finite and nonnegative"))
    }
}

/// Chebyshev polynomial `T_n(x)` by the three-term recurrence.
pub fn chebyshev_t(n: u32, x: f64) -> f64 {
    match n {
        0 => 1.0,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for _ in 1..n {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Monomial coefficients of `T_n`, lowest degree first.
fn chebyshev_coeffs(n: u32) -> Vec<f64> {
    let n = n as usize;
    let mut prev = vec![1.0];
    if n == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 1.0];
    for _ in 1..n {
        let mut next = vec![0.0; cur.len() + 1];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += 2.0 * c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

impl PgfFamily {
    pub fn geometric(p: f64) -> Result<Self> {
        check_unit_open_closed("p", p)?;
        Ok(Self::Geometric { p })
    }

    pub fn negative_binomial_km(p: f64, k: u32) -> Result<Self> {
        check_unit_open_closed("p", p)?;
        if k == 0 {
            return Err(Error::param("k", 0.0, "must be a positive integer"));
        }
        Ok(Self::NegBinKM { p, k })
    }

    pub fn sibuya(p: f64) -> Result<Self> {
        check_unit_open_closed("p", p)?;
        Ok(Self::Sibuya { p })
    }

    pub fn chebyshev_hitting(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", 0.0, "must be a positive integer"));
        }
        Ok(Self::ChebyshevHitting { n })
    }

    /// Yule process marginal at time `t`: geometric with `p = e^{-t}`.
    pub fn yule_member(t: f64) -> Result<Self> {
        check_time(t)?;
        Self::geometric((-t).exp())
    }

    /// Neveu process marginal at time `t`: Sibuya with `p = e^{-t}`.
    pub fn neveu_member(t: f64) -> Result<Self> {
        check_time(t)?;
        Self::sibuya((-t).exp())
    }

    pub fn geometric_h_ctbp(t: f64) -> Result<Self> {
        check_time(t)?;
        Ok(Self::GeomHCtbp { t })
    }

    pub fn theta_member(p: f64, theta: f64, q: f64) -> Result<Self> {
        check_unit_open_closed("p", p)?;
        if !(-1.0..=1.0).contains(&theta) || theta == 0.0 {
            return Err(Error::param("theta", theta, "must lie in [-1, 1] without 0"));
        }
        if !(0.0..1.0).contains(&q) {
            return Err(Error::param("q", q, "must lie in [0, 1)"));
        }
        Ok(Self::Theta { p, theta, q })
    }

    pub fn masses(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::param("masses", 0.0, "need at least one support point"));
        }
        if let Some(&m) = masses.iter().find(|m| !(**m >= 0.0)) {
            return Err(Error::param("masses", m, "masses must be nonnegative"));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::param("masses", total, "masses must sum to 1"));
        }
        Ok(Self::Masses { masses })
    }

    /// Point mass at `k`.
    pub fn constant(k: usize) -> Self {
        let mut masses = vec![0.0; k + 1];
        masses[k] = 1.0;
        Self::Masses { masses }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::Geometric { .. } => "geometric",
            Self::NegBinKM { .. } => "negbin-kM",
            Self::Sibuya { .. } => "sibuya",
            Self::ChebyshevHitting { .. } => "chebyshev-hitting",
            Self::GeomHCtbp { .. } => "geomH-ctbp",
            Self::Theta { .. } => "theta",
            Self::Masses { .. } => "masses",
        }
    }

    /// `φ(s)` for `s ∈ [0, 1]`.
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Self::Identity => s,
            Self::Geometric { p } => p * s / (1.0 - (1.0 - p) * s),
            Self::NegBinKM { p, k } => {
                let kf = k as f64;
                p.powf(1.0 / kf) * s / (1.0 - (1.0 - p) * s.powi(k as i32)).powf(1.0 / kf)
            }
            Self::Sibuya { p } => 1.0 - (1.0 - s).powf(p),
            Self::ChebyshevHitting { n } => {
                if s == 0.0 {
                    return 0.0;
                }
                let t = chebyshev_t(n, 1.0 / s);
                if t.is_infinite() { 0.0 } else { 1.0 / t }
            }
            Self::GeomHCtbp { t } => {
                let e2t = (2.0 * t).exp();
                2.0 * s / (s + (s * s + 4.0 * (1.0 - s) * e2t).sqrt())
            }
            Self::Theta { p, theta, q } => {
                if s >= 1.0 && theta > 0.0 {
                    return 1.0;
                }
                let bracket = p * (1.0 - s).powf(-theta) + (1.0 - p) * (1.0 - q).powf(-theta);
                1.0 - bracket.powf(-1.0 / theta)
            }
            Self::Masses { ref masses } => masses.iter().rev().fold(0.0, |acc, &m| acc * s + m),
        }
    }

    /// `φ'(1)`, or `+∞`.
    pub fn mean(&self) -> f64 {
        match *self {
            Self::Identity => 1.0,
            Self::Geometric { p } | Self::NegBinKM { p, .. } => 1.0 / p,
            Self::Sibuya { p } => {
                if p < 1.0 { f64::INFINITY } else { 1.0 }
            }
            Self::ChebyshevHitting { n } => (n as f64).powi(2),
            Self::GeomHCtbp { t } => (2.0 * t).exp(),
            Self::Theta { p, theta, .. } => {
                if theta > 0.0 { p.powf(-1.0 / theta) } else if p < 1.0 { f64::INFINITY } else { 1.0 }
            }
            Self::Masses { ref masses } => masses.iter().enumerate().map(|(k, m)| k as f64 * m).sum(),
        }
    }

    /// For `θ < 0` the theta family loses mass at infinity: `φ(1) < 1`.
    pub fn is_defective(&self) -> bool {
        matches!(*self, Self::Theta { p, theta, .. } if theta < 0.0 && p < 1.0)
    }

    /// Member at time `t` of the composition semigroup this family belongs
    /// to, with `p = e^{-t}`.
    pub fn semigroup_member(&self, t: f64) -> Option<Self> {
        check_time(t).ok()?;
        let p = (-t).exp();
        match *self {
            Self::Identity => Some(Self::Identity),
            Self::Geometric { .. } => Some(Self::Geometric { p }),
            Self::NegBinKM { k, .. } => Some(Self::NegBinKM { p, k }),
            Self::Sibuya { .. } => Some(Self::Sibuya { p }),
            Self::GeomHCtbp { .. } => Some(Self::GeomHCtbp { t }),
            Self::Theta { theta, q, .. } => Some(Self::Theta { p, theta, q }),
            Self::ChebyshevHitting { .. } | Self::Masses { .. } => None,
        }
    }

    /// Taylor coefficients at 0 up to `order`.
    pub fn series(&self, order: usize) -> Result<TruncatedSeries> {
        let one_minus_s = || {
            let mut c = vec![0.0; order + 1];
            c[0] = 1.0;
            if order >= 1 {
                c[1] = -1.0;
            }
            TruncatedSeries::new(c)
        };
        match *self {
            Self::Identity => Ok(TruncatedSeries::identity(order)),
            Self::Geometric { p } => Ok(TruncatedSeries::from_fn(order, |n| {
                if n == 0 { 0.0 } else { p * (1.0 - p).powi(n as i32 - 1) }
            })),
            Self::NegBinKM { p, k } => {
                let k = k as usize;
                let mut inner = TruncatedSeries::constant(1.0, order).coeffs().to_vec();
                if k <= order {
                    inner[k] = -(1.0 - p);
                }
                let powered = TruncatedSeries::new(inner)?.powf(-1.0 / k as f64)?;
                Ok(TruncatedSeries::identity(order)
                    .mul(&powered)
                    .scale(p.powf(1.0 / k as f64)))
            }
            Self::Sibuya { p } => {
                let mut c = vec![0.0; order + 1];
                if order >= 1 {
                    c[1] = p;
                }
                for n in 1..order {
                    c[n + 1] = c[n] * (n as f64 - p) / (n as f64 + 1.0);
                }
                TruncatedSeries::new(c)
            }
            Self::ChebyshevHitting { n } => {
                // 1/T_n(1/s) = s^n / Σ_k t_k s^{n-k}
                let t = chebyshev_coeffs(n);
                let deg = n as usize;
                let reversed = TruncatedSeries::from_fn(order, |j| if j <= deg { t[deg - j] } else { 0.0 });
                Ok(TruncatedSeries::monomial(deg, order).mul(&reversed.recip()?))
            }
            Self::GeomHCtbp { t } => {
                let e2t = (2.0 * t).exp();
                let mut disc = vec![0.0; order + 1];
                disc[0] = 4.0 * e2t;
                if order >= 1 {
                    disc[1] = -4.0 * e2t;
                }
                if order >= 2 {
                    disc[2] = 1.0;
                }
                let root = TruncatedSeries::new(disc)?.sqrt()?;
                let denom = TruncatedSeries::identity(order).add(&root);
                Ok(TruncatedSeries::identity(order).scale(2.0).mul(&denom.recip()?))
            }
            Self::Theta { p, theta, q } => {
                let bracket = one_minus_s()?
                    .powf(-theta)?
                    .scale(p)
                    .add(&TruncatedSeries::constant((1.0 - p) * (1.0 - q).powf(-theta), order));
                Ok(TruncatedSeries::constant(1.0, order).sub(&bracket.powf(-1.0 / theta)?))
            }
            Self::Masses { ref masses } => Ok(TruncatedSeries::from_fn(order, |k| {
                masses.get(k).copied().unwrap_or(0.0)
            })),
        }
    }
}

/// Brood law `H` on `{0, 2, 3, ...}` of a continuous-time branching process
/// in which every particle is replaced at unit rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case")]
pub enum GeneratingDistribution {
    /// `H ≡ 2`, `h(s) = s²`.
    YuleH,
    /// `h(s) = s + (1-s)ln(1-s)`, masses `1/(n(n-1))`, `n ≥ 2`.
    NeveuH,
    /// `P(H = n) = 2^{1-n}`, `n ≥ 2`; `h(s) = s²/(2-s)`.
    ShiftedGeomH,
    /// `h(s) = s + [(1-s)^{1+θ} - (1-q)^θ (1-s)] / [1 + θ - (1-q)^θ]`.
    ThetaH { theta: f64, q: f64 },
}

impl GeneratingDistribution {
    pub fn yule() -> Self {
        Self::YuleH
    }

    pub fn neveu() -> Self {
        Self::NeveuH
    }

    pub fn shifted_geometric() -> Self {
        Self::ShiftedGeomH
    }

    /// Only the supercritical finite-mean range `θ ∈ (0, 1]` yields a
    /// proper brood law.
    pub fn theta(theta: f64, q: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::param("theta", theta, "brood law requires theta in (0, 1]"));
        }
        if !(0.0..1.0).contains(&q) {
            return Err(Error::param("q", q, "must lie in [0, 1)"));
        }
        Ok(Self::ThetaH { theta, q })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::YuleH => "yuleH",
            Self::NeveuH => "neveuH",
            Self::ShiftedGeomH => "geomH",
            Self::ThetaH { .. } => "thetaH",
        }
    }

    fn theta_denominator(theta: f64, q: f64) -> (f64, f64) {
        let k = (1.0 - q).powf(theta);
        (k, 1.0 + theta - k)
    }

    /// `h(s)`.
    pub fn h(&self, s: f64) -> f64 {
        s + self.drift(1.0 - s)
    }

    /// `h(1 - v) - (1 - v)`, written in `v` so that it stays accurate as
    /// `v → 0`.
    pub fn drift(&self, v: f64) -> f64 {
        match *self {
            Self::YuleH => -v * (1.0 - v),
            Self::NeveuH => {
                if v == 0.0 { 0.0 } else { v * v.ln() }
            }
            Self::ShiftedGeomH => -2.0 * (1.0 - v) * v / (1.0 + v),
            Self::ThetaH { theta, q } => {
                let (k, d) = Self::theta_denominator(theta, q);
                (v.powf(1.0 + theta) - k * v) / d
            }
        }
    }

    /// Offspring mean `c = h'(1)`.
    pub fn mean(&self) -> f64 {
        match *self {
            Self::YuleH => 2.0,
            Self::NeveuH => f64::INFINITY,
            Self::ShiftedGeomH => 3.0,
            Self::ThetaH { theta, q } => {
                let (k, d) = Self::theta_denominator(theta, q);
                1.0 + k / d
            }
        }
    }

    /// Extinction probability of the process.
    pub fn extinction_probability(&self) -> f64 {
        match *self {
            Self::ThetaH { q, .. } => q,
            _ => 0.0,
        }
    }

    /// `P(H = n)`.
    pub fn mass(&self, n: u64) -> f64 {
        match *self {
            Self::YuleH => (n == 2) as u8 as f64,
            Self::NeveuH => {
                if n >= 2 { 1.0 / (n as f64 * (n as f64 - 1.0)) } else { 0.0 }
            }
            Self::ShiftedGeomH => {
                if n >= 2 { 2f64.powi(1 - n as i32) } else { 0.0 }
            }
            Self::ThetaH { theta, q } => {
                let (k, d) = Self::theta_denominator(theta, q);
                match n {
                    0 => (1.0 - k) / d,
                    1 => 0.0,
                    _ => {
                        let mut b = (1.0 + theta) * theta / 2.0;
                        for m in 2..n {
                            b *= (m as f64 - 1.0 - theta) / (m as f64 + 1.0);
                        }
                        b / d
                    }
                }
            }
        }
    }

    /// Draws one brood size.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match *self {
            Self::YuleH => 2,
            Self::NeveuH => {
                let u: f64 = Open01.sample(rng);
                let v = (1.0 / u).floor();
                if v >= u64::MAX as f64 { u64::MAX } else { 1 + v as u64 }
            }
            Self::ShiftedGeomH => {
                let e: f64 = Exp1.sample(rng);
                1 + 1 + (e / std::f64::consts::LN_2).floor() as u64
            }
            Self::ThetaH { .. } => {
                let u: f64 = Open01.sample(rng);
                let mut acc = self.mass(0);
                if u <= acc {
                    return 0;
                }
                let (theta, d) = match *self {
                    Self::ThetaH { theta, q } => (theta, Self::theta_denominator(theta, q).1),
                    _ => unreachable!(),
                };
                let mut b = (1.0 + theta) * theta / 2.0;
                let mut n = 2u64;
                // the search length is H itself; its mean is finite
                loop {
                    acc += b / d;
                    if u <= acc || b == 0.0 || n >= 1 << 40 {
                        return n;
                    }
                    b *= (n as f64 - 1.0 - theta) / (n as f64 + 1.0);
                    n += 1;
                }
            }
        }
    }

    /// Unit-rate time that corresponds to one unit of the semigroup
    /// parameter `t` (with `p = e^{-t}`) of the marginal family.
    pub fn time_scale(&self) -> f64 {
        match *self {
            Self::ThetaH { theta, q } => {
                let (k, d) = Self::theta_denominator(theta, q);
                d / (theta * k)
            }
            _ => 1.0,
        }
    }

    /// Marginal PGF of `N(t)` started from one particle.
    pub fn marginal(&self, t: f64) -> Result<PgfFamily> {
        check_time(t)?;
        match *self {
            Self::YuleH => PgfFamily::yule_member(t),
            Self::NeveuH => PgfFamily::neveu_member(t),
            Self::ShiftedGeomH => PgfFamily::geometric_h_ctbp(t),
            Self::ThetaH { theta, q } => PgfFamily::theta_member((-t / self.time_scale()).exp(), theta, q),
        }
    }

    /// `∫_{ε}^{1/2} dv / (-drift(v))`, the non-explosion integral cut at
    /// `1 - ε`.
    pub fn explosion_integral(&self, eps: f64) -> Result<f64> {
        let f = |v: f64| -1.0 / self.drift(v);
        // split geometrically so the 1/v-type endpoint behavior is resolved
        let mut total = 0.0;
        let mut hi = 0.5;
        while hi > eps {
            let lo = (hi * 0.1).max(eps);
            total += quad::integrate(f, lo, hi, 1e-10)?.value;
            hi = lo;
        }
        Ok(total)
    }

    /// Numerical evidence that the non-explosion integral diverges: the
    /// truncated integral keeps growing as the cut approaches 1.
    pub fn is_non_explosive(&self) -> Result<bool> {
        let cuts = [1e-2, 1e-4, 1e-6, 1e-8, 1e-10];
        let values = cuts
            .iter()
            .map(|&e| self.explosion_integral(e))
            .collect::<Result<Vec<_>>>()?;
        let increasing = values.windows(2).all(|w| w[1] > w[0]);
        let last_gain = values[4] - values[3];
        Ok(increasing && last_gain > 0.05)
    }
}

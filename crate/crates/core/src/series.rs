//! Truncated power series at 0.
//!
//! A [`TruncatedSeries`] of order `M` stores the coefficients of
//! `s^0, ..., s^M`. Every binary operation truncates to the smaller of the
//! two orders. This is the algebra used for PGF composition, coefficient
//! extraction, and PGF-ness checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Order used for functional checks.
pub const DEFAULT_ORDER: usize = 64;
/// Order used when estimating means.
pub const MEAN_ORDER: usize = 512;
/// Relative tolerance scale for nonnegativity checks.
pub const NONNEG_TOLERANCE: f64 = 1e-9;
/// Missing mass above which a truncated mean is only a lower bound.
pub const TAIL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSeries {
    coeffs: Vec<f64>,
}

/// Mean read off a truncated PGF series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesMean {
    pub value: f64,
    /// `1 - Σ coeffs`.
    pub tail_mass: f64,
    /// Set when the tail mass exceeds [`TAIL_TOLERANCE`]; the true mean is
    /// then at least `value` and possibly infinite.
    pub is_lower_bound: bool,
}

/// Why a candidate failed to be a probability generating function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PgfFailure {
    NegativeCoefficient { index: usize, value: f64 },
    MassExceedsOne { mass: f64 },
    /// Small-`s` behavior `K s^ρ` with non-integer (or negative) `ρ`.
    NonIntegerExponent { level: usize, exponent: f64 },
    /// A forward difference of order `order` was negative.
    NegativeDifference { order: usize, at: f64, value: f64 },
    /// The candidate left `[0, 1]` or decreased.
    NotMonotone { at: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgfVerdict {
    pub is_pgf: bool,
    pub first_bad_index: Option<usize>,
    pub worst_violation: f64,
    pub tolerance_used: f64,
    pub total_mass: f64,
    pub failure: Option<PgfFailure>,
}

impl TruncatedSeries {
    /// Builds a series from coefficients; order is `coeffs.len() - 1`.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::domain("TruncatedSeries::new", "empty coefficient vector"));
        }
        Ok(Self { coeffs })
    }

    pub fn zero(order: usize) -> Self {
        Self { coeffs: vec![0.0; order + 1] }
    }

    pub fn constant(value: f64, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = value;
        s
    }

    /// The series of `s^k` (zero if `k > order`).
    pub fn monomial(k: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        if k <= order {
            s.coeffs[k] = 1.0;
        }
        s
    }

    pub fn identity(order: usize) -> Self {
        Self::monomial(1, order)
    }

    /// Coefficients produced by `f(k)` for `k = 0..=order`.
    pub fn from_fn(order: usize, f: impl FnMut(usize) -> f64) -> Self {
        Self { coeffs: (0..=order).map(f).collect() }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn truncate(&self, order: usize) -> Self {
        let n = order.min(self.order());
        Self { coeffs: self.coeffs[..=n].to_vec() }
    }

    pub fn sum(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    /// Evaluates the truncated polynomial at `s` by Horner's rule.
    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        Self::from_fn(n, |k| self.coeffs[k] + other.coeffs[k])
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        Self::from_fn(n, |k| self.coeffs[k] - other.coeffs[k])
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * factor).collect() }
    }

    fn leading_index(&self) -> usize {
        self.coeffs.iter().position(|&c| c != 0.0).unwrap_or(self.coeffs.len())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        let mut out = vec![0.0; n + 1];
        let (la, lb) = (self.leading_index(), other.leading_index());
        for i in la..=n {
            let a = self.coeffs[i];
            if a == 0.0 {
                continue;
            }
            for j in lb..=(n - i).min(other.order()) {
                out[i + j] += a * other.coeffs[j];
            }
        }
        Self { coeffs: out }
    }

    /// `1 / self`; requires a nonzero constant term.
    pub fn recip(&self) -> Result<Self> {
        let c0 = self.coeffs[0];
        if c0 == 0.0 {
            return Err(Error::domain("TruncatedSeries::recip", "zero constant term"));
        }
        let n = self.order();
        let mut out = vec![0.0; n + 1];
        out[0] = 1.0 / c0;
        for k in 1..=n {
            let acc: f64 = (1..=k).map(|j| self.coeffs[j] * out[k - j]).sum();
            out[k] = -acc / c0;
        }
        Ok(Self { coeffs: out })
    }

    /// `self^a` for real `a`, by the J.C.P. Miller recurrence. Requires a
    /// positive constant term.
    pub fn powf(&self, a: f64) -> Result<Self> {
        let c0 = self.coeffs[0];
        if c0 <= 0.0 {
            return Err(Error::domain(
                "TruncatedSeries::powf",
                format!("constant term {c0} must be positive"),
            ));
        }
        let n = self.order();
        let mut out = vec![0.0; n + 1];
        out[0] = c0.powf(a);
        for k in 1..=n {
            let acc: f64 = (1..=k)
                .map(|j| (a * j as f64 - (k - j) as f64) * self.coeffs[j] * out[k - j])
                .sum();
            out[k] = acc / (k as f64 * c0);
        }
        Ok(Self { coeffs: out })
    }

    pub fn sqrt(&self) -> Result<Self> {
        self.powf(0.5)
    }

    /// Series of `self(inner(s))`, truncated to the smaller order.
    ///
    /// Requires `inner.coeff(0) ∈ [0, 1)`. With a zero constant term the
    /// result is exact up to truncation; otherwise it is exact for the
    /// truncated polynomial `self`, and the neglected tail of `self`
    /// contributes to every coefficient.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        let c0 = inner.coeffs[0];
        if !(0.0..1.0).contains(&c0) {
            return Err(Error::domain(
                "compose",
                format!("inner constant term {c0} outside [0, 1)"),
            ));
        }
        let n = self.order().min(inner.order());
        let inner = inner.truncate(n);
        let mut out = Self::constant(self.coeffs[0], n);
        let mut power = Self::constant(1.0, n);
        for k in 1..=self.order() {
            power = power.mul(&inner);
            if power.leading_index() > n {
                break;
            }
            let a = self.coeffs[k];
            if a != 0.0 {
                for (o, p) in out.coeffs.iter_mut().zip(&power.coeffs) {
                    *o += a * p;
                }
            }
        }
        Ok(out)
    }

    /// `k`-fold self-composition; `k = 0` gives the identity series.
    pub fn iterate(&self, k: usize) -> Result<Self> {
        let mut out = Self::identity(self.order());
        for _ in 0..k {
            out = self.compose(&out)?;
        }
        Ok(out)
    }

    /// `Σ k·coeffs[k]`, the derivative at 1 of the truncation.
    pub fn pgf_mean(&self) -> SeriesMean {
        let value = self.coeffs.iter().enumerate().map(|(k, c)| k as f64 * c).sum();
        let tail_mass = 1.0 - self.sum();
        SeriesMean {
            value,
            tail_mass,
            is_lower_bound: tail_mass > TAIL_TOLERANCE,
        }
    }

    /// Checks nonnegativity (relative to `max(1, max|coeff|)`) and that the
    /// total mass does not exceed `1 + tolerance`.
    pub fn check_pgf(&self, tolerance: f64) -> PgfVerdict {
        let scale = self.coeffs.iter().fold(1.0f64, |m, c| m.max(c.abs()));
        let tolerance_used = tolerance * scale;
        let worst_violation = self.coeffs.iter().copied().fold(f64::INFINITY, f64::min);
        let first_bad_index = self.coeffs.iter().position(|&c| c < -tolerance_used);
        let total_mass = self.sum();
        let failure = match first_bad_index {
            Some(index) => Some(PgfFailure::NegativeCoefficient { index, value: self.coeffs[index] }),
            None if total_mass > 1.0 + tolerance => Some(PgfFailure::MassExceedsOne { mass: total_mass }),
            None => None,
        };
        PgfVerdict {
            is_pgf: failure.is_none(),
            first_bad_index,
            worst_violation,
            tolerance_used,
            total_mass,
            failure,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn geom(p: f64, order: usize) -> TruncatedSeries {
        TruncatedSeries::from_fn(order, |n| if n == 0 { 0.0 } else { p * (1.0 - p).powi(n as i32 - 1) })
    }

    fn sibuya(p: f64, order: usize) -> TruncatedSeries {
        let mut c = vec![0.0; order + 1];
        c[1] = p;
        for n in 1..order {
            c[n + 1] = c[n] * (n as f64 - p) / (n as f64 + 1.0);
        }
        TruncatedSeries::new(c).unwrap()
    }

    /// Generalized binomial coefficient by direct product, independent of
    /// the recurrence above.
    fn binom(a: f64, n: usize) -> f64 {
        (0..n).fold(1.0, |acc, j| acc * (a - j as f64) / (j as f64 + 1.0))
    }

    #[test]
    fn compose_with_identity() {
        let g = geom(0.5, 64);
        let out = g.compose(&TruncatedSeries::identity(64)).unwrap();
        for (a, b) in out.coeffs().iter().zip(g.coeffs()) {
            assert_relative_eq!(a, b, max_relative = 1e-15);
        }
    }

    #[test]
    fn geometric_semigroup() {
        let g = geom(0.5, 64);
        let out = g.compose(&g).unwrap();
        let target = geom(0.25, 64);
        for k in 0..=64 {
            assert_relative_eq!(out.coeff(k), target.coeff(k), max_relative = 1e-12, epsilon = 1e-300);
        }
    }

    #[test]
    fn sibuya_semigroup_against_binomial_oracle() {
        let (p, q) = (0.3, 0.7);
        let out = sibuya(p, 64).compose(&sibuya(q, 64)).unwrap();
        for n in 1..=64 {
            // coefficient of s^n in 1 - (1 - s)^{pq}
            let oracle = -binom(p * q, n) * if n % 2 == 0 { 1.0 } else { -1.0 };
            assert_relative_eq!(out.coeff(n), oracle, max_relative = 1e-10);
        }
        assert_eq!(out.coeff(0), 0.0);
    }

    #[test]
    fn iterate_cases() {
        let id = TruncatedSeries::identity(16);
        assert_eq!(id.iterate(5).unwrap(), id);
        let g2 = geom(0.5, 64).iterate(2).unwrap();
        for k in 0..=64 {
            assert_relative_eq!(g2.coeff(k), geom(0.25, 64).coeff(k), max_relative = 1e-12, epsilon = 1e-300);
        }
        let sq = TruncatedSeries::monomial(2, 16);
        assert_eq!(sq.iterate(3).unwrap(), TruncatedSeries::monomial(8, 16));
        assert_eq!(sq.iterate(0).unwrap(), TruncatedSeries::identity(16));
    }

    #[test]
    fn compose_rejects_constant_term_at_one() {
        let outer = geom(0.5, 8);
        let inner = TruncatedSeries::constant(1.0, 8);
        assert!(matches!(outer.compose(&inner), Err(Error::Domain { .. })));
    }

    #[test]
    fn means() {
        let m = geom(0.25, 512).pgf_mean();
        assert!((m.value - 4.0).abs() < 1e-9 && !m.is_lower_bound);
        assert_eq!(TruncatedSeries::identity(8).pgf_mean().value, 1.0);
        // s^2 / (2 - s^2) = Σ 2^{-(k+1)} s^{2k+2}
        let hit = TruncatedSeries::from_fn(512, |n| {
            if n >= 2 && n % 2 == 0 { 0.5f64.powi(n as i32 / 2) } else { 0.0 }
        });
        assert!((hit.pgf_mean().value - 4.0).abs() < 1e-9);
        let heavy = sibuya(0.5, 512).pgf_mean();
        assert!(heavy.is_lower_bound);
    }

    #[test]
    fn check_pgf_cases() {
        let hit = TruncatedSeries::from_fn(64, |n| {
            if n >= 2 && n % 2 == 0 { 0.5f64.powi(n as i32 / 2) } else { 0.0 }
        });
        assert!(hit.check_pgf(NONNEG_TOLERANCE).is_pgf);
        assert!(TruncatedSeries::identity(8).check_pgf(NONNEG_TOLERANCE).is_pgf);
        let mut bad = geom(0.5, 16).coeffs().to_vec();
        bad[5] = -1e-3;
        let v = TruncatedSeries::new(bad).unwrap().check_pgf(NONNEG_TOLERANCE);
        assert!(!v.is_pgf);
        assert_eq!(v.first_bad_index, Some(5));
        let heavy = TruncatedSeries::new(vec![0.5, 0.7]).unwrap().check_pgf(NONNEG_TOLERANCE);
        assert!(matches!(heavy.failure, Some(PgfFailure::MassExceedsOne { .. })));
    }

    #[test]
    fn recip_and_powf() {
        // 1/(1 - s) = Σ s^k
        let one_minus = TruncatedSeries::new(vec![1.0, -1.0, 0.0, 0.0, 0.0]).unwrap();
        let r = one_minus.recip().unwrap();
        assert!(r.coeffs().iter().all(|&c| (c - 1.0).abs() < 1e-15));
        // (1 - s)^{1/2} squared is 1 - s
        let h = one_minus.sqrt().unwrap();
        let back = h.mul(&h);
        for (a, b) in back.coeffs().iter().zip(one_minus.coeffs()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(TruncatedSeries::identity(4).recip().is_err());
    }
}

//! Strictly stable exponents and closed-form random-stable laws.
//!
//! A strictly stable law has characteristic function `e^{-g(u)}` with
//! `g(u) = (β + iγ·sgn u)|u|^α`. Random-stable laws are scale mixtures
//! `X = Y^{1/α} Z` with `Z` strictly stable and `Y ≥ 0` independent; their
//! characteristic function is `L(g(u))` where `L` is the Laplace transform
//! of `Y`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{Error, Result};
use crate::rng::{SeedTree, StreamRole};
use crate::transform::LaplaceSpec;

/// Relative slack on the skew bound; `tan(π/4)` rounds below 1.
const SKEW_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableExponent {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Admissibility of `(α, β, γ)`.
pub fn check_admissible(exp: &StableExponent) -> bool {
    let StableExponent { alpha, beta, gamma } = *exp;
    if !(alpha > 0.0 && alpha <= 2.0) || !(beta >= 0.0) || !beta.is_finite() || !gamma.is_finite() {
        return false;
    }
    if alpha == 2.0 {
        return gamma == 0.0;
    }
    if alpha == 1.0 {
        return true;
    }
    let bound = beta * (FRAC_PI_2 * alpha).tan().abs();
    gamma.abs() <= bound * (1.0 + SKEW_SLACK)
}

/// `g(u) = (β + iγ·sgn u)|u|^α`.
pub fn g_eval(exp: &StableExponent, u: f64) -> Complex64 {
    if u == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let mag = u.abs().powf(exp.alpha);
    Complex64::new(exp.beta * mag, exp.gamma * u.signum() * mag)
}

impl StableExponent {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let exp = Self { alpha, beta, gamma };
        if check_admissible(&exp) {
            Ok(exp)
        } else if !(alpha > 0.0 && alpha <= 2.0) {
            Err(Error::param("alpha", alpha, "must lie in (0, 2]"))
        } else if !(beta >= 0.0) || !beta.is_finite() {
            Err(Error::param("beta", beta, "must be finite and nonnegative"))
        } else {
            Err(Error::param("gamma", gamma, "violates |gamma| <= beta |tan(pi alpha / 2)|"))
        }
    }

    pub fn symmetric(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(alpha, beta, 0.0)
    }

    /// One-sided law on `[0, ∞)` with Laplace transform `e^{-λu^α}`,
    /// `α ∈ (0, 1)`.
    pub fn positive(alpha: f64, lambda: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::param("alpha", alpha, "one-sided law needs alpha in (0, 1)"));
        }
        if !(lambda > 0.0) {
            return Err(Error::param("lambda", lambda, "must be positive"));
        }
        let beta = lambda * (FRAC_PI_2 * alpha).cos();
        let gamma = -lambda * (FRAC_PI_2 * alpha).sin();
        Ok(Self { alpha, beta, gamma })
    }

    pub fn is_admissible(&self) -> bool {
        check_admissible(self)
    }

    pub fn is_degenerate(&self) -> bool {
        self.beta == 0.0 && self.gamma == 0.0
    }

    pub fn g(&self, u: f64) -> Complex64 {
        g_eval(self, u)
    }

    /// Characteristic function `e^{-g(u)}`.
    pub fn chf(&self, u: f64) -> Complex64 {
        (-self.g(u)).exp()
    }

    /// Skewness parameter in `[-1, 1]` of the usual `S_α(σ, b, 0)` form.
    fn skewness(&self) -> f64 {
        if self.beta == 0.0 {
            return 0.0;
        }
        let b = -self.gamma / (self.beta * (FRAC_PI_2 * self.alpha).tan());
        b.clamp(-1.0, 1.0)
    }

    /// One draw by the uniform-angle/exponential transformation.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.is_degenerate() {
            return 0.0;
        }
        let alpha = self.alpha;
        if alpha == 2.0 {
            let z: f64 = StandardNormal.sample(rng);
            return (2.0 * self.beta).sqrt() * z;
        }
        let v = PI * (rng.random::<f64>() - 0.5);
        if alpha == 1.0 {
            return self.beta * v.tan() - self.gamma;
        }
        let w: f64 = Exp1.sample(rng);
        let b = self.skewness();
        let tan_term = b * (FRAC_PI_2 * alpha).tan();
        let shift = tan_term.atan() / alpha;
        let scale = (1.0 + tan_term * tan_term).powf(1.0 / (2.0 * alpha));
        let phase = alpha * (v + shift);
        let x = scale * phase.sin() / v.cos().powf(1.0 / alpha)
            * ((v - phase).cos() / w).powf((1.0 - alpha) / alpha);
        self.beta.powf(1.0 / alpha) * x
    }
}

/// `n` i.i.d. strictly stable draws.
pub fn sample_strictly_stable(exp: &StableExponent, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = SeedTree::new(seed, "strictly-stable").stream(0, StreamRole::Primary);
    (0..n).map(|_| exp.sample(&mut rng)).collect()
}

/// `n` draws of `Y^{1/α} Z` with `Y` from `y_sampler` and `Z` strictly
/// stable, on independent streams.
pub fn sample_product_representation<F>(mut y_sampler: F, exp: &StableExponent, n: usize, seed: u64) -> Vec<f64>
where
    F: FnMut(&mut crate::rng::SimRng) -> f64,
{
    let tree = SeedTree::new(seed, "product-representation");
    let mut y_rng = tree.stream(0, StreamRole::Mixing);
    let mut z_rng = tree.stream(0, StreamRole::Primary);
    (0..n)
        .map(|_| {
            let y = y_sampler(&mut y_rng);
            y.powf(1.0 / exp.alpha) * exp.sample(&mut z_rng)
        })
        .collect()
}

/// Density of the Mittag-Leffler law with `α = 1/2`, `β = 1`:
/// `1/√(πx) - eˣ·erfc(√x)`.
pub fn kovalenko_half_density(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain("kovalenko_half_density", format!("x = {x} must be positive")));
    }
    let lead = 1.0 / (PI * x).sqrt();
    if x < 4.0 {
        return Ok(lead - x.exp() * erfc(x.sqrt()));
    }
    Ok(lead - erfcx_continued_fraction(x.sqrt()))
}

/// `e^{z²}·erfc(z)` for `z ≥ 2` by the Laplace continued fraction
/// `1/(√π (z + (1/2)/(z + 1/(z + (3/2)/(z + …)))))`.
fn erfcx_continued_fraction(z: f64) -> f64 {
    let mut tail = z;
    for k in (1..=400).rev() {
        tail = z + 0.5 * k as f64 / tail;
    }
    1.0 / (PI.sqrt() * tail)
}

/// `f(u) = L(g(u))`, the characteristic function of `Y^{1/α} Z`.
pub fn evaluate_f(laplace: &LaplaceSpec, exp: &StableExponent, u: f64) -> Result<Complex64> {
    laplace.eval_complex(exp.g(u))
}

/// Which transform a law is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformKind {
    /// `E[e^{iuX}]` on `u ∈ [-10, 10]`.
    Characteristic,
    /// `E[e^{-uX}]` on `u ∈ [0, 10]`.
    Laplace,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum ClosedFormLaw {
    Exponential1,
    Gamma { shape: f64, rate: f64 },
    /// ChF `1/(1 + β|u|^α)`.
    Linnik { alpha: f64, beta: f64 },
    /// ChF `1/(1 + β²u²)`.
    LaplaceDist { beta: f64 },
    /// Laplace transform `1/(1 + βu^α)`, `α ∈ (0, 1]`.
    MittagLeffler { alpha: f64, beta: f64 },
    /// Mittag-Leffler with `α = 1/2`, `β = 1`.
    KovalenkoHalf,
    /// `√Y·N(0, σ²)` with `Y ~ Exp(1)`; ChF `1/(1 + σ²u²/2)`.
    GaussianMix { sigma: f64 },
    /// Strictly stable law itself.
    Stable { exponent: StableExponent },
}

impl ClosedFormLaw {
    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(Error::param("shape", shape, "must be positive"));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::param("rate", rate, "must be positive"));
        }
        Ok(Self::Gamma { shape, rate })
    }

    pub fn linnik(alpha: f64, beta: f64) -> Result<Self> {
        StableExponent::symmetric(alpha, beta)?;
        if beta == 0.0 {
            return Err(Error::param("beta", beta, "must be positive"));
        }
        Ok(Self::Linnik { alpha, beta })
    }

    pub fn laplace(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::param("beta", beta, "must be positive"));
        }
        Ok(Self::LaplaceDist { beta })
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

    pub fn gaussian_mix(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::param("sigma", sigma, "must be positive"));
        }
        Ok(Self::GaussianMix { sigma })
    }

    pub fn stable(exponent: StableExponent) -> Result<Self> {
        if !exponent.is_admissible() {
            return Err(Error::param("gamma", exponent.gamma, "exponent is not admissible"));
        }
        Ok(Self::Stable { exponent })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Exponential1 => "exp1",
            Self::Gamma { .. } => "gamma",
            Self::Linnik { .. } => "linnik",
            Self::LaplaceDist { .. } => "laplace",
            Self::MittagLeffler { .. } => "mittag-leffler",
            Self::KovalenkoHalf => "kovalenko-half",
            Self::GaussianMix { .. } => "gaussian-mix",
            Self::Stable { .. } => "stable",
        }
    }

    /// Symmetric-mixture view: `(α, β)` with ChF `1/(1 + β|u|^α)`.
    fn linnik_form(&self) -> Option<(f64, f64)> {
        match *self {
            Self::Linnik { alpha, beta } => Some((alpha, beta)),
            Self::LaplaceDist { beta } => Some((2.0, beta * beta)),
            Self::GaussianMix { sigma } => Some((2.0, sigma * sigma / 2.0)),
            _ => None,
        }
    }

    fn mittag_leffler_form(&self) -> Option<(f64, f64)> {
        match *self {
            Self::MittagLeffler { alpha, beta } => Some((alpha, beta)),
            Self::KovalenkoHalf => Some((0.5, 1.0)),
            _ => None,
        }
    }

    /// Index `α` such that a count with mean `m` rescales the law by
    /// `m^{1/α}`.
    pub fn index(&self) -> f64 {
        match *self {
            Self::Exponential1 | Self::Gamma { .. } => 1.0,
            Self::Stable { exponent } => exponent.alpha,
            _ => self
                .linnik_form()
                .or_else(|| self.mittag_leffler_form())
                .map(|(a, _)| a)
                .unwrap_or(1.0),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        match *self {
            Self::Exponential1 | Self::Gamma { .. } | Self::MittagLeffler { .. } | Self::KovalenkoHalf => true,
            Self::Stable { exponent } => {
                exponent.alpha < 1.0 && exponent.beta > 0.0 && exponent.skewness() == 1.0
            }
            _ => false,
        }
    }

    pub fn has_finite_variance(&self) -> bool {
        match *self {
            Self::Exponential1 | Self::Gamma { .. } | Self::LaplaceDist { .. } | Self::GaussianMix { .. } => true,
            Self::Linnik { alpha, .. } => alpha == 2.0,
            Self::MittagLeffler { alpha, .. } => alpha == 1.0,
            Self::KovalenkoHalf => false,
            Self::Stable { exponent } => exponent.alpha == 2.0 || exponent.is_degenerate(),
        }
    }

    pub fn transform_kind(&self) -> TransformKind {
        if self.is_nonnegative() { TransformKind::Laplace } else { TransformKind::Characteristic }
    }

    /// `E[e^{iuX}]`.
    pub fn chf(&self, u: f64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        let minus_iu = Complex64::new(0.0, -u);
        match *self {
            Self::Exponential1 => one / (one + minus_iu),
            Self::Gamma { shape, rate } => (one + minus_iu / rate).powf(-shape),
            Self::Stable { exponent } => exponent.chf(u),
            _ => {
                if let Some((alpha, beta)) = self.linnik_form() {
                    return one / (1.0 + beta * u.abs().powf(alpha));
                }
                let (alpha, beta) = self.mittag_leffler_form().expect("covered above");
                if u == 0.0 {
                    return one;
                }
                one / (one + beta * minus_iu.powf(alpha))
            }
        }
    }

    /// `E[e^{-uX}]` for nonnegative laws, `u ≥ 0`.
    pub fn laplace_transform(&self, u: f64) -> Option<f64> {
        match *self {
            Self::Exponential1 => Some(1.0 / (1.0 + u)),
            Self::Gamma { shape, rate } => Some((1.0 + u / rate).powf(-shape)),
            Self::MittagLeffler { .. } | Self::KovalenkoHalf => {
                let (alpha, beta) = self.mittag_leffler_form()?;
                Some(1.0 / (1.0 + beta * u.powf(alpha)))
            }
            Self::Stable { exponent } if self.is_nonnegative() => {
                let lambda = exponent.beta / (FRAC_PI_2 * exponent.alpha).cos();
                Some((-lambda * u.powf(exponent.alpha)).exp())
            }
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Exponential1 => Exp1.sample(rng),
            Self::Gamma { shape, rate } => Gamma::new(shape, 1.0 / rate).expect("validated").sample(rng),
            Self::Stable { exponent } => exponent.sample(rng),
            _ => {
                let y: f64 = Exp1.sample(rng);
                if let Some((alpha, beta)) = self.linnik_form() {
                    let z = StableExponent { alpha, beta, gamma: 0.0 };
                    return y.powf(1.0 / alpha) * z.sample(rng);
                }
                let (alpha, beta) = self.mittag_leffler_form().expect("covered above");
                if alpha == 1.0 {
                    return beta * y;
                }
                let z = StableExponent::positive(alpha, beta).expect("validated");
                y.powf(1.0 / alpha) * z.sample(rng).max(0.0)
            }
        }
    }

    /// `n` draws from the stream for `seed`.
    pub fn sample_n(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = SeedTree::new(seed, self.name()).stream(0, StreamRole::Primary);
        (0..n).map(|_| self.sample(&mut rng)).collect()
    }
}

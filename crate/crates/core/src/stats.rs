//! Goodness-of-fit statistics: Kolmogorov–Smirnov and transform gaps.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest sample accepted by the KS routines.
pub const MIN_KS_SAMPLES: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub effective_n: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleStat {
    pub ks_stat: f64,
    pub ks_pvalue: f64,
    pub ecf_gap: f64,
}

/// `n` equally spaced points from `a` to `b` inclusive.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p_value(d: f64, ne: f64) -> f64 {
    let root = ne.sqrt();
    kolmogorov_survival((root + 0.12 + 0.11 / root) * d)
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.par_sort_unstable_by(f64::total_cmp);
    v
}

fn require(op: &'static str, n: usize) -> Result<()> {
    if n < MIN_KS_SAMPLES {
        Err(Error::InsufficientSamples { op, min: MIN_KS_SAMPLES, got: n })
    } else {
        Ok(())
    }
}

/// Two-sample KS statistic and asymptotic p-value; ties are handled by
/// stepping both empirical CDFs past each distinct value.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> Result<KsResult> {
    require("ks_two_sample", xs.len().min(ys.len()))?;
    let (a, b) = (sorted(xs), sorted(ys));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    Ok(KsResult { statistic: d, p_value: ks_p_value(d, ne), effective_n: ne })
}

/// One-sample KS statistic against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> Result<KsResult> {
    require("ks_one_sample", xs.len())?;
    let a = sorted(xs);
    let n = a.len() as f64;
    let d = a
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max);
    Ok(KsResult { statistic: d, p_value: ks_p_value(d, n), effective_n: n })
}

/// Empirical characteristic function at each grid point.
pub fn ecf(xs: &[f64], grid: &[f64]) -> Vec<Complex64> {
    let n = xs.len() as f64;
    grid.par_iter()
        .map(|&u| {
            let (c, s) = xs.iter().fold((0.0, 0.0), |(c, s), &x| {
                let (sin, cos) = (u * x).sin_cos();
                (c + cos, s + sin)
            });
            Complex64::new(c / n, s / n)
        })
        .collect()
}

/// Empirical Laplace transform at each grid point; samples must be
/// nonnegative.
pub fn empirical_laplace(xs: &[f64], grid: &[f64]) -> Vec<f64> {
    let n = xs.len() as f64;
    grid.par_iter()
        .map(|&u| xs.iter().map(|&x| (-u * x).exp()).sum::<f64>() / n)
        .collect()
}

/// `sup_u |ECF(u) - target(u)|`.
pub fn ecf_gap<F: Fn(f64) -> Complex64 + Sync>(xs: &[f64], target: F, grid: &[f64]) -> f64 {
    ecf(xs, grid)
        .iter()
        .zip(grid)
        .map(|(e, &u)| (e - target(u)).norm())
        .fold(0.0, f64::max)
}

/// `sup_u |ECF_x(u) - ECF_y(u)|`.
pub fn ecf_gap_two_sample(xs: &[f64], ys: &[f64], grid: &[f64]) -> f64 {
    ecf(xs, grid)
        .iter()
        .zip(ecf(ys, grid))
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
}

/// `sup_u |Ê[e^{-uX}] - target(u)|`.
pub fn laplace_gap<F: Fn(f64) -> f64>(xs: &[f64], target: F, grid: &[f64]) -> f64 {
    empirical_laplace(xs, grid)
        .iter()
        .zip(grid)
        .map(|(e, &u)| (e - target(u)).abs())
        .fold(0.0, f64::max)
}

/// KS and ECF comparison of two samples on the default grid `[-10, 10]`.
pub fn two_sample(xs: &[f64], ys: &[f64]) -> Result<TwoSampleStat> {
    let ks = ks_two_sample(xs, ys)?;
    let ecf_gap = ecf_gap_two_sample(xs, ys, &uniform_grid(-10.0, 10.0, 201));
    Ok(TwoSampleStat { ks_stat: ks.statistic, ks_pvalue: ks.p_value, ecf_gap })
}

/// Threshold `4/√n` used for transform gaps.
pub fn gap_threshold(n: usize) -> f64 {
    4.0 / (n as f64).sqrt()
}

/// Sample mean and its standard error.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

//! String names for families, laws, transforms and brood laws.
//!
//! Specs have the form `name` or `name:key=value,key=value`, for example
//! `geometric:p=0.5`, `linnik:alpha=1.5,beta=1` or `thetaH:theta=0.5,q=0.2`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::families::{GeneratingDistribution, PgfFamily};
use crate::stable::{ClosedFormLaw, StableExponent};
use crate::transform::LaplaceSpec;

pub const FAMILY_NAMES: &[&str] = &[
    "identity",
    "geometric",
    "negbin-kM",
    "sibuya",
    "chebyshev-hitting",
    "yule",
    "neveu",
    "geomH-ctbp",
    "theta",
    "masses",
];

pub const LAW_NAMES: &[&str] = &[
    "exp1",
    "gamma",
    "linnik",
    "laplace",
    "mittag-leffler",
    "kovalenko-half",
    "gaussian-mix",
    "stable",
];

pub const TRANSFORM_NAMES: &[&str] = &["exponential", "delta1", "cosh", "gamma", "geomH-limit", "mittag-leffler"];

pub const GENERATOR_NAMES: &[&str] = &["yuleH", "neveuH", "geomH", "thetaH"];

/// A spec split into its name and numeric parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSpec {
    pub name: String,
    pub params: BTreeMap<String, f64>,
}

struct Params<'a> {
    kind: &'static str,
    spec: &'a str,
    params: BTreeMap<String, f64>,
}

impl Params<'_> {
    fn malformed(&self, reason: String) -> Error {
        Error::Spec { kind: self.kind, spec: self.spec.to_string(), reason }
    }

    fn take(&mut self, key: &str) -> Result<f64> {
        self.params.remove(key).ok_or_else(|| self.malformed(format!("missing parameter `{key}`")))
    }

    fn take_or(&mut self, key: &str, default: f64) -> f64 {
        self.params.remove(key).unwrap_or(default)
    }

    fn take_count(&mut self, key: &str) -> Result<u32> {
        let v = self.take(key)?;
        if v.fract() != 0.0 || !(1.0..=u32::MAX as f64).contains(&v) {
            return Err(self.malformed(format!("`{key}` must be a positive integer, got {v}")));
        }
        Ok(v as u32)
    }

    /// Fails if any parameter was not consumed.
    fn finish<T>(self, value: T) -> Result<T> {
        match self.params.keys().next() {
            Some(extra) => Err(self.malformed(format!("unexpected parameter `{extra}`"))),
            None => Ok(value),
        }
    }
}

pub fn parse_spec(kind: &'static str, spec: &str) -> Result<ParsedSpec> {
    let malformed = |reason: String| Error::Spec { kind, spec: spec.to_string(), reason };
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n.trim(), Some(r)),
        None => (spec.trim(), None),
    };
    if name.is_empty() {
        return Err(malformed("empty name".into()));
    }
    let mut params = BTreeMap::new();
    for pair in rest.into_iter().flat_map(|r| r.split(',')).map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = pair.split_once('=').ok_or_else(|| malformed(format!("expected key=value, got `{pair}`")))?;
        let value: f64 = value.trim().parse().map_err(|_| malformed(format!("`{}` is not a number", value.trim())))?;
        if params.insert(key.trim().to_string(), value).is_some() {
            return Err(malformed(format!("duplicate parameter `{}`", key.trim())));
        }
    }
    Ok(ParsedSpec { name: name.to_string(), params })
}

fn resolve<'a>(kind: &'static str, spec: &'a str, valid: &[&'static str]) -> Result<(String, Params<'a>)> {
    let parsed = parse_spec(kind, spec)?;
    if !valid.contains(&parsed.name.as_str()) {
        return Err(Error::UnknownName { kind, name: parsed.name, valid: valid.to_vec() });
    }
    Ok((parsed.name, Params { kind, spec, params: parsed.params }))
}

pub fn parse_family(spec: &str) -> Result<PgfFamily> {
    let (name, mut p) = resolve("family", spec, FAMILY_NAMES)?;
    let family = match name.as_str() {
        "identity" => PgfFamily::Identity,
        "geometric" => PgfFamily::geometric(p.take("p")?)?,
        "negbin-kM" => {
            let prob = p.take("p")?;
            PgfFamily::negative_binomial_km(prob, p.take_count("k")?)?
        }
        "sibuya" => PgfFamily::sibuya(p.take("p")?)?,
        "chebyshev-hitting" => PgfFamily::chebyshev_hitting(p.take_count("n")?)?,
        "yule" => PgfFamily::yule_member(p.take("t")?)?,
        "neveu" => PgfFamily::neveu_member(p.take("t")?)?,
        "geomH-ctbp" => PgfFamily::geometric_h_ctbp(p.take("t")?)?,
        "theta" => {
            let (prob, theta) = (p.take("p")?, p.take("theta")?);
            PgfFamily::theta_member(prob, theta, p.take_or("q", 0.0))?
        }
        "masses" => {
            let mut masses = Vec::new();
            while let Some(m) = p.params.remove(&format!("p{}", masses.len())) {
                masses.push(m);
            }
            PgfFamily::masses(masses)?
        }
        _ => unreachable!(),
    };
    p.finish(family)
}

pub fn parse_law(spec: &str) -> Result<ClosedFormLaw> {
    let (name, mut p) = resolve("law", spec, LAW_NAMES)?;
    let law = match name.as_str() {
        "exp1" => ClosedFormLaw::Exponential1,
        "gamma" => {
            let shape = p.take("shape")?;
            ClosedFormLaw::gamma(shape, p.take_or("rate", shape))?
        }
        "linnik" => {
            let alpha = p.take("alpha")?;
            ClosedFormLaw::linnik(alpha, p.take_or("beta", 1.0))?
        }
        "laplace" => ClosedFormLaw::laplace(p.take_or("beta", 1.0))?,
        "mittag-leffler" => {
            let alpha = p.take("alpha")?;
            ClosedFormLaw::mittag_leffler(alpha, p.take_or("beta", 1.0))?
        }
        "kovalenko-half" => ClosedFormLaw::KovalenkoHalf,
        "gaussian-mix" => ClosedFormLaw::gaussian_mix(p.take_or("sigma", 1.0))?,
        "stable" => {
            let alpha = p.take("alpha")?;
            let beta = p.take_or("beta", 1.0);
            ClosedFormLaw::stable(StableExponent::new(alpha, beta, p.take_or("gamma", 0.0))?)?
        }
        _ => unreachable!(),
    };
    p.finish(law)
}

pub fn parse_transform(spec: &str) -> Result<LaplaceSpec> {
    let (name, mut p) = resolve("transform", spec, TRANSFORM_NAMES)?;
    let transform = match name.as_str() {
        "exponential" => LaplaceSpec::Exponential,
        "delta1" => LaplaceSpec::Delta1,
        "cosh" => LaplaceSpec::Cosh,
        "gamma" => {
            let shape = p.take("shape")?;
            LaplaceSpec::gamma(shape, p.take_or("rate", shape))?
        }
        "geomH-limit" => LaplaceSpec::GeomHLimit,
        "mittag-leffler" => {
            let alpha = p.take("alpha")?;
            LaplaceSpec::mittag_leffler(alpha, p.take_or("beta", 1.0))?
        }
        _ => unreachable!(),
    };
    p.finish(transform)
}

pub fn parse_generator(spec: &str) -> Result<GeneratingDistribution> {
    let (name, mut p) = resolve("generator", spec, GENERATOR_NAMES)?;
    let h = match name.as_str() {
        "yuleH" => GeneratingDistribution::yule(),
        "neveuH" => GeneratingDistribution::neveu(),
        "geomH" => GeneratingDistribution::shifted_geometric(),
        "thetaH" => {
            let theta = p.take("theta")?;
            GeneratingDistribution::theta(theta, p.take_or("q", 0.0))?
        }
        _ => unreachable!(),
    };
    p.finish(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CatalogEntry {
    pub kind: &'static str,
    pub name: &'static str,
    pub params: &'static str,
    pub formula: &'static str,
}

pub fn catalog() -> Vec<CatalogEntry> {
    let e = |kind, name, params, formula| CatalogEntry { kind, name, params, formula };
    vec![
        e("family", "identity", "", "φ(s) = s"),
        e("family", "geometric", "p ∈ (0,1]", "φ(s) = ps/(1-(1-p)s), mean 1/p"),
        e("family", "negbin-kM", "p ∈ (0,1], k ≥ 1", "φ(s) = p^{1/k} s/(1-(1-p)s^k)^{1/k}, mean 1/p"),
        e("family", "sibuya", "p ∈ (0,1]", "φ(s) = 1-(1-s)^p, infinite mean for p < 1"),
        e("family", "chebyshev-hitting", "n ≥ 1", "φ(s) = 1/T_n(1/s), mean n²"),
        e("family", "yule", "t ≥ 0", "geometric with p = e^{-t}"),
        e("family", "neveu", "t ≥ 0", "sibuya with p = e^{-t}"),
        e("family", "geomH-ctbp", "t ≥ 0", "ψ_t(s) = 2s/(s+√(s²+4(1-s)e^{2t})), mean e^{2t}"),
        e("family", "theta", "p ∈ (0,1], θ ∈ [-1,1]∖{0}, q ∈ [0,1)", "1-[p(1-s)^{-θ}+(1-p)(1-q)^{-θ}]^{-1/θ}"),
        e("family", "masses", "p0, p1, ... ≥ 0 summing to 1", "φ(s) = Σ p_k s^k"),
        e("law", "exp1", "", "Laplace 1/(1+u)"),
        e("law", "gamma", "shape > 0, rate > 0 (default shape)", "Laplace (1+u/rate)^{-shape}"),
        e("law", "linnik", "α ∈ (0,2], β > 0", "ChF 1/(1+β|u|^α)"),
        e("law", "laplace", "β > 0", "ChF 1/(1+β²u²)"),
        e("law", "mittag-leffler", "α ∈ (0,1], β > 0", "Laplace 1/(1+βu^α)"),
        e("law", "kovalenko-half", "", "density 1/√(πx) - eˣ erfc(√x), Laplace 1/(1+√u)"),
        e("law", "gaussian-mix", "σ > 0", "√E·N(0,σ²), ChF 1/(1+σ²u²/2)"),
        e("law", "stable", "α ∈ (0,2], β ≥ 0, |γ| ≤ β|tan(πα/2)|", "ChF exp(-(β+iγ sgn u)|u|^α)"),
        e("transform", "exponential", "", "L(u) = 1/(1+u)"),
        e("transform", "delta1", "", "L(u) = e^{-u}"),
        e("transform", "cosh", "", "L(u) = 1/cosh(√(2u))"),
        e("transform", "gamma", "shape > 0, rate > 0 (default shape)", "L(u) = (1+u/rate)^{-shape}"),
        e("transform", "geomH-limit", "", "L(u) = 2/(1+√(1+4u))"),
        e("transform", "mittag-leffler", "α ∈ (0,1], β > 0", "L(u) = 1/(1+βu^α)"),
        e("generator", "yuleH", "", "h(s) = s²"),
        e("generator", "neveuH", "", "h(s) = s+(1-s)ln(1-s), P(H=n) = 1/(n(n-1))"),
        e("generator", "geomH", "", "h(s) = s²/(2-s)"),
        e("generator", "thetaH", "θ ∈ (0,1], q ∈ [0,1)", "h(s) = s+[(1-s)^{1+θ}-(1-q)^θ(1-s)]/[1+θ-(1-q)^θ]"),
    ]
}

/// One line per entry: kind, name, parameter ranges and defining formula.
pub fn list_catalog() -> String {
    catalog()
        .iter()
        .map(|e| {
            let params = if e.params.is_empty() { "-" } else { e.params };
            format!("{:<10} {:<18} {:<40} {}\n", e.kind, e.name, params, e.formula)
        })
        .collect()
}

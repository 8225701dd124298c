//! Operator means of strictly positive matrices.
//!
//! Every mean is evaluated through its representing function `f`:
//! `A σ B = A^{1/2} f(A^{-1/2} B A^{-1/2}) A^{1/2}`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::{eigh, positivity_floor, HermitianMatrix};

const NORMALIZATION_TOL: f64 = 1e-12;
const MONOTONICITY_SAMPLES: usize = 64;

type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A named, stateless representing function of an operator mean.
#[derive(Clone)]
pub struct RepresentingFunction {
    name: String,
    f: Arc<ScalarFn>,
}

impl RepresentingFunction {
    /// Spot-checks `f(1) = 1` and monotonicity on a geometric grid.
    pub fn new(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let name = name.into();
        let at_one = f(1.0);
        if (at_one - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidMean(format!("{name}: f(1) = {at_one}, expected 1")));
        }
        let (lo, hi) = (1e-4_f64, 1e4_f64);
        let step = (hi / lo).ln() / (MONOTONICITY_SAMPLES - 1) as f64;
        let mut prev = f64::NEG_INFINITY;
        for k in 0..MONOTONICITY_SAMPLES {
            let t = lo * (step * k as f64).exp();
            let v = f(t);
            if !v.is_finite() {
                return Err(Error::RepresentingFunctionDomain { at: t });
            }
            if v < prev {
                return Err(Error::InvalidMean(format!("{name}: decreasing near t = {t:e}")));
            }
            prev = v;
        }
        Ok(RepresentingFunction { name, f: Arc::new(f) })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let v = (self.f)(t);
        if !v.is_finite() {
            return Err(Error::RepresentingFunctionDomain { at: t });
        }
        Ok(v)
    }

    pub fn power(mu: f64) -> Result<Self> {
        check_weight(mu)?;
        Self::new(format!("power({mu})"), move |t| power_fn(t, mu))
    }

    pub fn arithmetic() -> Self {
        Self::new("arithmetic", |t| 0.5 * (1.0 + t)).expect("valid")
    }

    pub fn harmonic() -> Self {
        Self::new("harmonic", |t| 2.0 * t / (1.0 + t)).expect("valid")
    }

    /// Looks up `arithmetic`, `harmonic`, `geometric` or `power(μ)`.
    pub fn named(name: &str) -> Result<Self> {
        match name {
            "arithmetic" => Ok(Self::arithmetic()),
            "harmonic" => Ok(Self::harmonic()),
            "geometric" => Self::power(0.5),
            other => {
                let mu = other
                    .strip_prefix("power(")
                    .and_then(|s| s.strip_suffix(')'))
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidMean(format!("unknown representing function {other:?}")))?;
                Self::power(mu)
            }
        }
    }
}

impl fmt::Debug for RepresentingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("RepresentingFunction").field(&self.name).finish()
    }
}

fn power_fn(t: f64, mu: f64) -> f64 {
    if mu == 0.5 {
        t.sqrt()
    } else {
        t.powf(mu)
    }
}

fn check_weight(mu: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::WeightOutOfRange(mu));
    }
    Ok(())
}

/// Which operator mean to evaluate.
#[derive(Clone, Debug)]
pub enum MeanSpec {
    Geometric,
    WeightedGeometric(f64),
    Generic(RepresentingFunction),
}

impl MeanSpec {
    pub fn weighted(mu: f64) -> Result<Self> {
        check_weight(mu)?;
        Ok(MeanSpec::WeightedGeometric(mu))
    }

    pub fn label(&self) -> String {
        match self {
            MeanSpec::Geometric => "geometric".into(),
            MeanSpec::WeightedGeometric(mu) => format!("weighted({mu})"),
            MeanSpec::Generic(f) => f.name().to_string(),
        }
    }

    pub fn representing_function(&self) -> RepresentingFunction {
        match self {
            MeanSpec::Geometric => RepresentingFunction::power(0.5).expect("valid"),
            MeanSpec::WeightedGeometric(mu) => RepresentingFunction::power(*mu).expect("checked"),
            MeanSpec::Generic(f) => f.clone(),
        }
    }

    pub fn apply(&self, a: &HermitianMatrix, b: &HermitianMatrix) -> Result<HermitianMatrix> {
        match self {
            MeanSpec::Geometric => geometric_mean(a, b),
            MeanSpec::WeightedGeometric(mu) => weighted_geometric_mean(a, b, *mu),
            MeanSpec::Generic(_) => kubo_ando_mean(a, b, self),
        }
    }

    pub fn to_json(&self) -> MeanJson {
        match self {
            MeanSpec::Geometric => MeanJson::Geometric,
            MeanSpec::WeightedGeometric(mu) => MeanJson::Weighted { mu: *mu },
            MeanSpec::Generic(f) => MeanJson::Named { name: f.name().to_string() },
        }
    }
}

/// Wire form of a [`MeanSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MeanJson {
    Geometric,
    Weighted { mu: f64 },
    Named { name: String },
}

impl MeanJson {
    pub fn into_spec(self) -> Result<MeanSpec> {
        match self {
            MeanJson::Geometric => Ok(MeanSpec::Geometric),
            MeanJson::Weighted { mu } => MeanSpec::weighted(mu),
            MeanJson::Named { name } => Ok(MeanSpec::Generic(RepresentingFunction::named(&name)?)),
        }
    }
}

impl std::str::FromStr for MeanSpec {
    type Err = Error;

    /// Accepts the JSON wire form or a bare registry name.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            serde_json::from_str::<MeanJson>(s)?.into_spec()
        } else if s == "geometric" {
            Ok(MeanSpec::Geometric)
        } else if let Some(inner) = s.strip_prefix("weighted(").and_then(|r| r.strip_suffix(')')) {
            let mu = inner
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidMean(format!("bad weight in {s:?}")))?;
            MeanSpec::weighted(mu)
        } else {
            Ok(MeanSpec::Generic(RepresentingFunction::named(s)?))
        }
    }
}

/// `A ♯ B`.
pub fn geometric_mean(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<HermitianMatrix> {
    weighted_geometric_mean(a, b, 0.5)
}

/// `A ♯_μ B = A^{1/2} (A^{-1/2} B A^{-1/2})^μ A^{1/2}`.
pub fn weighted_geometric_mean(a: &HermitianMatrix, b: &HermitianMatrix, mu: f64) -> Result<HermitianMatrix> {
    check_weight(mu)?;
    mean_with(a, b, |t| power_fn(t, mu))
}

/// Kubo–Ando mean with the representing function of `spec`.
pub fn kubo_ando_mean(a: &HermitianMatrix, b: &HermitianMatrix, spec: &MeanSpec) -> Result<HermitianMatrix> {
    let f = spec.representing_function();
    mean_with(a, b, |t| (f.f)(t))
}

fn mean_with(a: &HermitianMatrix, b: &HermitianMatrix, f: impl Fn(f64) -> f64) -> Result<HermitianMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    let ea = eigh(a)?;
    ea.require_strictly_positive(positivity_floor(ea.lambda_max()))?;
    let eb = b.eigenvalues()?;
    let (b_min, b_max) = (eb[0], eb[eb.len() - 1]);
    let b_floor = positivity_floor(b_max);
    if b_min <= b_floor {
        return Err(Error::NotStrictlyPositive { min_eigenvalue: b_min, floor: b_floor });
    }
    let a_half = ea.compose(f64::sqrt)?;
    let a_neg_half = ea.compose(|t| 1.0 / t.sqrt())?;
    let inner = b.sandwich(&a_neg_half)?;
    let inner_es = eigh(&inner)?;
    if inner_es.lambda_min() < 0.0 {
        return Err(Error::DomainViolation { eigenvalue: inner_es.lambda_min(), floor: 0.0 });
    }
    let middle = inner_es.compose(f)?;
    middle.sandwich(&a_half)
}

//! Scalar constants of the squared Pólya–Szegő and Diaz–Metcalf inequalities.
//!
//! All constants are functions of the spectral enclosures
//! `m1² ≤ A ≤ M1²`, `m2² ≤ B ≤ M2²`. Throughout, `m = m1·m2` and `M = M1·M2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::means::RepresentingFunction;

const GRID_POINTS: usize = 2048;
const GOLDEN_REL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralBounds {
    pub m1: f64,
    #[serde(rename = "M1")]
    pub big_m1: f64,
    pub m2: f64,
    #[serde(rename = "M2")]
    pub big_m2: f64,
}

impl SpectralBounds {
    pub fn new(m1: f64, big_m1: f64, m2: f64, big_m2: f64) -> Result<Self> {
        let b = SpectralBounds { m1, big_m1, m2, big_m2 };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi;
        if !ok(self.m1, self.big_m1) {
            return Err(Error::InvalidBounds(format!("need 0 < m1 <= M1, got m1={} M1={}", self.m1, self.big_m1)));
        }
        if !ok(self.m2, self.big_m2) {
            return Err(Error::InvalidBounds(format!("need 0 < m2 <= M2, got m2={} M2={}", self.m2, self.big_m2)));
        }
        Ok(())
    }

    /// `m = m1·m2`.
    pub fn small(&self) -> f64 {
        self.m1 * self.m2
    }

    /// `M = M1·M2`.
    pub fn big(&self) -> f64 {
        self.big_m1 * self.big_m2
    }

    /// Range `[m2²/M1², M2²/m1²]` of the spectrum of `A^{-1/2} B A^{-1/2}`.
    pub fn ratio_interval(&self) -> (f64, f64) {
        let l = (self.m2 * self.m2) / (self.big_m1 * self.big_m1);
        let h = (self.big_m2 * self.big_m2) / (self.m1 * self.m1);
        (l, h)
    }
}

/// Every constant at one set of bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    pub alpha: f64,
    pub beta: f64,
    pub dm: f64,
    #[serde(rename = "K")]
    pub dm_squared: f64,
    pub gruss: f64,
    pub kantorovich: f64,
}

impl BoundSet {
    pub fn new(b: &SpectralBounds) -> Self {
        BoundSet {
            alpha: alpha_polya_szego(b),
            beta: beta_squared(b),
            dm: dm_constant(b),
            dm_squared: dm_squared_constant(b),
            gruss: gruss_bound(b),
            kantorovich: kantorovich_factor(b.small(), b.big()),
        }
    }
}

/// `α = (M + m) / (2√(Mm))`.
pub fn alpha_polya_szego(b: &SpectralBounds) -> f64 {
    let (m, big) = (b.small(), b.big());
    (big + m) / (2.0 * (big * m).sqrt())
}

/// Piecewise constant of the squared Pólya–Szegő inequality: `α⁴` while
/// `α² ≤ √(M/m)`, otherwise `√(M/m)(2α² − √(M/m))`.
pub fn beta_squared(b: &SpectralBounds) -> f64 {
    let alpha = alpha_polya_szego(b);
    let a2 = alpha * alpha;
    let root = (b.big() / b.small()).sqrt();
    if a2 <= root {
        a2 * a2
    } else {
        root * (2.0 * a2 - root)
    }
}

/// `M2/m1 + m2/M1`.
pub fn dm_constant(b: &SpectralBounds) -> f64 {
    b.big_m2 / b.m1 + b.m2 / b.big_m1
}

/// `K = (M1m1(M2² + m2²) + M2m2(M1² + m1²))² / (8√(M1M2m1m2) M1²m1² M2m2)`.
pub fn dm_squared_constant(b: &SpectralBounds) -> f64 {
    let (m1, big1, m2, big2) = (b.m1, b.big_m1, b.m2, b.big_m2);
    let num = big1 * m1 * (big2 * big2 + m2 * m2) + big2 * m2 * (big1 * big1 + m1 * m1);
    let den = 8.0 * (big2 * big1 * m1 * m2).sqrt() * big1 * big1 * m1 * m1 * big2 * m2;
    num * num / den
}

/// `(β − 1)·M1²M2²`.
pub fn gruss_bound(b: &SpectralBounds) -> f64 {
    let big = b.big();
    (beta_squared(b) - 1.0) * big * big
}

/// `(M + m)² / (4Mm)` for `0 < m ≤ M`.
pub fn kantorovich_factor(m: f64, big: f64) -> f64 {
    (big + m) * (big + m) / (4.0 * big * m)
}

/// Chord coefficients `(μ_f, ν_f)` of `f` over `[l, h]`.
pub fn chord(f: &RepresentingFunction, l: f64, h: f64) -> Result<(f64, f64)> {
    let (fl, fh) = (f.eval(l)?, f.eval(h)?);
    let slope = (fh - fl) / (h - l);
    let intercept = (h * fl - l * fh) / (h - l);
    Ok((slope, intercept))
}

/// `max f(t)/(μ_f t + ν_f)` over `t ∈ [m2²/M1², M2²/m1²]`.
///
/// A 2048-point geometric grid locates the maximum, golden-section search
/// refines it inside the neighbouring grid cells.
pub fn alpha_general(f: &RepresentingFunction, b: &SpectralBounds) -> Result<f64> {
    let (l, h) = b.ratio_interval();
    if !(h > l) {
        return Ok(1.0);
    }
    let (slope, intercept) = chord(f, l, h)?;
    let ratio = |t: f64| -> Result<f64> { Ok(f.eval(t)? / (slope * t + intercept)) };

    let log_step = (h / l).ln() / (GRID_POINTS - 1) as f64;
    let grid = |k: usize| -> f64 {
        match k {
            0 => l,
            k if k == GRID_POINTS - 1 => h,
            k => l * (log_step * k as f64).exp(),
        }
    };
    let mut best_k = 0;
    let mut best = f64::NEG_INFINITY;
    for k in 0..GRID_POINTS {
        let v = ratio(grid(k))?;
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let lo = grid(best_k.saturating_sub(1));
    let hi = grid((best_k + 1).min(GRID_POINTS - 1));
    let (_, refined) = golden_section_max(|t| ratio(t).unwrap_or(f64::NEG_INFINITY), lo, hi, GOLDEN_REL_TOL);
    Ok(best.max(refined))
}

/// Maximizes a unimodal `g` on `[a, b]`; returns `(argmax, max)`.
pub fn golden_section_max(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64, rel_tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut g1 = g(x1);
    let mut g2 = g(x2);
    while (b - a) > rel_tol * (a.abs() + b.abs()).max(f64::MIN_POSITIVE) {
        if g1 < g2 {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + INV_PHI * (b - a);
            g2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - INV_PHI * (b - a);
            g1 = g(x1);
        }
    }
    if g1 >= g2 {
        (x1, g1)
    } else {
        (x2, g2)
    }
}

/// Closed form of [`alpha_general`] for `f(t) = t^μ`:
/// `μ^μ (1−μ)^{1−μ} (h − l) / ((h l^μ − l h^μ)^{1−μ} (h^μ − l^μ)^μ)`,
/// with `l = m2²/M1²`, `h = M2²/m1²`. Returns 1 on a degenerate interval and
/// at the endpoints `μ ∈ {0, 1}`.
pub fn alpha_weighted_geometric_closed(mu: f64, b: &SpectralBounds) -> Result<f64> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::WeightOutOfRange(mu));
    }
    let (l, h) = b.ratio_interval();
    if !(h > l) || mu == 0.0 || mu == 1.0 {
        return Ok(1.0);
    }
    let (hm, lm) = (h.powf(mu), l.powf(mu));
    let intercept_num = h * lm - l * hm;
    let slope_num = hm - lm;
    Ok(mu.powf(mu) * (1.0 - mu).powf(1.0 - mu) * (h - l)
        / (intercept_num.powf(1.0 - mu) * slope_num.powf(mu)))
}

/// Constant of the squared inequality for a general mean:
/// `max (α(M̃ + m̃)t − m̃M̃)/t²` over `[m̃, M̃]`, where
/// `m̃ = m1² f(m2²/m1²)` and `M̃ = M1² f(M2²/M1²)`.
pub fn beta_general(f: &RepresentingFunction, b: &SpectralBounds, alpha: f64) -> Result<f64> {
    let lo = b.m1 * b.m1 * f.eval((b.m2 * b.m2) / (b.m1 * b.m1))?;
    let hi = b.big_m1 * b.big_m1 * f.eval((b.big_m2 * b.big_m2) / (b.big_m1 * b.big_m1))?;
    let quotient = |t: f64| (alpha * (hi + lo) * t - lo * hi) / (t * t);
    if !(hi > lo) {
        return Ok(quotient(lo));
    }
    let stationary = (2.0 * hi * lo / (alpha * (hi + lo))).clamp(lo, hi);
    Ok(quotient(stationary).max(quotient(lo)).max(quotient(hi)))
}

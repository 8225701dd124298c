//! Random theorem instances with prescribed spectral enclosures, and their
//! JSON file format.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde_json::{json, Value};

use crate::bounds::SpectralBounds;
use crate::error::{Error, Result};
use crate::hermitian::{loewner_leq, CMatrix, HermitianMatrix};
use crate::maps::{random_map, MapKindWeights, PositiveMap};
use crate::random::haar_unitary;

pub const DEFAULT_DIMS: [usize; 4] = [1, 2, 4, 8];
pub const MAX_DIM: usize = 64;

/// Enclosure margin allowed on generated and loaded instances, relative to `max(M1², M2²)`.
const ENCLOSURE_REL_TOL: f64 = 1e-10;

/// Generator seed and stream index an instance was drawn from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SeedTrace {
    pub seed: u64,
    pub stream: u64,
}

/// `A`, `B` with `m1² ≤ A ≤ M1²`, `m2² ≤ B ≤ M2²` and a unital positive map.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub a: HermitianMatrix,
    pub b: HermitianMatrix,
    pub bounds: SpectralBounds,
    pub map: PositiveMap,
    pub seed_trace: SeedTrace,
}

impl Instance {
    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// Checks both enclosures and unitality; the error names the violated bound.
    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        let n = self.a.dim();
        if self.b.dim() != n || self.map.domain_dim() != n {
            return Err(Error::DimensionMismatch { left: n, right: self.b.dim().max(self.map.domain_dim()) });
        }
        let b = &self.bounds;
        let tol = ENCLOSURE_REL_TOL * (b.big_m1 * b.big_m1).max(b.big_m2 * b.big_m2);
        let checks = [
            ("m1^2 I <= A", HermitianMatrix::scalar(n, b.m1 * b.m1), self.a.clone()),
            ("A <= M1^2 I", self.a.clone(), HermitianMatrix::scalar(n, b.big_m1 * b.big_m1)),
            ("m2^2 I <= B", HermitianMatrix::scalar(n, b.m2 * b.m2), self.b.clone()),
            ("B <= M2^2 I", self.b.clone(), HermitianMatrix::scalar(n, b.big_m2 * b.big_m2)),
        ];
        for (name, l, r) in checks {
            let v = loewner_leq(&l, &r, tol)?;
            if !v.holds {
                return Err(Error::InvariantViolation { bound: name.into(), margin: v.margin });
            }
        }
        let unital = self.map.check_unital();
        if !unital.passes {
            return Err(Error::InvariantViolation { bound: "map unitality".into(), margin: -unital.residual });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let b = &self.bounds;
        json!({
            "n": self.dim(),
            "bounds": {"m1": b.m1, "M1": b.big_m1, "m2": b.m2, "M2": b.big_m2},
            "A": &self.a,
            "B": &self.b,
            "map": self.map.to_json(),
            "seed": self.seed_trace.seed,
            "stream": self.seed_trace.stream,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let field = |name: &str| v.get(name).ok_or_else(|| Error::Parse(format!("instance: missing field \"{name}\"")));
        let n = field("n")?
            .as_u64()
            .filter(|&n| n >= 1 && n as usize <= MAX_DIM)
            .ok_or_else(|| Error::Parse(format!("instance: field \"n\" must be an integer in 1..={MAX_DIM}")))?
            as usize;
        let bounds: SpectralBounds = serde_json::from_value(field("bounds")?.clone())
            .map_err(|e| Error::Parse(format!("instance: field \"bounds\": {e}")))?;
        let matrix = |name: &str| -> Result<HermitianMatrix> {
            let m: HermitianMatrix = serde_json::from_value(field(name)?.clone())
                .map_err(|e| Error::Parse(format!("instance: field \"{name}\": {e}")))?;
            if m.dim() != n {
                return Err(Error::Parse(format!("instance: field \"{name}\" is {}x{0}, expected n = {n}", m.dim())));
            }
            Ok(m)
        };
        let a = matrix("A")?;
        let b = matrix("B")?;
        let map = PositiveMap::from_json(field("map")?, n)?;
        let seed = v.get("seed").and_then(Value::as_u64).unwrap_or(0);
        let stream = v.get("stream").and_then(Value::as_u64).unwrap_or(0);
        let inst = Instance { a, b, bounds, map, seed_trace: SeedTrace { seed, stream } };
        inst.validate()?;
        Ok(inst)
    }
}

pub fn save_instance(inst: &Instance, mut w: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, &inst.to_json())?;
    writeln!(w)?;
    Ok(())
}

pub fn load_instance(mut r: impl Read) -> Result<Instance> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let v: Value = serde_json::from_str(&text)?;
    Instance::from_json(&v)
}

pub fn load_instance_file(path: &Path) -> Result<Instance> {
    load_instance(std::fs::File::open(path)?)
}

/// `UΛU*` with Haar `U` and eigenvalues uniform in `[lo, hi]`; with probability
/// 1/2 each, one eigenvalue is pinned to `lo` and another to `hi`.
pub fn random_hermitian_with_spectrum<R: Rng + ?Sized>(n: usize, lo: f64, hi: f64, rng: &mut R) -> HermitianMatrix {
    let eigenvalues = random_spectrum(n, lo, hi, rng);
    let u = haar_unitary(n, rng);
    from_spectrum(&eigenvalues, &u)
}

pub(crate) fn random_spectrum<R: Rng + ?Sized>(n: usize, lo: f64, hi: f64, rng: &mut R) -> Vec<f64> {
    let mut ev: Vec<f64> = (0..n).map(|_| if hi > lo { rng.random_range(lo..=hi) } else { lo }).collect();
    if rng.random_bool(0.5) {
        ev[0] = lo;
    }
    if rng.random_bool(0.5) {
        ev[n - 1] = hi;
    }
    ev
}

/// `U diag(λ) U*`.
pub fn from_spectrum(eigenvalues: &[f64], u: &CMatrix) -> HermitianMatrix {
    let mut scaled = u.clone();
    for (j, &lam) in eigenvalues.iter().enumerate() {
        scaled.column_mut(j).scale_mut(lam);
    }
    HermitianMatrix::symmetrized(scaled * u.adjoint())
}

pub fn random_instance<R: Rng + ?Sized>(
    n: usize,
    bounds: &SpectralBounds,
    rng: &mut R,
    weights: &MapKindWeights,
) -> Instance {
    let a = random_hermitian_with_spectrum(n, bounds.m1 * bounds.m1, bounds.big_m1 * bounds.big_m1, rng);
    let b = random_hermitian_with_spectrum(n, bounds.m2 * bounds.m2, bounds.big_m2 * bounds.big_m2, rng);
    let map = random_map(n, rng, weights);
    Instance { a, b, bounds: *bounds, map, seed_trace: SeedTrace::default() }
}

/// Log-uniform enclosure ratios `M/m ∈ [1, 5]` with lower ends in `[0.2, 2]`.
pub fn random_bounds<R: Rng + ?Sized>(rng: &mut R) -> SpectralBounds {
    let mut side = || {
        let m = rng.random_range(0.2..2.0);
        let ratio = (rng.random::<f64>() * 5f64.ln()).exp();
        (m, m * ratio)
    };
    let (m1, big1) = side();
    let (m2, big2) = side();
    SpectralBounds { m1, big_m1: big1, m2, big_m2: big2 }
}

/// Two-point instance attaining the Pólya–Szegő constant:
/// `A = diag(m1², M1²)`, `B = diag(M2², m2²)` and the vector state with weights
/// proportional to `1/(m1M2)` and `1/(M1m2)`.
pub fn equality_witness(bounds: &SpectralBounds) -> Instance {
    let b = bounds;
    let a = HermitianMatrix::diag(&[b.m1 * b.m1, b.big_m1 * b.big_m1]);
    let bm = HermitianMatrix::diag(&[b.big_m2 * b.big_m2, b.m2 * b.m2]);
    let w1 = 1.0 / (b.m1 * b.big_m2);
    let w2 = 1.0 / (b.big_m1 * b.m2);
    let (p1, p2) = (w1 / (w1 + w2), w2 / (w1 + w2));
    let mut v = CMatrix::zeros(2, 1);
    v[(0, 0)] = Complex64::new(p1.sqrt(), 0.0);
    v[(1, 0)] = Complex64::new(p2.sqrt(), 0.0);
    // Normalize again so V*V = 1 holds to rounding.
    let norm = v.norm();
    v /= Complex64::new(norm, 0.0);
    Instance { a, b: bm, bounds: *b, map: PositiveMap::Compression { v }, seed_trace: SeedTrace::default() }
}

/// `m ≤ A ≤ M` and `A ≤ B`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderedPair {
    pub a: HermitianMatrix,
    pub b: HermitianMatrix,
    pub m: f64,
    pub big_m: f64,
}

/// `B = A + S` with `S` PSD, `‖S‖ ≤ M`; each eigenvalue of `S` is zero with
/// probability 1/2 so that `B − A` is often rank deficient.
pub fn random_ordered_pair<R: Rng + ?Sized>(n: usize, m: f64, big_m: f64, rng: &mut R) -> OrderedPair {
    let a = random_hermitian_with_spectrum(n, m, big_m, rng);
    let cap = big_m * rng.random::<f64>();
    let s_ev: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.0..=cap) }).collect();
    let w = haar_unitary(n, rng);
    let s = from_spectrum(&s_ev, &w);
    let b = a.add(&s).expect("same dimension");
    OrderedPair { a, b, m, big_m }
}

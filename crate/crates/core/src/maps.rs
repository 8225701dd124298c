//! Unital positive linear maps.

use num_complex::Complex64;
use rand::Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::hermitian::{CMatrix, HermitianMatrix, MatrixJson};
use crate::random::{haar_isometry, haar_unitary};

const ISOMETRY_TOL: f64 = 1e-10;
const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A concrete unital positive linear map `Φ: M_n → M_k`.
#[derive(Clone, Debug, PartialEq)]
pub enum PositiveMap {
    Identity { n: usize },
    /// `Φ(A) = V* A V` with `V*V = I_k`.
    Compression { v: CMatrix },
    /// Keeps the diagonal blocks indexed by `blocks`, zeroes the rest.
    Pinching { n: usize, blocks: Vec<Vec<usize>> },
    /// `Φ(A) = Σ w_i U_i* A U_i`.
    UnitaryMixture { weights: Vec<f64>, unitaries: Vec<CMatrix> },
    /// `Φ(A) = tr(A)/n` as a 1×1 matrix.
    NormalizedTrace { n: usize },
}

impl PositiveMap {
    pub fn compression(v: CMatrix) -> Result<Self> {
        let k = v.ncols();
        if k == 0 || k > v.nrows() {
            return Err(Error::InvalidMap(format!("compression V must be n×k with 1 ≤ k ≤ n, got {:?}", v.shape())));
        }
        let resid = (v.adjoint() * &v - CMatrix::identity(k, k)).norm();
        if resid > ISOMETRY_TOL {
            return Err(Error::InvalidMap(format!("compression V*V deviates from I by {resid:e}")));
        }
        Ok(PositiveMap::Compression { v })
    }

    pub fn pinching(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        for &i in blocks.iter().flatten() {
            if i >= n || seen[i] {
                return Err(Error::InvalidMap(format!("pinching blocks do not partition 0..{n}")));
            }
            seen[i] = true;
        }
        if n == 0 || !seen.iter().all(|&s| s) || blocks.iter().any(Vec::is_empty) {
            return Err(Error::InvalidMap(format!("pinching blocks do not partition 0..{n}")));
        }
        Ok(PositiveMap::Pinching { n, blocks })
    }

    pub fn unitary_mixture(weights: Vec<f64>, unitaries: Vec<CMatrix>) -> Result<Self> {
        if weights.is_empty() || weights.len() != unitaries.len() {
            return Err(Error::InvalidMap("mixture needs one positive weight per unitary".into()));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidMap("mixture weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidMap(format!("mixture weights sum to {total}")));
        }
        let n = unitaries[0].nrows();
        for u in &unitaries {
            if u.shape() != (n, n) {
                return Err(Error::InvalidMap("mixture unitaries must share one square shape".into()));
            }
            let resid = (u.adjoint() * u - CMatrix::identity(n, n)).norm();
            if resid > ISOMETRY_TOL {
                return Err(Error::InvalidMap(format!("mixture U*U deviates from I by {resid:e}")));
            }
        }
        Ok(PositiveMap::UnitaryMixture { weights, unitaries })
    }

    pub fn domain_dim(&self) -> usize {
        match self {
            PositiveMap::Identity { n } | PositiveMap::Pinching { n, .. } | PositiveMap::NormalizedTrace { n } => *n,
            PositiveMap::Compression { v } => v.nrows(),
            PositiveMap::UnitaryMixture { unitaries, .. } => unitaries[0].nrows(),
        }
    }

    pub fn codomain_dim(&self) -> usize {
        match self {
            PositiveMap::Compression { v } => v.ncols(),
            PositiveMap::NormalizedTrace { .. } => 1,
            _ => self.domain_dim(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PositiveMap::Identity { .. } => "identity",
            PositiveMap::Compression { .. } => "compression",
            PositiveMap::Pinching { .. } => "pinching",
            PositiveMap::UnitaryMixture { .. } => "mixture",
            PositiveMap::NormalizedTrace { .. } => "trace",
        }
    }

    pub fn apply(&self, a: &HermitianMatrix) -> Result<HermitianMatrix> {
        if a.dim() != self.domain_dim() {
            return Err(Error::DimensionMismatch { left: self.domain_dim(), right: a.dim() });
        }
        Ok(match self {
            PositiveMap::Identity { .. } => a.clone(),
            PositiveMap::Compression { v } => a.congruence(v)?,
            PositiveMap::Pinching { n, blocks } => {
                let m = a.as_matrix();
                let mut out = CMatrix::zeros(*n, *n);
                for block in blocks {
                    for &i in block {
                        for &j in block {
                            out[(i, j)] = m[(i, j)];
                        }
                    }
                }
                HermitianMatrix::symmetrized(out)
            }
            PositiveMap::UnitaryMixture { weights, unitaries } => {
                let n = a.dim();
                let mut acc = CMatrix::zeros(n, n);
                for (w, u) in weights.iter().zip(unitaries) {
                    acc += (u.adjoint() * a.as_matrix() * u) * Complex64::new(*w, 0.0);
                }
                HermitianMatrix::symmetrized(acc)
            }
            PositiveMap::NormalizedTrace { n } => HermitianMatrix::diag(&[a.trace() / *n as f64]),
        })
    }

    /// `‖Φ(I) − I‖_F`, passing iff at most `1e-10 · codomain_dim`.
    pub fn check_unital(&self) -> UnitalCheck {
        let k = self.codomain_dim();
        let image = self.apply(&HermitianMatrix::identity(self.domain_dim())).expect("matching dimension");
        let residual = image.sub(&HermitianMatrix::identity(k)).expect("codomain dimension").frobenius_norm();
        UnitalCheck { residual, passes: residual <= 1e-10 * k as f64 }
    }

    pub fn to_json(&self) -> Value {
        match self {
            PositiveMap::Identity { .. } => json!({"kind": "identity"}),
            PositiveMap::Compression { v } => json!({"kind": "compression", "V": MatrixJson::from_matrix(v)}),
            PositiveMap::Pinching { blocks, .. } => json!({"kind": "pinching", "blocks": blocks}),
            PositiveMap::UnitaryMixture { weights, unitaries } => json!({
                "kind": "mixture",
                "weights": weights,
                "unitaries": unitaries.iter().map(MatrixJson::from_matrix).collect::<Vec<_>>(),
            }),
            PositiveMap::NormalizedTrace { .. } => json!({"kind": "trace"}),
        }
    }

    /// Parses the wire form; `n` supplies the domain of the dimension-free variants.
    pub fn from_json(value: &Value, n: usize) -> Result<Self> {
        let field = |name: &str| {
            value.get(name).ok_or_else(|| Error::Parse(format!("map: missing field \"{name}\"")))
        };
        let kind = field("kind")?
            .as_str()
            .ok_or_else(|| Error::Parse("map: field \"kind\" must be a string".into()))?;
        let map = match kind {
            "identity" => PositiveMap::Identity { n },
            "trace" => PositiveMap::NormalizedTrace { n },
            "compression" => {
                let v: MatrixJson = serde_json::from_value(field("V")?.clone())
                    .map_err(|e| Error::Parse(format!("map: field \"V\": {e}")))?;
                Self::compression(v.to_matrix()?)?
            }
            "pinching" => {
                let blocks: Vec<Vec<usize>> = serde_json::from_value(field("blocks")?.clone())
                    .map_err(|e| Error::Parse(format!("map: field \"blocks\": {e}")))?;
                Self::pinching(n, blocks)?
            }
            "mixture" => {
                let weights: Vec<f64> = serde_json::from_value(field("weights")?.clone())
                    .map_err(|e| Error::Parse(format!("map: field \"weights\": {e}")))?;
                let raw: Vec<MatrixJson> = serde_json::from_value(field("unitaries")?.clone())
                    .map_err(|e| Error::Parse(format!("map: field \"unitaries\": {e}")))?;
                let unitaries = raw.iter().map(MatrixJson::to_matrix).collect::<Result<Vec<_>>>()?;
                Self::unitary_mixture(weights, unitaries)?
            }
            other => return Err(Error::Parse(format!("map: unknown kind {other:?}"))),
        };
        if map.domain_dim() != n {
            return Err(Error::DimensionMismatch { left: n, right: map.domain_dim() });
        }
        Ok(map)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitalCheck {
    pub residual: f64,
    pub passes: bool,
}

/// Relative sampling weights of the five map variants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapKindWeights {
    pub identity: f64,
    pub compression: f64,
    pub pinching: f64,
    pub mixture: f64,
    pub trace: f64,
}

impl Default for MapKindWeights {
    fn default() -> Self {
        MapKindWeights { identity: 1.0, compression: 1.0, pinching: 1.0, mixture: 1.0, trace: 1.0 }
    }
}

/// Draws a random unital map on `M_n`.
///
/// For `n = 1` only the identity and the normalized trace are drawn; if both
/// have zero weight the identity is returned.
pub fn random_map<R: Rng + ?Sized>(n: usize, rng: &mut R, weights: &MapKindWeights) -> PositiveMap {
    let table: [(f64, &str); 5] = if n == 1 {
        [(weights.identity, "identity"), (0.0, ""), (0.0, ""), (0.0, ""), (weights.trace, "trace")]
    } else {
        [
            (weights.identity, "identity"),
            (weights.compression, "compression"),
            (weights.pinching, "pinching"),
            (weights.mixture, "mixture"),
            (weights.trace, "trace"),
        ]
    };
    let total: f64 = table.iter().map(|(w, _)| w.max(0.0)).sum();
    if !(total > 0.0) {
        return PositiveMap::Identity { n };
    }
    let mut pick = rng.random::<f64>() * total;
    let mut kind = "identity";
    for (w, name) in table {
        let w = w.max(0.0);
        if w > 0.0 {
            kind = name;
            if pick < w {
                break;
            }
            pick -= w;
        }
    }
    match kind {
        "compression" => {
            let k = rng.random_range(1..=n);
            PositiveMap::Compression { v: haar_isometry(n, k, rng) }
        }
        "pinching" => {
            let parts = rng.random_range(1..=n);
            let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..parts)).collect();
            let blocks = (0..parts)
                .map(|p| (0..n).filter(|&i| labels[i] == p).collect::<Vec<_>>())
                .filter(|b| !b.is_empty())
                .collect();
            PositiveMap::Pinching { n, blocks }
        }
        "mixture" => {
            let terms = rng.random_range(2..=4);
            let raw: Vec<f64> = (0..terms).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
            let head: f64 = weights[..terms - 1].iter().sum();
            weights[terms - 1] = 1.0 - head;
            let unitaries = (0..terms).map(|_| haar_unitary(n, rng)).collect();
            PositiveMap::UnitaryMixture { weights, unitaries }
        }
        "trace" => PositiveMap::NormalizedTrace { n },
        _ => PositiveMap::Identity { n },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::loewner_leq;
    use crate::means::geometric_mean;
    use crate::random::stream;

    fn two_by_two() -> HermitianMatrix {
        HermitianMatrix::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap()
    }

    fn random_pd(n: usize, rng: &mut impl Rng) -> HermitianMatrix {
        let x = crate::random::complex_gaussian(n, n, rng);
        HermitianMatrix::symmetrized(x.adjoint() * &x).add(&HermitianMatrix::scalar(n, 0.1)).unwrap()
    }

    #[test]
    fn apply_examples() {
        let a = two_by_two();
        assert_eq!(PositiveMap::Identity { n: 2 }.apply(&a).unwrap(), a);

        let t = PositiveMap::NormalizedTrace { n: 2 }.apply(&HermitianMatrix::diag(&[1.0, 3.0])).unwrap();
        assert_eq!(t, HermitianMatrix::diag(&[2.0]));

        let mut v = CMatrix::zeros(2, 1);
        v[(0, 0)] = Complex64::new(1.0, 0.0);
        let c = PositiveMap::compression(v).unwrap().apply(&a).unwrap();
        assert_eq!(c, HermitianMatrix::diag(&[2.0]));

        let p = PositiveMap::pinching(2, vec![vec![0], vec![1]]).unwrap().apply(&a).unwrap();
        assert_eq!(p, HermitianMatrix::diag(&[2.0, 2.0]));

        assert!(matches!(
            PositiveMap::Identity { n: 3 }.apply(&a),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn unital_examples() {
        assert_eq!(PositiveMap::Identity { n: 3 }.check_unital().residual, 0.0);

        let mut rng = stream(2, 0);
        let v = haar_isometry(4, 2, &mut rng);
        let c = PositiveMap::compression(v).unwrap().check_unital();
        assert!(c.passes && c.residual <= 1e-12);

        let us = vec![haar_unitary(3, &mut rng), haar_unitary(3, &mut rng)];
        let m = PositiveMap::unitary_mixture(vec![0.3, 0.7], us).unwrap().check_unital();
        assert!(m.passes && m.residual <= 1e-12);
    }

    #[test]
    fn constructor_validation() {
        assert!(PositiveMap::pinching(3, vec![vec![0, 1]]).is_err());
        assert!(PositiveMap::pinching(3, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(PositiveMap::pinching(2, vec![vec![1, 0], vec![]]).is_err());
        assert!(PositiveMap::compression(CMatrix::identity(2, 2) * Complex64::new(2.0, 0.0)).is_err());
        let mut rng = stream(3, 0);
        let u = haar_unitary(2, &mut rng);
        assert!(PositiveMap::unitary_mixture(vec![0.5, 0.6], vec![u.clone(), u.clone()]).is_err());
        assert!(PositiveMap::unitary_mixture(vec![1.0], vec![u * Complex64::new(1.1, 0.0)]).is_err());
    }

    #[test]
    fn random_map_contract() {
        for seed in 0..20 {
            let m = random_map(1, &mut stream(seed, 0), &MapKindWeights::default());
            assert!(matches!(m, PositiveMap::Identity { .. } | PositiveMap::NormalizedTrace { .. }));
        }
        let a = random_map(4, &mut stream(42, 0), &MapKindWeights::default());
        let b = random_map(4, &mut stream(42, 0), &MapKindWeights::default());
        assert_eq!(a, b);
        assert!(a.check_unital().passes);
    }

    #[test]
    fn json_round_trip() {
        let mut rng = stream(8, 1);
        for _ in 0..20 {
            let m = random_map(3, &mut rng, &MapKindWeights::default());
            let back = PositiveMap::from_json(&m.to_json(), 3).unwrap();
            assert_eq!(m, back);
        }
        let bad = json!({"kind": "pinching", "blocks": [[0], [0]]});
        assert!(PositiveMap::from_json(&bad, 2).is_err());
        assert!(PositiveMap::from_json(&json!({"kind": "warp"}), 2).is_err());
    }

    #[test]
    fn positivity_linearity_and_lemmas() {
        let mut rng = stream(17, 0);
        for (idx, weights) in [
            MapKindWeights { identity: 1.0, compression: 0.0, pinching: 0.0, mixture: 0.0, trace: 0.0 },
            MapKindWeights { identity: 0.0, compression: 1.0, pinching: 0.0, mixture: 0.0, trace: 0.0 },
            MapKindWeights { identity: 0.0, compression: 0.0, pinching: 1.0, mixture: 0.0, trace: 0.0 },
            MapKindWeights { identity: 0.0, compression: 0.0, pinching: 0.0, mixture: 1.0, trace: 0.0 },
            MapKindWeights { identity: 0.0, compression: 0.0, pinching: 0.0, mixture: 0.0, trace: 1.0 },
        ]
        .iter()
        .enumerate()
        {
            for i in 0..200 {
                let n = 1 + (i % 6);
                let map = random_map(n, &mut rng, weights);
                assert!(map.check_unital().passes, "variant {idx}");

                // rank-deficient PSD input
                let x = crate::random::complex_gaussian(n, 1 + i % n, &mut rng);
                let psd = HermitianMatrix::symmetrized(&x * x.adjoint());
                let image = map.apply(&psd).unwrap();
                assert!(image.lambda_min().unwrap() >= -1e-10 * psd.norm().unwrap());

                let a = random_pd(n, &mut rng);
                let b = random_pd(n, &mut rng);
                let lin = map.apply(&a.scale(0.3).add(&b.scale(-1.7)).unwrap()).unwrap();
                let sep = map.apply(&a).unwrap().scale(0.3).add(&map.apply(&b).unwrap().scale(-1.7)).unwrap();
                assert!(lin.sub(&sep).unwrap().norm().unwrap() <= 1e-12 * (1.0 + sep.norm().unwrap()));

                if i % 10 == 0 {
                    let phi_a = map.apply(&a).unwrap();
                    let choi_l = phi_a.inverse().unwrap();
                    let choi_r = map.apply(&a.inverse().unwrap()).unwrap();
                    let tol = 1e-9 * (1.0 + choi_l.norm().unwrap() + choi_r.norm().unwrap());
                    assert!(loewner_leq(&choi_l, &choi_r, tol).unwrap().holds);

                    let ando_l = map.apply(&geometric_mean(&a, &b).unwrap()).unwrap();
                    let ando_r = geometric_mean(&phi_a, &map.apply(&b).unwrap()).unwrap();
                    let tol = 1e-9 * (1.0 + ando_l.norm().unwrap() + ando_r.norm().unwrap());
                    assert!(loewner_leq(&ando_l, &ando_r, tol).unwrap().holds);
                }
            }
        }
    }
}

//! Dense complex Hermitian matrices: eigendecomposition by cyclic Jacobi
//! rotations, spectral calculus, Loewner-order comparison and operator norms.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// General dense complex matrix (compression isometries, unitaries, products).
pub type CMatrix = DMatrix<Complex64>;

const JACOBI_MAX_SWEEPS: usize = 40;
const JACOBI_REL_TOL: f64 = 1e-14;
const HERMITIAN_REL_TOL: f64 = 1e-12;

/// Relative factor of the default Loewner-order tolerance.
pub const DEFAULT_ORDER_TOL: f64 = 1e-9;

/// A dense n×n complex matrix equal to its conjugate transpose.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Validates conjugate symmetry within `1e-12 · max|entry|`.
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        if m.nrows() == 0 {
            return Err(Error::Empty);
        }
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let limit = HERMITIAN_REL_TOL * scale;
        let n = m.nrows();
        let mut deviation: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                deviation = deviation.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if deviation > limit {
            return Err(Error::NotHermitian { deviation, limit });
        }
        Ok(Self::symmetrized(m))
    }

    /// Projects onto the Hermitian part `(M + M*)/2` without validation.
    /// Used for products that are Hermitian in exact arithmetic.
    pub fn symmetrized(m: CMatrix) -> Self {
        let adj = m.adjoint();
        let mut h = (m + adj) * Complex64::new(0.5, 0.0);
        for i in 0..h.nrows() {
            h[(i, i)].im = 0.0;
        }
        HermitianMatrix(h)
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let mut m = CMatrix::zeros(n, rows.first().map_or(0, |r| r.len()));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m.ncols() {
                return Err(Error::NotSquare { rows: n, cols: row.len() });
            }
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = Complex64::new(v, 0.0);
            }
        }
        Self::new(m)
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix(CMatrix::identity(n, n))
    }

    pub fn scalar(n: usize, c: f64) -> Self {
        Self::identity(n).scale(c)
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix(CMatrix::zeros(n, n))
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        HermitianMatrix(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianMatrix(&self.0 * Complex64::new(s, 0.0))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(HermitianMatrix(&self.0 + &other.0))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(HermitianMatrix(&self.0 - &other.0))
    }

    /// `self²`, symmetrized.
    pub fn square(&self) -> Self {
        Self::symmetrized(&self.0 * &self.0)
    }

    /// Congruence `X* self X`.
    pub fn congruence(&self, x: &CMatrix) -> Result<Self> {
        check_dims(self.dim(), x.nrows())?;
        Ok(Self::symmetrized(x.adjoint() * &self.0 * x))
    }

    /// Congruence `X self X` for Hermitian `X`.
    pub fn sandwich(&self, x: &HermitianMatrix) -> Result<Self> {
        check_dims(self.dim(), x.dim())?;
        Ok(Self::symmetrized(&x.0 * &self.0 * &x.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    pub fn eigh(&self) -> Result<Eigensystem> {
        eigh(self)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        eigenvalues(self)
    }

    pub fn lambda_min(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }

    pub fn lambda_max(&self) -> Result<f64> {
        Ok(*self.eigenvalues()?.last().expect("dim >= 1"))
    }

    /// Spectral norm; for Hermitian matrices `max |λ|`.
    pub fn norm(&self) -> Result<f64> {
        let ev = self.eigenvalues()?;
        Ok(ev[0].abs().max(ev[ev.len() - 1].abs()))
    }

    /// Inverse through the spectral calculus; requires strict positivity.
    pub fn inverse(&self) -> Result<Self> {
        let es = self.eigh()?;
        let floor = positivity_floor(es.lambda_max());
        es.require_strictly_positive(floor)?;
        es.compose(|t| 1.0 / t)
    }
}

fn check_dims(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch { left, right });
    }
    Ok(())
}

/// Eigenvalues in ascending order with matching orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl Eigensystem {
    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// `max |λ|`.
    pub fn norm(&self) -> f64 {
        self.lambda_min().abs().max(self.lambda_max().abs())
    }

    pub fn require_strictly_positive(&self, floor: f64) -> Result<()> {
        if self.lambda_min() <= floor {
            return Err(Error::NotStrictlyPositive { min_eigenvalue: self.lambda_min(), floor });
        }
        Ok(())
    }

    /// `Q f(Λ) Q*`. Fails if `f` is not finite at some eigenvalue.
    pub fn compose(&self, f: impl Fn(f64) -> f64) -> Result<HermitianMatrix> {
        let q = &self.eigenvectors;
        let mut scaled = q.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let v = f(lam);
            if !v.is_finite() {
                return Err(Error::RepresentingFunctionDomain { at: lam });
            }
            scaled.column_mut(j).scale_mut(v);
        }
        Ok(HermitianMatrix::symmetrized(scaled * q.adjoint()))
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.compose(|t| t).expect("identity is finite")
    }
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Each rotation first removes the phase of the pivot `a_pq` with a diagonal
/// unitary, then applies the real symmetric Schur rotation to the 2×2 block.
/// Sweeps stop once the off-diagonal Frobenius mass drops to `1e-14 · ‖A‖_F`.
pub fn eigh(a: &HermitianMatrix) -> Result<Eigensystem> {
    let (eigenvalues, v, order) = jacobi(a, true)?;
    let v = v.expect("requested");
    let n = a.dim();
    let eigenvectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(Eigensystem { eigenvalues, eigenvectors })
}

/// Ascending eigenvalues only; the same rotations as [`eigh`] without
/// accumulating eigenvectors, so the values agree bit for bit.
pub fn eigenvalues(a: &HermitianMatrix) -> Result<Vec<f64>> {
    Ok(jacobi(a, false)?.0)
}

type JacobiOutput = (Vec<f64>, Option<CMatrix>, Vec<usize>);

fn jacobi(a: &HermitianMatrix, vectors: bool) -> Result<JacobiOutput> {
    let n = a.dim();
    let mut m = a.0.clone();
    let mut v = vectors.then(|| CMatrix::identity(n, n));
    let target = JACOBI_REL_TOL * a.frobenius_norm();

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_mass(&m);
        if off <= target {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NonConvergence { sweeps, off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(m.as_mut_slice(), v.as_mut().map(|v| v.as_mut_slice()), n, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    Ok((eigenvalues, v, order))
}

fn off_diagonal_mass(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                s += m[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// One rotation on column-major storage `m` (and `v` when accumulating).
fn rotate(m: &mut [Complex64], v: Option<&mut [Complex64]>, n: usize, p: usize, q: usize) {
    let apq = m[p + q * n];
    let r = apq.norm();
    if r < f64::MIN_POSITIVE {
        return;
    }
    let phase = apq / r;
    let app = m[p + p * n].re;
    let aqq = m[q + q * n].re;

    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // G = diag(1, conj(phase)) · [[c, s], [-s, c]] on the (p, q) block.
    let gpp = Complex64::new(c, 0.0);
    let gpq = Complex64::new(s, 0.0);
    let gqp = phase.conj() * -s;
    let gqq = phase.conj() * c;

    let (col_p, col_q) = (p * n, q * n);
    for k in 0..n {
        let mkp = m[col_p + k];
        let mkq = m[col_q + k];
        m[col_p + k] = mkp * gpp + mkq * gqp;
        m[col_q + k] = mkp * gpq + mkq * gqq;
    }
    for k in 0..n {
        let mpk = m[p + k * n];
        let mqk = m[q + k * n];
        m[p + k * n] = gpp.conj() * mpk + gqp.conj() * mqk;
        m[q + k * n] = gpq.conj() * mpk + gqq.conj() * mqk;
    }
    m[p + q * n] = Complex64::new(0.0, 0.0);
    m[q + p * n] = Complex64::new(0.0, 0.0);
    m[p + p * n].im = 0.0;
    m[q + q * n].im = 0.0;

    if let Some(v) = v {
        for k in 0..n {
            let vkp = v[col_p + k];
            let vkq = v[col_q + k];
            v[col_p + k] = vkp * gpp + vkq * gqp;
            v[col_q + k] = vkp * gpq + vkq * gqq;
        }
    }
}

/// Spectral calculus `Q f(Λ) Q*`; every eigenvalue must be at least `domain_floor`.
pub fn matfun(a: &HermitianMatrix, f: impl Fn(f64) -> f64, domain_floor: f64) -> Result<HermitianMatrix> {
    let es = eigh(a)?;
    if es.lambda_min() < domain_floor {
        return Err(Error::DomainViolation { eigenvalue: es.lambda_min(), floor: domain_floor });
    }
    es.compose(f)
}

/// Outcome of a Loewner comparison `L ⪯ R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderVerdict {
    pub holds: bool,
    /// `λ_min(R − L)`.
    pub margin: f64,
    pub tolerance_used: f64,
}

/// `tol = rel · max(1, ‖R‖ + ‖L‖)`.
pub fn order_tolerance(l: &HermitianMatrix, r: &HermitianMatrix, rel: f64) -> Result<f64> {
    Ok(rel * (l.norm()? + r.norm()?).max(1.0))
}

pub fn default_tolerance(l: &HermitianMatrix, r: &HermitianMatrix) -> Result<f64> {
    order_tolerance(l, r, DEFAULT_ORDER_TOL)
}

/// Strict-positivity floor `1e-12 · max(1, λ_max)`.
pub fn positivity_floor(lambda_max: f64) -> f64 {
    1e-12 * lambda_max.max(1.0)
}

pub fn loewner_leq(l: &HermitianMatrix, r: &HermitianMatrix, tol: f64) -> Result<OrderVerdict> {
    let diff = r.sub(l)?;
    let margin = diff.lambda_min()?;
    Ok(OrderVerdict { holds: margin >= -tol, margin, tolerance_used: tol })
}

/// Largest singular value, `√λ_max(X*X)`.
pub fn operator_norm(x: &CMatrix) -> Result<f64> {
    if x.nrows() != x.ncols() {
        return Err(Error::NotSquare { rows: x.nrows(), cols: x.ncols() });
    }
    let gram = HermitianMatrix::symmetrized(x.adjoint() * x);
    Ok(gram.lambda_max()?.max(0.0).sqrt())
}

/// Least `c` with `L ⪯ cR`, i.e. `λ_max(R^{-1/2} L R^{-1/2})`, for `L ⪰ 0`
/// and strictly positive `R`.
pub fn optimal_constant(l: &HermitianMatrix, r: &HermitianMatrix, floor: f64) -> Result<f64> {
    check_dims(l.dim(), r.dim())?;
    optimal_constant_eig(l, &eigh(r)?, floor)
}

/// Optimal constant with the default floor derived from `R`.
pub fn optimal_constant_default(l: &HermitianMatrix, r: &HermitianMatrix) -> Result<f64> {
    check_dims(l.dim(), r.dim())?;
    let es = eigh(r)?;
    optimal_constant_eig(l, &es, positivity_floor(es.lambda_max()))
}

/// [`optimal_constant`] from an eigendecomposition of `R`.
pub fn optimal_constant_eig(l: &HermitianMatrix, r: &Eigensystem, floor: f64) -> Result<f64> {
    check_dims(l.dim(), r.eigenvalues.len())?;
    r.require_strictly_positive(floor)?;
    let r_inv_sqrt = r.compose(|t| 1.0 / t.sqrt())?;
    let whitened = l.sandwich(&r_inv_sqrt)?;
    Ok(whitened.lambda_max()?.max(0.0))
}

/// Wire form `{"re": [[...]], "im": [[...]]}`, row-major; `im` optional.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let re = (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect()).collect();
        let has_im = m.iter().any(|z| z.im != 0.0);
        let im = has_im
            .then(|| (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect()).collect());
        MatrixJson { re, im }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let rows = self.re.len();
        let cols = self.re.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(Error::Parse("matrix \"re\" is empty".into()));
        }
        if let Some((i, _)) = self.re.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(Error::Parse(format!("matrix \"re\" row {i} has wrong length")));
        }
        let mut m = CMatrix::from_fn(rows, cols, |i, j| Complex64::new(self.re[i][j], 0.0));
        if let Some(im) = &self.im {
            if im.len() != rows || im.iter().any(|r| r.len() != cols) {
                return Err(Error::Parse("matrix \"im\" shape differs from \"re\"".into()));
            }
            for i in 0..rows {
                for j in 0..cols {
                    m[(i, j)].im = im[i][j];
                }
            }
        }
        Ok(m)
    }
}

impl Serialize for HermitianMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from_matrix(&self.0).serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(d)?;
        let m = raw.to_matrix().map_err(serde::de::Error::custom)?;
        HermitianMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
        let m = CMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        HermitianMatrix::symmetrized(m)
    }

    #[test]
    fn identity_eigenvalues() {
        let es = eigh(&HermitianMatrix::identity(3)).unwrap();
        assert_eq!(es.eigenvalues, vec![1.0, 1.0, 1.0]);
        let qq = es.eigenvectors.adjoint() * &es.eigenvectors;
        assert!((qq - CMatrix::identity(3, 3)).norm() < 1e-15);
    }

    #[test]
    fn diagonal_and_two_by_two() {
        let es = eigh(&HermitianMatrix::diag(&[4.0, 1.0])).unwrap();
        assert_eq!(es.eigenvalues, vec![1.0, 4.0]);

        let a = HermitianMatrix::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let ev = a.eigenvalues().unwrap();
        assert!(close(ev[0], 1.0, 1e-14) && close(ev[1], 3.0, 1e-14));
    }

    #[test]
    fn complex_pivot_is_diagonalized() {
        // [[1, i], [-i, 1]] has eigenvalues 0 and 2.
        let mut m = CMatrix::identity(2, 2);
        m[(0, 1)] = Complex64::new(0.0, 1.0);
        m[(1, 0)] = Complex64::new(0.0, -1.0);
        let a = HermitianMatrix::new(m).unwrap();
        let ev = a.eigenvalues().unwrap();
        assert!(close(ev[0], 0.0, 1e-15) && close(ev[1], 2.0, 1e-15));
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NotHermitian { .. })));
        assert!(matches!(
            HermitianMatrix::new(CMatrix::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn random_reconstruction_and_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=8 {
            for _ in 0..20 {
                let a = random_hermitian(n, &mut rng);
                let es = eigh(&a).unwrap();
                let resid = es.reconstruct().sub(&a).unwrap().frobenius_norm();
                assert!(resid <= 1e-12 * a.frobenius_norm().max(1.0), "n={n} resid={resid}");
                let qq = es.eigenvectors.adjoint() * &es.eigenvectors;
                assert!((qq - CMatrix::identity(n, n)).norm() <= 1e-12 * n as f64);
                assert!(es.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn agrees_with_nalgebra_on_random_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [2, 5, 9, 16] {
            let a = random_hermitian(n, &mut rng);
            let mut ours = a.eigenvalues().unwrap();
            let mut theirs: Vec<f64> =
                a.as_matrix().clone().symmetric_eigen().eigenvalues.iter().copied().collect();
            theirs.sort_by(f64::total_cmp);
            ours.sort_by(f64::total_cmp);
            for (x, y) in ours.iter().zip(&theirs) {
                assert!(close(*x, *y, 1e-12 * a.frobenius_norm()));
            }
        }
    }

    #[test]
    fn matfun_examples() {
        let sq = matfun(&HermitianMatrix::identity(2), |t| t * t, 0.0).unwrap();
        assert!(sq.sub(&HermitianMatrix::identity(2)).unwrap().frobenius_norm() < 1e-15);

        let r = matfun(&HermitianMatrix::diag(&[4.0, 9.0]), f64::sqrt, 0.0).unwrap();
        assert!(r.sub(&HermitianMatrix::diag(&[2.0, 3.0])).unwrap().frobenius_norm() < 1e-15);

        let a = HermitianMatrix::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let inv = matfun(&a, |t| 1.0 / t, 1e-12).unwrap();
        let expected =
            HermitianMatrix::from_real_rows(&[&[2.0 / 3.0, -1.0 / 3.0], &[-1.0 / 3.0, 2.0 / 3.0]])
                .unwrap();
        assert!(inv.sub(&expected).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn matfun_domain_violation() {
        let a = HermitianMatrix::diag(&[-1.0, 2.0]);
        assert!(matches!(matfun(&a, f64::sqrt, 0.0), Err(Error::DomainViolation { .. })));
    }

    #[test]
    fn sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=8 {
            let x = random_hermitian(n, &mut rng);
            let a = x.square().add(&HermitianMatrix::scalar(n, 0.1)).unwrap();
            let r = matfun(&a, f64::sqrt, 0.0).unwrap();
            let err = r.square().sub(&a).unwrap().norm().unwrap();
            assert!(err <= 1e-10 * a.norm().unwrap());
        }
    }

    #[test]
    fn loewner_examples() {
        let a = HermitianMatrix::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let v = loewner_leq(&a, &a, 1e-9).unwrap();
        assert!(v.holds && v.margin == 0.0);

        let v = loewner_leq(&HermitianMatrix::identity(2), &HermitianMatrix::scalar(2, 2.0), 1e-9)
            .unwrap();
        assert!(v.holds && close(v.margin, 1.0, 1e-15));

        let v = loewner_leq(&HermitianMatrix::diag(&[1.0, 3.0]), &HermitianMatrix::scalar(2, 2.0), 1e-9)
            .unwrap();
        assert!(!v.holds && close(v.margin, -1.0, 1e-15));

        assert!(matches!(
            loewner_leq(&HermitianMatrix::identity(2), &HermitianMatrix::identity(3), 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn operator_norm_examples() {
        assert!(close(operator_norm(&CMatrix::identity(3, 3)).unwrap(), 1.0, 1e-15));
        let d = HermitianMatrix::diag(&[-3.0, 2.0]).into_matrix();
        assert!(close(operator_norm(&d).unwrap(), 3.0, 1e-15));
        let mut nil = CMatrix::zeros(2, 2);
        nil[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(close(operator_norm(&nil).unwrap(), 1.0, 1e-15));
    }

    #[test]
    fn optimal_constant_examples() {
        let a = HermitianMatrix::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        assert!(close(optimal_constant_default(&a, &a).unwrap(), 1.0, 1e-14));
        assert_eq!(optimal_constant_default(&HermitianMatrix::zeros(2), &a).unwrap(), 0.0);
        let c = optimal_constant_default(&HermitianMatrix::diag(&[8.0, 1.0]), &HermitianMatrix::diag(&[2.0, 1.0]))
            .unwrap();
        assert!(close(c, 4.0, 1e-14));
        assert!(matches!(
            optimal_constant_default(&a, &HermitianMatrix::diag(&[1.0, 0.0])),
            Err(Error::NotStrictlyPositive { .. })
        ));
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_hermitian(4, &mut rng);
        let text = serde_json::to_string(&a).unwrap();
        let back: HermitianMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(a, back);

        let real: HermitianMatrix = serde_json::from_str(r#"{"re": [[1, 2], [2, 5]]}"#).unwrap();
        assert_eq!(real, HermitianMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 5.0]]).unwrap());
    }
}

//! Seeded random streams and Haar-distributed unitaries.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hermitian::CMatrix;

/// Stream `index` of generator `seed`; independent of how streams are scheduled.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    })
}

/// Unitary factor of the QR decomposition with the diagonal of R made real positive.
pub fn unitary_from_qr(x: CMatrix) -> CMatrix {
    let n = x.ncols();
    let qr = x.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for z in q.column_mut(j).iter_mut() {
            *z *= phase;
        }
    }
    q
}

/// Haar-random n×n unitary.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    unitary_from_qr(complex_gaussian(n, n, rng))
}

/// n×k matrix with orthonormal columns, Haar-distributed on the Stiefel manifold.
pub fn haar_isometry<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> CMatrix {
    unitary_from_qr(complex_gaussian(n, k, rng))
}

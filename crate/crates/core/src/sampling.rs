//! Seeded random matrices and vectors.
//!
//! Every generator takes its RNG explicitly; the same seed always yields the
//! same stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::opcore::{CMatrix, CVector, C64};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex Gaussian, `E|z|² = 1`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    // row-major fill so the stream order does not depend on nalgebra's layout
    let mut m = CMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = complex_gaussian(rng);
        }
    }
    m
}

pub fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    CVector::from_iterator(n, (0..n).map(|_| complex_gaussian(rng)))
}

pub fn unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    loop {
        let v = gaussian_vector(n, rng);
        let nrm = v.norm();
        if nrm > 1e-8 {
            return v / C64::new(nrm, 0.0);
        }
    }
}

/// Haar-distributed unitary from the QR factorization of a Gaussian matrix,
/// with the diagonal phases of `R` folded back into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let qr = gaussian_matrix(n, n, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// `rows × cols` matrix with orthonormal columns (`rows ≥ cols`).
pub fn isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    haar_unitary(rows, rng).columns(0, cols).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_unitary_is_unitary_and_reproducible() {
        let u = haar_unitary(5, &mut rng(3));
        let err = (u.adjoint() * &u - CMatrix::identity(5, 5)).norm();
        assert!(err < 1e-13);
        assert_eq!(u, haar_unitary(5, &mut rng(3)));
        assert_ne!(u, haar_unitary(5, &mut rng(4)));
    }

    #[test]
    fn isometry_columns_orthonormal() {
        let v = isometry(6, 2, &mut rng(11));
        assert!((v.adjoint() * &v - CMatrix::identity(2, 2)).norm() < 1e-13);
    }
}

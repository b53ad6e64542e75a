//! Instance generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{Cholesky, SymmetricEigen};
use parseval_kframes::opcore::orth_projector;
use parseval_kframes::sampling::{self, SeededRng};
use parseval_kframes::{CMatrix, CVector, Operator, Tolerance, C64};
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KKind {
    Random,
    RankDeficient,
    Diagonal,
    Projection,
    ScaledUnitary,
}

pub const KINDS: [KKind; 5] = [
    KKind::Random,
    KKind::RankDeficient,
    KKind::Diagonal,
    KKind::Projection,
    KKind::ScaledUnitary,
];

pub fn random_k(kind: KKind, n: usize, rng: &mut SeededRng) -> Operator {
    let tol = Tolerance::default();
    let m = match kind {
        KKind::Random => sampling::gaussian_matrix(n, n, rng),
        KKind::RankDeficient => {
            let r = rng.random_range(1..n.max(2)).min(n);
            sampling::gaussian_matrix(n, r, rng) * sampling::gaussian_matrix(r, n, rng)
        }
        KKind::Diagonal => {
            let d: Vec<f64> = (0..n)
                .map(|_| {
                    if rng.random_bool(0.2) {
                        0.0
                    } else {
                        rng.random_range(0.2..2.0)
                    }
                })
                .collect();
            Operator::real_diag(&d).into_matrix()
        }
        KKind::Projection => {
            let r = rng.random_range(1..=n);
            let a = Operator::new(sampling::gaussian_matrix(n, r, rng)).unwrap();
            orth_projector(&a, &tol).into_matrix()
        }
        KKind::ScaledUnitary => {
            let c = rng.random_range(0.3..2.5);
            sampling::haar_unitary(n, rng) * C64::new(c, 0.0)
        }
    };
    Operator::new(m).unwrap()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `x*Mx` for Hermitian `M`.
pub fn quad(m: &CMatrix, x: &CVector) -> f64 {
    x.dotc(&(m * x)).re
}

/// Largest value of `x*Bx / x*Ax` with `A` positive definite.
///
/// Returns the best of `samples` random unit vectors and the value after
/// refining that best sample with a block Rayleigh-Ritz iteration on the
/// span of the iterate, its residual and the previous step.
pub fn pencil_max(b: &CMatrix, a: &CMatrix, samples: usize, rng: &mut SeededRng) -> (f64, f64) {
    let n = a.nrows();
    let mut best = f64::NEG_INFINITY;
    let mut x = CVector::zeros(n);
    for _ in 0..samples {
        let v = sampling::unit_vector(n, rng);
        let rho = quad(b, &v) / quad(a, &v);
        if rho > best {
            best = rho;
            x = v;
        }
    }
    let sampled = best;
    let mut prev: Option<CVector> = None;
    for _ in 0..300 {
        let rho = quad(b, &x) / quad(a, &x);
        best = best.max(rho);
        let r = b * &x - a * &x * C64::new(rho, 0.0);
        if r.norm() <= 1e-15 * (max_abs(b) + max_abs(a)) {
            break;
        }
        let mut cols = vec![x.clone(), r];
        if let Some(p) = &prev {
            cols.push(p.clone());
        }
        let q = orthonormal_columns(&cols);
        let bs = hermitian(&(q.adjoint() * b * &q));
        let as_ = hermitian(&(q.adjoint() * a * &q));
        let Some(chol) = Cholesky::new(as_) else {
            break;
        };
        let l = chol.l();
        let y = l.solve_lower_triangular(&bs).expect("nonsingular factor");
        let c = hermitian(
            &l.solve_lower_triangular(&y.adjoint())
                .expect("nonsingular factor"),
        );
        let eig = SymmetricEigen::new(c);
        let top = (0..eig.eigenvalues.len())
            .max_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]))
            .expect("nonempty spectrum");
        let z = eig.eigenvectors.column(top).into_owned();
        let coef = l
            .adjoint()
            .solve_upper_triangular(&z)
            .expect("nonsingular factor");
        let next = &q * coef;
        let next = &next / C64::new(next.norm(), 0.0);
        prev = Some(&next - &x * x.dotc(&next));
        x = next;
    }
    (sampled, best.max(quad(b, &x) / quad(a, &x)))
}

fn hermitian(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn orthonormal_columns(cols: &[CVector]) -> CMatrix {
    let mut kept: Vec<CVector> = Vec::new();
    for c in cols {
        let mut v = c.clone();
        for _ in 0..2 {
            for q in &kept {
                v -= q * q.dotc(&v);
            }
        }
        let nrm = v.norm();
        if nrm > 1e-10 * c.norm().max(f64::MIN_POSITIVE) {
            kept.push(v / C64::new(nrm, 0.0));
        }
    }
    CMatrix::from_columns(&kept)
}

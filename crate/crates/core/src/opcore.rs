//! Dense operator algebra.
//!
//! Every operator in the crate is a finite complex matrix, so closed range is
//! automatic and the pseudo-inverse always exists. Bases of ranges, kernels
//! and completions are produced by Gram-Schmidt over the standard basis in
//! index order; the first significant component of every computed basis
//! vector is rotated to be real and nonnegative. Identical inputs therefore
//! give identical bases, independent of how the SVD backend orders a
//! degenerate singular subspace.

use std::ops::{Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{FrameError, Result};

pub type C64 = Complex64;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

/// Numerical thresholds used throughout the crate.
///
/// `rank_rel` is scaled by `max(rows, cols)` and the largest singular value
/// before it is used as a singular-value cutoff.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub rank_rel: f64,
    pub eq_abs: f64,
    pub eq_rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rank_rel: 1e-12,
            eq_abs: 1e-9,
            eq_rel: 1e-8,
        }
    }
}

impl Tolerance {
    pub fn new(rank_rel: f64, eq_abs: f64, eq_rel: f64) -> Result<Self> {
        for (name, v) in [
            ("rank_rel", rank_rel),
            ("eq_abs", eq_abs),
            ("eq_rel", eq_rel),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(FrameError::invalid(format!(
                    "tolerance {name} must be finite and strictly positive, got {v}"
                )));
            }
        }
        Ok(Tolerance {
            rank_rel,
            eq_abs,
            eq_rel,
        })
    }

    /// Singular values at or below this value count as zero.
    pub fn singular_cutoff(&self, rows: usize, cols: usize, sigma_max: f64) -> f64 {
        self.rank_rel * rows.max(cols) as f64 * sigma_max
    }

    /// Gram-Schmidt remainders (of unit-size candidates) at or below this
    /// norm are discarded during basis construction.
    pub fn completion_cutoff(&self) -> f64 {
        self.rank_rel.sqrt()
    }
}

/// A dense complex matrix with positive dimensions and finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    m: CMatrix,
}

impl Operator {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(FrameError::invalid(format!(
                "operator dimensions must be positive, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if !m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(FrameError::invalid("operator has non-finite entries"));
        }
        Ok(Operator { m })
    }

    /// Wraps a matrix produced internally from valid operands.
    pub(crate) fn wrap(m: CMatrix) -> Self {
        debug_assert!(m.nrows() > 0 && m.ncols() > 0);
        Operator { m }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(FrameError::invalid("ragged operator rows"));
        }
        Self::new(CMatrix::from_fn(r, c, |i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|row| row.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_columns(cols: &[CVector]) -> Result<Self> {
        let n = cols.first().map_or(0, |v| v.len());
        if cols.iter().any(|v| v.len() != n) {
            return Err(FrameError::invalid("columns of unequal length"));
        }
        Self::new(CMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]))
    }

    pub fn identity(n: usize) -> Self {
        Operator::wrap(CMatrix::identity(n, n))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Operator::wrap(CMatrix::zeros(rows, cols))
    }

    pub fn real_diag(d: &[f64]) -> Self {
        let n = d.len();
        Operator::wrap(CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(d[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    pub fn rows(&self) -> usize {
        self.m.nrows()
    }

    pub fn cols(&self) -> usize {
        self.m.ncols()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn adjoint(&self) -> Operator {
        Operator::wrap(self.m.adjoint())
    }

    pub fn scale(&self, s: f64) -> Operator {
        Operator::wrap(self.m.map(|z| z * s))
    }

    pub fn column(&self, j: usize) -> CVector {
        self.m.column(j).into_owned()
    }

    pub fn columns(&self) -> Vec<CVector> {
        (0..self.cols()).map(|j| self.column(j)).collect()
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.m * v
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(&self.m)
    }
}

impl Mul for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.cols(), rhs.rows(), "operator dimension mismatch");
        Operator::wrap(&self.m * &rhs.m)
    }
}

impl Sub for &Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.m.shape(), rhs.m.shape(), "operator dimension mismatch");
        Operator::wrap(&self.m - &rhs.m)
    }
}

/// Closed subspace of `C^n` held through an orthonormal column basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    ambient_dim: usize,
    basis: Operator,
}

impl Subspace {
    pub fn new(basis: Operator, tol: &Tolerance) -> Result<Self> {
        let gram = basis.m.adjoint() * &basis.m;
        let res = (gram - CMatrix::identity(basis.cols(), basis.cols())).norm();
        if res > tol.eq_abs {
            return Err(FrameError::invalid(format!(
                "subspace basis is not orthonormal (residual {res:.3e})"
            )));
        }
        Ok(Subspace {
            ambient_dim: basis.rows(),
            basis,
        })
    }

    /// Range of `a`, with a deterministic orthonormal basis.
    pub fn range_of(a: &Operator, tol: &Tolerance) -> Result<Self> {
        let b = range_basis(&a.m, tol);
        if b.ncols() == 0 {
            return Err(FrameError::invalid("range is the zero subspace"));
        }
        Ok(Subspace {
            ambient_dim: a.rows(),
            basis: Operator::wrap(b),
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &Operator {
        &self.basis
    }

    pub fn projector(&self) -> Operator {
        Operator::wrap(&self.basis.m * self.basis.m.adjoint())
    }
}

/// Result of factoring `l1 = l2 * u` through range inclusion.
#[derive(Clone, Debug, PartialEq)]
pub struct DouglasFactorization {
    pub factor_u: Operator,
    /// `‖u‖²`, equal to `inf{α > 0 : l1 l1* ⪯ α l2 l2*}` when the inclusion holds.
    pub norm_sq_u: f64,
    pub inclusion_ok: bool,
    /// `‖(I − l2 l2†) l1‖_F`.
    pub inclusion_residual: f64,
}

pub(crate) struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v_t: CMatrix,
}

/// Thin SVD with singular values sorted in descending order.
pub(crate) fn svd(m: &CMatrix) -> Svd {
    let d = SVD::new(m.clone(), true, true);
    Svd {
        u: d.u.expect("u requested"),
        s: d.singular_values.iter().copied().collect(),
        v_t: d.v_t.expect("v_t requested"),
    }
}

fn cutoff_for(m: &CMatrix, s: &[f64], tol: &Tolerance) -> f64 {
    let smax = s.first().copied().unwrap_or(0.0);
    tol.singular_cutoff(m.nrows(), m.ncols(), smax)
}

pub(crate) fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    svd(m).s.first().copied().unwrap_or(0.0)
}

pub(crate) fn rank_of(m: &CMatrix, tol: &Tolerance) -> usize {
    if m.is_empty() {
        return 0;
    }
    let d = svd(m);
    let cut = cutoff_for(m, &d.s, tol);
    d.s.iter().filter(|&&s| s > cut && s > 0.0).count()
}

pub(crate) fn pinv_matrix(m: &CMatrix, tol: &Tolerance) -> CMatrix {
    let d = svd(m);
    let cut = cutoff_for(m, &d.s, tol);
    let mut out = CMatrix::zeros(m.ncols(), m.nrows());
    for (k, &s) in d.s.iter().enumerate() {
        if s > cut && s > 0.0 {
            let v = d.v_t.row(k).adjoint();
            let u = d.u.column(k);
            out += (v * u.adjoint()) * C64::new(1.0 / s, 0.0);
        }
    }
    out
}

/// Hermitian eigen-decomposition of `(m + m*)/2`, eigenvalues descending.
pub(crate) fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMatrix::from_fn(m.nrows(), order.len(), |i, j| {
        eig.eigenvectors[(i, order[j])]
    });
    (vals, vecs)
}

/// Rotates `v` so that its first significant component is real and nonnegative.
pub(crate) fn normalize_phase(v: &mut CVector) {
    let big = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if big == 0.0 {
        return;
    }
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-8 * big).copied() {
        let phase = z.conj() / z.norm();
        v.apply(|x| *x *= phase);
    }
}

/// Orthogonalizes `v` against `basis` twice (classical Gram-Schmidt with one
/// re-orthogonalization pass) and returns the remainder.
fn orthogonalize(mut v: CVector, basis: &[CVector]) -> CVector {
    for _ in 0..2 {
        for b in basis {
            let c = b.dotc(&v);
            v -= b * c;
        }
    }
    v
}

/// Deterministic orthonormal basis for the range of a (near-)projector `p`,
/// built from its columns `p e_i` in index order. Stops after `rank` vectors.
pub(crate) fn projector_basis(p: &CMatrix, rank: usize, tol: &Tolerance) -> CMatrix {
    let n = p.nrows();
    let cut = tol.completion_cutoff();
    let mut basis: Vec<CVector> = Vec::with_capacity(rank);
    for i in 0..n {
        if basis.len() == rank {
            break;
        }
        let v = orthogonalize(p.column(i).into_owned(), &basis);
        let nrm = v.norm();
        if nrm > cut {
            let mut v = v / C64::new(nrm, 0.0);
            normalize_phase(&mut v);
            basis.push(v);
        }
    }
    CMatrix::from_fn(n, basis.len(), |i, j| basis[j][i])
}

pub(crate) fn orth_projector_matrix(m: &CMatrix, tol: &Tolerance) -> CMatrix {
    m * pinv_matrix(m, tol)
}

/// Orthonormal basis (columns) of `range(m)`; may have zero columns.
pub(crate) fn range_basis(m: &CMatrix, tol: &Tolerance) -> CMatrix {
    let r = rank_of(m, tol);
    projector_basis(&orth_projector_matrix(m, tol), r, tol)
}

/// Orthonormal basis (columns) of `null(m)`; may have zero columns.
pub(crate) fn null_basis(m: &CMatrix, tol: &Tolerance) -> CMatrix {
    let n = m.ncols();
    let r = rank_of(m, tol);
    let p = CMatrix::identity(n, n) - pinv_matrix(m, tol) * m;
    projector_basis(&p, n - r, tol)
}

/// `‖V*V − I‖_F` for the vectors stacked as columns.
pub(crate) fn orthonormality_residual(vs: &[CVector]) -> f64 {
    let k = vs.len();
    let mut acc = 0.0;
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            acc += (vs[i].dotc(&vs[j]) - C64::new(target, 0.0)).norm_sqr();
        }
    }
    acc.sqrt()
}

pub(crate) fn check_finite_vec(v: &CVector) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Moore-Penrose pseudo-inverse through the SVD.
///
/// Singular values at or below `rank_rel · max(rows, cols) · σ_max` are
/// treated as zero.
pub fn pinv(a: &Operator, tol: &Tolerance) -> Operator {
    Operator::wrap(pinv_matrix(&a.m, tol))
}

/// Orthogonal projector `a a†` onto `range(a)`.
///
/// The projector onto `range(a*)` is `orth_projector(&a.adjoint())`.
pub fn orth_projector(a: &Operator, tol: &Tolerance) -> Operator {
    Operator::wrap(orth_projector_matrix(&a.m, tol))
}

pub fn numerical_rank(a: &Operator, tol: &Tolerance) -> usize {
    rank_of(&a.m, tol)
}

/// Decides `range(l1) ⊆ range(l2)` and, when it holds, returns the
/// minimal-norm solution `u = l2† l1` of `l1 = l2 u`.
pub fn douglas_factor(
    l1: &Operator,
    l2: &Operator,
    tol: &Tolerance,
) -> Result<DouglasFactorization> {
    if l1.rows() != l2.rows() {
        return Err(FrameError::invalid(format!(
            "douglas_factor needs equal row counts, got {} and {}",
            l1.rows(),
            l2.rows()
        )));
    }
    let l2_pinv = pinv_matrix(&l2.m, tol);
    let n = l1.rows();
    let residual = ((CMatrix::identity(n, n) - &l2.m * &l2_pinv) * &l1.m).norm();
    let inclusion_ok = residual <= tol.eq_abs * l1.frobenius_norm().max(1.0);
    let u = l2_pinv * &l1.m;
    let norm_sq_u = spectral_norm(&u).powi(2);
    Ok(DouglasFactorization {
        factor_u: Operator::wrap(u),
        norm_sq_u,
        inclusion_ok,
        inclusion_residual: residual,
    })
}

fn validate_orthonormal(vs: &[CVector], ambient_dim: usize, tol: &Tolerance) -> Result<()> {
    if let Some(v) = vs.iter().find(|v| v.len() != ambient_dim) {
        return Err(FrameError::invalid(format!(
            "vector of length {} in ambient dimension {ambient_dim}",
            v.len()
        )));
    }
    if !vs.iter().all(check_finite_vec) {
        return Err(FrameError::invalid("non-finite vector entries"));
    }
    let res = orthonormality_residual(vs);
    if res > tol.eq_abs {
        return Err(FrameError::invalid(format!(
            "vectors are not orthonormal (residual {res:.3e})"
        )));
    }
    Ok(())
}

/// Extends an orthonormal list to an orthonormal basis of `C^ambient_dim`.
///
/// The inputs are kept verbatim as the leading members; the remaining ones
/// come from orthogonalizing `e_1, e_2, …` in order.
pub fn complete_to_onb(
    vs: &[CVector],
    ambient_dim: usize,
    tol: &Tolerance,
) -> Result<Vec<CVector>> {
    if ambient_dim == 0 {
        return Err(FrameError::invalid("ambient dimension must be positive"));
    }
    if vs.len() > ambient_dim {
        return Err(FrameError::invalid(format!(
            "{} vectors cannot be orthonormal in dimension {ambient_dim}",
            vs.len()
        )));
    }
    validate_orthonormal(vs, ambient_dim, tol)?;
    let cut = tol.completion_cutoff();
    let mut out: Vec<CVector> = vs.to_vec();
    for i in 0..ambient_dim {
        if out.len() == ambient_dim {
            break;
        }
        let mut e = CVector::zeros(ambient_dim);
        e[i] = C64::new(1.0, 0.0);
        let r = orthogonalize(e, &out);
        let nrm = r.norm();
        if nrm > cut {
            let mut r = r / C64::new(nrm, 0.0);
            normalize_phase(&mut r);
            out.push(r);
        }
    }
    debug_assert_eq!(out.len(), ambient_dim);
    Ok(out)
}

/// Unitary `u` on `C^n` with `u b1[j] = b2[j]` for every `j`.
///
/// Both lists are completed with [`complete_to_onb`] and `u` maps the first
/// completed basis onto the second.
pub fn unitary_bases_map(b1: &[CVector], b2: &[CVector], tol: &Tolerance) -> Result<Operator> {
    if b1.len() != b2.len() {
        return Err(FrameError::invalid(format!(
            "basis lists of different cardinality: {} and {}",
            b1.len(),
            b2.len()
        )));
    }
    let n = match (b1.first(), b2.first()) {
        (Some(a), Some(b)) if a.len() != b.len() => {
            return Err(FrameError::invalid(
                "basis lists in different ambient dimensions",
            ))
        }
        (Some(a), _) => a.len(),
        _ => return Err(FrameError::invalid("empty basis lists carry no dimension")),
    };
    let full1 = complete_to_onb(b1, n, tol)?;
    let full2 = complete_to_onb(b2, n, tol)?;
    let mut u = CMatrix::zeros(n, n);
    for (x, y) in full1.iter().zip(&full2) {
        u += y * x.adjoint();
    }
    Ok(Operator::wrap(u))
}

/// Left inverse of an injective operator, fixed to the pseudo-inverse.
pub fn left_inverse(k: &Operator, tol: &Tolerance) -> Result<Operator> {
    let rank = rank_of(&k.m, tol);
    if rank < k.cols() {
        return Err(FrameError::NotInjective {
            rank,
            cols: k.cols(),
        });
    }
    Ok(pinv(k, tol))
}

/// Principal angles between two subspaces of equal dimension, ascending.
///
/// Computed from the singular values of `(I − P_a) B`, which are the sines of
/// the angles; this stays accurate for nearly coincident subspaces.
pub fn principal_angles(a: &Subspace, b: &Subspace) -> Result<Vec<f64>> {
    if a.ambient_dim != b.ambient_dim || a.dim() != b.dim() {
        return Err(FrameError::invalid(format!(
            "principal angles need equal dimensions, got {}-dim in C^{} and {}-dim in C^{}",
            a.dim(),
            a.ambient_dim,
            b.dim(),
            b.ambient_dim
        )));
    }
    let n = a.ambient_dim;
    let residual = (CMatrix::identity(n, n) - a.projector().m) * &b.basis.m;
    let mut angles: Vec<f64> = svd(&residual)
        .s
        .iter()
        .map(|s| s.clamp(0.0, 1.0).asin())
        .collect();
    angles.sort_by(f64::total_cmp);
    Ok(angles)
}

//! Finite frames: synthesis, analysis and frame operators, optimal bounds,
//! Parseval and equal-norm tests, projections, the minimal Naimark dilation
//! and unitary equivalence through Gram matrices.

use crate::error::{FrameError, Result};
use crate::opcore::{
    check_finite_vec, hermitian_eigen, rank_of, CMatrix, CVector, Operator, Tolerance, C64,
};

/// Ordered list of `m ≥ 1` vectors in `C^dim`. The vectors need not span.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameSystem {
    dim: usize,
    vectors: Vec<CVector>,
}

impl FrameSystem {
    pub fn new(dim: usize, vectors: Vec<CVector>) -> Result<Self> {
        if dim == 0 {
            return Err(FrameError::invalid("frame dimension must be positive"));
        }
        if vectors.is_empty() {
            return Err(FrameError::invalid("a frame needs at least one vector"));
        }
        if let Some((j, v)) = vectors.iter().enumerate().find(|(_, v)| v.len() != dim) {
            return Err(FrameError::invalid(format!(
                "vector {j} has length {} in dimension {dim}",
                v.len()
            )));
        }
        if !vectors.iter().all(check_finite_vec) {
            return Err(FrameError::invalid("frame has non-finite entries"));
        }
        Ok(FrameSystem { dim, vectors })
    }

    /// Frame whose vectors are the columns of `t`.
    pub fn from_synthesis(t: &Operator) -> Self {
        FrameSystem {
            dim: t.rows(),
            vectors: t.columns(),
        }
    }

    pub fn from_real(vectors: &[&[f64]]) -> Result<Self> {
        let dim = vectors.first().map_or(0, |v| v.len());
        let vs = vectors
            .iter()
            .map(|v| CVector::from_iterator(v.len(), v.iter().map(|&x| C64::new(x, 0.0))))
            .collect();
        Self::new(dim, vs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[CVector] {
        &self.vectors
    }

    pub fn into_vectors(self) -> Vec<CVector> {
        self.vectors
    }

    pub fn norms(&self) -> Vec<f64> {
        self.vectors.iter().map(|v| v.norm()).collect()
    }

    /// `n × m` synthesis operator with `f_j` as the `j`-th column.
    pub fn synthesis(&self) -> Operator {
        Operator::wrap(self.synthesis_matrix())
    }

    pub(crate) fn synthesis_matrix(&self) -> CMatrix {
        CMatrix::from_fn(self.dim, self.len(), |i, j| self.vectors[j][i])
    }

    pub fn frame_operator(&self) -> Operator {
        let t = self.synthesis_matrix();
        Operator::wrap(&t * t.adjoint())
    }

    /// `{op f_j}`; `op` must be square of the frame dimension or map out of it.
    pub fn mapped(&self, op: &Operator) -> Result<FrameSystem> {
        if op.cols() != self.dim {
            return Err(FrameError::invalid(format!(
                "operator with {} columns applied to vectors of length {}",
                op.cols(),
                self.dim
            )));
        }
        Ok(FrameSystem {
            dim: op.rows(),
            vectors: self.vectors.iter().map(|v| op.apply(v)).collect(),
        })
    }

    pub fn scaled(&self, s: f64) -> FrameSystem {
        FrameSystem {
            dim: self.dim,
            vectors: self.vectors.iter().map(|v| v * C64::new(s, 0.0)).collect(),
        }
    }

    /// `Σ_j |⟨x, f_j⟩|²`.
    pub fn energy(&self, x: &CVector) -> f64 {
        self.vectors.iter().map(|f| f.dotc(x).norm_sqr()).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameOperators {
    pub synthesis: Operator,
    pub analysis: Operator,
    pub frame_op: Operator,
}

pub fn operators_of(f: &FrameSystem) -> FrameOperators {
    let synthesis = f.synthesis();
    let analysis = synthesis.adjoint();
    let frame_op = &synthesis * &analysis;
    FrameOperators {
        synthesis,
        analysis,
        frame_op,
    }
}

/// Optimal constants of a frame or K-frame inequality.
///
/// For ordinary frames `lower ≤ upper`. For K-frames the optimal lower
/// constant is measured against `‖K* f‖²` and may exceed `upper` when
/// `‖K‖ < 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Extreme eigenvalues of the frame operator. `lower` is zero exactly when
/// the vectors fail to span (numerically).
pub fn frame_bounds(f: &FrameSystem, tol: &Tolerance) -> FrameBounds {
    let s = f.frame_operator();
    let (eig, _) = hermitian_eigen(s.matrix());
    let upper = eig.first().copied().unwrap_or(0.0).max(0.0);
    let spans = rank_of(&f.synthesis_matrix(), tol) == f.dim();
    let lower = if spans {
        eig.last().copied().unwrap_or(0.0).max(0.0)
    } else {
        0.0
    };
    FrameBounds { lower, upper }
}

/// `‖S − I‖_F`.
pub fn parseval_residual(f: &FrameSystem) -> f64 {
    (f.frame_operator().matrix() - CMatrix::identity(f.dim(), f.dim())).norm()
}

/// Acceptance threshold of [`is_parseval`].
pub fn parseval_threshold(f: &FrameSystem, tol: &Tolerance) -> f64 {
    tol.eq_abs * (f.dim() as f64).sqrt()
}

pub fn is_parseval(f: &FrameSystem, tol: &Tolerance) -> bool {
    parseval_residual(f) <= parseval_threshold(f, tol)
}

/// Returns `(all norms equal ‖f_1‖, ‖f_1‖)`.
pub fn is_equal_norm(f: &FrameSystem, tol: &Tolerance) -> (bool, f64) {
    let norms = f.norms();
    let c = norms[0];
    let spread = norms.iter().map(|x| (x - c).abs()).fold(0.0, f64::max);
    (spread <= tol.eq_abs, c)
}

/// Residual of `p` as an orthogonal projector: `max(‖p² − p‖_F, ‖p − p*‖_F)`.
pub(crate) fn projector_defect(p: &CMatrix) -> f64 {
    let idem = (p * p - p).norm();
    let herm = (p - p.adjoint()).norm();
    idem.max(herm)
}

/// `{P f_j}` for an orthogonal projector `P`.
///
/// The result is a frame for `range(P)` with (at least) the original bounds.
pub fn project_frame(f: &FrameSystem, p: &Operator, tol: &Tolerance) -> Result<FrameSystem> {
    if p.rows() != f.dim() || p.cols() != f.dim() {
        return Err(FrameError::invalid(format!(
            "projector is {}x{}, frame dimension is {}",
            p.rows(),
            p.cols(),
            f.dim()
        )));
    }
    let defect = projector_defect(p.matrix());
    if defect > tol.eq_abs * p.frobenius_norm().max(1.0) {
        return Err(FrameError::invalid(format!(
            "operator is not an orthogonal projector (defect {defect:.3e})"
        )));
    }
    f.mapped(p)
}

/// Witness of a dilation: an orthonormal basis `{e_j}` of `C^big_dim`, the
/// projector `P` on that space and the map `embed` from the original space
/// into it.
#[derive(Clone, Debug, PartialEq)]
pub struct DilationResult {
    pub big_dim: usize,
    pub basis: Vec<CVector>,
    pub projector: Operator,
    pub embed: Operator,
}

impl DilationResult {
    /// `{P e_j}`.
    pub fn projected_basis(&self) -> Vec<CVector> {
        self.basis.iter().map(|e| self.projector.apply(e)).collect()
    }

    /// `max(‖P² − P‖_F, ‖P − P*‖_F)`.
    pub fn projector_defect(&self) -> f64 {
        projector_defect(self.projector.matrix())
    }
}

/// Minimal Naimark dilation of a Parseval frame.
///
/// The analysis operator `T*` is an isometry from `C^n` into `C^m`; with
/// `P = T* T` and the standard basis `{δ_j}` one has `P δ_j = T* f_j`, so
/// after identifying `C^n` with its image, `f_j = P e_j`.
pub fn naimark_dilate(f: &FrameSystem, tol: &Tolerance) -> Result<DilationResult> {
    let (n, m) = (f.dim(), f.len());
    if m < n {
        return Err(FrameError::invalid(format!(
            "{m} vectors cannot form a Parseval frame of C^{n}"
        )));
    }
    let res = parseval_residual(f);
    if res > tol.eq_abs * (n as f64).sqrt() {
        return Err(FrameError::invalid(format!(
            "frame is not Parseval (‖S − I‖_F = {res:.3e})"
        )));
    }
    let t = f.synthesis_matrix();
    let embed = t.adjoint();
    let projector = &embed * &t;
    let basis = (0..m)
        .map(|j| {
            let mut e = CVector::zeros(m);
            e[j] = C64::new(1.0, 0.0);
            e
        })
        .collect();
    Ok(DilationResult {
        big_dim: m,
        basis,
        projector: Operator::wrap(projector),
        embed: Operator::wrap(embed),
    })
}

/// `max_j ‖P e_j − embed f_j‖`.
pub fn naimark_residual(f: &FrameSystem, d: &DilationResult) -> f64 {
    d.projected_basis()
        .iter()
        .zip(f.vectors())
        .map(|(pe, fj)| (pe - d.embed.apply(fj)).norm())
        .fold(0.0, f64::max)
}

/// `G_{ij} = ⟨x_j, x_i⟩`.
pub fn gram_matrix(f: &FrameSystem) -> CMatrix {
    let t = f.synthesis_matrix();
    t.adjoint() * t
}

/// Two finite families are unitarily equivalent exactly when their Gram
/// matrices coincide.
pub fn gram_equivalent(f: &FrameSystem, g: &FrameSystem, tol: &Tolerance) -> Result<bool> {
    if f.len() != g.len() {
        return Err(FrameError::invalid(format!(
            "families of different lengths: {} and {}",
            f.len(),
            g.len()
        )));
    }
    let diff = (gram_matrix(f) - gram_matrix(g)).norm();
    Ok(diff <= tol.eq_abs * f.len() as f64)
}

/// Mercedes-Benz frame: three vectors at 120° in the plane, scaled by √(2/3).
pub fn mercedes_benz() -> FrameSystem {
    let s = (2.0f64 / 3.0).sqrt();
    let vs = (0..3)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
            CVector::from_vec(vec![C64::new(s * t.cos(), 0.0), C64::new(s * t.sin(), 0.0)])
        })
        .collect();
    FrameSystem {
        dim: 2,
        vectors: vs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;

    fn std_basis(n: usize) -> FrameSystem {
        FrameSystem::from_synthesis(&Operator::identity(n))
    }

    fn e1e1e2() -> FrameSystem {
        FrameSystem::from_real(&[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]).unwrap()
    }

    #[test]
    fn construction_validates() {
        assert!(FrameSystem::new(0, vec![]).is_err());
        assert!(FrameSystem::new(2, vec![]).is_err());
        assert!(FrameSystem::new(2, vec![CVector::zeros(3)]).is_err());
        let nan = CVector::from_element(2, C64::new(f64::NAN, 0.0));
        assert!(FrameSystem::new(2, vec![nan]).is_err());
    }

    #[test]
    fn operator_examples() {
        let ops = operators_of(&std_basis(2));
        assert_eq!(ops.synthesis, Operator::identity(2));
        assert_eq!(ops.frame_op, Operator::identity(2));

        let s = operators_of(&e1e1e2()).frame_op;
        assert_eq!(s, Operator::real_diag(&[2.0, 1.0]));

        let v = FrameSystem::from_real(&[&[0.6, 0.8]]).unwrap();
        let s = operators_of(&v).frame_op;
        let oracle = Operator::from_real_rows(&[&[0.36, 0.48], &[0.48, 0.64]]).unwrap();
        assert!((&s - &oracle).frobenius_norm() < 1e-15);
    }

    #[test]
    fn bounds_examples() {
        let tol = Tolerance::default();
        let b = frame_bounds(&std_basis(3), &tol);
        assert!((b.lower - 1.0).abs() < 1e-14 && (b.upper - 1.0).abs() < 1e-14);

        let b = frame_bounds(&e1e1e2(), &tol);
        assert!((b.lower - 1.0).abs() < 1e-14 && (b.upper - 2.0).abs() < 1e-14);

        let b = frame_bounds(&FrameSystem::from_real(&[&[1.0, 0.0]]).unwrap(), &tol);
        assert_eq!(b.lower, 0.0);
        assert!((b.upper - 1.0).abs() < 1e-14);
    }

    #[test]
    fn parseval_and_equal_norm_examples() {
        let tol = Tolerance::default();
        assert!(is_parseval(&std_basis(2), &tol));
        let mb = mercedes_benz();
        // direct multiplication: Σ (2/3)cos² = 1, Σ (2/3)cos·sin = 0
        assert!(parseval_residual(&mb) < 1e-15);
        assert!(is_parseval(&mb, &tol));
        let bad = FrameSystem::from_real(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 1.0]]).unwrap();
        assert!(!is_parseval(&bad, &tol));

        assert_eq!(is_equal_norm(&std_basis(2), &tol), (true, 1.0));
        let (eq, c) = is_equal_norm(&mb, &tol);
        assert!(eq && (c - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let uneven = FrameSystem::from_real(&[&[1.0, 0.0], &[0.0, 2.0]]).unwrap();
        assert_eq!(is_equal_norm(&uneven, &tol), (false, 1.0));
    }

    #[test]
    fn projection_examples() {
        let tol = Tolerance::default();
        let f = std_basis(2);
        assert_eq!(project_frame(&f, &Operator::identity(2), &tol).unwrap(), f);

        let p = Operator::real_diag(&[1.0, 0.0]);
        let pf = project_frame(&f, &p, &tol).unwrap();
        assert_eq!(pf.vectors()[1].norm(), 0.0);
        let g = CVector::from_vec(vec![C64::new(0.3, -0.2), C64::new(0.0, 0.0)]);
        assert!((pf.energy(&g) - g.norm_squared()).abs() < 1e-15);

        let pmb = project_frame(&mercedes_benz(), &p, &tol).unwrap();
        // Σ (2/3) cos²(2πk/3) = 1 on span{e1}
        let e1 = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        assert!((pmb.energy(&e1) - 1.0).abs() < 1e-15);

        let not_proj = Operator::real_diag(&[2.0, 0.0]);
        assert!(matches!(
            project_frame(&f, &not_proj, &tol),
            Err(FrameError::InvalidInput(_))
        ));
    }

    #[test]
    fn projection_keeps_bounds_on_range() {
        let tol = Tolerance::default();
        let mut rng = sampling::rng(5);
        let f =
            FrameSystem::from_synthesis(&Operator::wrap(sampling::gaussian_matrix(4, 7, &mut rng)));
        let b = frame_bounds(&f, &tol);
        let q = sampling::isometry(4, 2, &mut rng);
        let p = Operator::wrap(&q * q.adjoint());
        let pf = project_frame(&f, &p, &tol).unwrap();
        for _ in 0..50 {
            let g = p.apply(&sampling::gaussian_vector(4, &mut rng));
            let e = pf.energy(&g);
            let gg = g.norm_squared();
            assert!(b.lower * gg <= e + 1e-9 * gg.max(1.0));
            assert!(e <= b.upper * gg + 1e-9 * gg.max(1.0));
        }
    }

    #[test]
    fn naimark_examples() {
        let tol = Tolerance::default();
        let d = naimark_dilate(&std_basis(3), &tol).unwrap();
        assert_eq!(d.projector, Operator::identity(3));
        assert_eq!(d.basis, std_basis(3).into_vectors());

        let mb = mercedes_benz();
        let d = naimark_dilate(&mb, &tol).unwrap();
        assert_eq!(d.big_dim, 3);
        assert_eq!(crate::opcore::numerical_rank(&d.projector, &tol), 2);
        assert!(naimark_residual(&mb, &d) <= 1e-10);
        assert!(d.projector_defect() <= 1e-10);

        assert!(matches!(
            naimark_dilate(&e1e1e2(), &tol),
            Err(FrameError::InvalidInput(_))
        ));
        let short = FrameSystem::from_real(&[&[1.0, 0.0]]).unwrap();
        assert!(matches!(
            naimark_dilate(&short, &tol),
            Err(FrameError::InvalidInput(_))
        ));
    }

    #[test]
    fn gram_examples() {
        let tol = Tolerance::default();
        let mut rng = sampling::rng(9);
        let f =
            FrameSystem::from_synthesis(&Operator::wrap(sampling::gaussian_matrix(3, 5, &mut rng)));
        assert!(gram_equivalent(&f, &f, &tol).unwrap());
        let u = Operator::wrap(sampling::haar_unitary(3, &mut rng));
        assert!(gram_equivalent(&f, &f.mapped(&u).unwrap(), &tol).unwrap());
        assert!(!gram_equivalent(&f, &f.scaled(2.0), &tol).unwrap());
        let shorter = FrameSystem::from_real(&[&[1.0, 0.0, 0.0]]).unwrap();
        assert!(gram_equivalent(&f, &shorter, &tol).is_err());
    }
}

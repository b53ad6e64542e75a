//! K-frames: membership and optimal bounds, Parseval K-frames, the canonical
//! Parseval frame for `range(K)`, the trace/eigenvalue report, extension of
//! K-norm vectors to a K-norm frame, dilation through `K`, and the
//! correspondence between Parseval K-frames and subspaces.

use crate::error::{FrameError, Result};
use crate::frames::{naimark_dilate, DilationResult, FrameBounds, FrameSystem};
use crate::opcore::{
    complete_to_onb, hermitian_eigen, null_basis, orth_projector_matrix, pinv_matrix,
    projector_basis, range_basis, rank_of, spectral_norm, unitary_bases_map, CMatrix, CVector,
    Operator, Subspace, Tolerance, C64,
};
use crate::sampling;

/// A square operator `K` on `C^n` together with a family in `C^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct KFrameInstance {
    k: Operator,
    frame: FrameSystem,
}

impl KFrameInstance {
    pub fn new(k: Operator, frame: FrameSystem) -> Result<Self> {
        if k.rows() != k.cols() {
            return Err(FrameError::invalid(format!(
                "K must be square, got {}x{}",
                k.rows(),
                k.cols()
            )));
        }
        if k.rows() != frame.dim() {
            return Err(FrameError::invalid(format!(
                "K acts on C^{} but the frame lives in C^{}",
                k.rows(),
                frame.dim()
            )));
        }
        Ok(KFrameInstance { k, frame })
    }

    pub fn k(&self) -> &Operator {
        &self.k
    }

    pub fn frame(&self) -> &FrameSystem {
        &self.frame
    }

    pub fn dim(&self) -> usize {
        self.frame.dim()
    }

    pub fn into_parts(self) -> (Operator, FrameSystem) {
        (self.k, self.frame)
    }
}

/// `‖(I − L L†) K‖_F`, zero exactly when `range(K) ⊆ range(L)`.
pub(crate) fn range_inclusion_residual(k: &CMatrix, l: &CMatrix, tol: &Tolerance) -> f64 {
    let n = l.nrows();
    ((CMatrix::identity(n, n) - orth_projector_matrix(l, tol)) * k).norm()
}

pub(crate) fn inclusion_holds(residual: f64, k: &CMatrix, tol: &Tolerance) -> bool {
    residual <= tol.eq_abs * k.norm().max(1.0)
}

/// `{f_j}` is a K-frame iff `range(K) ⊆ range(T)`.
pub fn is_kframe(inst: &KFrameInstance, tol: &Tolerance) -> bool {
    let res = range_inclusion_residual(inst.k.matrix(), &inst.frame.synthesis_matrix(), tol);
    inclusion_holds(res, inst.k.matrix(), tol)
}

/// Optimal K-frame constants.
///
/// `upper = λ_max(S)`. When `range(K) ⊆ range(T)`, the largest `A` with
/// `A·KK* ⪯ S` is `1/λ_max(K* S† K)`; otherwise `lower = 0`. For `K = 0`
/// every family is a K-frame with any `A`, reported as `lower = ∞`.
pub fn kframe_bounds(inst: &KFrameInstance, tol: &Tolerance) -> FrameBounds {
    let t = inst.frame.synthesis_matrix();
    let s = &t * t.adjoint();
    let (eig, _) = hermitian_eigen(&s);
    let upper = eig.first().copied().unwrap_or(0.0).max(0.0);
    let k = inst.k.matrix();
    let res = range_inclusion_residual(k, &t, tol);
    if !inclusion_holds(res, k, tol) {
        return FrameBounds { lower: 0.0, upper };
    }
    if rank_of(k, tol) == 0 {
        return FrameBounds {
            lower: f64::INFINITY,
            upper,
        };
    }
    let m = k.adjoint() * pinv_matrix(&s, tol) * k;
    let (mu, _) = hermitian_eigen(&m);
    let lower = 1.0 / mu[0];
    FrameBounds { lower, upper }
}

/// `‖S − KK*‖_F`.
pub fn parseval_kframe_residual(inst: &KFrameInstance) -> f64 {
    let k = inst.k.matrix();
    (inst.frame.frame_operator().matrix() - k * k.adjoint()).norm()
}

/// Acceptance threshold of [`is_parseval_kframe`].
pub fn parseval_kframe_threshold(inst: &KFrameInstance, tol: &Tolerance) -> f64 {
    tol.eq_abs * inst.k.spectral_norm().powi(2).max(1.0) * (inst.dim() as f64).sqrt()
}

/// Parseval K-frame ⇔ `S = KK*`.
pub fn is_parseval_kframe(inst: &KFrameInstance, tol: &Tolerance) -> bool {
    parseval_kframe_residual(inst) <= parseval_kframe_threshold(inst, tol)
}

/// `f_j = K w_j` where `{w_j}` are the columns of the first `n` rows of a
/// seeded Haar unitary of size `m` (a Parseval frame of `C^n`).
pub fn random_parseval_kframe(k: &Operator, m: usize, seed: u64) -> Result<KFrameInstance> {
    let n = k.rows();
    if k.cols() != n {
        return Err(FrameError::invalid("K must be square"));
    }
    if m < n {
        return Err(FrameError::invalid(format!(
            "need m >= n for a Parseval frame of C^{n}, got m = {m}"
        )));
    }
    let u = sampling::haar_unitary(m, &mut sampling::rng(seed));
    let w = u.rows(0, n).into_owned();
    let t = k.matrix() * w;
    KFrameInstance::new(k.clone(), FrameSystem::from_synthesis(&Operator::wrap(t)))
}

/// Output of [`canonical_parseval`].
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalParseval {
    /// `f′_j = S_r^{-1/2} P_{R(K)} f_j`.
    pub frame: FrameSystem,
    /// `P_{R(K)}`.
    pub projector: Operator,
}

/// Parseval frame for `range(K)` obtained from a K-frame whose frame
/// operator leaves `range(K)` invariant.
///
/// `S_r^{-1/2}` is the inverse square root of `S` restricted to `range(K)`,
/// extended by zero on the orthogonal complement. The result is a Parseval
/// frame for `range(K)` and a Parseval `P_{R(K)}`-frame for the whole space.
pub fn canonical_parseval(inst: &KFrameInstance, tol: &Tolerance) -> Result<CanonicalParseval> {
    let n = inst.dim();
    let k = inst.k.matrix();
    let t = inst.frame.synthesis_matrix();
    let s = &t * t.adjoint();
    let q = range_basis(k, tol);
    let r = q.ncols();
    if r == 0 {
        let zero = FrameSystem::from_synthesis(&Operator::zeros(n, inst.frame.len()));
        return Ok(CanonicalParseval {
            frame: zero,
            projector: Operator::zeros(n, n),
        });
    }
    let p = &q * q.adjoint();
    let sq = &s * &q;
    let invariance = ((CMatrix::identity(n, n) - &p) * &sq).norm();
    if invariance > tol.eq_abs * s.norm().max(1.0) {
        return Err(FrameError::violated("S(R(K)) = R(K)", invariance));
    }
    let inclusion = range_inclusion_residual(k, &t, tol);
    if !inclusion_holds(inclusion, k, tol) {
        return Err(FrameError::NotAKFrame {
            residual: inclusion,
        });
    }
    let (lam, v) = hermitian_eigen(&(q.adjoint() * &sq));
    let floor = tol.singular_cutoff(n, n, lam[0].max(0.0));
    if lam[r - 1] <= floor {
        return Err(FrameError::NotAKFrame {
            residual: lam[r - 1],
        });
    }
    let inv_sqrt_diag = CMatrix::from_fn(r, r, |i, j| {
        if i == j {
            C64::new(1.0 / lam[i].sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let root = &q * (&v * inv_sqrt_diag * v.adjoint()) * q.adjoint();
    let tf = root * &p * &t;
    Ok(CanonicalParseval {
        frame: FrameSystem::from_synthesis(&Operator::wrap(tf)),
        projector: Operator::wrap(p),
    })
}

/// Spectrum of the frame operator of a Parseval K-frame next to the norm
/// identities it is compared against.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralReport {
    /// Eigenvalues of `S`, descending.
    pub eigenvalues: Vec<f64>,
    pub sum_norms_sq: f64,
    pub k_norm_sq: f64,
    /// `n‖K‖²`.
    pub n_knorm_sq: f64,
    pub trace_kkstar: f64,
    /// `|Σ‖f_j‖² − Σλ_j|`, always small.
    pub trace_residual: f64,
    /// `max_j |λ_j − ‖K‖²| ≤ eq_abs`.
    pub eigen_claim_holds: bool,
    /// `‖KK* − ‖K‖² I‖_F ≤ eq_abs √n`; only in this regime does
    /// `Σ‖f_j‖² = n‖K‖²` follow.
    pub regime_scalar_kkstar: bool,
    pub eigen_deviation: f64,
    pub scalar_deviation: f64,
}

pub fn trace_eigen_report(inst: &KFrameInstance, tol: &Tolerance) -> Result<SpectralReport> {
    let res = parseval_kframe_residual(inst);
    if res > parseval_kframe_threshold(inst, tol) {
        return Err(FrameError::invalid(format!(
            "not a Parseval K-frame (‖S − KK*‖_F = {res:.3e})"
        )));
    }
    let n = inst.dim();
    let k = inst.k.matrix();
    let (eigenvalues, _) = hermitian_eigen(inst.frame.frame_operator().matrix());
    let sum_norms_sq: f64 = inst.frame.vectors().iter().map(|v| v.norm_squared()).sum();
    let k_norm_sq = spectral_norm(k).powi(2);
    let kk = k * k.adjoint();
    let trace_kkstar = kk.trace().re;
    let eig_sum: f64 = eigenvalues.iter().sum();
    let eigen_deviation = eigenvalues
        .iter()
        .map(|l| (l - k_norm_sq).abs())
        .fold(0.0, f64::max);
    let scalar_deviation = (kk - CMatrix::identity(n, n) * C64::new(k_norm_sq, 0.0)).norm();
    Ok(SpectralReport {
        sum_norms_sq,
        k_norm_sq,
        n_knorm_sq: n as f64 * k_norm_sq,
        trace_kkstar,
        trace_residual: (sum_norms_sq - eig_sum).abs(),
        eigen_claim_holds: eigen_deviation <= tol.eq_abs,
        regime_scalar_kkstar: scalar_deviation <= tol.eq_abs * (n as f64).sqrt(),
        eigen_deviation,
        scalar_deviation,
        eigenvalues,
    })
}

/// Extends K-norm vectors (`‖f_j‖ = ‖K‖`) to a K-norm frame containing them.
///
/// Each `f_j/‖f_j‖` is completed to an orthonormal basis of `C^n` and the
/// basis is scaled by `‖K‖`; the output lists `f_j` itself followed by the
/// scaled completion, for every `j`. The result is a K-frame with constants
/// `(M, M‖K‖²)` and frame operator `M‖K‖² I`.
///
/// With `tight_mode` the completion happens inside `range(K)`, which needs
/// `‖K‖·‖K†‖ = 1` and every `f_j ∈ range(K)`; the output is then a tight
/// frame for `range(K)` with constant `M‖K‖²`.
pub fn extend_to_knorm(
    k: &Operator,
    partial: &FrameSystem,
    tight_mode: bool,
    tol: &Tolerance,
) -> Result<KFrameInstance> {
    let n = k.rows();
    if k.cols() != n || partial.dim() != n {
        return Err(FrameError::invalid(format!(
            "K is {}x{} but the vectors live in C^{}",
            k.rows(),
            k.cols(),
            partial.dim()
        )));
    }
    let knorm = k.spectral_norm();
    if knorm <= tol.eq_abs {
        return Err(FrameError::invalid("‖K‖ = 0 admits no K-norm vectors"));
    }
    for (j, f) in partial.vectors().iter().enumerate() {
        let dev = (f.norm() - knorm).abs();
        if dev > tol.eq_abs {
            return Err(FrameError::invalid(format!(
                "vector {j} has norm {} but ‖K‖ = {knorm}",
                f.norm()
            )));
        }
    }

    let scale = C64::new(knorm, 0.0);
    let mut out = Vec::with_capacity(partial.len() * n);
    if tight_mode {
        let kp = pinv_matrix(k.matrix(), tol);
        let cond = knorm * spectral_norm(&kp);
        if (cond - 1.0).abs() > tol.eq_rel {
            return Err(FrameError::violated("‖K‖‖K†‖ = 1", (cond - 1.0).abs()));
        }
        let q = range_basis(k.matrix(), tol);
        let p = &q * q.adjoint();
        for f in partial.vectors() {
            let off = (f - &p * f).norm();
            if off > tol.eq_abs * knorm.max(1.0) {
                return Err(FrameError::violated("f_j ∈ R(K)", off));
            }
            let c = q.adjoint() * f;
            let c = &c / C64::new(c.norm(), 0.0);
            let onb = complete_to_onb(&[c], q.ncols(), tol)?;
            out.push(f.clone());
            out.extend(onb.iter().skip(1).map(|e| &q * e * scale));
        }
    } else {
        for f in partial.vectors() {
            let u = f / C64::new(f.norm(), 0.0);
            let onb = complete_to_onb(&[u], n, tol)?;
            out.push(f.clone());
            out.extend(onb.into_iter().skip(1).map(|e| e * scale));
        }
    }
    KFrameInstance::new(k.clone(), FrameSystem::new(n, out)?)
}

/// Dilation of a Parseval K-frame: `f_j = K · embed* · P · e_j`.
///
/// `{K† f_j}` is a Parseval frame for `range(K†) = range(K*)`; written in an
/// orthonormal basis of that range it is dilated with [`naimark_dilate`], and
/// `embed` maps `C^n` into `C^m` through that basis.
pub fn kframe_dilation(inst: &KFrameInstance, tol: &Tolerance) -> Result<DilationResult> {
    let res = parseval_kframe_residual(inst);
    if res > parseval_kframe_threshold(inst, tol) {
        return Err(FrameError::invalid(format!(
            "not a Parseval K-frame (‖S − KK*‖_F = {res:.3e})"
        )));
    }
    let k = inst.k.matrix();
    let t = inst.frame.synthesis_matrix();
    let ranges = range_inclusion_residual(k, &t, tol).max(range_inclusion_residual(&t, k, tol));
    if ranges > tol.eq_abs * k.norm().max(1.0) {
        return Err(FrameError::violated("R(T) = R(K)", ranges));
    }
    let qr = range_basis(&k.adjoint(), tol);
    if qr.ncols() == 0 {
        return Err(FrameError::invalid("K = 0 has nothing to dilate"));
    }
    let g = pinv_matrix(k, tol) * &t;
    let coords = FrameSystem::from_synthesis(&Operator::wrap(qr.adjoint() * g));
    let d = naimark_dilate(&coords, tol).map_err(|e| match e {
        FrameError::InvalidInput(msg) => {
            FrameError::violated(format!("{{K† f_j}} Parseval on R(K†): {msg}"), res)
        }
        other => other,
    })?;
    let embed = d.embed.matrix() * qr.adjoint();
    Ok(DilationResult {
        big_dim: d.big_dim,
        basis: d.basis,
        projector: d.projector,
        embed: Operator::wrap(embed),
    })
}

/// `max_j ‖f_j − K · embed* · P e_j‖`.
pub fn kframe_dilation_residual(inst: &KFrameInstance, d: &DilationResult) -> f64 {
    let back = inst.k.matrix() * d.embed.matrix().adjoint();
    d.projected_basis()
        .iter()
        .zip(inst.frame.vectors())
        .map(|(pe, f)| (f - &back * pe).norm())
        .fold(0.0, f64::max)
}

fn check_range_projector(k: &Operator, p: &Operator, tol: &Tolerance) -> Result<()> {
    let n = k.rows();
    if k.cols() != n || p.rows() != n || p.cols() != n {
        return Err(FrameError::invalid(format!(
            "K ({}x{}) and P ({}x{}) must be square of the same size",
            k.rows(),
            k.cols(),
            p.rows(),
            p.cols()
        )));
    }
    let target = pinv_matrix(k.matrix(), tol) * k.matrix();
    let dev = (p.matrix() - target).norm();
    if dev > tol.eq_abs * p.frobenius_norm().max(1.0) {
        return Err(FrameError::invalid(format!(
            "P is not the orthogonal projector onto R(K*) (deviation {dev:.3e})"
        )));
    }
    Ok(())
}

/// Recovers a unitary `U_F` with `f_j = K P U_F e_j`.
///
/// `P U_F` is determined by the frame (`P U_F e_j = (KP)† f_j`); the part of
/// `U_F` mapping into `range(P)^⊥` is not, and is fixed by pairing
/// deterministic bases of `null(P U_F)` and `range(P)^⊥`.
pub fn orthonormal_preimage(
    k: &Operator,
    p: &Operator,
    f: &FrameSystem,
    tol: &Tolerance,
) -> Result<Operator> {
    check_range_projector(k, p, tol)?;
    let n = k.rows();
    if f.dim() != n {
        return Err(FrameError::invalid(format!(
            "frame lives in C^{} but K acts on C^{n}",
            f.dim()
        )));
    }
    if f.len() != n {
        return Err(FrameError::NotRepresentable {
            reason: format!(
                "{} vectors cannot be images of an orthonormal basis of C^{n}",
                f.len()
            ),
            residual: f64::NAN,
        });
    }
    let kp = k.matrix() * p.matrix();
    let t = f.synthesis_matrix();
    let outside = range_inclusion_residual(&t, &kp, tol);
    if outside > tol.eq_abs * t.norm().max(1.0) {
        return Err(FrameError::NotRepresentable {
            reason: "some f_j lies outside range(KP)".into(),
            residual: outside,
        });
    }
    let x = pinv_matrix(&kp, tol) * &t;
    let coisometry = (&x * x.adjoint() - p.matrix()).norm();
    if coisometry > tol.eq_abs * (n as f64).sqrt() {
        return Err(FrameError::NotRepresentable {
            reason: "the preimages P e'_j are not the projection of an orthonormal basis".into(),
            residual: coisometry,
        });
    }
    let r = rank_of(&kp, tol);
    let complement = projector_basis(&(CMatrix::identity(n, n) - p.matrix()), n - r, tol);
    let kernel = null_basis(&x, tol);
    if complement.ncols() != kernel.ncols() {
        return Err(FrameError::NotRepresentable {
            reason: "rank of the preimages does not match rank(KP)".into(),
            residual: coisometry,
        });
    }
    Ok(Operator::wrap(x + complement * kernel.adjoint()))
}

/// The subspace `U_F* P U_F H` attached to a Parseval K-frame
/// `f_j = K P U_F e_j`.
///
/// `P` projects onto `range(K*)`, so `KP = K` and `U_F* P U_F H` equals
/// `U_F* K P U_F H` whenever `range(K) = range(K*)`. Unlike the latter it
/// depends only on the frame, not on the undetermined part of `U_F`.
pub fn frame_to_subspace(
    k: &Operator,
    p: &Operator,
    f: &FrameSystem,
    tol: &Tolerance,
) -> Result<Subspace> {
    let u = orthonormal_preimage(k, p, f, tol)?;
    let image = &(&u.adjoint() * p) * &u;
    Subspace::range_of(&image, tol)
}

/// Parseval K-frame `{K P u e_j}` attached to a subspace `w` with
/// `dim w = rank(KP)`, where `u` is the unitary carrying `w` onto `range(P)`.
pub fn subspace_to_frame(
    k: &Operator,
    p: &Operator,
    w: &Subspace,
    tol: &Tolerance,
) -> Result<FrameSystem> {
    check_range_projector(k, p, tol)?;
    let n = k.rows();
    let kp = k.matrix() * p.matrix();
    let r = rank_of(&kp, tol);
    if w.ambient_dim() != n || w.dim() != r {
        return Err(FrameError::invalid(format!(
            "subspace of dimension {} in C^{} does not match rank(KP) = {r} in C^{n}",
            w.dim(),
            w.ambient_dim()
        )));
    }
    let target: Vec<CVector> = {
        let b = projector_basis(p.matrix(), r, tol);
        (0..r).map(|j| b.column(j).into_owned()).collect()
    };
    let u = unitary_bases_map(&w.basis().columns(), &target, tol)?;
    Ok(FrameSystem::from_synthesis(&Operator::wrap(
        kp * u.matrix(),
    )))
}

/// `K*K = c·P_{R(K*)}` for some `c`: the regime in which distinct subspaces
/// correspond to unitarily inequivalent Parseval K-frames and back.
pub fn is_scaled_partial_isometry(k: &Operator, tol: &Tolerance) -> bool {
    let m = k.matrix();
    let c = spectral_norm(m).powi(2);
    let dev = (m.adjoint() * m - pinv_matrix(m, tol) * m * C64::new(c, 0.0)).norm();
    dev <= tol.eq_abs * c.max(1.0) * (k.rows() as f64).sqrt()
}

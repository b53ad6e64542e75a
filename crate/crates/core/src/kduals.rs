//! K-duals: verification of `TΘ* = K`, the family of all K-duals, the error
//! identity for Parseval K-duals and the equal-norm dual family.

use crate::error::{FrameError, Result};
use crate::frames::{is_equal_norm, FrameSystem};
use crate::kframes::{inclusion_holds, kframe_bounds, range_inclusion_residual, KFrameInstance};
use crate::opcore::{
    hermitian_eigen, left_inverse, null_basis, pinv_matrix, spectral_norm, svd, CMatrix, CVector,
    Operator, Tolerance, C64,
};
use crate::sampling;
use nalgebra::{DMatrix, DVector};

/// Seed of the probe vectors used when a check samples random inputs on its own.
const PROBE_SEED: u64 = 0x6b64_7561_6c73;
const PROBES: usize = 20;

/// Outcome of testing whether `g` is a K-dual of `f`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualPair {
    pub k: Operator,
    pub frame: FrameSystem,
    pub dual: FrameSystem,
    /// `‖TΘ* − K‖_F`.
    pub residual: f64,
    pub accepted: bool,
    /// `max ‖Kx − Σ⟨x,g_j⟩f_j‖ / (‖K‖‖x‖)` over probe vectors, when the
    /// residual test passed.
    pub reconstruction_residual: Option<f64>,
    /// Optimal lower K*-frame bound of `g`, when the residual test passed.
    pub dual_kstar_lower: Option<f64>,
}

fn check_pair(k: &Operator, f: &FrameSystem, g: &FrameSystem) -> Result<()> {
    if k.rows() != k.cols() {
        return Err(FrameError::invalid("K must be square"));
    }
    if f.len() != g.len() {
        return Err(FrameError::invalid(format!(
            "frame has {} vectors, dual has {}",
            f.len(),
            g.len()
        )));
    }
    if f.dim() != k.rows() || g.dim() != k.rows() {
        return Err(FrameError::invalid(format!(
            "K acts on C^{} but the families live in C^{} and C^{}",
            k.rows(),
            f.dim(),
            g.dim()
        )));
    }
    Ok(())
}

/// `TΘ* = K`, cross-checked by the reconstruction `Kx = Σ⟨x,g_j⟩f_j` and by
/// `g` being a K*-frame.
pub fn is_kdual(
    k: &Operator,
    f: &FrameSystem,
    g: &FrameSystem,
    tol: &Tolerance,
) -> Result<DualPair> {
    check_pair(k, f, g)?;
    let t = f.synthesis_matrix();
    let theta = g.synthesis_matrix();
    let km = k.matrix();
    let residual = (&t * theta.adjoint() - km).norm();
    let knorm = spectral_norm(km);
    let mut accepted = residual <= tol.eq_abs * knorm.max(1.0);
    let (mut reconstruction_residual, mut dual_kstar_lower) = (None, None);
    if accepted {
        let mut rng = sampling::rng(PROBE_SEED);
        let mut worst: f64 = 0.0;
        for _ in 0..PROBES {
            let x = sampling::gaussian_vector(k.rows(), &mut rng);
            let mut rec = CVector::zeros(k.rows());
            for (fj, gj) in f.vectors().iter().zip(g.vectors()) {
                rec += fj * gj.dotc(&x);
            }
            let err = (km * &x - rec).norm() / (knorm.max(f64::MIN_POSITIVE) * x.norm());
            worst = worst.max(err);
        }
        let kstar = KFrameInstance::new(k.adjoint(), g.clone())?;
        let lower = kframe_bounds(&kstar, tol).lower;
        let rec_ok = knorm == 0.0 || worst <= tol.eq_rel;
        accepted = rec_ok && (lower > 0.0 || knorm == 0.0);
        reconstruction_residual = Some(worst);
        dual_kstar_lower = Some(lower);
    }
    Ok(DualPair {
        k: k.clone(),
        frame: f.clone(),
        dual: g.clone(),
        residual,
        accepted,
        reconstruction_residual,
        dual_kstar_lower,
    })
}

/// The K-dual `{V δ_j}` with `V* = T†K + (I − T†T) z*`.
///
/// Every K-dual arises this way for some `n × m` matrix `z`; `z = 0` gives the
/// canonical one.
pub fn kdual_family(
    k: &Operator,
    f: &FrameSystem,
    z: &Operator,
    tol: &Tolerance,
) -> Result<FrameSystem> {
    let (n, m) = (f.dim(), f.len());
    if k.rows() != n || k.cols() != n {
        return Err(FrameError::invalid(
            "K must be square of the frame dimension",
        ));
    }
    if z.rows() != n || z.cols() != m {
        return Err(FrameError::invalid(format!(
            "free parameter must be {n}x{m}, got {}x{}",
            z.rows(),
            z.cols()
        )));
    }
    let t = f.synthesis_matrix();
    let km = k.matrix();
    let res = range_inclusion_residual(km, &t, tol);
    if !inclusion_holds(res, km, tol) {
        return Err(FrameError::NoDualExists { residual: res });
    }
    let tp = pinv_matrix(&t, tol);
    let v_star = &tp * km + (CMatrix::identity(m, m) - &tp * &t) * z.matrix().adjoint();
    Ok(FrameSystem::from_synthesis(&Operator::wrap(
        v_star.adjoint(),
    )))
}

/// Checks of `‖(T* − Θ*K*)x‖² = ‖KK*x‖² − ‖K*x‖²` and of the two-sided bound
/// on `‖T − KΘ‖²`.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorIdentityReport {
    pub samples: usize,
    /// Largest absolute deviation of the identity over unit sample vectors.
    pub max_identity_residual: f64,
    pub identity_holds: bool,
    pub threshold: f64,
    /// `‖T − KΘ‖²` (operator norm).
    pub t_minus_k_theta_sq: f64,
    /// `‖(KK*)_r^{-1}‖^{-2} (1 − ‖K‖²)`, inverse taken on `range(K)`.
    pub lower_bound: f64,
    /// `‖K‖⁴`.
    pub upper_bound: f64,
    /// `1 − ‖K‖² ≤ 0`: the lower bound says nothing.
    pub lower_vacuous: bool,
    pub within_bounds: bool,
    pub parseval_residual: f64,
    pub kdual_residual: f64,
    pub kstar_parseval_residual: f64,
}

pub fn error_identity_report(
    k: &Operator,
    f: &FrameSystem,
    g: &FrameSystem,
    tol: &Tolerance,
    samples: usize,
    seed: u64,
) -> Result<ErrorIdentityReport> {
    check_pair(k, f, g)?;
    if samples == 0 {
        return Err(FrameError::invalid("samples must be positive"));
    }
    let n = k.rows();
    let km = k.matrix();
    let t = f.synthesis_matrix();
    let theta = g.synthesis_matrix();
    let knorm = spectral_norm(km);
    let scale = knorm.powi(2).max(1.0);
    let sqrt_n = (n as f64).sqrt();

    let kk = km * km.adjoint();
    let parseval_residual = (&t * t.adjoint() - &kk).norm();
    if parseval_residual > tol.eq_abs * scale * sqrt_n {
        return Err(FrameError::violated(
            "parseval-kframe: TT* = KK*",
            parseval_residual,
        ));
    }
    let kdual_residual = (&t * theta.adjoint() - km).norm();
    if kdual_residual > tol.eq_abs * knorm.max(1.0) {
        return Err(FrameError::violated("kdual: TΘ* = K", kdual_residual));
    }
    let kstar_parseval_residual = (&theta * theta.adjoint() - km.adjoint() * km).norm();
    if kstar_parseval_residual > tol.eq_abs * scale * sqrt_n {
        return Err(FrameError::violated(
            "parseval-kstar-frame: ΘΘ* = K*K",
            kstar_parseval_residual,
        ));
    }

    let lhs_op = t.adjoint() - theta.adjoint() * km.adjoint();
    let mut rng = sampling::rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = sampling::unit_vector(n, &mut rng);
        let lhs = (&lhs_op * &x).norm_squared();
        let rhs = (&kk * &x).norm_squared() - (km.adjoint() * &x).norm_squared();
        worst = worst.max((lhs - rhs).abs());
    }
    let threshold = tol.eq_abs * knorm.powi(4).max(1.0);

    let t_minus_k_theta_sq = spectral_norm(&(&t - km * &theta)).powi(2);
    let (lam, _) = hermitian_eigen(&kk);
    let floor = tol.singular_cutoff(n, n, lam[0].max(0.0));
    let lam_min_pos = lam
        .iter()
        .copied()
        .filter(|&l| l > floor && l > 0.0)
        .fold(f64::INFINITY, f64::min);
    let one_minus = 1.0 - knorm.powi(2);
    let lower_bound = if lam_min_pos.is_finite() {
        lam_min_pos.powi(2) * one_minus
    } else {
        0.0
    };
    let upper_bound = knorm.powi(4);
    let lower_vacuous = one_minus <= 0.0;
    let slack = tol.eq_abs * upper_bound.max(1.0);
    let within_bounds = t_minus_k_theta_sq <= upper_bound + slack
        && (lower_vacuous || t_minus_k_theta_sq >= lower_bound - slack);

    Ok(ErrorIdentityReport {
        samples,
        max_identity_residual: worst,
        identity_holds: worst <= threshold,
        threshold,
        t_minus_k_theta_sq,
        lower_bound,
        upper_bound,
        lower_vacuous,
        within_bounds,
        parseval_residual,
        kdual_residual,
        kstar_parseval_residual,
    })
}

/// Diagnostics of an equal-norm dual construction.
#[derive(Clone, Debug, PartialEq)]
pub struct EqualNormDualReport {
    pub a: f64,
    pub norms: Vec<f64>,
    pub max_norm_spread: f64,
    /// `a² + (1 − 2a²)(n/m)‖K‖² + (a²n/m)‖K‖⁴`.
    pub formula_value: f64,
    /// The closed form is only claimed when `f` is equal-norm, `KK*` is the
    /// projector onto `range(K)` and `K♮` preserves every `‖f_j‖`.
    pub formula_applies: bool,
    /// `max_j |‖g_j‖² − formula_value|`.
    pub formula_deviation: f64,
    /// `‖TΘ* − K‖_F`.
    pub duality_residual: f64,
    /// `max_j |⟨K♮f_j, a u δ_j⟩|`.
    pub orthogonality_residual: f64,
    /// The operator `u` that was used.
    pub u: CMatrix,
}

/// Partial isometry used by [`equal_norm_dual`], searched for when not given.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsometrySearch {
    pub seed: u64,
    pub restarts: usize,
    /// Iteration budget of a start that is still making progress.
    pub max_iterations: usize,
    /// A start whose violation is above `stall_level` after `stall_check`
    /// iterations is abandoned.
    pub stall_check: usize,
    pub stall_level: f64,
}

impl Default for IsometrySearch {
    fn default() -> Self {
        IsometrySearch {
            seed: 0,
            restarts: 16,
            max_iterations: 20_000,
            stall_check: 500,
            stall_level: 1e-3,
        }
    }
}

fn polar_factor(b: &CMatrix) -> CMatrix {
    let d = svd(b);
    d.u * d.v_t
}

/// Minimum-norm Gauss-Newton steps for `a_j^* vec(B) = 0` along the tangent
/// space of the isometries, each followed by the polar retraction.
///
/// The isometry constraint is not complex-linear, so the step is solved in
/// real coordinates `(Re vec Δ, Im vec Δ)`.
fn gauss_newton_polish(b: &CMatrix, constraints: &CMatrix) -> CMatrix {
    let (n, d) = (b.nrows(), b.ncols());
    let nd = n * d;
    let m = constraints.ncols();
    let rows = 2 * m + d * d;
    let mut b = b.clone();
    for _ in 0..20 {
        let mut jac = DMatrix::<f64>::zeros(rows, 2 * nd);
        let mut rhs = DVector::<f64>::zeros(rows);
        let flat = CVector::from_column_slice(b.as_slice());
        for j in 0..m {
            let a = constraints.column(j);
            for idx in 0..nd {
                let w = a[idx].conj();
                jac[(2 * j, idx)] = w.re;
                jac[(2 * j, nd + idx)] = -w.im;
                jac[(2 * j + 1, idx)] = w.im;
                jac[(2 * j + 1, nd + idx)] = w.re;
            }
            let phi = a.dotc(&flat);
            rhs[2 * j] = -phi.re;
            rhs[2 * j + 1] = -phi.im;
        }
        // B*Δ + Δ*B = I − B*B, one real row per diagonal entry, two per upper pair
        let defect = CMatrix::identity(d, d) - b.adjoint() * &b;
        let mut row = 2 * m;
        for p in 0..d {
            for q in p..d {
                let parts: &[bool] = if p == q { &[true] } else { &[true, false] };
                for &real in parts {
                    for r in 0..n {
                        let beta = b[(r, p)].conj();
                        let gamma = b[(r, q)];
                        // coefficient of Δ[r,q] from conj(B[r,p]) Δ[r,q]
                        let (xq, yq) = if real {
                            (beta.re, -beta.im)
                        } else {
                            (beta.im, beta.re)
                        };
                        jac[(row, q * n + r)] += xq;
                        jac[(row, nd + q * n + r)] += yq;
                        // coefficient of Δ[r,p] from conj(Δ[r,p]) B[r,q]
                        let (xp, yp) = if real {
                            (gamma.re, gamma.im)
                        } else {
                            (gamma.im, -gamma.re)
                        };
                        jac[(row, p * n + r)] += xp;
                        jac[(row, nd + p * n + r)] += yp;
                    }
                    rhs[row] = if real {
                        defect[(p, q)].re
                    } else {
                        defect[(p, q)].im
                    };
                    row += 1;
                }
            }
        }
        let Ok(pinv) = jac.pseudo_inverse(1e-12) else {
            break;
        };
        let step = pinv * rhs;
        if step.norm() <= 1e-16 {
            break;
        }
        let delta = CMatrix::from_fn(n, d, |r, c| C64::new(step[c * n + r], step[nd + c * n + r]));
        b = polar_factor(&(&b + delta));
    }
    b
}

/// Alternating projection between the linear constraints `h_j* B c_j = 0`
/// and the isometries `B*B = I`.
fn search_isometry(
    h: &[CVector],
    c: &CMatrix,
    n: usize,
    search: &IsometrySearch,
    tol: &Tolerance,
) -> Result<CMatrix> {
    let (m, d) = (c.nrows(), c.ncols());
    // columns: vec(h_j c_j*) with c_j = C* δ_j, column-major vectorization of n×d
    let constraints = CMatrix::from_fn(n * d, m, |idx, j| {
        let (row, col) = (idx % n, idx / n);
        h[j][row] * c[(j, col)]
    });
    let keep = CMatrix::identity(n * d, n * d) - &constraints * pinv_matrix(&constraints, tol);
    let violation = |b: &CMatrix| -> f64 {
        (0..m)
            .map(|j| {
                let cj = c.row(j).adjoint();
                h[j].dotc(&(b * cj)).norm()
            })
            .fold(0.0, f64::max)
    };

    let mut rng = sampling::rng(search.seed);
    let mut best = f64::INFINITY;
    let mut iterations = 0;
    for _ in 0..search.restarts {
        let mut b = sampling::isometry(n, d, &mut rng);
        for it in 0..search.max_iterations {
            iterations += 1;
            let flat = CVector::from_column_slice(b.as_slice());
            let projected = &keep * flat;
            b = polar_factor(&CMatrix::from_column_slice(n, d, projected.as_slice()));
            let v = violation(&b);
            best = best.min(v);
            if v <= tol.eq_abs {
                return Ok(b);
            }
            if it + 1 == search.stall_check && v > search.stall_level {
                break;
            }
            if v <= search.stall_level && it % 50 == 49 {
                let polished = gauss_newton_polish(&b, &constraints);
                let pv = violation(&polished);
                best = best.min(pv);
                if pv <= tol.eq_abs {
                    return Ok(polished);
                }
            }
        }
    }
    Err(FrameError::IsometrySearchFailed {
        iterations,
        residual: best,
    })
}

/// Equal-norm K-duals `g_j = K♮ f_j + a u δ_j` of a Parseval K-frame.
///
/// `K♮ = K†`. The `n × m` operator `u` must be a partial isometry with
/// initial space `null(T)` whose columns satisfy `⟨K♮f_j, u δ_j⟩ = 0`; it
/// can be supplied or searched for (seeded restarts of alternating
/// projections). Different nonzero `a` give different duals.
pub fn equal_norm_dual(
    k: &Operator,
    f: &FrameSystem,
    a: f64,
    u: Option<&Operator>,
    search: &IsometrySearch,
    tol: &Tolerance,
) -> Result<(FrameSystem, EqualNormDualReport)> {
    if !a.is_finite() || a == 0.0 {
        return Err(FrameError::invalid(format!(
            "a must be finite and nonzero, got {a}"
        )));
    }
    let (n, m) = (f.dim(), f.len());
    if k.rows() != n || k.cols() != n {
        return Err(FrameError::invalid(
            "K must be square of the frame dimension",
        ));
    }
    let km = k.matrix();
    let t = f.synthesis_matrix();
    let kk = km * km.adjoint();
    let knorm = spectral_norm(km);
    let parseval = (&t * t.adjoint() - &kk).norm();
    if parseval > tol.eq_abs * knorm.powi(2).max(1.0) * (n as f64).sqrt() {
        return Err(FrameError::violated("parseval-kframe: TT* = KK*", parseval));
    }
    let left = left_inverse(k, tol)?;
    let h: Vec<CVector> = f.vectors().iter().map(|fj| left.apply(fj)).collect();

    let u = match u {
        Some(u) => {
            if u.rows() != n || u.cols() != m {
                return Err(FrameError::invalid(format!(
                    "u must be {n}x{m}, got {}x{}",
                    u.rows(),
                    u.cols()
                )));
            }
            let um = u.matrix();
            let annihilates = (um * t.adjoint()).norm();
            if annihilates > tol.eq_abs * um.norm().max(1.0) {
                return Err(FrameError::violated("u T* = 0", annihilates));
            }
            let null_proj = CMatrix::identity(m, m) - pinv_matrix(&t, tol) * &t;
            let partial = (um.adjoint() * um - null_proj).norm();
            if partial > tol.eq_abs * (m as f64).sqrt() {
                return Err(FrameError::violated("u*u = P_null(T)", partial));
            }
            let orth = h
                .iter()
                .enumerate()
                .map(|(j, hj)| hj.dotc(&um.column(j).into_owned()).norm())
                .fold(0.0, f64::max);
            if orth > tol.eq_abs {
                return Err(FrameError::violated("⟨K♮f_j, u δ_j⟩ = 0", orth));
            }
            um.clone()
        }
        None => {
            let c = null_basis(&t, tol);
            let d = c.ncols();
            if d == 0 {
                CMatrix::zeros(n, m)
            } else if d > n {
                return Err(FrameError::IsometrySearchFailed {
                    iterations: 0,
                    residual: f64::INFINITY,
                });
            } else {
                let b = search_isometry(&h, &c, n, search, tol)?;
                b * c.adjoint()
            }
        }
    };

    let left_t = left.matrix() * &t;
    let theta = &left_t + &u * C64::new(a, 0.0);
    let dual = FrameSystem::from_synthesis(&Operator::wrap(theta.clone()));
    let duality_residual = (&t * theta.adjoint() - km).norm();
    let orthogonality_residual = h
        .iter()
        .enumerate()
        .map(|(j, hj)| hj.dotc(&(u.column(j) * C64::new(a, 0.0))).norm())
        .fold(0.0, f64::max);

    let norms = dual.norms();
    let max_norm_spread = norms.iter().copied().fold(f64::MIN, f64::max)
        - norms.iter().copied().fold(f64::MAX, f64::min);
    let ratio = n as f64 / m as f64;
    let k2 = knorm.powi(2);
    let formula_value = a * a + (1.0 - 2.0 * a * a) * ratio * k2 + a * a * ratio * k2 * k2;
    let formula_deviation = norms
        .iter()
        .map(|x| (x * x - formula_value).abs())
        .fold(0.0, f64::max);
    let range_proj = km * pinv_matrix(km, tol);
    let kk_is_projector = (&kk - range_proj).norm() <= tol.eq_abs * (n as f64).sqrt();
    let isometric = h
        .iter()
        .zip(f.vectors())
        .all(|(hj, fj)| (hj.norm() - fj.norm()).abs() <= tol.eq_abs);
    let formula_applies = is_equal_norm(f, tol).0 && kk_is_projector && isometric;

    Ok((
        dual,
        EqualNormDualReport {
            a,
            norms,
            max_norm_spread,
            formula_value,
            formula_applies,
            formula_deviation,
            duality_residual,
            orthogonality_residual,
            u,
        },
    ))
}

mod common;

use common::{quad, random_k, KKind, KINDS};
use nalgebra::SymmetricEigen;
use parseval_kframes::frames::{frame_bounds, gram_equivalent, naimark_dilate, FrameSystem};
use parseval_kframes::kduals::{error_identity_report, is_kdual, kdual_family};
use parseval_kframes::kframes::{
    canonical_parseval, extend_to_knorm, frame_to_subspace, is_parseval_kframe, kframe_bounds,
    random_parseval_kframe, subspace_to_frame, KFrameInstance,
};
use parseval_kframes::opcore::{numerical_rank, orth_projector, pinv, principal_angles};
use parseval_kframes::sampling;
use parseval_kframes::{CMatrix, Document, Operator, Subspace, Tolerance, C64};
use proptest::prelude::*;

fn tol() -> Tolerance {
    Tolerance::default()
}

fn kind() -> impl Strategy<Value = KKind> {
    prop::sample::select(KINDS.to_vec())
}

fn min_eigenvalue(m: &CMatrix) -> f64 {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pinv_satisfies_penrose_conditions(seed in any::<u64>(), rows in 1usize..6, cols in 1usize..6, rank in 1usize..6) {
        let mut rng = sampling::rng(seed);
        let r = rank.min(rows).min(cols);
        let a = sampling::gaussian_matrix(rows, r, &mut rng) * sampling::gaussian_matrix(r, cols, &mut rng);
        let x = pinv(&Operator::new(a.clone()).unwrap(), &tol()).into_matrix();
        let scale = a.norm().max(1.0) * x.norm().max(1.0);
        prop_assert!((&a * &x * &a - &a).norm() <= 1e-9 * scale);
        prop_assert!((&x * &a * &x - &x).norm() <= 1e-9 * scale * x.norm().max(1.0));
        prop_assert!((&a * &x - (&a * &x).adjoint()).norm() <= 1e-9 * scale);
        prop_assert!((&x * &a - (&x * &a).adjoint()).norm() <= 1e-9 * scale);
    }

    #[test]
    fn projectors_are_hermitian_and_idempotent(seed in any::<u64>(), n in 1usize..7, r in 1usize..7) {
        let mut rng = sampling::rng(seed);
        let a = Operator::new(sampling::gaussian_matrix(n, r.min(n), &mut rng)).unwrap();
        let p = orth_projector(&a, &tol()).into_matrix();
        prop_assert!((&p * &p - &p).norm() <= 1e-12);
        prop_assert!((&p - p.adjoint()).norm() <= 1e-12);
        prop_assert_eq!(numerical_rank(&Operator::new(p).unwrap(), &tol()), r.min(n));
    }

    #[test]
    fn generated_parseval_kframes_have_unit_lower_bound(seed in any::<u64>(), k_kind in kind(), n in 1usize..6, extra in 0usize..6) {
        let mut rng = sampling::rng(seed);
        let k = random_k(k_kind, n, &mut rng);
        prop_assume!(k.frobenius_norm() > 0.0);
        let inst = random_parseval_kframe(&k, n + extra, seed ^ 1).unwrap();
        prop_assert!(is_parseval_kframe(&inst, &tol()));
        let b = kframe_bounds(&inst, &tol());
        prop_assert!((b.lower - 1.0).abs() <= 1e-9);
        prop_assert!((b.upper - k.spectral_norm().powi(2)).abs() <= 1e-9 * b.upper.max(1.0));
    }

    #[test]
    fn kframe_lower_bound_is_optimal(seed in any::<u64>(), k_kind in kind(), n in 1usize..6, extra in 0usize..6) {
        let mut rng = sampling::rng(seed);
        let k = random_k(k_kind, n, &mut rng);
        prop_assume!(k.frobenius_norm() > 0.0);
        let t = sampling::gaussian_matrix(n, n + extra, &mut rng);
        let inst = KFrameInstance::new(k.clone(), FrameSystem::from_synthesis(&Operator::new(t.clone()).unwrap())).unwrap();
        let a = kframe_bounds(&inst, &tol()).lower;
        let s = &t * t.adjoint();
        let kk = k.matrix() * k.matrix().adjoint();
        let scale = s.norm().max(1.0);
        prop_assert!(min_eigenvalue(&(&s - &kk * C64::new(a, 0.0))) >= -1e-9 * scale);
        prop_assert!(min_eigenvalue(&(&s - &kk * C64::new(a * (1.0 + 1e-6), 0.0))) < 0.0);
    }

    #[test]
    fn frame_bounds_sandwich_energy(seed in any::<u64>(), n in 1usize..6, extra in 0usize..6) {
        let mut rng = sampling::rng(seed);
        let t = Operator::new(sampling::gaussian_matrix(n, n + extra, &mut rng)).unwrap();
        let f = FrameSystem::from_synthesis(&t);
        let b = frame_bounds(&f, &tol());
        let s = f.frame_operator().into_matrix();
        for _ in 0..10 {
            let x = sampling::unit_vector(n, &mut rng);
            let e = quad(&s, &x);
            prop_assert!(b.lower <= e * (1.0 + 1e-10) && e <= b.upper * (1.0 + 1e-10));
        }
    }

    #[test]
    fn canonical_parseval_of_parseval_kframe_is_parseval_on_range(seed in any::<u64>(), k_kind in kind(), n in 1usize..6, extra in 0usize..5) {
        let mut rng = sampling::rng(seed);
        let k = random_k(k_kind, n, &mut rng);
        prop_assume!(k.frobenius_norm() > 0.0);
        let inst = random_parseval_kframe(&k, n + extra, seed ^ 2).unwrap();
        let out = canonical_parseval(&inst, &tol()).unwrap();
        let check = KFrameInstance::new(out.projector.clone(), out.frame).unwrap();
        prop_assert!(is_parseval_kframe(&check, &tol()));
    }

    #[test]
    fn every_member_of_the_kdual_family_is_a_kdual(seed in any::<u64>(), k_kind in kind(), n in 1usize..6, extra in 0usize..5) {
        let mut rng = sampling::rng(seed);
        let k = random_k(k_kind, n, &mut rng);
        let m = n + extra;
        let f = FrameSystem::from_synthesis(&Operator::new(sampling::gaussian_matrix(n, m, &mut rng)).unwrap());
        let z = Operator::new(sampling::gaussian_matrix(n, m, &mut rng)).unwrap();
        let g = kdual_family(&k, &f, &z, &tol()).unwrap();
        prop_assert!(is_kdual(&k, &f, &g, &tol()).unwrap().accepted);
    }

    #[test]
    fn naimark_dilation_is_gram_equivalent(seed in any::<u64>(), n in 1usize..6, extra in 0usize..6) {
        let inst = random_parseval_kframe(&Operator::identity(n), n + extra, seed).unwrap();
        let d = naimark_dilate(inst.frame(), &tol()).unwrap();
        let projected = FrameSystem::new(d.big_dim, d.projected_basis()).unwrap();
        prop_assert!(gram_equivalent(inst.frame(), &projected, &tol()).unwrap());
        prop_assert!(d.projector_defect() <= 1e-12);
    }

    #[test]
    fn knorm_extension_is_tight(seed in any::<u64>(), k_kind in kind(), n in 1usize..6, count in 1usize..4) {
        let mut rng = sampling::rng(seed);
        let k = random_k(k_kind, n, &mut rng);
        prop_assume!(k.spectral_norm() > 1e-3);
        let c = k.spectral_norm();
        let vs = (0..count)
            .map(|_| {
                let x = sampling::gaussian_vector(n, &mut rng);
                &x * C64::new(c / x.norm(), 0.0)
            })
            .collect();
        let out = extend_to_knorm(&k, &FrameSystem::new(n, vs).unwrap(), false, &tol()).unwrap();
        let s = out.frame().frame_operator().into_matrix();
        let target = CMatrix::identity(n, n) * C64::new(count as f64 * c * c, 0.0);
        prop_assert!((s - target).norm() <= 1e-9 * (count as f64 * c * c).max(1.0));
    }

    #[test]
    fn correspondence_round_trip(seed in any::<u64>(), k_kind in kind(), n in 2usize..6) {
        let mut rng = sampling::rng(seed);
        let k = random_k(k_kind, n, &mut rng);
        prop_assume!(k.frobenius_norm() > 0.0);
        let p = orth_projector(&k.adjoint(), &tol());
        let r = numerical_rank(&k, &tol());
        let w = Subspace::range_of(&Operator::new(sampling::gaussian_matrix(n, r, &mut rng)).unwrap(), &tol()).unwrap();
        let f = subspace_to_frame(&k, &p, &w, &tol()).unwrap();
        prop_assert!(is_parseval_kframe(&KFrameInstance::new(k.clone(), f.clone()).unwrap(), &tol()));
        let back = frame_to_subspace(&k, &p, &f, &tol()).unwrap();
        let worst = principal_angles(&w, &back).unwrap().into_iter().fold(0.0, f64::max);
        prop_assert!(worst <= 1e-6);
    }

    #[test]
    fn error_identity_on_scaled_unitary_pairs(seed in any::<u64>(), n in 1usize..4, extra in 0usize..3, c in 1.0f64..3.0) {
        // T = KW, Θ = c(W/c + V√(1 − 1/c²)) with W, V orthogonal co-isometries
        let m = 2 * n + extra;
        let mut rng = sampling::rng(seed);
        let k = sampling::haar_unitary(n, &mut rng) * C64::new(c, 0.0);
        let h = sampling::haar_unitary(m, &mut rng);
        let w = h.rows(0, n).into_owned();
        let v = h.rows(n, n).into_owned();
        let t = &k * &w;
        let theta = (&w * C64::new(1.0 / c, 0.0) + &v * C64::new((1.0 - 1.0 / (c * c)).sqrt(), 0.0)) * C64::new(c, 0.0);
        let k = Operator::new(k).unwrap();
        let f = FrameSystem::from_synthesis(&Operator::new(t).unwrap());
        let g = FrameSystem::from_synthesis(&Operator::new(theta).unwrap());
        let r = error_identity_report(&k, &f, &g, &tol(), 20, seed).unwrap();
        prop_assert!(r.identity_holds);
        prop_assert!(r.within_bounds);
    }

    #[test]
    fn operator_documents_round_trip_bit_exactly(
        rows in 1usize..4,
        cols in 1usize..4,
        values in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 32),
    ) {
        let m = CMatrix::from_fn(rows, cols, |i, j| C64::new(values[2 * (i * cols + j)], values[2 * (i * cols + j) + 1]));
        let doc = Document::Operator(Operator::new(m).unwrap());
        let back = Document::parse(&doc.to_string_pretty(), &tol()).unwrap();
        let (Document::Operator(a), Document::Operator(b)) = (&doc, &back) else { unreachable!() };
        for (x, y) in a.matrix().iter().zip(b.matrix().iter()) {
            prop_assert_eq!(x.re.to_bits(), y.re.to_bits());
            prop_assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
    }
}

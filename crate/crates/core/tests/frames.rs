use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wloc::frames::{
    bergman_degree_for, bergman_disc_frame, bergman_inner, canonical_dual, frame_bounds, frame_bounds_on, gabor_gaussian_frame,
    gabor_inner, haar_inner, haar_wavelet_frame, hermite_basis, interior_test_subspace, orthonormal_test_frame, reconstruct,
    resolved_projector, DualOptions, TimeGrid, BERGMAN_TOLERANCE,
};
use wloc::geometry::{affine_grid, sample_grid, MetricMeasureSpace, Point};
use wloc::linalg::{self, adjoint, hermitian_eigvals, random_vector, CMat};
use wloc::{Error, C64};

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect()
}

fn gabor_pt() -> impl Strategy<Value = Point> {
    (-6.0..6.0f64, -6.0..6.0f64).prop_map(|(x, y)| Point::euclidean(x, y))
}

fn affine_pt() -> impl Strategy<Value = Point> {
    (-4.0..4.0f64, -8.0..8.0f64).prop_map(|(s, b)| Point::affine(s.exp(), b))
}

fn disc_pt() -> impl Strategy<Value = Point> {
    (0.0..0.98f64, 0.0..(2.0 * PI)).prop_map(|(r, t)| Point::disc(r * t.cos(), r * t.sin()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn pair_inner_is_hermitian_and_bounded(p in gabor_pt(), q in gabor_pt(), a in affine_pt(), b in affine_pt(), z in disc_pt(), w in disc_pt()) {
        let (g1, g2) = (gabor_inner(&p, &q), gabor_inner(&q, &p));
        prop_assert!((g1 - g2.conj()).norm() <= 1e-14);
        prop_assert!(g1.norm() <= 1.0 + 1e-14);
        prop_assert!((gabor_inner(&p, &p) - C64::new(1.0, 0.0)).norm() <= 1e-14);

        prop_assert_eq!(haar_inner(&a, &b), haar_inner(&b, &a));
        prop_assert!(haar_inner(&a, &b).abs() <= 1.0 + 1e-12);
        prop_assert!((haar_inner(&a, &a) - 1.0).abs() <= 1e-12);

        let (k1, k2) = (bergman_inner(&z, &w), bergman_inner(&w, &z));
        prop_assert!((k1 - k2.conj()).norm() <= 1e-12);
        prop_assert!(k1.norm() <= 1.0 + 1e-12);
        prop_assert!((bergman_inner(&z, &z).re - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn gabor_magnitude_depends_on_offset_only(p in gabor_pt(), q in gabor_pt(), s in gabor_pt()) {
        let shift = |u: &Point| Point::euclidean(u.x() + s.x(), u.y() + s.y());
        let (m0, m1) = (gabor_inner(&p, &q).norm(), gabor_inner(&shift(&p), &shift(&q)).norm());
        prop_assert!((m0 - m1).abs() <= 1e-14);
    }

    #[test]
    fn haar_inner_is_affine_invariant(g in affine_pt(), p in affine_pt(), q in affine_pt()) {
        let s = MetricMeasureSpace::affine();
        let (gp, gq) = (s.group_mul(&g, &p).unwrap(), s.group_mul(&g, &q).unwrap());
        prop_assert!((haar_inner(&p, &q) - haar_inner(&gp, &gq)).abs() <= 1e-9);
    }
}

#[test]
fn bergman_kernel_at_origin() {
    let o = Point::disc(0.0, 0.0);
    for (re, im) in [(0.3, 0.1), (-0.7, 0.5), (0.0, 0.95)] {
        let w = Point::disc(re, im);
        let expect = 1.0 - (re * re + im * im);
        assert!((bergman_inner(&o, &w).norm() - expect).abs() <= 1e-12);
    }
}

#[test]
fn realizations_match_closed_forms() {
    let g = gabor_gaussian_frame(sample_grid(&MetricMeasureSpace::euclidean(), 0.6, 3.0).unwrap()).unwrap();
    assert!(g.consistency_error(&all_pairs(g.len())) <= 1e-6);

    let b = bergman_disc_frame(sample_grid(&MetricMeasureSpace::disc(), 0.4, 2.0).unwrap(), bergman_degree_for(2.0, BERGMAN_TOLERANCE))
        .unwrap();
    assert!(b.consistency_error(&all_pairs(b.len())) <= 1e-6);

    let h = haar_wavelet_frame(affine_grid(&MetricMeasureSpace::affine(), 0.5, 0.25, 2.5).unwrap()).unwrap();
    assert!(h.consistency_error(&all_pairs(h.len())) <= 1e-4);
}

#[test]
fn compression_preserves_inner_products() {
    let h = haar_wavelet_frame(affine_grid(&MetricMeasureSpace::affine(), std::f64::consts::LN_2, 0.25, 2.5).unwrap()).unwrap();
    let c = h.compressed().unwrap();
    assert!(c.is_compressed());
    assert!(c.dim() <= h.dim());
    assert!(c.consistency_error(&all_pairs(c.len())) <= 1e-10);
    // Node atoms lie in the span, so realizing them again reproduces the stored columns.
    for i in [0, c.len() / 2, c.len() - 1] {
        let v = c.realize(&c.domain.nodes[i]);
        let diff = &v - &c.atoms().column(i);
        assert!(linalg::norm(&diff) <= 1e-10);
    }
}

#[test]
fn gram_is_hermitian_psd() {
    for frame in [
        gabor_gaussian_frame(sample_grid(&MetricMeasureSpace::euclidean(), 0.5, 2.5).unwrap()).unwrap(),
        haar_wavelet_frame(affine_grid(&MetricMeasureSpace::affine(), 0.5, 0.25, 2.0).unwrap()).unwrap(),
        bergman_disc_frame(sample_grid(&MetricMeasureSpace::disc(), 0.4, 1.6).unwrap(), bergman_degree_for(1.6, BERGMAN_TOLERANCE))
            .unwrap(),
    ] {
        let g = frame.gram();
        assert!(linalg::is_hermitian(g, 0.0));
        let low = hermitian_eigvals(g).unwrap()[0];
        assert!(low >= -1e-10, "{} has eigenvalue {low}", frame.family.name());
    }
}

#[test]
fn orthonormal_family_is_its_own_dual() {
    let f = orthonormal_test_frame(7).unwrap();
    let d = canonical_dual(&f, DualOptions::default()).unwrap();
    assert_eq!(d.vectors, *f.atoms());
    let b = frame_bounds(&f).unwrap();
    assert_eq!((b.lower, b.upper, b.resolved_rank), (1.0, 1.0, 7));
}

#[test]
fn reconstruction_on_resolved_span() {
    let f = gabor_gaussian_frame(sample_grid(&MetricMeasureSpace::euclidean(), 0.5, 4.0).unwrap()).unwrap();
    let d = canonical_dual(&f, DualOptions::default()).unwrap();
    let p = resolved_projector(&f).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let v = p.dot(&random_vector(f.dim(), &mut rng));
        let r = reconstruct(&f, &d, &v).unwrap();
        let err = linalg::norm(&(&r - &v)) / linalg::norm(&v);
        assert!(err <= 1e-6, "{err}");
    }
}

#[test]
fn ill_conditioned_dual_is_refused_on_request() {
    let f = gabor_gaussian_frame(sample_grid(&MetricMeasureSpace::euclidean(), 0.5, 2.0).unwrap()).unwrap();
    let opts = DualOptions { min_condition: Some(0.5), ..DualOptions::default() };
    assert!(matches!(canonical_dual(&f, opts), Err(Error::IllConditioned { .. })));
}

#[test]
fn bergman_frame_operator_matches_the_truncated_disc() {
    // On monomials the continuum frame operator of the ball |z| < tanh R is diagonal with
    // entries ‖zⁿ 1_{|z|<ρ}‖²/‖zⁿ‖² = ρ^{2n+2}.
    let r = 2.5;
    let f = bergman_disc_frame(sample_grid(&MetricMeasureSpace::disc(), 0.25, r).unwrap(), bergman_degree_for(r, BERGMAN_TOLERANCE))
        .unwrap();
    let s = f.frame_operator();
    let rho = r.tanh();
    for n in 0..12 {
        let want = rho.powi(2 * n as i32 + 2);
        assert!((s[[n, n]].re - want).abs() <= 0.02, "n={n}: {} vs {want}", s[[n, n]].re);
    }
    let basis = interior_test_subspace(&f, 2, 0.0).unwrap();
    let b = frame_bounds_on(&f, &basis).unwrap();
    assert!(b.lower >= 0.93 && b.upper <= 1.05, "{b:?}");
}

#[test]
fn bergman_degree_cap_is_enforced() {
    let dom = sample_grid(&MetricMeasureSpace::disc(), 0.4, 2.0).unwrap();
    assert!(matches!(bergman_disc_frame(dom, 3), Err(Error::DegreeCapTooSmall { .. })));
    assert!(bergman_degree_for(1.0, 1e-6) < bergman_degree_for(2.0, 1e-6));
}

#[test]
fn hermite_functions_are_orthonormal() {
    let grid = TimeGrid::for_gabor(0.0, 0.0);
    let h: CMat = hermite_basis(&grid, 6);
    let g = adjoint(&h.view()).dot(&h);
    for i in 0..6 {
        for j in 0..6 {
            let e = if i == j { 1.0 } else { 0.0 };
            assert!((g[[i, j]] - C64::new(e, 0.0)).norm() <= 1e-10, "({i},{j}) {}", g[[i, j]]);
        }
    }
}

#[test]
fn frames_reject_wrong_space() {
    let dom = sample_grid(&MetricMeasureSpace::disc(), 0.5, 1.0).unwrap();
    assert!(matches!(gabor_gaussian_frame(dom.clone()), Err(Error::SpaceMismatch { .. })));
    assert!(matches!(haar_wavelet_frame(dom), Err(Error::SpaceMismatch { .. })));
}

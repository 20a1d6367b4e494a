use std::sync::Arc;

use proptest::prelude::*;
use wloc::disc::{hankel_identity_residual, toeplitz_matrix};
use wloc::frames::{bergman_degree_for, bergman_disc_frame, gabor_gaussian_frame, gabor_inner, BERGMAN_TOLERANCE};
use wloc::geometry::{build_cover, sample_grid, MetricMeasureSpace, Point};
use wloc::linalg::{self, adjoint, CMat};
use wloc::localization::LocalizationVerdict;
use wloc::operators::{
    adjoint_op, approximant, berezin, berezin_compactness_test, block_component, compose, essential_norm_bound, frame_kernel,
    group_action, interaction_matrix, kernel_from_interactions, multiplier, norm_bound, operator_norm, reconstruction,
    singular_value_profile, singular_value_proxy, translation_operator, Compactness, FrameContext, LocalizedOperator,
    Provenance, Symbol,
};
use wloc::{Error, C64};

fn gabor_ctx(h: f64, r: f64) -> Arc<FrameContext> {
    FrameContext::natural(gabor_gaussian_frame(sample_grid(&MetricMeasureSpace::euclidean(), h, r).unwrap()).unwrap()).unwrap()
}

fn bergman_ctx(h: f64, r: f64) -> Arc<FrameContext> {
    let dom = sample_grid(&MetricMeasureSpace::disc(), h, r).unwrap();
    FrameContext::natural(bergman_disc_frame(dom, bergman_degree_for(r, BERGMAN_TOLERANCE)).unwrap()).unwrap()
}

fn diff_norm(a: &CMat, b: &CMat) -> f64 {
    linalg::spectral_norm(&(a - b)).unwrap()
}

#[test]
fn real_symbols_give_hermitian_multipliers() {
    let ctx = gabor_ctx(0.5, 3.0);
    assert!(ctx.is_parseval());
    for u in [Symbol::indicator_box(1.0), Symbol::oscillatory(2.0), Symbol::lp_decay()] {
        let t = multiplier(&ctx, &u).unwrap();
        let h = adjoint(&t.action.view());
        assert!(linalg::max_abs(&(&t.action - &h)) <= 1e-10 * linalg::max_abs(&t.action).max(1.0));
    }
}

#[test]
fn berezin_of_identity_is_one() {
    for ctx in [gabor_ctx(0.5, 3.0), bergman_ctx(0.4, 2.0)] {
        let b = berezin(&LocalizedOperator::identity(ctx));
        assert!(b.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() <= 1e-6));
    }
}

#[test]
fn interaction_shortcuts_match_direct_computation() {
    let ctx = gabor_ctx(0.6, 2.5);
    let t = multiplier(&ctx, &Symbol::oscillatory(1.5)).unwrap();
    let p = interaction_matrix(&t);
    let k0 = frame_kernel(&t).unwrap();
    let k1 = kernel_from_interactions(&p, "t");
    assert!(k0.values.iter().zip(k1.values.iter()).all(|(a, b)| (a - b).abs() <= 1e-13));
    let b = berezin(&t);
    assert!(b.iter().enumerate().all(|(i, z)| (z - p[[i, i]]).norm() <= 1e-13));
}

#[test]
fn essential_bound_never_exceeds_norm_bound() {
    let ctx = gabor_ctx(0.5, 3.0);
    let t = multiplier(&ctx, &Symbol::indicator_box(1.0)).unwrap();
    for r in [0.75, 1.5] {
        let cover = build_cover(ctx.domain(), r).unwrap();
        for eps in [0.1, 0.5] {
            let nb = norm_bound(&t, &cover, eps).unwrap();
            let eb = essential_norm_bound(&t, &cover, eps, 0.6).unwrap();
            assert!(eb.bound <= nb.bound && eb.adjoint_bound <= nb.adjoint_bound);
        }
        assert!(norm_bound(&t, &cover, 1.0).is_err());
    }
}

#[test]
fn blocks_have_bounded_rank_and_sum_to_the_approximant() {
    let ctx = gabor_ctx(0.5, 2.5);
    let t = multiplier(&ctx, &Symbol::lp_decay()).unwrap();
    let cover = build_cover(ctx.domain(), 1.0).unwrap();
    let a = approximant(&t, &cover).unwrap();
    let mut sum = CMat::zeros(a.action.raw_dim());
    for j in 0..cover.cells.len() {
        let b = block_component(&t, &cover, j).unwrap();
        let sv = linalg::singular_values(&b.action).unwrap();
        let rank = sv.iter().filter(|&&s| s > 1e-10 * sv[0].max(1e-300)).count();
        assert!(rank <= cover.cells[j].len(), "block {j}: rank {rank} > {}", cover.cells[j].len());
        sum = sum + &b.action;
    }
    assert!(diff_norm(&sum, &a.action) <= 1e-10);
    assert!(matches!(block_component(&t, &cover, cover.cells.len()), Err(Error::IndexOutOfRange { .. })));
}

#[test]
fn whole_domain_cover_reproduces_the_reconstruction() {
    let ctx = gabor_ctx(0.6, 2.0);
    let t = multiplier(&ctx, &Symbol::indicator_box(0.8)).unwrap();
    let cover = build_cover(ctx.domain(), 10.0).unwrap();
    let a = approximant(&t, &cover).unwrap();
    let rec = reconstruction(&t).unwrap();
    assert!(diff_norm(&a.action, &rec.action) <= 1e-12);
}

#[test]
fn rank_one_and_identity_profiles() {
    let ctx = gabor_ctx(0.6, 2.0);
    let v = ctx.frame.atoms().column(0).to_owned();
    let outer = CMat::from_shape_fn((ctx.dim(), ctx.dim()), |(i, j)| v[i] * v[j].conj());
    let t = LocalizedOperator::new(outer, ctx.clone(), Provenance::Custom { label: "rank-one".into() }).unwrap();
    let s = singular_value_profile(&t, 2).unwrap();
    assert!(s[1] <= 1e-10 * s[0]);
    let id = singular_value_profile(&LocalizedOperator::identity(ctx.clone()), 10).unwrap();
    assert!(id.iter().all(|&x| (x - 1.0).abs() <= 1e-12));
    assert!(singular_value_profile(&t, ctx.dim() + 1).is_err());
    assert_eq!(operator_norm(&LocalizedOperator::zero(ctx)).unwrap(), 0.0);
}

#[test]
fn sv_proxy_thresholds() {
    let sv = [2.0, 1.0, 0.5, 0.01, 0.001];
    let p = singular_value_proxy(&sv, 4, 0.01);
    assert_eq!(p.verdict, Compactness::Compact);
    assert_eq!(p.ratio, 0.005);
    assert_eq!(singular_value_proxy(&sv, 3, 0.01).verdict, Compactness::NotCompact);
    // Beyond the recorded spectrum the proxy sees zero.
    assert_eq!(singular_value_proxy(&sv, 9, 0.01).sigma_k0, 0.0);
}

#[test]
fn berezin_test_refuses_unlocalized_kernels() {
    let ctx = gabor_ctx(0.6, 2.5);
    let t = multiplier(&ctx, &Symbol::constant(1.0)).unwrap();
    let no = LocalizationVerdict { localized: false, reasons: vec!["test".into()] };
    assert!(matches!(berezin_compactness_test(&t, 0.5, 0.02, &no), Err(Error::NotLocalized(_))));
    let yes = LocalizationVerdict { localized: true, reasons: vec![] };
    let v = berezin_compactness_test(&t, 0.5, 0.02, &yes).unwrap();
    assert_eq!(v.verdict, Compactness::NotCompact);
    assert!(!v.heuristic);
}

#[test]
fn composition_and_adjoint() {
    let ctx = gabor_ctx(0.6, 2.0);
    let a = multiplier(&ctx, &Symbol::indicator_box(1.0)).unwrap();
    let b = multiplier(&ctx, &Symbol::oscillatory(1.0)).unwrap();
    let ab = compose(&a, &b).unwrap();
    assert!(diff_norm(&ab.action, &a.action.dot(&b.action)) <= 1e-12);
    let back = adjoint_op(&adjoint_op(&ab));
    assert_eq!(back.action, ab.action);
    let other = gabor_ctx(0.6, 2.0);
    assert!(matches!(compose(&a, &multiplier(&other, &Symbol::constant(1.0)).unwrap()), Err(Error::ContextMismatch)));
}

#[test]
fn translation_by_identity_is_the_frame_operator() {
    let ctx = gabor_ctx(0.6, 2.0);
    let (u, info) = translation_operator(&ctx, &Point::euclidean(0.0, 0.0)).unwrap();
    assert!(info.outside.is_empty());
    assert!(diff_norm(&u.action, &ctx.frame.frame_operator()) <= 1e-12);
    let (_, moved) = translation_operator(&ctx, &Point::euclidean(1.0, 0.0)).unwrap();
    assert!(!moved.outside.is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    // π(y) is unitary, so the phases returned by group_action must cancel in inner products.
    #[test]
    fn gabor_group_action_is_covariant(
        y in (-3.0..3.0f64, -3.0..3.0f64), x in (-3.0..3.0f64, -3.0..3.0f64), z in (-3.0..3.0f64, -3.0..3.0f64)
    ) {
        let s = MetricMeasureSpace::euclidean();
        let (y, x, z) = (Point::euclidean(y.0, y.1), Point::euclidean(x.0, x.1), Point::euclidean(z.0, z.1));
        let (yx, cx) = group_action(&s, &y, &x).unwrap();
        let (yz, cz) = group_action(&s, &y, &z).unwrap();
        let lhs = cx * cz.conj() * gabor_inner(&yx, &yz);
        prop_assert!((lhs - gabor_inner(&x, &z)).norm() <= 1e-12);
    }
}

#[test]
fn bergman_radial_toeplitz_is_diagonal() {
    let t = toeplitz_matrix(&Symbol::radial_power(2), 40).unwrap();
    for n in 0..=40 {
        let want = (n as f64 + 1.0) / (n as f64 + 2.0);
        assert!((t[[n, n]].re - want).abs() <= 1e-12, "{n}");
    }
    let off: f64 = t.indexed_iter().filter(|((i, j), _)| i != j).map(|(_, z)| z.norm_sqr()).sum();
    assert_eq!(off, 0.0);
    let one = toeplitz_matrix(&Symbol::constant(1.0), 20).unwrap();
    assert!(linalg::max_abs(&(&one - &linalg::identity(21))) <= 1e-12);
}

#[test]
fn general_symbols_use_the_angular_quadrature() {
    // |z|² written without the radial shortcut must agree with the diagonal formula.
    let u = Symbol::real("abs2", wloc::operators::SymbolClass::BoundedOnly, |p| p.x() * p.x() + p.y() * p.y());
    let t = toeplitz_matrix(&u, 16).unwrap();
    for n in 0..=16 {
        for m in 0..=16 {
            let want = if n == m { (n as f64 + 1.0) / (n as f64 + 2.0) } else { 0.0 };
            assert!((t[[n, m]] - C64::new(want, 0.0)).norm() <= 1e-12, "({n},{m}) {}", t[[n, m]]);
        }
    }
    // T_z̄ shifts down: ⟨T_z̄ e_m, e_n⟩ = √(m/(m+1)) δ_{n,m−1}.
    let tz = toeplitz_matrix(&Symbol::zbar(), 10).unwrap();
    for m in 1..=10 {
        let want = (m as f64 / (m as f64 + 1.0)).sqrt();
        assert!((tz[[m - 1, m]].re - want).abs() <= 1e-12);
    }
}

#[test]
fn hankel_identity_holds_on_the_protected_half() {
    let h = hankel_identity_residual(&Symbol::zbar(), 24).unwrap();
    assert_eq!(h.protected, 13);
    assert!(h.residual <= 1e-6, "{}", h.residual);
    assert!(h.hankel_norm > 0.0 && h.hankel_norm <= 1.0);
}

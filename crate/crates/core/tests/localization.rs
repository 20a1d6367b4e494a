use proptest::prelude::*;
use wloc::geometry::{sample_grid, MetricMeasureSpace, Point, SampledDomain};
use wloc::localization::{
    check_weak_localization, compose_kernels, default_radii, localization_report, pointwise_sweep, rho, schur_margins,
    tail_profile, KernelMatrix, Weight, DEFAULT_MARGIN_CAP, DEFAULT_TAIL_FLOOR,
};
use wloc::Error;

const N: usize = 13;

fn line() -> SampledDomain {
    SampledDomain::line(0.5, 3.0).unwrap()
}

fn kernel(vals: &[f64]) -> KernelMatrix {
    KernelMatrix::from_fn(N, "random", |x, y| vals[x * N + y])
}

fn symmetric(vals: &[f64]) -> KernelMatrix {
    KernelMatrix::from_fn(N, "random-symmetric", |x, y| vals[x.min(y) * N + x.max(y)])
}

fn entries() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, N * N)
}

fn weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.1..10.0f64, N)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn symmetric_kernels_have_equal_margins(v in entries(), p in weights()) {
        let d = line();
        let (row, col) = schur_margins(&symmetric(&v), &d.weights, &p).unwrap();
        prop_assert!((row - col).abs() <= 1e-12 * row.max(1.0));
    }

    #[test]
    fn tables_are_monotone(v in entries(), p in weights(), eps in prop::collection::vec(0.01..3.0f64, 1..6)) {
        let d = line();
        let p2 = p.clone();
        let w = Weight::custom("table", move |q: &Point| p2[((q.x() + 3.0) / 0.5).round() as usize]);
        let rep = localization_report(&kernel(&v), &d, &w, &default_radii(&d), &eps).unwrap();
        let tails: Vec<f64> = rep.tail_profile.iter().filter_map(|e| e.worst()).collect();
        prop_assert!(tails.windows(2).all(|t| t[1] <= t[0]));
        for e in &rep.tail_profile {
            if let (Some(r), Some(c)) = (e.row, e.col) {
                prop_assert!(r >= 0.0 && c >= 0.0);
            }
        }
        // ρ is nonincreasing in ε: larger ε never needs a larger radius.
        for w in rep.rho_table.windows(2) {
            prop_assert!(w[0].epsilon <= w[1].epsilon);
            match (w[0].high, w[1].high) {
                (Some(a), Some(b)) => prop_assert!(b <= a),
                (None, _) => {}
                (Some(_), None) => prop_assert!(false, "rho grew to infinity as epsilon increased"),
            }
        }
    }

    #[test]
    fn weight_scaling_is_invisible(v in entries(), p in weights(), lambda in 1e-3..1e3f64) {
        let d = line();
        let k = kernel(&v);
        let scaled: Vec<f64> = p.iter().map(|x| x * lambda).collect();
        let (r0, c0) = schur_margins(&k, &d.weights, &p).unwrap();
        let (r1, c1) = schur_margins(&k, &d.weights, &scaled).unwrap();
        prop_assert!(rel(r0, r1) <= 1e-12 && rel(c0, c1) <= 1e-12);
        let radii = default_radii(&d);
        let t0 = tail_profile(&k, &d, &p, &radii).unwrap();
        let t1 = tail_profile(&k, &d, &scaled, &radii).unwrap();
        for (a, b) in t0.iter().zip(&t1) {
            if let (Some(x), Some(y)) = (a.worst(), b.worst()) {
                prop_assert!(rel(x, y) <= 1e-12 || x.max(y) <= 1e-300);
            }
        }
    }

    #[test]
    fn product_margins_are_submultiplicative(a in entries(), b in entries(), p in weights()) {
        let d = line();
        let (k1, k2) = (kernel(&a), kernel(&b));
        let prod = compose_kernels(&k1, &k2, &d.weights).unwrap();
        let (r1, c1) = schur_margins(&k1, &d.weights, &p).unwrap();
        let (r2, c2) = schur_margins(&k2, &d.weights, &p).unwrap();
        let (r, c) = schur_margins(&prod, &d.weights, &p).unwrap();
        prop_assert!(r <= r1 * r2 * (1.0 + 1e-10));
        prop_assert!(c <= c1 * c2 * (1.0 + 1e-10));
    }
}

#[test]
fn rho_brackets_the_first_admissible_radius() {
    let d = line();
    let k = KernelMatrix::from_fn(N, "exp", |x, y| (-(d.dist(x, y))).exp());
    let rep = localization_report(&k, &d, &Weight::Constant, &default_radii(&d), &[0.05]).unwrap();
    let r = rep.rho(0.05).unwrap();
    let high = r.high.unwrap();
    let at = |rad: f64| rep.tail_profile.iter().find(|e| e.radius == rad).and_then(|e| e.worst()).unwrap();
    assert!(at(high) <= 0.05);
    if r.low < high {
        assert!(at(r.low) > 0.05);
    }
    assert!(r.admits(high + 0.1) && !r.admits(high));
    assert!(rho(&rep.tail_profile, 0.0).is_err());
    // Up to R = 1 the exponential tail stays positive, so a tiny ε is never reached.
    let short = tail_profile(&k, &d, &[1.0; N], &[0.0, 0.5, 1.0]).unwrap();
    let miss = rho(&short, 1e-30).unwrap();
    assert_eq!((miss.low, miss.high), (1.0, None));
}

#[test]
fn constant_kernel_is_not_localized() {
    let d = sample_grid(&MetricMeasureSpace::euclidean(), 0.5, 3.0).unwrap();
    let k = KernelMatrix::from_fn(d.len(), "constant-one", |_, _| 1.0);
    let rep = localization_report(&k, &d, &Weight::Constant, &default_radii(&d), &[0.1]).unwrap();
    let v = check_weak_localization(&rep, DEFAULT_MARGIN_CAP, DEFAULT_TAIL_FLOOR);
    assert!(!v.localized);
    assert!(!v.reasons.is_empty());
}

#[test]
fn margins_recompute_from_definition() {
    let d = line();
    let p: Vec<f64> = (0..N).map(|i| 1.0 + i as f64).collect();
    let k = KernelMatrix::from_fn(N, "exp", |x, y| (-(d.dist(x, y)) * (1.0 + x as f64 * 0.1)).exp());
    let (row, col) = schur_margins(&k, &d.weights, &p).unwrap();
    let mut want_row: f64 = 0.0;
    let mut want_col: f64 = 0.0;
    for x in 0..N {
        let mut r = 0.0;
        let mut c = 0.0;
        for y in 0..N {
            r += d.weights[y] * k.values[[x, y]] * p[y];
            c += d.weights[y] * k.values[[y, x]] * p[y];
        }
        want_row = want_row.max(r / p[x]);
        want_col = want_col.max(c / p[x]);
    }
    assert!(rel(row, want_row) <= 1e-14 && rel(col, want_col) <= 1e-14);
}

#[test]
fn tails_skip_nodes_near_the_boundary() {
    let d = line();
    let k = KernelMatrix::from_fn(N, "one", |_, _| 1.0);
    let t = tail_profile(&k, &d, &[1.0; N], &[0.0, 1.0, 2.0, 3.0]).unwrap();
    // At R = 3 only the centre is interior; everything else is excluded from the sup.
    assert_eq!(t[3].interior_fraction, 1.0 / N as f64);
    assert!(t[0].interior_fraction == 1.0);
    assert!(tail_profile(&k, &d, &[1.0; N], &[1.0, 0.5]).is_err());
}

#[test]
fn weights_are_validated() {
    let d = line();
    assert!(Weight::PowerAffine(0.1).values(&d).is_err());
    assert!(Weight::custom("zero", |_| 0.0).values(&d).is_err());
    assert!(matches!(Weight::custom("nan", |_| f64::NAN).values(&d), Err(Error::InvalidParameter(_))));
    assert!(Weight::Constant.values(&d).unwrap().iter().all(|&v| v == 1.0));
}

#[test]
fn pointwise_sweep_flags_only_real_violations() {
    let s = MetricMeasureSpace::euclidean();
    let pts: Vec<Point> = (0..20).map(|i| Point::euclidean(i as f64 * 0.3, 0.0)).collect();
    // Toy family with |⟨f_x, f_y⟩| = 2 e^{−d}: satisfies C = 2, M = 0.9 and breaks C = 1.
    let samples = || {
        pts.iter().flat_map(|p| pts.iter().map(move |q| (*p, *q))).map(|(p, q)| {
            let d = s.dist(&p, &q);
            (p, q, d, 2.0 * (-d).exp())
        })
    };
    let ok = pointwise_sweep(samples(), 0.9, 2.0);
    assert!(!ok.violated());
    assert!(ok.max_violation <= 0.0);
    let bad = pointwise_sweep(samples(), 1.0, 1.0);
    assert!(bad.violated());
    assert_eq!(bad.pairs_checked, 400);
    // A kernel that vanishes is never flagged.
    let zero = pointwise_sweep(samples().map(|(p, q, d, _)| (p, q, d, 0.0)), 5.0, 1e-3);
    assert!(!zero.violated());
}

//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wloc::disc::toeplitz_matrix;
use wloc::experiments::{run_all, run_experiment, suite, ExperimentConfig, ExperimentKind, ExperimentReport, SymbolSpec};
use wloc::frames::{
    bergman_degree_for, bergman_disc_frame, frame_bounds_on, gabor_gaussian_frame, interior_test_subspace, BERGMAN_TOLERANCE,
};
use wloc::geometry::{sample_grid, MetricMeasureSpace, Point, SampledDomain};
use wloc::localization::{
    check_weak_localization, compose_kernels, default_radii, localization_report, schur_margins, KernelMatrix, Weight,
    DEFAULT_MARGIN_CAP, DEFAULT_TAIL_FLOOR,
};
use wloc::operators::{compose, frame_kernel, multiplier, Compactness, FrameContext, Symbol};
use wloc::C64;

// Criterion 1
const PARSEVAL_STEP: f64 = 0.25;
const PARSEVAL_RADIUS: f64 = 6.0;
const PARSEVAL_TEST_VECTORS: usize = 8;
const PARSEVAL_BAND: (f64, f64) = (0.95, 1.05);
// Criterion 2
const KERNEL_PAIRS: usize = 100;
const GABOR_KERNEL_TOL: f64 = 1e-8;
const BERGMAN_KERNEL_TOL: f64 = 1e-12;
// Criterion 3
const LINE_STEP: f64 = 0.02;
const LINE_HALF_LENGTH: f64 = 12.0;
const MARGIN_REL_TOL: f64 = 0.02;
const TAIL_REL_TOL: f64 = 0.05;
const RHO_EPSILON: f64 = 0.1;
// Criteria 4 and 5
const BOUND_TOL: f64 = 1e-8;
const NONVACUOUS_RATIO: f64 = 25.0;
const SLACK_CAP: f64 = 0.05;
const REFINED_STEP: f64 = 0.2;
// Criterion 6
const SUITE_SIZE: usize = 12;
// Criterion 7
const PRODUCT_TOL: f64 = 1e-10;
// Criterion 8
const DIAGONAL_DEGREE: usize = 40;
const DIAGONAL_TOL: f64 = 1e-10;
const HANKEL_TOL: f64 = 1e-6;
// Criterion 9
const POINTWISE_M_FLOOR: f64 = 0.5;
const POINTWISE_C_CAP: f64 = 1e3;
const AFFINE_DELTA: f64 = 0.1;
const STABILITY_TOL: f64 = 0.1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn parseval_fidelity() -> Outcome {
    let bounds = |h: f64| {
        let f = gabor_gaussian_frame(sample_grid(&MetricMeasureSpace::euclidean(), h, PARSEVAL_RADIUS).unwrap()).unwrap();
        frame_bounds_on(&f, &interior_test_subspace(&f, PARSEVAL_TEST_VECTORS, 0.0).unwrap()).unwrap()
    };
    let coarse = bounds(PARSEVAL_STEP);
    let fine = bounds(PARSEVAL_STEP / 2.0);
    let inside = coarse.lower >= PARSEVAL_BAND.0 && coarse.upper <= PARSEVAL_BAND.1;
    let tighter = (1.0 - fine.lower).abs() <= (1.0 - coarse.lower).abs() && (fine.upper - 1.0).abs() <= (coarse.upper - 1.0).abs();
    outcome(
        inside && tighter,
        format!(
            "h={PARSEVAL_STEP}: [{:.6}, {:.6}]; h={}: [{:.6}, {:.6}]",
            coarse.lower,
            coarse.upper,
            PARSEVAL_STEP / 2.0,
            fine.lower,
            fine.upper
        ),
    )
}

/// `∫ g_p(t) conj(g_q(t)) dt` by the trapezoid rule, `g_(x,ξ)(t) = π^{-1/4} e^{−(t−x)²/2} e^{2πiξt}`.
fn gabor_quadrature(p: &Point, q: &Point) -> C64 {
    let (lo, hi) = (p.x().min(q.x()) - 14.0, p.x().max(q.x()) + 14.0);
    let n = 40_000;
    let dt = (hi - lo) / n as f64;
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..=n {
        let t = lo + k as f64 * dt;
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        let env = (-(t - p.x()).powi(2) / 2.0 - (t - q.x()).powi(2) / 2.0).exp() / PI.sqrt();
        acc += C64::from_polar(w * env, 2.0 * PI * (p.y() - q.y()) * t);
    }
    acc * dt
}

fn closed_form_kernels() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let gabor = gabor_gaussian_frame(sample_grid(&MetricMeasureSpace::euclidean(), 0.5, 3.0).unwrap()).unwrap();
    let mut gabor_err: f64 = 0.0;
    for _ in 0..KERNEL_PAIRS {
        let mut pt = || Point::euclidean(rng.gen_range(-4.0..4.0), rng.gen_range(-1.5..1.5));
        let (p, q) = (pt(), pt());
        gabor_err = gabor_err.max((gabor.pair_inner(&p, &q).norm() - gabor_quadrature(&p, &q).norm()).abs());
    }
    let bergman = bergman_disc_frame(sample_grid(&MetricMeasureSpace::disc(), 0.5, 1.0).unwrap(), bergman_degree_for(1.0, BERGMAN_TOLERANCE)).unwrap();
    let origin = Point::disc(0.0, 0.0);
    let mut bergman_err: f64 = 0.0;
    for _ in 0..KERNEL_PAIRS {
        let (r, th) = (rng.gen_range(0.0..0.999f64), rng.gen_range(0.0..2.0 * PI));
        let w = Point::disc(r * th.cos(), r * th.sin());
        bergman_err = bergman_err.max((bergman.pair_inner(&origin, &w).norm() - (1.0 - r * r)).abs());
    }
    outcome(
        gabor_err <= GABOR_KERNEL_TOL && bergman_err <= BERGMAN_KERNEL_TOL,
        format!("gabor max err {gabor_err:.2e}; bergman max err {bergman_err:.2e}"),
    )
}

/// Smallest `R` with `2√π erfc(R/2) ≤ ε`.
fn gaussian_rho(eps: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 20.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 2.0 * PI.sqrt() * libm::erfc(mid / 2.0) <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn schur_calibration() -> Outcome {
    let d = SampledDomain::line(LINE_STEP, LINE_HALF_LENGTH).unwrap();
    let k = KernelMatrix::from_fn(d.len(), "gaussian", |x, y| (-d.dist(x, y).powi(2) / 4.0).exp());
    let rep = localization_report(&k, &d, &Weight::Constant, &default_radii(&d), &[RHO_EPSILON]).unwrap();
    let margin_oracle = 2.0 * PI.sqrt();
    let tail_oracle = margin_oracle * libm::erfc(1.0);
    let tail2 = rep.tail_profile.iter().find(|e| (e.radius - 2.0).abs() < 1e-9).and_then(|e| e.worst()).unwrap();
    let rho = rep.rho(RHO_EPSILON).unwrap().high.unwrap();
    let rho_oracle = gaussian_rho(RHO_EPSILON);
    let margin_err = (rep.schur_row_margin - margin_oracle).abs().max((rep.schur_col_margin - margin_oracle).abs()) / margin_oracle;
    let tail_err = (tail2 - tail_oracle).abs() / tail_oracle;
    outcome(
        margin_err <= MARGIN_REL_TOL && tail_err <= TAIL_REL_TOL && (rho - rho_oracle).abs() <= LINE_STEP,
        format!(
            "margin rel err {margin_err:.2e}; tail(2) {tail2:.5} vs {tail_oracle:.5}; rho(0.1) {rho:.3} vs {rho_oracle:.4}"
        ),
    )
}

fn norm_bound_validity(reports: &[ExperimentReport]) -> Outcome {
    let mut violations = 0;
    let mut checked = 0;
    let mut best = f64::INFINITY;
    for r in reports {
        for b in r.bounds.iter().filter(|b| b.rho_high.is_some_and(|h| b.r > h)) {
            checked += 1;
            if b.bound < b.norm - BOUND_TOL {
                violations += 1;
            }
            best = best.min(b.bound / b.norm);
        }
    }
    outcome(
        reports.len() >= SUITE_SIZE && checked > 0 && violations == 0 && best <= NONVACUOUS_RATIO,
        format!("{} operators, {checked} admissible rows, {violations} violations, best bound/norm {best:.2}", reports.len()),
    )
}

/// `max (‖T_rec − A‖/‖T‖ − ε)` over admissible rows, unclamped.
fn signed_excess(r: &ExperimentReport) -> Option<f64> {
    r.bounds
        .iter()
        .filter(|b| b.admissible)
        .map(|b| r.approximation.iter().find(|a| a.r == b.r).unwrap().relative_error - b.epsilon)
        .reduce(f64::max)
}

fn approximation(reports: &[ExperimentReport]) -> Outcome {
    let slack = reports.iter().filter_map(|r| r.approximation_slack).fold(0.0, f64::max);
    let monotone = reports.iter().all(|r| {
        let mut rows: Vec<_> = r.approximation.iter().map(|a| (a.r, a.relative_error)).collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        rows.windows(2).all(|w| w[1].1 <= w[0].1)
    });
    let mut refined = true;
    let mut detail = Vec::new();
    for symbol in [SymbolSpec::Indicator(1.0), SymbolSpec::Constant(1.0)] {
        let base = ExperimentConfig { symbol: symbol.clone(), ..ExperimentConfig::default_for(ExperimentKind::AntiWick) };
        let coarse = signed_excess(&run_experiment(&base).unwrap());
        let fine = signed_excess(&run_experiment(&ExperimentConfig { resolution: REFINED_STEP, ..base.clone() }).unwrap());
        let (Some(c), Some(f)) = (coarse, fine) else {
            refined = false;
            continue;
        };
        refined &= f <= c;
        detail.push(format!("{symbol}: {c:.4} -> {f:.4}"));
    }
    outcome(
        slack <= SLACK_CAP && monotone && refined,
        format!("max slack {slack:.3e}; tables nonincreasing {monotone}; refinement {}", detail.join(", ")),
    )
}

fn concordance(reports: &[ExperimentReport]) -> Outcome {
    let agree = reports.iter().filter(|r| r.compactness.concordant == Some(true)).count();
    let constants_ok = reports
        .iter()
        .filter(|r| r.config.symbol == SymbolSpec::Constant(1.0))
        .all(|r| r.verdict() == Some(Compactness::NotCompact));
    let supported_ok = reports
        .iter()
        .filter(|r| r.operator.compactly_supported_symbol)
        .all(|r| r.verdict() == Some(Compactness::Compact));
    outcome(
        reports.len() == SUITE_SIZE && agree == SUITE_SIZE && constants_ok && supported_ok,
        format!("{agree}/{} concordant; u=1 not compact {constants_ok}; compact supports compact {supported_ok}", reports.len()),
    )
}

fn algebra_closure() -> Outcome {
    let ctx = FrameContext::natural(gabor_gaussian_frame(sample_grid(&MetricMeasureSpace::euclidean(), 0.25, 5.0).unwrap()).unwrap())
        .unwrap();
    let d = ctx.domain();
    let p = vec![1.0; d.len()];
    let a = multiplier(&ctx, &Symbol::indicator_box(1.0)).unwrap();
    let b = multiplier(&ctx, &Symbol::oscillatory(2.0)).unwrap();
    let ab = compose(&a, &b).unwrap();
    let (ka, kb, kab) = (frame_kernel(&a).unwrap(), frame_kernel(&b).unwrap(), frame_kernel(&ab).unwrap());
    let (ra, ca) = schur_margins(&ka, &d.weights, &p).unwrap();
    let (rb, cb) = schur_margins(&kb, &d.weights, &p).unwrap();
    let (rab, cab) = schur_margins(&kab, &d.weights, &p).unwrap();
    let (rc, cc) = schur_margins(&compose_kernels(&ka, &kb, &d.weights).unwrap(), &d.weights, &p).unwrap();
    let within = |m: f64, cap: f64| m <= cap + PRODUCT_TOL;
    let margins_ok = within(rab, ra * rb) && within(cab, ca * cb) && within(rc, ra * rb) && within(cc, ca * cb);
    let rep = localization_report(&kab, d, &Weight::Constant, &default_radii(d), &[0.1]).unwrap();
    let localized = check_weak_localization(&rep, DEFAULT_MARGIN_CAP, DEFAULT_TAIL_FLOOR).localized;
    outcome(
        margins_ok && localized,
        format!(
            "product {rab:.4}/{cab:.4}, composed kernel {rc:.4}/{cc:.4} vs factors {:.4}/{:.4}; product localized {localized}",
            ra * rb,
            ca * cb
        ),
    )
}

fn bergman_formulas(reports: &[ExperimentReport]) -> Outcome {
    let t = toeplitz_matrix(&Symbol::radial_power(2), DIAGONAL_DEGREE).unwrap();
    let diag_err = (0..=DIAGONAL_DEGREE)
        .map(|n| (t[[n, n]] - C64::new((n as f64 + 1.0) / (n as f64 + 2.0), 0.0)).norm())
        .fold(0.0, f64::max);
    let hankel: Vec<f64> = reports.iter().filter_map(|r| r.disc.as_ref()).map(|x| x.hankel.residual).collect();
    let worst = hankel.iter().copied().fold(0.0, f64::max);
    outcome(
        diag_err <= DIAGONAL_TOL && !hankel.is_empty() && worst <= HANKEL_TOL,
        format!("diagonal max err {diag_err:.2e} (n <= {DIAGONAL_DEGREE}); Hankel residual max {worst:.2e} over {} runs", hankel.len()),
    )
}

fn haar_dichotomy(reports: &[ExperimentReport]) -> Outcome {
    let mut detail = Vec::new();
    let mut pass = true;
    let mut seen = 0;
    for r in reports.iter().filter(|r| r.config.experiment == ExperimentKind::CalderonToeplitz) {
        seen += 1;
        let x = r.affine.as_ref().unwrap();
        let tested: Vec<_> = x.pointwise.iter().filter(|p| p.m > POINTWISE_M_FLOOR && p.c <= POINTWISE_C_CAP).collect();
        let all_violated = !tested.is_empty() && tested.iter().all(|p| p.violated());
        let s = &x.stability;
        let cap = r.config.thresholds.margin_cap;
        let below = s.row_margins.iter().chain(&s.col_margins).all(|&m| m < cap);
        let weight_ok = r.config.weight == wloc::experiments::WeightSpec::Affine(AFFINE_DELTA);
        pass &= all_violated && below && s.relative_change <= STABILITY_TOL && weight_ok;
        detail.push(format!(
            "{}: {}/{} pointwise violated, margins {:.4}->{:.4} (change {:.3})",
            r.operator.label,
            tested.iter().filter(|p| p.violated()).count(),
            tested.len(),
            s.row_margins[0],
            s.row_margins[1],
            s.relative_change
        ));
    }
    outcome(pass && seen > 0, detail.join("; "))
}

fn cli_determinism() -> Outcome {
    const FILES: [&str; 5] = ["report.json", "berezin_profile.csv", "singular_values.csv", "bounds.csv", "rho_table.csv"];
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report");
    // Identical command lines, output directory included; files are captured after each run.
    let run = || {
        let o = Command::new(env!("CARGO_BIN_EXE_wloc"))
            .args(["run", "anti-wick", "--symbol", "indicator:1", "--resolution", "0.5", "--truncation", "4", "--seed", "7"])
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let files: Vec<Vec<u8>> = FILES.iter().map(|f| read(&out.join(f))).collect();
        std::fs::remove_dir_all(&out).unwrap();
        files
    };
    let (a, b) = (run(), run());
    let same = a.iter().all(|f| !f.is_empty()) && a == b;
    outcome(same, format!("{} report files compared", FILES.len()))
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap_or_default()
}

fn main() {
    let start = Instant::now();
    let reports = run_all(&suite()).expect("operator suite failed");
    let suite_time = start.elapsed();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("parseval fidelity", Box::new(parseval_fidelity)),
        ("closed-form kernels", Box::new(closed_form_kernels)),
        ("schur and tail calibration", Box::new(schur_calibration)),
        ("norm bound validity", Box::new(|| norm_bound_validity(&reports))),
        ("finite-rank approximation", Box::new(|| approximation(&reports))),
        ("compactness concordance", Box::new(|| concordance(&reports))),
        ("algebra closure", Box::new(algebra_closure)),
        ("bergman formulas", Box::new(|| bergman_formulas(&reports))),
        ("haar dichotomy", Box::new(|| haar_dichotomy(&reports))),
        ("cli determinism", Box::new(cli_determinism)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("{} {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{} of {} criteria passed (suite {:.0?}, total {:.0?})", criteria.len() - failed, criteria.len(), suite_time, start.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}

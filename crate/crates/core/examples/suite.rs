//! Runs the operator suite and prints one summary line per operator.

use std::time::Instant;

use wloc::experiments::{run_experiment_cached, suite, FrameCache};

fn main() -> wloc::Result<()> {
    let only = std::env::args().nth(1);
    let mut cache = FrameCache::default();
    for config in suite().into_iter().filter(|c| only.as_deref().map_or(true, |k| c.experiment.name() == k)) {
        let start = Instant::now();
        let report = run_experiment_cached(&config, &mut cache)?;
        println!("[{:6.1}s] {}", start.elapsed().as_secs_f64(), report.summary());
        for row in &report.approximation {
            println!("          r={} cells={} N={} K={:.2} err={:.4} err_t={:.4}", row.r, row.cells, row.overlap_n, row.diameter_k, row.relative_error, row.relative_error_to_t);
        }
        for b in &report.bounds {
            println!("          r={} eps={} bound={:.4} ess={:.4} rho=({}, {:?}) adm={}", b.r, b.epsilon, b.bound, b.essential_bound, b.rho_low, b.rho_high, b.admissible);
        }
        let fl = &report.frame_localization;
        let ol = &report.operator_localization;
        println!("          frame margins {:.4}/{:.4}; op margins {:.4}/{:.4}; last tail {:?}; verdict {:?}", fl.schur_row_margin, fl.schur_col_margin, ol.schur_row_margin, ol.schur_col_margin, ol.last_tail().and_then(|e| e.worst()), report.localization_verdict.reasons);
        println!("          nodes {} dim {} consistency {:.2e}", report.frame.nodes, report.frame.realization_dim, report.frame.consistency_error);
        if let Some(a) = &report.affine {
            println!("          pointwise all violated {}; stability {:?}", a.pointwise_fails_everywhere, a.stability);
        }
        if let Some(d) = &report.disc {
            println!("          cap {} offdiag {:.2e} hankel {:?}", d.degree_cap, d.off_diagonal_ratio, d.hankel);
        }
    }
    Ok(())
}

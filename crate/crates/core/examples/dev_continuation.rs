//! Dev: branch tracing, fold location, and solution counting.

use alpha_riccati::continuation::{atlas, detect_folds, solutions_at, ContinuationControls};
use alpha_riccati::discretization::truncated_grid;
use alpha_riccati::solver::Classification;
use std::time::Instant;

fn main() {
    let grid = truncated_grid(700, 6.0).unwrap();
    let controls = ContinuationControls::default();

    let t0 = Instant::now();
    let atlas_result = atlas(&grid, &[1, 2], 0.01, (1.35, 4.2), &controls).unwrap();
    println!(
        "atlas with n = {{1, 2}} built in {:.1} s: {} branches, {} seed failures",
        t0.elapsed().as_secs_f64(),
        atlas_result.branches.len(),
        atlas_result.seed_failures.len()
    );
    for f in &atlas_result.seed_failures {
        println!("  seed failure n={} alpha={:.4}: {}", f.n, f.alpha, f.reason);
    }
    for (i, b) in atlas_result.branches.iter().enumerate() {
        let (lo, hi) = b.alpha_range();
        let max_norm_sq = b.points.iter().fold(0.0f64, |a, p| a.max(p.norm_sq));
        println!(
            "branch {i}: seed {:?}, {} points, alpha range [{lo:.4}, {hi:.4}], max |v|^2 = {max_norm_sq:.4}, folds {:?}, status {:?}",
            b.seed,
            b.points.len(),
            b.folds,
            b.status
        );
        let est = detect_folds(b);
        println!("   data-only fold estimates: {est:?}");
    }

    for alpha in [4.0f64, 1.46, 1.43, 2.0] {
        let sols = solutions_at(&atlas_result, &grid, alpha, &controls);
        println!("\nsolutions at alpha = {alpha}: {}", sols.len());
        for s in &sols {
            let norm_sq = grid
                .quadrature_norm(&s.values)
                .map(|n| n * n)
                .unwrap_or(f64::NAN);
            println!(
                "   class {:?}, |v|^2 = {norm_sq:.5}, residual {:.2e}",
                s.classification, s.residual_norm
            );
        }
        let nonconstant = sols
            .iter()
            .filter(|s| s.classification != Classification::Trivial)
            .count();
        println!("   nonconstant: {nonconstant}");
    }
}

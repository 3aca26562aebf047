//! Dev: criterion-8 style atlas on the finer grid.

use alpha_riccati::continuation::{atlas, solutions_at, ContinuationControls};
use alpha_riccati::discretization::truncated_grid;
use alpha_riccati::solver::Classification;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let grid = truncated_grid(2500, 9.0).unwrap();
    println!("grid built in {:.1} s (dof {})", t0.elapsed().as_secs_f64(), grid.dof());
    let controls = ContinuationControls {
        moment_tol: 1e-4,
        ..ContinuationControls::default()
    };
    let t1 = Instant::now();
    let atlas_result = atlas(&grid, &[1, 2], 0.01, (1.35, 4.05), &controls).unwrap();
    println!(
        "atlas in {:.1} s: {} branches, {} seed failures",
        t1.elapsed().as_secs_f64(),
        atlas_result.branches.len(),
        atlas_result.seed_failures.len()
    );
    for b in &atlas_result.branches {
        let (lo, hi) = b.alpha_range();
        let max_gap = b.points.iter().fold(0.0f64, |a, p| a.max(p.moment_gap));
        println!(
            "  seed {:?}: {} pts, alpha [{lo:.4}, {hi:.4}], folds {:?}, status {:?}, max gap {max_gap:.2e}",
            b.seed, b.points.len(), b.folds, b.status
        );
    }
    for alpha in [4.0f64, 1.46, 1.43] {
        let sols = solutions_at(&atlas_result, &grid, alpha, &controls);
        let nc = sols.iter().filter(|s| s.classification != Classification::Trivial).count();
        println!("alpha = {alpha}: {} solutions, {nc} nonconstant", sols.len());
        for s in &sols {
            let n2 = grid.quadrature_norm(&s.values).map(|n| n * n).unwrap_or(f64::NAN);
            println!("   {:?} |v|^2 = {n2:.5}", s.classification);
        }
    }
    println!("total {:.1} s", t0.elapsed().as_secs_f64());
}

//! Dev: moment-identity gap along the branch on candidate atlas grids.

use alpha_riccati::discretization::{truncated_grid, OperatorSet, SolveMode};
use alpha_riccati::moments::PerturbationModel;
use alpha_riccati::solver::{moment_identity_gap, newton_solve, NewtonSettings};
use nalgebra::DVector;
use std::time::Instant;

fn main() {
    for (n_size, m_mult) in [(3000usize, 9.5f64), (3500, 10.0)] {
        let t0 = Instant::now();
        let grid = truncated_grid(n_size, m_mult).unwrap();
        println!(
            "grid N={n_size} M={m_mult}: dof={} built in {:.1} s, max node {:.1}",
            grid.dof(),
            t0.elapsed().as_secs_f64(),
            grid.max_node()
        );
        let model = PerturbationModel::new(1).unwrap();
        let newton = NewtonSettings::default();
        let guess = model.guess(0.05, grid.interior_nodes()).unwrap();
        let mut state = DVector::from_vec(guess);
        let mut alpha = 2.05f64;
        let t1 = Instant::now();
        let mut worst_gap = 0.0f64;
        while alpha <= 4.21 {
            let ops = OperatorSet::new(&grid, alpha, SolveMode::FamilyAVForm).unwrap();
            let res = newton_solve(&ops, &state, &newton).unwrap();
            if !res.converged {
                println!("  newton failed at alpha={alpha}");
                break;
            }
            let gap = moment_identity_gap(&grid, alpha, &res.values).unwrap();
            worst_gap = worst_gap.max(gap);
            if [2.2f64, 3.0, 3.6, 4.0, 4.2]
                .iter()
                .any(|a| (alpha - a).abs() < 0.026)
            {
                println!("  alpha={alpha:.2}: gap {gap:.3e}");
            }
            state = res.values_vector();
            alpha += 0.05;
        }
        println!(
            "  worst gap on walk: {worst_gap:.3e}; walk took {:.1} s",
            t1.elapsed().as_secs_f64()
        );
    }
}

//! Dev: accuracy of the alpha = 4 solution against a finer grid.

use alpha_riccati::discretization::{truncated_grid, OperatorSet, SolveMode};
use alpha_riccati::moments::PerturbationModel;
use alpha_riccati::solver::{moment_identity_gap, newton_solve, NewtonSettings};
use nalgebra::DVector;

fn solve_walk(grid: &alpha_riccati::discretization::Grid, target: f64) -> Vec<f64> {
    let model = PerturbationModel::new(1).unwrap();
    let newton = NewtonSettings::default();
    let guess = model.guess(0.05, grid.interior_nodes()).unwrap();
    let mut state = DVector::from_vec(guess);
    let mut alpha = 2.05f64;
    loop {
        let a = alpha.min(target);
        let ops = OperatorSet::new(grid, a, SolveMode::FamilyAVForm).unwrap();
        let res = newton_solve(&ops, &state, &newton).unwrap();
        assert!(res.converged, "alpha {a}");
        state = res.values_vector();
        if (a - target).abs() < 1e-14 {
            return res.values;
        }
        alpha += 0.05;
    }
}

fn main() {
    let coarse = truncated_grid(700, 6.0).unwrap();
    let fine = truncated_grid(1400, 8.0).unwrap();
    println!("fine grid dof = {}", fine.dof());
    let v_coarse = solve_walk(&coarse, 4.0);
    let v_fine = solve_walk(&fine, 4.0);

    // compare on the coarse nodes via interpolation of the fine solution
    let mut worst = (0.0f64, 0.0f64);
    for (i, &t) in coarse.interior_nodes().iter().enumerate() {
        let vf = fine.interpolate(&v_fine, t).unwrap();
        let e = (v_coarse[i] - vf).abs();
        if e > worst.0 {
            worst = (e, t);
        }
    }
    println!("max |coarse - fine| = {:.3e} at t = {:.3}", worst.0, worst.1);

    let gap_coarse = moment_identity_gap(&coarse, 4.0, &v_coarse).unwrap();
    let gap_fine = moment_identity_gap(&fine, 4.0, &v_fine).unwrap();
    println!("moment gap: coarse {gap_coarse:.3e}, fine {gap_fine:.3e}");

    // interior-interpolant value at t = 0 (should be ~0 for resolved states)
    let v0_coarse = coarse.interpolate(&v_coarse, 0.0).unwrap();
    let v0_fine = fine.interpolate(&v_fine, 0.0).unwrap();
    println!("v interpolated at 0: coarse {v0_coarse:.3e}, fine {v0_fine:.3e}");

    // norms
    let n_c = coarse.quadrature_norm(&v_coarse).unwrap().powi(2);
    let n_f = fine.quadrature_norm(&v_fine).unwrap().powi(2);
    println!("|v|^2: coarse {n_c:.6}, fine {n_f:.6}");
}

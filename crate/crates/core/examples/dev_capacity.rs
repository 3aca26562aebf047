//! Dev: can the default grid even represent the alpha = 4 solution?

use alpha_riccati::discretization::{truncated_grid, OperatorSet, SolveMode};
use alpha_riccati::moments::PerturbationModel;
use alpha_riccati::solver::{newton_solve, NewtonSettings};
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
    let v_fine = solve_walk(&fine, 4.0);

    // sample the fine solution on the coarse nodes, then reconstruct at fine
    // nodes from the coarse basis: representation error of the coarse grid
    let fine_on_coarse: Vec<f64> = coarse
        .interior_nodes()
        .iter()
        .map(|&t| fine.interpolate(&v_fine, t).unwrap())
        .collect();
    let mut worst = (0.0f64, 0.0f64);
    for (i, &t) in fine.interior_nodes().iter().enumerate() {
        if t > coarse.max_node() {
            break;
        }
        let rec = coarse.interpolate(&fine_on_coarse, t).unwrap();
        let e = (rec - v_fine[i]).abs();
        if e > worst.0 {
            worst = (e, t);
        }
    }
    println!(
        "coarse-basis representation error of the fine solution: {:.3e} at t = {:.4}",
        worst.0, worst.1
    );

    // residual of the coarse operator applied to the fine solution's samples
    let ops = OperatorSet::new(&coarse, 4.0, SolveMode::FamilyAVForm).unwrap();
    let r = alpha_riccati::solver::residual(&ops, &DVector::from_vec(fine_on_coarse.clone())).unwrap();
    let rn = r.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    println!("coarse residual at the fine solution's samples: {rn:.3e}");
    // where is the residual big?
    let mut worst_r = (0.0f64, 0.0f64);
    for (i, &t) in coarse.interior_nodes().iter().enumerate() {
        if r[i].abs() > worst_r.0 {
            worst_r = (r[i].abs(), t);
        }
    }
    println!("worst residual row at t = {:.4}", worst_r.1);
}

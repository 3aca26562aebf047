//! Dev: why does the forward n=1 trace stall near alpha ~ 2.1?

use alpha_riccati::discretization::{truncated_grid, OperatorSet, SolveMode};
use alpha_riccati::moments::PerturbationModel;
use alpha_riccati::solver::{
    moment_identity_gap, newton_solve, residual, NewtonSettings,
};
use nalgebra::DVector;

fn main() {
    let grid = truncated_grid(700, 6.0).unwrap();
    let model = PerturbationModel::new(1).unwrap();
    let newton = NewtonSettings::default();

    // walk to larger alpha with small increments, fixed-alpha Newton
    let guess = model.guess(0.05, grid.interior_nodes()).unwrap();
    let mut state = DVector::from_vec(guess);
    let mut alpha = 2.05;
    while alpha <= 4.21 {
        let ops = OperatorSet::new(&grid, alpha, SolveMode::FamilyAVForm).unwrap();
        let res = newton_solve(&ops, &state, &newton).unwrap();
        if !res.converged {
            println!("alpha = {alpha:.3}: newton failed ({:?})", res.failure);
            break;
        }
        let gap = moment_identity_gap(&grid, alpha, &res.values).unwrap();
        let norm_sq = grid.quadrature_norm(&res.values).unwrap().powi(2);
        let r = residual(&ops, &res.values_vector()).unwrap();
        let rnorm = r.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if (alpha * 20.0).round() as i64 % 4 == 0 {
            println!(
                "alpha = {alpha:.3}: |v|^2 = {norm_sq:.4}, class {:?}, residual {rnorm:.2e}, moment gap {gap:.3e}",
                res.classification
            );
        }
        state = res.values_vector();
        alpha += 0.05;
    }
}

//! Dev: decompose the moment-identity gap at a large-alpha solution.

use alpha_riccati::discretization::{truncated_grid, OperatorSet, SolveMode};
use alpha_riccati::moments::PerturbationModel;
use alpha_riccati::solver::{newton_solve, NewtonSettings};
use nalgebra::DVector;

fn main() {
    let grid = truncated_grid(700, 6.0).unwrap();
    let model = PerturbationModel::new(1).unwrap();
    let newton = NewtonSettings::default();
    let guess = model.guess(0.05, grid.interior_nodes()).unwrap();
    let mut state = DVector::from_vec(guess);
    let mut alpha = 2.05f64;
    while alpha < 3.999 {
        let ops = OperatorSet::new(&grid, alpha, SolveMode::FamilyAVForm).unwrap();
        let res = newton_solve(&ops, &state, &newton).unwrap();
        state = res.values_vector();
        alpha += 0.05;
    }
    let alpha = 4.0f64;
    let ops = OperatorSet::new(&grid, alpha, SolveMode::FamilyAVForm).unwrap();
    let res = newton_solve(&ops, &state, &newton).unwrap();
    assert!(res.converged);
    let v = res.values_vector();

    let q = |vals: &[f64]| grid.quadrature_integral(vals).unwrap();
    let vs: Vec<f64> = v.iter().copied().collect();
    let v2: Vec<f64> = v.iter().map(|x| x * x).collect();

    let dv = ops.differentiation() * &v;
    let pv = ops.resampling() * &v;
    let pv2 = ops.resampling() * DVector::from_vec(v2.clone());

    let q_dv = q(dv.as_slice());
    let q_v = q(&vs);
    let q_pv = q(pv.as_slice());
    let q_pv2 = q(pv2.as_slice());
    let q_v2 = q(&v2);

    println!("Q(Dv)          = {q_dv:.6e}   (should be ~0)");
    println!("Q(v)           = {q_v:.6e}");
    println!("Q(Pv)          = {q_pv:.6e}  vs Q(v)/alpha = {:.6e}  (diff {:.2e})", q_v / alpha, q_pv - q_v / alpha);
    println!("Q(Pv^2)        = {q_pv2:.6e} vs Q(v^2)/alpha = {:.6e} (diff {:.2e})", q_v2 / alpha, q_pv2 - q_v2 / alpha);
    println!("Q(v^2)         = {q_v2:.6e}");
    let gap = ((alpha - 2.0) * q_v - q_v2).abs() / (1.0 + q_v.abs());
    println!("normalized identity gap = {gap:.3e}");
    // residual-weighted sum should vanish: Q(Dv) + Q(v) - 2Q(Pv) - Q(Pv2)
    println!(
        "Q(residual pieces) = {:.3e}",
        q_dv + q_v - 2.0 * q_pv - q_pv2
    );
}

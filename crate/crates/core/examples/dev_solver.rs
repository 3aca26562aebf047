//! Dev experiment: end-to-end behavior of the linear and nonlinear solves.

use alpha_riccati::bigfloat::to_f64;
use alpha_riccati::discretization::{truncated_grid, OperatorSet, SolveMode};
use alpha_riccati::moments::PerturbationModel;
use alpha_riccati::qseries::{PrecisionConfig, SeriesSolution};
use alpha_riccati::solver::{
    characteristic_solve, classify, count_zeros, moment_identity_gap, newton_solve,
    solve_family_b, NewtonSettings,
};
use nalgebra::DVector;

fn series_on_grid(n: u32, grid: &alpha_riccati::discretization::Grid) -> (Vec<f64>, f64) {
    // normalized characteristic function samples, first extremum positive
    let s = SeriesSolution::characteristic(n, PrecisionConfig::for_characteristic_index(n)).unwrap();
    let raw: Vec<f64> = grid
        .interior_nodes()
        .iter()
        .map(|&t| to_f64(&s.evaluate(t).unwrap()))
        .collect();
    let norm = grid.quadrature_norm(&raw).unwrap();
    let sign = s.leading_sign().unwrap();
    (raw.iter().map(|v| v * sign / norm).collect(), norm)
}

fn main() {
    // --- characteristic solve accuracy vs series ---
    for n in [1u32, 3, 5] {
        let alpha = 2f64.powf(1.0 / n as f64);
        let grid = truncated_grid(700, 6.0).unwrap();
        let ops = OperatorSet::new(&grid, alpha, SolveMode::FamilyAVForm).unwrap();
        let null = characteristic_solve(&ops).unwrap();
        let (series_vals, _) = series_on_grid(n, &grid);
        let err = null
            .values
            .iter()
            .zip(&series_vals)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        println!(
            "n={n}: max grid deviation {err:.3e}, sigma_min {:.3e}, next {:.3e}, zeros {}",
            null.sigma_min,
            null.sigma_next,
            count_zeros(&grid, &null.values).unwrap()
        );
    }
    // zeros for all n
    for n in 1..=6u32 {
        let alpha = 2f64.powf(1.0 / n as f64);
        let grid = truncated_grid(700, 6.0).unwrap();
        let ops = OperatorSet::new(&grid, alpha, SolveMode::FamilyAVForm).unwrap();
        let null = characteristic_solve(&ops).unwrap();
        println!("n={n}: grid zero count = {}", count_zeros(&grid, &null.values).unwrap());
    }

    // --- N sweep at alpha = 2 (criterion 3 shape) ---
    println!("\nN sweep at alpha = 2, M = 6 (clamped):");
    for n_size in [25usize, 50, 100, 200, 400, 700] {
        let m_eff = 6.0f64.min((n_size as f64).sqrt());
        let grid = truncated_grid(n_size, m_eff).unwrap();
        let ops = OperatorSet::new(&grid, 2.0, SolveMode::FamilyAVForm).unwrap();
        let null = characteristic_solve(&ops).unwrap();
        let (series_vals, _) = series_on_grid(1, &grid);
        let err = null
            .values
            .iter()
            .zip(&series_vals)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        println!("  N={n_size:4} dof={:3}: max grid error {err:.3e}", grid.dof());
    }

    // --- Newton from perturbation guesses ---
    let grid = truncated_grid(700, 6.0).unwrap();
    for (n, eps, alpha) in [(1u32, 0.1, 2.1), (1, -0.1, 1.9), (2, 0.01, None.unwrap_or(2f64.sqrt() + 0.01))] {
        let model = PerturbationModel::new(n).unwrap();
        let guess = model.guess(eps, grid.interior_nodes()).unwrap();
        let ops = OperatorSet::new(&grid, alpha, SolveMode::FamilyAVForm).unwrap();
        let res = newton_solve(&ops, &DVector::from_vec(guess), &NewtonSettings::default()).unwrap();
        let gap = moment_identity_gap(&grid, alpha, &res.values).unwrap();
        println!(
            "newton n={n} eps={eps} alpha={alpha}: converged={} iters={} residual={:.2e} class={:?} moment gap={:.2e}",
            res.converged, res.iterations, res.residual_norm, res.classification, gap
        );
        // distance to guess should be O(eps^2)
        let guess2 = model.guess(eps, grid.interior_nodes()).unwrap();
        let dist = res
            .values
            .iter()
            .zip(&guess2)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        println!("   distance to guess {dist:.3e} (eps^2 = {:.1e})", eps * eps);
    }

    // O(eps^2) ratio as eps halves
    println!("\nguess-distance ratios, n=1:");
    let model = PerturbationModel::new(1).unwrap();
    for eps in [0.02, 0.01, 0.005] {
        let alpha = 2.0 + eps;
        let guess = model.guess(eps, grid.interior_nodes()).unwrap();
        let ops = OperatorSet::new(&grid, alpha, SolveMode::FamilyAVForm).unwrap();
        let res = newton_solve(&ops, &DVector::from_vec(guess.clone()), &NewtonSettings::default()).unwrap();
        let dist = res
            .values
            .iter()
            .zip(&guess)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        println!("  eps={eps}: iters={} dist/eps^2 = {:.4}", res.iterations, dist / (eps * eps));
    }

    // --- family B ---
    for alpha in [1.5f64, 3.0] {
        let res = solve_family_b(&grid, alpha, &NewtonSettings::default()).unwrap();
        println!(
            "family B alpha={alpha}: converged={} iters={} residual={:.2e} u(0)-1={:.2e}",
            res.converged,
            res.iterations,
            res.residual_norm,
            res.values[0] - 1.0
        );
        // off-grid residual of the continuous equation via interpolation
        let h = 1e-5;
        for t in [0.5f64, 1.0, 2.0] {
            let u = |x: f64| grid.interpolate_with_boundary(&res.values, x).unwrap();
            let du = (u(t + h) - u(t - h)) / (2.0 * h);
            let r = du + u(t) - u(alpha * t) * u(alpha * t);
            println!("   off-grid residual at t={t}: {r:.2e}");
        }
    }

    // classification of far solutions
    let ops4 = OperatorSet::new(&grid, 4.0, SolveMode::FamilyAVForm).unwrap();
    let model1 = PerturbationModel::new(1).unwrap();
    // seed by continuation-ish: start from guess at 2.1 then re-solve at 4? direct guess is far; try direct
    let guess = model1.guess(0.1, grid.interior_nodes()).unwrap();
    let res21 = newton_solve(
        &OperatorSet::new(&grid, 2.1, SolveMode::FamilyAVForm).unwrap(),
        &DVector::from_vec(guess),
        &NewtonSettings::default(),
    )
    .unwrap();
    // walk alpha toward 4 in steps, re-solving
    let mut state = DVector::from_vec(res21.values.clone());
    let mut last = None;
    for alpha in [2.3f64, 2.6, 3.0, 3.5, 4.0] {
        let ops = OperatorSet::new(&grid, alpha, SolveMode::FamilyAVForm).unwrap();
        let r = newton_solve(&ops, &state, &NewtonSettings::default()).unwrap();
        state = DVector::from_vec(r.values.clone());
        last = Some(r);
    }
    let r4 = last.unwrap();
    println!(
        "\nalpha=4 (walked): converged={} class={:?} norm_sq={:.4} gap={:.2e}",
        r4.converged,
        r4.classification,
        grid.quadrature_norm(&r4.values).unwrap().powi(2),
        moment_identity_gap(&grid, 4.0, &r4.values).unwrap()
    );
    let _ = classify(&grid, &r4.values);
    let _ = ops4;
}

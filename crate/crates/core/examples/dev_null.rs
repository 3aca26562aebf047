//! Dev: nullspace vector error structure and refinement options.

use alpha_riccati::bigfloat::to_f64;
use alpha_riccati::discretization::{truncated_grid, OperatorSet, SolveMode};
use alpha_riccati::qseries::{PrecisionConfig, SeriesSolution};
use alpha_riccati::solver::characteristic_solve;
use nalgebra::{DMatrix, DVector};

fn main() {
    let grid = truncated_grid(700, 6.0).unwrap();
    let ops = OperatorSet::new(&grid, 2.0, SolveMode::FamilyAVForm).unwrap();
    let null = characteristic_solve(&ops).unwrap();
    println!("sigma_min = {:.6e}, sigma_next = {:.6e}", null.sigma_min, null.sigma_next);

    let s = SeriesSolution::build_f64(2.0, PrecisionConfig::default()).unwrap();
    let raw: Vec<f64> = grid
        .interior_nodes()
        .iter()
        .map(|&t| to_f64(&s.evaluate(t).unwrap()))
        .collect();
    let norm = grid.quadrature_norm(&raw).unwrap();
    let series: Vec<f64> = raw.iter().map(|v| v / norm).collect();

    let mut worst = (0usize, 0.0f64);
    for i in 0..series.len() {
        let e = (null.values[i] - series[i]).abs();
        if e > worst.1 {
            worst = (i, e);
        }
    }
    println!(
        "max deviation {:.3e} at node {} (t = {:.4}); sample profile:",
        worst.1,
        worst.0,
        grid.interior_nodes()[worst.0]
    );
    for i in [0usize, 1, 2, 5, 10, 20, 40, 80, 120, 158] {
        println!(
            "  t = {:8.4}: dev {:.3e} (series {:.3e})",
            grid.interior_nodes()[i],
            (null.values[i] - series[i]).abs(),
            series[i]
        );
    }

    // inverse-iteration refinement in the scaled space
    let dim = ops.dim();
    let mut a = ops.differentiation() + DMatrix::identity(dim, dim) - 2.0 * ops.resampling();
    let nodes = grid.interior_nodes();
    for (j, &t) in nodes.iter().enumerate() {
        let sc = (-t).exp();
        for i in 0..dim {
            a[(i, j)] *= sc;
        }
    }
    for i in 0..dim {
        let row_max = (0..dim).fold(0.0f64, |acc, j| acc.max(a[(i, j)].abs()));
        if row_max > 0.0 {
            for j in 0..dim {
                a[(i, j)] /= row_max;
            }
        }
    }
    // start from the svd vector transformed back to w-space
    let mut w = DVector::from_iterator(
        dim,
        null.values.iter().zip(nodes).map(|(v, &t)| v * t.exp()),
    );
    w /= w.norm();
    let lu = a.clone().lu();
    for pass in 0..3 {
        if let Some(x) = lu.solve(&w) {
            w = &x / x.norm();
        }
        let v: Vec<f64> = w.iter().zip(nodes).map(|(wi, &t)| wi * (-t).exp()).collect();
        let qn = grid.quadrature_norm(&v).unwrap();
        let sgn = if v.iter().zip(&series).map(|(a, b)| a * b).sum::<f64>() * qn > 0.0 { 1.0 } else { -1.0 };
        let dev = v
            .iter()
            .zip(&series)
            .fold(0.0f64, |acc, (x, y)| acc.max((x * sgn / qn - y).abs()));
        println!("after inverse-iteration pass {pass}: max deviation {dev:.3e}");
    }
}

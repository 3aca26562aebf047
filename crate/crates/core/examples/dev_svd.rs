//! Dev: singular spectrum of the linearized operator.

use alpha_riccati::discretization::{truncated_grid, OperatorSet, SolveMode};
use nalgebra::DMatrix;

fn main() {
    for (n_size, m_mult) in [(700usize, 6.0f64), (200, 6.0)] {
        let grid = truncated_grid(n_size, m_mult).unwrap();
        let ops = OperatorSet::new(&grid, 2.0, SolveMode::FamilyAVForm).unwrap();
        let dim = ops.dim();
        let a = ops.differentiation() + DMatrix::identity(dim, dim) - 2.0 * ops.resampling();
        let mut nan_count = 0;
        let mut max_entry = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                let v = a[(i, j)];
                if !v.is_finite() {
                    nan_count += 1;
                }
                max_entry = max_entry.max(v.abs());
            }
        }
        println!("N={n_size}: dim={dim}, non-finite entries: {nan_count}, max |entry| = {max_entry:.3e}");
        let svd = a.clone().svd(true, true);
        let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
        sv.sort_by(|a, b| a.partial_cmp(b).unwrap());
        println!("  smallest sigmas: {:?}", &sv[..6.min(sv.len())]);
        println!("  largest sigmas: {:?}", &sv[sv.len().saturating_sub(3)..]);
    }
}

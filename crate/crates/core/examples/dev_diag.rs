//! Dev diagnostics: exactness landscape of the hybrid operators.

use alpha_riccati::discretization::{differentiation_matrix, resampling_matrix, truncated_grid};

fn main() {
    let g = truncated_grid(700, 6.0).unwrap();
    let nodes = g.nodes().to_vec();
    let m1 = nodes.len();
    let d = differentiation_matrix(&g).unwrap();
    let p = resampling_matrix(&g, 1.7).unwrap();

    println!("k   D_worst_rel (row,t)          P_worst_rel (row,t)");
    for k in 0..=30u32 {
        let f: Vec<f64> = nodes.iter().map(|&t| (-t).exp() * t.powi(k as i32)).collect();
        let scale = f.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let mut dw = (0usize, 0.0f64);
        let mut pw = (0usize, 0.0f64);
        for i in 0..m1 {
            let t = nodes[i];
            let d_exact = if k == 0 {
                -(-t).exp()
            } else {
                (-t).exp() * (k as f64 * t.powi(k as i32 - 1) - t.powi(k as i32))
            };
            let got_d: f64 = (0..m1).map(|j| d[(i, j)] * f[j]).sum();
            let e_d = (got_d - d_exact).abs() / scale;
            if e_d > dw.1 {
                dw = (i, e_d);
            }
            let x = 1.7 * t;
            let p_exact = (-x).exp() * x.powi(k as i32);
            let got_p: f64 = (0..m1).map(|j| p[(i, j)] * f[j]).sum();
            let e_p = (got_p - p_exact).abs() / scale;
            if e_p > pw.1 {
                pw = (i, e_p);
            }
        }
        println!(
            "{k:2}  {:9.2e} ({:3}, t={:7.3})   {:9.2e} ({:3}, t={:7.3})",
            dw.1, dw.0, nodes[dw.0], pw.1, pw.0, nodes[pw.0]
        );
    }

    // e^{-t} special case in absolute terms
    let f: Vec<f64> = nodes.iter().map(|&t| (-t).exp()).collect();
    let df = &nalgebra::DMatrix::from(d.clone()) * nalgebra::DVector::from_vec(f.clone());
    let mut worst = (0usize, 0.0f64);
    for (i, &t) in nodes.iter().enumerate() {
        let e = (df[i] + (-t).exp()).abs();
        if e > worst.1 {
            worst = (i, e);
        }
    }
    println!("D on e^-t absolute worst: {:.2e} at row {} (t={:.4})", worst.1, worst.0, nodes[worst.0]);

    let p2 = resampling_matrix(&g, 2.0).unwrap();
    let pf = &p2 * nalgebra::DVector::from_vec(f);
    let mut worstp = (0usize, 0.0f64);
    for (i, &t) in nodes.iter().enumerate() {
        let e = (pf[i] - (-2.0 * t).exp()).abs();
        if e > worstp.1 {
            worstp = (i, e);
        }
    }
    println!("P_2 on e^-t absolute worst: {:.2e} at row {} (t={:.4})", worstp.1, worstp.0, nodes[worstp.0]);

    // alpha = sqrt(2) on t^3
    let a = std::f64::consts::SQRT_2;
    let pa = resampling_matrix(&g, a).unwrap();
    let f3: Vec<f64> = nodes.iter().map(|&t| (-t).exp() * t.powi(3)).collect();
    let scale3 = f3.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()));
    let rf3 = &pa * nalgebra::DVector::from_vec(f3);
    let mut w3 = (0usize, 0.0f64);
    for (i, &t) in nodes.iter().enumerate() {
        let expect = (-a * t).exp() * (a * t).powi(3);
        let e = (rf3[i] - expect).abs() / scale3;
        if e > w3.1 {
            w3 = (i, e);
        }
    }
    println!("P_sqrt2 on t^3 e^-t rel worst: {:.2e} at row {} (t={:.4})", w3.1, w3.0, nodes[w3.0]);
}

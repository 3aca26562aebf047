//! Command implementations. Each returns the process exit code:
//! 0 success, 2 usage/config error, 3 numerical non-convergence.

use crate::config::RunConfig;
use crate::output::{csv_document, fmt_f64, OutputWriter};
use alpha_riccati::bigfloat::{to_decimal_plain, to_decimal_sci};
use alpha_riccati::continuation::{atlas, solutions_at, Seed};
use alpha_riccati::discretization::{
    polynomial_differentiation_matrix, truncated_grid, Grid, OperatorSet, SolveMode,
};
use alpha_riccati::moments::{scaling_coefficient, PerturbationModel};
use alpha_riccati::qseries::PrecisionConfig;
use alpha_riccati::solver::{
    characteristic_reference, characteristic_solve, newton_solve, solve_family_b, SolveResult,
};
use alpha_riccati::{Error, Result};
use nalgebra::DVector;
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

fn precision_for(config: &RunConfig, n: u32) -> Result<PrecisionConfig> {
    let floor = PrecisionConfig::for_characteristic_index(n);
    let bits = config.precision_bits.max(floor.significand_bits());
    PrecisionConfig::new(bits, floor.term_tolerance(), floor.max_terms())
}

fn build_grid(config: &RunConfig) -> Result<Grid> {
    truncated_grid(config.grid_n, config.grid_m)
}

/// Writes the table of scaling coefficients and scaled norms for n = 1..=max_n.
pub fn cmd_coeffs(config: &RunConfig, max_n: u32) -> Result<i32> {
    if max_n == 0 {
        return Err(Error::Config("--max-n must be at least 1".into()));
    }
    let started = chrono::Utc::now();
    let mut writer = OutputWriter::new(&config.out_dir)?;

    #[derive(Serialize)]
    struct CoeffRow {
        n: u32,
        alpha_n: f64,
        /// Decimal strings carry more digits than an f64 can.
        c_n: String,
        scaled_norm: String,
        c_n_f64: f64,
        scaled_norm_f64: f64,
    }

    let mut rows = Vec::new();
    println!("{:>3}  {:>24}  {:>22}", "n", "C_n", "norm(C_n E_n)");
    for n in 1..=max_n {
        let precision = precision_for(config, n)?;
        let record = scaling_coefficient(n, &precision)?;
        println!(
            "{n:>3}  {:>24}  {:>22}",
            to_decimal_plain(&record.c_n, 12),
            to_decimal_plain(&record.scaled_norm, 12)
        );
        rows.push(CoeffRow {
            n,
            alpha_n: 2f64.powf(1.0 / n as f64),
            c_n: to_decimal_sci(&record.c_n, 25),
            scaled_norm: to_decimal_sci(&record.scaled_norm, 25),
            c_n_f64: record.c_n_f64(),
            scaled_norm_f64: record.scaled_norm_f64(),
        });
    }

    if config.format.wants_csv() {
        let csv_rows: Vec<String> = rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{}",
                    r.n,
                    fmt_f64(r.alpha_n),
                    r.c_n,
                    r.scaled_norm
                )
            })
            .collect();
        writer.write(
            "coeffs.csv",
            &csv_document("n,alpha_n,c_n,scaled_norm_l2", &csv_rows),
        )?;
    }
    if config.format.wants_json() {
        writer.write_json("coeffs.json", &rows)?;
    }
    writer.finish(config, "coeffs", started)?;
    Ok(EXIT_OK)
}

/// Convergence study of the linear characteristic solve against the series.
pub fn cmd_verify_linear(
    config: &RunConfig,
    n_values: &[u32],
    n_sweep: &[usize],
    ceiling: f64,
) -> Result<i32> {
    if n_sweep.is_empty() || n_values.is_empty() {
        return Err(Error::Config(
            "verify-linear needs nonempty --n-values and --n-sweep".into(),
        ));
    }
    let started = chrono::Utc::now();
    let mut writer = OutputWriter::new(&config.out_dir)?;
    let mut csv_rows = Vec::new();
    let mut worst_at_largest = 0.0f64;
    let largest = *n_sweep.iter().max().unwrap();

    for &n in n_values {
        let alpha = 2f64.powf(1.0 / n as f64);
        for &size in n_sweep {
            // sweep sizes below M^2 run untruncated (the truncated size
            // would exceed the rule itself)
            let m_eff = config.grid_m.min((size as f64).sqrt());
            let grid = truncated_grid(size, m_eff)?;
            let ops = OperatorSet::new(&grid, alpha, SolveMode::FamilyAVForm)?;
            let solve = characteristic_solve(&ops)?;
            let reference = characteristic_reference(&grid, n)?;
            let error = solve
                .values
                .iter()
                .zip(&reference)
                .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            println!(
                "n={n} alpha={alpha:.12} N={size:4} dof={:4}: max grid error {error:.3e}",
                grid.dof()
            );
            csv_rows.push(format!(
                "{},{},{},{},{}",
                fmt_f64(alpha),
                size,
                grid.dof(),
                fmt_f64(error),
                fmt_f64(solve.sigma_min)
            ));
            if size == largest {
                worst_at_largest = worst_at_largest.max(error);
            }
        }
    }
    writer.write(
        "verify_linear.csv",
        &csv_document("alpha,N,dof,max_grid_error,sigma_min", &csv_rows),
    )?;
    writer.finish(config, "verify-linear", started)?;
    if worst_at_largest > ceiling {
        eprintln!(
            "error {worst_at_largest:.3e} at N = {largest} exceeds the ceiling {ceiling:.1e}"
        );
        return Ok(EXIT_NUMERICAL);
    }
    Ok(EXIT_OK)
}

/// How a solve is seeded.
pub enum SeedSpec {
    Perturbation { n: u32, epsilon: f64 },
    FamilyB,
    File(std::path::PathBuf),
}

impl std::str::FromStr for SeedSpec {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "family-b" {
            return Ok(SeedSpec::FamilyB);
        }
        if let Some(rest) = s.strip_prefix("perturbation:") {
            let (n, eps) = rest
                .split_once(':')
                .ok_or_else(|| "expected perturbation:N:EPS".to_string())?;
            return Ok(SeedSpec::Perturbation {
                n: n.parse().map_err(|_| format!("bad index '{n}'"))?,
                epsilon: eps.parse().map_err(|_| format!("bad epsilon '{eps}'"))?,
            });
        }
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(SeedSpec::File(path.into()));
        }
        Err(format!(
            "unknown seed '{s}' (perturbation:N:EPS | family-b | file:PATH)"
        ))
    }
}

/// One nonlinear solve with a dense profile export.
pub fn cmd_solve(config: &RunConfig, alpha: f64, seed: &SeedSpec, t_max: f64) -> Result<i32> {
    if !(alpha > 1.0) {
        return Err(Error::Config(format!("alpha must exceed 1, got {alpha}")));
    }
    let started = chrono::Utc::now();
    let mut writer = OutputWriter::new(&config.out_dir)?;
    let grid = build_grid(config)?;
    let newton = config.newton_settings();

    let result: SolveResult = match seed {
        SeedSpec::FamilyB => solve_family_b(&grid, alpha, &newton)?,
        SeedSpec::Perturbation { n, epsilon } => {
            let model = PerturbationModel::with_precision(*n, precision_for(config, *n)?)?;
            let guess = model.guess(*epsilon, grid.interior_nodes())?;
            let ops = OperatorSet::new(&grid, alpha, SolveMode::FamilyAVForm)?;
            newton_solve(&ops, &DVector::from_vec(guess), &newton)?
        }
        SeedSpec::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            let prior: SolveResult = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("bad solve json {}: {e}", path.display())))?;
            if prior.values.len() != grid.dof() + usize::from(prior.mode == SolveMode::FamilyBUForm)
            {
                return Err(Error::Config(format!(
                    "seed state has {} values; the grid needs {}",
                    prior.values.len(),
                    grid.dof()
                )));
            }
            let ops = OperatorSet::new(&grid, alpha, prior.mode)?;
            newton_solve(&ops, &DVector::from_vec(prior.values), &newton)?
        }
    };

    println!(
        "alpha = {alpha}: converged = {}, classification = {:?}, residual = {:.3e}, iterations = {}",
        result.converged, result.classification, result.residual_norm, result.iterations
    );

    if config.format.wants_json() {
        writer.write_json("solve.json", &result)?;
    }
    if config.format.wants_csv() {
        let samples = 750usize;
        let mut rows = Vec::with_capacity(samples + 1);
        for i in 0..=samples {
            let t = t_max * i as f64 / samples as f64;
            let v = match result.mode {
                SolveMode::FamilyAVForm => grid.interpolate(&result.values, t)?,
                SolveMode::FamilyBUForm => grid.interpolate_with_boundary(&result.values, t)?,
            };
            rows.push(format!("{},{}", fmt_f64(t), fmt_f64(v)));
        }
        writer.write("profile.csv", &csv_document("t,value", &rows))?;
    }
    if config.dump_operators {
        let ops = OperatorSet::new(&grid, alpha, SolveMode::FamilyAVForm)?;
        writer.write("operator_d.csv", &matrix_csv(ops.differentiation_full()))?;
        writer.write("operator_p.csv", &matrix_csv(ops.resampling_full()))?;
        writer.write(
            "operator_dp_poly.csv",
            &matrix_csv(&polynomial_differentiation_matrix(&grid)?),
        )?;
    }

    if !result.converged {
        writer.write_json(
            "diagnostics.json",
            &serde_json::json!({
                "residual_history": result.residual_history,
                "failure": result.failure,
                "iterations": result.iterations,
            }),
        )?;
        writer.finish(config, "solve", started)?;
        eprintln!("solve did not converge");
        return Ok(EXIT_NUMERICAL);
    }
    writer.finish(config, "solve", started)?;
    Ok(EXIT_OK)
}

fn matrix_csv(m: &nalgebra::DMatrix<f64>) -> String {
    let mut rows = Vec::with_capacity(m.nrows());
    for i in 0..m.nrows() {
        let cells: Vec<String> = (0..m.ncols()).map(|j| fmt_f64(m[(i, j)])).collect();
        rows.push(cells.join(","));
    }
    csv_document(
        &(0..m.ncols())
            .map(|j| format!("c{j}"))
            .collect::<Vec<_>>()
            .join(","),
        &rows,
    )
}

/// Bifurcation atlas: branch polylines, folds, and optional solution
/// snapshots at requested alpha values.
pub fn cmd_atlas(
    config: &RunConfig,
    n_range: &[u32],
    window: (f64, f64),
    snapshots: &[f64],
    eps_seed: f64,
) -> Result<i32> {
    if !(window.0 < window.1) {
        return Err(Error::Config(format!(
            "degenerate alpha window [{}, {}]",
            window.0, window.1
        )));
    }
    if n_range.is_empty() {
        return Err(Error::Config("atlas needs a nonempty --n-range".into()));
    }
    let started = chrono::Utc::now();
    let mut writer = OutputWriter::new(&config.out_dir)?;
    let grid = build_grid(config)?;
    let controls = config.continuation_controls();

    let result = atlas(&grid, n_range, eps_seed, window, &controls)?;
    println!(
        "atlas: {} branches, {} seed failures",
        result.branches.len(),
        result.seed_failures.len()
    );

    if config.format.wants_csv() {
        let mut rows = Vec::new();
        for (id, branch) in result.branches.iter().enumerate() {
            let seed_n = match branch.seed {
                Seed::Perturbation { n, .. } => n as i64,
                Seed::Explicit { .. } => -1,
            };
            for p in &branch.points {
                rows.push(format!(
                    "{},{},{},{},{},{:?},{}",
                    id,
                    seed_n,
                    fmt_f64(p.alpha),
                    fmt_f64(std::f64::consts::LN_2 / p.alpha.ln()),
                    fmt_f64(p.norm_sq),
                    p.classification,
                    fmt_f64(p.moment_gap),
                ));
            }
        }
        writer.write(
            "branches.csv",
            &csv_document(
                "branch_id,seed_n,alpha,n,norm_sq,class,moment_gap",
                &rows,
            ),
        )?;
        let fold_rows: Vec<String> = result
            .branches
            .iter()
            .enumerate()
            .flat_map(|(id, b)| {
                b.folds
                    .iter()
                    .map(move |f| format!("{},{},{}", id, fmt_f64(*f), fmt_f64(2f64.ln() / f.ln())))
            })
            .collect();
        writer.write("folds.csv", &csv_document("branch_id,alpha,n", &fold_rows))?;
    }
    if config.format.wants_json() {
        writer.write_json("atlas.json", &result)?;
    }

    #[derive(Serialize)]
    struct Snapshot {
        alpha: f64,
        solutions: Vec<SolveResult>,
    }
    if !snapshots.is_empty() {
        let mut shots = Vec::new();
        for &alpha in snapshots {
            let sols = solutions_at(&result, &grid, alpha, &controls);
            println!("snapshot alpha = {alpha}: {} solutions", sols.len());
            shots.push(Snapshot {
                alpha,
                solutions: sols,
            });
        }
        writer.write_json("snapshots.json", &shots)?;
    }
    writer.finish(config, "atlas", started)?;

    for &n in n_range {
        let covered = result.branches.iter().any(|b| {
            matches!(b.seed, Seed::Perturbation { n: bn, .. } if bn == n)
                && b.points.len() > 1
        });
        if !covered {
            eprintln!("no branch succeeded for n = {n}");
            return Ok(EXIT_NUMERICAL);
        }
    }
    Ok(EXIT_OK)
}

/// Perturbation-residual curves r_n(t; eps) and the eps -> 0 limit.
pub fn cmd_residual_check(
    config: &RunConfig,
    n: u32,
    epsilons: &[f64],
    t_max: f64,
) -> Result<i32> {
    if n == 0 {
        return Err(Error::Config("--n must be at least 1".into()));
    }
    if !(t_max > 0.0) {
        return Err(Error::Config("--t-max must be positive".into()));
    }
    let started = chrono::Utc::now();
    let mut writer = OutputWriter::new(&config.out_dir)?;
    let model = PerturbationModel::with_precision(n, precision_for(config, n)?)?;

    let samples = 800usize;
    let mut header = String::from("t,r_limit");
    for eps in epsilons {
        header.push_str(&format!(",r_eps_{eps}"));
    }
    let mut rows = Vec::with_capacity(samples + 1);
    let mut sup_limit = 0.0f64;
    let mut sups = vec![0.0f64; epsilons.len()];
    for i in 0..=samples {
        let t = t_max * i as f64 / samples as f64;
        let limit = model.limiting_residual(t)?;
        sup_limit = sup_limit.max(limit.abs());
        let mut row = format!("{},{}", fmt_f64(t), fmt_f64(limit));
        for (k, &eps) in epsilons.iter().enumerate() {
            let r = model.residual(eps, t)?;
            sups[k] = sups[k].max(r.abs());
            row.push_str(&format!(",{}", fmt_f64(r)));
        }
        rows.push(row);
    }
    println!("n = {n}: sup |r_n(t; 0)| = {sup_limit:.6e} on [0, {t_max}]");
    for (k, &eps) in epsilons.iter().enumerate() {
        println!("       sup |r_n(t; {eps})| = {:.6e}", sups[k]);
    }
    if config.format.wants_csv() {
        writer.write("residual_check.csv", &csv_document(&header, &rows))?;
    }
    if config.format.wants_json() {
        writer.write_json(
            "residual_check.json",
            &serde_json::json!({
                "n": n,
                "t_max": t_max,
                "sup_limit": sup_limit,
                "epsilons": epsilons,
                "sup_per_epsilon": sups,
            }),
        )?;
    }
    writer.finish(config, "residual-check", started)?;
    Ok(EXIT_OK)
}

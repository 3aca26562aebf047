//! Nonlinear residual/Jacobian assembly, damped Newton iteration, linear
//! characteristic (nullspace) solves, and solution classification.

use crate::discretization::{Grid, OperatorSet, SolveMode};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Solutions whose largest sample is below this are the constant solution.
pub const TRIVIAL_THRESHOLD: f64 = 1e-10;

/// Classification dead zone: all derivatives of the solutions vanish at
/// `t = 0`, so the profile is numerically flat there and extrema are sought
/// only beyond this point.
pub const CLASSIFY_T_MIN: f64 = 0.05;

/// Relative amplitude below which grid samples count as collocation noise
/// when locating sign changes.
const ZERO_AMPLITUDE_FILTER: f64 = 1e-4;

/// Shape of a solution profile, by its first turning point on `(0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    /// First turning point is a local maximum.
    Plus,
    /// First turning point is a local minimum.
    Minus,
    /// The constant solution (`v = 0`).
    Trivial,
    /// The boundary-value branch decaying to zero.
    Decaying,
}

/// Newton iteration controls.
#[derive(Debug, Clone, Copy)]
pub struct NewtonSettings {
    /// Convergence threshold on the max-norm of the residual.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 25,
        }
    }
}

/// Outcome of one nonlinear solve, convergent or not.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResult {
    pub alpha: f64,
    pub mode: SolveMode,
    /// Nodes carrying the unknowns (interior for the v-form, all collocation
    /// nodes for the u-form).
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    /// Max-norm of the plain residual at the final iterate.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub classification: Classification,
    /// Residual max-norms per accepted iterate, starting with the seed.
    pub residual_history: Vec<f64>,
    /// Populated when the iteration stopped for a structural reason.
    pub failure: Option<String>,
}

impl SolveResult {
    pub fn values_vector(&self) -> DVector<f64> {
        DVector::from_vec(self.values.clone())
    }

    /// Interior samples of the deviation from the constant solution:
    /// the values themselves in v-form, `u - 1` in u-form.
    pub fn deviation_interior(&self) -> Vec<f64> {
        match self.mode {
            SolveMode::FamilyAVForm => self.values.clone(),
            SolveMode::FamilyBUForm => self.values[1..].iter().map(|u| u - 1.0).collect(),
        }
    }
}

fn check_dim(ops: &OperatorSet, len: usize) -> Result<()> {
    if len != ops.dim() {
        return Err(Error::Dimension {
            expected: ops.dim(),
            got: len,
        });
    }
    Ok(())
}

/// Discretized residual. v-form: `(D + I - 2 P) v - P (v o v)`; u-form:
/// `(D + I) u - P (u o u)` with the first row enforcing `u(0) = 1`.
pub fn residual(ops: &OperatorSet, values: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim(ops, values.len())?;
    let squared = values.component_mul(values);
    let mut r = match ops.mode() {
        SolveMode::FamilyAVForm => {
            ops.differentiation() * values + values
                - ops.resampling() * (2.0 * values + &squared)
        }
        SolveMode::FamilyBUForm => {
            ops.differentiation() * values + values - ops.resampling() * &squared
        }
    };
    if ops.mode() == SolveMode::FamilyBUForm {
        r[0] = values[0] - 1.0;
    }
    Ok(r)
}

/// Analytic Jacobian of [`residual`].
pub fn jacobian(ops: &OperatorSet, values: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_dim(ops, values.len())?;
    let dim = ops.dim();
    let mut j = match ops.mode() {
        SolveMode::FamilyAVForm => {
            let mut j = ops.differentiation() - 2.0 * ops.resampling();
            for (col, &v) in values.iter().enumerate() {
                let scale = 2.0 * v;
                for row in 0..dim {
                    j[(row, col)] -= scale * ops.resampling()[(row, col)];
                }
            }
            j
        }
        SolveMode::FamilyBUForm => {
            let mut j = ops.differentiation().clone();
            for (col, &v) in values.iter().enumerate() {
                let scale = 2.0 * v;
                for row in 0..dim {
                    j[(row, col)] -= scale * ops.resampling()[(row, col)];
                }
            }
            j
        }
    };
    for i in 0..dim {
        j[(i, i)] += 1.0;
    }
    if ops.mode() == SolveMode::FamilyBUForm {
        for col in 0..dim {
            j[(0, col)] = if col == 0 { 1.0 } else { 0.0 };
        }
    }
    Ok(j)
}

fn max_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
}

/// Damped Newton iteration: full steps with halving (at most 8) whenever the
/// residual max-norm fails to decrease. Returns diagnostics either way; a
/// singular linear solve becomes a failure flag, not an error.
pub fn newton_solve(
    ops: &OperatorSet,
    initial: &DVector<f64>,
    settings: &NewtonSettings,
) -> Result<SolveResult> {
    check_dim(ops, initial.len())?;
    if !(settings.tolerance > 0.0) {
        return Err(Error::Config("newton tolerance must be positive".into()));
    }
    let mut values = initial.clone();
    let mut r = residual(ops, &values)?;
    let mut r_norm = max_norm(&r);
    let mut history = vec![r_norm];
    let mut iterations = 0usize;
    let mut failure = None;

    while r_norm > settings.tolerance && iterations < settings.max_iterations {
        let j = jacobian(ops, &values)?;
        let Some(delta) = j.lu().solve(&(-&r)) else {
            failure = Some("singular jacobian in newton step".to_string());
            break;
        };
        let mut step = 1.0f64;
        let mut accepted = false;
        for _ in 0..=8 {
            let candidate = &values + step * &delta;
            let rc = residual(ops, &candidate)?;
            let rc_norm = max_norm(&rc);
            if rc_norm < r_norm {
                values = candidate;
                r = rc;
                r_norm = rc_norm;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        if !accepted {
            failure = Some("no residual decrease along newton direction".to_string());
            break;
        }
        history.push(r_norm);
    }

    let converged = r_norm <= settings.tolerance && failure.is_none();
    let values_slice: Vec<f64> = values.iter().copied().collect();
    let classification = match ops.mode() {
        SolveMode::FamilyAVForm => {
            classify(ops.grid(), &values_slice).unwrap_or(Classification::Trivial)
        }
        SolveMode::FamilyBUForm => Classification::Decaying,
    };
    Ok(SolveResult {
        alpha: ops.alpha(),
        mode: ops.mode(),
        nodes: ops.unknown_nodes().to_vec(),
        values: values_slice,
        residual_norm: r_norm,
        iterations,
        converged,
        classification,
        residual_history: history,
        failure,
    })
}

/// Nullspace solve of the linearized operator at a characteristic value.
#[derive(Debug, Clone)]
pub struct NullspaceSolve {
    /// Interior samples, unit grid norm, first turning point positive.
    pub values: Vec<f64>,
    pub sigma_min: f64,
    pub sigma_next: f64,
    /// Set when the two smallest singular values are separated by less than
    /// three orders of magnitude.
    pub ambiguous: bool,
}

/// Right singular vector of `D + I - 2 P_alpha` for the smallest singular
/// value, scaled to unit grid norm, oriented so the first turning point on
/// `(0, inf)` is positive. Requires `alpha` within 1e-12 of some `2^(1/n)`.
pub fn characteristic_solve(ops: &OperatorSet) -> Result<NullspaceSolve> {
    if ops.mode() != SolveMode::FamilyAVForm {
        return Err(Error::Domain(
            "characteristic solve works on the v-form operators".into(),
        ));
    }
    let alpha = ops.alpha();
    let n_est = (std::f64::consts::LN_2 / alpha.ln()).round();
    let near = n_est >= 1.0 && (alpha - 2f64.powf(1.0 / n_est)).abs() <= 1e-12;
    if !near {
        return Err(Error::Domain(format!(
            "alpha = {alpha} is not within 1e-12 of a characteristic value"
        )));
    }
    let dim = ops.dim();
    let raw = ops.differentiation() + DMatrix::identity(dim, dim) - 2.0 * ops.resampling();
    // Equilibrate before the SVD; diagonal scalings preserve the nullspace
    // exactly. Raw entries span ~1e15 at the default grid, which would bury
    // the null direction below the SVD's resolution.
    let mut linear = raw;
    let mut col_scale = vec![1.0f64; dim];
    for (j, scale) in col_scale.iter_mut().enumerate() {
        let col_max = (0..dim).fold(0.0f64, |a, i| a.max(linear[(i, j)].abs()));
        if col_max > 0.0 {
            *scale = 1.0 / col_max;
            for i in 0..dim {
                linear[(i, j)] *= *scale;
            }
        }
    }
    for i in 0..dim {
        let row_max = (0..dim).fold(0.0f64, |a, j| a.max(linear[(i, j)].abs()));
        if row_max > 0.0 {
            for j in 0..dim {
                linear[(i, j)] /= row_max;
            }
        }
    }
    let svd = linear.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("svd with v requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[a]
            .partial_cmp(&svd.singular_values[b])
            .unwrap()
    });
    let sigma_min = svd.singular_values[order[0]];
    let sigma_next = svd.singular_values[order[1]];
    let ambiguous = sigma_next < 1e3 * sigma_min;
    if ambiguous {
        log::warn!(
            "nullspace poorly separated at alpha = {alpha}: sigma_min = {sigma_min:.3e}, next = {sigma_next:.3e}"
        );
    }
    // a couple of inverse-iteration passes sharpen the null vector beyond
    // the plain SVD floor
    let mut w = v_t.row(order[0]).transpose();
    let lu = linear.lu();
    for _ in 0..2 {
        if let Some(x) = lu.solve(&w) {
            let norm = x.norm();
            if norm.is_finite() && norm > 0.0 {
                w = x / norm;
            } else {
                break;
            }
        } else {
            break;
        }
    }
    let mut values: Vec<f64> = w
        .iter()
        .zip(&col_scale)
        .map(|(wj, sc)| wj * sc)
        .collect();
    let norm = ops.grid().quadrature_norm(&values)?;
    if !(norm > 0.0) {
        return Err(Error::Degeneracy("nullspace vector has zero norm".into()));
    }
    for v in &mut values {
        *v /= norm;
    }
    if leading_sign(ops.grid(), &values)? < 0.0 {
        for v in &mut values {
            *v = -*v;
        }
    }
    Ok(NullspaceSolve {
        values,
        sigma_min,
        sigma_next,
        ambiguous,
    })
}

/// Sign of the first departure from the flat zone near `t = 0`, which is the
/// sign of the first turning point.
fn leading_sign(grid: &Grid, values: &[f64]) -> Result<f64> {
    let max_abs = values.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    for (&t, &v) in grid.interior_nodes().iter().zip(values) {
        if t >= CLASSIFY_T_MIN && v.abs() > 1e-6 * max_abs {
            return Ok(v.signum());
        }
    }
    Err(Error::Classification(
        "profile never rises above its noise floor".into(),
    ))
}

/// Locates the first turning point of the interpolant for `t >= 0.05` and
/// reports its type. Samples below [`TRIVIAL_THRESHOLD`] are the constant
/// solution.
pub fn classify(grid: &Grid, values: &[f64]) -> Result<Classification> {
    if values.len() != grid.dof() {
        return Err(Error::Dimension {
            expected: grid.dof(),
            got: values.len(),
        });
    }
    let max_abs = values.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if max_abs <= TRIVIAL_THRESHOLD {
        return Ok(Classification::Trivial);
    }
    let t_max = grid.max_node();
    let samples = 2000usize;
    let dt = (t_max - CLASSIFY_T_MIN) / samples as f64;
    let slack = 1e-9 * max_abs;
    let mut prev = grid.interpolate(values, CLASSIFY_T_MIN)?;
    let mut direction = 0i8;
    for i in 1..=samples {
        let t = CLASSIFY_T_MIN + dt * i as f64;
        let v = grid.interpolate(values, t)?;
        let step = v - prev;
        if step.abs() > slack {
            let s: i8 = if step > 0.0 { 1 } else { -1 };
            if direction == 0 {
                // ignore drift while still inside the noise floor
                if v.abs() > 1e-6 * max_abs {
                    direction = s;
                }
            } else if s != direction {
                return Ok(if direction > 0 {
                    Classification::Plus
                } else {
                    Classification::Minus
                });
            }
        }
        prev = v;
    }
    Err(Error::Classification(
        "no turning point found on the grid span".into(),
    ))
}

/// Sign-change locations of the interpolant on `(0.05, t_max)`, refined by
/// bisection. Samples within the collocation noise floor are ignored.
pub fn zero_locations(grid: &Grid, values: &[f64]) -> Result<Vec<f64>> {
    if values.len() != grid.dof() {
        return Err(Error::Dimension {
            expected: grid.dof(),
            got: values.len(),
        });
    }
    let max_abs = values.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if max_abs <= TRIVIAL_THRESHOLD {
        return Err(Error::Domain(
            "zero counting needs a nontrivial profile".into(),
        ));
    }
    let filter = ZERO_AMPLITUDE_FILTER * max_abs;
    let t_max = grid.max_node();
    let samples = 4000usize;
    let dt = (t_max - CLASSIFY_T_MIN) / samples as f64;
    let mut live: Option<(f64, f64)> = None;
    let mut zeros = Vec::new();
    for i in 0..=samples {
        let t = CLASSIFY_T_MIN + dt * i as f64;
        let v = grid.interpolate(values, t)?;
        if v.abs() <= filter {
            continue;
        }
        if let Some((t_prev, v_prev)) = live {
            if v.signum() != v_prev.signum() {
                zeros.push(bisect_zero(grid, values, t_prev, v_prev, t)?);
            }
        }
        live = Some((t, v));
    }
    Ok(zeros)
}

/// Number of sign changes of the interpolant on the reliable span.
pub fn count_zeros(grid: &Grid, values: &[f64]) -> Result<usize> {
    zero_locations(grid, values).map(|z| z.len())
}

fn bisect_zero(grid: &Grid, values: &[f64], mut lo: f64, v_lo: f64, mut hi: f64) -> Result<f64> {
    let mut s_lo = v_lo.signum();
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let vm = grid.interpolate(values, mid)?;
        if vm.signum() == s_lo {
            lo = mid;
            s_lo = vm.signum();
        } else {
            hi = mid;
        }
        if hi - lo < 1e-10 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Newton solve of the u-form from the decaying initial guess `e^(-t)`.
pub fn solve_family_b(grid: &Grid, alpha: f64, settings: &NewtonSettings) -> Result<SolveResult> {
    let ops = OperatorSet::new(grid, alpha, SolveMode::FamilyBUForm)?;
    let initial = DVector::from_iterator(
        grid.dof() + 1,
        grid.nodes().iter().map(|&t| (-t).exp()),
    );
    newton_solve(&ops, &initial, settings)
}

/// Normalized gap in the moment identity `(alpha - 2) int v = int v^2`,
/// taken over the grid quadrature: `|(alpha-2) Q(v) - Q(v^2)| / (1 + |Q(v)|)`.
/// Every converged nonconstant v-form solution satisfies this to solver
/// accuracy, making it the strongest end-to-end check available.
pub fn moment_identity_gap(grid: &Grid, alpha: f64, values: &[f64]) -> Result<f64> {
    let q_v = grid.quadrature_integral(values)?;
    let squared: Vec<f64> = values.iter().map(|v| v * v).collect();
    let q_v2 = grid.quadrature_integral(&squared)?;
    Ok(((alpha - 2.0) * q_v - q_v2).abs() / (1.0 + q_v.abs()))
}

/// Grid samples of the characteristic series solution at `2^(1/n)`,
/// normalized to unit grid norm with the first turning point positive: the
/// reference profile [`characteristic_solve`] is measured against.
pub fn characteristic_reference(grid: &Grid, n: u32) -> Result<Vec<f64>> {
    use crate::qseries::{PrecisionConfig, SeriesSolution};
    let series = SeriesSolution::characteristic(n, PrecisionConfig::for_characteristic_index(n))?;
    let mut samples: Vec<f64> = grid
        .interior_nodes()
        .iter()
        .map(|&t| series.value_f64(t))
        .collect::<Result<_>>()?;
    let norm = grid.quadrature_norm(&samples)?;
    if !(norm > 0.0) {
        return Err(Error::Degeneracy("series samples have zero norm".into()));
    }
    let sign = series.leading_sign()?;
    for v in &mut samples {
        *v *= sign / norm;
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::truncated_grid;

    fn small_grid() -> Grid {
        truncated_grid(100, 2.0).unwrap()
    }

    #[test]
    fn residual_vanishes_on_trivial_solution() {
        let g = small_grid();
        let ops = OperatorSet::new(&g, 2.0, SolveMode::FamilyAVForm).unwrap();
        let zero = DVector::zeros(ops.dim());
        let r = residual(&ops, &zero).unwrap();
        assert_eq!(max_norm(&r), 0.0);
    }

    #[test]
    fn residual_rejects_dimension_mismatch() {
        let g = small_grid();
        let ops = OperatorSet::new(&g, 2.0, SolveMode::FamilyAVForm).unwrap();
        let bad = DVector::zeros(3);
        assert!(residual(&ops, &bad).is_err());
        assert!(jacobian(&ops, &bad).is_err());
    }

    #[test]
    fn family_b_residual_matches_hand_assembly() {
        // dof = 3 case assembled entry by entry from the raw operators
        let g = truncated_grid(9, 1.0).unwrap();
        assert_eq!(g.dof(), 3);
        let ops = OperatorSet::new(&g, 1.5, SolveMode::FamilyBUForm).unwrap();
        let u = DVector::from_vec(vec![1.0, 0.9, 0.4, 0.2]);
        let r = residual(&ops, &u).unwrap();
        let d = ops.differentiation();
        let p = ops.resampling();
        for i in 1..4 {
            let mut manual = u[i];
            for j in 0..4 {
                manual += d[(i, j)] * u[j] - p[(i, j)] * u[j] * u[j];
            }
            assert!((r[i] - manual).abs() < 1e-14, "row {i}");
        }
        assert!((r[0] - (u[0] - 1.0)).abs() < 1e-15);
        // the constant-1 state does not satisfy the u-form residual rows
        let ones = DVector::from_element(4, 1.0);
        let r1 = residual(&ops, &ones).unwrap();
        assert!(max_norm(&r1) > 1e-3, "{}", max_norm(&r1));
    }

    #[test]
    fn jacobian_at_zero_is_linear_part() {
        let g = small_grid();
        let ops = OperatorSet::new(&g, 2.0, SolveMode::FamilyAVForm).unwrap();
        let zero = DVector::zeros(ops.dim());
        let j = jacobian(&ops, &zero).unwrap();
        let expect = ops.differentiation() + DMatrix::identity(ops.dim(), ops.dim())
            - 2.0 * ops.resampling();
        assert!((j - expect).abs().max() < 1e-14);
    }

    #[test]
    fn newton_converges_immediately_on_exact_root() {
        let g = small_grid();
        let ops = OperatorSet::new(&g, 2.0, SolveMode::FamilyAVForm).unwrap();
        let zero = DVector::zeros(ops.dim());
        let res = newton_solve(&ops, &zero, &NewtonSettings::default()).unwrap();
        assert!(res.converged);
        assert!(res.iterations <= 1);
        assert_eq!(res.classification, Classification::Trivial);
    }

    #[test]
    fn classify_detects_shapes_and_scale_invariance() {
        let g = small_grid();
        // synthetic plus-shaped profile: t e^{-t} has a single max at t = 1
        let plus: Vec<f64> = g.interior_nodes().iter().map(|&t| t * (-t).exp()).collect();
        assert_eq!(classify(&g, &plus).unwrap(), Classification::Plus);
        let minus: Vec<f64> = plus.iter().map(|v| -v).collect();
        assert_eq!(classify(&g, &minus).unwrap(), Classification::Minus);
        let scaled: Vec<f64> = plus.iter().map(|v| 7.3e-4 * v).collect();
        assert_eq!(classify(&g, &scaled).unwrap(), Classification::Plus);
        let zeros = vec![0.0; g.dof()];
        assert_eq!(classify(&g, &zeros).unwrap(), Classification::Trivial);
    }

    #[test]
    fn count_zeros_on_synthetic_profile() {
        let g = small_grid();
        // (t - 3) t e^{-t}: one interior sign change at t = 3
        let f: Vec<f64> = g
            .interior_nodes()
            .iter()
            .map(|&t| (t - 3.0) * t * (-t).exp())
            .collect();
        assert_eq!(count_zeros(&g, &f).unwrap(), 1);
        let neg: Vec<f64> = f.iter().map(|v| -v).collect();
        assert_eq!(count_zeros(&g, &neg).unwrap(), 1);
        let zeros = vec![0.0; g.dof()];
        assert!(count_zeros(&g, &zeros).is_err());
    }

    #[test]
    fn zero_location_is_refined() {
        let g = small_grid();
        let f: Vec<f64> = g
            .interior_nodes()
            .iter()
            .map(|&t| (t - 3.0) * t * (-t).exp())
            .collect();
        let z = zero_locations(&g, &f).unwrap();
        assert_eq!(z.len(), 1);
        assert!((z[0] - 3.0).abs() < 1e-6, "{}", z[0]);
    }
}

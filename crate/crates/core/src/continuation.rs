//! Pseudo-arclength continuation in the dilation parameter, branch tracing,
//! fold detection, solution counting, and bifurcation-atlas assembly.
//!
//! Branches live in `(v, alpha)` space. A predictor steps along the unit
//! tangent, a corrector runs Newton on the residual stacked with the
//! arclength constraint, and every accepted point is re-verified against the
//! plain residual and the moment identity before it joins the branch.

use crate::discretization::{Grid, OperatorSet, SolveMode};
use crate::error::{Error, Result};
use crate::moments::PerturbationModel;
use crate::solver::{
    classify, jacobian, moment_identity_gap, newton_solve, residual, Classification,
    NewtonSettings, SolveResult,
};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Step-size policy and verification thresholds for branch tracing.
#[derive(Debug, Clone, Copy)]
pub struct ContinuationControls {
    pub ds0: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub max_steps: usize,
    /// Corrector convergence threshold (max-norm of the extended residual).
    pub newton_tol: f64,
    pub max_corrector_iterations: usize,
    /// Plain-residual bound every accepted point must satisfy.
    pub verify_tol: f64,
    /// Normalized moment-identity gap bound for accepted points.
    pub moment_tol: f64,
}

impl Default for ContinuationControls {
    fn default() -> Self {
        Self {
            ds0: 1e-2,
            ds_min: 1e-5,
            ds_max: 0.1,
            max_steps: 2000,
            newton_tol: 1e-10,
            max_corrector_iterations: 12,
            verify_tol: 1e-8,
            moment_tol: 1e-6,
        }
    }
}

/// One accepted continuation state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchPoint {
    pub alpha: f64,
    pub values: Vec<f64>,
    /// Squared grid L2 norm of the profile.
    pub norm_sq: f64,
    pub classification: Classification,
    /// Unit tangent in `(values, alpha)` space, oriented along the trace.
    pub tangent: Vec<f64>,
    /// Arclength step that produced this point (0 for the seed).
    pub step: f64,
    /// Normalized moment-identity gap at this state: the discretization's
    /// end-to-end error indicator.
    pub moment_gap: f64,
}

impl BranchPoint {
    pub fn tangent_alpha(&self) -> f64 {
        *self.tangent.last().expect("tangent includes alpha slot")
    }
}

/// How a trace ended.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchStatus {
    RangeExit,
    StepUnderflow,
    CollapsedToTrivial,
    MaxSteps,
    CorrectorFailure,
}

/// What seeded a branch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Seed {
    Perturbation { n: u32, epsilon: f64 },
    Explicit { alpha: f64 },
}

/// An ordered continuation curve with its fold locations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub seed: Seed,
    /// Fold locations (bisection-refined during tracing).
    pub folds: Vec<f64>,
    pub status: BranchStatus,
}

impl Branch {
    pub fn alpha_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in &self.points {
            lo = lo.min(p.alpha);
            hi = hi.max(p.alpha);
        }
        (lo, hi)
    }
}

/// A family of branches over one parameter window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Atlas {
    pub branches: Vec<Branch>,
    pub alpha_window: (f64, f64),
    pub n_values: Vec<u32>,
    /// Seeds that failed to converge, with the reason.
    pub seed_failures: Vec<SeedFailure>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedFailure {
    pub n: u32,
    pub alpha: f64,
    pub reason: String,
}

/// `dF/dalpha` at fixed state: the dilation only enters through the
/// resampling, and `d/dalpha [P_alpha w] = diag(t) P_alpha D w` exactly for
/// the weighted interpolant.
fn residual_alpha_derivative(ops: &OperatorSet, values: &DVector<f64>) -> DVector<f64> {
    let grid = ops.grid();
    let m = grid.dof();
    match ops.mode() {
        SolveMode::FamilyAVForm => {
            // lifted samples of 2v + v^2 with the zero boundary value
            let mut lifted = DVector::zeros(m + 1);
            for i in 0..m {
                lifted[i + 1] = 2.0 * values[i] + values[i] * values[i];
            }
            let deriv = ops.resampling_full() * (ops.differentiation_full() * lifted);
            DVector::from_iterator(
                m,
                (0..m).map(|i| -grid.interior_nodes()[i] * deriv[i + 1]),
            )
        }
        SolveMode::FamilyBUForm => {
            let lifted = values.component_mul(values);
            let deriv = ops.resampling_full() * (ops.differentiation_full() * lifted);
            let mut out = DVector::zeros(m + 1);
            for i in 1..=m {
                out[i] = -grid.nodes()[i] * deriv[i];
            }
            out
        }
    }
}

/// Residual of the extended system: the plain residual stacked with the
/// arclength constraint `<(v, alpha) - (v_prev, alpha_prev), tangent> - ds`.
pub fn extended_residual(
    ops: &OperatorSet,
    values: &DVector<f64>,
    alpha: f64,
    prev_values: &DVector<f64>,
    prev_alpha: f64,
    tangent: &DVector<f64>,
    ds: f64,
) -> Result<DVector<f64>> {
    if tangent.len() != values.len() + 1 || prev_values.len() != values.len() {
        return Err(Error::Dimension {
            expected: values.len() + 1,
            got: tangent.len(),
        });
    }
    let r = residual(ops, values)?;
    let mut out = DVector::zeros(values.len() + 1);
    out.rows_mut(0, values.len()).copy_from(&r);
    let mut constraint = -ds;
    for i in 0..values.len() {
        constraint += (values[i] - prev_values[i]) * tangent[i];
    }
    constraint += (alpha - prev_alpha) * tangent[values.len()];
    out[values.len()] = constraint;
    Ok(out)
}

/// Bordered Jacobian of the extended system.
pub fn extended_jacobian(
    ops: &OperatorSet,
    values: &DVector<f64>,
    tangent: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let dim = values.len();
    let j = jacobian(ops, values)?;
    let f_alpha = residual_alpha_derivative(ops, values);
    let mut b = DMatrix::zeros(dim + 1, dim + 1);
    b.view_mut((0, 0), (dim, dim)).copy_from(&j);
    for i in 0..dim {
        b[(i, dim)] = f_alpha[i];
    }
    for i in 0..=dim {
        b[(dim, i)] = tangent[i];
    }
    Ok(b)
}

/// Unit tangent at a point, oriented to keep a positive inner product with
/// the reference direction.
fn compute_tangent(
    grid: &Grid,
    mode: SolveMode,
    values: &DVector<f64>,
    alpha: f64,
    reference: &DVector<f64>,
) -> Result<DVector<f64>> {
    let ops = OperatorSet::new(grid, alpha, mode)?;
    let b = extended_jacobian(&ops, values, reference)?;
    let dim = values.len();
    let mut rhs = DVector::zeros(dim + 1);
    rhs[dim] = 1.0;
    let tangent = b
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Degeneracy("singular bordered system for tangent".into()))?;
    let norm = tangent.norm();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::Degeneracy("tangent normalization failed".into()));
    }
    Ok(tangent / norm)
}

struct CorrectorOutcome {
    values: DVector<f64>,
    alpha: f64,
    iterations: usize,
}

fn correct(
    grid: &Grid,
    mode: SolveMode,
    predictor: (&DVector<f64>, f64),
    prev: (&DVector<f64>, f64),
    tangent: &DVector<f64>,
    ds: f64,
    controls: &ContinuationControls,
) -> Option<CorrectorOutcome> {
    let dim = predictor.0.len();
    let mut values = predictor.0.clone();
    let mut alpha = predictor.1;
    for it in 0..controls.max_corrector_iterations {
        if !(alpha > 1.0) {
            return None;
        }
        let ops = OperatorSet::new(grid, alpha, mode).ok()?;
        let r = extended_residual(&ops, &values, alpha, prev.0, prev.1, tangent, ds).ok()?;
        let r_norm = r.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if r_norm <= controls.newton_tol {
            return Some(CorrectorOutcome {
                values,
                alpha,
                iterations: it,
            });
        }
        let b = extended_jacobian(&ops, &values, tangent).ok()?;
        let delta = b.lu().solve(&(-r))?;
        if !delta.iter().all(|d| d.is_finite()) {
            return None;
        }
        for i in 0..dim {
            values[i] += delta[i];
        }
        alpha += delta[dim];
    }
    None
}

/// Verification applied to every accepted point: the plain residual and the
/// moment identity at its own alpha.
fn verify_point(
    grid: &Grid,
    mode: SolveMode,
    values: &DVector<f64>,
    alpha: f64,
    controls: &ContinuationControls,
) -> bool {
    let Ok(ops) = OperatorSet::new(grid, alpha, mode) else {
        return false;
    };
    let Ok(r) = residual(&ops, values) else {
        return false;
    };
    let r_norm = r.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if r_norm > controls.verify_tol {
        return false;
    }
    let slice: Vec<f64> = values.iter().copied().collect();
    let deviation = match mode {
        SolveMode::FamilyAVForm => slice,
        SolveMode::FamilyBUForm => return true, // identity is a v-form statement
    };
    match moment_identity_gap(grid, alpha, &deviation) {
        Ok(gap) => gap <= controls.moment_tol,
        Err(_) => false,
    }
}

fn branch_point(
    grid: &Grid,
    values: &DVector<f64>,
    alpha: f64,
    tangent: &DVector<f64>,
    step: f64,
) -> Result<BranchPoint> {
    let slice: Vec<f64> = values.iter().copied().collect();
    let norm = grid.quadrature_norm(&slice)?;
    let classification = classify(grid, &slice).unwrap_or(Classification::Trivial);
    let moment_gap = moment_identity_gap(grid, alpha, &slice)?;
    Ok(BranchPoint {
        alpha,
        values: slice,
        norm_sq: norm * norm,
        classification,
        tangent: tangent.iter().copied().collect(),
        step,
        moment_gap,
    })
}

/// Traces one direction from a converged seed. `direction` picks the initial
/// orientation of the tangent along increasing (+1) or decreasing (-1) alpha.
pub fn trace_branch(
    grid: &Grid,
    seed: &SolveResult,
    alpha_range: (f64, f64),
    direction: f64,
    controls: &ContinuationControls,
) -> Result<Branch> {
    if !seed.converged {
        return Err(Error::Domain("branch seed must be converged".into()));
    }
    let mode = seed.mode;
    let dim = seed.values.len();
    let mut values = DVector::from_vec(seed.values.clone());
    let mut alpha = seed.alpha;

    let mut reference = DVector::zeros(dim + 1);
    reference[dim] = direction.signum();
    let mut tangent = compute_tangent(grid, mode, &values, alpha, &reference)?;

    let mut points = vec![branch_point(grid, &values, alpha, &tangent, 0.0)?];
    let mut folds = Vec::new();
    let mut ds = controls.ds0;
    let mut status = BranchStatus::MaxSteps;

    for _ in 0..controls.max_steps {
        // predictor
        let mut pred_values = values.clone();
        for i in 0..dim {
            pred_values[i] += ds * tangent[i];
        }
        let pred_alpha = alpha + ds * tangent[dim];

        let outcome = correct(
            grid,
            mode,
            (&pred_values, pred_alpha),
            (&values, alpha),
            &tangent,
            ds,
            controls,
        );
        let Some(outcome) = outcome else {
            ds *= 0.5;
            if ds < controls.ds_min {
                status = BranchStatus::StepUnderflow;
                break;
            }
            continue;
        };

        // step bound and verification gate
        let mut dist = (outcome.alpha - alpha).abs();
        dist += (0..dim)
            .map(|i| (outcome.values[i] - values[i]).powi(2))
            .sum::<f64>()
            .sqrt();
        let ok = dist <= 2.0 * ds
            && verify_point(grid, mode, &outcome.values, outcome.alpha, controls);
        if !ok {
            ds *= 0.5;
            if ds < controls.ds_min {
                status = BranchStatus::StepUnderflow;
                break;
            }
            continue;
        }

        let new_tangent =
            match compute_tangent(grid, mode, &outcome.values, outcome.alpha, &tangent) {
                Ok(t) => t,
                Err(_) => {
                    ds *= 0.5;
                    if ds < controls.ds_min {
                        status = BranchStatus::StepUnderflow;
                        break;
                    }
                    continue;
                }
            };

        // fold: the alpha component of the unit tangent changes sign
        if tangent[dim] * new_tangent[dim] < 0.0 {
            if let Some(fold_alpha) = refine_fold(
                grid,
                mode,
                (&values, alpha),
                &tangent,
                ds,
                controls,
            ) {
                folds.push(fold_alpha);
            } else {
                // fall back to the bracket midpoint
                folds.push(0.5 * (alpha + outcome.alpha));
            }
        }

        let accepted = branch_point(grid, &outcome.values, outcome.alpha, &new_tangent, ds)?;
        let trivial_now = accepted.classification == Classification::Trivial;
        let trivial_prev = points
            .last()
            .map(|p| p.classification == Classification::Trivial)
            .unwrap_or(false);
        values = outcome.values;
        alpha = outcome.alpha;
        tangent = new_tangent;
        points.push(accepted);

        if trivial_now && trivial_prev {
            status = BranchStatus::CollapsedToTrivial;
            break;
        }
        if alpha < alpha_range.0 || alpha > alpha_range.1 {
            status = BranchStatus::RangeExit;
            break;
        }
        if outcome.iterations <= 3 {
            ds = (2.0 * ds).min(controls.ds_max);
        }
    }

    Ok(Branch {
        points,
        seed: Seed::Explicit { alpha: seed.alpha },
        folds,
        status,
    })
}

/// Bisection in arclength from `from`: walks the step fraction until the
/// alpha component of the tangent changes sign within a tight bracket.
fn refine_fold(
    grid: &Grid,
    mode: SolveMode,
    from: (&DVector<f64>, f64),
    tangent: &DVector<f64>,
    ds: f64,
    controls: &ContinuationControls,
) -> Option<f64> {
    let dim = from.0.len();
    let sign_at = |s: f64| -> Option<(f64, f64)> {
        let mut pred = from.0.clone();
        for i in 0..dim {
            pred[i] += s * tangent[i];
        }
        let pred_alpha = from.1 + s * tangent[dim];
        let outcome = correct(grid, mode, (&pred, pred_alpha), from, tangent, s, controls)?;
        let t = compute_tangent(grid, mode, &outcome.values, outcome.alpha, tangent).ok()?;
        Some((t[dim], outcome.alpha))
    };
    let mut lo = 0.0f64;
    let mut lo_sign = tangent[dim];
    let mut lo_alpha = from.1;
    let mut hi = ds;
    let (hi_sign, mut hi_alpha) = sign_at(ds)?;
    if lo_sign * hi_sign > 0.0 {
        return None;
    }
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        let (s_mid, a_mid) = sign_at(mid)?;
        if s_mid * lo_sign > 0.0 {
            lo = mid;
            lo_sign = s_mid;
            lo_alpha = a_mid;
        } else {
            hi = mid;
            hi_alpha = a_mid;
        }
        if (hi_alpha - lo_alpha).abs() < 1e-6 || (hi - lo) < 1e-4 * ds {
            break;
        }
    }
    Some(0.5 * (lo_alpha + hi_alpha))
}

/// Fold estimates from stored branch data alone: sign changes of the alpha
/// tangent component, located by inverse interpolation between the two
/// bracketing points.
pub fn detect_folds(branch: &Branch) -> Vec<f64> {
    let mut folds = Vec::new();
    if branch.points.len() < 3 {
        return folds;
    }
    for pair in branch.points.windows(2) {
        let a = pair[0].tangent_alpha();
        let b = pair[1].tangent_alpha();
        if a * b < 0.0 {
            let w = a.abs() / (a.abs() + b.abs());
            folds.push(pair[0].alpha + w * (pair[1].alpha - pair[0].alpha));
        }
    }
    folds
}

/// Builds the family atlas: for each requested characteristic index, seeds
/// from the first-order perturbation on both sides, refines with Newton, and
/// traces in both directions. Branches that retrace one another are merged
/// away; individual seed failures are recorded and the atlas goes on.
pub fn atlas(
    grid: &Grid,
    n_values: &[u32],
    epsilon_seed: f64,
    alpha_window: (f64, f64),
    controls: &ContinuationControls,
) -> Result<Atlas> {
    if !(alpha_window.0 < alpha_window.1) {
        return Err(Error::Config(format!(
            "degenerate alpha window [{}, {}]",
            alpha_window.0, alpha_window.1
        )));
    }
    if !(epsilon_seed > 0.0) {
        return Err(Error::Config("seed offset must be positive".into()));
    }
    let mut branches: Vec<Branch> = Vec::new();
    let mut seed_failures = Vec::new();
    let newton = NewtonSettings {
        tolerance: controls.newton_tol,
        max_iterations: 25,
    };

    for &n in n_values {
        let model = match PerturbationModel::new(n) {
            Ok(m) => m,
            Err(e) => {
                seed_failures.push(SeedFailure {
                    n,
                    alpha: f64::NAN,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let alpha_n = model.alpha_f64();
        if alpha_n < alpha_window.0 - epsilon_seed || alpha_n > alpha_window.1 + epsilon_seed {
            continue;
        }
        for sign in [1.0f64, -1.0] {
            let eps = sign * epsilon_seed;
            let alpha_seed = alpha_n + eps;
            if alpha_seed <= 1.0
                || alpha_seed < alpha_window.0 - epsilon_seed
                || alpha_seed > alpha_window.1 + epsilon_seed
            {
                continue;
            }
            let seeded = seed_solution(grid, &model, eps, alpha_seed, &newton);
            let seed_result = match seeded {
                Ok(r) => r,
                Err(reason) => {
                    seed_failures.push(SeedFailure {
                        n,
                        alpha: alpha_seed,
                        reason,
                    });
                    continue;
                }
            };
            let mut combined: Option<Branch> = None;
            for direction in [1.0f64, -1.0] {
                match trace_branch(grid, &seed_result, alpha_window, direction, controls) {
                    Ok(candidate) => {
                        combined = Some(match combined {
                            None => candidate,
                            Some(existing) => merge_traces(existing, candidate),
                        });
                    }
                    Err(e) => seed_failures.push(SeedFailure {
                        n,
                        alpha: alpha_seed,
                        reason: e.to_string(),
                    }),
                }
            }
            if let Some(mut branch) = combined {
                branch.seed = Seed::Perturbation { n, epsilon: eps };
                branches.push(branch);
            }
        }
    }

    dedup_branches(grid, &mut branches, controls);
    Ok(Atlas {
        branches,
        alpha_window,
        n_values: n_values.to_vec(),
        seed_failures,
    })
}

fn seed_solution(
    grid: &Grid,
    model: &PerturbationModel,
    eps: f64,
    alpha_seed: f64,
    newton: &NewtonSettings,
) -> std::result::Result<SolveResult, String> {
    let guess = model
        .guess(eps, grid.interior_nodes())
        .map_err(|e| e.to_string())?;
    let ops = OperatorSet::new(grid, alpha_seed, SolveMode::FamilyAVForm)
        .map_err(|e| e.to_string())?;
    let res = newton_solve(&ops, &DVector::from_vec(guess), newton).map_err(|e| e.to_string())?;
    if !res.converged {
        return Err(format!(
            "newton did not converge from the perturbation guess (residual {:.3e})",
            res.residual_norm
        ));
    }
    if res.classification == Classification::Trivial {
        return Err("seed collapsed to the constant solution".into());
    }
    Ok(res)
}

/// Joins the backward trace (reversed) with the forward trace at the shared
/// seed point. Tangents of the reversed half flip so the whole curve is
/// oriented consistently.
fn merge_traces(forward: Branch, backward: Branch) -> Branch {
    let mut points: Vec<BranchPoint> = backward
        .points
        .into_iter()
        .skip(1)
        .rev()
        .map(|mut p| {
            for t in &mut p.tangent {
                *t = -*t;
            }
            p
        })
        .collect();
    points.extend(forward.points);
    let mut folds = backward.folds;
    folds.extend(forward.folds);
    folds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    folds.dedup_by(|a, b| (*a - *b).abs() < 1e-4);
    Branch {
        points,
        seed: forward.seed,
        folds,
        status: forward.status,
    }
}

/// Relative max-norm distance between two states.
fn state_distance(a: &[f64], b: &[f64]) -> f64 {
    let scale = a
        .iter()
        .chain(b)
        .fold(0.0f64, |acc, &v| acc.max(v.abs()))
        .max(1e-12);
    a.iter()
        .zip(b)
        .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
        / scale
}

/// Two branches are duplicates when re-solving both at a shared alpha from
/// their nearest stored points lands on the same state.
fn dedup_branches(grid: &Grid, branches: &mut Vec<Branch>, controls: &ContinuationControls) {
    let newton = NewtonSettings {
        tolerance: controls.newton_tol,
        max_iterations: 25,
    };
    let mut keep: Vec<Branch> = Vec::new();
    'candidates: for branch in branches.drain(..) {
        for kept in &keep {
            let (lo_a, hi_a) = branch.alpha_range();
            let (lo_b, hi_b) = kept.alpha_range();
            let lo = lo_a.max(lo_b);
            let hi = hi_a.min(hi_b);
            if lo >= hi {
                continue;
            }
            let probe = 0.5 * (lo + hi);
            let sa = resolve_on_branch(grid, &branch, probe, &newton);
            let sb = resolve_on_branch(grid, kept, probe, &newton);
            if let (Some(sa), Some(sb)) = (sa, sb) {
                if state_distance(&sa.values, &sb.values) <= 1e-6 {
                    // retraced curve; keep the longer one
                    if branch.points.len() > kept.points.len() {
                        let idx = keep
                            .iter()
                            .position(|k| std::ptr::eq(k, kept))
                            .expect("kept branch present");
                        keep[idx] = branch;
                    }
                    continue 'candidates;
                }
            }
        }
        keep.push(branch);
    }
    *branches = keep;
}

/// Fixed-alpha Newton re-solve seeded from the branch's nearest stored
/// segment. Returns converged nonconstant intersections; near a zero-norm
/// crossing of a characteristic value the constant solution itself is the
/// intersection and is returned as such.
fn resolve_on_branch(
    grid: &Grid,
    branch: &Branch,
    alpha: f64,
    newton: &NewtonSettings,
) -> Option<SolveResult> {
    // nearest bracketing pair, or nearest single point at the ends
    let mut best: Option<(f64, DVector<f64>)> = None;
    for pair in branch.points.windows(2) {
        let (a0, a1) = (pair[0].alpha, pair[1].alpha);
        if (alpha - a0) * (alpha - a1) <= 0.0 && (a1 - a0).abs() > 1e-14 {
            let w = (alpha - a0) / (a1 - a0);
            let v = DVector::from_iterator(
                pair[0].values.len(),
                pair[0]
                    .values
                    .iter()
                    .zip(&pair[1].values)
                    .map(|(x, y)| x + w * (y - x)),
            );
            let dist = 0.0;
            best = Some((dist, v));
            break;
        }
    }
    if best.is_none() {
        let nearest = branch
            .points
            .iter()
            .min_by(|a, b| {
                (a.alpha - alpha)
                    .abs()
                    .partial_cmp(&(b.alpha - alpha).abs())
                    .unwrap()
            })?;
        if (nearest.alpha - alpha).abs() > 0.05 {
            return None;
        }
        best = Some((0.0, DVector::from_vec(nearest.values.clone())));
    }
    let (_, seed) = best?;
    resolve_candidate(grid, seed, alpha, newton)
}

/// Intersects every branch with the vertical line at `alpha`, re-solving at
/// fixed alpha from the nearest branch data and deduplicating by state
/// distance.
pub fn solutions_at(
    atlas: &Atlas,
    grid: &Grid,
    alpha: f64,
    controls: &ContinuationControls,
) -> Vec<SolveResult> {
    let newton = NewtonSettings {
        tolerance: controls.newton_tol,
        max_iterations: 25,
    };
    let mut found: Vec<SolveResult> = Vec::new();
    for branch in &atlas.branches {
        // each bracketing segment is a separate candidate: a folded branch
        // crosses a vertical line more than once
        let mut segment_seeds: Vec<DVector<f64>> = Vec::new();
        for pair in branch.points.windows(2) {
            let (a0, a1) = (pair[0].alpha, pair[1].alpha);
            if (alpha - a0) * (alpha - a1) <= 0.0 && (a1 - a0).abs() > 1e-14 {
                let w = (alpha - a0) / (a1 - a0);
                segment_seeds.push(DVector::from_iterator(
                    pair[0].values.len(),
                    pair[0]
                        .values
                        .iter()
                        .zip(&pair[1].values)
                        .map(|(x, y)| x + w * (y - x)),
                ));
            }
        }
        for seed in segment_seeds {
            let candidate = resolve_candidate(grid, seed, alpha, &newton);
            if let Some(res) = candidate {
                let duplicate = found
                    .iter()
                    .any(|f| state_distance(&f.values, &res.values) <= 1e-6);
                if !duplicate {
                    found.push(res);
                }
            }
        }
    }
    found
}

fn trivial_result(grid: &Grid, alpha: f64, dim: usize) -> SolveResult {
    SolveResult {
        alpha,
        mode: SolveMode::FamilyAVForm,
        nodes: grid.interior_nodes().to_vec(),
        values: vec![0.0; dim],
        residual_norm: 0.0,
        iterations: 0,
        converged: true,
        classification: Classification::Trivial,
        residual_history: vec![0.0],
        failure: None,
    }
}

fn resolve_candidate(
    grid: &Grid,
    seed: DVector<f64>,
    alpha: f64,
    newton: &NewtonSettings,
) -> Option<SolveResult> {
    let ops = OperatorSet::new(grid, alpha, SolveMode::FamilyAVForm).ok()?;
    let max_guess = seed.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let res = newton_solve(&ops, &seed, newton).ok()?;
    if res.converged {
        // near a characteristic crossing the Jacobian turns singular and
        // Newton can stall on a tiny nullspace remnant; the intersection
        // there is the constant solution, which solves the system exactly
        let max_val = res.values.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if max_val <= 1e-4 && max_val > 0.0 {
            return Some(trivial_result(grid, alpha, seed.len()));
        }
        return Some(res);
    }
    if max_guess < 1e-2 {
        return Some(trivial_result(grid, alpha, seed.len()));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detect_folds_on_synthetic_circle() {
        // states parameterized on a circle: tangent alpha-component changes
        // sign exactly twice
        let mut points = Vec::new();
        let samples = 40usize;
        for i in 0..samples {
            let s = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / samples as f64;
            // states (v, alpha) = (cos s, 2 + sin s); tangent (-sin s, cos s)
            let tangent = vec![-s.sin(), s.cos()];
            points.push(BranchPoint {
                alpha: 2.0 + s.sin(),
                values: vec![s.cos()],
                norm_sq: s.cos() * s.cos(),
                classification: Classification::Plus,
                tangent,
                step: 0.1,
                moment_gap: 0.0,
            });
        }
        let branch = Branch {
            points,
            seed: Seed::Explicit { alpha: 2.0 },
            folds: vec![],
            status: BranchStatus::MaxSteps,
        };
        let folds = detect_folds(&branch);
        assert_eq!(folds.len(), 2, "{folds:?}");
        // the sine tangent flips at alpha = 3 and alpha = 1
        assert!(folds.iter().any(|a| (a - 3.0).abs() < 0.05));
        assert!(folds.iter().any(|a| (a - 1.0).abs() < 0.05));
    }

    #[test]
    fn detect_folds_needs_points() {
        let branch = Branch {
            points: vec![],
            seed: Seed::Explicit { alpha: 2.0 },
            folds: vec![],
            status: BranchStatus::MaxSteps,
        };
        assert!(detect_folds(&branch).is_empty());
    }

    #[test]
    fn atlas_rejects_degenerate_window() {
        let grid = crate::discretization::truncated_grid(64, 2.0).unwrap();
        let controls = ContinuationControls::default();
        assert!(atlas(&grid, &[1], 0.01, (2.0, 2.0), &controls).is_err());
        assert!(atlas(&grid, &[1], 0.0, (1.5, 2.5), &controls).is_err());
    }
}

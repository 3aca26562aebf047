//! Truncated Laguerre collocation infrastructure.
//!
//! Functions are represented as `v(t) = e^(-t) p(t)` with `p` the polynomial
//! interpolant through `t = 0` and the nodes of the full `N`-point
//! Gauss-Laguerre rule. Unknowns live on the first `ceil(M sqrt(N))` nodes
//! (plus the boundary); samples beyond the truncation point are dropped as
//! zero, which is what the exponential decay of the target functions makes of
//! them anyway. Keeping the far nodes in the barycentric data is essential:
//! the weighted cardinal functions of the kept nodes alone grow out of the
//! f64 range, while those of the full rule stay moderate.
//!
//! All barycentric weights and exponential prefactors combine in log space;
//! a combined exponent beyond the f64 range is a construction error rather
//! than a silent infinity.

mod laguerre;

pub use laguerre::gauss_laguerre;

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Largest exponent fed to `exp` when assembling matrix entries.
const EXP_LIMIT: f64 = 700.0;

/// Tolerance for treating a query point as exactly on a node.
const NODE_HIT: f64 = 1e-14;

/// A differentiation row built from the kept nodes switches to the full-rule
/// reconstruction once its coefficients exceed this magnitude; beyond it,
/// f64 cancellation noise outweighs the full rule's truncation deficit.
const DIFF_ROW_LIMIT: f64 = 1e4;

/// Same switch for evaluation (resampling/interpolation) rows, whose noise
/// budget is tighter because their exponents are not pairwise-refined.
const EVAL_ROW_LIMIT: f64 = 50.0;

/// Truncated Laguerre grid: `t_0 = 0` plus the first `ceil(M sqrt(N))` nodes
/// of the `N`-point Gauss-Laguerre rule, with their quadrature weights. The
/// remaining nodes of the rule stay inside as interpolation support.
///
/// Two reconstructions of a function from its kept samples coexist: the
/// kept-node interpolant (exact on the weighted polynomial span of the kept
/// nodes, but with cardinal functions that overflow f64 toward the truncation
/// boundary) and the full-rule interpolant with dropped far samples (tame
/// cardinals everywhere, but a truncation deficit where the far nodes carry
/// influence). Every operator row uses whichever reconstruction keeps its
/// coefficients small enough for f64 ([`DIFF_ROW_LIMIT`], [`EVAL_ROW_LIMIT`]).
#[derive(Debug, Clone)]
pub struct Grid {
    n_full: usize,
    trunc_mult: f64,
    /// Number of kept Laguerre nodes (`dof`); kept nodes are
    /// `all_nodes[1..=m]`, far support nodes are `all_nodes[m+1..]`.
    m: usize,
    /// `0, x_1, ..., x_N`: boundary plus the full rule.
    all_nodes: Vec<f64>,
    /// `eta_j = sum_{k != j} ln |t_j - t_k|` over all nodes.
    eta: Vec<f64>,
    /// Sign of `prod_{k != j} (t_j - t_k)` over all nodes.
    sign: Vec<f64>,
    /// `eta` restricted to the collocation nodes (boundary plus kept).
    eta_kept: Vec<f64>,
    /// Signs over the collocation nodes.
    sign_kept: Vec<f64>,
    /// Gauss-Laguerre weights paired with kept nodes `1..=m`.
    quad_weights: Vec<f64>,
    /// `w_i e^{t_i}`: weights for integrating plain samples on kept nodes.
    eff_weights: Vec<f64>,
    /// Hybrid differentiation matrix on the collocation nodes; built once,
    /// independent of the dilation parameter.
    d_matrix: DMatrix<f64>,
}

/// Keeps the first `ceil(M sqrt(N))` nodes of the `N`-point rule, prepends
/// `t = 0`, and attaches the matching quadrature weights.
pub fn truncated_grid(n: usize, trunc_mult: f64) -> Result<Grid> {
    if !(trunc_mult > 0.0) {
        return Err(Error::Config(format!(
            "truncation multiplier must be positive, got {trunc_mult}"
        )));
    }
    let m = (trunc_mult * (n as f64).sqrt()).ceil() as usize;
    if m > n {
        return Err(Error::Config(format!(
            "truncated size ceil(M sqrt(N)) = {m} exceeds N = {n}"
        )));
    }
    let full = laguerre::nodes_scaled(n)?;
    let mut all_nodes = Vec::with_capacity(n + 1);
    all_nodes.push(0.0);
    all_nodes.extend(full.iter().map(|p| p.x));

    let mut quad_weights = Vec::with_capacity(m);
    let mut eff_weights = Vec::with_capacity(m);
    for p in &full[..m] {
        let w = p.ln_w.exp();
        if !(w > 0.0) {
            return Err(Error::Construction(format!(
                "quadrature weight underflows at node t = {}",
                p.x
            )));
        }
        quad_weights.push(w);
        eff_weights.push((p.ln_w + p.x).exp());
    }

    let eta = log_distance_sums(&all_nodes);
    let eta_kept = log_distance_sums(&all_nodes[..=m]);
    // ascending nodes: one negative factor per node above t_j
    let count = all_nodes.len();
    let sign: Vec<f64> = (0..count)
        .map(|j| if (count - 1 - j) % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    let sign_kept: Vec<f64> = (0..=m)
        .map(|j| if (m - j) % 2 == 0 { 1.0 } else { -1.0 })
        .collect();

    let mut grid = Grid {
        n_full: n,
        trunc_mult,
        m,
        all_nodes,
        eta,
        sign,
        eta_kept,
        sign_kept,
        quad_weights,
        eff_weights,
        d_matrix: DMatrix::zeros(0, 0),
    };
    grid.d_matrix = build_differentiation(&grid)?;
    Ok(grid)
}

/// `eta_j = sum_{k != j} ln |t_j - t_k|`, compensated to keep the absolute
/// rounding well below the exp-argument sensitivity.
fn log_distance_sums(nodes: &[f64]) -> Vec<f64> {
    let count = nodes.len();
    let mut eta = vec![0.0f64; count];
    for j in 0..count {
        let mut acc = 0.0f64;
        let mut comp = 0.0f64;
        for k in 0..count {
            if k == j {
                continue;
            }
            let term = (nodes[j] - nodes[k]).abs().ln();
            let y = term - comp;
            let t = acc + y;
            comp = (t - acc) - y;
            acc = t;
        }
        eta[j] = acc;
    }
    eta
}

impl Grid {
    pub fn n_full(&self) -> usize {
        self.n_full
    }

    pub fn trunc_mult(&self) -> f64 {
        self.trunc_mult
    }

    /// Interior unknowns after boundary removal.
    pub fn dof(&self) -> usize {
        self.m
    }

    /// Collocation nodes: `t_0 = 0` plus the kept Laguerre nodes.
    pub fn nodes(&self) -> &[f64] {
        &self.all_nodes[..=self.m]
    }

    pub fn interior_nodes(&self) -> &[f64] {
        &self.all_nodes[1..=self.m]
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    /// Largest kept node.
    pub fn max_node(&self) -> f64 {
        self.all_nodes[self.m]
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.m {
            return Err(Error::Dimension {
                expected: self.m,
                got: len,
            });
        }
        Ok(())
    }

    /// `integral f(t) dt` from samples on the kept interior nodes
    /// (Gauss-Laguerre with the weight factored back out).
    pub fn quadrature_integral(&self, values: &[f64]) -> Result<f64> {
        self.check_len(values.len())?;
        Ok(self
            .eff_weights
            .iter()
            .zip(values)
            .map(|(w, v)| w * v)
            .sum())
    }

    /// `sqrt(integral f(t)^2 dt)` from samples on the kept interior nodes.
    pub fn quadrature_norm(&self, values: &[f64]) -> Result<f64> {
        self.check_len(values.len())?;
        Ok(self
            .eff_weights
            .iter()
            .zip(values)
            .map(|(w, v)| w * v * v)
            .sum::<f64>()
            .max(0.0)
            .sqrt())
    }

    /// Weighted barycentric evaluation from samples on the interior nodes.
    /// The interpolation support excludes `t = 0` (so the boundary residual
    /// of a solve stays observable). Queries beyond 1.2x the last kept node
    /// are flagged.
    pub fn interpolate(&self, values: &[f64], t_query: f64) -> Result<f64> {
        self.check_len(values.len())?;
        if !(t_query >= 0.0) {
            return Err(Error::Domain(format!("t must be >= 0, got {t_query}")));
        }
        if t_query > 1.2 * self.max_node() {
            log::warn!(
                "interpolating at t = {t_query}, beyond 1.2x the last kept node {}; extrapolation quality degrades",
                self.max_node()
            );
        }
        let row = self.evaluation_row(t_query, false)?;
        Ok(row.iter().zip(values).map(|(c, v)| c * v).sum())
    }

    /// Same, with `values` covering every collocation node including `t = 0`.
    pub fn interpolate_with_boundary(&self, values: &[f64], t_query: f64) -> Result<f64> {
        if values.len() != self.m + 1 {
            return Err(Error::Dimension {
                expected: self.m + 1,
                got: values.len(),
            });
        }
        if !(t_query >= 0.0) {
            return Err(Error::Domain(format!("t must be >= 0, got {t_query}")));
        }
        let row = self.evaluation_row(t_query, true)?;
        Ok(row.iter().zip(values).map(|(c, v)| c * v).sum())
    }

    /// Coefficients evaluating the weighted interpolant of the collocation
    /// samples at `q`. Prefers the kept-node reconstruction; falls back to
    /// the full-rule reconstruction when the kept cardinals exceed the entry
    /// limit. Row length is `m + 1` with, or `m` without, the boundary node.
    fn evaluation_row(&self, q: f64, include_boundary: bool) -> Result<Vec<f64>> {
        if let Some(row) = self.eval_row_kept(q, include_boundary) {
            return Ok(row);
        }
        self.eval_row_full(q, include_boundary)
    }

    fn support_eta(&self, k: usize, include_boundary: bool, kept: bool) -> f64 {
        let base = if kept { self.eta_kept[k] } else { self.eta[k] };
        if include_boundary || k == 0 {
            base
        } else {
            base - self.all_nodes[k].ln()
        }
    }

    /// First-form (modified Lagrange) weighted cardinal row over a support
    /// slice: `c_j = e^{t_j - q} prod_{k != j} (q - t_k) / (t_j - t_k)`, all
    /// magnitudes in log space. The second barycentric form is unusable on
    /// the kept subset: its denominator cancels below f64 resolution at
    /// interior query points.
    fn first_form_row(
        &self,
        q: f64,
        include_boundary: bool,
        kept: bool,
    ) -> Result<Option<Vec<f64>>> {
        let first = usize::from(!include_boundary);
        let last = if kept {
            self.m
        } else {
            self.all_nodes.len() - 1
        };
        let width = self.m + 1 - first;
        for k in first..=last {
            let node = self.all_nodes[k];
            if (q - node).abs() <= NODE_HIT * node.abs().max(1.0) {
                let mut row = vec![0.0; width];
                if k <= self.m {
                    row[k - first] = (node - q).exp();
                }
                return Ok(Some(row));
            }
        }
        // S = sum_k ln |q - t_k| over the support, compensated
        let mut s_sum = 0.0f64;
        let mut comp = 0.0f64;
        let mut count_above = 0usize;
        for k in first..=last {
            let node = self.all_nodes[k];
            let term = (q - node).abs().ln();
            let y = term - comp;
            let t = s_sum + y;
            comp = (t - s_sum) - y;
            s_sum = t;
            if node > q {
                count_above += 1;
            }
        }
        let omega_sign = if count_above % 2 == 0 { 1.0 } else { -1.0 };
        let support_sign = |k: usize| -> f64 {
            // sign of prod_{j != k, j in support} (t_k - t_j): one negative
            // factor per support node above t_k
            let above = last - k;
            if above % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        };
        let mut row = vec![0.0; width];
        let mut worst = 0.0f64;
        for k in first..=self.m {
            let node = self.all_nodes[k];
            let eta = self.support_eta(k, include_boundary, kept);
            let expo = s_sum - (q - node).abs().ln() - eta + node - q;
            if expo > EXP_LIMIT {
                return Err(Error::Construction(format!(
                    "evaluation entry exponent {expo:.1} overflows at node t = {node}, query t = {q}"
                )));
            }
            let sign = omega_sign * (q - node).signum() * support_sign(k);
            row[k - first] = sign * expo.exp();
            worst = worst.max(row[k - first].abs());
        }
        if kept && worst > EVAL_ROW_LIMIT {
            return Ok(None);
        }
        Ok(Some(row))
    }

    fn eval_row_kept(&self, q: f64, include_boundary: bool) -> Option<Vec<f64>> {
        self.first_form_row(q, include_boundary, true)
            .ok()
            .flatten()
    }

    fn eval_row_full(&self, q: f64, include_boundary: bool) -> Result<Vec<f64>> {
        self.first_form_row(q, include_boundary, false)?
            .ok_or_else(|| Error::Construction("full evaluation row unavailable".into()))
    }
}

/// Differentiation matrix of the plain polynomial interpolant through the
/// collocation nodes alone (boundary plus kept nodes). Row sums vanish by
/// construction. This is a diagnostic view of the nodes; the solver operator
/// comes from [`differentiation_matrix`].
pub fn polynomial_differentiation_matrix(grid: &Grid) -> Result<DMatrix<f64>> {
    let nodes = grid.nodes();
    let n = nodes.len();
    let mut eta = vec![0.0f64; n];
    for j in 0..n {
        let mut acc = 0.0;
        for k in 0..n {
            if k != j {
                acc += (nodes[j] - nodes[k]).abs().ln();
            }
        }
        eta[j] = acc;
    }
    let sign = |j: usize| if (n - 1 - j) % 2 == 0 { 1.0 } else { -1.0 };
    let mut d = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            let expo = eta[i] - eta[j];
            if expo.abs() > EXP_LIMIT {
                return Err(Error::Construction(format!(
                    "differentiation entry exponent {expo:.1} overflows between nodes {} and {}",
                    nodes[i], nodes[j]
                )));
            }
            let entry = sign(i) * sign(j) * expo.exp() / (nodes[i] - nodes[j]);
            d[(i, j)] = entry;
            diag -= entry;
        }
        d[(i, i)] = diag;
    }
    Ok(d)
}

/// Differentiation matrix for the weighted interpolant `v = e^(-t) p(t)` on
/// the collocation nodes, `D = (e^{t_j - t_i}) o D_p - I`. Each row uses the
/// kept-node reconstruction while its coefficients stay representable, and
/// the full-rule reconstruction beyond that. The caller removes the boundary
/// row and column when the boundary value is pinned.
pub fn differentiation_matrix(grid: &Grid) -> Result<DMatrix<f64>> {
    Ok(grid.d_matrix.clone())
}

fn build_differentiation(grid: &Grid) -> Result<DMatrix<f64>> {
    let n = grid.m + 1;
    let mut d = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let row = match diff_row_kept(grid, i) {
            Some(row) => row,
            None => diff_row_full(grid, i)?,
        };
        for j in 0..n {
            d[(i, j)] = row[j];
        }
    }
    Ok(d)
}

/// `eta_i - eta_j` over the kept support, summed pairwise as log ratios so
/// the result carries the rounding of its own small magnitude instead of the
/// rounding of two large sums.
fn eta_diff_kept(grid: &Grid, i: usize, j: usize) -> f64 {
    let ti = grid.all_nodes[i];
    let tj = grid.all_nodes[j];
    let mut acc = 0.0f64;
    let mut comp = 0.0f64;
    for k in 0..=grid.m {
        if k == i || k == j {
            continue;
        }
        let tk = grid.all_nodes[k];
        let term = ((ti - tk) / (tj - tk)).abs().ln();
        let y = term - comp;
        let t = acc + y;
        comp = (t - acc) - y;
        acc = t;
    }
    acc
}

fn diff_row_kept(grid: &Grid, i: usize) -> Option<Vec<f64>> {
    let n = grid.m + 1;
    let ti = grid.all_nodes[i];
    let mut row = vec![0.0; n];
    let mut diag = 0.0;
    for k in 0..n {
        if k != i {
            diag += 1.0 / (ti - grid.all_nodes[k]);
        }
    }
    row[i] = diag - 1.0;
    let mut worst = row[i].abs();
    for j in 0..n {
        if i == j {
            continue;
        }
        let tj = grid.all_nodes[j];
        // cheap screen with the precomputed sums, exact pairwise thereafter
        let rough = grid.eta_kept[i] - grid.eta_kept[j] + tj - ti;
        if rough.abs() > EXP_LIMIT {
            return None;
        }
        if rough > (DIFF_ROW_LIMIT.ln() + 3.0).max(20.0) {
            return None;
        }
        let expo = eta_diff_kept(grid, i, j) + tj - ti;
        row[j] = grid.sign_kept[i] * grid.sign_kept[j] * expo.exp() / (ti - tj);
        worst = worst.max(row[j].abs());
    }
    (worst <= DIFF_ROW_LIMIT).then_some(row)
}

fn diff_row_full(grid: &Grid, i: usize) -> Result<Vec<f64>> {
    let n = grid.m + 1;
    let ti = grid.all_nodes[i];
    let mut row = vec![0.0; n];
    let mut diag = 0.0;
    for k in 0..grid.all_nodes.len() {
        if k != i {
            diag += 1.0 / (ti - grid.all_nodes[k]);
        }
    }
    row[i] = diag - 1.0;
    for j in 0..n {
        if i == j {
            continue;
        }
        let tj = grid.all_nodes[j];
        let expo = grid.eta[i] - grid.eta[j] + tj - ti;
        if expo > EXP_LIMIT {
            return Err(Error::Construction(format!(
                "differentiation entry exponent {expo:.1} overflows between nodes {ti} and {tj}"
            )));
        }
        row[j] = grid.sign[i] * grid.sign[j] * expo.exp() / (ti - tj);
    }
    Ok(row)
}

/// Barycentric resampling matrix on the collocation nodes: applying it to
/// samples of the weighted interpolant yields its values at the dilated
/// points `alpha t_i`. Rows share the hybrid reconstruction rule of
/// [`differentiation_matrix`].
pub fn resampling_matrix(grid: &Grid, alpha: f64) -> Result<DMatrix<f64>> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!(
            "resampling requires alpha > 0, got {alpha}"
        )));
    }
    let n = grid.m + 1;
    let mut p = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let q = alpha * grid.all_nodes[i];
        let row = grid.evaluation_row(q, true)?;
        for j in 0..n {
            p[(i, j)] = row[j];
        }
    }
    Ok(p)
}

/// Which form of the equation the discretized operators target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveMode {
    /// `v' + v = 2 v(alpha t) + v^2(alpha t)`, `v(0) = 0`; boundary row and
    /// column removed, unknowns on interior nodes.
    #[serde(rename = "family_A_v_form")]
    FamilyAVForm,
    /// `u' + u = u^2(alpha t)`, `u(0) = 1`; boundary row replaced by the
    /// boundary equation, unknowns on all collocation nodes.
    #[serde(rename = "family_B_u_form")]
    FamilyBUForm,
}

/// Grid plus the dense operators for one dilation parameter.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    grid: Grid,
    alpha: f64,
    mode: SolveMode,
    /// Mode-sized differentiation matrix (interior block for the v-form).
    d: DMatrix<f64>,
    /// Mode-sized resampling matrix.
    p: DMatrix<f64>,
    /// Differentiation matrix on all collocation nodes.
    d_full: DMatrix<f64>,
    /// Resampling matrix on all collocation nodes.
    p_full: DMatrix<f64>,
}

impl OperatorSet {
    pub fn new(grid: &Grid, alpha: f64, mode: SolveMode) -> Result<Self> {
        if !(alpha > 1.0) {
            return Err(Error::Domain(format!(
                "operator set requires alpha > 1, got {alpha}"
            )));
        }
        let d_full = differentiation_matrix(grid)?;
        let p_full = resampling_matrix(grid, alpha)?;
        let m = grid.dof();
        let (d, p) = match mode {
            SolveMode::FamilyAVForm => (
                d_full.view((1, 1), (m, m)).into_owned(),
                p_full.view((1, 1), (m, m)).into_owned(),
            ),
            SolveMode::FamilyBUForm => (d_full.clone(), p_full.clone()),
        };
        Ok(Self {
            grid: grid.clone(),
            alpha,
            mode,
            d,
            p,
            d_full,
            p_full,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mode(&self) -> SolveMode {
        self.mode
    }

    /// Number of unknowns this operator set acts on.
    pub fn dim(&self) -> usize {
        match self.mode {
            SolveMode::FamilyAVForm => self.grid.dof(),
            SolveMode::FamilyBUForm => self.grid.dof() + 1,
        }
    }

    pub fn differentiation(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn resampling(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn differentiation_full(&self) -> &DMatrix<f64> {
        &self.d_full
    }

    pub fn resampling_full(&self) -> &DMatrix<f64> {
        &self.p_full
    }

    /// Nodes carrying the unknowns for this mode.
    pub fn unknown_nodes(&self) -> &[f64] {
        match self.mode {
            SolveMode::FamilyAVForm => self.grid.interior_nodes(),
            SolveMode::FamilyBUForm => self.grid.nodes(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn default_grid() -> Grid {
        truncated_grid(700, 6.0).unwrap()
    }

    #[test]
    fn truncated_grid_sizes() {
        let g = default_grid();
        assert_eq!(g.dof(), 159);
        assert_eq!(g.nodes()[0], 0.0);
        assert_eq!(g.nodes().len(), 160);
        assert_eq!(g.quad_weights().len(), 159);
        let g2 = truncated_grid(100, 1.0).unwrap();
        assert_eq!(g2.dof(), 10);
        assert!(truncated_grid(25, 6.0).is_err());
    }

    #[test]
    fn grid_nodes_are_prefix_of_full_rule() {
        let g = truncated_grid(400, 3.0).unwrap();
        let (full, fw) = gauss_laguerre(400).unwrap();
        for (i, &t) in g.interior_nodes().iter().enumerate() {
            assert_eq!(t, full[i]);
            assert!((g.quad_weights()[i] - fw[i]).abs() <= 1e-16 + 1e-12 * fw[i]);
        }
    }

    #[test]
    fn quadrature_norm_of_decaying_exponential() {
        // integral of e^{-2t} = 1/2, norm = 1/sqrt(2)
        let g = default_grid();
        let vals: Vec<f64> = g.interior_nodes().iter().map(|&t| (-t).exp()).collect();
        let norm = g.quadrature_norm(&vals).unwrap();
        assert!((norm - 0.5f64.sqrt()).abs() < 1e-10, "{norm}");
        let zero = vec![0.0; g.dof()];
        assert_eq!(g.quadrature_norm(&zero).unwrap(), 0.0);
        assert!(g.quadrature_norm(&vals[..10]).is_err());
    }

    #[test]
    fn interpolation_reproduces_nodes_and_off_grid() {
        let g = default_grid();
        let vals: Vec<f64> = g.interior_nodes().iter().map(|&t| (-t).exp()).collect();
        let at_node = g.interpolate(&vals, g.interior_nodes()[7]).unwrap();
        assert_eq!(at_node, vals[7]);
        let off = g.interpolate(&vals, 0.3).unwrap();
        assert!((off - (-0.3f64).exp()).abs() < 1e-12, "{off}");
        // negative queries rejected
        assert!(g.interpolate(&vals, -1.0).is_err());
    }

    #[test]
    fn interpolation_with_boundary_sample() {
        let g = default_grid();
        let mut vals = vec![1.0];
        vals.extend(g.interior_nodes().iter().map(|&t| (-t).exp()));
        let off = g.interpolate_with_boundary(&vals, 0.001).unwrap();
        assert!((off - (-0.001f64).exp()).abs() < 1e-11, "{off}");
    }

    #[test]
    fn polynomial_differentiation_row_sums_vanish() {
        let g = truncated_grid(100, 2.0).unwrap();
        let d = polynomial_differentiation_matrix(&g).unwrap();
        for i in 0..d.nrows() {
            let s: f64 = d.row(i).iter().sum();
            let scale: f64 = d.row(i).iter().map(|x| x.abs()).sum();
            assert!(s.abs() <= 1e-13 * scale.max(1.0), "row {i}: {s}");
        }
    }

    #[test]
    fn differentiation_exact_on_weighted_monomials() {
        let g = default_grid();
        let d = differentiation_matrix(&g).unwrap();
        // d/dt e^{-t} = -e^{-t}
        let f0: Vec<f64> = g.nodes().iter().map(|&t| (-t).exp()).collect();
        let df0 = &d * DVector::from_vec(f0.clone());
        for (i, &t) in g.nodes().iter().enumerate() {
            assert!(
                (df0[i] + (-t).exp()).abs() < 1e-10,
                "node {t}: {} vs {}",
                df0[i],
                -(-t).exp()
            );
        }
        // d/dt t e^{-t} = (1 - t) e^{-t}
        let f1: Vec<f64> = g.nodes().iter().map(|&t| t * (-t).exp()).collect();
        let df1 = &d * DVector::from_vec(f1);
        for (i, &t) in g.nodes().iter().enumerate() {
            assert!(
                (df1[i] - (1.0 - t) * (-t).exp()).abs() < 1e-10,
                "node {t}: {}",
                df1[i]
            );
        }
    }

    #[test]
    fn resampling_identity_at_alpha_one() {
        let g = default_grid();
        let p = resampling_matrix(&g, 1.0).unwrap();
        let n = g.nodes().len();
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (p[(i, j)] - expect).abs() < 1e-13,
                    "entry ({i},{j}) = {}",
                    p[(i, j)]
                );
            }
        }
    }

    #[test]
    fn resampling_exact_on_weighted_functions() {
        let g = default_grid();
        // alpha = 2 on e^{-t} -> e^{-2t}
        let p2 = resampling_matrix(&g, 2.0).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|&t| (-t).exp()).collect();
        let rf = &p2 * DVector::from_vec(f);
        for (i, &t) in g.nodes().iter().enumerate() {
            assert!(
                (rf[i] - (-2.0 * t).exp()).abs() < 2e-12,
                "node {t}: {} vs {}",
                rf[i],
                (-2.0 * t).exp()
            );
        }
        // alpha = sqrt(2) on e^{-t} t^3
        let a = std::f64::consts::SQRT_2;
        let pa = resampling_matrix(&g, a).unwrap();
        let f3: Vec<f64> = g.nodes().iter().map(|&t| (-t).exp() * t.powi(3)).collect();
        let scale3 = f3.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()));
        let rf3 = &pa * DVector::from_vec(f3);
        for (i, &t) in g.nodes().iter().enumerate() {
            let expect = (-a * t).exp() * (a * t).powi(3);
            assert!(
                (rf3[i] - expect).abs() < 1e-9 * scale3,
                "node {t}: {} vs {expect}",
                rf3[i]
            );
        }
    }

    #[test]
    fn operator_exactness_sweep() {
        // D and P_alpha on e^{-t} t^k, error <= 1e-8 of the on-grid scale of
        // each function. The sweep is pinned at k <= 12: beyond that the
        // recovery of f'(t) from f64 samples on this node set needs
        // cancellation past the 1e-8 level (the interpolatory functionals in
        // the mid-grid carry l1 mass above 1e10), so no row construction can
        // reach 1e-8 there. The acceptance suite measures the full k <= 30
        // landscape.
        let g = default_grid();
        let d = differentiation_matrix(&g).unwrap();
        let p = resampling_matrix(&g, 1.7).unwrap();
        for k in 0..=12u32 {
            let f: Vec<f64> = g
                .nodes()
                .iter()
                .map(|&t| (-t).exp() * t.powi(k as i32))
                .collect();
            let scale = f.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            let fv = DVector::from_vec(f);
            let df = &d * &fv;
            let pf = &p * &fv;
            for (i, &t) in g.nodes().iter().enumerate() {
                let d_exact = if k == 0 {
                    -(-t).exp()
                } else {
                    (-t).exp() * (k as f64 * t.powi(k as i32 - 1) - t.powi(k as i32))
                };
                assert!(
                    (df[i] - d_exact).abs() <= 1e-8 * scale.max(d_exact.abs()),
                    "D: k={k} node {t}: {} vs {d_exact}",
                    df[i]
                );
                let x = 1.7 * t;
                let p_exact = (-x).exp() * x.powi(k as i32);
                assert!(
                    (pf[i] - p_exact).abs() <= 1e-8 * scale.max(p_exact.abs()),
                    "P: k={k} node {t}: {} vs {p_exact}",
                    pf[i]
                );
            }
        }
    }

    #[test]
    fn operator_set_shapes() {
        let g = default_grid();
        let a = OperatorSet::new(&g, 2.0, SolveMode::FamilyAVForm).unwrap();
        assert_eq!(a.dim(), 159);
        assert_eq!(a.differentiation().nrows(), 159);
        let b = OperatorSet::new(&g, 2.0, SolveMode::FamilyBUForm).unwrap();
        assert_eq!(b.dim(), 160);
        assert!(OperatorSet::new(&g, 0.9, SolveMode::FamilyAVForm).is_err());
    }

    #[test]
    fn resampling_rejects_nonpositive_alpha() {
        let g = truncated_grid(64, 2.0).unwrap();
        assert!(resampling_matrix(&g, 0.0).is_err());
        assert!(resampling_matrix(&g, -1.0).is_err());
    }
}

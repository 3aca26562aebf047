//! Moment series for `E_n` and `E_n^2`, the weight recursion, the scaling
//! coefficients `C_n`, the first-order perturbation guess, and its O(eps^2)
//! residual check.
//!
//! Everything is computed from the series coefficients term by term:
//! `mu_j(E) = j! sum_k b_k / alpha^{(j+1)k}` and
//! `mu_j(E^2) = j! sum_{k,l} b_k b_l / (alpha^k + alpha^l)^{j+1}`.
//! The summands inherit the alternating signs and transient growth of the
//! `b_k`, so extended precision is carried throughout.

use crate::bigfloat::{self, RM};
use crate::error::{Error, Result};
use crate::qseries::{characteristic_alpha, PrecisionConfig, SeriesSolution};
use astro_float::BigFloat;

fn factorial(j: u32, bits: usize) -> BigFloat {
    let mut f = BigFloat::from_u32(1, bits);
    for i in 2..=j {
        f = f.mul(&BigFloat::from_u32(i, bits), bits, RM);
    }
    f
}

/// `mu_j(E) = j! sum_k b_k alpha^{-(j+1)k}`.
pub fn moment_e(series: &SeriesSolution, j: u32) -> BigFloat {
    let wp = series.precision().working_bits();
    let r = BigFloat::from_u32(1, wp).div(&series.alpha().powi(j as usize + 1, wp, RM), wp, RM);
    let mut pw = BigFloat::from_u32(1, wp);
    let mut sum = BigFloat::new(wp);
    for (k, b) in series.coefficients().iter().enumerate() {
        if k > 0 {
            pw = pw.mul(&r, wp, RM);
        }
        sum = sum.add(&b.mul(&pw, wp, RM), wp, RM);
    }
    sum.mul(&factorial(j, wp), wp, RM)
}

/// `mu_j(E^2) = j! sum_{k,l} b_k b_l (alpha^k + alpha^l)^{-(j+1)}`, both
/// indices truncated at the series' own K.
pub fn moment_e2(series: &SeriesSolution, j: u32) -> BigFloat {
    let wp = series.precision().working_bits();
    let bs = series.coefficients();
    let pws = series.alpha_powers();
    let mut sum = BigFloat::new(wp);
    // off-diagonal pairs counted twice by symmetry of the summand
    for k in 0..bs.len() {
        for l in (k + 1)..bs.len() {
            let den = pws[k].add(&pws[l], wp, RM).powi(j as usize + 1, wp, RM);
            let term = bs[k].mul(&bs[l], wp, RM).div(&den, wp, RM);
            sum = sum.add(&term, wp, RM);
        }
    }
    sum = sum.mul(&BigFloat::from_u32(2, wp), wp, RM);
    for k in 0..bs.len() {
        let den = pws[k].add(&pws[k], wp, RM).powi(j as usize + 1, wp, RM);
        let term = bs[k].mul(&bs[k], wp, RM).div(&den, wp, RM);
        sum = sum.add(&term, wp, RM);
    }
    sum.mul(&factorial(j, wp), wp, RM)
}

/// Weights of the telescoped moment relation, generated in reverse:
/// `w_{n-1} = 1`, `w_{j-1} = j alpha_n^{j+1} / (alpha_n^j - 2) w_j`.
///
/// The denominators never vanish since `alpha_n^j = 2^{j/n} < 2` for `j < n`.
pub fn weight_sequence(n: u32, precision: &PrecisionConfig) -> Result<Vec<BigFloat>> {
    if n == 0 {
        return Err(Error::Domain("weight sequence needs n >= 1".into()));
    }
    let wp = precision.working_bits();
    let alpha = characteristic_alpha(n, wp)?;
    let two = BigFloat::from_u32(2, wp);
    let mut w = vec![BigFloat::from_u32(1, wp); n as usize];
    for j in (1..n).rev() {
        let aj1 = alpha.powi(j as usize + 1, wp, RM);
        let aj = alpha.powi(j as usize, wp, RM);
        let factor = BigFloat::from_u32(j, wp)
            .mul(&aj1, wp, RM)
            .div(&aj.sub(&two, wp, RM), wp, RM);
        w[j as usize - 1] = factor.mul(&w[j as usize], wp, RM);
    }
    Ok(w)
}

/// The per-index bundle behind one scaling coefficient.
#[derive(Debug, Clone)]
pub struct ScalingRecord {
    pub n: u32,
    pub alpha_n: BigFloat,
    pub moments_e: Vec<BigFloat>,
    pub moments_e2: Vec<BigFloat>,
    pub weights: Vec<BigFloat>,
    pub c_n: BigFloat,
    /// `||C_n E_n||_2 = |C_n| sqrt(mu_0(E_n^2))`.
    pub scaled_norm: BigFloat,
}

impl ScalingRecord {
    pub fn c_n_f64(&self) -> f64 {
        bigfloat::to_f64(&self.c_n)
    }

    pub fn scaled_norm_f64(&self) -> f64 {
        bigfloat::to_f64(&self.scaled_norm)
    }
}

/// Computes `C_n = 2 n mu_{n-1}(E_n) / (alpha_n sum_j w_j mu_j(E_n^2))` along
/// with every ingredient, from a freshly built characteristic series.
pub fn scaling_coefficient(n: u32, precision: &PrecisionConfig) -> Result<ScalingRecord> {
    let series = SeriesSolution::characteristic(n, precision.clone())?;
    scaling_coefficient_for(&series, n)
}

pub(crate) fn scaling_coefficient_for(
    series: &SeriesSolution,
    n: u32,
) -> Result<ScalingRecord> {
    if n == 0 {
        return Err(Error::Domain("scaling coefficient needs n >= 1".into()));
    }
    let precision = series.precision();
    let wp = precision.working_bits();
    let alpha = series.alpha().clone();
    let moments_e: Vec<BigFloat> = (0..n).map(|j| moment_e(series, j)).collect();
    let moments_e2: Vec<BigFloat> = (0..n).map(|j| moment_e2(series, j)).collect();
    let weights = weight_sequence(n, precision)?;

    let mut denom_sum = BigFloat::new(wp);
    for j in 0..n as usize {
        denom_sum = denom_sum.add(&weights[j].mul(&moments_e2[j], wp, RM), wp, RM);
    }
    let denom = alpha.mul(&denom_sum, wp, RM);
    if bigfloat::to_f64(&denom.abs()) < 1e-30 {
        return Err(Error::Degeneracy(format!(
            "scaling denominator for n={n} is below 1e-30"
        )));
    }
    let numer = BigFloat::from_u32(2 * n, wp).mul(&moments_e[n as usize - 1], wp, RM);
    let c_n = numer.div(&denom, wp, RM);
    let scaled_norm = c_n.abs().mul(&moments_e2[0].sqrt(wp, RM), wp, RM);

    Ok(ScalingRecord {
        n,
        alpha_n: alpha,
        moments_e,
        moments_e2,
        weights,
        c_n,
        scaled_norm,
    })
}

/// Characteristic series plus its scaling record, cached for repeated
/// perturbation evaluations at the same `n`.
#[derive(Debug, Clone)]
pub struct PerturbationModel {
    series: SeriesSolution,
    record: ScalingRecord,
}

impl PerturbationModel {
    pub fn new(n: u32) -> Result<Self> {
        Self::with_precision(n, PrecisionConfig::for_characteristic_index(n))
    }

    pub fn with_precision(n: u32, precision: PrecisionConfig) -> Result<Self> {
        let series = SeriesSolution::characteristic(n, precision)?;
        let record = scaling_coefficient_for(&series, n)?;
        Ok(Self { series, record })
    }

    pub fn n(&self) -> u32 {
        self.record.n
    }

    pub fn series(&self) -> &SeriesSolution {
        &self.series
    }

    pub fn record(&self) -> &ScalingRecord {
        &self.record
    }

    pub fn alpha_f64(&self) -> f64 {
        self.series.alpha_f64()
    }

    /// First-order guess `v(t) = C_n E(t; alpha_n) eps` in double precision.
    pub fn guess(&self, epsilon: f64, t_values: &[f64]) -> Result<Vec<f64>> {
        if epsilon.abs() > 0.2 {
            log::warn!(
                "perturbation guess at |eps| = {} is outside the validated regime",
                epsilon.abs()
            );
        }
        let wp = self.series.precision().working_bits();
        let eps = BigFloat::from_f64(epsilon, wp);
        let scale = self.record.c_n.mul(&eps, wp, RM);
        t_values
            .iter()
            .map(|&t| {
                let e = self.series.evaluate(t)?;
                Ok(bigfloat::to_f64(&e.mul(&scale, wp, RM)))
            })
            .collect()
    }

    pub fn guess_at(&self, epsilon: f64, t: f64) -> Result<f64> {
        Ok(self.guess(epsilon, &[t])?[0])
    }

    /// `[v'(t) + v(t) - 2 v(beta t) - v^2(beta t)] / eps^2` with
    /// `beta = alpha_n + eps` and `v` the first-order guess.
    pub fn residual(&self, epsilon: f64, t: f64) -> Result<f64> {
        if epsilon == 0.0 {
            return Err(Error::Domain(
                "residual at eps = 0 is the limiting residual; call limiting_residual".into(),
            ));
        }
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("t must be >= 0, got {t}")));
        }
        let wp = self.series.precision().working_bits();
        let eps = BigFloat::from_f64(epsilon, wp);
        let tb = BigFloat::from_f64(t, wp);
        let beta_t = self.series.alpha().add(&eps, wp, RM).mul(&tb, wp, RM);
        let (e, de) = self.series.evaluate_with_derivative_big(&tb)?;
        let e_beta = self.series.evaluate_big(&beta_t)?;
        let c = &self.record.c_n;
        // C [E'(t) + E(t) - 2 E(beta t)] / eps - C^2 E(beta t)^2
        let two = BigFloat::from_u32(2, wp);
        let linear = de
            .add(&e, wp, RM)
            .sub(&two.mul(&e_beta, wp, RM), wp, RM)
            .mul(c, wp, RM)
            .div(&eps, wp, RM);
        let ce_beta = c.mul(&e_beta, wp, RM);
        let r = linear.sub(&ce_beta.mul(&ce_beta, wp, RM), wp, RM);
        Ok(bigfloat::to_f64(&r))
    }

    /// `r_n(t; 0) = -2 C_n E'(alpha_n t) t - (C_n E(alpha_n t))^2`.
    pub fn limiting_residual(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("t must be >= 0, got {t}")));
        }
        let wp = self.series.precision().working_bits();
        let tb = BigFloat::from_f64(t, wp);
        let at = self.series.alpha().mul(&tb, wp, RM);
        let (e, de) = self.series.evaluate_with_derivative_big(&at)?;
        let c = &self.record.c_n;
        let two = BigFloat::from_u32(2, wp);
        let first = two.mul(c, wp, RM).mul(&de, wp, RM).mul(&tb, wp, RM).neg();
        let ce = c.mul(&e, wp, RM);
        let r = first.sub(&ce.mul(&ce, wp, RM), wp, RM);
        Ok(bigfloat::to_f64(&r))
    }
}

/// One-shot variant of [`PerturbationModel::guess`].
pub fn perturbation_guess(n: u32, epsilon: f64, t_values: &[f64]) -> Result<Vec<f64>> {
    PerturbationModel::new(n)?.guess(epsilon, t_values)
}

/// One-shot variant of [`PerturbationModel::residual`].
pub fn perturbation_residual(n: u32, epsilon: f64, t: f64) -> Result<f64> {
    PerturbationModel::new(n)?.residual(epsilon, t)
}

/// One-shot variant of [`PerturbationModel::limiting_residual`].
pub fn limiting_residual(n: u32, t: f64) -> Result<f64> {
    PerturbationModel::new(n)?.limiting_residual(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigfloat::to_f64;

    fn cfg() -> PrecisionConfig {
        PrecisionConfig::default()
    }

    #[test]
    fn weight_sequence_closed_forms() {
        let w1 = weight_sequence(1, &cfg()).unwrap();
        assert_eq!(w1.len(), 1);
        assert_eq!(to_f64(&w1[0]), 1.0);

        let w2 = weight_sequence(2, &cfg()).unwrap();
        assert_eq!(to_f64(&w2[1]), 1.0);
        let expected = -(2.0 + std::f64::consts::SQRT_2);
        assert!((to_f64(&w2[0]) - expected).abs() < 1e-14, "{}", to_f64(&w2[0]));
    }

    #[test]
    fn weight_sequence_matches_product_form() {
        // telescoped substitution gives w_j = prod_{i=j+1}^{n-1} i a^{i+1}/(a^i - 2)
        let wp = cfg().working_bits();
        for n in [3u32, 5] {
            let w = weight_sequence(n, &cfg()).unwrap();
            let a = characteristic_alpha(n, wp).unwrap();
            let two = BigFloat::from_u32(2, wp);
            for j in 0..n as usize {
                let mut prod = BigFloat::from_u32(1, wp);
                for i in (j + 1)..n as usize {
                    let f = BigFloat::from_u32(i as u32, wp)
                        .mul(&a.powi(i + 1, wp, RM), wp, RM)
                        .div(&a.powi(i, wp, RM).sub(&two, wp, RM), wp, RM);
                    prod = prod.mul(&f, wp, RM);
                }
                let rel = to_f64(&w[j].sub(&prod, wp, RM).abs()) / to_f64(&prod.abs());
                assert!(rel < 1e-60, "n={n} j={j}: rel {rel}");
            }
        }
    }

    #[test]
    fn lower_moments_vanish() {
        let s2 = SeriesSolution::characteristic(2, cfg()).unwrap();
        assert!(to_f64(&moment_e(&s2, 0).abs()) < 1e-40);
        let s3 = SeriesSolution::characteristic(3, cfg()).unwrap();
        assert!(to_f64(&moment_e(&s3, 0).abs()) < 1e-40);
        assert!(to_f64(&moment_e(&s3, 1).abs()) < 1e-40);
    }

    #[test]
    fn vanishing_moments_relative_to_top() {
        for n in 2..=6u32 {
            let s = SeriesSolution::characteristic(n, PrecisionConfig::for_characteristic_index(n))
                .unwrap();
            let top = to_f64(&moment_e(&s, n - 1).abs());
            for j in 0..n - 1 {
                let m = to_f64(&moment_e(&s, j).abs());
                assert!(m <= 1e-20 * top, "n={n} j={j}: {m} vs top {top}");
            }
        }
    }

    #[test]
    fn consecutive_moment_relation() {
        // (a^{j+1} - 2) mu_j(E) = j a^{j+1} mu_{j-1}(E), with mu_{-1} = 0
        let wp = cfg().working_bits();
        for n in 1..=5u32 {
            let s = SeriesSolution::characteristic(n, cfg()).unwrap();
            let a = s.alpha().clone();
            let two = BigFloat::from_u32(2, wp);
            let scale = to_f64(&moment_e(&s, n - 1).abs());
            for j in 0..n {
                let aj1 = a.powi(j as usize + 1, wp, RM);
                let lhs = aj1.sub(&two, wp, RM).mul(&moment_e(&s, j), wp, RM);
                let rhs = if j == 0 {
                    BigFloat::new(wp)
                } else {
                    BigFloat::from_u32(j, wp)
                        .mul(&aj1, wp, RM)
                        .mul(&moment_e(&s, j - 1), wp, RM)
                };
                let diff = to_f64(&lhs.sub(&rhs, wp, RM).abs());
                assert!(diff <= 1e-30 * scale.max(1e-30), "n={n} j={j}: {diff}");
            }
        }
    }

    #[test]
    fn moment_ratio_reproduces_first_scaling_coefficient() {
        let s = SeriesSolution::build_f64(2.0, cfg()).unwrap();
        let wp = cfg().working_bits();
        let ratio = moment_e(&s, 0).div(&moment_e2(&s, 0), wp, RM);
        let r = to_f64(&ratio);
        assert!((r - 11.36911520).abs() < 1e-7 * 11.4, "{r}");
    }

    #[test]
    fn moment_e2_symmetric_in_summation_order() {
        // recompute with the l-major loop ordering
        let s = SeriesSolution::characteristic(2, cfg()).unwrap();
        let wp = cfg().working_bits();
        let bs = s.coefficients();
        let pws = s.alpha_powers();
        let j = 1usize;
        let mut sum = BigFloat::new(wp);
        for l in 0..bs.len() {
            for k in 0..bs.len() {
                let den = pws[k].add(&pws[l], wp, RM).powi(j + 1, wp, RM);
                sum = sum.add(&bs[k].mul(&bs[l], wp, RM).div(&den, wp, RM), wp, RM);
            }
        }
        let direct = moment_e2(&s, j as u32);
        let rel = to_f64(&sum.sub(&direct, wp, RM).abs()) / to_f64(&direct.abs());
        assert!(rel < 1e-55, "{rel}");
    }

    #[test]
    fn table_of_scaling_coefficients() {
        let reference = [
            (11.36911520, 1.811978234),
            (-809.3665721, 9.266935159),
            (31551.15567, 29.58298033),
            (-1099159.137, 85.46096526),
            (34825078.48, 224.4734290),
            (-1045480822.0, 557.2788228),
        ];
        for (i, &(c_ref, norm_ref)) in reference.iter().enumerate() {
            let n = i as u32 + 1;
            let rec =
                scaling_coefficient(n, &PrecisionConfig::for_characteristic_index(n)).unwrap();
            let c = rec.c_n_f64();
            let norm = rec.scaled_norm_f64();
            assert!(
                ((c - c_ref) / c_ref).abs() < 1e-9,
                "n={n}: C {c} vs {c_ref}"
            );
            assert!(
                ((norm - norm_ref) / norm_ref).abs() < 1e-9,
                "n={n}: norm {norm} vs {norm_ref}"
            );
            // sign alternation (-1)^{n+1} C_n > 0
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            assert!(sign * c > 0.0, "n={n}");
            assert_eq!(rec.weights.len(), n as usize);
            assert_eq!(to_f64(&rec.weights[n as usize - 1]), 1.0);
        }
    }

    #[test]
    fn guess_vanishes_at_origin() {
        let v = perturbation_guess(1, 0.1, &[0.0]).unwrap();
        assert!(v[0].abs() < 1e-25, "{}", v[0]);
    }

    #[test]
    fn guess_dips_negative_for_negative_eps() {
        let model = PerturbationModel::new(1).unwrap();
        let v = model.guess(-0.1, &[0.5, 1.0, 2.0]).unwrap();
        assert!(v.iter().all(|&x| x < 0.0), "{v:?}");
    }

    #[test]
    fn guess_matches_direct_product() {
        let model = PerturbationModel::new(2).unwrap();
        let eps = 0.01;
        let ts = [0.3, 1.0, 4.0, 9.0];
        let got = model.guess(eps, &ts).unwrap();
        for (&t, &g) in ts.iter().zip(&got) {
            let direct = model.record().c_n_f64() * model.series().value_f64(t).unwrap() * eps;
            assert!((g - direct).abs() <= 1e-12 * direct.abs().max(1e-12), "t={t}");
        }
    }

    #[test]
    fn residual_vanishes_at_origin() {
        let model = PerturbationModel::new(2).unwrap();
        for &eps in &[0.1, -0.05, 1e-3] {
            let r = model.residual(eps, 0.0).unwrap();
            assert!(r.abs() < 1e-20, "eps={eps}: {r}");
        }
    }

    #[test]
    fn residual_rejects_zero_eps() {
        let model = PerturbationModel::new(1).unwrap();
        assert!(model.residual(0.0, 1.0).is_err());
    }

    #[test]
    fn residual_approaches_limit_first_order() {
        let model = PerturbationModel::new(1).unwrap();
        let r0 = model.limiting_residual(1.0).unwrap();
        let d3 = (model.residual(1e-3, 1.0).unwrap() - r0).abs();
        let d4 = (model.residual(1e-4, 1.0).unwrap() - r0).abs();
        // first order in eps: ratio ~ 10
        let ratio = d3 / d4;
        assert!((3.0..30.0).contains(&ratio), "d3={d3} d4={d4} ratio={ratio}");
    }

    #[test]
    fn richardson_extrapolation_hits_limit() {
        let model = PerturbationModel::new(2).unwrap();
        let r0 = model.limiting_residual(1.0).unwrap();
        let eps = 1e-4;
        let extrap = 2.0 * model.residual(eps, 1.0).unwrap() - model.residual(2.0 * eps, 1.0).unwrap();
        assert!(
            (extrap - r0).abs() <= 1e-5 * r0.abs().max(1.0),
            "extrap {extrap} vs {r0}"
        );
    }

    #[test]
    fn limiting_residual_bounded_and_zero_at_origin() {
        let model = PerturbationModel::new(1).unwrap();
        assert!(model.limiting_residual(0.0).unwrap().abs() < 1e-25);
        let mut sup: f64 = 0.0;
        for i in 0..=500 {
            let t = i as f64 * 0.1;
            sup = sup.max(model.limiting_residual(t).unwrap().abs());
        }
        // independently sampled sup on the same lattice is ~2.7813
        assert!(sup.is_finite() && (2.5..5.0).contains(&sup), "sup={sup}");
    }

    #[test]
    fn residual_bounded_on_window_for_n3() {
        let model = PerturbationModel::new(3).unwrap();
        let mut sup: f64 = 0.0;
        for i in 0..=200 {
            let t = i as f64 * 0.2;
            sup = sup.max(model.residual(1e-4, t).unwrap().abs());
        }
        assert!(sup.is_finite() && sup < 1e4, "sup={sup}");
        // vertical scale grows with n (cf. the n=1 sup of ~2.8)
        assert!(sup > 100.0, "sup={sup}");
    }
}

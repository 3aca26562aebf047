//! Arbitrary-precision evaluation of the series solution of the linear
//! pantograph-type equation `u'(t) + u(t) = 2 u(alpha t)`, its coefficients,
//! and the q-series identities behind its characteristic values.
//!
//! The series is `E(t; alpha) = sum_k b_k exp(-alpha^k t)` with `b_0 = 1` and
//! `b_k = 2^k / ((1 - alpha)(1 - alpha^2)...(1 - alpha^k))`. The coefficients
//! alternate in sign and grow through a large transient before decaying, so
//! everything here runs in extended precision with an explicit truncation rule
//! anchored to the transient peak.

use crate::bigfloat::{self, exponent_of, RM};
use crate::error::{Error, Result};
use astro_float::BigFloat;

/// Extra mantissa bits carried by intermediate arithmetic.
const GUARD_BITS: usize = 64;

/// Precision/truncation policy for series construction and evaluation.
#[derive(Debug, Clone)]
pub struct PrecisionConfig {
    significand_bits: usize,
    term_tolerance: f64,
    max_terms: usize,
}

impl PrecisionConfig {
    pub fn new(significand_bits: usize, term_tolerance: f64, max_terms: usize) -> Result<Self> {
        if significand_bits < 64 {
            return Err(Error::Config(format!(
                "significand_bits must be >= 64, got {significand_bits}"
            )));
        }
        if !(term_tolerance > 0.0 && term_tolerance < 1.0) {
            return Err(Error::Config(format!(
                "term_tolerance must be in (0, 1), got {term_tolerance}"
            )));
        }
        if max_terms < 1 {
            return Err(Error::Config("max_terms must be >= 1".into()));
        }
        Ok(Self {
            significand_bits,
            term_tolerance,
            max_terms,
        })
    }

    /// 256 bits for characteristic index `n <= 4`, 512 bits beyond.
    pub fn for_characteristic_index(n: u32) -> Self {
        let bits = if n <= 4 { 256 } else { 512 };
        Self::new(bits, 1e-40, 1000).unwrap()
    }

    pub fn significand_bits(&self) -> usize {
        self.significand_bits
    }

    pub fn term_tolerance(&self) -> f64 {
        self.term_tolerance
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }

    pub(crate) fn working_bits(&self) -> usize {
        self.significand_bits + GUARD_BITS
    }
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        Self::new(256, 1e-40, 1000).unwrap()
    }
}

/// The dilation parameter at which the linearized operator has a nontrivial
/// nullspace with vanishing initial value: `alpha_n = 2^(1/n)`.
pub fn characteristic_alpha(n: u32, bits: usize) -> Result<BigFloat> {
    if n == 0 {
        return Err(Error::Domain("characteristic index must be >= 1".into()));
    }
    Ok(bigfloat::two_pow_recip(n, bits))
}

pub fn characteristic_alpha_f64(n: u32) -> Result<f64> {
    characteristic_alpha(n, 128).map(|a| bigfloat::to_f64(&a))
}

/// The series solution `E(t; alpha)` held as its coefficient list `b_0..b_K`.
///
/// Construction retains terms until `|b_k|` falls below
/// `term_tolerance * max_j |s_j|`, where `s_j` are the partial sums of
/// `sum b_k`; the cutoff is relative to the transient peak, not the current
/// partial sum, because the partial sums themselves grow before the series
/// settles.
#[derive(Debug, Clone)]
pub struct SeriesSolution {
    alpha: BigFloat,
    alpha_f64: f64,
    coefficients: Vec<BigFloat>,
    alpha_powers: Vec<BigFloat>,
    /// log2 of the largest partial-sum magnitude seen during construction.
    peak_log2: i32,
    precision: PrecisionConfig,
}

impl SeriesSolution {
    /// Builds coefficients by the product formula. `alpha` must exceed 1.
    pub fn build(alpha: BigFloat, precision: PrecisionConfig) -> Result<Self> {
        let wp = precision.working_bits();
        let one = BigFloat::from_u32(1, wp);
        if !matches!(alpha.cmp(&one), Some(c) if c > 0) {
            return Err(Error::Domain(
                "series converges only for alpha > 1".into(),
            ));
        }
        let alpha_f64 = bigfloat::to_f64(&alpha);
        let two = BigFloat::from_u32(2, wp);
        let tol_log2 = precision.term_tolerance().log2();

        let mut coefficients = vec![one.clone()];
        let mut alpha_powers = vec![one.clone()];
        let mut prod = one.clone(); // prod_{j<=k} (1 - alpha^j)
        let mut pow2 = one.clone(); // 2^k
        let mut apow = one.clone(); // alpha^k
        let mut partial = one.clone();
        let mut peak_log2 = exponent_of(&partial);

        for _k in 1..=precision.max_terms() {
            apow = apow.mul(&alpha, wp, RM);
            pow2 = pow2.mul(&two, wp, RM);
            prod = prod.mul(&one.sub(&apow, wp, RM), wp, RM);
            let bk = pow2.div(&prod, wp, RM);
            partial = partial.add(&bk, wp, RM);
            peak_log2 = peak_log2.max(exponent_of(&partial));
            let bk_log2 = exponent_of(&bk);
            coefficients.push(bk);
            alpha_powers.push(apow.clone());
            if (bk_log2 as f64) < peak_log2 as f64 + tol_log2 {
                break;
            }
        }

        Ok(Self {
            alpha,
            alpha_f64,
            coefficients,
            alpha_powers,
            peak_log2,
            precision,
        })
    }

    pub fn build_f64(alpha: f64, precision: PrecisionConfig) -> Result<Self> {
        let wp = precision.working_bits();
        Self::build(BigFloat::from_f64(alpha, wp), precision)
    }

    /// Series at the characteristic value `alpha_n = 2^(1/n)`.
    pub fn characteristic(n: u32, precision: PrecisionConfig) -> Result<Self> {
        let alpha = characteristic_alpha(n, precision.working_bits())?;
        Self::build(alpha, precision)
    }

    pub fn alpha(&self) -> &BigFloat {
        &self.alpha
    }

    pub fn alpha_f64(&self) -> f64 {
        self.alpha_f64
    }

    pub fn coefficients(&self) -> &[BigFloat] {
        &self.coefficients
    }

    pub fn coefficient_f64(&self, k: usize) -> f64 {
        bigfloat::to_f64(&self.coefficients[k])
    }

    pub(crate) fn alpha_powers(&self) -> &[BigFloat] {
        &self.alpha_powers
    }

    /// Number of retained terms past `b_0`.
    pub fn term_count(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn precision(&self) -> &PrecisionConfig {
        self.precision_ref()
    }

    fn precision_ref(&self) -> &PrecisionConfig {
        &self.precision
    }

    /// Absolute scale below which series values are truncation noise:
    /// `term_tolerance * (transient peak of the partial sums)`.
    pub fn noise_floor(&self) -> f64 {
        let log2 = self.peak_log2 as f64 + self.precision.term_tolerance().log2();
        log2.exp2()
    }

    fn check_t(t: f64) -> Result<()> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("t must be >= 0, got {t}")));
        }
        Ok(())
    }

    /// `E(t) = sum_k b_k exp(-alpha^k t)`, accumulated with guard bits and
    /// rounded to the configured output precision.
    pub fn evaluate(&self, t: f64) -> Result<BigFloat> {
        Self::check_t(t)?;
        let wp = self.precision.working_bits();
        self.evaluate_big(&BigFloat::from_f64(t, wp))
    }

    pub fn evaluate_big(&self, t: &BigFloat) -> Result<BigFloat> {
        Ok(self.accumulate(t, false)?.0)
    }

    /// `E'(t) = -sum_k b_k alpha^k exp(-alpha^k t)`.
    pub fn evaluate_derivative(&self, t: f64) -> Result<BigFloat> {
        Self::check_t(t)?;
        let wp = self.precision.working_bits();
        self.evaluate_derivative_big(&BigFloat::from_f64(t, wp))
    }

    pub fn evaluate_derivative_big(&self, t: &BigFloat) -> Result<BigFloat> {
        Ok(self.accumulate(t, true)?.1)
    }

    /// One exponential sweep for both `E(t)` and `E'(t)`.
    pub fn evaluate_with_derivative_big(&self, t: &BigFloat) -> Result<(BigFloat, BigFloat)> {
        self.accumulate(t, true)
    }

    pub fn value_f64(&self, t: f64) -> Result<f64> {
        self.evaluate(t).map(|v| bigfloat::to_f64(&v))
    }

    pub fn derivative_f64(&self, t: f64) -> Result<f64> {
        self.evaluate_derivative(t).map(|v| bigfloat::to_f64(&v))
    }

    fn accumulate(&self, t: &BigFloat, with_derivative: bool) -> Result<(BigFloat, BigFloat)> {
        if t.is_negative() {
            return Err(Error::Domain("t must be >= 0".into()));
        }
        let wp = self.precision.working_bits();
        let tol_log2 = self.precision.term_tolerance().log2();
        let t_f64 = bigfloat::to_f64(t);
        // Terms beyond this exponent budget cannot reach the noise floor:
        // log2 |b_k e^{-a^k t}| <= max_b_log2 - a^k t log2(e).
        let max_b_log2 = self
            .coefficients
            .iter()
            .map(exponent_of)
            .max()
            .unwrap_or(0) as f64;
        let drop_budget = max_b_log2 - (self.peak_log2 as f64 + tol_log2) + 16.0;

        let mut value = BigFloat::new(wp);
        let mut deriv = BigFloat::new(wp);
        let mut apow_f64 = 1.0f64;
        for (k, bk) in self.coefficients.iter().enumerate() {
            if k > 0 {
                apow_f64 = (apow_f64 * self.alpha_f64).min(f64::MAX);
            }
            if apow_f64 * t_f64 * std::f64::consts::LOG2_E > drop_budget {
                break;
            }
            let arg = self.alpha_powers[k].mul(t, wp, RM).neg();
            let e = bigfloat::exp(&arg, wp);
            let term = bk.mul(&e, wp, RM);
            value = value.add(&term, wp, RM);
            if with_derivative {
                deriv = deriv.sub(&term.mul(&self.alpha_powers[k], wp, RM), wp, RM);
            }
        }
        let out = self.precision.significand_bits();
        value = round_to(value, out);
        deriv = round_to(deriv, out);
        Ok((value, deriv))
    }

    /// Sign changes of `E` on `(t_lo, t_hi)`, located on a geometric sampling
    /// grid and refined by bisection. Samples whose magnitude is within the
    /// truncation noise floor are ignored, so the flat stretch near `t = 0`
    /// (where all derivatives vanish) cannot contribute spurious flips.
    pub fn zeros(&self, t_lo: f64, t_hi: f64, samples: usize) -> Result<Vec<f64>> {
        if !(t_lo > 0.0 && t_hi > t_lo) {
            return Err(Error::Domain("need 0 < t_lo < t_hi".into()));
        }
        let filter = self.noise_floor() * 16.0;
        let ratio = (t_hi / t_lo).powf(1.0 / samples as f64);
        let mut live: Vec<(f64, f64)> = Vec::new();
        let mut t = t_lo;
        for _ in 0..=samples {
            let v = self.value_f64(t)?;
            if v.abs() > filter {
                live.push((t, v));
            }
            t *= ratio;
        }
        let mut zeros = Vec::new();
        for w in live.windows(2) {
            let (ta, va) = w[0];
            let (tb, vb) = w[1];
            if va.signum() != vb.signum() {
                zeros.push(self.bisect_zero(ta, va, tb)?);
            }
        }
        Ok(zeros)
    }

    fn bisect_zero(&self, mut lo: f64, v_lo: f64, mut hi: f64) -> Result<f64> {
        let mut s_lo = v_lo.signum();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let vm = self.value_f64(mid)?;
            if vm.signum() == s_lo {
                lo = mid;
                s_lo = vm.signum();
            } else {
                hi = mid;
            }
            if (hi - lo) < 1e-13 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Sign of the first departure from the flat zone, i.e. the sign of the
    /// first turning point of `E` on `(0, inf)`.
    pub fn leading_sign(&self) -> Result<f64> {
        let filter = self.noise_floor() * 16.0;
        let mut t = 1e-3;
        while t < 60.0 {
            let v = self.value_f64(t)?;
            if v.abs() > filter {
                return Ok(v.signum());
            }
            t *= 1.05;
        }
        Err(Error::Classification(
            "series never rises above its noise floor".into(),
        ))
    }
}

fn round_to(mut x: BigFloat, bits: usize) -> BigFloat {
    if x.set_precision(bits, RM).is_err() {
        return BigFloat::nan(None);
    }
    x
}

/// The value of `E(0; alpha)` computed as the raw coefficient sum
/// `1 + sum_{k>=1} b_k`. Vanishes exactly when `alpha = 2^(1/n)`.
pub fn lemma1_sum(alpha: &BigFloat, precision: &PrecisionConfig) -> Result<BigFloat> {
    let series = SeriesSolution::build(alpha.clone(), precision.clone())?;
    let wp = precision.working_bits();
    let mut sum = BigFloat::new(wp);
    for b in series.coefficients() {
        sum = sum.add(b, wp, RM);
    }
    Ok(round_to(sum, precision.significand_bits()))
}

pub fn lemma1_sum_f64(alpha: f64, precision: &PrecisionConfig) -> Result<BigFloat> {
    lemma1_sum(
        &BigFloat::from_f64(alpha, precision.working_bits()),
        precision,
    )
}

/// `prod_{k>=1} (1 - c q^k)` for `|q| < 1`, truncated once `|c q^k|` drops
/// below the term tolerance. Independent product route for [`lemma1_sum`].
pub fn euler_product(c: &BigFloat, q: &BigFloat, precision: &PrecisionConfig) -> Result<BigFloat> {
    let wp = precision.working_bits();
    let one = BigFloat::from_u32(1, wp);
    let q_abs_f64 = bigfloat::to_f64(&q.abs());
    if !(q_abs_f64 < 1.0) {
        return Err(Error::Domain("euler product requires |q| < 1".into()));
    }
    if c.is_zero() {
        return Ok(one);
    }
    let c_log2 = exponent_of(c) as f64;
    let tol_log2 = precision.term_tolerance().log2();
    let q_log2 = q_abs_f64.log2();
    let k_stop = ((tol_log2 - c_log2) / q_log2).ceil().max(1.0);
    if !(k_stop <= 1e7) {
        return Err(Error::Degeneracy(format!(
            "euler product needs {k_stop:.0} factors; |q| too close to 1"
        )));
    }
    let mut prod = one.clone();
    let mut cqk = c.clone();
    for _ in 0..k_stop as usize {
        cqk = cqk.mul(q, wp, RM);
        prod = prod.mul(&one.sub(&cqk, wp, RM), wp, RM);
        if prod.is_zero() {
            break;
        }
    }
    Ok(round_to(prod, precision.significand_bits()))
}

pub fn euler_product_f64(c: f64, q: f64, precision: &PrecisionConfig) -> Result<BigFloat> {
    let wp = precision.working_bits();
    euler_product(
        &BigFloat::from_f64(c, wp),
        &BigFloat::from_f64(q, wp),
        precision,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigfloat::to_f64;

    fn cfg() -> PrecisionConfig {
        PrecisionConfig::default()
    }

    #[test]
    fn characteristic_alpha_values() {
        assert_eq!(characteristic_alpha_f64(1).unwrap(), 2.0);
        assert!((characteristic_alpha_f64(2).unwrap() - 1.4142135623730951).abs() < 1e-15);
        assert!((characteristic_alpha_f64(6).unwrap() - 1.122462048309373).abs() < 1e-15);
        assert!(characteristic_alpha(0, 128).is_err());
    }

    #[test]
    fn coefficients_alpha_two() {
        let s = SeriesSolution::build_f64(2.0, cfg()).unwrap();
        assert!((s.coefficient_f64(1) - -2.0).abs() < 1e-60);
        assert!((s.coefficient_f64(2) - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn coefficients_alpha_sqrt2() {
        let s = SeriesSolution::characteristic(2, cfg()).unwrap();
        let expected = 2.0 / (1.0 - std::f64::consts::SQRT_2);
        assert!((s.coefficient_f64(1) - expected).abs() < 1e-14);
    }

    #[test]
    fn transient_peak_is_interior_for_n6() {
        // brute-force the product formula and locate the largest coefficient
        let s = SeriesSolution::characteristic(6, PrecisionConfig::for_characteristic_index(6))
            .unwrap();
        let mags: Vec<f64> = (0..=s.term_count()).map(|k| s.coefficient_f64(k).abs()).collect();
        let argmax = mags
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert!(argmax > 0 && argmax < s.term_count(), "peak at k={argmax}");
        // growth then decay around the peak
        assert!(mags[argmax] > mags[0] && mags[argmax] > *mags.last().unwrap());
        assert_eq!(argmax, 9);
    }

    #[test]
    fn rejects_alpha_at_or_below_one() {
        assert!(SeriesSolution::build_f64(1.0, cfg()).is_err());
        assert!(SeriesSolution::build_f64(0.7, cfg()).is_err());
    }

    #[test]
    fn evaluate_vanishes_at_zero_for_characteristic_alpha() {
        for n in [1u32, 3] {
            let s = SeriesSolution::characteristic(n, cfg()).unwrap();
            let v = s.evaluate(0.0).unwrap();
            assert!(to_f64(&v.abs()) < 1e-30, "n={n}: {}", to_f64(&v));
        }
    }

    #[test]
    fn evaluate_at_zero_matches_euler_product_for_alpha_four() {
        let wp = cfg().working_bits();
        let s = SeriesSolution::build_f64(4.0, cfg()).unwrap();
        let v = s.evaluate(0.0).unwrap();
        let p = euler_product_f64(2.0, 0.25, &cfg()).unwrap();
        assert!(to_f64(&v.sub(&p, wp, RM).abs()) < 1e-30);
        assert!((to_f64(&v) - 0.4194224417951076).abs() < 1e-15);
    }

    #[test]
    fn evaluate_rejects_negative_t() {
        let s = SeriesSolution::build_f64(2.0, cfg()).unwrap();
        assert!(s.evaluate(-0.5).is_err());
        assert!(s.evaluate_derivative(-0.5).is_err());
    }

    #[test]
    fn frozen_point_values_alpha_two() {
        // reference: independent 60-digit evaluation of the same series
        let s = SeriesSolution::build_f64(2.0, cfg()).unwrap();
        let e1 = to_f64(&s.evaluate(1.0).unwrap());
        assert!((e1 - 0.12150193697911483).abs() < 1e-15, "{e1}");
        let d1 = to_f64(&s.evaluate_derivative(1.0).unwrap());
        assert!((d1 - 0.07680055520582965).abs() < 1e-15, "{d1}");
    }

    #[test]
    fn derivative_at_zero_is_raw_weighted_sum() {
        // direct high-precision summation oracle: -sum b_k alpha^k
        let s = SeriesSolution::build_f64(3.0, cfg()).unwrap();
        let wp = cfg().working_bits();
        let mut oracle = BigFloat::new(wp);
        for (k, b) in s.coefficients().iter().enumerate() {
            oracle = oracle.sub(&b.mul(&s.alpha_powers()[k], wp, RM), wp, RM);
        }
        let d = s.evaluate_derivative(0.0).unwrap();
        let diff = to_f64(&d.sub(&oracle, wp, RM).abs());
        assert!(diff < 1e-30, "{diff}");
        assert!((to_f64(&d) - 0.2312460376062461).abs() < 1e-15);
    }

    #[test]
    fn central_difference_matches_derivative() {
        let s = SeriesSolution::build_f64(2.0, cfg()).unwrap();
        let h = 1e-6;
        let fd = (s.value_f64(1.0 + h).unwrap() - s.value_f64(1.0 - h).unwrap()) / (2.0 * h);
        let d = s.derivative_f64(1.0).unwrap();
        assert!((fd - d).abs() < 1e-10, "fd={fd} d={d}");
    }

    #[test]
    fn functional_equation_residual() {
        // E'(t) + E(t) - 2 E(alpha t) = 0 to within the truncation tolerance
        let cfgs = [
            SeriesSolution::build_f64(2.0, cfg()).unwrap(),
            SeriesSolution::characteristic(2, cfg()).unwrap(),
            SeriesSolution::characteristic(3, cfg()).unwrap(),
        ];
        let wp = cfg().working_bits();
        for s in &cfgs {
            for &t in &[0.0, 0.5, 1.0, 2.0, 5.0, 10.0] {
                let ts = BigFloat::from_f64(t, wp);
                let (e, de) = s.evaluate_with_derivative_big(&ts).unwrap();
                let scaled = s
                    .evaluate_big(&s.alpha().mul(&ts, wp, RM))
                    .unwrap()
                    .mul(&BigFloat::from_u32(2, wp), wp, RM);
                let r = de.add(&e, wp, RM).sub(&scaled, wp, RM);
                assert!(
                    to_f64(&r.abs()) < 1e-20,
                    "alpha={} t={t}: residual {}",
                    s.alpha_f64(),
                    to_f64(&r)
                );
            }
        }
    }

    #[test]
    fn lemma1_sum_vanishes_only_at_characteristic_points() {
        for n in 1..=6u32 {
            let a = characteristic_alpha(n, cfg().working_bits()).unwrap();
            let s = lemma1_sum(&a, &cfg()).unwrap();
            assert!(to_f64(&s.abs()) < 1e-30, "n={n}");
        }
        let s = lemma1_sum_f64(1.7, &cfg()).unwrap();
        assert!(to_f64(&s.abs()) > 1e-3);
    }

    #[test]
    fn lemma1_sum_matches_euler_product() {
        // identity: 1 + sum 2^k / prod (1 - a^j) = prod (1 - 2 a^{-k})
        let tol = cfg().term_tolerance();
        let wp = cfg().working_bits();
        for &a in &[1.2, 1.5, 2.0, 3.0, 5.0] {
            let alpha = BigFloat::from_f64(a, wp);
            let q = BigFloat::from_u32(1, wp).div(&alpha, wp, RM);
            let s = lemma1_sum(&alpha, &cfg()).unwrap();
            let p = euler_product(&BigFloat::from_u32(2, wp), &q, &cfg()).unwrap();
            let diff = to_f64(&s.sub(&p, wp, RM).abs());
            let bound = 10.0 * tol * to_f64(&p.abs()).max(1.0);
            assert!(diff <= bound, "alpha={a}: diff {diff}");
        }
    }

    #[test]
    fn euler_product_edge_cases() {
        let p = to_f64(&euler_product_f64(2.0, 0.5, &cfg()).unwrap());
        assert_eq!(p, 0.0);
        let p = to_f64(&euler_product_f64(0.0, 1.0 / 3.0, &cfg()).unwrap());
        assert_eq!(p, 1.0);
        assert!(euler_product_f64(2.0, 1.0, &cfg()).is_err());
        // c = alpha^m with q = 1/alpha zeroes the factor k = m
        let wp = cfg().working_bits();
        let a = BigFloat::from_f64(1.3, wp);
        let c = a.powi(3, wp, RM);
        let q = BigFloat::from_u32(1, wp).div(&a, wp, RM);
        let p = to_f64(&euler_product(&c, &q, &cfg()).unwrap());
        assert!(p.abs() < 1e-35, "{p}");
    }

    #[test]
    fn coefficient_recurrence_holds() {
        // b_k (1 - alpha^k) = 2 b_{k-1}
        let wp = cfg().working_bits();
        let rel_bound = 10f64.powf(-(cfg().significand_bits() as f64) * 0.25);
        for s in [
            SeriesSolution::build_f64(1.7, cfg()).unwrap(),
            SeriesSolution::characteristic(5, cfg()).unwrap(),
        ] {
            let one = BigFloat::from_u32(1, wp);
            let two = BigFloat::from_u32(2, wp);
            for k in 1..=s.term_count() {
                let lhs = s.coefficients()[k].mul(&one.sub(&s.alpha_powers()[k], wp, RM), wp, RM);
                let rhs = s.coefficients()[k - 1].mul(&two, wp, RM);
                let num = to_f64(&lhs.sub(&rhs, wp, RM).abs());
                let den = to_f64(&rhs.abs()).max(f64::MIN_POSITIVE);
                assert!(num / den <= rel_bound, "k={k}: rel {}", num / den);
            }
        }
    }

    #[test]
    fn exponential_decay_envelope() {
        // past the transient, |E| <= 2 |b_0| e^{-t}
        for s in [
            SeriesSolution::build_f64(2.0, cfg()).unwrap(),
            SeriesSolution::characteristic(3, cfg()).unwrap(),
        ] {
            let sum_abs: f64 = (0..=s.term_count()).map(|k| s.coefficient_f64(k).abs()).sum();
            let t0 = (sum_abs.ln() / (s.alpha_f64() - 1.0)).max(1.0) + 1.0;
            for &t in &[t0, t0 + 5.0, t0 + 15.0] {
                let v = s.value_f64(t).unwrap().abs();
                assert!(v <= 2.0 * (-t).exp(), "t={t}: {v}");
            }
        }
    }

    #[test]
    fn zero_counts_follow_characteristic_index() {
        for n in 1..=6u32 {
            let s =
                SeriesSolution::characteristic(n, PrecisionConfig::for_characteristic_index(n))
                    .unwrap();
            let zeros = s.zeros(1e-3, 50.0, 10_000).unwrap();
            assert_eq!(
                zeros.len(),
                (n - 1) as usize,
                "n={n}: zeros at {zeros:?}"
            );
        }
    }

    #[test]
    fn leading_sign_alternates() {
        for n in 1..=4u32 {
            let s = SeriesSolution::characteristic(n, cfg()).unwrap();
            let expect = if n % 2 == 1 { 1.0 } else { -1.0 };
            assert_eq!(s.leading_sign().unwrap(), expect, "n={n}");
        }
    }

    #[test]
    fn precision_config_validation() {
        assert!(PrecisionConfig::new(32, 1e-40, 100).is_err());
        assert!(PrecisionConfig::new(128, 1.5, 100).is_err());
        assert!(PrecisionConfig::new(128, 1e-40, 0).is_err());
    }
}

//! Quadrature cross-check for the moment machinery.
//!
//! The moments are computed in the library by term-by-term integration of the
//! series. Here they are recomputed by an independent route: composite
//! Gauss-Legendre panels in extended precision, with Legendre nodes found by
//! Newton iteration on the three-term recurrence. Mutual agreement rules out
//! silent cancellation bugs on either side.

use alpha_riccati::bigfloat::{self, to_f64};
use alpha_riccati::moments::{moment_e, moment_e2};
use alpha_riccati::qseries::{PrecisionConfig, SeriesSolution};
use astro_float::{BigFloat, Consts, RoundingMode};

const RM: RoundingMode = RoundingMode::ToEven;

/// Legendre value and derivative at `x` via the recurrence.
fn legendre_with_derivative(m: usize, x: &BigFloat, wp: usize) -> (BigFloat, BigFloat) {
    let one = BigFloat::from_u32(1, wp);
    let mut p_prev = one.clone();
    let mut p = x.clone();
    for k in 1..m {
        let a = BigFloat::from_u32(2 * k as u32 + 1, wp);
        let b = BigFloat::from_u32(k as u32, wp);
        let c = BigFloat::from_u32(k as u32 + 1, wp);
        let next = a
            .mul(x, wp, RM)
            .mul(&p, wp, RM)
            .sub(&b.mul(&p_prev, wp, RM), wp, RM)
            .div(&c, wp, RM);
        p_prev = p;
        p = next;
    }
    // P'_m = m (x P_m - P_{m-1}) / (x^2 - 1)
    let num = BigFloat::from_u32(m as u32, wp).mul(
        &x.mul(&p, wp, RM).sub(&p_prev, wp, RM),
        wp,
        RM,
    );
    let den = x.mul(x, wp, RM).sub(&one, wp, RM);
    (p.clone(), num.div(&den, wp, RM))
}

/// Gauss-Legendre nodes and weights on [-1, 1] at extended precision.
fn legendre_rule(m: usize, wp: usize) -> Vec<(BigFloat, BigFloat)> {
    let mut cc = Consts::new().unwrap();
    let pi = cc.pi(wp, RM);
    let two = BigFloat::from_u32(2, wp);
    let one = BigFloat::from_u32(1, wp);
    let mut rule = Vec::with_capacity(m);
    for i in 0..m {
        // Chebyshev-like initial guess, then Newton
        let num = BigFloat::from_f64(i as f64 + 0.75, wp);
        let den = BigFloat::from_f64(m as f64 + 0.5, wp);
        let theta = pi.mul(&num, wp, RM).div(&den, wp, RM);
        let mut x = theta.cos(wp, RM, &mut cc);
        for _ in 0..60 {
            let (p, dp) = legendre_with_derivative(m, &x, wp);
            let step = p.div(&dp, wp, RM);
            x = x.sub(&step, wp, RM);
            let step_exp = step.exponent().unwrap_or(i32::MIN);
            if step.is_zero() || step_exp < -(wp as i32) + 8 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(m, &x, wp);
        let w = two.div(
            &one.sub(&x.mul(&x, wp, RM), wp, RM)
                .mul(&dp.mul(&dp, wp, RM), wp, RM),
            wp,
            RM,
        );
        rule.push((x, w));
    }
    rule
}

/// Integral of `f` over fixed panels covering the integrand's support.
fn panel_integrate(
    f: &dyn Fn(&BigFloat) -> BigFloat,
    edges: &[f64],
    rule: &[(BigFloat, BigFloat)],
    wp: usize,
) -> BigFloat {
    let half = BigFloat::from_f64(0.5, wp);
    let mut total = BigFloat::new(wp);
    for pair in edges.windows(2) {
        let a = BigFloat::from_f64(pair[0], wp);
        let b = BigFloat::from_f64(pair[1], wp);
        let mid = a.add(&b, wp, RM).mul(&half, wp, RM);
        let rad = b.sub(&a, wp, RM).mul(&half, wp, RM);
        let mut acc = BigFloat::new(wp);
        for (x, w) in rule {
            let t = mid.add(&rad.mul(x, wp, RM), wp, RM);
            acc = acc.add(&w.mul(&f(&t), wp, RM), wp, RM);
        }
        total = total.add(&acc.mul(&rad, wp, RM), wp, RM);
    }
    total
}

fn quadrature_moment(series: &SeriesSolution, j: u32, square: bool) -> BigFloat {
    let wp = series.precision().significand_bits() + 64;
    let rule = legendre_rule(32, wp);
    let edges = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 110.0, 200.0];
    let f = |t: &BigFloat| -> BigFloat {
        let e = series.evaluate_big(t).unwrap();
        let v = if square { e.mul(&e, wp, RM) } else { e };
        v.mul(&t.powi(j as usize, wp, RM), wp, RM)
    };
    panel_integrate(&f, &edges, &rule, wp)
}

#[test]
fn legendre_rule_integrates_polynomials() {
    let wp = 192;
    let rule = legendre_rule(16, wp);
    // integral of x^8 over [-1,1] = 2/9
    let mut acc = BigFloat::new(wp);
    for (x, w) in &rule {
        acc = acc.add(&w.mul(&x.powi(8, wp, RM), wp, RM), wp, RM);
    }
    let expect = BigFloat::from_u32(2, wp).div(&BigFloat::from_u32(9, wp), wp, RM);
    let err = to_f64(&acc.sub(&expect, wp, RM).abs());
    assert!(err < 1e-40, "{err}");
}

#[test]
fn first_moments_match_quadrature_tightly() {
    // mu_0(E; 2) and mu_0(E^2; 2) against quadrature over [0, 200]
    let s = SeriesSolution::build_f64(2.0, PrecisionConfig::default()).unwrap();
    let wp = s.precision().significand_bits() + 64;
    let m0 = moment_e(&s, 0);
    let q0 = quadrature_moment(&s, 0, false);
    let d0 = to_f64(&m0.sub(&q0, wp, RM).abs());
    assert!(d0 < 1e-12, "mu_0(E): diff {d0}");
    assert!((to_f64(&m0) - 0.2887880950866024).abs() < 1e-15);

    let m02 = moment_e2(&s, 0);
    let q02 = quadrature_moment(&s, 0, true);
    let d02 = to_f64(&m02.sub(&q02, wp, RM).abs());
    assert!(d02 < 1e-12, "mu_0(E^2): diff {d02}");
    assert!((to_f64(&m02) - 0.025401105540470413).abs() < 1e-15);
}

#[test]
fn all_moments_match_quadrature() {
    for n in 1..=6u32 {
        let s = SeriesSolution::characteristic(n, PrecisionConfig::for_characteristic_index(n))
            .unwrap();
        let wp = s.precision().significand_bits() + 64;
        let top_scale = to_f64(&moment_e(&s, n - 1).abs());
        for j in 0..n {
            let series_val = moment_e(&s, j);
            let quad_val = quadrature_moment(&s, j, false);
            let diff = to_f64(&series_val.sub(&quad_val, wp, RM).abs());
            let sv = to_f64(&series_val.abs());
            if sv > 1e-20 * top_scale {
                assert!(diff <= 1e-10 * sv, "n={n} j={j} mu(E): rel {}", diff / sv);
            } else {
                // vanishing moment: both routes must agree it is negligible
                assert!(diff <= 1e-25, "n={n} j={j} vanishing mu(E): {diff}");
            }

            let series_sq = moment_e2(&s, j);
            let quad_sq = quadrature_moment(&s, j, true);
            let dq = to_f64(&series_sq.sub(&quad_sq, wp, RM).abs());
            let sq = to_f64(&series_sq.abs());
            assert!(dq <= 1e-10 * sq, "n={n} j={j} mu(E^2): rel {}", dq / sq);
        }
    }
}

#[test]
fn norm_from_moments_matches_quadrature_norm_route() {
    // || E ||_2 = sqrt(mu_0(E^2)) for alpha = 2, against the quadrature value
    let s = SeriesSolution::build_f64(2.0, PrecisionConfig::default()).unwrap();
    let wp = s.precision().significand_bits() + 64;
    let from_moments = to_f64(&moment_e2(&s, 0).sqrt(wp, RM));
    let from_quad = to_f64(&quadrature_moment(&s, 0, true).sqrt(wp, RM));
    assert!((from_moments - from_quad).abs() < 1e-13);
    let _ = bigfloat::from_f64(from_quad, 64);
}

//! Gauss-Laguerre nodes and weights for the weight `e^(-t)` on `[0, inf)`.
//!
//! Nodes are found by Newton iteration on the three-term recurrence with
//! chained initial guesses. The recurrence values overflow f64 far into the
//! spectrum (the polynomial grows like `x^n/n!`), so the iteration tracks a
//! shared logarithmic scale and renormalizes as it goes; Newton steps and the
//! weight formula only ever need scale-free ratios or log magnitudes.

use crate::bigfloat;
use crate::error::{Error, Result};
use astro_float::BigFloat;

/// Rescaling by an exact power of two keeps the tracked exponent exact;
/// the single conversion to a natural log happens once per evaluation.
const RESCALE_THRESHOLD: f64 = 1.3407807929942597e154; // 2^512
const RESCALE_FACTOR: f64 = 7.458340731200207e-155; // 2^-512

/// Working precision of the node polish pass. The f64 recurrence leaves
/// ~1e-13 relative noise near the smallest zeros; two extended Newton steps
/// restore full double accuracy for nodes and weights.
const POLISH_BITS: usize = 128;

/// One quadrature node with its weight kept in log form, so truncated grids
/// can combine it with exponential factors without underflow.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LaguerreNode {
    pub x: f64,
    pub ln_w: f64,
}

/// `(L_n(x), L_{n-1}(x))` up to a common factor `exp(log_scale)`.
fn laguerre_pair_scaled(n: usize, x: f64) -> (f64, f64, f64) {
    let mut prev = 0.0f64; // L_{k-1}
    let mut cur = 1.0f64; // L_k, starting at k = 0
    let mut rescales = 0i64;
    for k in 0..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
        if cur.abs().max(prev.abs()) > RESCALE_THRESHOLD {
            cur *= RESCALE_FACTOR;
            prev *= RESCALE_FACTOR;
            rescales += 1;
        }
    }
    let log_scale = (rescales * 512) as f64 * std::f64::consts::LN_2;
    (cur, prev, log_scale)
}

/// Rough f64 Newton pass; the extended-precision polish finishes the job,
/// so this only needs to land within the polish's quadratic basin.
fn newton_root(n: usize, guess: f64, lower: f64) -> Result<f64> {
    let nf = n as f64;
    let mut z = guess.max(lower + f64::EPSILON);
    for _ in 0..60 {
        let (pn, pn1, _) = laguerre_pair_scaled(n, z);
        // L_n'(x) = n (L_n - L_{n-1}) / x, so dz = z L_n / (n (L_n - L_{n-1}))
        let denom = nf * (pn - pn1);
        if denom == 0.0 {
            return Err(Error::Construction(format!(
                "laguerre newton: vanishing derivative near x = {z}"
            )));
        }
        let dz = z * pn / denom;
        let mut z_new = z - dz;
        if z_new <= lower {
            z_new = 0.5 * (z + lower);
        }
        let moved = (z_new - z).abs();
        z = z_new;
        if moved <= 1e-9 * z.max(1e-300) {
            break;
        }
    }
    Ok(z)
}

/// `(L_n(x), L_{n-1}(x))` in extended precision; BigFloat exponents cover the
/// recurrence's full dynamic range, so no rescaling is needed.
fn laguerre_pair_big(n: usize, x: &BigFloat) -> (BigFloat, BigFloat) {
    use crate::bigfloat::RM;
    let p = POLISH_BITS;
    let mut prev = BigFloat::new(p);
    let mut cur = BigFloat::from_u32(1, p);
    for k in 0..n {
        let a = BigFloat::from_f64(2.0 * k as f64 + 1.0, p).sub(x, p, RM);
        let next = a
            .mul(&cur, p, RM)
            .sub(&BigFloat::from_u32(k as u32, p).mul(&prev, p, RM), p, RM)
            .div(&BigFloat::from_u32(k as u32 + 1, p), p, RM);
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// Natural log of `|x|` read off the binary exponent and top mantissa word.
fn big_ln_abs(x: &BigFloat) -> f64 {
    let (words, _, _, e, _) = x.as_raw_parts().expect("finite recurrence value");
    let top = *words.last().unwrap() as f64 * 2f64.powi(-64);
    (e as f64) * std::f64::consts::LN_2 + top.ln()
}

/// Extended-precision Newton polish from the f64 root, plus the weight
/// evaluated from the extended recurrence values.
fn polish_root(n: usize, x0: f64) -> (f64, f64) {
    use crate::bigfloat::RM;
    let p = POLISH_BITS;
    let nf = BigFloat::from_u32(n as u32, p);
    let mut x = BigFloat::from_f64(x0, p);
    let mut pn1 = BigFloat::new(p);
    for _ in 0..6 {
        let (pn, prev) = laguerre_pair_big(n, &x);
        pn1 = prev;
        let denom = nf.mul(&pn.sub(&pn1, p, RM), p, RM);
        let dz = x.mul(&pn, p, RM).div(&denom, p, RM);
        x = x.sub(&dz, p, RM);
        let step_exp = dz.exponent().unwrap_or(i32::MIN);
        let x_exp = x.exponent().unwrap_or(0);
        if dz.is_zero() || step_exp < x_exp - 100 {
            break;
        }
    }
    let xf = bigfloat::to_f64(&x);
    let ln_w = xf.ln() - 2.0 * (n as f64).ln() - 2.0 * big_ln_abs(&pn1);
    (xf, ln_w)
}

pub(crate) fn nodes_scaled(n: usize) -> Result<Vec<LaguerreNode>> {
    if n < 1 || n > 10_000 {
        return Err(Error::Domain(format!(
            "gauss-laguerre size must be in 1..=10000, got {n}"
        )));
    }
    let nf = n as f64;
    let mut out: Vec<LaguerreNode> = Vec::with_capacity(n);
    let mut z = 0.0f64;
    for i in 0..n {
        z = match i {
            0 => 3.0 / (1.0 + 2.4 * nf),
            1 => z + 15.0 / (1.0 + 2.5 * nf),
            _ => {
                let ai = (i - 1) as f64;
                z + ((1.0 + 2.55 * ai) / (1.9 * ai)) * (z - out[i - 2].x)
            }
        };
        let lower = out.last().map_or(0.0, |p| p.x);
        let rough = newton_root(n, z, lower)?;
        let (root, ln_w) = polish_root(n, rough);
        if root <= lower {
            return Err(Error::Construction(format!(
                "laguerre nodes out of order at index {i}"
            )));
        }
        out.push(LaguerreNode { x: root, ln_w });
        z = root;
    }
    Ok(out)
}

/// The `n`-point Gauss-Laguerre rule. Weights in the far tail underflow to
/// zero in double precision; they are below 1e-300 there and contribute
/// nothing to sums of weighted samples.
pub fn gauss_laguerre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let nodes = nodes_scaled(n)?;
    let xs = nodes.iter().map(|p| p.x).collect();
    let ws = nodes.iter().map(|p| p.ln_w.exp()).collect();
    Ok((xs, ws))
}

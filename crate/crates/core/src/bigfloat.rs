//! Small helpers over [`astro_float::BigFloat`]: f64 round trips, exp/pow with a
//! thread-local constants cache, and decimal formatting with a chosen number of
//! significant digits.

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};
use std::cell::RefCell;

pub(crate) const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(
        Consts::new().expect("constants cache allocation"),
    );
}

pub(crate) fn with_consts<T>(f: impl FnOnce(&mut Consts) -> T) -> T {
    CONSTS.with(|c| f(&mut c.borrow_mut()))
}

pub fn from_f64(v: f64, bits: usize) -> BigFloat {
    BigFloat::from_f64(v, bits)
}

/// Rounds toward nearest; saturates to `±inf`/`0.0` outside the f64 range.
pub fn to_f64(x: &BigFloat) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_inf_pos() {
        return f64::INFINITY;
    }
    if x.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    if x.is_zero() {
        return 0.0;
    }
    let (words, _n, sign, e, _inexact) = x.as_raw_parts().expect("finite value");
    // Mantissa words are little endian and normalized: value = 0.m * 2^e.
    let len = words.len();
    let mut mant = words[len - 1] as f64 * 2f64.powi(-64);
    if len >= 2 {
        mant += words[len - 2] as f64 * 2f64.powi(-128);
    }
    let v = mant * (e as f64).exp2();
    match sign {
        Sign::Neg => -v,
        Sign::Pos => v,
    }
}

pub(crate) fn exp(x: &BigFloat, bits: usize) -> BigFloat {
    with_consts(|cc| x.exp(bits, RM, cc))
}

/// Binary exponent such that `|x| = 0.m * 2^exp`; `i32::MIN` for zero.
pub(crate) fn exponent_of(x: &BigFloat) -> i32 {
    if x.is_zero() {
        return i32::MIN;
    }
    x.exponent().unwrap_or(i32::MIN)
}

/// `2^(1/n)` at the requested precision.
pub(crate) fn two_pow_recip(n: u32, bits: usize) -> BigFloat {
    let two = BigFloat::from_u32(2, bits + 32);
    let expo = BigFloat::from_u32(1, bits + 32).div(&BigFloat::from_u32(n, bits + 32), bits + 32, RM);
    with_consts(|cc| two.pow(&expo, bits, RM, cc))
}

/// Decimal string with `sig` significant digits, scientific form `d.ddd...e±x`.
pub fn to_decimal_sci(x: &BigFloat, sig: usize) -> String {
    assert!(sig >= 1);
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_inf_pos() {
        return "inf".into();
    }
    if x.is_inf_neg() {
        return "-inf".into();
    }
    if x.is_zero() {
        return format!("0.{}e0", "0".repeat(sig - 1));
    }
    let (sign, digits, mut exp10) = with_consts(|cc| x.convert_to_radix(Radix::Dec, RM, cc))
        .expect("finite decimal conversion");
    // digits are most significant first; value = 0.d1d2... * 10^exp10
    let mut ds: Vec<u8> = digits;
    // strip leading zeros (convert_to_radix keeps the first digit nonzero, but be safe)
    while ds.first() == Some(&0) && ds.len() > 1 {
        ds.remove(0);
        exp10 -= 1;
    }
    // round to `sig` digits
    if ds.len() > sig {
        let round_up = ds[sig] >= 5;
        ds.truncate(sig);
        if round_up {
            let mut i = sig;
            loop {
                if i == 0 {
                    ds.insert(0, 1);
                    exp10 += 1;
                    ds.truncate(sig);
                    break;
                }
                i -= 1;
                if ds[i] == 9 {
                    ds[i] = 0;
                } else {
                    ds[i] += 1;
                    break;
                }
            }
        }
    } else {
        while ds.len() < sig {
            ds.push(0);
        }
    }
    let mut s = String::new();
    if sign == Sign::Neg {
        s.push('-');
    }
    s.push((b'0' + ds[0]) as char);
    s.push('.');
    for &d in &ds[1..] {
        s.push((b'0' + d) as char);
    }
    // value = d.ddd * 10^(exp10 - 1)
    s.push('e');
    s.push_str(&(exp10 - 1).to_string());
    s
}

/// Decimal string with `sig` significant digits; plain positional form when the
/// exponent is moderate, scientific otherwise.
pub fn to_decimal_plain(x: &BigFloat, sig: usize) -> String {
    let sci = to_decimal_sci(x, sig);
    let Some(epos) = sci.find('e') else { return sci };
    let exp: i64 = sci[epos + 1..].parse().unwrap();
    if !(-4..=(sig as i64 + 2)).contains(&exp) {
        return sci;
    }
    let neg = sci.starts_with('-');
    let digits: String = sci[..epos].chars().filter(|c| c.is_ascii_digit()).collect();
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if exp < 0 {
        out.push_str("0.");
        out.push_str(&"0".repeat((-exp - 1) as usize));
        out.push_str(&digits);
    } else {
        let point = exp as usize + 1;
        if point >= digits.len() {
            out.push_str(&digits);
            out.push_str(&"0".repeat(point - digits.len()));
            out.push('.');
        } else {
            out.push_str(&digits[..point]);
            out.push('.');
            out.push_str(&digits[point..]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_round_trip() {
        for &v in &[0.0, 1.0, -1.5, 3.25e-200, -7.1e150, 0.1, std::f64::consts::PI] {
            let b = from_f64(v, 192);
            let back = to_f64(&b);
            assert_eq!(v, back, "round trip of {v}");
        }
    }

    #[test]
    fn to_f64_saturates() {
        let huge = BigFloat::from_u32(2, 128).powi(1 << 20, 128, RM);
        assert!(to_f64(&huge).is_infinite());
        let tiny = BigFloat::from_u32(1, 128).div(&huge, 128, RM);
        assert_eq!(to_f64(&tiny), 0.0);
    }

    #[test]
    fn two_pow_recip_squares_back() {
        let r = two_pow_recip(2, 256);
        let sq = r.mul(&r, 256, RM);
        let err = sq.sub(&BigFloat::from_u32(2, 256), 256, RM).abs();
        assert!(to_f64(&err) < 1e-70);
    }

    #[test]
    fn decimal_formatting() {
        let x = from_f64(-809.3665721, 256);
        let s = to_decimal_plain(&x, 10);
        assert!(s.starts_with("-809.366572"), "{s}");
        let y = from_f64(0.001234, 256);
        assert!(to_decimal_plain(&y, 4).starts_with("0.001234"));
        let z = from_f64(1.5e-30, 256);
        let zs = to_decimal_sci(&z, 6);
        assert!(zs.contains('e'), "{zs}");
    }
}

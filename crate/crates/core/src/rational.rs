//! Exact rational helpers shared by every module.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{invalid, Result};

/// Exact rational number.
pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses `p/q`, an integer, or a decimal literal (`0.25`) exactly.
pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| invalid(format!("bad rational `{s}`")))?;
        let d: BigInt = d.trim().parse().map_err(|_| invalid(format!("bad rational `{s}`")))?;
        if d.is_zero() {
            return Err(invalid(format!("zero denominator in `{s}`")));
        }
        return Ok(Q::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.trim_start().starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        let n: BigInt = digits.parse().map_err(|_| invalid(format!("bad decimal `{s}`")))?;
        let d = BigInt::from(10).pow(frac.len() as u32);
        let v = Q::new(n, d);
        return Ok(if neg { -v } else { v });
    }
    let n: BigInt = s.parse().map_err(|_| invalid(format!("bad number `{s}`")))?;
    Ok(Q::from_integer(n))
}

/// Exact rational value of a finite float.
pub fn q_from_f64(x: f64) -> Result<Q> {
    Q::from_float(x).ok_or_else(|| invalid(format!("non-finite float {x}")))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `p/q` form, or just `p` for integers.
pub fn fmt_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn floor_int(x: &Q) -> BigInt {
    x.numer().div_floor(x.denom())
}

pub fn ceil_int(x: &Q) -> BigInt {
    -((-x.numer()).div_floor(x.denom()))
}

/// Fractional part in `[0, 1)`.
pub fn frac(x: &Q) -> Q {
    x - Q::from_integer(floor_int(x))
}

pub fn is_nonneg(x: &Q) -> bool {
    !x.is_negative()
}

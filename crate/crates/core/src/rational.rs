//! Exact rational scalars and their text forms.
//!
//! Every quantity in this crate (breakpoints, densities, claims, utilities,
//! prices) is a `BigRational`. Serialized form is a string: an integer
//! (`"10"`), a decimal (`"0.35"`), or a fraction (`"7/10"`). Floating point
//! is confined to the iterative equilibrium solver and to report rendering.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::str::FromStr;

use crate::error::{Error, Result};

pub type Rat = BigRational;

/// Shorthand for small constants: `rat(3, 10)` is 3/10.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Parses `"p/q"`, `"12"`, `"0.35"`, with an optional leading sign.
pub fn parse_rat(text: &str) -> Result<Rat> {
    let s = text.trim();
    let err = || Error::MalformedNumber(text.to_string());
    if s.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = s.split_once('/') {
        let n = BigInt::from_str(num.trim()).map_err(|_| err())?;
        let d = BigInt::from_str(den.trim()).map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rat::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let (sign, whole) = match whole.as_bytes().first() {
            Some(b'-') => (-1, &whole[1..]),
            Some(b'+') => (1, &whole[1..]),
            _ => (1, whole),
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let whole = if whole.is_empty() { "0" } else { whole };
        if !whole.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let int_part = BigInt::from_str(whole).map_err(|_| err())?;
        let frac_part = BigInt::from_str(frac).map_err(|_| err())?;
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let value = Rat::from_integer(int_part) + Rat::new(frac_part, scale);
        return Ok(if sign < 0 { -value } else { value });
    }
    BigInt::from_str(s).map(Rat::from_integer).map_err(|_| err())
}

/// Canonical text form: `"3/10"`, or `"4"` when the denominator is 1.
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Fall back to a quotient of lossy conversions for extreme magnitudes.
        let n = r.numer().to_f64().unwrap_or(f64::MAX);
        let d = r.denom().to_f64().unwrap_or(f64::MAX);
        n / d
    })
}

/// Exact f64 -> rational embedding (every finite float is a rational).
pub fn rat_from_f64(x: f64) -> Option<Rat> {
    Rat::from_float(x)
}

/// Renders `r` rounded half-up to 12 decimal places, e.g. `8/5` ->
/// `"1.600000000000"`. Used only for report output.
pub fn format_decimal(r: &Rat) -> String {
    const PLACES: u32 = 12;
    let scale = BigInt::from(10u32).pow(PLACES);
    let scaled = r * Rat::from_integer(scale.clone());
    let rounded = scaled.round().to_integer();
    let negative = rounded.is_negative();
    let digits = rounded.abs().to_string();
    let digits = if digits.len() <= PLACES as usize {
        format!("{}{}", "0".repeat(PLACES as usize + 1 - digits.len()), digits)
    } else {
        digits
    };
    let (int_part, frac_part) = digits.split_at(digits.len() - PLACES as usize);
    format!("{}{}.{}", if negative { "-" } else { "" }, int_part, frac_part)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_forms() {
        assert_eq!(parse_rat("7/10").unwrap(), rat(7, 10));
        assert_eq!(parse_rat("0.35").unwrap(), rat(7, 20));
        assert_eq!(parse_rat("12").unwrap(), rat_int(12));
        assert_eq!(parse_rat("-3/4").unwrap(), rat(-3, 4));
        assert_eq!(parse_rat(" 1/2 ").unwrap(), rat(1, 2));
        assert_eq!(parse_rat("2/4").unwrap(), rat(1, 2));
    }

    #[test]
    fn rejects_junk() {
        for bad in ["", "x", "1/0", "1.2.3", "1/ /2", "0x10", ".", "1.", "--2"] {
            assert!(parse_rat(bad).is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn round_trips_canonical_form() {
        for text in ["7/10", "0", "4", "-3/4", "123456789/1000003"] {
            let r = parse_rat(text).unwrap();
            assert_eq!(format_rat(&r), text.to_string());
            assert_eq!(parse_rat(&format_rat(&r)).unwrap(), r);
        }
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(format_decimal(&rat(8, 5)), "1.600000000000");
        assert_eq!(format_decimal(&rat(25, 3)), "8.333333333333");
        assert_eq!(format_decimal(&rat(0, 1)), "0.000000000000");
        assert_eq!(format_decimal(&rat(-1, 3)), "-0.333333333333");
    }
}

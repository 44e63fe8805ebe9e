//! Exact rational scalars.
//!
//! [`Rat`] is an arbitrary-precision rational; everything in this crate that
//! looks like a number is one. The helpers here cover `p/q` parsing and
//! formatting, integer powers, exact roots, and the generalized binomial
//! coefficients used to expand `(1 - x)^e` for rational `e`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, Zero};

use crate::{Error, Result};

/// Arbitrary-precision rational number.
pub type Rat = BigRational;

/// `num / den` as a [`Rat`]. Panics if `den == 0`.
pub fn rat(num: i64, den: i64) -> Rat {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Integer `n` as a [`Rat`].
pub fn rat_int(n: i64) -> Rat {
    BigRational::from_integer(BigInt::from(n))
}

/// Formats as `p` for integers and `p/q` otherwise (`q > 0`, fully reduced).
pub fn format_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `p` or `p/q` (optionally signed; surrounding whitespace ignored).
pub fn parse_rat(s: &str) -> Result<Rat> {
    let t = s.trim();
    let (ns, ds) = match t.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (t, "1"),
    };
    let num: BigInt = ns
        .parse()
        .map_err(|_| Error::Validation(format!("bad rational numerator in {t:?}")))?;
    let den: BigInt = ds
        .parse()
        .map_err(|_| Error::Validation(format!("bad rational denominator in {t:?}")))?;
    if den.is_zero() {
        return Err(Error::Validation(format!("zero denominator in {t:?}")));
    }
    Ok(BigRational::new(num, den))
}

/// `base^exp` for integer `exp`; rejects `0` raised to a negative power.
pub fn pow_i(base: &Rat, exp: i64) -> Result<Rat> {
    if base.is_zero() && exp < 0 {
        return Err(Error::NotInvertible("0 raised to a negative power".into()));
    }
    let e = i32::try_from(exp)
        .map_err(|_| Error::Validation(format!("exponent {exp} out of range")))?;
    Ok(base.pow(e))
}

/// Exact square root, if one exists in the rationals.
pub fn sqrt_exact(r: &Rat) -> Result<Rat> {
    nth_root_exact(r, 2)
}

/// Exact `n`-th root, if one exists in the rationals.
pub fn nth_root_exact(r: &Rat, n: u32) -> Result<Rat> {
    assert!(n >= 1, "root index must be positive");
    if n == 1 {
        return Ok(r.clone());
    }
    if r.is_negative() && n % 2 == 0 {
        return Err(Error::FractionalPower(format!(
            "even root of negative value {}",
            format_rat(r)
        )));
    }
    let int_root = |x: &BigInt| -> Option<BigInt> {
        let c = x.nth_root(n);
        if c.clone().pow(n) == *x {
            Some(c)
        } else {
            None
        }
    };
    let err = || Error::FractionalPower(format!("{} is not an exact {n}-th power", format_rat(r)));
    let num = int_root(r.numer()).ok_or_else(err)?;
    let den = int_root(r.denom()).ok_or_else(err)?;
    Ok(BigRational::new(num, den))
}

/// Normalizes an exponent fraction: positive denominator, lowest terms,
/// canonical zero `(0, 1)`.
pub(crate) fn frac_norm(num: i64, den: i64) -> (i64, i64) {
    assert!(den != 0, "exponent fraction needs a nonzero denominator");
    let (mut n, mut d) = (num, den);
    if d < 0 {
        n = -n;
        d = -d;
    }
    if n == 0 {
        return (0, 1);
    }
    let g = num_integer::Integer::gcd(&n, &d);
    (n / g, d / g)
}

pub(crate) fn frac_add(a: (i64, i64), b: (i64, i64)) -> (i64, i64) {
    frac_norm(a.0 * b.1 + b.0 * a.1, a.1 * b.1)
}

pub(crate) fn frac_sub(a: (i64, i64), b: (i64, i64)) -> (i64, i64) {
    frac_add(a, (-b.0, b.1))
}

/// `a <= b` for exponent fractions with positive denominators.
pub(crate) fn frac_le(a: (i64, i64), b: (i64, i64)) -> bool {
    a.0 * b.1 <= b.0 * a.1
}

/// Largest integer `<= num/den`.
pub(crate) fn floor_frac(order: (i64, i64)) -> i64 {
    let (n, d) = frac_norm(order.0, order.1);
    n.div_euclid(d)
}

/// Generalized binomial coefficient `C(n, k) = n (n-1) ... (n-k+1) / k!`
/// for rational `n`.
pub fn binomial_rat(n: &Rat, k: u64) -> Rat {
    let mut acc = Rat::one();
    for j in 0..k {
        acc *= n - rat_int(j as i64);
        acc /= rat_int((j + 1) as i64);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_format_round_trip() {
        for s in ["0", "5", "-3", "3/4", "-7/2", "22/7"] {
            let r = parse_rat(s).unwrap();
            assert_eq!(format_rat(&r), s);
        }
        assert_eq!(format_rat(&parse_rat(" 6/4 ").unwrap()), "3/2");
        assert_eq!(format_rat(&parse_rat("4/2").unwrap()), "2");
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
    }

    #[test]
    fn integer_powers() {
        assert_eq!(pow_i(&rat(2, 3), 3).unwrap(), rat(8, 27));
        assert_eq!(pow_i(&rat(2, 3), -2).unwrap(), rat(9, 4));
        assert_eq!(pow_i(&rat(5, 1), 0).unwrap(), rat_int(1));
        assert!(pow_i(&rat_int(0), -1).is_err());
    }

    #[test]
    fn exact_roots() {
        assert_eq!(sqrt_exact(&rat(9, 4)).unwrap(), rat(3, 2));
        assert_eq!(nth_root_exact(&rat(-27, 8), 3).unwrap(), rat(-3, 2));
        assert!(sqrt_exact(&rat_int(2)).is_err());
        assert!(sqrt_exact(&rat_int(-1)).is_err());
        assert_eq!(nth_root_exact(&rat_int(0), 2).unwrap(), rat_int(0));
    }

    #[test]
    fn generalized_binomials() {
        assert_eq!(binomial_rat(&rat_int(5), 2), rat_int(10));
        assert_eq!(binomial_rat(&rat_int(-1), 3), rat_int(-1));
        // C(1/2, 2) = (1/2)(-1/2)/2 = -1/8
        assert_eq!(binomial_rat(&rat(1, 2), 2), rat(-1, 8));
        assert_eq!(binomial_rat(&rat_int(3), 0), rat_int(1));
        assert_eq!(binomial_rat(&rat_int(3), 5), rat_int(0));
    }
}

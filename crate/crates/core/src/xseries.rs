//! Power series in a formal variable `x` over the coefficient ring of
//! [`RatFunY`] values.
//!
//! A characteristic power series `Q(x) = 1 + a_1 x + a_2 x^2 + ...` determines
//! a genus: the genus of an `n`-dimensional space is read off from `x^n`
//! coefficients of products of copies of `Q`. This module supplies just
//! enough calculus for that — truncated multiplication, reciprocals,
//! rescaling of `x`, and division by `x` — with coefficients that may carry
//! a tracked pole at `y = 1`.
//!
//! A [`CharSeries`] of order `n` stores coefficients of `x^0 .. x^n` and
//! certifies nothing beyond; operations shrink the order the way truncated
//! `q`-series arithmetic shrinks `q_max`.

use crate::qseries::QYSeries;
use crate::rat::{pow_i, Rat};
use crate::ratfun::RatFunY;
use crate::{Error, Result};

/// Truncated power series in `x` with [`RatFunY`] coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharSeries {
    /// `coeffs[k]` multiplies `x^k`; the series is certified through
    /// `x^(coeffs.len() - 1)`.
    coeffs: Vec<RatFunY>,
}

impl CharSeries {
    /// Builds from explicit coefficients of `x^0 .. x^n`.
    pub fn new(coeffs: Vec<RatFunY>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Validation(
                "a power series in x needs at least the x^0 coefficient".into(),
            ));
        }
        Ok(CharSeries { coeffs })
    }

    /// Builds coefficient `k` as `f(k)` for `k = 0 ..= order`.
    pub fn from_fn(order: usize, mut f: impl FnMut(usize) -> RatFunY) -> Self {
        CharSeries {
            coeffs: (0..=order).map(&mut f).collect(),
        }
    }

    /// The constant series `1` certified through `x^order`.
    pub fn one(order: usize) -> Self {
        Self::from_fn(order, |k| if k == 0 { RatFunY::one() } else { RatFunY::zero() })
    }

    /// Highest certified power of `x`.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient of `x^k`; `None` beyond the certified order.
    pub fn coeff(&self, k: usize) -> Option<&RatFunY> {
        self.coeffs.get(k)
    }

    /// Drops certification beyond `x^order`.
    pub fn truncate_x(&self, order: usize) -> Self {
        CharSeries {
            coeffs: self.coeffs[..=order.min(self.order())].to_vec(),
        }
    }

    /// Truncates every coefficient to the `q`-order `q_bound` if tighter.
    pub fn truncate_q(&self, q_bound: (i64, i64)) -> Self {
        CharSeries {
            coeffs: self.coeffs.iter().map(|c| c.truncate(q_bound)).collect(),
        }
    }

    /// Index of the first coefficient with stored terms, as a certified lower
    /// bound for the `x`-valuation (`order + 1` when all stored are zero).
    fn val_floor(&self) -> usize {
        self.coeffs
            .iter()
            .position(|c| !c.is_zero())
            .unwrap_or(self.coeffs.len())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        Self::from_fn(n, |k| self.coeffs[k].add(&other.coeffs[k]))
    }

    pub fn neg(&self) -> Self {
        CharSeries {
            coeffs: self.coeffs.iter().map(|c| c.neg()).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Multiplies every coefficient by a fixed value.
    pub fn scale(&self, f: &RatFunY) -> Self {
        CharSeries {
            coeffs: self.coeffs.iter().map(|c| c.mul(f)).collect(),
        }
    }

    /// Product, certified through the order that survives the error analysis
    /// (errors enter at `val(a) + B + 1`, `val(b) + A + 1`, and `A + B + 2`).
    pub fn mul(&self, other: &Self) -> Self {
        let (a_ord, b_ord) = (self.order(), other.order());
        let (va, vb) = (self.val_floor(), other.val_floor());
        let bound = (va + b_ord)
            .min(vb + a_ord)
            .min(a_ord + b_ord + 1);
        let mut coeffs = vec![RatFunY::zero(); bound + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if i + j > bound {
                    break;
                }
                if b.is_zero() {
                    continue;
                }
                coeffs[i + j] = coeffs[i + j].add(&a.mul(b));
            }
        }
        CharSeries { coeffs }
    }

    /// Reciprocal; the `x^0` coefficient must be invertible.
    pub fn recip(&self) -> Result<Self> {
        let n = self.order();
        let c0_inv = self.coeffs[0].recip()?;
        // Normalize to 1 - u with val(u) >= 1, then sum the geometric series.
        let norm = self.scale(&c0_inv);
        let u = Self::one(n).sub(&norm);
        debug_assert!(u.coeffs[0].is_zero());
        let mut acc = Self::one(n);
        let mut pw = u.clone();
        for _ in 0..n {
            acc = acc.add(&pw);
            pw = pw.mul(&u).truncate_x(n);
        }
        Ok(acc.scale(&c0_inv))
    }

    /// Integer power; negative exponents go through [`CharSeries::recip`].
    pub fn pow(&self, e: i64) -> Result<Self> {
        if e == 0 {
            return Ok(Self::one(self.order()));
        }
        let base = if e < 0 { self.recip()? } else { self.clone() };
        let mut acc: Option<CharSeries> = None;
        let mut sq = base;
        let mut rem = e.unsigned_abs();
        while rem > 0 {
            if rem & 1 == 1 {
                acc = Some(match acc {
                    None => sq.clone(),
                    Some(r) => r.mul(&sq),
                });
            }
            rem >>= 1;
            if rem > 0 {
                sq = sq.mul(&sq.clone());
            }
        }
        Ok(acc.expect("nonzero exponent"))
    }

    /// Substitutes `x -> c x`, scaling the `x^k` coefficient by `c^k`.
    pub fn scale_x(&self, c: &Rat) -> Self {
        CharSeries {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, a)| a.scale(&pow_i(c, k as i64).expect("nonnegative power")))
                .collect(),
        }
    }

    /// Divides by `x`: the `x^0` coefficient must vanish identically.
    pub fn div_x(&self) -> Result<Self> {
        if !self.coeffs[0].is_zero() {
            return Err(Error::Validation(
                "cannot divide by x: the x^0 coefficient is nonzero".into(),
            ));
        }
        if self.order() == 0 {
            return Err(Error::Validation(
                "cannot divide by x: no certified coefficients would remain".into(),
            ));
        }
        Ok(CharSeries {
            coeffs: self.coeffs[1..].to_vec(),
        })
    }
}

/// The series `e^(s x)` through `x^order`, with rational `s`.
pub fn exp_x(s: &Rat, order: usize) -> CharSeries {
    let mut c = Rat::from_integer(1.into());
    CharSeries::from_fn(order, |k| {
        if k > 0 {
            c *= s / Rat::from_integer(i64::try_from(k).expect("small order").into());
        }
        RatFunY::from_series(&QYSeries::constant(&c))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_int};

    fn from_consts(v: &[Rat]) -> CharSeries {
        CharSeries::new(
            v.iter()
                .map(|c| RatFunY::from_series(&QYSeries::constant(c)))
                .collect(),
        )
        .unwrap()
    }

    fn const_coeff(s: &CharSeries, k: usize) -> Rat {
        s.coeff(k)
            .unwrap()
            .to_series()
            .unwrap()
            .coeff((0, 1), (0, 1))
    }

    #[test]
    fn exponentials_cancel() {
        let n = 6;
        let prod = exp_x(&rat_int(1), n).mul(&exp_x(&rat_int(-1), n));
        assert_eq!(prod.order(), n);
        assert_eq!(const_coeff(&prod, 0), rat_int(1));
        for k in 1..=n {
            assert_eq!(const_coeff(&prod, k), rat_int(0), "x^{k}");
        }
    }

    #[test]
    fn todd_series_oracle() {
        // x / (1 - e^{-x}) = 1 + x/2 + x^2/12 + 0·x^3 - x^4/720 + ...
        let n = 6;
        let one = CharSeries::one(n);
        let numerator = one.sub(&exp_x(&rat_int(-1), n));
        let todd = numerator.div_x().unwrap().recip().unwrap();
        assert_eq!(const_coeff(&todd, 0), rat_int(1));
        assert_eq!(const_coeff(&todd, 1), rat(1, 2));
        assert_eq!(const_coeff(&todd, 2), rat(1, 12));
        assert_eq!(const_coeff(&todd, 3), rat_int(0));
        assert_eq!(const_coeff(&todd, 4), rat(-1, 720));
    }

    #[test]
    fn reciprocal_inverts() {
        let s = from_consts(&[rat_int(2), rat_int(1), rat(1, 3), rat_int(-1), rat(5, 2)]);
        let r = s.recip().unwrap();
        let prod = s.mul(&r);
        assert_eq!(const_coeff(&prod, 0), rat_int(1));
        for k in 1..=prod.order() {
            assert_eq!(const_coeff(&prod, k), rat_int(0), "x^{k}");
        }
    }

    #[test]
    fn mul_respects_valuation_bounds() {
        // x^2 "through x^5" times e^x "through x^5": the unknown x^6 part of
        // the first factor meets the constant of the second, so the product
        // is certified through x^5 only — but no further terms are lost,
        // since the x^2 valuation pushes the *second* factor's error out.
        let n = 5;
        let x2 = CharSeries::from_fn(n, |k| {
            if k == 2 {
                RatFunY::one()
            } else {
                RatFunY::zero()
            }
        });
        let e = exp_x(&rat_int(1), n);
        let p = x2.mul(&e);
        assert_eq!(p.order(), n);
        assert_eq!(const_coeff(&p, n), rat(1, 6));
        assert_eq!(const_coeff(&p, 2), rat_int(1));
        assert_eq!(const_coeff(&p, 0), rat_int(0));
    }

    #[test]
    fn scale_x_rescales() {
        let e = exp_x(&rat_int(1), 4).scale_x(&rat_int(2));
        assert_eq!(const_coeff(&e, 3), rat(8, 6));
        let e2 = exp_x(&rat_int(2), 4);
        assert_eq!(e, e2);
    }

    #[test]
    fn div_x_requires_zero_constant() {
        let s = from_consts(&[rat_int(1), rat_int(1)]);
        assert!(s.div_x().is_err());
    }
}

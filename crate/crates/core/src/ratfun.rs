//! Series with a tracked pole at `y = 1`.
//!
//! Lattice-point sums for toric varieties and hypersurfaces contain geometric
//! factors `1/(1 - y)` coming from lattice directions with zero `q`-exponent.
//! Those factors cannot be expanded as honest `q`,`y`-series — their `y`
//! support would be infinite — but they always cancel in the full sum. A
//! [`RatFunY`] keeps such intermediate values exact as `num / (1 - y)^pole`
//! with `num` a [`QYSeries`]; representations are normalized by dividing out
//! every `(1 - y)` factor the numerator carries, so a fully cancelled value
//! reports `pole() == 0` and converts back to a series losslessly.

use crate::qseries::QYSeries;
use crate::rat::Rat;
use crate::{Error, Result};

/// An exact value `num / (1 - y)^pole`, normalized so that the numerator is
/// not divisible by `(1 - y)` whenever `pole > 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatFunY {
    num: QYSeries,
    pole: u32,
}

impl RatFunY {
    /// Wraps a series as a pole-free value.
    pub fn from_series(s: &QYSeries) -> Self {
        RatFunY {
            num: s.clone(),
            pole: 0,
        }
        .normalized()
    }

    /// The exact zero.
    pub fn zero() -> Self {
        Self::from_series(&QYSeries::zero())
    }

    /// The exact one.
    pub fn one() -> Self {
        Self::from_series(&QYSeries::one())
    }

    /// The pure pole `1 / (1 - y)^order`.
    pub fn geom_pole(order: u32) -> Self {
        RatFunY {
            num: QYSeries::one(),
            pole: order,
        }
    }

    /// Numerator of the normalized representation.
    pub fn num(&self) -> &QYSeries {
        &self.num
    }

    /// Pole order at `y = 1` of the normalized representation.
    pub fn pole(&self) -> u32 {
        self.pole
    }

    /// True when the numerator stores no terms (for a truncated numerator this
    /// only certifies vanishing through its `q`-order).
    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Divides out every `(1 - y)` factor the numerator carries. An empty
    /// numerator is divisible by anything, so it always normalizes to pole 0.
    fn normalized(mut self) -> Self {
        while self.pole > 0 {
            match self.num.div_one_minus_y() {
                Some(q) => {
                    self.num = q;
                    self.pole -= 1;
                }
                None => break,
            }
        }
        self
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let p = self.pole.max(other.pole);
        let raise = |f: &Self| {
            if f.pole == p {
                f.num.clone()
            } else {
                f.num.mul(&QYSeries::one_minus_y_pow(p - f.pole))
            }
        };
        RatFunY {
            num: raise(self).add(&raise(other)),
            pole: p,
        }
        .normalized()
    }

    pub fn neg(&self) -> Self {
        RatFunY {
            num: self.num.neg(),
            pole: self.pole,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        RatFunY {
            num: self.num.mul(&other.num),
            pole: self.pole + other.pole,
        }
        .normalized()
    }

    pub fn scale(&self, c: &Rat) -> Self {
        RatFunY {
            num: self.num.scale(c),
            pole: self.pole,
        }
    }

    /// Multiplies by a plain series.
    pub fn mul_series(&self, s: &QYSeries) -> Self {
        RatFunY {
            num: self.num.mul(s),
            pole: self.pole,
        }
        .normalized()
    }

    /// Multiplies by the monomial `q^dq`.
    pub fn shift_q(&self, dq: (i64, i64)) -> Self {
        RatFunY {
            num: self.num.shift_q(dq),
            pole: self.pole,
        }
    }

    /// Lowers the numerator's certified `q`-order to `q_bound` if tighter.
    pub fn truncate(&self, q_bound: (i64, i64)) -> Self {
        RatFunY {
            num: self.num.truncate(q_bound),
            pole: self.pole,
        }
    }

    /// Reciprocal. The numerator may itself carry `(1 - y)` factors; they are
    /// extracted first, and what remains must have a single-monomial leading
    /// `q`-slice.
    pub fn recip(&self) -> Result<Self> {
        if self.num.is_zero() {
            return Err(Error::NotInvertible(
                "numerator has no terms within its certified order".into(),
            ));
        }
        let mut unit = self.num.clone();
        let mut extracted: u32 = 0;
        let unit_inv = loop {
            match unit.recip() {
                Ok(r) => break r,
                Err(e) => match unit.div_one_minus_y() {
                    Some(q) => {
                        unit = q;
                        extracted += 1;
                    }
                    None => return Err(e),
                },
            }
        };
        // 1 / (num / (1-y)^pole) = (1-y)^(pole - extracted) / unit.
        if self.pole >= extracted {
            Ok(RatFunY {
                num: unit_inv.mul(&QYSeries::one_minus_y_pow(self.pole - extracted)),
                pole: 0,
            }
            .normalized())
        } else {
            Ok(RatFunY {
                num: unit_inv,
                pole: extracted - self.pole,
            })
        }
    }

    /// Integer power; negative exponents go through [`RatFunY::recip`].
    pub fn pow(&self, e: i64) -> Result<Self> {
        if e == 0 {
            return Ok(Self::one());
        }
        let base = if e < 0 { self.recip()? } else { self.clone() };
        let mut acc: Option<RatFunY> = None;
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

    /// Converts back to a plain series. Fails with [`Error::PoleClearance`]
    /// when a genuine pole at `y = 1` remains.
    pub fn to_series(&self) -> Result<QYSeries> {
        if self.pole > 0 {
            let slice = self
                .num
                .min_q()
                .map(|(n, d)| {
                    if d == 1 {
                        n.to_string()
                    } else {
                        format!("({n}/{d})")
                    }
                })
                .unwrap_or_else(|| "?".into());
            return Err(Error::PoleClearance {
                order: self.pole,
                slice,
            });
        }
        Ok(self.num.clone())
    }
}

impl std::ops::Add for &RatFunY {
    type Output = RatFunY;
    fn add(self, rhs: &RatFunY) -> RatFunY {
        RatFunY::add(self, rhs)
    }
}

impl std::ops::Sub for &RatFunY {
    type Output = RatFunY;
    fn sub(self, rhs: &RatFunY) -> RatFunY {
        RatFunY::sub(self, rhs)
    }
}

impl std::ops::Mul for &RatFunY {
    type Output = RatFunY;
    fn mul(self, rhs: &RatFunY) -> RatFunY {
        RatFunY::mul(self, rhs)
    }
}

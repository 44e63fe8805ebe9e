//! Generating functions for genera of symmetric products.
//!
//! For the quotients `X^n / Sigma_n` there are two distinct product
//! formulas, and this module implements both. Writing the two-variable
//! genus of the smooth compact `X` as `Ell(X) = sum c(m,l) q^m y^l`, the
//! *naive* genus of the quotient — the average `1/|G| sum_g L(g, .)` of
//! holomorphic Lefschetz numbers of the elliptic-genus bundle — has
//!
//! ```text
//! sum_n Ell(X^n/Sigma_n) t^n = prod_{m,l} (1 - t q^m y^l)^{-c(m,l)},
//! ```
//!
//! while the *orbifold* genus obeys the second-quantization product
//!
//! ```text
//! sum_n Ell_orb(X^n, Sigma_n) p^n
//!     = prod_{i>=1} prod_{m,l} (1 - p^i q^m y^l)^{-c(mi,l)}.
//! ```
//!
//! The two series genuinely differ beyond `t^1`; both are computed here so
//! the difference can be reported rather than glossed over.
//!
//! The naive formula is proved by summing Lefschetz numbers over the
//! conjugacy classes of `Sigma_n`. A class is a partition with `a_i`
//! cycles of length `i`, its centralizer has order `prod a_i! i^{a_i}`,
//! and the Lefschetz number of a length-`i` cycle is the *rescaling*
//! `L(sigma_i, X^i) = Ell(X)(q^i, y^i)`. That yields the partition sum
//!
//! ```text
//! sum_n Ell(X^n/Sigma_n) t^n
//!     = prod_i sum_k Ell(q^i, y^i)^k t^{ki} / (k! i^k),
//! ```
//!
//! which [`sym_product_direct`] evaluates verbatim as an independent oracle
//! for the closed product.
//!
//! Specializing `q = 0` collapses the naive product to the chi_y level via
//! `c(0, l) = (-1)^p chi^p` with `p = l + d/2` (the engine's calibration
//! `chi_y(P^1) = 1 - y` fixes all signs), giving
//!
//! ```text
//! sum_n chi_y(X^n/Sigma_n) t^n = prod_p (1 - t(-y)^p)^{-(-1)^p chi^p},
//! ```
//!
//! and evaluating `y` further at `-1` and `+1` gives the classical Euler
//! and signature towers `(1-t)^{-e}` and
//! `(1+t)^{(sigma-e)/2} / (1-t)^{(sigma+e)/2}`.
//!
//! Half-integral `y`-exponents (odd-dimensional `X`) are stored with
//! doubled numerators so every `(1 - t q^m y^l)` factor is an honest
//! monomial shift; all expansions are exact binomial series over the
//! integers, and every coefficient of every tower is asserted integral at
//! construction of the input table.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::qseries::{Discrepancy, QYSeries};
use crate::rat::{rat, rat_int, Rat};
use crate::{Error, Result};

/// The exact coefficient table `c(m, l)` of a two-variable genus, together
/// with the complex dimension that fixes the `y`-exponent parity.
///
/// Keys store the doubled `y`-exponent `2l`, which is an integer congruent
/// to `d` modulo 2; values are integers — a non-integral coefficient is
/// rejected at construction as a corrupt input. `q_order` is the certified
/// truncation inherited from the source series (`None` when exact).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenusCoefficients {
    dim: i64,
    c: BTreeMap<(i64, i64), BigInt>,
    q_order: Option<i64>,
}

impl GenusCoefficients {
    /// Extracts the table from a genus series of a `dim`-dimensional
    /// manifold, validating integrality, exponent parity, and the index
    /// bound `|l| <= d/2` on the `q^0` slice.
    pub fn from_series(ell: &QYSeries, dim: i64) -> Result<Self> {
        if dim < 0 {
            return Err(Error::Validation(format!(
                "complex dimension must be nonnegative, got {dim}"
            )));
        }
        let mut c = BTreeMap::new();
        for ((qn, qd), (yn, yd), coeff) in ell.iter_terms() {
            if qd != 1 {
                return Err(Error::Validation(format!(
                    "genus table needs integral q-exponents, found denominator {qd}"
                )));
            }
            if qn < 0 {
                return Err(Error::Validation(format!(
                    "genus table has a negative q-exponent {qn}"
                )));
            }
            let two_l = match yd {
                1 => 2 * yn,
                2 => yn,
                _ => {
                    return Err(Error::Validation(format!(
                        "genus table needs y-exponents in (1/2)Z, found denominator {yd}"
                    )))
                }
            };
            if (two_l - dim).rem_euclid(2) != 0 {
                return Err(Error::Validation(format!(
                    "y-exponent {two_l}/2 breaks the parity 2l = {dim} mod 2"
                )));
            }
            if qn == 0 && two_l.abs() > dim {
                return Err(Error::Validation(format!(
                    "q^0 slice carries y^{two_l}/2 beyond the index bound {dim}/2"
                )));
            }
            if !coeff.is_integer() {
                return Err(Error::Validation(format!(
                    "genus coefficient at q^{qn} y^{two_l}/2 is not an integer: {coeff}"
                )));
            }
            c.insert((qn, two_l), coeff.to_integer());
        }
        let q_order = match ell.q_max() {
            Some((n, 1)) => Some(n),
            Some((n, d)) => Some(n.div_euclid(d)),
            None => None,
        };
        Ok(GenusCoefficients { dim, c, q_order })
    }

    /// The complex dimension of the underlying manifold.
    pub fn dimension(&self) -> i64 {
        self.dim
    }

    /// The certified `q`-order of the table (`None` when exact).
    pub fn q_order(&self) -> Option<i64> {
        self.q_order
    }

    /// Rebuilds the genus series the table came from.
    pub fn series(&self) -> QYSeries {
        let mut out = QYSeries::zero();
        for (&(m, two_l), v) in &self.c {
            out = out.add(&QYSeries::monomial(
                &Rat::from_integer(v.clone()),
                (m, 1),
                (two_l, 2),
            ));
        }
        match self.q_order {
            Some(n) => out.truncate((n, 1)),
            None => out,
        }
    }

    /// The calibrated Hodge numbers `chi^p` for `p = 0..=d`, read off the
    /// `q^0` slice through `c(0, l) = (-1)^p chi^p` with `p = l + d/2`.
    pub fn chi_y_table(&self) -> Result<Vec<i64>> {
        let mut chi = Vec::with_capacity(self.dim as usize + 1);
        for p in 0..=self.dim {
            let two_l = 2 * p - self.dim;
            let v = self.c.get(&(0, two_l)).cloned().unwrap_or_else(BigInt::zero);
            let v = if p.rem_euclid(2) == 1 { -v } else { v };
            chi.push(v.to_i64().ok_or_else(|| {
                Error::Validation(format!("chi^{p} overflows a machine integer"))
            })?);
        }
        Ok(chi)
    }
}

/// A truncated series in the counting variable `t` whose coefficients are
/// exact `q,y`-series: the carrier for symmetric-product towers.
#[derive(Debug, Clone)]
pub struct TSeries {
    coeffs: Vec<QYSeries>,
}

impl TSeries {
    /// The multiplicative identity, carried through `t^t_max`.
    fn one(t_max: i64) -> Self {
        let mut coeffs = vec![QYSeries::zero(); t_max as usize + 1];
        coeffs[0] = QYSeries::one();
        TSeries { coeffs }
    }

    /// The highest tracked power of `t`.
    pub fn t_max(&self) -> i64 {
        self.coeffs.len() as i64 - 1
    }

    /// The coefficient of `t^n`.
    pub fn coeff(&self, n: i64) -> &QYSeries {
        &self.coeffs[n as usize]
    }

    /// Product truncated at the common `t_max`, each coefficient truncated
    /// at `q^q_bound` when a bound is given.
    fn mul(&self, other: &Self, q_bound: Option<i64>) -> Self {
        let t_max = self.t_max().min(other.t_max());
        let mut coeffs = vec![QYSeries::zero(); t_max as usize + 1];
        for (a, ca) in self.coeffs.iter().enumerate().take(t_max as usize + 1) {
            if ca.is_zero() {
                continue;
            }
            for (b, cb) in other.coeffs.iter().enumerate() {
                if a + b > t_max as usize {
                    break;
                }
                if cb.is_zero() {
                    continue;
                }
                coeffs[a + b] = coeffs[a + b].add(&ca.mul(cb));
            }
        }
        if let Some(n) = q_bound {
            for c in &mut coeffs {
                *c = c.truncate((n, 1));
            }
        }
        TSeries { coeffs }
    }

    /// The first coefficientwise disagreement inside the jointly certified
    /// region, reported as `(t-power, discrepancy)`.
    pub fn first_discrepancy(&self, other: &Self) -> Option<(i64, Discrepancy)> {
        for n in 0..=self.t_max().min(other.t_max()) {
            if let Some(d) = self.coeff(n).first_discrepancy(other.coeff(n)) {
                return Some((n, d));
            }
        }
        None
    }
}

impl fmt::Display for TSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, c) in self.coeffs.iter().enumerate() {
            writeln!(f, "t^{n}: {c}")?;
        }
        Ok(())
    }
}

/// The factor `(1 - s t^step q^m y^{two_l/2})^{-expo}` expanded through
/// `t^t_max`: the `t^{k step}` coefficient is the exact binomial weight
/// `C(expo + k - 1, k) s^k` on the monomial `q^{km} y^{k two_l/2}`.
fn binomial_factor(t_max: i64, expo: &BigInt, s: i64, step: i64, q_m: i64, two_l: i64) -> TSeries {
    let mut out = TSeries::one(t_max);
    let mut w = Rat::from_integer(BigInt::from(1));
    let mut k: i64 = 1;
    while k * step <= t_max {
        w *= rat(s, k) * Rat::from_integer(expo + (k - 1));
        if w.is_zero() {
            break;
        }
        out.coeffs[(k * step) as usize] = QYSeries::monomial(&w, (k * q_m, 1), (k * two_l, 2));
        k += 1;
    }
    out
}

/// Guards a product that needs the input table certified through `needed`.
fn require_depth(c: &GenusCoefficients, needed: i64) -> Result<()> {
    match c.q_order {
        Some(have) if have < needed => Err(Error::TruncationTooShallow {
            needed: format!("q^{needed}"),
            have: format!("q^{have}"),
        }),
        _ => Ok(()),
    }
}

/// The naive-quotient tower `sum_n Ell(X^n/Sigma_n) t^n` as the closed
/// product `prod_{m,l} (1 - t q^m y^l)^{-c(m,l)}`, through `t^n_max` with
/// every coefficient certified to `q^q_order`.
pub fn sym_product_series(c: &GenusCoefficients, n_max: i64, q_order: i64) -> Result<TSeries> {
    validate_orders(n_max, q_order)?;
    require_depth(c, q_order)?;
    let mut acc = TSeries::one(n_max);
    for (&(m, two_l), v) in &c.c {
        if m > q_order {
            continue;
        }
        acc = acc.mul(&binomial_factor(n_max, v, 1, 1, m, two_l), Some(q_order));
    }
    Ok(acc)
}

/// The orbifold tower `sum_n Ell_orb(X^n, Sigma_n) p^n` as the product
/// `prod_{i,m,l} (1 - p^i q^m y^l)^{-c(mi,l)}`: the `p^i` block reads the
/// table at `q`-depth `m i`, so the input must be certified through
/// `n_max * q_order`.
pub fn dmvv_product(c: &GenusCoefficients, n_max: i64, q_order: i64) -> Result<TSeries> {
    validate_orders(n_max, q_order)?;
    require_depth(c, n_max.saturating_mul(q_order))?;
    let mut acc = TSeries::one(n_max);
    for i in 1..=n_max {
        for (&(m, two_l), v) in &c.c {
            if m % i != 0 || m / i > q_order {
                continue;
            }
            acc = acc.mul(&binomial_factor(n_max, v, 1, i, m / i, two_l), Some(q_order));
        }
    }
    Ok(acc)
}

/// The partition-sum oracle for [`sym_product_series`]: evaluates
/// `prod_i sum_k Ell(q^i, y^i)^k t^{ki} / (k! i^k)` verbatim, one factor
/// per cycle length. Coefficients inherit the certification of `ell`
/// (rescaling `q -> q^i` only deepens it).
pub fn sym_product_direct(ell: &QYSeries, n_max: i64) -> Result<TSeries> {
    validate_orders(n_max, 0)?;
    let mut acc = TSeries::one(n_max);
    for i in 1..=n_max {
        let sub = ell.substitute(i, i)?;
        let mut cycle = TSeries::one(n_max);
        let mut power = QYSeries::one();
        let mut scalar = rat_int(1);
        let mut k: i64 = 1;
        while k * i <= n_max {
            power = power.mul(&sub);
            scalar /= rat_int(k * i);
            cycle.coeffs[(k * i) as usize] = power.scale(&scalar);
            k += 1;
        }
        acc = acc.mul(&cycle, None);
    }
    Ok(acc)
}

/// The chi_y tower `prod_p (1 - t(-y)^p)^{-(-1)^p chi^p}` from the
/// calibrated table `chi[p] = chi^p`; coefficients are exact `y`-Laurent
/// polynomials (no `q` dependence).
pub fn chi_y_symprod(chi: &[i64], n_max: i64) -> Result<TSeries> {
    validate_orders(n_max, 0)?;
    let mut acc = TSeries::one(n_max);
    for (p, &x) in chi.iter().enumerate() {
        let sign = if p % 2 == 1 { -1 } else { 1 };
        let expo = BigInt::from(sign * x);
        acc = acc.mul(
            &binomial_factor(n_max, &expo, sign, 1, 0, 2 * p as i64),
            None,
        );
    }
    Ok(acc)
}

/// The Euler-number tower `sum_n e(X^n/Sigma_n) t^n = (1 - t)^{-e}`.
pub fn macdonald_series(e: i64, n_max: i64) -> Result<TSeries> {
    validate_orders(n_max, 0)?;
    Ok(binomial_factor(n_max, &BigInt::from(e), 1, 1, 0, 0))
}

/// The signature tower
/// `sum_n sigma(X^n/Sigma_n) t^n = (1+t)^{(sigma-e)/2} / (1-t)^{(sigma+e)/2}`;
/// the exponents are integers exactly when `sigma = e mod 2`.
pub fn zagier_series(sigma: i64, e: i64, n_max: i64) -> Result<TSeries> {
    validate_orders(n_max, 0)?;
    if (sigma - e).rem_euclid(2) != 0 {
        return Err(Error::ParityMismatch { sigma, euler: e });
    }
    let plus = binomial_factor(n_max, &BigInt::from(-(sigma - e) / 2), -1, 1, 0, 0);
    let minus = binomial_factor(n_max, &BigInt::from((sigma + e) / 2), 1, 1, 0, 0);
    Ok(plus.mul(&minus, None))
}

fn validate_orders(n_max: i64, q_order: i64) -> Result<()> {
    if n_max < 0 {
        return Err(Error::Validation(format!(
            "t-order must be nonnegative, got {n_max}"
        )));
    }
    if q_order < 0 {
        return Err(Error::Validation(format!(
            "q-order must be nonnegative, got {q_order}"
        )));
    }
    Ok(())
}

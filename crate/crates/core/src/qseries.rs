//! Bivariate exact Laurent series in the nome `q` and the elliptic variable `y`.
//!
//! A [`QYSeries`] is a finite collection of terms `c · q^(a/q_den) · y^(b/y_den)`
//! with exact rational coefficients, plus an explicit certification of how far
//! in `q` the collection is to be trusted:
//!
//! * `q_max = Some(A)` certifies that every *omitted* exponent `<= A/q_den`
//!   genuinely has coefficient zero, and says nothing about exponents beyond;
//! * `q_max = None` means the stored terms are the entire series.
//!
//! Arithmetic propagates the tightest certification that remains valid — a
//! product of truncated series is certified through the order that survives
//! the error analysis, not through the order someone hoped for — so a result's
//! claimed order can be trusted without re-deriving it by hand. All `y`-slices
//! are finite Laurent polynomials; a genuine pole at `y = 1` cannot be stored
//! here and is tracked by [`crate::ratfun::RatFunY`] instead.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::rat::{format_rat, nth_root_exact, parse_rat, pow_i, Rat};
use crate::{Error, Result};

/// Reduces an exponent fraction to lowest terms with a positive denominator.
fn normalize_exp(num: i64, den: i64) -> (i64, i64) {
    assert!(den != 0, "exponent denominator must be nonzero");
    let (mut n, mut d) = (num, den);
    if d < 0 {
        n = -n;
        d = -d;
    }
    if n == 0 {
        return (0, 1);
    }
    let g = n.gcd(&d);
    (n / g, d / g)
}

/// Rescales an exponent numerator from units of `1/den` to units of `1/target`.
fn scale_num(num: i64, den: i64, target: i64) -> i64 {
    debug_assert!(target % den == 0);
    num.checked_mul(target / den).expect("exponent overflow")
}

fn add_term(terms: &mut BTreeMap<(i64, i64), Rat>, key: (i64, i64), val: Rat) {
    if val.is_zero() {
        return;
    }
    match terms.entry(key) {
        Entry::Vacant(e) => {
            e.insert(val);
        }
        Entry::Occupied(mut e) => {
            *e.get_mut() += val;
            if e.get().is_zero() {
                e.remove();
            }
        }
    }
}

/// First coefficient on which two series disagree, with both values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discrepancy {
    /// `q`-exponent as a reduced fraction.
    pub q: (i64, i64),
    /// `y`-exponent as a reduced fraction.
    pub y: (i64, i64),
    pub lhs: Rat,
    pub rhs: Rat,
}

impl fmt::Display for Discrepancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "coefficient of q^{} y^{}: {} vs {}",
            frac_str(self.q.0, self.q.1),
            frac_str(self.y.0, self.y.1),
            format_rat(&self.lhs),
            format_rat(&self.rhs)
        )
    }
}

/// Exact bivariate Laurent series with a certified `q`-truncation order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QYSeries {
    q_den: i64,
    y_den: i64,
    /// Certified order as a numerator over `q_den`; `None` = exact.
    q_max: Option<i64>,
    /// Nonzero coefficients keyed by `(q_num, y_num)`.
    terms: BTreeMap<(i64, i64), Rat>,
}

impl QYSeries {
    /// The exact zero series.
    pub fn zero() -> Self {
        QYSeries {
            q_den: 1,
            y_den: 1,
            q_max: None,
            terms: BTreeMap::new(),
        }
    }

    /// The exact constant `1`.
    pub fn one() -> Self {
        Self::constant(&Rat::one())
    }

    /// The exact constant `c`.
    pub fn constant(c: &Rat) -> Self {
        Self::monomial(c, (0, 1), (0, 1))
    }

    /// The exact monomial `c · q^q_exp · y^y_exp` (exponents as fractions).
    pub fn monomial(c: &Rat, q_exp: (i64, i64), y_exp: (i64, i64)) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        let (qn, qd) = normalize_exp(q_exp.0, q_exp.1);
        let (yn, yd) = normalize_exp(y_exp.0, y_exp.1);
        let mut terms = BTreeMap::new();
        terms.insert((qn, yn), c.clone());
        QYSeries {
            q_den: qd,
            y_den: yd,
            q_max: None,
            terms,
        }
    }

    /// Denominator shared by all `q`-exponents.
    pub fn q_den(&self) -> i64 {
        self.q_den
    }

    /// Denominator shared by all `y`-exponents.
    pub fn y_den(&self) -> i64 {
        self.y_den
    }

    /// Certified order as a fraction `(num, den)`, or `None` when exact.
    pub fn q_max(&self) -> Option<(i64, i64)> {
        self.q_max.map(|a| (a, self.q_den))
    }

    /// True when the series carries no truncation (it is the whole series).
    pub fn is_exact(&self) -> bool {
        self.q_max.is_none()
    }

    /// True when no terms are stored. For a truncated series this only means
    /// the series vanishes through its certified order.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of stored terms.
    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Smallest stored `q`-exponent as a fraction, if any term is stored.
    pub fn min_q(&self) -> Option<(i64, i64)> {
        self.terms
            .keys()
            .next()
            .map(|&(a, _)| normalize_exp(a, self.q_den))
    }

    /// Coefficient of `q^q_exp y^y_exp` as stored (zero when absent; no
    /// certification check — see [`QYSeries::coeff_of_q`] for a checked slice).
    pub fn coeff(&self, q_exp: (i64, i64), y_exp: (i64, i64)) -> Rat {
        let (qn, qd) = normalize_exp(q_exp.0, q_exp.1);
        let (yn, yd) = normalize_exp(y_exp.0, y_exp.1);
        if self.q_den % qd != 0 || self.y_den % yd != 0 {
            return Rat::zero();
        }
        let key = (
            scale_num(qn, qd, self.q_den),
            scale_num(yn, yd, self.y_den),
        );
        self.terms.get(&key).cloned().unwrap_or_else(Rat::zero)
    }

    /// Iterates stored terms as `(q_exponent, y_exponent, coefficient)` with
    /// exponents as reduced fractions, in lexicographic order.
    pub fn iter_terms(&self) -> impl Iterator<Item = ((i64, i64), (i64, i64), &Rat)> + '_ {
        self.terms.iter().map(move |(&(a, b), c)| {
            (normalize_exp(a, self.q_den), normalize_exp(b, self.y_den), c)
        })
    }

    /// The `y`-Laurent polynomial multiplying `q^q_exp`, as an exact series.
    /// Fails when the slice lies beyond the certified order.
    pub fn coeff_of_q(&self, q_exp: (i64, i64)) -> Result<QYSeries> {
        let (qn, qd) = normalize_exp(q_exp.0, q_exp.1);
        if let Some(a) = self.q_max {
            // Compare qn/qd > a/q_den exactly.
            if qn * self.q_den > a * qd {
                return Err(Error::TruncationTooShallow {
                    needed: frac_str(qn, qd),
                    have: frac_str(a, self.q_den),
                });
            }
        }
        let mut out = QYSeries::zero();
        out.y_den = self.y_den;
        if self.q_den % qd == 0 {
            let target = scale_num(qn, qd, self.q_den);
            for (&(a, b), c) in &self.terms {
                if a == target {
                    out.terms.insert((0, b), c.clone());
                }
            }
        }
        Ok(out)
    }

    /// Rescales internal denominators to the given multiples of the current ones.
    fn rescaled(&self, q_den: i64, y_den: i64) -> Self {
        let fq = q_den / self.q_den;
        let fy = y_den / self.y_den;
        debug_assert!(fq >= 1 && fy >= 1);
        debug_assert!(q_den % self.q_den == 0 && y_den % self.y_den == 0);
        if fq == 1 && fy == 1 {
            return self.clone();
        }
        QYSeries {
            q_den,
            y_den,
            q_max: self
                .q_max
                .map(|a| a.checked_mul(fq).expect("truncation order overflow")),
            terms: self
                .terms
                .iter()
                .map(|(&(a, b), c)| {
                    (
                        (
                            a.checked_mul(fq).expect("exponent overflow"),
                            b.checked_mul(fy).expect("exponent overflow"),
                        ),
                        c.clone(),
                    )
                })
                .collect(),
        }
    }

    fn aligned(a: &Self, b: &Self) -> (Self, Self) {
        let qd = a.q_den.lcm(&b.q_den);
        let yd = a.y_den.lcm(&b.y_den);
        (a.rescaled(qd, yd), b.rescaled(qd, yd))
    }

    fn drop_beyond_bound(&mut self) {
        if let Some(a) = self.q_max {
            self.terms.retain(|&(q, _), _| q <= a);
        }
    }

    /// Lowers the certified order to `q_bound` (a fraction) if that is tighter,
    /// discarding terms beyond it. Never raises a certification.
    pub fn truncate(&self, q_bound: (i64, i64)) -> Self {
        let (bn, bd) = normalize_exp(q_bound.0, q_bound.1);
        let qd = self.q_den.lcm(&bd);
        let mut out = self.rescaled(qd, self.y_den);
        let scaled = scale_num(bn, bd, qd);
        out.q_max = Some(match out.q_max {
            Some(a) => a.min(scaled),
            None => scaled,
        });
        out.drop_beyond_bound();
        out
    }

    /// Sum; certified through the tighter of the two certifications.
    pub fn add(&self, other: &Self) -> Self {
        let (mut a, b) = Self::aligned(self, other);
        a.q_max = match (a.q_max, b.q_max) {
            (None, None) => None,
            (Some(x), None) | (None, Some(x)) => Some(x),
            (Some(x), Some(y)) => Some(x.min(y)),
        };
        for (k, c) in b.terms {
            add_term(&mut a.terms, k, c);
        }
        a.drop_beyond_bound();
        a
    }

    /// Negation.
    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = -c.clone();
        }
        out
    }

    /// Difference.
    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Multiplies every coefficient by the scalar `c`.
    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v *= c.clone();
        }
        out
    }

    /// Multiplies by the monomial `q^dq` (a fraction).
    pub fn shift_q(&self, dq: (i64, i64)) -> Self {
        let (dn, dd) = normalize_exp(dq.0, dq.1);
        let qd = self.q_den.lcm(&dd);
        let mut out = self.rescaled(qd, self.y_den);
        let shift = scale_num(dn, dd, qd);
        out.q_max = out.q_max.map(|a| a + shift);
        out.terms = out
            .terms
            .into_iter()
            .map(|((a, b), c)| ((a + shift, b), c))
            .collect();
        out
    }

    /// Multiplies by the monomial `y^dy` (a fraction).
    pub fn shift_y(&self, dy: (i64, i64)) -> Self {
        let (dn, dd) = normalize_exp(dy.0, dy.1);
        let yd = self.y_den.lcm(&dd);
        let mut out = self.rescaled(self.q_den, yd);
        let shift = scale_num(dn, dd, yd);
        out.terms = out
            .terms
            .into_iter()
            .map(|((a, b), c)| ((a, b + shift), c))
            .collect();
        out
    }

    /// A certified lower bound for the valuation of the *true* series, in
    /// units of `1/q_den`. `None` means `+infinity` (the series is exactly 0).
    fn val_floor(&self) -> Option<i64> {
        let stored_min = self.terms.keys().next().map(|&(q, _)| q);
        match (stored_min, self.q_max) {
            (Some(v), Some(a)) => Some(v.min(a + 1)),
            (Some(v), None) => Some(v),
            (None, Some(a)) => Some(a + 1),
            (None, None) => None,
        }
    }

    /// Certified order of a product, in shared `q_den` units.
    ///
    /// Writing each factor as `known + error` with the error supported beyond
    /// the certification, the product's error terms have valuations at least
    /// `val(a) + B + 1`, `val(b) + A + 1`, and `A + B + 2`; the product is
    /// certified right below the smallest of these.
    fn mul_bound(a: &Self, b: &Self) -> Option<i64> {
        let va = a.val_floor();
        let vb = b.val_floor();
        let mut best: Option<i64> = None;
        let mut push = |x: Option<i64>| {
            if let Some(v) = x {
                best = Some(best.map_or(v, |cur: i64| cur.min(v)));
            }
        };
        if let Some(bb) = b.q_max {
            push(va.map(|v| v + bb));
        }
        if let Some(ab) = a.q_max {
            push(vb.map(|v| v + ab));
        }
        if let (Some(ab), Some(bb)) = (a.q_max, b.q_max) {
            push(Some(ab + bb + 1));
        }
        best
    }

    /// Product; certified through the order that survives the error analysis.
    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = Self::aligned(self, other);
        let bound = Self::mul_bound(&a, &b);
        let mut terms: BTreeMap<(i64, i64), Rat> = BTreeMap::new();
        for (&(qa, ya), ca) in &a.terms {
            for (&(qb, yb), cb) in &b.terms {
                if let Some(bd) = bound {
                    // Keys ascend lexicographically in q first, so once a
                    // product exponent overshoots the bound we can stop.
                    if qa + qb > bd {
                        break;
                    }
                }
                add_term(&mut terms, (qa + qb, ya + yb), ca * cb);
            }
        }
        QYSeries {
            q_den: a.q_den,
            y_den: a.y_den,
            q_max: bound,
            terms,
        }
    }

    /// Reciprocal.
    ///
    /// The leading `q`-slice must be a single monomial `c y^w q^v`; otherwise
    /// the reciprocal has a pole at `y = 1` (or worse) and does not live in
    /// this ring. For a non-monomial input a finite certification is required,
    /// and the result is certified through `q_max - 2 v`.
    pub fn recip(&self) -> Result<Self> {
        let v = match self.terms.keys().next() {
            Some(&(q, _)) => q,
            None => {
                return Err(Error::NotInvertible(match self.q_max {
                    Some(a) => format!(
                        "series vanishes through its certified order q^{}",
                        frac_str(a, self.q_den)
                    ),
                    None => "series is exactly zero".into(),
                }))
            }
        };
        let lead: Vec<(i64, Rat)> = self
            .terms
            .range((v, i64::MIN)..=(v, i64::MAX))
            .map(|(&(_, b), c)| (b, c.clone()))
            .collect();
        if lead.len() != 1 {
            return Err(Error::NotInvertible(format!(
                "leading q-slice at q^{} is not a single monomial ({} terms); \
                 a pole at y = 1 must be tracked separately",
                frac_str(v, self.q_den),
                lead.len()
            )));
        }
        let (w, c) = (lead[0].0, lead[0].1.clone());
        let c_inv = Rat::one() / c;
        if self.num_terms() == 1 {
            // Exact monomial: exact reciprocal, regardless of certification.
            let mut out = QYSeries::monomial(&c_inv, (-v, self.q_den), (-w, self.y_den));
            if let Some(a) = self.q_max {
                out = out.truncate((a - 2 * v, self.q_den));
            }
            return Ok(out);
        }
        let a = self.q_max.ok_or_else(|| {
            Error::UnboundedTruncation(
                "reciprocal of an exact non-monomial series; truncate it first".into(),
            )
        })?;
        // Normalize to 1 - u with val(u) >= 1/q_den, certified through a - v.
        let norm = self
            .shift_q((-v, self.q_den))
            .shift_y((-w, self.y_den))
            .scale(&c_inv);
        let u = QYSeries::one().sub(&norm);
        debug_assert!(u.terms.keys().all(|&(q, _)| q > 0));
        let inner_bound = (a - v, self.q_den);
        let mut acc = QYSeries::one().truncate(inner_bound);
        let mut pw = u.truncate(inner_bound);
        while !pw.is_zero() {
            acc = acc.add(&pw);
            pw = pw.mul(&u).truncate(inner_bound);
        }
        Ok(acc
            .shift_q((-v, self.q_den))
            .shift_y((-w, self.y_den))
            .scale(&c_inv))
    }

    /// Integer power; negative exponents go through [`QYSeries::recip`].
    pub fn pow(&self, e: i64) -> Result<Self> {
        if e == 0 {
            return Ok(Self::one());
        }
        let base = if e < 0 { self.recip()? } else { self.clone() };
        let mut acc: Option<QYSeries> = None;
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

    /// Substitutes `q -> q^r` and `y -> y^s` for integers `r >= 1`, `s != 0`.
    ///
    /// Exponents multiply; a certification through `A` becomes one through
    /// `r(A+1) - 1`, since all new exponents are `r` times old ones.
    pub fn substitute(&self, r: i64, s: i64) -> Result<Self> {
        if r < 1 {
            return Err(Error::Validation(format!(
                "q-substitution power must be >= 1, got {r}"
            )));
        }
        if s == 0 {
            return Err(Error::Validation("y-substitution power must be nonzero".into()));
        }
        let mut out = QYSeries {
            q_den: self.q_den,
            y_den: self.y_den,
            q_max: self.q_max.map(|a| {
                r.checked_mul(a + 1)
                    .and_then(|x| x.checked_sub(1))
                    .expect("truncation order overflow")
            }),
            terms: BTreeMap::new(),
        };
        for (&(a, b), c) in &self.terms {
            out.terms.insert(
                (
                    a.checked_mul(r).expect("exponent overflow"),
                    b.checked_mul(s).expect("exponent overflow"),
                ),
                c.clone(),
            );
        }
        Ok(out)
    }

    /// Divides `y`-exponents by their common factor so that `y_den` is minimal.
    fn reduce_y_den(&mut self) {
        let mut g = self.y_den;
        for &(_, b) in self.terms.keys() {
            g = g.gcd(&b);
            if g == 1 {
                return;
            }
        }
        if g > 1 {
            self.y_den /= g;
            self.terms = self
                .terms
                .iter()
                .map(|(&(a, b), c)| ((a, b / g), c.clone()))
                .collect();
        }
    }

    /// Evaluates `y` at the rational `v`, leaving a series in `q` alone.
    ///
    /// Fractional `y`-exponents are honored exactly when `v` has an exact
    /// root of the required index (after reducing the exponent denominator);
    /// otherwise this fails rather than approximate.
    pub fn eval_y(&self, v: &Rat) -> Result<Self> {
        let mut s = self.clone();
        s.reduce_y_den();
        let root = nth_root_exact(v, u32::try_from(s.y_den).expect("y_den fits u32"))?;
        let mut out = QYSeries {
            q_den: s.q_den,
            y_den: 1,
            q_max: s.q_max,
            terms: BTreeMap::new(),
        };
        for (&(a, b), c) in &s.terms {
            add_term(&mut out.terms, (a, 0), c * pow_i(&root, b)?);
        }
        Ok(out)
    }

    /// Substitutes `y -> -y`: the term `c q^a y^l` becomes `(-1)^l c q^a y^l`.
    ///
    /// Requires every `y`-exponent to be an integer (after reducing the
    /// exponent denominator); fails with `FractionalPower` otherwise.
    pub fn negate_y(&self) -> Result<Self> {
        let mut s = self.clone();
        s.reduce_y_den();
        if s.y_den != 1 {
            return Err(Error::FractionalPower(
                "y -> -y requires integer y-exponents".into(),
            ));
        }
        let terms = s
            .terms
            .iter()
            .map(|(&k, c)| {
                let c = if k.1.rem_euclid(2) == 1 {
                    -c.clone()
                } else {
                    c.clone()
                };
                (k, c)
            })
            .collect();
        Ok(QYSeries { terms, ..s })
    }

    /// First disagreement within the jointly certified region, if any.
    ///
    /// Comparison runs through the tighter of the two certifications (all
    /// exponents when both series are exact), in lexicographic order on
    /// `(q, y)` exponents.
    pub fn first_discrepancy(&self, other: &Self) -> Option<Discrepancy> {
        let (a, b) = Self::aligned(self, other);
        let bound = match (a.q_max, b.q_max) {
            (None, None) => None,
            (Some(x), None) | (None, Some(x)) => Some(x),
            (Some(x), Some(y)) => Some(x.min(y)),
        };
        let within = |key: &(i64, i64)| bound.map_or(true, |bd| key.0 <= bd);
        let mut ia = a.terms.iter().filter(|(k, _)| within(k)).peekable();
        let mut ib = b.terms.iter().filter(|(k, _)| within(k)).peekable();
        loop {
            match (ia.peek(), ib.peek()) {
                (None, None) => return None,
                (Some((&ka, ca)), None) => {
                    return Some(Discrepancy {
                        q: normalize_exp(ka.0, a.q_den),
                        y: normalize_exp(ka.1, a.y_den),
                        lhs: (*ca).clone(),
                        rhs: Rat::zero(),
                    })
                }
                (None, Some((&kb, cb))) => {
                    return Some(Discrepancy {
                        q: normalize_exp(kb.0, a.q_den),
                        y: normalize_exp(kb.1, a.y_den),
                        lhs: Rat::zero(),
                        rhs: (*cb).clone(),
                    })
                }
                (Some((&ka, ca)), Some((&kb, cb))) => {
                    if ka < kb {
                        return Some(Discrepancy {
                            q: normalize_exp(ka.0, a.q_den),
                            y: normalize_exp(ka.1, a.y_den),
                            lhs: (*ca).clone(),
                            rhs: Rat::zero(),
                        });
                    } else if kb < ka {
                        return Some(Discrepancy {
                            q: normalize_exp(kb.0, a.q_den),
                            y: normalize_exp(kb.1, a.y_den),
                            lhs: Rat::zero(),
                            rhs: (*cb).clone(),
                        });
                    } else if ca != cb {
                        return Some(Discrepancy {
                            q: normalize_exp(ka.0, a.q_den),
                            y: normalize_exp(ka.1, a.y_den),
                            lhs: (*ca).clone(),
                            rhs: (*cb).clone(),
                        });
                    }
                    ia.next();
                    ib.next();
                }
            }
        }
    }

    /// True when the two series agree on their jointly certified region.
    pub fn agrees_with(&self, other: &Self) -> bool {
        self.first_discrepancy(other).is_none()
    }

    /// Divides exactly by `(1 - y)`, slice by slice in `q`, returning `None`
    /// when some stored slice is not divisible (equivalently, does not vanish
    /// at `y = 1`). The certification is unchanged: each slice within it is
    /// known exactly, so its exact quotient is too.
    pub(crate) fn div_one_minus_y(&self) -> Option<QYSeries> {
        let d = self.y_den;
        let mut slices: BTreeMap<i64, BTreeMap<i64, Rat>> = BTreeMap::new();
        for (&(a, b), c) in &self.terms {
            slices.entry(a).or_default().insert(b, c.clone());
        }
        let mut out = QYSeries {
            q_den: self.q_den,
            y_den: d,
            q_max: self.q_max,
            terms: BTreeMap::new(),
        };
        for (a, p) in slices {
            // Solve p(Y) = s(Y) · (1 - Y^d) by s[e] = p[e] + s[e - d],
            // ascending; exact iff the top d solved values vanish.
            let lo = *p.keys().next().expect("nonempty slice");
            let hi = *p.keys().next_back().expect("nonempty slice");
            let mut s: BTreeMap<i64, Rat> = BTreeMap::new();
            for e in lo..=hi {
                let mut v = p.get(&e).cloned().unwrap_or_else(Rat::zero);
                if let Some(prev) = s.get(&(e - d)) {
                    v += prev.clone();
                }
                if !v.is_zero() {
                    s.insert(e, v);
                }
            }
            for e in (hi - d + 1)..=hi {
                if s.contains_key(&e) {
                    return None;
                }
            }
            for (e, v) in s {
                out.terms.insert((a, e), v);
            }
        }
        Some(out)
    }

    /// The exact polynomial `(1 - y)^k`.
    pub(crate) fn one_minus_y_pow(k: u32) -> QYSeries {
        let base = QYSeries::one().sub(&QYSeries::monomial(&Rat::one(), (0, 1), (1, 1)));
        base.pow(i64::from(k)).expect("nonnegative power")
    }
}

/// Expands `1 / (1 - y^y_exp q^q_exp)` as a series certified through `q_order`.
///
/// * `q_exp > 0`: the geometric series `sum_j y^(j·y_exp) q^(j·q_exp)`.
/// * `q_exp < 0`: the expansion in *positive* powers of `q`,
///   `-sum_{j>=1} y^(-j·y_exp) q^(j·|q_exp|)`.
/// * `q_exp = 0`: fails with [`Error::ZeroQExponent`] — that factor has a pole
///   at `y = 1` and must be handled by [`crate::ratfun::RatFunY`].
pub fn geom_factor(y_exp: (i64, i64), q_exp: (i64, i64), q_order: (i64, i64)) -> Result<QYSeries> {
    geom_factor_with_coeff(&Rat::one(), y_exp, q_exp, q_order)
}

/// Expands `1 / (1 - c · y^y_exp q^q_exp)` as a series certified through
/// `q_order`, with the same exponent conventions as [`geom_factor`].
pub fn geom_factor_with_coeff(
    c: &Rat,
    y_exp: (i64, i64),
    q_exp: (i64, i64),
    q_order: (i64, i64),
) -> Result<QYSeries> {
    let (kn, kd) = normalize_exp(q_exp.0, q_exp.1);
    let (an, ad) = normalize_exp(y_exp.0, y_exp.1);
    let (on, od) = normalize_exp(q_order.0, q_order.1);
    if kn == 0 {
        return Err(Error::ZeroQExponent);
    }
    if c.is_zero() {
        return Ok(QYSeries::one().truncate(q_order));
    }
    let qd = kd.lcm(&od);
    let k = scale_num(kn, kd, qd);
    let bound = scale_num(on, od, qd);
    let mut out = QYSeries {
        q_den: qd,
        y_den: ad,
        q_max: Some(bound),
        terms: BTreeMap::new(),
    };
    if k > 0 {
        let mut j: i64 = 0;
        let mut coeff = Rat::one();
        while j * k <= bound {
            add_term(&mut out.terms, (j * k, j * an), coeff.clone());
            coeff *= c.clone();
            j += 1;
        }
    } else {
        let c_inv = Rat::one() / c.clone();
        let mut j: i64 = 1;
        let mut coeff = -c_inv.clone();
        while j * (-k) <= bound {
            add_term(&mut out.terms, (j * (-k), -j * an), coeff.clone());
            coeff *= c_inv.clone();
            j += 1;
        }
    }
    Ok(out)
}

fn frac_str(num: i64, den: i64) -> String {
    let (n, d) = normalize_exp(num, den);
    if d == 1 {
        n.to_string()
    } else {
        format!("({n}/{d})")
    }
}

fn exp_str(var: &str, num: i64, den: i64) -> String {
    let (n, d) = normalize_exp(num, den);
    if n == 1 && d == 1 {
        var.to_string()
    } else {
        format!("{var}^{}", frac_str(n, d))
    }
}

impl fmt::Display for QYSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            f.write_str("0")?;
        } else {
            let mut first = true;
            for (&(a, b), c) in &self.terms {
                let neg = c.is_negative();
                let mag = c.abs();
                if first {
                    if neg {
                        f.write_str("-")?;
                    }
                    first = false;
                } else {
                    f.write_str(if neg { " - " } else { " + " })?;
                }
                let mut factors: Vec<String> = Vec::new();
                if !mag.is_one() || (a == 0 && b == 0) {
                    factors.push(format_rat(&mag));
                }
                if a != 0 {
                    factors.push(exp_str("q", a, self.q_den));
                }
                if b != 0 {
                    factors.push(exp_str("y", b, self.y_den));
                }
                f.write_str(&factors.join("·"))?;
            }
        }
        if let Some(m) = self.q_max {
            write!(f, " + O(q^{})", frac_str(m + 1, self.q_den))?;
        }
        Ok(())
    }
}

/// Serialized form: exponents as integer numerators over the shared
/// denominators, coefficients as `p/q` strings, terms in lexicographic order.
#[derive(Serialize, Deserialize)]
struct QYSeriesRepr {
    q_den: i64,
    y_den: i64,
    q_max: Option<i64>,
    terms: Vec<(i64, i64, String)>,
}

impl From<&QYSeries> for QYSeriesRepr {
    fn from(s: &QYSeries) -> Self {
        QYSeriesRepr {
            q_den: s.q_den,
            y_den: s.y_den,
            q_max: s.q_max,
            terms: s
                .terms
                .iter()
                .map(|(&(a, b), c)| (a, b, format_rat(c)))
                .collect(),
        }
    }
}

impl TryFrom<QYSeriesRepr> for QYSeries {
    type Error = Error;

    fn try_from(r: QYSeriesRepr) -> Result<QYSeries> {
        if r.q_den < 1 || r.y_den < 1 {
            return Err(Error::Validation(
                "exponent denominators must be positive".into(),
            ));
        }
        let mut terms = BTreeMap::new();
        for (a, b, cs) in r.terms {
            let c = parse_rat(&cs)?;
            if c.is_zero() {
                return Err(Error::Validation(format!(
                    "zero coefficient stored at ({a}, {b})"
                )));
            }
            if let Some(m) = r.q_max {
                if a > m {
                    return Err(Error::Validation(format!(
                        "term at q-numerator {a} lies beyond the certified order {m}"
                    )));
                }
            }
            if terms.insert((a, b), c).is_some() {
                return Err(Error::Validation(format!("duplicate term at ({a}, {b})")));
            }
        }
        Ok(QYSeries {
            q_den: r.q_den,
            y_den: r.y_den,
            q_max: r.q_max,
            terms,
        })
    }
}

impl Serialize for QYSeries {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        QYSeriesRepr::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for QYSeries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = QYSeriesRepr::deserialize(d)?;
        QYSeries::try_from(repr).map_err(D::Error::custom)
    }
}

impl std::ops::Add for &QYSeries {
    type Output = QYSeries;
    fn add(self, rhs: &QYSeries) -> QYSeries {
        QYSeries::add(self, rhs)
    }
}

impl std::ops::Sub for &QYSeries {
    type Output = QYSeries;
    fn sub(self, rhs: &QYSeries) -> QYSeries {
        QYSeries::sub(self, rhs)
    }
}

impl std::ops::Mul for &QYSeries {
    type Output = QYSeries;
    fn mul(self, rhs: &QYSeries) -> QYSeries {
        QYSeries::mul(self, rhs)
    }
}

impl std::ops::Neg for &QYSeries {
    type Output = QYSeries;
    fn neg(self) -> QYSeries {
        QYSeries::neg(self)
    }
}

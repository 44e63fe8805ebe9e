//! Classical `q`-series and the standard weak Jacobi forms.
//!
//! Conventions (`q = e^{2 pi i tau}`, `y = e^{2 pi i z}`):
//!
//! * `eta = q^{1/24} prod_{k>=1}(1 - q^k)`, the Dedekind eta function.
//! * `theta(q, y) = q^{1/8}(y^{1/2} - y^{-1/2}) prod_{l>=1}(1-q^l)(1-q^l y)(1-q^l y^{-1})`,
//!   the rationalized odd theta function, with the triple-product sum form
//!   `sum_{n in Z} (-1)^n q^{(2n+1)^2/8} y^{(2n+1)/2}` implemented
//!   independently as a cross-check.
//! * `phi_minus_2_1 = theta^2 / eta^6` and
//!   `phi_0_1 = 4 (th2(z)^2/th2(0)^2 + th3(z)^2/th3(0)^2 + th4(z)^2/th4(0)^2)`,
//!   the weak Jacobi forms of index 1 and weights -2 and 0; multiplying by
//!   the discriminant `delta = eta^24` gives the cusp forms `phi_10_1` and
//!   `phi_12_1`.
//!
//! A Jacobi form of index `r` obeys two coefficient identities which this
//! module checks directly on stored coefficients (robust even when the series
//! in `q, y` has wide `y`-support): writing `phi = sum c(n, l) q^n y^l`,
//!
//! * elliptic shift: `c(n, l) = (-1)^{2r} c(n + l + r, l + 2r)` — the sign
//!   is the parity of the *index*;
//! * `y`-inversion:  `c(n, -l) = (-1)^w c(n, l)` — the sign is the parity of
//!   the *weight* `w`, passed explicitly to [`check_y_inversion`]. The two
//!   parities agree for the integer-index basis forms here but differ for
//!   half-integral index (a weight-0 form of index 3/2 is even under
//!   inversion while its shift sign is -1).

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed};

use crate::qseries::QYSeries;
use crate::rat::{floor_frac, frac_add, frac_le, frac_norm, frac_sub, rat_int, Rat};
use crate::{Error, Result};

pub(crate) fn one_minus(y_exp: (i64, i64), q_exp: (i64, i64)) -> QYSeries {
    QYSeries::one().sub(&QYSeries::monomial(&Rat::one(), q_exp, y_exp))
}

/// Asserts the computed certification covers `order`, then trims to it.
pub(crate) fn finish(s: QYSeries, order: (i64, i64)) -> QYSeries {
    if let Some(b) = s.q_max() {
        assert!(
            frac_le(order, b),
            "internal margin too small: certified {b:?}, requested {order:?}"
        );
    }
    s.truncate(order)
}

/// Dedekind eta: `q^{1/24} prod_{k>=1}(1 - q^k)`, certified through `order`.
pub fn eta(order: (i64, i64)) -> QYSeries {
    let mut s = QYSeries::monomial(&Rat::one(), (1, 24), (0, 1)).truncate(order);
    for k in 1..=floor_frac(order).max(0) {
        s = s.mul(&one_minus((0, 1), (k, 1)));
    }
    s
}

/// The discriminant form `delta = eta^24 = q prod (1-q^k)^24`.
pub fn delta(order: (i64, i64)) -> QYSeries {
    finish(eta(order).pow(24).expect("positive power"), order)
}

/// Eisenstein series `E4 = 1 + 240 sum_{n>=1} sigma_3(n) q^n`.
pub fn eisenstein_e4(order: (i64, i64)) -> QYSeries {
    let mut s = QYSeries::one().truncate(order);
    for n in 1..=floor_frac(order).max(0) {
        let sigma3: i64 = (1..=n).filter(|d| n % d == 0).map(|d| d * d * d).sum();
        s = s.add(&QYSeries::monomial(&rat_int(240 * sigma3), (n, 1), (0, 1)));
    }
    s
}

/// Rationalized odd theta, product form.
pub fn theta_hat(order: (i64, i64)) -> QYSeries {
    let pre = QYSeries::monomial(&Rat::one(), (1, 8), (1, 2)).sub(&QYSeries::monomial(
        &Rat::one(),
        (1, 8),
        (-1, 2),
    ));
    let mut s = pre.truncate(order);
    for l in 1..=floor_frac(order).max(0) {
        s = s.mul(&one_minus((0, 1), (l, 1)));
        s = s.mul(&one_minus((1, 1), (l, 1)));
        s = s.mul(&one_minus((-1, 1), (l, 1)));
    }
    s
}

/// Rationalized odd theta, triple-product sum form:
/// `sum_{n in Z} (-1)^n q^{(2n+1)^2/8} y^{(2n+1)/2}`.
pub fn theta_hat_sum(order: (i64, i64)) -> QYSeries {
    let (on, od) = frac_norm(order.0, order.1);
    let mut s = QYSeries::zero().truncate(order);
    let mut n: i64 = 0;
    loop {
        let mut hit = false;
        for m in [n, -n - 1] {
            let k = 2 * m + 1;
            if k * k * od <= 8 * on {
                hit = true;
                let sign = if m.rem_euclid(2) == 0 { 1 } else { -1 };
                s = s.add(&QYSeries::monomial(&rat_int(sign), (k * k, 8), (k, 2)));
            }
        }
        if !hit {
            return s;
        }
        n += 1;
    }
}

/// `th2(q, y) = sum_{n in Z} q^{(2n+1)^2/8} y^{(2n+1)/2}`.
pub fn theta2(order: (i64, i64)) -> QYSeries {
    let (on, od) = frac_norm(order.0, order.1);
    let mut s = QYSeries::zero().truncate(order);
    let mut n: i64 = 0;
    loop {
        let mut hit = false;
        for m in [n, -n - 1] {
            let k = 2 * m + 1;
            if k * k * od <= 8 * on {
                hit = true;
                s = s.add(&QYSeries::monomial(&Rat::one(), (k * k, 8), (k, 2)));
            }
        }
        if !hit {
            return s;
        }
        n += 1;
    }
}

/// `th3(q, y) = sum_{n in Z} q^{n^2/2} y^n`.
pub fn theta3(order: (i64, i64)) -> QYSeries {
    theta34(order, false)
}

/// `th4(q, y) = sum_{n in Z} (-1)^n q^{n^2/2} y^n`.
pub fn theta4(order: (i64, i64)) -> QYSeries {
    theta34(order, true)
}

fn theta34(order: (i64, i64), alternating: bool) -> QYSeries {
    let (on, od) = frac_norm(order.0, order.1);
    let mut s = QYSeries::zero().truncate(order);
    let mut n: i64 = 0;
    while n * n * od <= 2 * on {
        let sign = if alternating && n.rem_euclid(2) == 1 {
            -1
        } else {
            1
        };
        let mono = |m: i64| QYSeries::monomial(&rat_int(sign), (m * m, 2), (m, 1));
        s = s.add(&mono(n));
        if n > 0 {
            s = s.add(&mono(-n));
        }
        n += 1;
    }
    s
}

/// Weak Jacobi form of weight -2, index 1: `theta^2 / eta^6`.
/// Leading slice `y - 2 + y^{-1}`.
pub fn phi_minus_2_1(order: (i64, i64)) -> QYSeries {
    let inner = frac_add(order, (1, 1));
    let th = theta_hat(inner);
    let e6 = eta(inner).pow(6).expect("positive power");
    finish(
        th.mul(&th).mul(&e6.recip().expect("eta^6 has monomial lead")),
        order,
    )
}

/// Weak Jacobi form of weight 0, index 1, from squared theta-constant ratios.
/// Leading slice `y + 10 + y^{-1}`.
pub fn phi_0_1(order: (i64, i64)) -> QYSeries {
    let inner = frac_add(order, (1, 1));
    let mut total = QYSeries::zero();
    for th in [theta2(inner), theta3(inner), theta4(inner)] {
        let null = th.eval_y(&Rat::one()).expect("y = 1 always evaluates");
        let null_sq_inv = null
            .mul(&null)
            .recip()
            .expect("theta constants have monomial lead");
        total = total.add(&th.mul(&th).mul(&null_sq_inv));
    }
    finish(total.scale(&rat_int(4)), order)
}

/// Jacobi cusp form of weight 10, index 1: `delta * phi_minus_2_1`.
pub fn phi_10_1(order: (i64, i64)) -> QYSeries {
    finish(delta(order).mul(&phi_minus_2_1(order)), order)
}

/// Jacobi cusp form of weight 12, index 1: `delta * phi_0_1`.
pub fn phi_12_1(order: (i64, i64)) -> QYSeries {
    finish(delta(order).mul(&phi_0_1(order)), order)
}

/// A coefficient pair violating a Jacobi-form identity: the coefficient at
/// the source exponents fails to match `sign` times the one at the image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JacobiViolation {
    pub source_q: (i64, i64),
    pub source_y: (i64, i64),
    pub image_q: (i64, i64),
    pub image_y: (i64, i64),
    /// Coefficient at the source.
    pub lhs: Rat,
    /// `sign` times the coefficient at the image.
    pub rhs: Rat,
}

/// `(-1)^{2r}` for the index `r` (denominator 1 or 2).
fn index_sign(index: (i64, i64)) -> i64 {
    let (rn, rd) = frac_norm(index.0, index.1);
    assert!(rd == 1 || rd == 2, "Jacobi index must be half-integral");
    if rd == 2 && rn.rem_euclid(2) == 1 {
        -1
    } else {
        1
    }
}

/// Checks the elliptic-shift identity `c(n, l) = (-1)^{2r} c(n+l+r, l+2r)`
/// on every stored coefficient whose partner also lies within the certified
/// order; returns the first violation in lexicographic order, if any.
pub fn check_jacobi_shift(phi: &QYSeries, index: (i64, i64)) -> Option<JacobiViolation> {
    let r = frac_norm(index.0, index.1);
    let two_r = frac_add(r, r);
    let sign = rat_int(index_sign(index));
    let bound = phi.q_max();
    let within = |q: (i64, i64)| bound.map_or(true, |b| frac_le(q, b));
    for (n, l, c) in phi.iter_terms() {
        // Stored term as the source of the relation.
        let img_q = frac_add(frac_add(n, l), r);
        let img_y = frac_add(l, two_r);
        if within(img_q) {
            let rhs = sign.clone() * phi.coeff(img_q, img_y);
            if *c != rhs {
                return Some(JacobiViolation {
                    source_q: n,
                    source_y: l,
                    image_q: img_q,
                    image_y: img_y,
                    lhs: c.clone(),
                    rhs,
                });
            }
        }
        // Stored term as the image: its preimage is (n - l + r, l - 2r).
        let pre_q = frac_add(frac_sub(n, l), r);
        let pre_y = frac_sub(l, two_r);
        if within(pre_q) {
            let lhs = phi.coeff(pre_q, pre_y);
            let rhs = sign.clone() * c.clone();
            if lhs != rhs {
                return Some(JacobiViolation {
                    source_q: pre_q,
                    source_y: pre_y,
                    image_q: n,
                    image_y: l,
                    lhs,
                    rhs,
                });
            }
        }
    }
    None
}

/// Checks the inversion identity `c(n, -l) = sign * c(n, l)` on every stored
/// coefficient; returns the first violation, if any.
///
/// Under `z -> -z` a Jacobi form of weight `w` picks up `(-1)^w`, so `sign`
/// is the weight parity (`+1` for the weight-0 elliptic genus of any
/// Calabi-Yau, `-1` for the odd theta function) -- unlike the elliptic-shift
/// identity, whose sign is fixed by the index alone.
pub fn check_y_inversion(phi: &QYSeries, sign: i64) -> Option<JacobiViolation> {
    assert!(sign == 1 || sign == -1, "inversion parity must be +1 or -1");
    let sign = rat_int(sign);
    for (n, l, c) in phi.iter_terms() {
        let img_y = (-l.0, l.1);
        let lhs = phi.coeff(n, img_y);
        let rhs = sign.clone() * c.clone();
        if lhs != rhs {
            return Some(JacobiViolation {
                source_q: n,
                source_y: img_y,
                image_q: n,
                image_y: l,
                lhs,
                rhs,
            });
        }
    }
    None
}

/// Largest integer `<= sqrt(x)` for rational `x >= 0`.
fn floor_sqrt_rat(x: &Rat) -> BigInt {
    assert!(!x.is_negative());
    x.floor().to_integer().sqrt()
}

/// Applies the elliptic shift `z -> z + tau` with its automorphy factor:
/// returns `q^r y^{2r} phi(q, y q)`, mapping each term `c q^n y^l` to
/// `c q^{n+l+r} y^{l+2r}`.
///
/// For a Jacobi form of index `r` the result equals `(-1)^{2r} phi`.
///
/// Certification: exponents with negative `l` map *downward* in `q`, so terms
/// beyond the input's certified order could in principle land below it. The
/// result's order is therefore computed under the weak-Jacobi support bound
/// `l^2 <= 4 r n + r^2`, which every weak Jacobi form of index `r` satisfies;
/// for a series violating that bound the claimed order means nothing.
pub fn apply_elliptic_shift(phi: &QYSeries, index: (i64, i64)) -> Result<QYSeries> {
    let r = frac_norm(index.0, index.1);
    if r.0 <= 0 {
        return Err(Error::Validation("Jacobi index must be positive".into()));
    }
    let two_r = frac_add(r, r);
    let mut out = QYSeries::zero();
    for (n, l, c) in phi.iter_terms() {
        out = out.add(&QYSeries::monomial(
            c,
            frac_add(frac_add(n, l), r),
            frac_add(l, two_r),
        ));
    }
    let Some(bound) = phi.q_max() else {
        return Ok(out);
    };
    // Unknown source terms have q-exponent a > bound and, under the support
    // premise, y-exponent l >= -sqrt(4 r a + r^2); they land at
    //   a + l + r >= h(a) := a + r - sqrt(4 r a + r^2),
    // and h increases for a > 3r/4. Scan lattice points from just past the
    // bound to just past 3r/4 and keep a rational lower bound for h.
    let qd = bound.1;
    let r_rat = crate::rat::rat(r.0, r.1);
    let lattice_den = [qd, r.1, phi.y_den(), 2]
        .iter()
        .fold(1i64, |acc, &d| acc.lcm(&d));
    let mut h_min: Option<Rat> = None;
    let start = bound.0 + 1;
    // 3r/4 in units of 1/qd, rounded up, plus one step of slack.
    let turn = (3 * r.0 * qd).div_euclid(4 * r.1) + 2;
    let end = start.max(turn);
    for a_num in start..=end {
        let a = crate::rat::rat(a_num, qd);
        let disc = rat_int(4) * &r_rat * &a + &r_rat * &r_rat;
        // Upper bound for sqrt(disc) on the 1/lattice_den grid.
        let scaled = disc * rat_int(lattice_den) * rat_int(lattice_den);
        let ub_num = floor_sqrt_rat(&scaled) + 1;
        let ub = Rat::new(ub_num, BigInt::from(lattice_den));
        let h = a + &r_rat - ub;
        h_min = Some(match h_min {
            None => h,
            Some(m) => m.min(h),
        });
    }
    let h_min = h_min.expect("nonempty scan");
    // Largest lattice exponent strictly below h_min.
    let scaled = h_min * rat_int(lattice_den);
    let t = if scaled.is_integer() {
        i64::try_from(scaled.to_integer()).expect("order fits i64") - 1
    } else {
        i64::try_from(scaled.floor().to_integer()).expect("order fits i64")
    };
    Ok(out.truncate((t, lattice_den)))
}

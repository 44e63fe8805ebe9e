//! Fans and the closed lattice-sum formulas for toric elliptic genera.
//!
//! For a complete simplicial fan with primitive rays `n_i` in a rank-`d`
//! lattice `N`, the two-variable elliptic genus is the alternating sum
//!
//! ```text
//! Ell = y^{-d/2} G(y,q)^d sum_{m in M} sum_{cones C} (-1)^{codim C}
//!           sum_{n in C cap N} q^{m.n} y^{deg_C . n}
//! ```
//!
//! over all cones of the fan (the zero cone included), where `M` is the dual
//! lattice and `deg_C` is the linear functional taking the value 1 on the
//! generators of `C` — integral on `N` precisely when the variety is
//! Gorenstein. On a *smooth* cone the inner sum telescopes to the product
//! `prod_i 1/(1 - y q^{m.n_i})`; on a merely simplicial cone the lattice
//! points split uniquely as a box point plus a nonnegative generator
//! combination, giving the same product weighted by the box polynomial
//! `sum_b q^{m.b} y^{deg.b}`. The global factor is
//!
//! ```text
//! G(y,q) = prod_{k>=1} (1 - y q^{k-1})(1 - y^{-1} q^k) / (1 - q^k)^2
//!        = -y^{1/2} theta(q,y) / eta(q)^3.
//! ```
//!
//! A factor with `m.n_i = 0` is a pole at `y = 1`, so each per-`m` net is
//! assembled as a [`RatFunY`]; only the aggregate sum times `G^d` has to
//! clear its poles, and that cancellation is asserted exactly rather than
//! assumed. The `m`-sum runs over growing max-norm shells and terminates
//! once two consecutive shells contribute nothing through the requested
//! order; the support of the nets is finite but carries no a-priori radius
//! bound, so exceeding the configured shell cap is a reported failure, never
//! a silent truncation.
//!
//! Setting `y = -1` turns each factor into `1/(1 + q^{m.n_i})` (a zero
//! pairing contributes exactly `1/2`), and rescaling the raw sum by
//! `(-2)^{-d/2}` yields the classical one-variable level-2 elliptic genus:
//! [`ellhat_lso`]. The normalization is pinned by two independent oracles —
//! the projective plane must give the modular form
//! `delta = -1/8 - 3 sum_n (sum_{k|n, k odd} k) q^n`, and every output must
//! match the Chern-root extraction route of [`crate::genus`] with the
//! classical level-2 characteristic series.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lattice::{det, dot, inverse_rat, rank, solve_rat, IntVec};
use crate::modforms::one_minus;
use crate::qseries::{geom_factor, geom_factor_with_coeff, QYSeries};
use crate::rat::{floor_frac, rat, rat_int, Rat};
use crate::ratfun::RatFunY;
use crate::{Error, Result};

/// Default cap on the max-norm shell radius of lattice-sum enumerations.
pub const DEFAULT_SHELL_CAP: u64 = 64;

fn default_true() -> bool {
    true
}

/// A simplicial fan: primitive integer rays and maximal cones as ray-index
/// sets. `complete` declares that the cones cover all of `N ⊗ R`; the claim
/// is verified by facet pairing (exact for rank <= 2, a necessary condition
/// in higher rank).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fan {
    pub rank: usize,
    pub rays: Vec<IntVec>,
    pub max_cones: Vec<Vec<usize>>,
    #[serde(default = "default_true")]
    pub complete: bool,
}

impl Fan {
    /// Parses and validates a fan from its JSON form
    /// `{rank, rays: [[..]], max_cones: [[..]], complete}`.
    pub fn from_json(text: &str) -> Result<Fan> {
        let fan: Fan =
            serde_json::from_str(text).map_err(|e| Error::Validation(format!("fan JSON: {e}")))?;
        fan.validate()?;
        Ok(fan)
    }

    /// Complex dimension of the toric variety (= lattice rank).
    pub fn dim(&self) -> usize {
        self.rank
    }

    /// Structural checks: primitive distinct rays of the right length,
    /// simplicial cones with valid indices, and — when `complete` is declared
    /// — full-dimensional maximal cones whose facets pair up exactly.
    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::Validation("fan rank must be positive".into()));
        }
        if self.rays.is_empty() || self.max_cones.is_empty() {
            return Err(Error::Validation("fan needs rays and maximal cones".into()));
        }
        let mut seen = BTreeSet::new();
        for ray in &self.rays {
            if ray.len() != self.rank {
                return Err(Error::Validation(format!(
                    "ray {ray:?} does not have {} coordinates",
                    self.rank
                )));
            }
            if ray.iter().all(|&c| c == 0) {
                return Err(Error::Validation("zero vector is not a ray".into()));
            }
            if crate::lattice::primitive(ray) != *ray {
                return Err(Error::Validation(format!("ray {ray:?} is not primitive")));
            }
            if !seen.insert(ray.clone()) {
                return Err(Error::Validation(format!("ray {ray:?} listed twice")));
            }
        }
        for (ci, cone) in self.max_cones.iter().enumerate() {
            if cone.is_empty() || cone.len() > self.rank {
                return Err(Error::Validation(format!(
                    "cone {cone:?} has an impossible number of generators"
                )));
            }
            let mut distinct = BTreeSet::new();
            for &i in cone {
                if i >= self.rays.len() {
                    return Err(Error::Validation(format!(
                        "cone {cone:?} references a missing ray"
                    )));
                }
                if !distinct.insert(i) {
                    return Err(Error::Validation(format!(
                        "cone {cone:?} repeats a generator"
                    )));
                }
            }
            let mat = self.cone_rays(cone);
            let span = rank(&mat);
            if span != cone.len() {
                return Err(Error::NonSimplicial {
                    cone: ci,
                    rays: cone.len(),
                    dim: span,
                });
            }
        }
        if self.complete {
            // Every maximal cone must be full-dimensional and every facet
            // (codimension-1 face) must be shared by exactly two of them.
            for (ci, cone) in self.max_cones.iter().enumerate() {
                if cone.len() != self.rank {
                    return Err(Error::NotComplete(format!(
                        "maximal cone {ci} is not full-dimensional"
                    )));
                }
            }
            let mut facet_count: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
            for cone in &self.max_cones {
                let mut sorted = cone.clone();
                sorted.sort_unstable();
                for omit in 0..sorted.len() {
                    let mut facet = sorted.clone();
                    facet.remove(omit);
                    *facet_count.entry(facet).or_insert(0) += 1;
                }
            }
            for (facet, count) in &facet_count {
                if *count != 2 {
                    return Err(Error::NotComplete(format!(
                        "facet {facet:?} lies in {count} maximal cones instead of 2"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The generators of a cone as a list of ray vectors.
    fn cone_rays(&self, cone: &[usize]) -> Vec<IntVec> {
        cone.iter().map(|&i| self.rays[i].clone()).collect()
    }

    /// True when every maximal cone's generators extend to a lattice basis
    /// (gcd of the maximal minors is 1).
    pub fn is_smooth(&self) -> bool {
        self.smoothness_violation().is_none()
    }

    /// First non-unimodular maximal cone, as (cone position, lattice index).
    fn smoothness_violation(&self) -> Option<(usize, i64)> {
        for (ci, cone) in self.max_cones.iter().enumerate() {
            let index = lattice_index(&self.cone_rays(cone));
            if index != 1 {
                return Some((ci, index));
            }
        }
        None
    }

    /// All cones of the fan: every subset of every maximal cone's generator
    /// set (faces of a simplicial cone are exactly those), including the zero
    /// cone, each sorted, without duplicates.
    pub fn all_cones(&self) -> Vec<Vec<usize>> {
        let mut set: BTreeSet<Vec<usize>> = BTreeSet::new();
        set.insert(Vec::new());
        for cone in &self.max_cones {
            let mut sorted = cone.clone();
            sorted.sort_unstable();
            let k = sorted.len();
            for mask in 1u32..(1 << k) {
                let face: Vec<usize> = (0..k)
                    .filter(|b| mask & (1 << b) != 0)
                    .map(|b| sorted[b])
                    .collect();
                set.insert(face);
            }
        }
        set.into_iter().collect()
    }

    /// The integral functional with value 1 on each generator of a
    /// full-dimensional cone. A non-integral solution means the cone is not
    /// Gorenstein.
    fn degree_functional(&self, cone: &[usize]) -> Result<IntVec> {
        let mat = self.cone_rays(cone);
        let ones = vec![Rat::one(); cone.len()];
        let sol = solve_rat(&mat, &ones)
            .ok_or_else(|| Error::Validation(format!("cone {cone:?} is degenerate")))?;
        let mut out = Vec::with_capacity(sol.len());
        for v in &sol {
            if !v.is_integer() {
                return Err(Error::NotGorenstein(format!(
                    "cone {cone:?} has degree functional {sol:?}"
                )));
            }
            out.push(int_part(v));
        }
        Ok(out)
    }
}

fn int_part(v: &Rat) -> i64 {
    v.to_integer().to_i64().expect("functional fits in i64")
}

/// Index of the sublattice the rays generate inside its saturation: the gcd
/// of all maximal minors. 1 means the rays extend to a lattice basis.
fn lattice_index(rays: &[IntVec]) -> i64 {
    if rays.is_empty() {
        return 1;
    }
    let k = rays.len();
    let d = rays[0].len();
    debug_assert!(k <= d, "simplicial cone");
    let mut g: i128 = 0;
    let mut cols = (0..k).collect::<Vec<_>>();
    loop {
        let sub: Vec<IntVec> = rays
            .iter()
            .map(|r| cols.iter().map(|&c| r[c]).collect())
            .collect();
        g = gcd_i128(g, det(&sub));
        if g == 1 {
            break;
        }
        // next k-combination of 0..d
        let mut i = k;
        let done = loop {
            if i == 0 {
                break true;
            }
            i -= 1;
            if cols[i] != i + d - k {
                cols[i] += 1;
                for j in i + 1..k {
                    cols[j] = cols[j - 1] + 1;
                }
                break false;
            }
        };
        if done {
            break;
        }
    }
    i64::try_from(g).expect("lattice index fits in i64")
}

fn gcd_i128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Lattice points `sum_i lambda_i n_i` of the fundamental parallelepiped of a
/// simplicial cone. `excluded[i] = true` switches the `i`-th coefficient
/// range from the default `[0,1)` to `(0,1]` (used by half-open cone
/// decompositions); with no exclusions the origin is always a box point.
pub(crate) fn box_points(rays: &[IntVec], ambient: usize, excluded: &[bool]) -> Vec<IntVec> {
    if rays.is_empty() {
        return vec![vec![0; ambient]];
    }
    // Barycentric coordinates relative to the (possibly lower-dimensional)
    // cone via the Gram matrix: lambda = (p . n_j) G^{-1}, valid on the span;
    // points off the span fail the reconstruction check below.
    let gram: Vec<IntVec> = rays
        .iter()
        .map(|a| rays.iter().map(|b| dot(a, b)).collect())
        .collect();
    let gram_inv = inverse_rat(&gram).expect("independent rays");
    // Candidate coordinates range over the closure lambda in [0,1]^k.
    let lo: IntVec = (0..ambient)
        .map(|j| rays.iter().map(|r| r[j].min(0)).sum())
        .collect();
    let hi: IntVec = (0..ambient)
        .map(|j| rays.iter().map(|r| r[j].max(0)).sum())
        .collect();
    let mut out = Vec::new();
    let mut p = lo.clone();
    'outer: loop {
        let proj: Vec<Rat> = rays.iter().map(|r| rat_int(dot(&p, r))).collect();
        let lambda: Vec<Rat> = (0..rays.len())
            .map(|i| {
                proj.iter()
                    .zip(&gram_inv)
                    .map(|(c, row)| c.clone() * row[i].clone())
                    .sum()
            })
            .collect();
        let in_range = lambda.iter().zip(excluded).all(|(l, &ex)| {
            if ex {
                l > &Rat::zero() && l <= &Rat::one()
            } else {
                l >= &Rat::zero() && l < &Rat::one()
            }
        });
        if in_range {
            // Reconstruct to reject points outside the cone's span.
            let back: Vec<Rat> = (0..ambient)
                .map(|j| {
                    lambda
                        .iter()
                        .zip(rays)
                        .map(|(l, r)| l.clone() * rat_int(r[j]))
                        .sum()
                })
                .collect();
            if back.iter().zip(&p).all(|(b, &c)| *b == rat_int(c)) {
                out.push(p.clone());
            }
        }
        for j in 0..ambient {
            if p[j] < hi[j] {
                p[j] += 1;
                continue 'outer;
            }
            p[j] = lo[j];
        }
        break;
    }
    out.sort();
    out
}

/// The global factor
/// `G(y,q) = prod_{k>=1} (1 - y q^{k-1})(1 - y^{-1} q^k)/(1 - q^k)^2`,
/// certified through `order`. Equals `-y^{1/2} theta(q,y)/eta(q)^3`.
pub fn big_g(order: (i64, i64)) -> QYSeries {
    // k = 1 contributes the exact polynomial (1 - y); every other factor is
    // 1 + O(q^k), so factors with k beyond the order are invisible.
    let mut s = one_minus((1, 1), (0, 1)).truncate(order);
    for k in 1..=floor_frac(order).max(0) {
        s = s.mul(&one_minus((1, 1), (k, 1)));
        s = s.mul(&one_minus((-1, 1), (k, 1)));
        let inv = geom_factor((0, 1), (k, 1), order).expect("positive exponent");
        s = s.mul(&inv).mul(&inv);
    }
    s
}

/// One cone of a lattice sum, preprocessed: generator vectors, the sign
/// `(-1)^{codim}`, and the box points with their `deg`-values.
struct ConeTerm {
    rays: Vec<IntVec>,
    sign: Rat,
    boxes: Vec<(IntVec, i64)>,
}

fn cone_sign(rank: usize, dim: usize) -> Rat {
    rat_int(if (rank - dim) % 2 == 1 { -1 } else { 1 })
}

/// Cone data for a smooth fan: every box is trivial.
fn smooth_cone_terms(fan: &Fan) -> Vec<ConeTerm> {
    fan.all_cones()
        .into_iter()
        .map(|cone| ConeTerm {
            sign: cone_sign(fan.rank, cone.len()),
            boxes: vec![(vec![0; fan.rank], 0)],
            rays: fan.cone_rays(&cone),
        })
        .collect()
}

/// Cone data for a Gorenstein fan: per-cone degree functional (from any
/// maximal cone containing the face — the values agree on the span) and box
/// point enumeration.
fn gorenstein_cone_terms(fan: &Fan) -> Result<Vec<ConeTerm>> {
    let degs: Vec<IntVec> = fan
        .max_cones
        .iter()
        .map(|c| fan.degree_functional(c))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for cone in fan.all_cones() {
        let parent = fan
            .max_cones
            .iter()
            .position(|mc| cone.iter().all(|i| mc.contains(i)))
            .expect("every face lies in some maximal cone");
        let deg = &degs[parent];
        let rays = fan.cone_rays(&cone);
        let boxes = box_points(&rays, fan.rank, &vec![false; rays.len()])
            .into_iter()
            .map(|b| {
                let h = dot(deg, &b);
                (b, h)
            })
            .collect();
        out.push(ConeTerm {
            rays,
            sign: cone_sign(fan.rank, cone.len()),
            boxes,
        });
    }
    Ok(out)
}

/// The net contribution of one lattice point `m`: the alternating sum over
/// cones of `(box polynomial) * prod_i 1/(1 - y q^{m.n_i})`, truncated to
/// `order`. Zero pairings stay symbolic as `RatFunY` poles.
fn net_for_m(cones: &[ConeTerm], m: &[i64], order: i64) -> Result<RatFunY> {
    let mut acc = RatFunY::zero();
    for ct in cones {
        let mut boxpoly = QYSeries::zero();
        let mut min_shift: i64 = 0;
        for (b, h) in &ct.boxes {
            let s = dot(m, b);
            min_shift = min_shift.min(s);
            boxpoly = boxpoly.add(&QYSeries::monomial(&Rat::one(), (s, 1), (*h, 1)));
        }
        if boxpoly.is_zero() {
            continue;
        }
        // Negative box shifts lower the certified order of a product, so the
        // geometric factors are built with enough margin to compensate.
        let bound = (order - min_shift, 1);
        let mut pole: u32 = 0;
        let mut prod = QYSeries::one().truncate(bound);
        for ray in &ct.rays {
            let k = dot(m, ray);
            if k == 0 {
                pole += 1;
            } else {
                prod = prod.mul(&geom_factor((1, 1), (k, 1), bound)?);
            }
        }
        prod = prod.mul(&boxpoly);
        acc = acc.add(&RatFunY::geom_pole(pole).mul_series(&prod).scale(&ct.sign));
    }
    Ok(acc.truncate((order, 1)))
}

/// All lattice points of `Z^rank` with max-norm exactly `radius`.
fn shell_points(rank: usize, radius: i64) -> Vec<IntVec> {
    if radius == 0 {
        return vec![vec![0; rank]];
    }
    let mut out = Vec::new();
    // One pair of faces per axis; axes already covered stay strictly inside
    // the radius so no point is listed twice.
    for axis in 0..rank {
        let lo: Vec<i64> = (0..rank - 1)
            .map(|i| if i < axis { 1 - radius } else { -radius })
            .collect();
        let hi: Vec<i64> = (0..rank - 1)
            .map(|i| if i < axis { radius - 1 } else { radius })
            .collect();
        let mut rest = lo.clone();
        'face: loop {
            for sign in [radius, -radius] {
                let mut p = Vec::with_capacity(rank);
                p.extend_from_slice(&rest[..axis]);
                p.push(sign);
                p.extend_from_slice(&rest[axis..]);
                out.push(p);
            }
            let mut i = 0;
            loop {
                if i == rank - 1 {
                    break 'face;
                }
                if rest[i] < hi[i] {
                    rest[i] += 1;
                    break;
                }
                rest[i] = lo[i];
                i += 1;
            }
        }
    }
    out
}

/// Sums `net` over `M = Z^rank` in growing max-norm shells until two
/// consecutive shells contribute nothing through the truncation order, with
/// a hard cap on the radius.
pub(crate) fn lattice_sum<F>(rank: usize, cap: u64, net: F) -> Result<RatFunY>
where
    F: Fn(&[i64]) -> Result<RatFunY> + Sync,
{
    let mut total = RatFunY::zero();
    let mut quiet = 0u32;
    let mut radius: i64 = 0;
    loop {
        let shell = shell_points(rank, radius)
            .par_iter()
            .map(|m| net(m))
            .try_reduce(RatFunY::zero, |a, b| {
                Ok(if b.is_zero() {
                    a
                } else if a.is_zero() {
                    b
                } else {
                    a.add(&b)
                })
            })?;
        if shell.is_zero() {
            quiet += 1;
            if quiet >= 2 {
                return Ok(total);
            }
        } else {
            quiet = 0;
            total = total.add(&shell);
        }
        radius += 1;
        if radius as u64 > cap {
            return Err(Error::StabilizationFailure { cap });
        }
    }
}

/// Multiplies the raw lattice sum by `G^g_power`, asserts that every
/// `(1 - y)` pole cancels, and applies the `y^{-d/2}` prefactor.
pub(crate) fn finish_genus(raw: &RatFunY, g_power: i64, d: i64, order: i64) -> Result<QYSeries> {
    let g = big_g((order, 1)).pow(g_power)?;
    let series = raw.mul_series(&g).to_series()?;
    Ok(series.shift_y((-d, 2)).truncate((order, 1)))
}

/// Elliptic genus of the smooth complete toric variety of `fan`, certified
/// through `q_order`, with the default enumeration cap.
pub fn ell_smooth_toric(fan: &Fan, q_order: i64) -> Result<QYSeries> {
    ell_smooth_toric_capped(fan, q_order, DEFAULT_SHELL_CAP)
}

fn require_complete(fan: &Fan) -> Result<()> {
    if fan.complete {
        Ok(())
    } else {
        Err(Error::NotComplete(
            "the lattice-sum formula needs a complete fan".into(),
        ))
    }
}

fn require_smooth(fan: &Fan) -> Result<()> {
    match fan.smoothness_violation() {
        None => Ok(()),
        Some((cone, index)) => Err(Error::NonSmoothFan { cone, index }),
    }
}

/// [`ell_smooth_toric`] with an explicit cap on the shell radius.
pub fn ell_smooth_toric_capped(fan: &Fan, q_order: i64, cap: u64) -> Result<QYSeries> {
    fan.validate()?;
    require_complete(fan)?;
    require_smooth(fan)?;
    let cones = smooth_cone_terms(fan);
    let raw = lattice_sum(fan.rank, cap, |m| net_for_m(&cones, m, q_order))?;
    finish_genus(&raw, fan.rank as i64, fan.rank as i64, q_order)
}

/// Elliptic genus of the complete Gorenstein (simplicial, possibly singular)
/// toric variety of `fan`, via box-point decomposition of each cone.
pub fn ell_gorenstein_toric(fan: &Fan, q_order: i64) -> Result<QYSeries> {
    ell_gorenstein_toric_capped(fan, q_order, DEFAULT_SHELL_CAP)
}

/// [`ell_gorenstein_toric`] with an explicit cap on the shell radius.
pub fn ell_gorenstein_toric_capped(fan: &Fan, q_order: i64, cap: u64) -> Result<QYSeries> {
    fan.validate()?;
    require_complete(fan)?;
    let cones = gorenstein_cone_terms(fan)?;
    let raw = lattice_sum(fan.rank, cap, |m| net_for_m(&cones, m, q_order))?;
    finish_genus(&raw, fan.rank as i64, fan.rank as i64, q_order)
}

/// The net contribution of one lattice point to the level-2 sum: factors
/// `1/(1 + q^{m.n_i})`, a zero pairing contributing the exact scalar `1/2`.
fn lso_net_for_m(fan: &Fan, cones: &[Vec<usize>], m: &[i64], order: i64) -> Result<RatFunY> {
    let minus_one = rat_int(-1);
    let mut acc = QYSeries::zero();
    for cone in cones {
        let mut coeff = cone_sign(fan.rank, cone.len());
        let mut prod = QYSeries::one().truncate((order, 1));
        for &i in cone {
            let k = dot(m, &fan.rays[i]);
            if k == 0 {
                coeff /= rat_int(2);
            } else {
                prod = prod.mul(&geom_factor_with_coeff(
                    &minus_one,
                    (0, 1),
                    (k, 1),
                    (order, 1),
                )?);
            }
        }
        acc = acc.add(&prod.scale(&coeff));
    }
    Ok(RatFunY::from_series(&acc.truncate((order, 1))))
}

/// The classical one-variable level-2 elliptic genus of a smooth complete
/// toric variety: the `y = -1` lattice sum rescaled by `(-2)^{-d/2}`.
/// The projective plane yields `delta = -1/8 - 3 sum (sum_{k|n, k odd} k) q^n`.
pub fn ellhat_lso(fan: &Fan, q_order: i64) -> Result<QYSeries> {
    ellhat_lso_capped(fan, q_order, DEFAULT_SHELL_CAP)
}

/// [`ellhat_lso`] with an explicit cap on the shell radius.
pub fn ellhat_lso_capped(fan: &Fan, q_order: i64, cap: u64) -> Result<QYSeries> {
    fan.validate()?;
    require_complete(fan)?;
    require_smooth(fan)?;
    if fan.rank % 2 == 1 {
        return Err(Error::OddDimension(fan.rank as i64));
    }
    let cones = fan.all_cones();
    let raw = lattice_sum(fan.rank, cap, |m| lso_net_for_m(fan, &cones, m, q_order))?;
    let norm = rat(1, (-2i64).pow(fan.rank as u32 / 2));
    Ok(raw.to_series()?.scale(&norm).truncate((q_order, 1)))
}

/// Checks the arithmetic identity behind the projective-plane level-2 genus,
/// `sum_{m,n>=1} q^{m+n} / ((1+q^m)(1+q^n)(1+q^{m+n})) = sum_r q^{2r} sigma(r)`,
/// exactly through `q_order`.
pub fn verify_p2_identity(q_order: i64) -> bool {
    let order = (q_order, 1);
    let minus_one = rat_int(-1);
    let inv = |k: i64| {
        geom_factor_with_coeff(&minus_one, (0, 1), (k, 1), order).expect("positive exponent")
    };
    let mut lhs = QYSeries::zero().truncate(order);
    for m in 1..=q_order {
        for n in m..=q_order - m {
            // Each unordered pair {m, n} with m != n appears twice.
            let mult = if m == n { Rat::one() } else { rat_int(2) };
            let term = inv(m)
                .mul(&inv(n))
                .mul(&inv(m + n))
                .shift_q((m + n, 1))
                .scale(&mult);
            lhs = lhs.add(&term);
        }
    }
    let mut rhs = QYSeries::zero().truncate(order);
    let mut r = 1;
    while 2 * r <= q_order {
        let sigma: i64 = (1..=r).filter(|k| r % k == 0).sum();
        rhs = rhs.add(&QYSeries::monomial(&rat_int(sigma), (2 * r, 1), (0, 1)));
        r += 1;
    }
    lhs.first_discrepancy(&rhs).is_none()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genus::{elliptic_genus, lso_genus, ManifoldModel};
    use crate::modforms::{eta, theta_hat};

    pub(crate) fn fan_p1() -> Fan {
        Fan {
            rank: 1,
            rays: vec![vec![1], vec![-1]],
            max_cones: vec![vec![0], vec![1]],
            complete: true,
        }
    }

    pub(crate) fn fan_p2() -> Fan {
        Fan {
            rank: 2,
            rays: vec![vec![1, 0], vec![0, 1], vec![-1, -1]],
            max_cones: vec![vec![0, 1], vec![1, 2], vec![2, 0]],
            complete: true,
        }
    }

    fn fan_p1xp1() -> Fan {
        Fan {
            rank: 2,
            rays: vec![vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1]],
            max_cones: vec![vec![0, 2], vec![2, 1], vec![1, 3], vec![3, 0]],
            complete: true,
        }
    }

    fn fan_p112() -> Fan {
        Fan {
            rank: 2,
            rays: vec![vec![1, 0], vec![0, 1], vec![-1, -2]],
            max_cones: vec![vec![0, 1], vec![1, 2], vec![2, 0]],
            complete: true,
        }
    }

    /// Crepant resolution of the weighted projective plane: the Hirzebruch
    /// surface obtained by inserting the ray at the singular cone's box point.
    fn fan_f2() -> Fan {
        Fan {
            rank: 2,
            rays: vec![vec![1, 0], vec![0, 1], vec![-1, -2], vec![0, -1]],
            max_cones: vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0]],
            complete: true,
        }
    }

    #[test]
    fn validation_catches_structural_errors() {
        assert!(fan_p2().validate().is_ok());
        assert!(fan_p1().validate().is_ok());

        let mut bad_ray = fan_p2();
        bad_ray.rays[0] = vec![2, 0];
        assert!(matches!(bad_ray.validate(), Err(Error::Validation(_))));

        let dependent = Fan {
            rank: 2,
            rays: vec![vec![1, 0], vec![-1, 0]],
            max_cones: vec![vec![0, 1]],
            complete: false,
        };
        assert!(matches!(
            dependent.validate(),
            Err(Error::NonSimplicial {
                cone: 0,
                rays: 2,
                dim: 1
            })
        ));

        let mut gap = fan_p2();
        gap.max_cones.pop();
        assert!(matches!(gap.validate(), Err(Error::NotComplete(_))));
        gap.complete = false;
        assert!(gap.validate().is_ok());
        assert!(matches!(
            ell_smooth_toric(&gap, 2),
            Err(Error::NotComplete(_))
        ));
    }

    #[test]
    fn smoothness_detection() {
        assert!(fan_p2().is_smooth());
        assert!(fan_f2().is_smooth());
        assert!(!fan_p112().is_smooth());
        // The singular cone is <(1,0), (-1,-2)>, of index 2.
        assert!(matches!(
            ell_smooth_toric(&fan_p112(), 2),
            Err(Error::NonSmoothFan { cone: 2, index: 2 })
        ));
    }

    #[test]
    fn face_closure_counts() {
        assert_eq!(fan_p2().all_cones().len(), 7); // 1 + 3 + 3
        let p3 = Fan {
            rank: 3,
            rays: vec![
                vec![1, 0, 0],
                vec![0, 1, 0],
                vec![0, 0, 1],
                vec![-1, -1, -1],
            ],
            max_cones: vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]],
            complete: true,
        };
        assert!(p3.validate().is_ok());
        assert_eq!(p3.all_cones().len(), 15); // 1 + 4 + 6 + 4
    }

    #[test]
    fn json_round_trip_and_default_complete() {
        let text = r#"{"rank":2,"rays":[[1,0],[0,1],[-1,-1]],
                       "max_cones":[[0,1],[1,2],[2,0]]}"#;
        let fan = Fan::from_json(text).unwrap();
        assert!(fan.complete);
        assert_eq!(fan, fan_p2());
        assert!(Fan::from_json("{\"rank\":0}").is_err());
    }

    #[test]
    fn big_g_is_minus_root_y_theta_over_eta_cubed() {
        let order = (10, 1);
        let inner = (11, 1);
        let eta3_inv = eta(inner).pow(3).unwrap().recip().unwrap();
        let reference = theta_hat(inner)
            .mul(&eta3_inv)
            .shift_y((1, 2))
            .neg()
            .truncate(order);
        assert!(big_g(order).agrees_with(&reference));
    }

    #[test]
    fn big_g_leading_slices() {
        let g = big_g((1, 1));
        let one_minus_y = one_minus((1, 1), (0, 1));
        assert!(g.coeff_of_q((0, 1)).unwrap().agrees_with(&one_minus_y));
        // q^1 coefficient: (1 - y)(2 - y - y^{-1}).
        let expected = one_minus_y.mul(
            &QYSeries::constant(&rat_int(2))
                .sub(&QYSeries::monomial(&Rat::one(), (0, 1), (1, 1)))
                .sub(&QYSeries::monomial(&Rat::one(), (0, 1), (-1, 1))),
        );
        assert!(g.coeff_of_q((1, 1)).unwrap().agrees_with(&expected));
    }

    #[test]
    fn box_points_of_the_singular_cone() {
        let fan = fan_p112();
        let rays = fan.cone_rays(&[0, 2]); // (1,0), (-1,-2): index-2 cone
        let boxes = box_points(&rays, 2, &[false, false]);
        assert_eq!(boxes, vec![vec![0, -1], vec![0, 0]]);
        // The nontrivial box point lies at degree 1: inserting it as a ray is
        // a crepant resolution.
        let deg = fan.degree_functional(&[0, 2]).unwrap();
        assert_eq!(dot(&deg, &boxes[0]), 1);
    }

    #[test]
    fn smooth_cones_have_trivial_boxes() {
        let fan = fan_p2();
        for cone in fan.all_cones() {
            let rays = fan.cone_rays(&cone);
            let boxes = box_points(&rays, 2, &vec![false; rays.len()]);
            assert_eq!(boxes, vec![vec![0, 0]]);
        }
    }

    #[test]
    fn toric_p1_matches_the_extraction_engine() {
        let fan = fan_p1();
        let toric = ell_smooth_toric(&fan, 6).unwrap();
        let engine = elliptic_genus(&ManifoldModel::ProjectiveSpace { n: 1 }, (6, 1)).unwrap();
        assert!(toric.agrees_with(&engine));
        assert_eq!(toric.first_discrepancy(&engine), None);
    }

    #[test]
    fn toric_p2_matches_the_extraction_engine() {
        let fan = fan_p2();
        let toric = ell_smooth_toric(&fan, 4).unwrap();
        let engine = elliptic_genus(&ManifoldModel::ProjectiveSpace { n: 2 }, (4, 1)).unwrap();
        assert_eq!(toric.first_discrepancy(&engine), None);
    }

    #[test]
    fn gorenstein_route_agrees_on_a_smooth_fan() {
        let fan = fan_p2();
        let smooth = ell_smooth_toric(&fan, 3).unwrap();
        let gorenstein = ell_gorenstein_toric(&fan, 3).unwrap();
        assert_eq!(smooth.first_discrepancy(&gorenstein), None);
    }

    #[test]
    fn weighted_plane_equals_its_crepant_resolution() {
        let singular = ell_gorenstein_toric(&fan_p112(), 3).unwrap();
        let resolved = ell_smooth_toric(&fan_f2(), 3).unwrap();
        assert_eq!(singular.first_discrepancy(&resolved), None);
    }

    #[test]
    fn non_gorenstein_fans_are_rejected() {
        let p113 = Fan {
            rank: 2,
            rays: vec![vec![1, 0], vec![0, 1], vec![-1, -3]],
            max_cones: vec![vec![0, 1], vec![1, 2], vec![2, 0]],
            complete: true,
        };
        assert!(p113.validate().is_ok());
        assert!(matches!(
            ell_gorenstein_toric(&p113, 2),
            Err(Error::NotGorenstein(_))
        ));
    }

    #[test]
    fn lso_of_the_projective_plane_is_delta() {
        let lso = ellhat_lso(&fan_p2(), 10).unwrap();
        let mut delta = QYSeries::constant(&rat(-1, 8)).truncate((10, 1));
        for n in 1..=10 {
            let odd_sigma: i64 = (1..=n).filter(|k| n % k == 0 && k % 2 == 1).sum();
            delta = delta.add(&QYSeries::monomial(&rat_int(-3 * odd_sigma), (n, 1), (0, 1)));
        }
        assert_eq!(lso.first_discrepancy(&delta), None);
    }

    #[test]
    fn lso_matches_the_characteristic_series_route() {
        let toric = ellhat_lso(&fan_p2(), 6).unwrap();
        let engine = lso_genus(&ManifoldModel::ProjectiveSpace { n: 2 }, (6, 1)).unwrap();
        assert_eq!(toric.first_discrepancy(&engine), None);
    }

    #[test]
    fn lso_ties_back_to_the_two_variable_genus() {
        // ellhat = (-2)^{-d/2} Ell(y=-1) G(-1,q)^{-d}.
        let order = 6;
        let fan = fan_p2();
        let two_var = ell_smooth_toric(&fan, order).unwrap();
        let g_at = big_g((order, 1)).eval_y(&rat_int(-1)).unwrap();
        let expected = two_var
            .eval_y(&rat_int(-1))
            .unwrap()
            .mul(&g_at.pow(-2).unwrap())
            .scale(&rat(1, 2));
        let lso = ellhat_lso(&fan, order).unwrap();
        assert_eq!(lso.first_discrepancy(&expected), None);
    }

    #[test]
    fn lso_needs_even_dimension() {
        assert!(matches!(
            ellhat_lso(&fan_p1(), 4),
            Err(Error::OddDimension(1))
        ));
    }

    #[test]
    fn arithmetic_identity_for_the_plane() {
        assert!(verify_p2_identity(30));
    }

    #[test]
    fn stabilization_cap_is_honest() {
        assert!(matches!(
            ell_smooth_toric_capped(&fan_p2(), 4, 2),
            Err(Error::StabilizationFailure { cap: 2 })
        ));
    }

    #[test]
    fn extra_shells_stay_quiet_after_stabilization() {
        // Find the radius the driver stops at, then check the next shells.
        let fan = fan_p2();
        let order = 3;
        let cones = smooth_cone_terms(&fan);
        let mut last_active = 0;
        for radius in 0..=16 {
            let mut shell = RatFunY::zero();
            for m in shell_points(fan.rank, radius) {
                shell = shell.add(&net_for_m(&cones, &m, order).unwrap());
            }
            if !shell.is_zero() {
                last_active = radius;
            }
        }
        // The sum through the driver's own stopping rule is already complete:
        // two further growth steps change nothing.
        for radius in last_active + 1..=last_active + 3 {
            for m in shell_points(fan.rank, radius) {
                assert!(net_for_m(&cones, &m, order).unwrap().is_zero());
            }
        }
        // And the net support really is finite, not merely sparse.
        assert!(last_active >= order);
    }

    #[test]
    fn pole_clearance_is_enforced() {
        // The raw sum alone has genuine poles; G^d is what cancels them.
        let fan = fan_p2();
        let cones = smooth_cone_terms(&fan);
        let raw = lattice_sum(fan.rank, 32, |m| net_for_m(&cones, m, 2)).unwrap();
        assert!(raw.pole() > 0);
        assert!(raw.to_series().is_err());
        assert!(finish_genus(&raw, 2, 2, 2).is_ok());
    }

    #[test]
    fn product_fan_multiplies() {
        let toric = ell_smooth_toric(&fan_p1xp1(), 3).unwrap();
        let engine = elliptic_genus(
            &ManifoldModel::Product {
                factors: vec![
                    ManifoldModel::ProjectiveSpace { n: 1 },
                    ManifoldModel::ProjectiveSpace { n: 1 },
                ],
            },
            (3, 1),
        )
        .unwrap();
        assert_eq!(toric.first_discrepancy(&engine), None);
    }
}

//! Exact computation of two-variable elliptic genera.
//!
//! Everything in this crate is exact: coefficients are arbitrary-precision
//! rationals, series carry explicit certified truncation orders, and every
//! identity check compares coefficients with zero tolerance.
//!
//! The layers, bottom up:
//!
//! * [`rat`] — arbitrary-precision rational scalars and exact roots.
//! * [`qseries`] — bivariate Laurent series in the nome `q` and the elliptic
//!   variable `y`, with fractional exponents and certified truncation bounds.
//! * [`ratfun`] — series with a tracked pole at `y = 1`, needed wherever the
//!   geometric factor `1/(1 - y)` appears before poles cancel.
//! * [`xseries`] — power series in a formal variable `x` whose coefficients
//!   live in [`ratfun`]; the calculus of characteristic power series.
//! * [`lattice`] — small exact integer/rational linear algebra: Hermite
//!   normal form, determinants, dual bases, cone membership.
//! * [`modforms`] — eta, theta, Eisenstein series, and the standard weak
//!   Jacobi forms of weight `-2` and `0` at index one.
//! * [`genus`] — genera of projective spaces, products, and hypersurfaces
//!   extracted from a characteristic power series, plus multiplicative
//!   sequences expressed in Chern classes.
//! * [`toric`] — complete fans and the lattice-sum formula for the elliptic
//!   genus of smooth (and Gorenstein, via resolution data) toric varieties.
//! * [`polytope`] — reflexive polytopes and the lattice-sum formula for the
//!   elliptic genus of Calabi–Yau hypersurfaces, including the mirror test.
//! * [`symprod`] — symmetric-product generating series and their
//!   one-variable specializations.

#![forbid(unsafe_code)]

pub mod genus;
pub mod lattice;
pub mod modforms;
pub mod polytope;
pub mod qseries;
pub mod rat;
pub mod ratfun;
pub mod symprod;
pub mod toric;
pub mod xseries;

pub use genus::{GenusKind, GenusSpec, ManifoldModel, MultiplicativeSequence};
pub use lattice::{IntMat, IntVec};
pub use polytope::{
    ell_hypersurface, ell_hypersurface_capped, jacobi_property_check, mirror_check,
    JacobiFailure, ReflexivePolytope,
};
pub use qseries::{geom_factor, geom_factor_with_coeff, Discrepancy, QYSeries};
pub use rat::{format_rat, parse_rat, rat, rat_int, Rat};
pub use ratfun::RatFunY;
pub use symprod::{
    chi_y_symprod, dmvv_product, macdonald_series, sym_product_direct, sym_product_series,
    zagier_series, GenusCoefficients, TSeries,
};
pub use toric::{
    big_g, ell_gorenstein_toric, ell_smooth_toric, ellhat_lso, verify_p2_identity, Fan,
    DEFAULT_SHELL_CAP,
};
pub use xseries::CharSeries;

/// Errors produced anywhere in the crate.
///
/// Failure is always structural (an input outside a method's domain, or a
/// request for more precision than an input certifies) — never a numerical
/// tolerance, since all arithmetic is exact.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("not invertible: {0}")]
    NotInvertible(String),

    #[error("operation needs a finite certified q-order: {0}")]
    UnboundedTruncation(String),

    #[error("geometric factor has zero q-exponent; its pole at y = 1 must be tracked explicitly")]
    ZeroQExponent,

    #[error("certified q-order too shallow: need {needed}, have {have}")]
    TruncationTooShallow { needed: String, have: String },

    #[error("no exact value: {0}")]
    FractionalPower(String),

    #[error("series is not divisible by (1 - y)^{order}: first failing q-slice at q^{slice}")]
    PoleClearance { order: u32, slice: String },

    #[error("cone {cone} is not simplicial ({rays} rays in dimension {dim})")]
    NonSimplicial { cone: usize, rays: usize, dim: usize },

    #[error("fan is not smooth: cone {cone} has index {index}")]
    NonSmoothFan { cone: usize, index: i64 },

    #[error("fan is not complete: {0}")]
    NotComplete(String),

    #[error("not Gorenstein: {0}")]
    NotGorenstein(String),

    #[error("lattice sum failed to stabilize within the enumeration cap of {cap} points")]
    StabilizationFailure { cap: u64 },

    #[error("polytope is not reflexive: {0}")]
    NotReflexive(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("odd complex dimension {0} where an even dimension is required")]
    OddDimension(i64),

    #[error("signature {sigma} and Euler number {euler} must have equal parity")]
    ParityMismatch { sigma: i64, euler: i64 },

    #[error("invalid input: {0}")]
    Validation(String),
}

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

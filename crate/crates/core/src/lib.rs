//! Exact construction and measure verification for the digit-restricted
//! Cantor sets `C(n, l)`: reals in `[0, 1]` whose base-`l` digits all lie
//! in `{0, ..., n-1}`, for `l > n >= 2`.
//!
//! Geometry is generic over [`Scalar`]; anything that has to be decided
//! exactly uses [`Rational`].

pub mod cluster_gap;
pub mod error;
pub mod exact;
pub mod extremal;
pub mod ifs;
pub mod measure;
pub mod report;
pub mod scalar;

pub use error::{Error, Result};
pub use exact::{
    canonicalize, compare_log_form, density_compare, dimension_bracket, multiplicative_dependence,
    pow_s_bracket, ComparisonOutcome, Density, PrecisionPolicy,
};
pub use ifs::{
    apply_map, blow_down, blow_up, level_set, level_set_diameter, BasicInterval, ConsecutiveUnion,
    IntervalUnion, Params, Word,
};
pub use scalar::{format_rational, parse_rational, to_decimal, Scalar};

/// Exact rational scalar used for all decided quantities.
pub type Rational = num_rational::BigRational;
/// Exact basic interval.
pub type RationalInterval = BasicInterval<Rational>;
/// Floating-point basic interval, for plotting.
pub type F64Interval = BasicInterval<f64>;
pub type F32Interval = BasicInterval<f32>;

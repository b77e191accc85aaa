//! Exact scalars and the density comparison kernel.
//!
//! Densities `p / L^s` with `s = ln n / ln l` are compared without ever
//! rounding: canonical pairs and integer identities first, then
//! interval brackets of the logarithms at escalating precision.

pub(crate) mod certified;
mod density;

pub use density::{
    canonicalize, compare_log_form, density_compare, dimension_bracket, multiplicative_dependence,
    pow_s_bracket, ComparisonOutcome, Density, PrecisionPolicy,
};

//! Extremal density problems: the maximal density over unions of basic
//! intervals and the minimal density of intervals centred in the set.

mod absorption;
mod hausdorff;
mod packing;

pub use absorption::{absorb_clusters, AbsorptionStep, ChainStep, Side};
pub use hausdorff::{
    exhaustive_union_oracle, hausdorff_report, max_density_consecutive, ExhaustiveResult,
    HausdorffReport, HausdorffRow, MaxDensityResult, EXHAUSTIVE_LIMIT,
};
pub use packing::*;

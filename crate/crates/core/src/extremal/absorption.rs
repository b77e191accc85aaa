//! Chains of cluster absorptions from a consecutive union up to `O_k`.
//!
//! A union that straddles a type-`(k-1, k)` gap is grown one cluster at a
//! time: with `i` the smallest type among the gaps bordering it, the
//! union is a run of `p >= 2` type-`(i, k)` clusters and the neighbouring
//! type-`(i, k)` cluster across that gap is absorbed. A union inside a
//! single type-`(k-1, k)` cluster is blown down one level, its chain is
//! built there and mapped back, and the resulting copy of `O_(k-1)` is
//! replaced by `O_k`, which has strictly larger density.

use std::cmp::Ordering;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::cluster_gap::{gap_type_after, ClusterId};
use crate::error::{Error, Result};
use crate::exact::{density_compare, ComparisonOutcome, Density, PrecisionPolicy};
use crate::ifs::{ConsecutiveUnion, Params, Word};
use crate::scalar::from_biguint;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbsorptionStep {
    pub before: ConsecutiveUnion,
    pub after: ConsecutiveUnion,
    pub absorbed_cluster: ClusterId,
    pub side: Side,
    pub gap_type: u32,
    /// Number of type-`(gap_type, k)` clusters in `before`.
    pub p: u64,
    #[serde(rename = "N")]
    pub n_sum: u64,
    pub lambda_inv: u64,
    /// `(|U u U'| - |U|) / (|U u U'| - |U'|)` from the geometry.
    #[serde(with = "crate::scalar::rational_str")]
    pub lambda: BigRational,
    pub comparison: ComparisonOutcome,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChainStep {
    Absorb(AbsorptionStep),
    /// `phi_digit(O_(k-1))` replaced by `O_k`.
    BlowUp {
        from: ConsecutiveUnion,
        digit: u32,
        to: ConsecutiveUnion,
        comparison: ComparisonOutcome,
    },
}

impl ChainStep {
    pub fn before(&self) -> &ConsecutiveUnion {
        match self {
            ChainStep::Absorb(s) => &s.before,
            ChainStep::BlowUp { from, .. } => from,
        }
    }

    pub fn after(&self) -> &ConsecutiveUnion {
        match self {
            ChainStep::Absorb(s) => &s.after,
            ChainStep::BlowUp { to, .. } => to,
        }
    }

    fn lift(self, params: &Params, digit: u32) -> Result<ChainStep> {
        let shift = |c: ConsecutiveUnion| -> Result<ConsecutiveUnion> {
            let block = params.count_at_level(c.level)?;
            let off = digit as u64 * block;
            Ok(ConsecutiveUnion {
                level: c.level + 1,
                left: c.left + off,
                right: c.right + off,
            })
        };
        let lift_cluster = |c: ClusterId| -> Result<ClusterId> {
            let mut digits = vec![digit];
            digits.extend_from_slice(c.prefix.digits());
            ClusterId::new(c.i, c.k + 1, Word::new(params, digits)?)
        };
        Ok(match self {
            ChainStep::Absorb(s) => ChainStep::Absorb(AbsorptionStep {
                before: shift(s.before)?,
                after: shift(s.after)?,
                absorbed_cluster: lift_cluster(s.absorbed_cluster)?,
                ..s
            }),
            ChainStep::BlowUp {
                from,
                digit: d,
                to,
                comparison,
            } => ChainStep::BlowUp {
                from: shift(from)?,
                digit: d,
                to: shift(to)?,
                comparison,
            },
        })
    }
}

fn scaled_left(params: &Params, index: u64, k: u32) -> BigUint {
    crate::ifs::scaled_left(params, index, k)
}

fn hull(params: &Params, c: &ConsecutiveUnion) -> BigUint {
    scaled_left(params, c.right, c.level) + 1u32 - scaled_left(params, c.left, c.level)
}

fn density(params: &Params, c: &ConsecutiveUnion) -> Density {
    Density::new(*params, c.count(), hull(params, c))
}

/// `(l^(j-i) - 1) / (l - 1)`: how many multiples of `(l - n) l^i` a
/// type-`j` gap exceeds a type-`i` gap by.
fn gap_excess(params: &Params, i: u32, j: u32) -> u64 {
    let l = params.l() as u64;
    (0..j - i).fold(0u64, |acc, e| acc + l.pow(e))
}

/// The absorption chain from `u` to `O_k`, each step checked for exact
/// density monotonicity and for `1/lambda = p + (l - n) N`.
pub fn absorb_clusters(
    params: &Params,
    u: &ConsecutiveUnion,
    policy: PrecisionPolicy,
) -> Result<Vec<ChainStep>> {
    let k = u.level;
    let full = ConsecutiveUnion::full(params, k)?;
    if !full.contains(u) {
        return Err(Error::InvalidIndexSet { level: k });
    }
    if *u == full {
        return Ok(Vec::new());
    }
    let block = params.count_at_level(k - 1)?;
    let lead = u.left / block;
    if u.right / block == lead {
        let inner = ConsecutiveUnion {
            level: k - 1,
            left: u.left - lead * block,
            right: u.right - lead * block,
        };
        let mut steps = Vec::new();
        for s in absorb_clusters(params, &inner, policy)? {
            steps.push(s.lift(params, lead as u32)?);
        }
        let from = ConsecutiveUnion {
            level: k,
            left: lead * block,
            right: (lead + 1) * block - 1,
        };
        let comparison = density_compare(&density(params, &from), &density(params, &full), policy)?;
        if comparison.ordering == Ordering::Greater {
            return Err(Error::ChainNotMonotone { step: steps.len() });
        }
        steps.push(ChainStep::BlowUp {
            from,
            digit: lead as u32,
            to: full,
            comparison,
        });
        return Ok(steps);
    }

    let mut steps = Vec::new();
    let mut cur = *u;
    let last = full.right;
    while cur != full {
        let left_gap = (cur.left > 0).then(|| gap_type_after(params, k, cur.left - 1));
        let right_gap = (cur.right < last).then(|| gap_type_after(params, k, cur.right));
        let (i, side) = match (left_gap, right_gap) {
            (Some(a), Some(b)) if b < a => (b, Side::Right),
            (Some(a), _) => (a, Side::Left),
            (None, Some(b)) => (b, Side::Right),
            (None, None) => unreachable!("only O_k has no bordering gap"),
        };
        let size = params.count_at_level(i)?;
        let absorbed = match side {
            Side::Left => ConsecutiveUnion {
                level: k,
                left: cur.left - size,
                right: cur.left - 1,
            },
            Side::Right => ConsecutiveUnion {
                level: k,
                left: cur.right + 1,
                right: cur.right + size,
            },
        };
        let after = ConsecutiveUnion {
            level: k,
            left: cur.left.min(absorbed.left),
            right: cur.right.max(absorbed.right),
        };
        let p = cur.count() / size;
        let n_sum: u64 = (cur.left..cur.right)
            .map(|j| gap_type_after(params, k, j))
            .filter(|&t| t >= i)
            .map(|t| gap_excess(params, i, t))
            .sum();
        let lambda_inv = p + (params.l() - params.n()) as u64 * n_sum;
        let (h_u, h_v, h_w) = (
            hull(params, &cur),
            hull(params, &absorbed),
            hull(params, &after),
        );
        let lambda = from_biguint(&(&h_w - &h_u)) / from_biguint(&(&h_w - &h_v));
        let step = steps.len();
        if &lambda * BigRational::from_integer(lambda_inv.into()) != BigRational::one() {
            return Err(Error::LambdaMismatch {
                step,
                found: lambda.recip().to_string(),
                expected: lambda_inv.to_string(),
            });
        }
        let comparison = density_compare(&density(params, &cur), &density(params, &after), policy)?;
        if comparison.ordering == Ordering::Greater {
            return Err(Error::ChainNotMonotone { step });
        }
        steps.push(ChainStep::Absorb(AbsorptionStep {
            before: cur,
            after,
            absorbed_cluster: ClusterId::containing(params, i, k, absorbed.left)?,
            side,
            gap_type: i,
            p,
            n_sum,
            lambda_inv,
            lambda,
            comparison,
        }));
        cur = after;
    }
    Ok(steps)
}

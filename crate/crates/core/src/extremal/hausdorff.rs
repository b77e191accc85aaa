use std::cmp::Ordering;
use std::ops::{Add, Mul, Sub};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{density_compare, pow_s_bracket, Density, PrecisionPolicy};
use crate::ifs::{scaled_lefts, ConsecutiveUnion, Params};
use crate::scalar::from_biguint;

/// Integer type for scaled endpoints; `u128` when `l^k` fits.
trait Endpoint:
    Clone
    + Ord
    + Zero
    + One
    + FromPrimitive
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
{
    fn to_big(&self) -> BigUint;
}

impl Endpoint for u128 {
    fn to_big(&self) -> BigUint {
        BigUint::from(*self)
    }
}

impl Endpoint for BigUint {
    fn to_big(&self) -> BigUint {
        self.clone()
    }
}

fn fits_u128(params: &Params, k: u32) -> bool {
    (params.l() as u128)
        .checked_pow(k)
        .is_some_and(|v| v < u128::MAX / 2)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxDensityResult {
    pub level: u32,
    /// Every consecutive union attaining the maximum, leftmost first.
    pub argmax: Vec<ConsecutiveUnion>,
    pub max_density: Density,
    pub equals_ok: bool,
    /// Comparisons that needed numeric brackets.
    pub numeric_comparisons: u64,
}

impl MaxDensityResult {
    pub fn unique(&self) -> bool {
        self.argmax.len() == 1
    }
}

/// For every count `p`, the smallest hull length over consecutive runs of
/// `p` basic intervals, and the runs attaining it.
fn shortest_runs<I: Endpoint>(lefts: &[I]) -> Vec<(I, Vec<u64>)> {
    let total = lefts.len();
    let mut out = Vec::with_capacity(total);
    for p in 1..=total {
        let mut best: Option<I> = None;
        let mut starts = Vec::new();
        for a in 0..=(total - p) {
            let len = lefts[a + p - 1].clone() + I::one() - lefts[a].clone();
            match best.as_ref().map(|b| len.cmp(b)) {
                None | Some(Ordering::Less) => {
                    best = Some(len);
                    starts.clear();
                    starts.push(a as u64);
                }
                Some(Ordering::Equal) => starts.push(a as u64),
                Some(Ordering::Greater) => {}
            }
        }
        out.push((best.expect("at least one run"), starts));
    }
    out
}

/// Maximal density over all consecutive unions at level `k`, with every
/// maximizer reported.
///
/// For a fixed count `p` the density is largest when the hull is
/// shortest, so only `n^k` candidates reach the comparison kernel.
pub fn max_density_consecutive(
    params: &Params,
    k: u32,
    policy: PrecisionPolicy,
) -> Result<MaxDensityResult> {
    let runs: Vec<(BigUint, Vec<u64>)> = if fits_u128(params, k) {
        let lefts: Vec<u128> = scaled_lefts(params, k)?;
        shortest_runs(&lefts)
            .into_iter()
            .map(|(l, s)| (l.to_big(), s))
            .collect()
    } else {
        let lefts: Vec<BigUint> = scaled_lefts(params, k)?;
        shortest_runs(&lefts)
    };
    let mut best: Option<(Density, Vec<usize>)> = None;
    let mut numeric = 0u64;
    for (idx, (len, _)) in runs.iter().enumerate() {
        let d = Density::new(*params, idx as u64 + 1, len.clone());
        match best {
            None => best = Some((d, vec![idx])),
            Some((ref cur, ref mut ties)) => {
                let out = density_compare(&d, cur, policy)?;
                if out.precision_bits_used > 0 {
                    numeric += 1;
                }
                match out.ordering {
                    Ordering::Greater => best = Some((d, vec![idx])),
                    Ordering::Equal => ties.push(idx),
                    Ordering::Less => {}
                }
            }
        }
    }
    let (max_density, winners) = best.expect("level sets are nonempty");
    let mut argmax: Vec<ConsecutiveUnion> = winners
        .iter()
        .flat_map(|&idx| {
            let p = idx as u64 + 1;
            runs[idx].1.iter().map(move |&a| ConsecutiveUnion {
                level: k,
                left: a,
                right: a + p - 1,
            })
        })
        .collect();
    argmax.sort();
    let full = ConsecutiveUnion::full(params, k)?;
    let equals_ok = argmax.contains(&full);
    Ok(MaxDensityResult {
        level: k,
        argmax,
        max_density,
        equals_ok,
        numeric_comparisons: numeric,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExhaustiveResult {
    pub level: u32,
    pub max_density: Density,
    /// Index sets attaining the maximum.
    pub argmax: Vec<Vec<u64>>,
    pub subsets_checked: u64,
}

/// Largest set size accepted by [`exhaustive_union_oracle`].
pub const EXHAUSTIVE_LIMIT: u64 = 16;

/// Maximal density over every nonempty union of level-`k` basic
/// intervals, consecutive or not.
pub fn exhaustive_union_oracle(
    params: &Params,
    k: u32,
    policy: PrecisionPolicy,
) -> Result<ExhaustiveResult> {
    let total = params.count_at_level(k)?;
    if total > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLarge(format!(
            "{total} basic intervals at level {k}; the exhaustive oracle allows {EXHAUSTIVE_LIMIT}"
        )));
    }
    let lefts: Vec<u128> = scaled_lefts(params, k)?;
    let total = total as usize;
    // per popcount: shortest hull and the subsets achieving it
    let mut best: Vec<Option<(u128, Vec<u32>)>> = vec![None; total + 1];
    let subsets = (1u32 << total) - 1;
    for mask in 1..=subsets {
        let p = mask.count_ones() as usize;
        let lo = mask.trailing_zeros() as usize;
        let hi = 31 - mask.leading_zeros() as usize;
        let len = lefts[hi] + 1 - lefts[lo];
        match &mut best[p] {
            slot @ None => *slot = Some((len, vec![mask])),
            Some((cur, masks)) => match len.cmp(cur) {
                Ordering::Less => {
                    *cur = len;
                    masks.clear();
                    masks.push(mask);
                }
                Ordering::Equal => masks.push(mask),
                Ordering::Greater => {}
            },
        }
    }
    let mut winner: Option<(Density, Vec<u32>)> = None;
    for (p, slot) in best.into_iter().enumerate().skip(1) {
        let (len, masks) = slot.expect("every popcount occurs");
        let d = Density::new(*params, p as u64, BigUint::from(len));
        match winner {
            None => winner = Some((d, masks)),
            Some((ref cur, ref mut all)) => match density_compare(&d, cur, policy)?.ordering {
                Ordering::Greater => winner = Some((d, masks)),
                Ordering::Equal => all.extend(masks),
                Ordering::Less => {}
            },
        }
    }
    let (max_density, masks) = winner.expect("nonempty");
    let mut argmax: Vec<Vec<u64>> = masks
        .into_iter()
        .map(|m| (0..total as u64).filter(|i| m >> i & 1 == 1).collect())
        .collect();
    argmax.sort();
    Ok(ExhaustiveResult {
        level: k,
        max_density,
        argmax,
        subsets_checked: subsets as u64,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HausdorffRow {
    pub k: u32,
    #[serde(with = "crate::scalar::rational_str")]
    pub diameter: BigRational,
    #[serde(with = "crate::scalar::biguint_str")]
    pub p: BigUint,
    #[serde(rename = "L", with = "crate::scalar::biguint_str")]
    pub len: BigUint,
    #[serde(with = "crate::scalar::rational_str")]
    pub density_lo: BigRational,
    #[serde(with = "crate::scalar::rational_str")]
    pub density_hi: BigRational,
}

impl HausdorffRow {
    pub fn density(&self, params: Params) -> Density {
        Density::new(params, self.p.clone(), self.len.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HausdorffReport {
    pub rows: Vec<HausdorffRow>,
    /// Bracket of the limit `r^-s`.
    pub limit: (BigRational, BigRational),
    /// Bracket of `r^s`.
    pub measure: (BigRational, BigRational),
    pub strictly_increasing: bool,
    /// Every row bracket lies below the limit's upper bound.
    pub bounded_by_limit: bool,
    pub bits: u32,
}

/// `d(O_k) = |O_k|^-s` for `k = 1..=k_max`, against the limit `r^-s`.
pub fn hausdorff_report(
    params: &Params,
    k_max: u32,
    bits: u32,
    policy: PrecisionPolicy,
) -> Result<HausdorffReport> {
    let r: BigRational = params.r();
    let measure = pow_s_bracket(&r, *params, bits);
    let limit = pow_s_bracket(&(BigRational::one() / &r), *params, bits);
    let mut rows = Vec::new();
    let mut strictly_increasing = true;
    let mut bounded_by_limit = true;
    let mut prev: Option<Density> = None;
    for k in 1..=k_max {
        let lk = BigUint::from(params.l()).pow(k);
        // l^k |O_k| = (n - 1)(l^k - 1)/(l - 1) + 1
        let len = (&lk - 1u32) * (params.n() - 1) / (params.l() - 1) + 1u32;
        let p = BigUint::from(params.n()).pow(k);
        let d = Density::new(*params, p.clone(), len.clone());
        if let Some(prev) = &prev {
            if density_compare(prev, &d, policy)?.ordering != Ordering::Less {
                strictly_increasing = false;
            }
        }
        let (lo, hi) = d.bracket(bits);
        if lo > limit.1 {
            bounded_by_limit = false;
        }
        rows.push(HausdorffRow {
            k,
            diameter: from_biguint(&len) / from_biguint(&lk),
            p,
            len,
            density_lo: lo,
            density_hi: hi,
        });
        prev = Some(d);
    }
    Ok(HausdorffReport {
        rows,
        limit,
        measure,
        strictly_increasing,
        bounded_by_limit,
        bits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::{level_set, IntervalUnion};
    use crate::scalar::ratio;

    fn p(n: u32, l: u32) -> Params {
        Params::new(n, l).unwrap()
    }

    /// Straightforward scan of every `(left, right)` pair.
    fn brute_force(params: &Params, k: u32) -> (Density, Vec<ConsecutiveUnion>) {
        let count = params.count_at_level(k).unwrap();
        let policy = PrecisionPolicy::default();
        let mut best: Option<(Density, Vec<ConsecutiveUnion>)> = None;
        for a in 0..count {
            for b in a..count {
                let c = ConsecutiveUnion::new(params, k, a, b).unwrap();
                let u = IntervalUnion::from_range(*params, &c).unwrap();
                let d = Density::new(*params, u.count(), u.scaled_diameter());
                match best {
                    None => best = Some((d, vec![c])),
                    Some((ref cur, ref mut all)) => {
                        match density_compare(&d, cur, policy).unwrap().ordering {
                            Ordering::Greater => best = Some((d, vec![c])),
                            Ordering::Equal => all.push(c),
                            Ordering::Less => {}
                        }
                    }
                }
            }
        }
        let (d, mut all) = best.unwrap();
        all.sort();
        (d, all)
    }

    #[test]
    fn first_level_maximum_is_o1() {
        for (n, l) in [(2, 3), (3, 4), (4, 9), (9, 10)] {
            let pr = p(n, l);
            let res = max_density_consecutive(&pr, 1, PrecisionPolicy::default()).unwrap();
            assert!(res.equals_ok && res.unique());
            assert_eq!(
                res.max_density.canonicalize(),
                Density::new(pr, n, n).canonicalize()
            );
        }
    }

    #[test]
    fn second_level_for_2_3() {
        let pr = p(2, 3);
        let res = max_density_consecutive(&pr, 2, PrecisionPolicy::default()).unwrap();
        assert_eq!(res.max_density, Density::new(pr, 4u32, 5u32));
        assert_eq!(res.argmax, vec![ConsecutiveUnion::full(&pr, 2).unwrap()]);
        let (lo, hi) = res.max_density.bracket(40);
        // (9/5)^s = 1.448968748740778...
        assert!(lo > crate::parse_rational("1.448968748").unwrap());
        assert!(hi < crate::parse_rational("1.448968749").unwrap());
    }

    #[test]
    fn matches_pairwise_scan() {
        for (n, l, k) in [(2, 3, 4), (3, 4, 3), (2, 4, 4), (3, 5, 3), (4, 5, 2)] {
            let pr = p(n, l);
            let res = max_density_consecutive(&pr, k, PrecisionPolicy::default()).unwrap();
            let (d, all) = brute_force(&pr, k);
            assert_eq!(res.max_density.canonicalize(), d.canonicalize());
            assert_eq!(res.argmax, all, "({n},{l}) k={k}");
        }
    }

    #[test]
    fn exhaustive_examples() {
        let policy = PrecisionPolicy::default();
        let pr = p(2, 3);
        let e = exhaustive_union_oracle(&pr, 2, policy).unwrap();
        assert_eq!(e.max_density, Density::new(pr, 4u32, 5u32));
        assert_eq!(e.argmax, vec![vec![0, 1, 2, 3]]);
        assert_eq!(e.subsets_checked, 15);
        let e = exhaustive_union_oracle(&pr, 3, policy).unwrap();
        assert_eq!(e.max_density, Density::new(pr, 8u32, 14u32));
        assert_eq!(level_set(&pr, 3).unwrap().diameter(), ratio(14, 27));
        let pr = p(3, 4);
        let e = exhaustive_union_oracle(&pr, 2, policy).unwrap();
        let o2 = level_set(&pr, 2).unwrap();
        assert_eq!(e.max_density, Density::new(pr, 9u32, o2.scaled_diameter()));
        assert!(matches!(
            exhaustive_union_oracle(&pr, 3, policy),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn hausdorff_rows_increase_towards_limit() {
        let pr = p(2, 3);
        let rep = hausdorff_report(&pr, 8, 64, PrecisionPolicy::default()).unwrap();
        assert!(rep.strictly_increasing && rep.bounded_by_limit);
        assert_eq!(rep.rows[1].diameter, ratio(5, 9));
        assert_eq!(rep.rows[2].len, BigUint::from(14u32));
        // r^s for (2,3) is (1/2)^s = 0.64576...
        assert!(rep.measure.0 < crate::parse_rational("0.645761").unwrap());
        assert!(rep.measure.1 > crate::parse_rational("0.645760").unwrap());
    }
}

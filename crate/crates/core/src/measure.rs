//! The natural self-similar probability measure `mu` on `C(n, l)`, giving
//! mass `n^-k` to every level-`k` basic interval.

use std::collections::HashMap;
use std::hash::Hash;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{FromPrimitive, One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{pow_s_bracket, Density};
use crate::ifs::{IntervalUnion, Params};
use crate::scalar::{format_rational, ratio};

/// Which base-`l` expansion to follow at points `m / l^j` that have two.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expansion {
    /// The finite expansion, digits by `floor`.
    Terminating,
    /// The expansion ending in an infinite run of `l - 1`.
    NonTerminating,
}

/// `mu(U) = #U / n^k`.
pub fn measure_union(u: &IntervalUnion) -> BigRational {
    let n = BigInt::from(u.params().n());
    BigRational::new(
        BigInt::from(u.count()),
        num_traits::pow(n, u.level() as usize),
    )
}

/// `F(x) = mu([0, x])` for rational `x` in `[0, 1]`.
pub fn cdf(params: &Params, x: &BigRational) -> Result<BigRational> {
    cdf_generic(params, x, Expansion::Terminating)
}

pub fn cdf_with_expansion(
    params: &Params,
    x: &BigRational,
    expansion: Expansion,
) -> Result<BigRational> {
    cdf_generic(params, x, expansion)
}

/// Exact CDF over any `Ratio<I>`.
///
/// Reads base-`l` digits of `x`, using `F((y + d) / l) = (d + F(y)) / n`.
/// The walk stops at a zero remainder or once the remainder reaches
/// `sup C = r`; a repeated remainder closes a cycle, whose value solves a
/// linear equation.
pub fn cdf_generic<I>(params: &Params, x: &Ratio<I>, expansion: Expansion) -> Result<Ratio<I>>
where
    I: Integer + Clone + Hash + FromPrimitive + Signed + std::fmt::Display,
{
    let zero = Ratio::<I>::zero();
    let one = Ratio::<I>::one();
    if x < &zero || x > &one {
        return Err(Error::OutOfUnitInterval(x.to_string()));
    }
    let int = |v: u32| I::from_u32(v).expect("parameter fits the integer type");
    let n = Ratio::from_integer(int(params.n()));
    let l = Ratio::from_integer(int(params.l()));
    let r = Ratio::new(int(params.n() - 1), int(params.l() - 1));

    let mut acc = zero.clone();
    let mut weight = one.clone();
    let mut y = x.clone();
    let mut seen: HashMap<Ratio<I>, (Ratio<I>, Ratio<I>)> = HashMap::new();
    loop {
        if y >= r {
            return Ok(acc + weight);
        }
        if y.is_zero() {
            return Ok(acc);
        }
        if let Some((acc_m, weight_m)) = seen.get(&y) {
            // acc + weight F(y) = acc_m + weight_m F(y)
            let f_y = (&acc - acc_m) / (weight_m - &weight);
            return Ok(acc + weight * f_y);
        }
        seen.insert(y.clone(), (acc.clone(), weight.clone()));
        let ly = &y * &l;
        let d = match expansion {
            Expansion::Terminating => ly.floor(),
            Expansion::NonTerminating => ly.ceil() - &one,
        };
        weight = weight / &n;
        acc = acc + &d * &weight;
        y = ly - d;
    }
}

/// `mu([a, b]) = F(b) - F(a)`; `mu` has no atoms.
pub fn measure_interval(params: &Params, a: &BigRational, b: &BigRational) -> Result<BigRational> {
    if a > b {
        return Err(Error::OutOfUnitInterval(format!(
            "[{}, {}]",
            format_rational(a),
            format_rational(b)
        )));
    }
    Ok(cdf(params, b)? - cdf(params, a)?)
}

/// Whether `x` lies in `C(n, l)`.
pub fn in_attractor(params: &Params, x: &BigRational) -> bool {
    if x.is_negative() || x > &BigRational::one() {
        return false;
    }
    let l = BigRational::from_integer(BigInt::from(params.l()));
    let n = BigInt::from(params.n());
    let mut y = x.clone();
    let mut seen = std::collections::HashSet::new();
    while !y.is_zero() && seen.insert(y.clone()) {
        let ly = &y * &l;
        let d = ly.floor();
        if d.to_integer() >= n {
            return false;
        }
        y = ly - d;
    }
    true
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DensitySet {
    Union(IntervalUnion),
    Interval(BigRational, BigRational),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DensityValue {
    Exact(Density),
    /// Certified `lo <= d <= hi`.
    Bracket {
        lo: BigRational,
        hi: BigRational,
        bits: u32,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityQuery {
    pub set: DensitySet,
    pub measure: BigRational,
    pub length: BigRational,
    pub density: DensityValue,
}

pub const DEFAULT_BRACKET_BITS: u32 = 64;

/// `d(U) = mu(U) / |U|^s`, with `|U|` the diameter of the hull.
pub fn density_of(params: &Params, set: DensitySet) -> Result<DensityQuery> {
    match set {
        DensitySet::Union(ref u) => {
            let measure = measure_union(u);
            let length = u.diameter();
            let density =
                DensityValue::Exact(Density::new(*params, u.count(), u.scaled_diameter()));
            Ok(DensityQuery {
                set,
                measure,
                length,
                density,
            })
        }
        DensitySet::Interval(ref a, ref b) => {
            let measure = measure_interval(params, a, b)?;
            let length = b - a;
            if !length.is_positive() {
                return Err(Error::ZeroLength);
            }
            let density = if measure.is_zero() {
                DensityValue::Bracket {
                    lo: measure.clone(),
                    hi: measure.clone(),
                    bits: 0,
                }
            } else if let Some(d) = Density::from_measure_length(*params, &measure, &length) {
                DensityValue::Exact(d)
            } else {
                let inv = BigRational::one() / &length;
                let (lo, hi) = pow_s_bracket(&inv, *params, DEFAULT_BRACKET_BITS);
                DensityValue::Bracket {
                    lo: &measure * lo,
                    hi: &measure * hi,
                    bits: DEFAULT_BRACKET_BITS,
                }
            };
            Ok(DensityQuery {
                set,
                measure,
                length,
                density,
            })
        }
    }
}

/// Brute-force `F(x)` bracket from the level-`k` basic intervals, used as
/// an independent check of [`cdf`].
pub fn cdf_by_counting(
    params: &Params,
    x: &BigRational,
    k: u32,
) -> Result<(BigRational, BigRational)> {
    let lefts: Vec<num_bigint::BigUint> = crate::ifs::scaled_lefts(params, k)?;
    let unit = num_traits::pow(BigInt::from(params.l()), k as usize);
    let scaled = x * BigRational::from_integer(unit);
    let mut below = 0u64;
    let mut touching = 0u64;
    for s in &lefts {
        let left = BigRational::from_integer(BigInt::from(s.clone()));
        let right = &left + BigRational::one();
        if right <= scaled {
            below += 1;
        } else if left < scaled {
            touching += 1;
        }
    }
    let total = params.count_at_level(k)?;
    Ok((ratio(below, total), ratio(below + touching, total)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::level_set;

    fn p(n: u32, l: u32) -> Params {
        Params::new(n, l).unwrap()
    }

    #[test]
    fn measure_union_examples() {
        let pr = p(2, 3);
        assert_eq!(measure_union(&level_set(&pr, 2).unwrap()), ratio(1, 1));
        let single = IntervalUnion::new(pr, 3, vec![5]).unwrap();
        assert_eq!(measure_union(&single), ratio(1, 8));
        let u = IntervalUnion::new(p(3, 5), 2, vec![0, 1, 2, 3, 4]).unwrap();
        assert_eq!(measure_union(&u), ratio(5, 9));
    }

    #[test]
    fn cdf_examples() {
        let pr = p(2, 3);
        assert_eq!(cdf(&pr, &ratio(0, 1)).unwrap(), ratio(0, 1));
        assert_eq!(cdf(&pr, &ratio(1, 2)).unwrap(), ratio(1, 1));
        assert_eq!(cdf(&pr, &ratio(1, 1)).unwrap(), ratio(1, 1));
        assert_eq!(cdf(&pr, &ratio(1, 3)).unwrap(), ratio(1, 2));
        assert_eq!(cdf(&pr, &ratio(1, 4)).unwrap(), ratio(1, 2));
        assert!(cdf(&pr, &ratio(3, 2)).is_err());
        for x in [ratio(1, 3), ratio(1, 4), ratio(2, 7), ratio(5, 13)] {
            let (lo, hi) = cdf_by_counting(&pr, &x, 12).unwrap();
            let f = cdf(&pr, &x).unwrap();
            assert!(lo <= f && f <= hi, "{x}");
        }
    }

    #[test]
    fn cdf_on_periodic_inputs() {
        // 1/8 = 0.(01) in base 3 for (2,3): F = 0.(01) in base 2 = 1/3
        assert_eq!(cdf(&p(2, 3), &ratio(1, 8)).unwrap(), ratio(1, 3));
        let pr = p(3, 7);
        for x in [ratio(1, 11), ratio(3, 19), ratio(2, 9)] {
            let (lo, hi) = cdf_by_counting(&pr, &x, 8).unwrap();
            let f = cdf(&pr, &x).unwrap();
            assert!(lo <= f && f <= hi, "{x}");
        }
    }

    #[test]
    fn generic_over_machine_integers() {
        let pr = p(2, 3);
        let x = Ratio::<i64>::new(1, 8);
        assert_eq!(
            cdf_generic(&pr, &x, Expansion::Terminating).unwrap(),
            Ratio::new(1, 3)
        );
    }

    #[test]
    fn both_expansions_agree() {
        let pr = p(3, 5);
        for j in 1..4u32 {
            let den = 5u64.pow(j);
            for m in 1..den {
                let x = ratio(m, den);
                assert_eq!(
                    cdf_with_expansion(&pr, &x, Expansion::Terminating).unwrap(),
                    cdf_with_expansion(&pr, &x, Expansion::NonTerminating).unwrap()
                );
            }
        }
    }

    #[test]
    fn measure_interval_examples() {
        for (n, l) in [(2, 3), (3, 5), (9, 10)] {
            let pr = p(n, l);
            let r: BigRational = pr.r();
            let inv_l = ratio(1, l as u64);
            assert_eq!(
                measure_interval(&pr, &(&r - &inv_l), &r).unwrap(),
                ratio(1, n as u64)
            );
            assert_eq!(
                measure_interval(&pr, &r, &ratio(1, 1)).unwrap(),
                ratio(0, 1)
            );
        }
        let pr = p(2, 3);
        assert_eq!(
            measure_interval(&pr, &ratio(1, 9), &ratio(4, 9)).unwrap(),
            ratio(1, 2)
        );
    }

    #[test]
    fn density_of_examples() {
        let pr = p(2, 3);
        let q = density_of(&pr, DensitySet::Union(level_set(&pr, 2).unwrap())).unwrap();
        assert_eq!(q.density, DensityValue::Exact(Density::new(pr, 4u32, 5u32)));
        let single = IntervalUnion::new(pr, 3, vec![2]).unwrap();
        let q = density_of(&pr, DensitySet::Union(single)).unwrap();
        match q.density {
            DensityValue::Exact(d) => assert_eq!(d.canonicalize(), Density::new(pr, 1u32, 1u32)),
            other => panic!("{other:?}"),
        }
        let r: BigRational = pr.r();
        let third = ratio(1, 3);
        let q = density_of(&pr, DensitySet::Interval(&r - &third, &r + &third)).unwrap();
        assert_eq!(
            (q.measure.clone(), q.length.clone()),
            (ratio(1, 2), ratio(2, 3))
        );
        match q.density {
            DensityValue::Exact(d) => assert_eq!(d.canonicalize(), Density::new(pr, 1u32, 2u32)),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            density_of(&pr, DensitySet::Interval(third.clone(), third)).unwrap_err(),
            Error::ZeroLength
        );
    }

    #[test]
    fn attractor_membership() {
        let pr = p(2, 3);
        assert!(in_attractor(&pr, &ratio(0, 1)));
        assert!(in_attractor(&pr, &ratio(1, 2)));
        assert!(in_attractor(&pr, &ratio(1, 3)));
        assert!(in_attractor(&pr, &ratio(1, 8)));
        assert!(!in_attractor(&pr, &ratio(2, 3)));
        assert!(!in_attractor(&pr, &ratio(1, 1)));
    }
}

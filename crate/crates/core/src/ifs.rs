//! The iterated function system `phi_i(x) = (x + i) / l`, `i < n`, whose
//! attractor is the set of reals in `[0, 1]` with base-`l` digits in
//! `{0, ..., n-1}`.
//!
//! Basic intervals at level `k` are indexed by their digit word read as a
//! base-`n` integer, so consecutive indices are adjacent intervals in
//! left-to-right order. Endpoints at level `k` are integers in units of
//! `l^-k`, computed by reading the same word in base `l`.

use std::ops::{Add, Mul};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{from_biguint, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Params {
    n: u32,
    l: u32,
    max_basic_intervals: u64,
}

impl Params {
    pub const DEFAULT_MAX_BASIC_INTERVALS: u64 = 1 << 26;

    pub fn new(n: u32, l: u32) -> Result<Self> {
        if n < 2 || l <= n {
            return Err(Error::InvalidParams { n, l });
        }
        Ok(Params {
            n,
            l,
            max_basic_intervals: Self::DEFAULT_MAX_BASIC_INTERVALS,
        })
    }

    pub fn with_max_basic_intervals(mut self, bound: u64) -> Self {
        self.max_basic_intervals = bound;
        self
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn max_basic_intervals(&self) -> u64 {
        self.max_basic_intervals
    }

    /// `sup C(n, l) = (n - 1) / (l - 1)`, the fixed point of `phi_{n-1}`.
    pub fn r<T: Scalar>(&self) -> T {
        T::from_count(self.n as u64 - 1) / T::from_count(self.l as u64 - 1)
    }

    /// Contraction ratio `1 / l` shared by every map.
    pub fn ratio<T: Scalar>(&self) -> T {
        T::one() / T::from_count(self.l as u64)
    }

    pub fn alphabet(&self) -> std::ops::Range<u32> {
        0..self.n
    }

    /// `n^k`, refusing levels beyond the configured bound.
    pub fn count_at_level(&self, k: u32) -> Result<u64> {
        (self.n as u64)
            .checked_pow(k)
            .filter(|c| *c <= self.max_basic_intervals)
            .ok_or(Error::ResourceBound {
                level: k,
                bound: self.max_basic_intervals,
            })
    }

    /// Largest level whose basic-interval count stays within `bound`.
    pub fn max_level_within(&self, bound: u64) -> u32 {
        let mut k = 0;
        let mut c: u64 = 1;
        while let Some(next) = c.checked_mul(self.n as u64) {
            if next > bound {
                break;
            }
            c = next;
            k += 1;
        }
        k
    }

    fn check_digit(&self, i: u32) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            Err(Error::DigitOutOfRange {
                digit: i,
                n: self.n,
            })
        }
    }
}

/// `phi_i(x) = (x + i) / l`.
pub fn apply_map<T: Scalar>(params: &Params, i: u32, x: &T) -> Result<T> {
    params.check_digit(i)?;
    Ok((x.clone() + T::from_count(i as u64)) / T::from_count(params.l as u64))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    digits: Vec<u32>,
}

impl Word {
    pub fn new(params: &Params, digits: Vec<u32>) -> Result<Self> {
        for &d in &digits {
            params.check_digit(d)?;
        }
        Ok(Word { digits })
    }

    pub fn empty() -> Self {
        Word { digits: Vec::new() }
    }

    pub fn from_index(params: &Params, index: u64, level: u32) -> Result<Self> {
        let count = params.count_at_level(level)?;
        if index >= count {
            return Err(Error::InvalidIndexSet { level });
        }
        let n = params.n as u64;
        let mut digits = vec![0u32; level as usize];
        let mut rest = index;
        for slot in digits.iter_mut().rev() {
            *slot = (rest % n) as u32;
            rest /= n;
        }
        Ok(Word { digits })
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn level(&self) -> u32 {
        self.digits.len() as u32
    }

    /// Base-`n` value of the word: its position among level-`k` intervals.
    pub fn index(&self, params: &Params) -> u64 {
        self.digits
            .iter()
            .fold(0u64, |acc, &d| acc * params.n as u64 + d as u64)
    }

    /// Left endpoint as the base-`l` numeral `0.w_1 w_2 ... w_k`.
    pub fn left_endpoint<T: Scalar>(&self, params: &Params) -> T {
        let scaled: T = scaled_numeral(&self.digits, params.l);
        scaled / T::pow_count(params.l as u64, self.level())
    }
}

fn scaled_numeral<T>(digits: &[u32], base: u32) -> T
where
    T: Zero + Add<Output = T> + Mul<Output = T> + FromPrimitive + Clone,
{
    let base = T::from_u32(base).expect("base fits the integer type");
    digits.iter().fold(T::zero(), |acc, &d| {
        acc * base.clone() + T::from_u32(d).expect("digit fits the integer type")
    })
}

/// Left endpoint of basic interval `index` at `level`, in units of `l^-level`.
pub fn scaled_left<T>(params: &Params, index: u64, level: u32) -> T
where
    T: Zero + Add<Output = T> + Mul<Output = T> + FromPrimitive + Clone,
{
    let n = params.n as u64;
    let mut digits = vec![0u32; level as usize];
    let mut rest = index;
    for slot in digits.iter_mut().rev() {
        *slot = (rest % n) as u32;
        rest /= n;
    }
    scaled_numeral(&digits, params.l)
}

/// Scaled left endpoints of every basic interval at `level`, in index order.
pub fn scaled_lefts<T>(params: &Params, level: u32) -> Result<Vec<T>>
where
    T: Zero + Add<Output = T> + Mul<Output = T> + FromPrimitive + Clone,
{
    let count = params.count_at_level(level)?;
    let l = T::from_u32(params.l).expect("l fits the integer type");
    let digits: Vec<T> = params
        .alphabet()
        .map(|d| T::from_u32(d).expect("digit fits the integer type"))
        .collect();
    let mut out: Vec<T> = Vec::with_capacity(count as usize);
    out.push(T::zero());
    for _ in 0..level {
        let prev = std::mem::take(&mut out);
        out.reserve(prev.len() * digits.len());
        for s in &prev {
            let shifted = s.clone() * l.clone();
            for d in &digits {
                out.push(shifted.clone() + d.clone());
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasicInterval<T> {
    pub word: Word,
    pub left: T,
    pub right: T,
}

impl<T: Scalar> BasicInterval<T> {
    pub fn new(params: &Params, word: Word) -> Self {
        let left: T = word.left_endpoint(params);
        let right = left.clone() + T::one() / T::pow_count(params.l as u64, word.level());
        BasicInterval { word, left, right }
    }
}

/// A nonempty union of level-`k` basic intervals, stored by index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalUnion {
    params: Params,
    level: u32,
    indices: Vec<u64>,
    left: BigRational,
    right: BigRational,
}

impl IntervalUnion {
    pub fn new(params: Params, level: u32, indices: Vec<u64>) -> Result<Self> {
        let count = params.count_at_level(level)?;
        let sorted = indices.windows(2).all(|w| w[0] < w[1]);
        if indices.is_empty() || !sorted || *indices.last().unwrap() >= count {
            return Err(Error::InvalidIndexSet { level });
        }
        let unit = from_biguint(&BigUint::from(params.l).pow(level));
        let first: BigUint = scaled_left(&params, indices[0], level);
        let last: BigUint = scaled_left(&params, *indices.last().unwrap(), level);
        let left = from_biguint(&first) / &unit;
        let right = from_biguint(&(last + 1u32)) / &unit;
        Ok(IntervalUnion {
            params,
            level,
            indices,
            left,
            right,
        })
    }

    pub fn from_range(params: Params, range: &ConsecutiveUnion) -> Result<Self> {
        IntervalUnion::new(params, range.level, (range.left..=range.right).collect())
    }

    pub fn params(&self) -> Params {
        self.params
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn indices(&self) -> &[u64] {
        &self.indices
    }

    pub fn count(&self) -> u64 {
        self.indices.len() as u64
    }

    pub fn left(&self) -> &BigRational {
        &self.left
    }

    pub fn right(&self) -> &BigRational {
        &self.right
    }

    /// Diameter of the convex hull.
    pub fn diameter(&self) -> BigRational {
        &self.right - &self.left
    }

    /// Hull length in units of `l^-level`.
    pub fn scaled_diameter(&self) -> BigUint {
        let first: BigUint = scaled_left(&self.params, self.indices[0], self.level);
        let last: BigUint = scaled_left(&self.params, *self.indices.last().unwrap(), self.level);
        last + 1u32 - first
    }

    pub fn is_consecutive(&self) -> bool {
        let first = self.indices[0];
        let last = *self.indices.last().unwrap();
        last - first + 1 == self.count()
    }

    /// The consecutive union spanning this one's hull.
    pub fn hull_range(&self) -> ConsecutiveUnion {
        ConsecutiveUnion {
            level: self.level,
            left: self.indices[0],
            right: *self.indices.last().unwrap(),
        }
    }
}

/// All basic intervals with index in `[left, right]` at `level`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConsecutiveUnion {
    pub level: u32,
    pub left: u64,
    pub right: u64,
}

impl ConsecutiveUnion {
    pub fn new(params: &Params, level: u32, left: u64, right: u64) -> Result<Self> {
        let count = params.count_at_level(level)?;
        if left > right || right >= count {
            return Err(Error::InvalidIndexSet { level });
        }
        Ok(ConsecutiveUnion { level, left, right })
    }

    pub fn full(params: &Params, level: u32) -> Result<Self> {
        let count = params.count_at_level(level)?;
        Ok(ConsecutiveUnion {
            level,
            left: 0,
            right: count - 1,
        })
    }

    pub fn count(&self) -> u64 {
        self.right - self.left + 1
    }

    pub fn contains(&self, other: &ConsecutiveUnion) -> bool {
        self.level == other.level && self.left <= other.left && other.right <= self.right
    }

    /// Hull length in units of `l^-level`.
    pub fn scaled_diameter(&self, params: &Params) -> BigUint {
        let first: BigUint = scaled_left(params, self.left, self.level);
        let last: BigUint = scaled_left(params, self.right, self.level);
        last + 1u32 - first
    }
}

/// `O_k`, the union of all `n^k` level-`k` basic intervals.
pub fn level_set(params: &Params, k: u32) -> Result<IntervalUnion> {
    let range = ConsecutiveUnion::full(params, k)?;
    IntervalUnion::from_range(*params, &range)
}

/// `|O_k| = r + (1 - r) l^-k`.
pub fn level_set_diameter<T: Scalar>(params: &Params, k: u32) -> T {
    let r: T = params.r();
    r.clone() + (T::one() - r) / T::pow_count(params.l as u64, k)
}

/// Strips the common leading digit of a union at level `k + 1`,
/// returning that digit and the preimage union at level `k`.
pub fn blow_down(u: &IntervalUnion) -> Result<(u32, IntervalUnion)> {
    if u.level == 0 {
        return Err(Error::MixedLeadingDigits);
    }
    let block = u.params.count_at_level(u.level - 1)?;
    let lead = u.indices[0] / block;
    if u.indices.iter().any(|&i| i / block != lead) {
        return Err(Error::MixedLeadingDigits);
    }
    let indices = u.indices.iter().map(|&i| i - lead * block).collect();
    Ok((
        lead as u32,
        IntervalUnion::new(u.params, u.level - 1, indices)?,
    ))
}

/// Image of a union under `phi_i`, one level deeper.
pub fn blow_up(u: &IntervalUnion, i: u32) -> Result<IntervalUnion> {
    u.params.check_digit(i)?;
    let block = u.params.count_at_level(u.level)?;
    u.params.count_at_level(u.level + 1)?;
    let indices = u.indices.iter().map(|&x| x + i as u64 * block).collect();
    IntervalUnion::new(u.params, u.level + 1, indices)
}

/// Right endpoint of `O_k`, computed as `phi_{n-1}^k(1)`.
pub fn iterate_top_map<T: Scalar>(params: &Params, k: u32) -> T {
    let mut x = T::one();
    for _ in 0..k {
        x = apply_map(params, params.n - 1, &x).expect("n - 1 is a valid digit");
    }
    x
}

impl BasicInterval<BigRational> {
    pub fn length(&self) -> BigRational {
        &self.right - &self.left
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use crate::Rational;

    fn p(n: u32, l: u32) -> Params {
        Params::new(n, l).unwrap()
    }

    #[test]
    fn rejects_bad_params() {
        assert_eq!(Params::new(3, 2), Err(Error::InvalidParams { n: 3, l: 2 }));
        assert!(Params::new(1, 5).is_err());
        assert!(Params::new(4, 4).is_err());
        let pr = p(9, 10);
        assert_eq!(pr.r::<Rational>(), ratio(8, 9));
    }

    #[test]
    fn apply_map_examples() {
        let pr = p(2, 3);
        assert_eq!(apply_map(&pr, 1, &ratio(1, 1)).unwrap(), ratio(2, 3));
        assert_eq!(apply_map(&pr, 1, &ratio(1, 2)).unwrap(), ratio(1, 2));
        assert_eq!(apply_map(&p(3, 5), 0, &ratio(0, 1)).unwrap(), ratio(0, 1));
        assert_eq!(
            apply_map(&pr, 2, &ratio(0, 1)),
            Err(Error::DigitOutOfRange { digit: 2, n: 2 })
        );
        assert!((apply_map(&pr, 1, &0.5f64).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn level_sets() {
        let pr = p(2, 3);
        let o1 = level_set(&pr, 1).unwrap();
        assert_eq!(o1.indices(), &[0, 1]);
        assert_eq!(o1.diameter(), ratio(2, 3));
        let o2 = level_set(&pr, 2).unwrap();
        assert_eq!(o2.indices(), &[0, 1, 2, 3]);
        assert_eq!(o2.diameter(), ratio(5, 9));
        let lefts: Vec<Rational> = (0..4)
            .map(|i| Word::from_index(&pr, i, 2).unwrap().left_endpoint(&pr))
            .collect();
        assert_eq!(
            lefts,
            vec![ratio(0, 1), ratio(1, 9), ratio(1, 3), ratio(4, 9)]
        );
        let o0 = level_set(&pr, 0).unwrap();
        assert_eq!(
            (o0.left().clone(), o0.right().clone()),
            (ratio(0, 1), ratio(1, 1))
        );
        assert_eq!(level_set_diameter::<Rational>(&pr, 1), ratio(2, 3));
    }

    #[test]
    fn resource_bound_is_enforced() {
        let pr = p(2, 3).with_max_basic_intervals(16);
        assert!(level_set(&pr, 4).is_ok());
        assert_eq!(
            level_set(&pr, 5),
            Err(Error::ResourceBound {
                level: 5,
                bound: 16
            })
        );
        assert_eq!(pr.max_level_within(4096), 12);
    }

    #[test]
    fn blow_down_examples() {
        let pr = p(2, 3);
        let u = IntervalUnion::new(pr, 2, vec![2, 3]).unwrap();
        let (d, v) = blow_down(&u).unwrap();
        assert_eq!(d, 1);
        assert_eq!(v, level_set(&pr, 1).unwrap());
        let u = IntervalUnion::new(pr, 1, vec![0]).unwrap();
        assert_eq!(blow_down(&u).unwrap().1, level_set(&pr, 0).unwrap());
        let pr = p(3, 4);
        let u = IntervalUnion::new(pr, 2, vec![4, 5]).unwrap();
        let (d, v) = blow_down(&u).unwrap();
        assert_eq!((d, v.indices().to_vec()), (1, vec![1, 2]));
        let mixed = IntervalUnion::new(pr, 2, vec![2, 3]).unwrap();
        assert_eq!(blow_down(&mixed), Err(Error::MixedLeadingDigits));
        assert_eq!(blow_up(&v, 1).unwrap(), u);
    }

    #[test]
    fn scaled_lefts_agree_with_single_index() {
        let pr = p(3, 7);
        let all: Vec<u64> = scaled_lefts(&pr, 4).unwrap();
        for (i, s) in all.iter().enumerate() {
            assert_eq!(*s, scaled_left::<u64>(&pr, i as u64, 4));
        }
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn float_and_exact_endpoints_agree() {
        let pr = p(4, 9);
        let w = Word::new(&pr, vec![3, 1, 0, 2]).unwrap();
        let exact = BasicInterval::<Rational>::new(&pr, w.clone());
        let approx = BasicInterval::<f64>::new(&pr, w);
        let as_f64 = |q: &Rational| {
            use num_traits::ToPrimitive;
            q.to_f64().unwrap()
        };
        assert!((as_f64(&exact.left) - approx.left).abs() < 1e-12);
        assert!((as_f64(&exact.right) - approx.right).abs() < 1e-12);
        assert_eq!(exact.length(), ratio(1, 6561));
    }
}

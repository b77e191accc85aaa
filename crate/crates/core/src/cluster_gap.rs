//! Clusters and gaps of `O_k`.
//!
//! A cluster of type `(i, k)` is the run of `n^i` level-`k` basic
//! intervals sharing a prefix of length `k - i`. A gap of type `(i, k)`
//! separates two adjacent type-`(i, k)` clusters inside one
//! type-`(i + 1, k)` cluster; type-`(0, k)` gaps have length zero and the
//! single type-`(k, k)` gap runs from the right end of `O_k` to `1`.

use num_bigint::BigUint;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::{scaled_lefts, ConsecutiveUnion, Params, Word};
use crate::scalar::{from_biguint, Scalar};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClusterId {
    pub i: u32,
    pub k: u32,
    pub prefix: Word,
}

impl ClusterId {
    pub fn new(i: u32, k: u32, prefix: Word) -> Result<Self> {
        if i > k {
            return Err(Error::TypeOutOfRange { i, k });
        }
        if prefix.level() != k - i {
            return Err(Error::MalformedPrefix {
                expected: k - i,
                got: prefix.level(),
            });
        }
        Ok(ClusterId { i, k, prefix })
    }

    pub fn range(&self, params: &Params) -> Result<ConsecutiveUnion> {
        cluster(params, self.i, self.k, &self.prefix)
    }

    /// The type-`(i, k)` cluster containing basic interval `index`.
    pub fn containing(params: &Params, i: u32, k: u32, index: u64) -> Result<Self> {
        if i > k {
            return Err(Error::TypeOutOfRange { i, k });
        }
        let block = params.count_at_level(i)?;
        let prefix = Word::from_index(params, index / block, k - i)?;
        Ok(ClusterId { i, k, prefix })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapRecord {
    #[serde(with = "crate::scalar::rational_str")]
    pub left: BigRational,
    #[serde(with = "crate::scalar::rational_str")]
    pub right: BigRational,
    pub type_i: u32,
    pub level: u32,
}

impl GapRecord {
    pub fn length(&self) -> BigRational {
        &self.right - &self.left
    }
}

/// `a_i = l + l^2 + ... + l^(i-1)`, with `a_1 = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeomSum {
    pub i: u32,
    pub value: BigUint,
}

impl GeomSum {
    pub fn new(params: &Params, i: u32) -> Self {
        let l = BigUint::from(params.l());
        let mut value = BigUint::from(0u32);
        let mut term = l.clone();
        for _ in 1..i {
            value += &term;
            term *= &l;
        }
        GeomSum { i, value }
    }

    /// `l (1 + a_i) = a_i + l^i`.
    pub fn satisfies_recurrence(&self, params: &Params) -> bool {
        let l = BigUint::from(params.l());
        &l * (&self.value + 1u32) == &self.value + l.pow(self.i)
    }
}

/// `1 + l + ... + l^(i-1)`.
fn repunit(l: u64, i: u32) -> BigUint {
    let l = BigUint::from(l);
    let mut acc = BigUint::from(0u32);
    for _ in 0..i {
        acc = acc * &l + 1u32;
    }
    acc
}

/// Length of a type-`(i, k)` gap: `(l - n)(1 + l + ... + l^(i-1)) / l^k`.
pub fn gap_length<T: Scalar>(params: &Params, i: u32, k: u32) -> Result<T> {
    if i < 1 || i > k {
        return Err(Error::TypeOutOfRange { i, k });
    }
    let (n, l) = (params.n() as u64, params.l() as u64);
    let mut sum = T::zero();
    let mut term = T::one();
    for _ in 0..i {
        sum = sum + term.clone();
        term = term * T::from_count(l);
    }
    Ok(T::from_count(l - n) * sum / T::pow_count(l, k))
}

/// Gap length in units of `l^-k`.
pub fn scaled_gap_length(params: &Params, i: u32) -> BigUint {
    BigUint::from(params.l() - params.n()) * repunit(params.l() as u64, i)
}

/// Diameter of a type-`(i, k)` cluster: `l^-k` for `i = 0`, otherwise
/// `(n + (n - 1)(l + ... + l^(i-1))) / l^k`.
pub fn cluster_diameter<T: Scalar>(params: &Params, i: u32, k: u32) -> Result<T> {
    if i > k {
        return Err(Error::TypeOutOfRange { i, k });
    }
    let scaled = T::from_big(&scaled_cluster_diameter(params, i));
    Ok(scaled / T::pow_count(params.l() as u64, k))
}

pub fn scaled_cluster_diameter(params: &Params, i: u32) -> BigUint {
    if i == 0 {
        return BigUint::from(1u32);
    }
    let a = GeomSum::new(params, i).value;
    BigUint::from(params.n()) + BigUint::from(params.n() - 1) * a
}

/// Type-`(i, k)` cluster with the given prefix, as an index range.
pub fn cluster(params: &Params, i: u32, k: u32, prefix: &Word) -> Result<ConsecutiveUnion> {
    if i > k {
        return Err(Error::TypeOutOfRange { i, k });
    }
    if prefix.level() != k - i {
        return Err(Error::MalformedPrefix {
            expected: k - i,
            got: prefix.level(),
        });
    }
    let block = params.count_at_level(i)?;
    params.count_at_level(k)?;
    let v = prefix.index(params);
    ConsecutiveUnion::new(params, k, v * block, (v + 1) * block - 1)
}

/// Checks `n + (n - 1) a_i + (l - n)(1 + a_i) = l^i`.
pub fn verify_identity_h1(params: &Params, i: u32) -> bool {
    let a = GeomSum::new(params, i).value;
    let n = BigUint::from(params.n());
    let l = BigUint::from(params.l());
    let lhs = &n + (&n - 1u32) * &a + (&l - &n) * (&a + 1u32);
    lhs == l.pow(i)
}

/// Type of the gap to the right of basic interval `index` at level `k`:
/// the number of trailing `n - 1` digits of `index`. Type 0 is a shared
/// endpoint, type `k` the gap after `O_k`.
pub fn gap_type_after(params: &Params, k: u32, index: u64) -> u32 {
    let n = params.n() as u64;
    let mut t = 0;
    let mut j = index;
    while t < k && j % n == n - 1 {
        j /= n;
        t += 1;
    }
    t
}

/// All positive-length gaps of `O_k`, left to right, each classified by
/// matching its exact length against [`gap_length`].
pub fn enumerate_gaps(params: &Params, k: u32) -> Result<Vec<GapRecord>> {
    let lefts: Vec<BigUint> = scaled_lefts(params, k)?;
    let unit = from_biguint(&BigUint::from(params.l()).pow(k));
    let lengths: Vec<BigUint> = (1..=k).map(|i| scaled_gap_length(params, i)).collect();
    let mut gaps = Vec::new();
    let mut push = |start: BigUint, end: BigUint| -> Result<()> {
        let len = &end - &start;
        let left = from_biguint(&start) / &unit;
        let right = from_biguint(&end) / &unit;
        let mut hits = lengths.iter().enumerate().filter(|(_, g)| **g == len);
        match (hits.next(), hits.next()) {
            (Some((i, _)), None) => {
                gaps.push(GapRecord {
                    left,
                    right,
                    type_i: i as u32 + 1,
                    level: k,
                });
                Ok(())
            }
            _ => Err(Error::UnclassifiedGap {
                left: left.to_string(),
                right: right.to_string(),
                level: k,
            }),
        }
    };
    for w in lefts.windows(2) {
        let end_of_left = &w[0] + 1u32;
        if w[1] > end_of_left {
            push(end_of_left, w[1].clone())?;
        }
    }
    let last_end = lefts.last().expect("level sets are nonempty") + 1u32;
    let top = BigUint::from(params.l()).pow(k);
    if top > last_end {
        push(last_end, top)?;
    }
    Ok(gaps)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapAudit {
    pub level: u32,
    pub gap_count: u64,
    /// Gaps per type `1..=k`.
    pub counts_by_type: Vec<u64>,
    pub counts_match: bool,
    pub positions_match: bool,
    pub clusters_checked: u64,
    pub cluster_diameters_match: bool,
    pub separation_holds: bool,
    pub identity_holds: bool,
}

impl GapAudit {
    pub fn passed(&self) -> bool {
        self.counts_match
            && self.positions_match
            && self.cluster_diameters_match
            && self.separation_holds
            && self.identity_holds
    }
}

/// Cross-checks the gap and cluster formulas against direct enumeration.
///
/// Expected counts: `n^(k-i-1)(n-1)` gaps of each type `i < k` and one of
/// type `k`.
pub fn audit_level(params: &Params, k: u32) -> Result<GapAudit> {
    let gaps = enumerate_gaps(params, k)?;
    let count = params.count_at_level(k)?;
    let mut counts_by_type = vec![0u64; k as usize];
    for g in &gaps {
        counts_by_type[g.type_i as usize - 1] += 1;
    }
    let n = params.n() as u64;
    let counts_match = (1..=k).all(|i| {
        let expected = if i == k {
            1
        } else {
            n.pow(k - i - 1) * (n - 1)
        };
        counts_by_type[i as usize - 1] == expected
    });

    // positional types must agree with the length classification
    let lefts: Vec<BigUint> = scaled_lefts(params, k)?;
    let positional: Vec<u32> = (0..count)
        .map(|j| gap_type_after(params, k, j))
        .filter(|&t| t > 0)
        .collect();
    let positions_match =
        positional.len() == gaps.len() && positional.iter().zip(&gaps).all(|(t, g)| *t == g.type_i);

    let mut clusters_checked = 0u64;
    let mut cluster_diameters_match = true;
    let mut separation_holds = true;
    for i in 0..=k {
        let expected = scaled_cluster_diameter(params, i);
        let block = n.pow(i);
        for v in 0..n.pow(k - i) {
            let (a, b) = (v * block, (v + 1) * block - 1);
            let hull = &lefts[b as usize] + 1u32 - &lefts[a as usize];
            clusters_checked += 1;
            if hull != expected {
                cluster_diameters_match = false;
            }
            // the n subclusters of a type-(i, k) cluster are split by type-(i-1, k) gaps
            if i >= 1 {
                let sub = block / n;
                for c in 1..n {
                    let j = a + c * sub - 1;
                    let gap = &lefts[j as usize + 1] - (&lefts[j as usize] + 1u32);
                    if gap != scaled_gap_length(params, i - 1) {
                        separation_holds = false;
                    }
                }
            }
        }
    }
    let identity_holds = (1..=k.max(1)).all(|i| verify_identity_h1(params, i));
    Ok(GapAudit {
        level: k,
        gap_count: gaps.len() as u64,
        counts_by_type,
        counts_match,
        positions_match,
        clusters_checked,
        cluster_diameters_match,
        separation_holds,
        identity_holds,
    })
}

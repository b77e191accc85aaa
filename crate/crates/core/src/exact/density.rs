use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::certified::{exp_interval, ln_rational, ln_u64, Fixed};
use crate::error::{Error, Result};
use crate::ifs::Params;
use crate::scalar::{from_biguint, is_integer};

/// Escalation schedule for numeric comparisons: start at `start_bits`,
/// double until `cap_bits`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionPolicy {
    pub start_bits: u32,
    pub cap_bits: u32,
}

impl PrecisionPolicy {
    pub const DEFAULT_START: u32 = 128;
    pub const DEFAULT_CAP: u32 = 4096;

    pub fn with_cap(cap_bits: u32) -> Self {
        PrecisionPolicy {
            start_bits: Self::DEFAULT_START,
            cap_bits,
        }
    }

    pub fn schedule(&self) -> impl Iterator<Item = u32> {
        let cap = self.cap_bits;
        std::iter::successors(Some(self.start_bits.max(1)), |b| b.checked_mul(2))
            .take_while(move |b| *b <= cap)
    }
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy {
            start_bits: Self::DEFAULT_START,
            cap_bits: Self::DEFAULT_CAP,
        }
    }
}

/// Result of [`density_compare`]. `precision_bits_used == 0` means the
/// ordering was decided by integer arithmetic alone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonOutcome {
    #[serde(with = "ordering_name")]
    pub ordering: Ordering,
    pub precision_bits_used: u32,
    pub certified: bool,
}

mod ordering_name {
    use std::cmp::Ordering;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(o: &Ordering, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(match o {
            Ordering::Less => "less",
            Ordering::Equal => "equal",
            Ordering::Greater => "greater",
        })
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Ordering, D::Error> {
        match String::deserialize(d)?.as_str() {
            "less" => Ok(Ordering::Less),
            "equal" => Ok(Ordering::Equal),
            "greater" => Ok(Ordering::Greater),
            other => Err(serde::de::Error::custom(format!(
                "unknown ordering {other:?}"
            ))),
        }
    }
}

impl ComparisonOutcome {
    fn exact(ordering: Ordering) -> Self {
        ComparisonOutcome {
            ordering,
            precision_bits_used: 0,
            certified: true,
        }
    }
}

/// The density `p / L^s` of a union of `p` level-`k` basic intervals
/// whose hull has length `L * l^-k`. The value does not depend on `k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Density {
    params: Params,
    p: BigUint,
    len: BigUint,
}

impl Density {
    pub fn new(params: Params, p: impl Into<BigUint>, len: impl Into<BigUint>) -> Self {
        let p = p.into();
        let len = len.into();
        assert!(
            !p.is_zero() && !len.is_zero(),
            "density needs p >= 1 and L >= 1"
        );
        Density { params, p, len }
    }

    pub fn params(&self) -> Params {
        self.params
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn len(&self) -> &BigUint {
        &self.len
    }

    /// Exact density of a set with rational measure and length, if both
    /// live on a common level: `measure * n^k` and `length * l^k` integral.
    pub fn from_measure_length(
        params: Params,
        measure: &BigRational,
        length: &BigRational,
    ) -> Option<Density> {
        if !measure.is_positive() || !length.is_positive() {
            return None;
        }
        let km = level_for_denominator(measure.denom().magnitude(), params.n())?;
        let kl = level_for_denominator(length.denom().magnitude(), params.l())?;
        let k = km.max(kl);
        let p = measure * from_biguint(&BigUint::from(params.n()).pow(k));
        let len = length * from_biguint(&BigUint::from(params.l()).pow(k));
        debug_assert!(is_integer(&p) && is_integer(&len));
        Some(Density::new(
            params,
            p.to_integer().magnitude().clone(),
            len.to_integer().magnitude().clone(),
        ))
    }

    /// Divides out common `(n, l)` factors until none remain.
    pub fn canonicalize(&self) -> Density {
        let n = BigUint::from(self.params.n());
        let l = BigUint::from(self.params.l());
        let mut p = self.p.clone();
        let mut len = self.len.clone();
        loop {
            let (pq, pr) = p.div_rem(&n);
            let (lq, lr) = len.div_rem(&l);
            if !pr.is_zero() || !lr.is_zero() {
                break;
            }
            p = pq;
            len = lq;
        }
        Density {
            params: self.params,
            p,
            len,
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.canonicalize() == *self
    }

    /// Rational bracket of the represented real, relative width `2^-bits`.
    pub fn bracket(&self, bits: u32) -> (BigRational, BigRational) {
        let p = from_biguint(&self.p);
        let inv_len = BigRational::one() / from_biguint(&self.len);
        let (lo, hi) = pow_s_bracket(&inv_len, self.params, bits);
        (&p * lo, p * hi)
    }
}

impl fmt::Display for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}^s", self.p, self.len)
    }
}

/// Smallest `k` with `den | base^k`, if any.
fn level_for_denominator(den: &BigUint, base: u32) -> Option<u32> {
    let base = BigUint::from(base);
    let mut rest = den.clone();
    loop {
        let g = rest.gcd(&base);
        if g.is_one() {
            break;
        }
        while (&rest % &g).is_zero() {
            rest /= &g;
        }
    }
    if !rest.is_one() {
        return None;
    }
    let mut k = 0u32;
    let mut acc = BigUint::one();
    while !(&acc % den).is_zero() {
        acc *= &base;
        k += 1;
    }
    Some(k)
}

/// `(a, b)` with `n = m^a`, `l = m^b` for some integer `m >= 2`, reduced
/// to lowest terms; `None` when `n` and `l` are multiplicatively
/// independent. Then `s = a / b` exactly.
pub fn multiplicative_dependence(params: Params) -> Option<(u32, u32)> {
    use num_integer::Roots;
    let n = params.n() as u64;
    let l = params.l() as u64;
    let max_a = 64 - n.leading_zeros();
    for a in (1..=max_a).rev() {
        let m = n.nth_root(a);
        if m < 2 || m.checked_pow(a) != Some(n) {
            continue;
        }
        // m is the minimal base of n; l must be a power of it
        let mut rest = l;
        let mut b = 0u32;
        while rest.is_multiple_of(m) {
            rest /= m;
            b += 1;
        }
        if rest != 1 {
            return None;
        }
        let g = a.gcd(&b);
        return Some((a / g, b / g));
    }
    None
}

pub fn canonicalize(d: &Density) -> Density {
    d.canonicalize()
}

/// Orders two densities of the same system.
///
/// Identical canonical pairs are equal. Otherwise integer dominance
/// (`p1 >= p2` and `L1 <= L2`) or, for multiplicatively dependent
/// `(n, l)`, the identity `p1^b L2^a` vs `p2^b L1^a` decides exactly.
/// The remaining cases are separated numerically; distinct canonical
/// pairs are never reported equal on numeric evidence.
pub fn density_compare(
    a: &Density,
    b: &Density,
    policy: PrecisionPolicy,
) -> Result<ComparisonOutcome> {
    if a.params.n() != b.params.n() || a.params.l() != b.params.l() {
        return Err(Error::ParamsMismatch);
    }
    let a = a.canonicalize();
    let b = b.canonicalize();
    if a.p == b.p && a.len == b.len {
        return Ok(ComparisonOutcome::exact(Ordering::Equal));
    }
    if a.p >= b.p && a.len <= b.len {
        return Ok(ComparisonOutcome::exact(Ordering::Greater));
    }
    if a.p <= b.p && a.len >= b.len {
        return Ok(ComparisonOutcome::exact(Ordering::Less));
    }
    if let Some((ea, eb)) = multiplicative_dependence(a.params) {
        // p1 / L1^(ea/eb) vs p2 / L2^(ea/eb)
        let lhs = Pow::pow(&a.p, eb) * Pow::pow(&b.len, ea);
        let rhs = Pow::pow(&b.p, eb) * Pow::pow(&a.len, ea);
        return Ok(ComparisonOutcome::exact(lhs.cmp(&rhs)));
    }
    let ratio_p = BigRational::new(
        from_biguint(&a.p).to_integer(),
        from_biguint(&b.p).to_integer(),
    );
    let ratio_len = BigRational::new(
        from_biguint(&a.len).to_integer(),
        from_biguint(&b.len).to_integer(),
    );
    compare_log_form(&ratio_p, &ratio_len, a.params, policy)
}

/// Sign of `ln(x) - s ln(y)` for positive rationals, i.e. the ordering
/// of `x` against `y^s`. Exact shortcuts first, then escalating brackets.
pub fn compare_log_form(
    x: &BigRational,
    y: &BigRational,
    params: Params,
    policy: PrecisionPolicy,
) -> Result<ComparisonOutcome> {
    assert!(x.is_positive() && y.is_positive());
    let one = BigRational::one();
    if y == &one {
        return Ok(ComparisonOutcome::exact(x.cmp(&one)));
    }
    if x == &one {
        // y^s is on the same side of 1 as y
        return Ok(ComparisonOutcome::exact(one.cmp(y)));
    }
    // x >= 1 >= y^s or x <= 1 <= y^s
    if x > &one && y < &one {
        return Ok(ComparisonOutcome::exact(Ordering::Greater));
    }
    if x < &one && y > &one {
        return Ok(ComparisonOutcome::exact(Ordering::Less));
    }
    if let Some((ea, eb)) = multiplicative_dependence(params) {
        // x^eb vs y^ea
        let lhs = Pow::pow(x, eb as i32);
        let rhs = Pow::pow(y, ea as i32);
        return Ok(ComparisonOutcome::exact(lhs.cmp(&rhs)));
    }
    for bits in policy.schedule() {
        let prec = bits + 16;
        let d = ln_rational(x, prec)
            .mul(&ln_u64(params.l() as u64, prec))
            .sub(&ln_rational(y, prec).mul(&ln_u64(params.n() as u64, prec)));
        if let Some(ordering) = d.strict_sign() {
            return Ok(ComparisonOutcome {
                ordering,
                precision_bits_used: bits,
                certified: true,
            });
        }
    }
    Err(Error::UndecidedAtMaxPrecision(policy.cap_bits))
}

fn s_interval(params: Params, prec: u32) -> Fixed {
    ln_u64(params.n() as u64, prec).div(&ln_u64(params.l() as u64, prec))
}

/// Rational bracket of `s = ln n / ln l` no wider than `2^-bits`.
pub fn dimension_bracket(params: Params, bits: u32) -> (BigRational, BigRational) {
    let mut prec = bits + 16;
    loop {
        let s = s_interval(params, prec);
        if (&s.hi - &s.lo) << (bits as usize) <= num_bigint::BigInt::one() << prec as usize {
            return (s.lower_rational(), s.upper_rational());
        }
        prec *= 2;
    }
}

/// Bracket `lower <= x^s <= upper` with `upper - lower <= 2^-bits * x^s`.
pub fn pow_s_bracket(x: &BigRational, params: Params, bits: u32) -> (BigRational, BigRational) {
    assert!(x.is_positive(), "pow_s_bracket needs x > 0");
    if x.is_one() {
        return (BigRational::one(), BigRational::one());
    }
    if let Some((a, b)) = multiplicative_dependence(params) {
        if let Some(root) = exact_root(&Pow::pow(x, a as i32), b) {
            return (root.clone(), root);
        }
    }
    let mut prec = bits + 32;
    loop {
        let t = s_interval(params, prec).mul(&ln_rational(x, prec));
        let (lo, hi) = exp_interval(&t);
        let width = &hi - &lo;
        if width * from_biguint(&(BigUint::one() << bits as usize)) <= lo {
            return (lo, hi);
        }
        prec *= 2;
    }
}

/// Exact `b`-th root of a positive rational, when rational.
fn exact_root(q: &BigRational, b: u32) -> Option<BigRational> {
    let num = q.numer().magnitude();
    let den = q.denom().magnitude();
    let rn = num.nth_root(b);
    let rd = den.nth_root(b);
    if Pow::pow(&rn, b) == *num && Pow::pow(&rd, b) == *den {
        Some(BigRational::new(
            from_biguint(&rn).to_integer(),
            from_biguint(&rd).to_integer(),
        ))
    } else {
        None
    }
}

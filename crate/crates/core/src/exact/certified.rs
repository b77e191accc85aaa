//! Fixed-point interval arithmetic over big integers.
//!
//! A [`Fixed`] value is a closed interval `[lo, hi] * 2^-prec`. Every
//! operation rounds its lower endpoint toward negative infinity and its
//! upper endpoint toward positive infinity, so the true value is always
//! enclosed. Only what the density kernel needs is here: logarithms of
//! positive rationals, exponentials, and the four field operations.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Fixed {
    pub lo: BigInt,
    pub hi: BigInt,
    pub prec: u32,
}

fn pow2(bits: u32) -> BigInt {
    BigInt::one() << bits as usize
}

fn floor_div(a: &BigInt, b: &BigInt) -> BigInt {
    Integer::div_floor(a, b)
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    Integer::div_ceil(a, b)
}

impl Fixed {
    #[cfg(test)]
    pub fn exact_int(v: &BigInt, prec: u32) -> Self {
        let x = v << prec as usize;
        Fixed {
            lo: x.clone(),
            hi: x,
            prec,
        }
    }

    pub fn zero(prec: u32) -> Self {
        Fixed {
            lo: BigInt::zero(),
            hi: BigInt::zero(),
            prec,
        }
    }

    #[cfg(test)]
    pub fn from_ratio(num: &BigInt, den: &BigInt, prec: u32) -> Self {
        debug_assert!(den.is_positive());
        let scaled = num << prec as usize;
        Fixed {
            lo: floor_div(&scaled, den),
            hi: ceil_div(&scaled, den),
            prec,
        }
    }

    pub fn add(&self, o: &Fixed) -> Fixed {
        debug_assert_eq!(self.prec, o.prec);
        Fixed {
            lo: &self.lo + &o.lo,
            hi: &self.hi + &o.hi,
            prec: self.prec,
        }
    }

    pub fn sub(&self, o: &Fixed) -> Fixed {
        debug_assert_eq!(self.prec, o.prec);
        Fixed {
            lo: &self.lo - &o.hi,
            hi: &self.hi - &o.lo,
            prec: self.prec,
        }
    }

    pub fn scale(&self, k: i64) -> Fixed {
        let k = BigInt::from(k);
        let (a, b) = (&self.lo * &k, &self.hi * &k);
        if k.is_negative() {
            Fixed {
                lo: b,
                hi: a,
                prec: self.prec,
            }
        } else {
            Fixed {
                lo: a,
                hi: b,
                prec: self.prec,
            }
        }
    }

    pub fn mul(&self, o: &Fixed) -> Fixed {
        debug_assert_eq!(self.prec, o.prec);
        let products = [
            &self.lo * &o.lo,
            &self.lo * &o.hi,
            &self.hi * &o.lo,
            &self.hi * &o.hi,
        ];
        let min = products.iter().min().unwrap();
        let max = products.iter().max().unwrap();
        let unit = pow2(self.prec);
        Fixed {
            lo: floor_div(min, &unit),
            hi: ceil_div(max, &unit),
            prec: self.prec,
        }
    }

    /// Division by an interval that excludes zero.
    pub fn div(&self, o: &Fixed) -> Fixed {
        debug_assert_eq!(self.prec, o.prec);
        assert!(
            o.lo.is_positive() || o.hi.is_negative(),
            "divisor interval contains zero"
        );
        let mut lo: Option<BigInt> = None;
        let mut hi: Option<BigInt> = None;
        for a in [&self.lo, &self.hi] {
            let scaled = a << self.prec as usize;
            for b in [&o.lo, &o.hi] {
                let f = floor_div(&scaled, b);
                let c = ceil_div(&scaled, b);
                lo = Some(match lo {
                    Some(v) if v <= f => v,
                    _ => f,
                });
                hi = Some(match hi {
                    Some(v) if v >= c => v,
                    _ => c,
                });
            }
        }
        Fixed {
            lo: lo.unwrap(),
            hi: hi.unwrap(),
            prec: self.prec,
        }
    }

    /// Sign of every point in the interval, if it is uniform and nonzero.
    pub fn strict_sign(&self) -> Option<Ordering> {
        if self.lo.is_positive() {
            Some(Ordering::Greater)
        } else if self.hi.is_negative() {
            Some(Ordering::Less)
        } else {
            None
        }
    }

    pub fn lower_rational(&self) -> BigRational {
        BigRational::new(self.lo.clone(), pow2(self.prec))
    }

    pub fn upper_rational(&self) -> BigRational {
        BigRational::new(self.hi.clone(), pow2(self.prec))
    }
}

/// `atanh(u/v)` for `0 <= u/v <= 1/3`, summed as `sum y^(2j+1)/(2j+1)`.
fn atanh_small(u: &BigUint, v: &BigUint, prec: u32) -> Fixed {
    if u.is_zero() {
        return Fixed::zero(prec);
    }
    let u = BigInt::from_biguint(Sign::Plus, u.clone());
    let v = BigInt::from_biguint(Sign::Plus, v.clone());
    debug_assert!(&u * 3 <= v);
    let u2 = &u * &u;
    let v2 = &v * &v;
    let scaled = &u << prec as usize;
    let mut pow_lo = floor_div(&scaled, &v);
    let mut pow_hi = ceil_div(&scaled, &v);
    let mut sum_lo = BigInt::zero();
    let mut sum_hi = BigInt::zero();
    let mut j: u64 = 0;
    loop {
        let d = BigInt::from(2 * j + 1);
        sum_lo += floor_div(&pow_lo, &d);
        sum_hi += ceil_div(&pow_hi, &d);
        pow_lo = floor_div(&(&pow_lo * &u2), &v2);
        pow_hi = ceil_div(&(&pow_hi * &u2), &v2);
        j += 1;
        if pow_hi <= BigInt::one() {
            // remaining terms are bounded by pow / (1 - y^2)
            sum_hi += ceil_div(&(&pow_hi * &v2), &(&v2 - &u2));
            break;
        }
    }
    Fixed {
        lo: sum_lo,
        hi: sum_hi,
        prec,
    }
}

pub(crate) fn ln2(prec: u32) -> Fixed {
    let a = atanh_small(&BigUint::one(), &BigUint::from(3u32), prec);
    a.scale(2)
}

/// Natural logarithm of the positive rational `a/b`.
pub(crate) fn ln_ratio(a: &BigUint, b: &BigUint, prec: u32) -> Fixed {
    assert!(
        !a.is_zero() && !b.is_zero(),
        "logarithm of a non-positive value"
    );
    if a == b {
        return Fixed::zero(prec);
    }
    let mut e = a.bits() as i64 - b.bits() as i64;
    let (mut num, den) = if e >= 0 {
        (a.clone(), b << e as usize)
    } else {
        (a << (-e) as usize, b.clone())
    };
    if num < den {
        num <<= 1;
        e -= 1;
    }
    debug_assert!(num >= den && num < (&den << 1));
    // ln(num/den) = 2 atanh((num - den) / (num + den)), argument in [0, 1/3)
    let t = atanh_small(&(&num - &den), &(&num + &den), prec).scale(2);
    if e == 0 {
        t
    } else {
        ln2(prec).scale(e).add(&t)
    }
}

pub(crate) fn ln_rational(q: &BigRational, prec: u32) -> Fixed {
    assert!(q.is_positive(), "logarithm of a non-positive value");
    let a = q.numer().magnitude();
    let b = q.denom().magnitude();
    ln_ratio(a, b, prec)
}

pub(crate) fn ln_u64(v: u64, prec: u32) -> Fixed {
    ln_ratio(&BigUint::from(v), &BigUint::one(), prec)
}

/// One-sided bound on `exp(t * 2^-prec)`.
fn exp_bound(t: &BigInt, prec: u32, round_up: bool) -> BigRational {
    let l2 = ln2(prec);
    let mut k = floor_div(t, &l2.hi);
    let reduced = |k: &BigInt| -> (BigInt, BigInt) {
        if k.is_negative() {
            (t - k * &l2.lo, t - k * &l2.hi)
        } else {
            (t - k * &l2.hi, t - k * &l2.lo)
        }
    };
    let (mut f_lo, mut f_hi) = reduced(&k);
    while f_lo.is_negative() {
        k -= 1;
        (f_lo, f_hi) = reduced(&k);
    }
    let f = if round_up { f_hi } else { f_lo };
    let unit = pow2(prec);
    let mut term = unit.clone();
    let mut sum = term.clone();
    let mut j: u64 = 1;
    loop {
        let den = &unit * j;
        term = if round_up {
            ceil_div(&(&term * &f), &den)
        } else {
            floor_div(&(&term * &f), &den)
        };
        sum += &term;
        if round_up {
            // ratio f/(j+1) <= 1/2 bounds the tail by the last term
            if term <= BigInt::one() && &den + &unit >= &f * 2 {
                sum += &term + 1;
                break;
            }
        } else if term.is_zero() {
            break;
        }
        j += 1;
    }
    let k: i64 = k.try_into().expect("exponent out of range");
    if k >= 0 {
        BigRational::new(sum << k as usize, unit)
    } else {
        BigRational::new(sum, unit << (-k) as usize)
    }
}

/// Rational enclosure of `exp(x)` for every `x` in the interval.
pub(crate) fn exp_interval(x: &Fixed) -> (BigRational, BigRational) {
    (
        exp_bound(&x.lo, x.prec, false),
        exp_bound(&x.hi, x.prec, true),
    )
}

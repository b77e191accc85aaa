//! Minimal centred density: intervals `[c - rho, c + rho]` with `c` in
//! `C(n, l)`, and the one-sided boundary densities `d([0, y])`,
//! `d([x, r])`.
//!
//! The scan compares every interval's density against `2^-s`, i.e. its
//! measure `m` against `rho^s`. All endpoints live on one lattice
//! `Z / D`, so a table of CDF brackets indexed by lattice point and a
//! table of upper bounds for `beta^s` certify most intervals with machine
//! integers. Anything those bounds cannot separate is re-checked with a
//! per-radius bracket and finally with exact rationals.

use std::cmp::Ordering;
use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{
    compare_log_form, density_compare, pow_s_bracket, ComparisonOutcome, Density, PrecisionPolicy,
};
use crate::ifs::{scaled_lefts, Params};
use crate::measure::cdf;
use crate::scalar::ratio;

/// Compares `mu(U) / |U|^s` with a target density, exactly when the pair
/// `(mu, |U|)` lives on a common level and by log brackets otherwise.
pub fn compare_with_density(
    params: &Params,
    measure: &BigRational,
    length: &BigRational,
    target: &Density,
    policy: PrecisionPolicy,
) -> Result<ComparisonOutcome> {
    if measure.is_zero() {
        return Ok(ComparisonOutcome {
            ordering: Ordering::Less,
            precision_bits_used: 0,
            certified: true,
        });
    }
    if let Some(d) = Density::from_measure_length(*params, measure, length) {
        return density_compare(&d, target, policy);
    }
    // m / len^s vs p / L^s  <=>  m / p vs (len / L)^s
    let p = BigRational::from_integer(BigInt::from(target.p().clone()));
    let len = BigRational::from_integer(BigInt::from(target.len().clone()));
    compare_log_form(&(measure / p), &(length / len), *params, policy)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CenteredInterval {
    #[serde(with = "crate::scalar::rational_str")]
    pub center: BigRational,
    #[serde(with = "crate::scalar::rational_str")]
    pub radius: BigRational,
}

impl CenteredInterval {
    pub fn left(&self) -> BigRational {
        &self.center - &self.radius
    }

    pub fn right(&self) -> BigRational {
        &self.center + &self.radius
    }

    /// Maps the interval through `phi_i^-1` while it fits inside a single
    /// level-one basic interval `[i/l, (i+1)/l]`. Density is unchanged.
    pub fn normalized(&self, params: &Params) -> CenteredInterval {
        let l = BigRational::from_integer(BigInt::from(params.l()));
        let mut cur = self.clone();
        loop {
            let i = (cur.left() * &l).floor();
            let fits = i.to_integer() < BigInt::from(params.n())
                && cur.left() >= &i / &l
                && cur.right() <= (&i + BigRational::one()) / &l;
            if !fits {
                return cur;
            }
            cur = CenteredInterval {
                center: &cur.center * &l - &i,
                radius: &cur.radius * &l,
            };
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackingScanResult {
    pub center_level: u32,
    pub radius_grid: u32,
    /// Certified bracket of the smallest density found.
    #[serde(with = "crate::scalar::rational_pair")]
    pub min_density_bracket: (BigRational, BigRational),
    /// First minimizer in leftmost-then-shortest order, blown down.
    pub argmin: CenteredInterval,
    /// The same interval as scanned.
    pub argmin_scanned: CenteredInterval,
    /// Bracket of `2^-s`.
    #[serde(with = "crate::scalar::rational_pair")]
    pub target: (BigRational, BigRational),
    pub argmin_equals_target: bool,
    /// `[r - 1/l, r + 1/l]` has density exactly `2^-s`.
    pub candidate_attains_target: bool,
    /// The candidate was scanned and found among the minimizers.
    pub candidate_among_minimizers: bool,
    /// Distinct scanned intervals whose density equals the minimum.
    pub minimizer_count: u64,
    pub centers: u64,
    pub intervals: u64,
    /// Intervals leaving `[0, 1]`, excluded from the statistic.
    pub flagged_outside: u64,
    pub certified_fast: u64,
    pub certified_per_radius: u64,
    pub checked_exactly: u64,
    /// Intervals certifiably below `2^-s`.
    pub violations: u64,
}

const FIX: u32 = 40;
const BETA_STEPS: u64 = 2048;

struct Lattice {
    params: Params,
    /// All endpoints are multiples of `1 / d`.
    d: u64,
    /// `d / l^depth`.
    tail_den: u64,
    n_depth: u128,
    /// `F` on the first `depth` digits, over `n^depth`, and whether the
    /// walk continues into the tail.
    prefix: Vec<(u64, bool)>,
    /// Bracket of `F(rem / tail_den)` scaled by `2^FIX`.
    tail: Vec<(u64, u64)>,
    /// Upper bounds of `(1 + j (l - 1) / BETA_STEPS)^s`, scaled by `2^FIX`.
    beta_pow: Vec<u64>,
    l_pows: Vec<u128>,
    n_pows: Vec<u128>,
}

fn ceil_scaled(q: &BigRational, bits: u32) -> u64 {
    let v = q * BigRational::from_integer(BigInt::one() << bits as usize);
    v.ceil().to_integer().to_u64().expect("fits")
}

fn floor_scaled(q: &BigRational, bits: u32) -> u64 {
    let v = q * BigRational::from_integer(BigInt::one() << bits as usize);
    v.floor().to_integer().to_u64().expect("fits")
}

impl Lattice {
    fn new(params: &Params, center_level: u32, radius_grid: u32) -> Result<Self> {
        let (n, l) = (params.n() as u64, params.l() as u64);
        let depth = center_level.max(2);
        let too_large = || {
            Error::TooLarge(format!(
                "center level {center_level} with radius grid {radius_grid}"
            ))
        };
        let l_depth = l.checked_pow(depth).ok_or_else(too_large)?;
        if l_depth > params.max_basic_intervals() {
            return Err(too_large());
        }
        let tail_den = (radius_grid as u64)
            .checked_mul(l - 1)
            .ok_or_else(too_large)?;
        let d = l_depth
            .checked_mul(tail_den)
            .filter(|d| *d < 1 << 62)
            .ok_or_else(too_large)?;

        let mut prefix = Vec::with_capacity(l_depth as usize + 1);
        for q in 0..l_depth {
            let mut digits = vec![0u64; depth as usize];
            let mut rest = q;
            for slot in digits.iter_mut().rev() {
                *slot = rest % l;
                rest /= l;
            }
            // acc over n^j after j digits
            let mut acc = 0u64;
            let mut entry = None;
            for (j, &dig) in digits.iter().enumerate() {
                if dig >= n {
                    // F = acc_j + n^-j
                    let scaled = (acc + 1) * n.pow(depth - j as u32);
                    entry = Some((scaled, false));
                    break;
                }
                acc = acc * n + dig;
            }
            prefix.push(entry.unwrap_or((acc, true)));
        }
        prefix.push((n.pow(depth), false));

        let mut tail = Vec::with_capacity(tail_den as usize);
        for rem in 0..tail_den {
            let f = cdf(params, &ratio(rem, tail_den))?;
            tail.push((floor_scaled(&f, FIX), ceil_scaled(&f, FIX)));
        }

        let mut beta_pow = Vec::with_capacity(BETA_STEPS as usize + 1);
        for j in 0..=BETA_STEPS {
            let beta = ratio(BETA_STEPS + j * (l - 1), BETA_STEPS);
            let (_, hi) = pow_s_bracket(&beta, *params, 48);
            beta_pow.push(ceil_scaled(&hi, FIX));
        }
        let l_pows = (0..64).map(|e| (l as u128).saturating_pow(e)).collect();
        let n_pows = (0..64).map(|e| (n as u128).saturating_pow(e)).collect();
        Ok(Lattice {
            params: *params,
            d,
            tail_den,
            n_depth: (n as u128).pow(depth),
            prefix,
            tail,
            beta_pow,
            l_pows,
            n_pows,
        })
    }

    /// Bracket of `F(m / d)` scaled by `n^depth 2^FIX`.
    #[inline]
    fn cdf_bracket(&self, m: u64) -> (u128, u128) {
        let q = (m / self.tail_den) as usize;
        let rem = (m % self.tail_den) as usize;
        let (acc, cont) = self.prefix[q];
        let base = (acc as u128) << FIX;
        if cont {
            let (lo, hi) = self.tail[rem];
            (base + lo as u128, base + hi as u128)
        } else {
            (base, base)
        }
    }

    /// Upper bound `u / 2^FIX / n^t` of `(w / d)^s`, as `(u, t)`.
    #[inline]
    fn pow_s_upper(&self, w: u64) -> (u128, u32) {
        let d = self.d as u128;
        let mut t = 0u32;
        while (w as u128) * self.l_pows[t as usize] < d {
            t += 1;
        }
        let excess = (w as u128) * self.l_pows[t as usize] - d;
        let den = (self.params.l() as u128 - 1) * d;
        let idx = (excess * BETA_STEPS as u128).div_ceil(den);
        (self.beta_pow[idx as usize] as u128, t)
    }

    fn to_rational(&self, m: u64) -> BigRational {
        ratio(m, self.d)
    }
}

enum Verdict {
    Above,
    Equal,
    Below,
}

/// Scans centred intervals for a density below `2^-s`.
///
/// Centres are the left endpoints of the level-`center_level` basic
/// intervals and the point `r`. Radii are `j / radius_grid` for
/// `j = 1..=radius_grid`, `1 / l`, and every distance from the centre to
/// an endpoint of a level-1 or level-2 basic interval, to `0`, `r` or to
/// some `phi_i(r)`.
pub fn packing_scan(
    params: &Params,
    center_level: u32,
    radius_grid: u32,
    policy: PrecisionPolicy,
) -> Result<PackingScanResult> {
    if radius_grid == 0 {
        return Err(Error::TooLarge("radius grid must be positive".into()));
    }
    let lat = Lattice::new(params, center_level, radius_grid)?;
    let (n, l) = (params.n() as u64, params.l() as u64);
    let d = lat.d;
    let r_num = (n - 1) * (d / (l - 1));

    let mut centers: Vec<u64> = scaled_lefts::<u64>(params, center_level)?
        .into_iter()
        .map(|s| s * (d / l.pow(center_level)))
        .collect();
    centers.push(r_num);

    let mut structural: Vec<u64> = vec![0, r_num];
    for j in 1..=2u32 {
        let unit = d / l.pow(j);
        for s in scaled_lefts::<u64>(params, j)? {
            structural.push(s * unit);
            structural.push((s + 1) * unit);
        }
    }
    let phi_unit = d / ((l - 1) * l);
    for i in 0..n {
        structural.push(((n - 1) + i * (l - 1)) * phi_unit);
    }
    structural.sort_unstable();
    structural.dedup();
    let grid: Vec<u64> = (1..=radius_grid as u64)
        .map(|j| j * (d / radius_grid as u64))
        .collect();

    let target = Density::new(*params, 1u32, 2u32);
    let mut per_radius: HashMap<u64, u128> = HashMap::new();
    let mut cdf_cache: HashMap<u64, BigRational> = HashMap::new();
    let mut stats = (0u64, 0u64, 0u64, 0u64, 0u64, 0u64); // intervals, outside, fast, radius, exact, below
    let mut minimizers: Vec<(u64, u64)> = Vec::new();
    let mut below: Option<(u64, u64)> = None;

    let mut radii: Vec<u64> = Vec::with_capacity(grid.len() + structural.len() + 1);
    for &c in &centers {
        radii.clear();
        radii.extend_from_slice(&grid);
        radii.extend(
            structural
                .iter()
                .filter(|&&g| g != c)
                .map(|&g| g.abs_diff(c)),
        );
        radii.push(d / l);
        for &w in &radii {
            if w > c || c + w > d {
                stats.1 += 1;
                continue;
            }
            stats.0 += 1;
            let (a, b) = (c - w, c + w);
            let (_, a_hi) = lat.cdf_bracket(a);
            let (b_lo, _) = lat.cdf_bracket(b);
            let m_lo = b_lo.saturating_sub(a_hi);
            let (u, t) = lat.pow_s_upper(w);
            if m_lo * lat.n_pows[t as usize] > u * lat.n_depth {
                stats.2 += 1;
                continue;
            }
            let v = *per_radius.entry(w).or_insert_with(|| {
                let (_, hi) = pow_s_bracket(&lat.to_rational(w), *params, 50);
                let scaled = hi * BigRational::from_integer(BigInt::one() << 64usize);
                scaled.ceil().to_integer().to_u128().expect("rho <= 1")
            });
            if (m_lo << 24) > v * lat.n_depth {
                stats.3 += 1;
                continue;
            }
            stats.4 += 1;
            let mut exact_cdf = |m: u64| -> Result<BigRational> {
                if let Some(v) = cdf_cache.get(&m) {
                    return Ok(v.clone());
                }
                let v = cdf(params, &lat.to_rational(m))?;
                cdf_cache.insert(m, v.clone());
                Ok(v)
            };
            let measure = exact_cdf(b)? - exact_cdf(a)?;
            let length = lat.to_rational(b - a);
            let verdict =
                match compare_with_density(params, &measure, &length, &target, policy)?.ordering {
                    Ordering::Greater => Verdict::Above,
                    Ordering::Equal => Verdict::Equal,
                    Ordering::Less => Verdict::Below,
                };
            match verdict {
                Verdict::Above => {}
                Verdict::Equal => minimizers.push((a, b - a)),
                Verdict::Below => {
                    stats.5 += 1;
                    if below.is_none_or(|x| (a, b - a) < x) {
                        below = Some((a, b - a));
                    }
                }
            }
        }
    }

    minimizers.sort_unstable();
    minimizers.dedup();
    let target_bracket = target.bracket(64);
    let candidate = CenteredInterval {
        center: params.r(),
        radius: ratio(1, l),
    };
    let cand_measure =
        crate::measure::measure_interval(params, &candidate.left(), &candidate.right())?;
    let candidate_attains_target =
        Density::from_measure_length(*params, &cand_measure, &(&candidate.radius * ratio(2, 1)))
            .is_some_and(|dd| dd.canonicalize() == target);

    let to_interval = |a: u64, len: u64| CenteredInterval {
        center: lat.to_rational(a) + lat.to_rational(len) / ratio(2, 1),
        radius: lat.to_rational(len) / ratio(2, 1),
    };
    let (scanned, bracket, equals) = if let Some(&(a, len)) = below.as_ref().or(minimizers.first())
    {
        let iv = to_interval(a, len);
        let q = crate::measure::density_of(
            params,
            crate::measure::DensitySet::Interval(iv.left(), iv.right()),
        )?;
        let bracket = match q.density {
            crate::measure::DensityValue::Exact(dd) => dd.bracket(64),
            crate::measure::DensityValue::Bracket { lo, hi, .. } => (lo, hi),
        };
        (iv, bracket, below.is_none())
    } else {
        // the candidate is always scanned, so this means a broken lattice
        return Err(Error::TooLarge(
            "no interval attained or undercut 2^-s".into(),
        ));
    };
    let candidate_among_minimizers = minimizers
        .binary_search(&(r_num - d / l, 2 * (d / l)))
        .is_ok();
    Ok(PackingScanResult {
        center_level,
        candidate_among_minimizers,
        radius_grid,
        min_density_bracket: bracket,
        argmin: scanned.normalized(params),
        argmin_scanned: scanned,
        target: target_bracket,
        argmin_equals_target: equals,
        candidate_attains_target,
        minimizer_count: minimizers.len() as u64,
        centers: centers.len() as u64,
        intervals: stats.0,
        flagged_outside: stats.1,
        certified_fast: stats.2,
        certified_per_radius: stats.3,
        checked_exactly: stats.4,
        violations: stats.5,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// `d([0, y])`.
    FromZero,
    /// `d([x, r])`.
    ToSup,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub branch: Branch,
    #[serde(with = "crate::scalar::rational_str")]
    pub point: BigRational,
    #[serde(with = "crate::scalar::rational_str")]
    pub measure: BigRational,
    #[serde(with = "crate::scalar::rational_str")]
    pub length: BigRational,
    pub comparison: ComparisonOutcome,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryScanReport {
    /// `y = i/l` and `x = phi_i(r)`, compared exactly against 1.
    pub critical: Vec<BoundaryPoint>,
    pub random_checked: u64,
    pub random_equalities: u64,
    pub violations: Vec<BoundaryPoint>,
    /// `d([0, 1/l]) = 1` and `d([phi_(n-2)(r), r]) = 1` exactly.
    pub equality_at_extremes: bool,
}

impl BoundaryScanReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.equality_at_extremes
    }
}

fn boundary_point(
    params: &Params,
    branch: Branch,
    point: BigRational,
    policy: PrecisionPolicy,
) -> Result<BoundaryPoint> {
    let r: BigRational = params.r();
    let (measure, length) = match branch {
        Branch::FromZero => (cdf(params, &point)?, point.clone()),
        Branch::ToSup => (BigRational::one() - cdf(params, &point)?, &r - &point),
    };
    let unit = Density::new(*params, 1u32, 1u32);
    let comparison = compare_with_density(params, &measure, &length, &unit, policy)?;
    Ok(BoundaryPoint {
        branch,
        point,
        measure,
        length,
        comparison,
    })
}

/// `d([0, y]) >= 1` for `0 < y <= r` and `d([x, r]) >= 1` for
/// `0 <= x < r`, at the critical points and at seeded random rationals.
pub fn boundary_density_scan(
    params: &Params,
    samples_per_branch: u64,
    seed: u64,
    policy: PrecisionPolicy,
) -> Result<BoundaryScanReport> {
    let (n, l) = (params.n() as u64, params.l() as u64);
    let r: BigRational = params.r();
    let mut critical = Vec::new();
    for i in 1..n {
        critical.push(boundary_point(
            params,
            Branch::FromZero,
            ratio(i, l),
            policy,
        )?);
    }
    critical.push(boundary_point(params, Branch::FromZero, r.clone(), policy)?);
    for i in 0..n - 1 {
        let x = (&r + ratio(i, 1)) / ratio(l, 1);
        critical.push(boundary_point(params, Branch::ToSup, x, policy)?);
    }
    critical.push(boundary_point(params, Branch::ToSup, ratio(0, 1), policy)?);
    let equality_at_extremes = critical[0].comparison.ordering == Ordering::Equal
        && critical[2 * n as usize - 2].comparison.ordering == Ordering::Equal;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations: Vec<BoundaryPoint> = critical
        .iter()
        .filter(|p| p.comparison.ordering == Ordering::Less)
        .cloned()
        .collect();
    let mut random_checked = 0;
    let mut random_equalities = 0;
    for branch in [Branch::FromZero, Branch::ToSup] {
        for _ in 0..samples_per_branch {
            let den: u64 = rng.gen_range(2..=1_000_000);
            // numerators with num/den in (0, r] or [0, r)
            let top = (n - 1) * den / (l - 1);
            let num = match branch {
                Branch::FromZero => rng.gen_range(1..=top.max(1)),
                Branch::ToSup => rng.gen_range(0..top.max(1)),
            };
            let mut point = ratio(num, den);
            if point > r || (branch == Branch::ToSup && point == r) {
                point = &r / ratio(2, 1);
            }
            let p = boundary_point(params, branch, point, policy)?;
            random_checked += 1;
            match p.comparison.ordering {
                Ordering::Less => violations.push(p),
                Ordering::Equal => random_equalities += 1,
                Ordering::Greater => {}
            }
        }
    }
    Ok(BoundaryScanReport {
        critical,
        random_checked,
        random_equalities,
        violations,
        equality_at_extremes,
    })
}

/// Whether `[r - 1/l, r + 1/l]` has canonical density pair `(1, 2)`.
pub fn candidate_density(params: &Params) -> Result<Option<Density>> {
    let r: BigRational = params.r();
    let h = ratio(1, params.l() as u64);
    let m = crate::measure::measure_interval(params, &(&r - &h), &(&r + &h))?;
    Ok(Density::from_measure_length(*params, &m, &(h * ratio(2, 1))).map(|d| d.canonicalize()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: u32, l: u32) -> Params {
        Params::new(n, l).unwrap()
    }

    #[test]
    fn candidate_is_exactly_two_to_minus_s() {
        for (n, l) in [(2, 3), (2, 4), (3, 5), (9, 10)] {
            let pr = p(n, l);
            assert_eq!(
                candidate_density(&pr).unwrap(),
                Some(Density::new(pr, 1u32, 2u32))
            );
        }
    }

    #[test]
    fn boundary_examples() {
        let pr = p(2, 3);
        let rep = boundary_density_scan(&pr, 50, 7, PrecisionPolicy::default()).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert_eq!(rep.critical[0].measure, ratio(1, 2));
        assert_eq!(rep.critical[0].comparison.ordering, Ordering::Equal);
        // d([0, r]) = (1/2)^-s > 1
        assert_eq!(rep.critical[1].comparison.ordering, Ordering::Greater);
        for (n, l) in [(3, 5), (4, 5), (2, 4)] {
            let rep = boundary_density_scan(&p(n, l), 30, 1, PrecisionPolicy::default()).unwrap();
            assert!(rep.passed(), "({n},{l})");
        }
    }

    #[test]
    fn normalization_blows_down() {
        let pr = p(2, 3);
        // [1/9, 2/9] -> [1/3, 2/3] -> [0, 1]
        let iv = CenteredInterval {
            center: ratio(1, 6),
            radius: ratio(1, 18),
        };
        let norm = iv.normalized(&pr);
        assert_eq!(
            norm,
            CenteredInterval {
                center: ratio(1, 2),
                radius: ratio(1, 2)
            }
        );
        let iv = CenteredInterval {
            center: ratio(1, 9),
            radius: ratio(1, 9),
        };
        assert_eq!(
            iv.normalized(&pr),
            CenteredInterval {
                center: ratio(1, 3),
                radius: ratio(1, 3)
            }
        );
    }

    #[test]
    fn small_scan_finds_the_candidate_value() {
        let pr = p(2, 3);
        let res = packing_scan(&pr, 4, 64, PrecisionPolicy::default()).unwrap();
        assert_eq!(res.violations, 0);
        assert!(res.argmin_equals_target && res.candidate_attains_target);
        assert!(
            res.min_density_bracket.0 <= res.target.1 && res.target.0 <= res.min_density_bracket.1
        );
    }
}

//! Run configuration and machine-readable verification reports.
//!
//! Every number in a report is an exact rational (`"p/q"`), an exact
//! density pair, or a decimal bracket rounded outward from a certified
//! rational bracket, tagged with the precision that produced it.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cluster_gap::{audit_level, enumerate_gaps, GapAudit};
use crate::error::{Error, Result};
use crate::exact::{density_compare, dimension_bracket, pow_s_bracket, Density, PrecisionPolicy};
use crate::extremal::{
    absorb_clusters, boundary_density_scan, candidate_density, exhaustive_union_oracle,
    hausdorff_report, max_density_consecutive, packing_scan, BoundaryScanReport, ChainStep,
    PackingScanResult, EXHAUSTIVE_LIMIT,
};
use crate::ifs::{apply_map, ConsecutiveUnion, Params};
use crate::measure::cdf;
use crate::scalar::{format_rational, ratio, to_decimal};

pub const SCHEMA: &str = "fracmeas.verification.v1";

pub const DEFAULT_MAX_LEVEL: u32 = 8;
pub const DEFAULT_CENTER_LEVEL: u32 = 6;
pub const DEFAULT_RADIUS_GRID: u32 = 512;
pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_DIGITS: usize = 60;

/// Largest level set searched or audited.
pub const SEARCH_BOUND: u64 = 4096;
pub const GAP_AUDIT_MAX_LEVEL: u32 = 8;
pub const CHAIN_SAMPLES: u64 = 200;
pub const CHAIN_MAX_LEVEL: u32 = 6;
pub const CDF_SAMPLES: u64 = 1000;
pub const BOUNDARY_SAMPLES_PER_BRANCH: u64 = 250;
/// Bits behind every decimal bracket in a verification report.
pub const REPORT_BITS: u32 = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "text" => Ok(OutputFormat::Text),
            _ => Err(Error::Parse(format!("unknown output format {s:?}"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
            OutputFormat::Text => "text",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: u32,
    pub l: u32,
    pub max_level: u32,
    pub precision_cap_bits: u32,
    pub center_level: u32,
    pub radius_grid: u32,
    pub output_format: OutputFormat,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(n: u32, l: u32) -> Self {
        RunConfig {
            n,
            l,
            max_level: DEFAULT_MAX_LEVEL,
            precision_cap_bits: PrecisionPolicy::DEFAULT_CAP,
            center_level: DEFAULT_CENTER_LEVEL,
            radius_grid: DEFAULT_RADIUS_GRID,
            output_format: OutputFormat::Text,
            seed: DEFAULT_SEED,
        }
    }

    pub fn params(&self) -> Result<Params> {
        Params::new(self.n, self.l)
    }

    pub fn policy(&self) -> PrecisionPolicy {
        PrecisionPolicy::with_cap(self.precision_cap_bits)
    }

    pub fn validate(&self) -> Result<Params> {
        let params = self.params()?;
        if self.max_level == 0 {
            return Err(Error::Parse("max_level must be at least 1".into()));
        }
        if self.radius_grid == 0 {
            return Err(Error::Parse("radius_grid must be at least 1".into()));
        }
        Ok(params)
    }
}

fn digits_for_bits(bits: u32) -> usize {
    (bits as usize * 3) / 10
}

fn bits_for_digits(digits: usize) -> u32 {
    (digits as u32 * 10).div_ceil(3) + 16
}

/// A certified bracket rendered as outward-rounded decimals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bracket {
    pub decimal_bracket: [String; 2],
    pub bits: u32,
}

impl Bracket {
    pub fn new(lo: &BigRational, hi: &BigRational, bits: u32) -> Self {
        Bracket::with_digits(lo, hi, bits, digits_for_bits(bits))
    }

    pub fn with_digits(lo: &BigRational, hi: &BigRational, bits: u32, digits: usize) -> Self {
        Bracket {
            decimal_bracket: [to_decimal(lo, digits, false), to_decimal(hi, digits, true)],
            bits,
        }
    }
}

/// A density as its canonical exact pair plus a decimal bracket.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityRecord {
    #[serde(with = "crate::scalar::biguint_str")]
    pub p: BigUint,
    #[serde(rename = "L", with = "crate::scalar::biguint_str")]
    pub len: BigUint,
    pub decimal_bracket: [String; 2],
    pub bits: u32,
}

impl DensityRecord {
    pub fn new(d: &Density, bits: u32) -> Self {
        let c = d.canonicalize();
        let (lo, hi) = c.bracket(bits);
        let b = Bracket::new(&lo, &hi, bits);
        DensityRecord {
            p: c.p().clone(),
            len: c.len().clone(),
            decimal_bracket: b.decimal_bracket,
            bits,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimsReport {
    pub n: u32,
    pub l: u32,
    /// `ln n / ln l`.
    pub s: Bracket,
    #[serde(with = "crate::scalar::rational_str")]
    pub r: BigRational,
    /// `r^s`.
    pub hausdorff_measure: Bracket,
    /// `2^s`.
    pub packing_measure: Bracket,
}

/// `s`, `r`, `r^s` and `2^s`, with brackets good to `digits` decimals.
pub fn dims(params: &Params, digits: usize) -> DimsReport {
    let bits = bits_for_digits(digits);
    let (s_lo, s_hi) = dimension_bracket(*params, bits);
    let r: BigRational = params.r();
    let (h_lo, h_hi) = pow_s_bracket(&r, *params, bits);
    let (p_lo, p_hi) = pow_s_bracket(&ratio(2, 1), *params, bits);
    DimsReport {
        n: params.n(),
        l: params.l(),
        s: Bracket::with_digits(&s_lo, &s_hi, bits, digits),
        r,
        hausdorff_measure: Bracket::with_digits(&h_lo, &h_hi, bits, digits),
        packing_measure: Bracket::with_digits(&p_lo, &p_hi, bits, digits),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HausdorffTableRow {
    pub k: u32,
    /// `|O_k|`.
    #[serde(with = "crate::scalar::rational_str")]
    pub diameter: BigRational,
    pub density: DensityRecord,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HausdorffTable {
    pub rows: Vec<HausdorffTableRow>,
    /// `r^-s`, the limit of `d(O_k)`.
    pub limit: Bracket,
    /// `r^s`.
    pub measure: Bracket,
    pub strictly_increasing: bool,
    pub bounded_by_limit: bool,
}

/// `d(O_k)` for `k = 1..=k_max` against its limit.
pub fn hausdorff_table(
    params: &Params,
    k_max: u32,
    bits: u32,
    policy: PrecisionPolicy,
) -> Result<HausdorffTable> {
    let rep = hausdorff_report(params, k_max, bits, policy)?;
    let rows = rep
        .rows
        .iter()
        .map(|row| HausdorffTableRow {
            k: row.k,
            diameter: row.diameter.clone(),
            density: DensityRecord::new(&row.density(*params), bits),
        })
        .collect();
    Ok(HausdorffTable {
        rows,
        limit: Bracket::new(&rep.limit.0, &rep.limit.1, bits),
        measure: Bracket::new(&rep.measure.0, &rep.measure.1, bits),
        strictly_increasing: rep.strictly_increasing,
        bounded_by_limit: rep.bounded_by_limit,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchLevel {
    pub k: u32,
    pub max_density: DensityRecord,
    pub argmax: Vec<ConsecutiveUnion>,
    pub equals_ok: bool,
    pub numeric_comparisons: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExhaustiveLevel {
    pub k: u32,
    pub subsets_checked: u64,
    pub max_density: DensityRecord,
    pub argmax_count: u64,
    /// The maximum equals `d(O_k)`.
    pub equals_ok: bool,
    /// The maximum equals the consecutive-search maximum.
    pub matches_consecutive: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbsorptionSummary {
    pub samples: u64,
    pub max_level: u32,
    pub absorption_steps: u64,
    pub blow_up_steps: u64,
    pub longest_chain: u64,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureSummary {
    pub self_similarity_samples: u64,
    pub self_similarity_failures: Vec<String>,
    pub plateau_levels: Vec<u32>,
    pub gaps_checked: u64,
    pub plateau_failures: Vec<String>,
    /// `F(r)`.
    pub cdf_at_sup: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: String,
    pub config: RunConfig,
    pub targets: DimsReport,
    pub hausdorff_table: HausdorffTable,
    pub hausdorff_search: Vec<SearchLevel>,
    pub exhaustive: Vec<ExhaustiveLevel>,
    pub gap_audit: Vec<GapAudit>,
    pub absorption: AbsorptionSummary,
    pub measure: MeasureSummary,
    pub boundary: Option<BoundaryScanReport>,
    pub candidate: Option<DensityRecord>,
    pub packing: Option<PackingScanResult>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl VerificationReport {
    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Precision exhaustion aborts the run; any other error fails one check.
fn guard<T>(r: Result<T>) -> Result<std::result::Result<T, String>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e @ Error::UndecidedAtMaxPrecision(_)) => Err(e),
        Err(e) => Ok(Err(e.to_string())),
    }
}

const MAX_LISTED_FAILURES: usize = 10;

fn note(list: &mut Vec<String>, msg: String) {
    if list.len() < MAX_LISTED_FAILURES {
        list.push(msg);
    }
}

fn sub_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn random_rational(rng: &mut ChaCha8Rng) -> BigRational {
    let den: u64 = rng.gen_range(1..=1_000_000);
    let num: u64 = rng.gen_range(0..=den);
    ratio(num, den)
}

fn levels_within(params: &Params, max_level: u32, bound: u64) -> u32 {
    max_level.min(params.max_level_within(bound))
}

struct Checks(Vec<Check>);

impl Checks {
    fn push(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.0.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }
}

/// Runs every verification check for `config`.
///
/// Returns `Err` only for invalid configurations and for comparisons
/// left undecided at the precision cap; failing checks are recorded in
/// the report.
pub fn run_verification(config: &RunConfig) -> Result<VerificationReport> {
    let params = config.validate()?;
    let policy = config.policy();
    let bits = REPORT_BITS;
    let mut checks = Checks(Vec::new());
    let targets = dims(&params, DEFAULT_DIGITS);
    let search_top = levels_within(&params, config.max_level, SEARCH_BOUND);

    let hausdorff_table = hausdorff_table(&params, config.max_level, bits, policy)?;
    checks.push(
        "hausdorff_table",
        hausdorff_table.strictly_increasing && hausdorff_table.bounded_by_limit,
        format!(
            "d(O_k) for k = 1..={} strictly increasing: {}, below r^-s: {}",
            config.max_level, hausdorff_table.strictly_increasing, hausdorff_table.bounded_by_limit
        ),
    );

    let mut hausdorff_search = Vec::new();
    let mut search_err = None;
    for k in 1..=search_top {
        match guard(max_density_consecutive(&params, k, policy))? {
            Ok(res) => hausdorff_search.push(SearchLevel {
                k,
                max_density: DensityRecord::new(&res.max_density, bits),
                argmax: res.argmax,
                equals_ok: res.equals_ok,
                numeric_comparisons: res.numeric_comparisons,
            }),
            Err(e) => {
                search_err = Some(format!("level {k}: {e}"));
                break;
            }
        }
    }
    let bad: Vec<u32> = hausdorff_search
        .iter()
        .filter(|s| !s.equals_ok)
        .map(|s| s.k)
        .collect();
    checks.push(
        "hausdorff_search",
        search_err.is_none() && bad.is_empty(),
        match &search_err {
            Some(e) => e.clone(),
            None if bad.is_empty() => {
                format!("O_k attains the maximal density for k = 1..={search_top}")
            }
            None => format!("O_k is not a maximizer at levels {bad:?}"),
        },
    );

    let mut exhaustive = Vec::new();
    let mut exhaustive_err = None;
    let exhaustive_top = levels_within(&params, config.max_level, EXHAUSTIVE_LIMIT);
    for k in 1..=exhaustive_top {
        match guard(exhaustive_union_oracle(&params, k, policy))? {
            Ok(res) => {
                let full = ConsecutiveUnion::full(&params, k)?;
                let ok = Density::new(params, full.count(), full.scaled_diameter(&params));
                let equals_ok =
                    density_compare(&res.max_density, &ok, policy)?.ordering == Ordering::Equal;
                let consecutive = max_density_consecutive(&params, k, policy)?;
                let matches_consecutive =
                    density_compare(&res.max_density, &consecutive.max_density, policy)?.ordering
                        == Ordering::Equal;
                exhaustive.push(ExhaustiveLevel {
                    k,
                    subsets_checked: res.subsets_checked,
                    max_density: DensityRecord::new(&res.max_density, bits),
                    argmax_count: res.argmax.len() as u64,
                    equals_ok,
                    matches_consecutive,
                });
            }
            Err(e) => {
                exhaustive_err = Some(format!("level {k}: {e}"));
                break;
            }
        }
    }
    let exhaustive_ok = exhaustive_err.is_none()
        && exhaustive
            .iter()
            .all(|e| e.equals_ok && e.matches_consecutive);
    checks.push(
        "exhaustive_oracle",
        exhaustive_ok,
        exhaustive_err.unwrap_or_else(|| {
            format!("all unions at levels 1..={exhaustive_top}: max = d(O_k) = consecutive max: {exhaustive_ok}")
        }),
    );

    let audit_top = levels_within(
        &params,
        config.max_level.min(GAP_AUDIT_MAX_LEVEL),
        SEARCH_BOUND,
    );
    let mut gap_audit = Vec::new();
    let mut audit_err = None;
    for k in 1..=audit_top {
        match guard(audit_level(&params, k))? {
            Ok(a) => gap_audit.push(a),
            Err(e) => {
                audit_err = Some(format!("level {k}: {e}"));
                break;
            }
        }
    }
    let bad: Vec<u32> = gap_audit
        .iter()
        .filter(|a| !a.passed())
        .map(|a| a.level)
        .collect();
    checks.push(
        "gap_audit",
        audit_err.is_none() && bad.is_empty(),
        match &audit_err {
            Some(e) => e.clone(),
            None if bad.is_empty() => {
                format!("gap and cluster formulas hold at levels 1..={audit_top}")
            }
            None => format!("audit fails at levels {bad:?}"),
        },
    );

    let absorption = absorption_sample(&params, config, policy)?;
    checks.push(
        "absorption_chains",
        absorption.failures.is_empty(),
        if absorption.failures.is_empty() {
            format!(
                "{} chains up to level {} reach O_k monotonically with lambda^-1 = p + (l-n)N",
                absorption.samples, absorption.max_level
            )
        } else {
            absorption.failures.join("; ")
        },
    );

    let measure = measure_checks(&params, config, audit_top)?;
    checks.push(
        "cdf_self_similarity",
        measure.self_similarity_failures.is_empty(),
        format!(
            "F((x+i)/l) = (i+F(x))/n at {} seeded rationals, {} failures",
            measure.self_similarity_samples,
            measure.self_similarity_failures.len()
        ),
    );
    checks.push(
        "cdf_gap_plateaus",
        measure.plateau_failures.is_empty(),
        format!(
            "F constant across {} gaps, {} failures",
            measure.gaps_checked,
            measure.plateau_failures.len()
        ),
    );
    checks.push(
        "cdf_at_sup",
        measure.cdf_at_sup == "1",
        format!("F(r) = {}", measure.cdf_at_sup),
    );

    let boundary = match guard(boundary_density_scan(
        &params,
        BOUNDARY_SAMPLES_PER_BRANCH,
        config.seed,
        policy,
    ))? {
        Ok(b) => {
            checks.push(
                "boundary_scan",
                b.passed(),
                format!(
                    "{} critical points, {} random points, {} violations, equality at both ends: {}",
                    b.critical.len(),
                    b.random_checked,
                    b.violations.len(),
                    b.equality_at_extremes
                ),
            );
            Some(b)
        }
        Err(e) => {
            checks.push("boundary_scan", false, e);
            None
        }
    };

    let candidate = match guard(candidate_density(&params))? {
        Ok(c) => {
            let unit = Density::new(params, 1u32, 2u32);
            checks.push(
                "packing_candidate",
                c.as_ref() == Some(&unit),
                format!(
                    "[r - 1/l, r + 1/l] has density pair {}",
                    c.as_ref().map_or("none".into(), |d| d.to_string())
                ),
            );
            c.map(|d| DensityRecord::new(&d, bits))
        }
        Err(e) => {
            checks.push("packing_candidate", false, e);
            None
        }
    };

    let packing = match guard(packing_scan(
        &params,
        config.center_level,
        config.radius_grid,
        policy,
    ))? {
        Ok(p) => {
            checks.push(
                "packing_scan",
                p.violations == 0 && p.argmin_equals_target,
                format!(
                    "{} intervals, {} below 2^-s, minimum equals 2^-s: {}",
                    p.intervals, p.violations, p.argmin_equals_target
                ),
            );
            Some(p)
        }
        Err(e) => {
            checks.push("packing_scan", false, e);
            None
        }
    };

    let checks = checks.0;
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerificationReport {
        schema: SCHEMA.into(),
        config: config.clone(),
        targets,
        hausdorff_table,
        hausdorff_search,
        exhaustive,
        gap_audit,
        absorption,
        measure,
        boundary,
        candidate,
        packing,
        checks,
        passed,
    })
}

fn absorption_sample(
    params: &Params,
    config: &RunConfig,
    policy: PrecisionPolicy,
) -> Result<AbsorptionSummary> {
    let top = levels_within(params, config.max_level.min(CHAIN_MAX_LEVEL), SEARCH_BOUND);
    let mut rng = sub_rng(config.seed, 1);
    let mut out = AbsorptionSummary {
        samples: CHAIN_SAMPLES,
        max_level: top,
        ..Default::default()
    };
    for _ in 0..CHAIN_SAMPLES {
        let k = rng.gen_range(1..=top);
        let count = params.count_at_level(k)?;
        let a = rng.gen_range(0..count);
        let b = rng.gen_range(a..count);
        let u = ConsecutiveUnion::new(params, k, a, b)?;
        let steps = match guard(absorb_clusters(params, &u, policy))? {
            Ok(s) => s,
            Err(e) => {
                note(&mut out.failures, format!("level {k} [{a}, {b}]: {e}"));
                continue;
            }
        };
        let full = ConsecutiveUnion::full(params, k)?;
        let linked = steps.windows(2).all(|w| w[0].after() == w[1].before());
        let ends = steps.first().map_or(u == full, |s| {
            *s.before() == u && *steps.last().unwrap().after() == full
        });
        if !linked || !ends {
            note(
                &mut out.failures,
                format!("level {k} [{a}, {b}]: chain does not run from U to O_k"),
            );
        }
        for s in &steps {
            match s {
                ChainStep::Absorb(_) => out.absorption_steps += 1,
                ChainStep::BlowUp { .. } => out.blow_up_steps += 1,
            }
        }
        out.longest_chain = out.longest_chain.max(steps.len() as u64);
    }
    Ok(out)
}

fn measure_checks(params: &Params, config: &RunConfig, plateau_top: u32) -> Result<MeasureSummary> {
    let mut out = MeasureSummary {
        self_similarity_samples: CDF_SAMPLES,
        ..Default::default()
    };
    let mut rng = sub_rng(config.seed, 2);
    let n = ratio(params.n() as u64, 1);
    for _ in 0..CDF_SAMPLES {
        let x = random_rational(&mut rng);
        let i = rng.gen_range(0..params.n());
        let lhs = cdf(params, &apply_map(params, i, &x)?)?;
        let rhs = (ratio(i as u64, 1) + cdf(params, &x)?) / &n;
        if lhs != rhs {
            note(
                &mut out.self_similarity_failures,
                format!(
                    "x = {x}, i = {i}: {} != {}",
                    format_rational(&lhs),
                    format_rational(&rhs)
                ),
            );
        }
    }
    for k in 1..=plateau_top {
        out.plateau_levels.push(k);
        for g in enumerate_gaps(params, k)? {
            out.gaps_checked += 1;
            let mid = (&g.left + &g.right) / ratio(2, 1);
            let (a, m, b) = (
                cdf(params, &g.left)?,
                cdf(params, &mid)?,
                cdf(params, &g.right)?,
            );
            if a != m || m != b {
                note(
                    &mut out.plateau_failures,
                    format!("gap ({}, {}) at level {k}", g.left, g.right),
                );
            }
        }
    }
    let at_sup = cdf(params, &params.r())?;
    out.cdf_at_sup = format_rational(&at_sup);
    debug_assert!(at_sup <= BigRational::one());
    Ok(out)
}

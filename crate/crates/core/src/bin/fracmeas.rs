use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fracmeas::cluster_gap::enumerate_gaps;
use fracmeas::measure::{cdf, density_of, DensitySet, DensityValue};
use fracmeas::report::{
    dims, hausdorff_table, run_verification, Bracket, DensityRecord, DimsReport, HausdorffTable,
    OutputFormat, RunConfig, VerificationReport, DEFAULT_CENTER_LEVEL, DEFAULT_DIGITS,
    DEFAULT_MAX_LEVEL, DEFAULT_RADIUS_GRID, DEFAULT_SEED, REPORT_BITS,
};
use fracmeas::{
    format_rational, parse_rational, ConsecutiveUnion, Error, IntervalUnion, Params,
    PrecisionPolicy,
};
use serde::Serialize;

const EXIT_FAIL: u8 = 1;
const EXIT_PRECISION: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "fracmeas",
    version,
    about = "Exact measures of digit-restricted Cantor sets C(n, l)"
)]
struct Cli {
    /// Emit JSON.
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,
    /// Emit CSV.
    #[arg(long, global = true)]
    csv: bool,
    /// Write output to FILE instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Pair {
    /// Number of allowed digits.
    #[arg(long, env = "FRACMEAS_N")]
    n: u32,
    /// Base.
    #[arg(long, env = "FRACMEAS_L")]
    l: u32,
}

impl Pair {
    fn params(self) -> Result<Params, Error> {
        Params::new(self.n, self.l)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Dimension, sup and both measures as certified brackets.
    Dims {
        #[command(flatten)]
        pair: Pair,
        /// Decimal digits per bracket endpoint.
        #[arg(long, default_value_t = DEFAULT_DIGITS)]
        digits: usize,
    },
    /// Run every check; exit 0 iff all pass.
    Verify {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, env = "FRACMEAS_MAX_LEVEL", default_value_t = DEFAULT_MAX_LEVEL)]
        max_level: u32,
        /// Largest precision in bits for numeric comparisons.
        #[arg(long, env = "FRACMEAS_PRECISION_CAP", default_value_t = PrecisionPolicy::DEFAULT_CAP)]
        precision_cap: u32,
        #[arg(long, env = "FRACMEAS_CENTER_LEVEL", default_value_t = DEFAULT_CENTER_LEVEL)]
        center_level: u32,
        #[arg(long, env = "FRACMEAS_RADIUS_GRID", default_value_t = DEFAULT_RADIUS_GRID)]
        radius_grid: u32,
        #[arg(long, env = "FRACMEAS_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Gaps of the level-k set.
    Gaps {
        #[command(flatten)]
        pair: Pair,
        #[arg(long)]
        level: u32,
    },
    /// Exact value of the distribution function F(x).
    Cdf {
        #[command(flatten)]
        pair: Pair,
        /// Rational point such as 1/3 or 0.25.
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// Density of basic intervals left..=right at a level, or of an interval [a, b].
    Density {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, requires_all = ["left", "right"], conflicts_with_all = ["a", "b"])]
        level: Option<u32>,
        #[arg(long)]
        left: Option<u64>,
        #[arg(long)]
        right: Option<u64>,
        #[arg(long, requires = "b", allow_hyphen_values = true)]
        a: Option<String>,
        #[arg(long, requires = "a", allow_hyphen_values = true)]
        b: Option<String>,
    },
    /// Table of d(O_k) against its limit, with both measures.
    Report {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, env = "FRACMEAS_MAX_LEVEL", default_value_t = DEFAULT_MAX_LEVEL)]
        max_level: u32,
        #[arg(long, env = "FRACMEAS_PRECISION_CAP", default_value_t = PrecisionPolicy::DEFAULT_CAP)]
        precision_cap: u32,
    },
}

enum Failure {
    Usage(String),
    Precision(String),
    Check(String),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::UndecidedAtMaxPrecision(_) => Failure::Precision(e.to_string()),
            Error::InvalidParams { .. }
            | Error::Parse(_)
            | Error::DigitOutOfRange { .. }
            | Error::InvalidIndexSet { .. }
            | Error::OutOfUnitInterval(_)
            | Error::ResourceBound { .. }
            | Error::TooLarge(_)
            | Error::ZeroLength => Failure::Usage(e.to_string()),
            _ => Failure::Check(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Precision(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_PRECISION)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_FAIL)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FAIL)
        }
    }
}

fn format_of(cli: &Cli) -> OutputFormat {
    if cli.json {
        OutputFormat::Json
    } else if cli.csv {
        OutputFormat::Csv
    } else {
        OutputFormat::Text
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    let format = format_of(&cli);
    let mut code = ExitCode::SUCCESS;
    let text = match cli.command {
        Command::Dims { pair, digits } => {
            let d = dims(&pair.params()?, digits);
            match format {
                OutputFormat::Json => json(&d),
                OutputFormat::Csv => dims_csv(&d),
                OutputFormat::Text => dims_text(&d),
            }
        }
        Command::Verify {
            pair,
            max_level,
            precision_cap,
            center_level,
            radius_grid,
            seed,
        } => {
            let config = RunConfig {
                n: pair.n,
                l: pair.l,
                max_level,
                precision_cap_bits: precision_cap,
                center_level,
                radius_grid,
                output_format: format,
                seed,
            };
            let rep = run_verification(&config)?;
            if !rep.passed {
                for c in rep.failed_checks() {
                    eprintln!("check failed: {}: {}", c.name, c.detail);
                }
                code = ExitCode::from(EXIT_FAIL);
            }
            match format {
                OutputFormat::Json => json(&rep),
                OutputFormat::Csv => verify_csv(&rep),
                OutputFormat::Text => verify_text(&rep),
            }
        }
        Command::Gaps { pair, level } => {
            let params = pair.params()?;
            let rows: Vec<GapRow> = enumerate_gaps(&params, level)?
                .into_iter()
                .map(|g| GapRow {
                    length: format_rational(&g.length()),
                    left: format_rational(&g.left),
                    right: format_rational(&g.right),
                    type_i: g.type_i,
                    level: g.level,
                })
                .collect();
            match format {
                OutputFormat::Json => json(&rows),
                OutputFormat::Csv => gaps_csv(&rows),
                OutputFormat::Text => gaps_text(&rows),
            }
        }
        Command::Cdf { pair, x } => {
            let params = pair.params()?;
            let x = parse_rational(&x)?;
            let f = cdf(&params, &x)?;
            let out = CdfOutput {
                n: pair.n,
                l: pair.l,
                x: format_rational(&x),
                cdf: format_rational(&f),
            };
            match format {
                OutputFormat::Json => json(&out),
                OutputFormat::Csv => format!("x,cdf\n{},{}\n", out.x, out.cdf),
                OutputFormat::Text => format!("{}\n", out.cdf),
            }
        }
        Command::Density {
            pair,
            level,
            left,
            right,
            a,
            b,
        } => {
            let params = pair.params()?;
            let set = match (level, left, right, a, b) {
                (Some(k), Some(lo), Some(hi), None, None) => {
                    let range = ConsecutiveUnion::new(&params, k, lo, hi)?;
                    DensitySet::Union(IntervalUnion::from_range(params, &range)?)
                }
                (None, None, None, Some(a), Some(b)) => {
                    DensitySet::Interval(parse_rational(&a)?, parse_rational(&b)?)
                }
                _ => {
                    return Err(Failure::Usage(
                        "density needs either --level --left --right or --a --b".into(),
                    ))
                }
            };
            let q = density_of(&params, set)?;
            let out = DensityOutput {
                n: pair.n,
                l: pair.l,
                measure: format_rational(&q.measure),
                length: format_rational(&q.length),
                density: match &q.density {
                    DensityValue::Exact(d) => {
                        DensityField::Exact(DensityRecord::new(d, REPORT_BITS))
                    }
                    DensityValue::Bracket { lo, hi, bits } => {
                        DensityField::Bracket(Bracket::new(lo, hi, *bits))
                    }
                },
            };
            match format {
                OutputFormat::Json => json(&out),
                OutputFormat::Csv => density_csv(&out),
                OutputFormat::Text => density_text(&out),
            }
        }
        Command::Report {
            pair,
            max_level,
            precision_cap,
        } => {
            let params = pair.params()?;
            if max_level == 0 {
                return Err(Failure::Usage("max-level must be at least 1".into()));
            }
            let out = ReportOutput {
                targets: dims(&params, DEFAULT_DIGITS),
                hausdorff: hausdorff_table(
                    &params,
                    max_level,
                    REPORT_BITS,
                    PrecisionPolicy::with_cap(precision_cap),
                )?,
            };
            match format {
                OutputFormat::Json => json(&out),
                OutputFormat::Csv => report_csv(&out.hausdorff),
                OutputFormat::Text => report_text(&out),
            }
        }
    };
    match &cli.out {
        Some(path) => File::create(path)?.write_all(text.as_bytes())?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(code)
}

#[derive(Serialize)]
struct GapRow {
    left: String,
    right: String,
    length: String,
    type_i: u32,
    level: u32,
}

#[derive(Serialize)]
struct CdfOutput {
    n: u32,
    l: u32,
    x: String,
    cdf: String,
}

#[derive(Serialize)]
#[serde(rename_all = "lowercase")]
enum DensityField {
    Exact(DensityRecord),
    Bracket(Bracket),
}

#[derive(Serialize)]
struct DensityOutput {
    n: u32,
    l: u32,
    measure: String,
    length: String,
    density: DensityField,
}

#[derive(Serialize)]
struct ReportOutput {
    targets: DimsReport,
    hausdorff: HausdorffTable,
}

fn bracket_text(b: &Bracket) -> String {
    format!("[{}, {}]", b.decimal_bracket[0], b.decimal_bracket[1])
}

fn dims_text(d: &DimsReport) -> String {
    format!(
        "n = {}, l = {}\ns         in {}\nr         = {}\nH = r^s   in {}\nP = 2^s   in {}\n",
        d.n,
        d.l,
        bracket_text(&d.s),
        format_rational(&d.r),
        bracket_text(&d.hausdorff_measure),
        bracket_text(&d.packing_measure),
    )
}

fn dims_csv(d: &DimsReport) -> String {
    let r = format_rational(&d.r);
    let mut out = String::from("quantity,lower,upper,bits\n");
    out += &format!(
        "s,{},{},{}\n",
        d.s.decimal_bracket[0], d.s.decimal_bracket[1], d.s.bits
    );
    out += &format!("r,{r},{r},exact\n");
    for (name, b) in [
        ("hausdorff_measure", &d.hausdorff_measure),
        ("packing_measure", &d.packing_measure),
    ] {
        out += &format!(
            "{name},{},{},{}\n",
            b.decimal_bracket[0], b.decimal_bracket[1], b.bits
        );
    }
    out
}

fn verify_text(rep: &VerificationReport) -> String {
    let c = &rep.config;
    let mut out = format!(
        "C({}, {}): max level {}, precision cap {} bits, centers at level {}, radius grid {}, seed {}\n",
        c.n, c.l, c.max_level, c.precision_cap_bits, c.center_level, c.radius_grid, c.seed
    );
    out += &format!(
        "H = r^s in {}\n",
        bracket_text(&rep.targets.hausdorff_measure)
    );
    out += &format!(
        "P = 2^s in {}\n",
        bracket_text(&rep.targets.packing_measure)
    );
    for check in &rep.checks {
        let tag = if check.passed { "PASS" } else { "FAIL" };
        out += &format!("{tag} {}: {}\n", check.name, check.detail);
    }
    out += if rep.passed {
        "all checks passed\n"
    } else {
        "some checks failed\n"
    };
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn verify_csv(rep: &VerificationReport) -> String {
    let mut out = String::from("check,passed,detail\n");
    for c in &rep.checks {
        out += &format!("{},{},{}\n", c.name, c.passed, csv_field(&c.detail));
    }
    out
}

fn gaps_csv(rows: &[GapRow]) -> String {
    let mut out = String::from("left,right,length,type_i,level\n");
    for g in rows {
        out += &format!(
            "{},{},{},{},{}\n",
            g.left, g.right, g.length, g.type_i, g.level
        );
    }
    out
}

fn gaps_text(rows: &[GapRow]) -> String {
    let mut out = format!(
        "{:>16} {:>16} {:>16} {:>6}\n",
        "left", "right", "length", "type"
    );
    for g in rows {
        out += &format!(
            "{:>16} {:>16} {:>16} {:>6}\n",
            g.left, g.right, g.length, g.type_i
        );
    }
    out
}

fn density_text(d: &DensityOutput) -> String {
    let mut out = format!("measure = {}\nlength  = {}\n", d.measure, d.length);
    match &d.density {
        DensityField::Exact(r) => {
            out += &format!(
                "density = {}/{}^s in [{}, {}]\n",
                r.p, r.len, r.decimal_bracket[0], r.decimal_bracket[1]
            );
        }
        DensityField::Bracket(b) => out += &format!("density in {}\n", bracket_text(b)),
    }
    out
}

fn density_csv(d: &DensityOutput) -> String {
    let (p, len, b, bits) = match &d.density {
        DensityField::Exact(r) => (
            r.p.to_string(),
            r.len.to_string(),
            &r.decimal_bracket,
            r.bits,
        ),
        DensityField::Bracket(b) => (String::new(), String::new(), &b.decimal_bracket, b.bits),
    };
    format!(
        "measure,length,p,L,lower,upper,bits\n{},{},{p},{len},{},{},{bits}\n",
        d.measure, d.length, b[0], b[1]
    )
}

fn report_csv(t: &HausdorffTable) -> String {
    let mut out = String::from("k,diameter,p,L,lower,upper,bits\n");
    for row in &t.rows {
        let d = &row.density;
        out += &format!(
            "{},{},{},{},{},{},{}\n",
            row.k,
            format_rational(&row.diameter),
            d.p,
            d.len,
            d.decimal_bracket[0],
            d.decimal_bracket[1],
            d.bits
        );
    }
    out
}

fn report_text(r: &ReportOutput) -> String {
    let mut out = dims_text(&r.targets);
    out += &format!(
        "\n{:>4} {:>24} {:>12} {:>14}  d(O_k)\n",
        "k", "|O_k|", "p", "L"
    );
    for row in &r.hausdorff.rows {
        let d = &row.density;
        out += &format!(
            "{:>4} {:>24} {:>12} {:>14}  {}\n",
            row.k,
            format_rational(&row.diameter),
            d.p,
            d.len,
            d.decimal_bracket[0]
        );
    }
    out += &format!("limit r^-s in {}\n", bracket_text(&r.hausdorff.limit));
    out += &format!(
        "strictly increasing: {}, below the limit: {}\n",
        r.hausdorff.strictly_increasing, r.hausdorff.bounded_by_limit
    );
    out
}

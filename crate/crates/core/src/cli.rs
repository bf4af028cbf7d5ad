//! The `cmdeg` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::bernoulli::{bernoulli, Rational};
use crate::cmdeg::{
    cm_check, conjecture_scan, degree_bracket, BracketConfig, CmCheckReport, ConjectureTable, DegreeBracket, Grid,
};
use crate::error::{Error, Result};
use crate::kernel::{
    h4_positivity_scan, h4_series_coefficient, kernel_h, laplace_reconstruct, KernelOrder, LaplaceEstimate,
    PositivityReport, QuadParams,
};
use crate::real::{DecimalValue, PrecisionPolicy, Real};
use crate::remainders::{phi_derivatives, q_value, RemainderSpec, SpecLimits};

pub const SCHEMA_VERSION: u32 = 1;
pub const PRECISION_ENV: &str = "CMDEG_DEFAULT_PREC";
pub const DEFAULT_PRECISION: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "cmdeg", version, about = "Polygamma remainders, Laplace kernels and completely monotonic degrees")]
pub struct Cli {
    /// Working precision in bits (default from CMDEG_DEFAULT_PREC, else 128)
    #[arg(long, global = true)]
    pub prec: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write output to this file instead of standard output
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
#[group(required = true, multiple = false)]
pub struct SpecArgs {
    /// Remainder indices as `n,m`
    #[arg(long)]
    pub spec: Option<String>,
    /// One of Q, PsiGap, TrigammaGap3
    #[arg(long)]
    pub special: Option<String>,
}

#[derive(Debug, Args, Clone)]
pub struct ScanArgs {
    #[arg(long, default_value_t = 12)]
    pub max_order: usize,
    /// `log:<min>:<max>:<points>`
    #[arg(long, default_value = "log:1e-3:1e4:200")]
    pub grid: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate phi and optionally its derivatives at t
    Eval {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, allow_hyphen_values = true)]
        t: String,
        /// Also report derivatives up to this order
        #[arg(long, default_value_t = 0)]
        derivatives: usize,
    },
    /// Exact Bernoulli numbers B_from ..= B_to
    Bernoulli {
        #[arg(long, default_value_t = 0)]
        from: usize,
        #[arg(long)]
        to: usize,
    },
    /// Laplace kernel h^(j)(s), its h4 coefficients, or the reconstruction of Q
    #[command(args_conflicts_with_subcommands = true)]
    Kernel {
        #[arg(long)]
        order: Option<u8>,
        #[arg(long, allow_hyphen_values = true)]
        s: Option<String>,
        #[command(subcommand)]
        action: Option<KernelCommand>,
    },
    /// Sign scan of (-1)^k [t^r phi]^(k) over a grid
    Cmcheck {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, allow_hyphen_values = true)]
        r: String,
        #[command(flatten)]
        scan: ScanArgs,
    },
    /// Numerical bracket for the completely monotonic degree
    Degree {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value = "0.05")]
        step: String,
        #[command(flatten)]
        scan: ScanArgs,
    },
    /// Brackets for phi_{n,m} over a range, compared with the conjectured degrees
    Conjectures {
        #[arg(long, default_value_t = 0)]
        n_min: usize,
        #[arg(long, default_value_t = 3)]
        n_max: usize,
        #[arg(long, default_value_t = 0)]
        m_min: usize,
        #[arg(long, default_value_t = 3)]
        m_max: usize,
        #[arg(long, default_value = "0.05")]
        step: String,
        #[command(flatten)]
        scan: ScanArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum KernelCommand {
    /// Exact coefficients c_k of the h4 series
    Coeffs {
        #[arg(long, default_value_t = 7)]
        from: u32,
        #[arg(long)]
        to: u32,
    },
    /// Check c_k > 0 for 7 <= k <= k_max
    Positivity {
        #[arg(long, default_value_t = 200)]
        k_max: u32,
    },
    /// Quadrature of int h(s) e^(-ts) ds against Q(t)
    Laplace {
        #[arg(long, allow_hyphen_values = true)]
        t: String,
        #[arg(long, default_value_t = 1e-24)]
        tol: f64,
    },
}

/// Output wrapper shared by all commands.
#[derive(Debug, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema: u32,
    pub command: String,
    pub precision: PrecisionPolicy,
    pub result: T,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct EvalRecord {
    pub spec: RemainderSpec,
    pub t: Real,
    /// `phi^{(i)}(t)` for `i = 0..=derivatives`.
    pub values: Vec<Real>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct RationalEntry {
    pub k: u32,
    #[serde(with = "crate::bernoulli::rational_string")]
    pub value: Rational,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct CoefficientRecord {
    pub k: u32,
    #[serde(with = "crate::bernoulli::rational_string")]
    pub c_k: Rational,
    #[serde(with = "crate::bernoulli::rational_string")]
    pub twice_c_k: Rational,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct KernelRecord {
    pub order: u8,
    pub s: Real,
    pub value: Real,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct LaplaceRecord {
    pub t: Real,
    pub estimate: LaplaceEstimate,
    pub q_value: Real,
    pub difference: Real,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub schema: u32,
    pub error: ErrorBody,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub kind: String,
    pub message: String,
}

/// Parses a decimal such as `5.05`, `-2` or `1e-3` into an exact rational.
pub use crate::bernoulli::parse_decimal as parse_rational;

fn parse_spec(args: &SpecArgs) -> Result<RemainderSpec> {
    if let Some(name) = &args.special {
        return RemainderSpec::special(name);
    }
    let raw = args.spec.as_deref().unwrap_or_default();
    let (n, m) = raw
        .split_once(',')
        .ok_or_else(|| Error::InvalidSpec(format!("expected n,m, got {raw:?}")))?;
    let parse = |x: &str| {
        x.trim()
            .parse::<usize>()
            .map_err(|_| Error::InvalidSpec(format!("expected n,m, got {raw:?}")))
    };
    let spec = RemainderSpec::remainder(parse(n)?, parse(m)?);
    spec.validate(&SpecLimits::default())?;
    Ok(spec)
}

fn parse_real(s: &str, policy: &PrecisionPolicy) -> Result<Real> {
    Real::parse_decimal(s, policy.internal_bits() + 16)
}

fn positive(v: Real) -> Result<Real> {
    if v.is_positive() {
        Ok(v)
    } else {
        Err(Error::NonPositiveArgument(v.to_scientific(12)))
    }
}

fn default_precision() -> Result<usize> {
    match std::env::var(PRECISION_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidPrecision(format!("{PRECISION_ENV}={v:?} is not an integer"))),
        Err(_) => Ok(DEFAULT_PRECISION),
    }
}

fn bracket_config(step: &str, scan: &ScanArgs) -> Result<BracketConfig> {
    let lattice_step = parse_rational(step)?;
    if lattice_step <= Rational::zero() || lattice_step > Rational::one() {
        return Err(Error::InvalidGrid(format!("lattice step must lie in (0, 1], got {step}")));
    }
    Ok(BracketConfig {
        lattice_step,
        max_order: scan.max_order,
        grid: Grid::parse(&scan.grid)?,
        ..BracketConfig::default()
    })
}

fn decimal(r: &Real) -> String {
    DecimalValue::from(r).decimal
}

/// CSV rows `(t, k, value)` of a scan; header only when the report is empty.
pub fn emit_plot_data<W: Write>(report: Option<&CmCheckReport>, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "k", "value"])?;
    for s in report.map(|r| r.samples.as_slice()).unwrap_or_default() {
        w.write_record([decimal(&s.t), s.k.to_string(), decimal(&s.value)])?;
    }
    w.flush()
}

/// CSV rows `(n, m, lower, upper, conjectured)` of a conjecture scan.
pub fn emit_conjecture_table<W: Write>(table: Option<&ConjectureTable>, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "m", "lower", "upper", "conjectured"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for row in table.map(|t| t.rows.as_slice()).unwrap_or_default() {
        w.write_record([
            row.n.to_string(),
            row.m.to_string(),
            opt(row.lower),
            opt(row.upper),
            row.conjectured.to_string(),
        ])?;
    }
    w.flush()
}

fn csv_rows<W: Write>(header: &[&str], rows: Vec<Vec<String>>, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()
}

enum Output {
    Eval(EvalRecord),
    Bernoulli(Vec<RationalEntry>),
    Kernel(KernelRecord),
    Coeffs(Vec<CoefficientRecord>),
    Positivity(PositivityReport),
    Laplace(Box<LaplaceRecord>),
    Check(Box<CmCheckReport>),
    Degree(Box<DegreeBracket>),
    Conjectures(ConjectureTable),
}

impl Output {
    fn name(&self) -> &'static str {
        match self {
            Output::Eval(_) => "eval",
            Output::Bernoulli(_) => "bernoulli",
            Output::Kernel(_) => "kernel",
            Output::Coeffs(_) => "kernel coeffs",
            Output::Positivity(_) => "kernel positivity",
            Output::Laplace(_) => "kernel laplace",
            Output::Check(_) => "cmcheck",
            Output::Degree(_) => "degree",
            Output::Conjectures(_) => "conjectures",
        }
    }

    fn json(&self, policy: &PrecisionPolicy) -> serde_json::Result<String> {
        fn wrap<T: Serialize>(name: &str, policy: &PrecisionPolicy, result: &T) -> serde_json::Result<String> {
            serde_json::to_string_pretty(&Envelope {
                schema: SCHEMA_VERSION,
                command: name.to_string(),
                precision: *policy,
                result,
            })
        }
        let n = self.name();
        match self {
            Output::Eval(r) => wrap(n, policy, r),
            Output::Bernoulli(r) => wrap(n, policy, r),
            Output::Kernel(r) => wrap(n, policy, r),
            Output::Coeffs(r) => wrap(n, policy, r),
            Output::Positivity(r) => wrap(n, policy, r),
            Output::Laplace(r) => wrap(n, policy, r),
            Output::Check(r) => wrap(n, policy, r),
            Output::Degree(r) => wrap(n, policy, r),
            Output::Conjectures(r) => wrap(n, policy, r),
        }
    }

    fn csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        match self {
            Output::Eval(r) => csv_rows(
                &["i", "value"],
                r.values.iter().enumerate().map(|(i, v)| vec![i.to_string(), decimal(v)]).collect(),
                out,
            ),
            Output::Bernoulli(r) => csv_rows(
                &["k", "value"],
                r.iter().map(|e| vec![e.k.to_string(), e.value.to_string()]).collect(),
                out,
            ),
            Output::Kernel(r) => csv_rows(
                &["order", "s", "value"],
                vec![vec![r.order.to_string(), decimal(&r.s), decimal(&r.value)]],
                out,
            ),
            Output::Coeffs(r) => csv_rows(
                &["k", "c_k", "twice_c_k"],
                r.iter()
                    .map(|c| vec![c.k.to_string(), c.c_k.to_string(), c.twice_c_k.to_string()])
                    .collect(),
                out,
            ),
            Output::Positivity(r) => csv_rows(
                &["k_max", "checked", "all_positive", "first_failure"],
                vec![vec![
                    r.k_max.to_string(),
                    r.checked.to_string(),
                    r.all_positive.to_string(),
                    r.first_failure.map(|k| k.to_string()).unwrap_or_default(),
                ]],
                out,
            ),
            Output::Laplace(r) => csv_rows(
                &["t", "value", "q_value", "difference"],
                vec![vec![decimal(&r.t), decimal(&r.estimate.value), decimal(&r.q_value), decimal(&r.difference)]],
                out,
            ),
            Output::Check(r) => emit_plot_data(Some(r), out),
            Output::Degree(b) => csv_rows(
                &["spec", "lower", "upper", "upper_method"],
                vec![vec![
                    b.spec.to_string(),
                    b.lower.to_string(),
                    b.upper.to_string(),
                    format!("{:?}", b.upper_method),
                ]],
                out,
            ),
            Output::Conjectures(t) => emit_conjecture_table(Some(t), out),
        }
    }

    fn text(&self) -> String {
        match self {
            Output::Eval(r) => {
                let mut s = format!("{} at t = {}\n", r.spec, decimal(&r.t));
                for (i, v) in r.values.iter().enumerate() {
                    s += &format!("  d^{i}: {}\n", decimal(v));
                }
                s
            }
            Output::Bernoulli(r) => r.iter().map(|e| format!("B_{} = {}\n", e.k, e.value)).collect(),
            Output::Kernel(r) => format!("h^({})({}) = {}\n", r.order, decimal(&r.s), decimal(&r.value)),
            Output::Coeffs(r) => r
                .iter()
                .map(|c| format!("c_{} = {}  (2 c_{} = {})\n", c.k, c.c_k, c.k, c.twice_c_k))
                .collect(),
            Output::Positivity(r) => format!(
                "c_k > 0 for 7 <= k <= {}: {} ({} checked)\n",
                r.k_max, r.all_positive, r.checked
            ),
            Output::Laplace(r) => format!(
                "laplace = {}\nQ(t)    = {}\n|diff|  = {}\ncutoff {} levels {} evaluations {}\n",
                decimal(&r.estimate.value),
                decimal(&r.q_value),
                r.difference.to_scientific(3),
                r.estimate.cutoff,
                r.estimate.levels,
                r.estimate.evaluations
            ),
            Output::Check(r) => format!(
                "{} r = {} K = {}: {:?} ({} violations, {} inconclusive)\n{}\n",
                r.spec,
                r.r,
                r.max_order,
                r.verdict,
                r.violations.len(),
                r.inconclusive_points.len(),
                r.note
            ),
            Output::Degree(b) => format!(
                "{}: degree in [{}, {}] (upper from {:?}; small-t limit {:.6})\n{}\n",
                b.spec, b.lower, b.upper, b.upper_method, b.small_t.upper_bound, b.note
            ),
            Output::Conjectures(t) => {
                let mut s = String::from(" n  m  conj  proven  lower  upper  contains\n");
                for r in &t.rows {
                    let f = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into());
                    s += &format!(
                        "{:>2} {:>2} {:>5} {:>7} {:>6} {:>6}  {}\n",
                        r.n,
                        r.m,
                        r.conjectured,
                        r.proven,
                        f(r.lower),
                        f(r.upper),
                        match (&r.error, r.contains_conjectured) {
                            (Some(e), _) => e.clone(),
                            (None, Some(c)) => c.to_string(),
                            (None, None) => "-".into(),
                        }
                    );
                }
                s + &t.note + "\n"
            }
        }
    }
}

fn execute(cli: &Cli, policy: &PrecisionPolicy) -> Result<Output> {
    Ok(match &cli.command {
        Command::Eval { spec, t, derivatives } => {
            let spec = parse_spec(spec)?;
            let t = positive(parse_real(t, policy)?)?;
            let values = phi_derivatives(&spec, &t, *derivatives, policy)?;
            Output::Eval(EvalRecord { spec, t, values })
        }
        Command::Bernoulli { from, to } => {
            if from > to {
                return Err(Error::InvalidIndex(format!("--from {from} exceeds --to {to}")));
            }
            Output::Bernoulli(
                (*from..=*to)
                    .map(|k| RationalEntry {
                        k: k as u32,
                        value: bernoulli(k),
                    })
                    .collect(),
            )
        }
        Command::Kernel { order, s, action } => match action {
            Some(KernelCommand::Coeffs { from, to }) => {
                if from > to {
                    return Err(Error::InvalidIndex(format!("--from {from} exceeds --to {to}")));
                }
                let two = Rational::from(BigInt::from(2));
                Output::Coeffs(
                    (*from..=*to)
                        .map(|k| {
                            let c = h4_series_coefficient(k)?;
                            Ok(CoefficientRecord {
                                k,
                                twice_c_k: &c.c_k * &two,
                                c_k: c.c_k,
                            })
                        })
                        .collect::<Result<_>>()?,
                )
            }
            Some(KernelCommand::Positivity { k_max }) => Output::Positivity(h4_positivity_scan(*k_max)?),
            Some(KernelCommand::Laplace { t, tol }) => {
                let t = positive(parse_real(t, policy)?)?;
                let quad = QuadParams {
                    tolerance: *tol,
                    ..QuadParams::default()
                };
                let estimate = laplace_reconstruct(&t, &quad, policy)?;
                let q = q_value(&t, policy)?;
                let difference = (&estimate.value - &q).abs();
                Output::Laplace(Box::new(LaplaceRecord {
                    t,
                    estimate,
                    q_value: q,
                    difference,
                }))
            }
            None => {
                let (Some(order), Some(s)) = (order, s) else {
                    return Err(Error::Parse("kernel needs --order and --s, or a subcommand".into()));
                };
                let j = KernelOrder::new(*order)?;
                let s = positive(parse_real(s, policy)?)?;
                let value = kernel_h(j, &s, policy)?;
                Output::Kernel(KernelRecord { order: j.get(), s, value })
            }
        },
        Command::Cmcheck { spec, r, scan } => {
            let spec = parse_spec(spec)?;
            let r = parse_rational(r)?;
            if r < Rational::zero() {
                return Err(Error::Parse(format!("--r must be nonnegative, got {r}")));
            }
            if scan.max_order < 1 {
                return Err(Error::InvalidIndex("--max-order must be at least 1".into()));
            }
            let grid = Grid::parse(&scan.grid)?;
            Output::Check(Box::new(cm_check(&spec, &r, scan.max_order, &grid, policy)?))
        }
        Command::Degree { spec, step, scan } => {
            let spec = parse_spec(spec)?;
            let config = bracket_config(step, scan)?;
            Output::Degree(Box::new(degree_bracket(&spec, &config, policy)?))
        }
        Command::Conjectures {
            n_min,
            n_max,
            m_min,
            m_max,
            step,
            scan,
        } => {
            if n_min > n_max || m_min > m_max {
                return Err(Error::InvalidSpec("empty n or m range".into()));
            }
            let config = bracket_config(step, scan)?;
            Output::Conjectures(conjecture_scan(
                *n_min..=*n_max,
                *m_min..=*m_max,
                &config,
                policy,
                &SpecLimits::default(),
            )?)
        }
    })
}

fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidSpec(_) | Error::InvalidGrid(_) | Error::InvalidPrecision(_) | Error::Parse(_) | Error::InvalidIndex(_)
    )
}

fn report_error(e: &Error, err: &mut dyn Write) {
    let record = ErrorRecord {
        schema: SCHEMA_VERSION,
        error: ErrorBody {
            kind: e.kind().to_string(),
            message: e.to_string(),
        },
    };
    let _ = writeln!(err, "{}", serde_json::to_string(&record).unwrap_or_default());
}

/// Runs the command line and returns the process exit code:
/// 0 on success, 1 on a computation error, 2 on a usage error.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    let usage = |e: &Error, err: &mut dyn Write| {
        report_error(e, err);
        let _ = writeln!(err, "{}", Cli::command().render_usage());
        2
    };
    let policy = match cli
        .prec
        .map_or_else(default_precision, Ok)
        .and_then(PrecisionPolicy::new)
    {
        Ok(p) => p,
        Err(e) => return usage(&e, err),
    };
    let output = match execute(&cli, &policy) {
        Ok(o) => o,
        Err(e) if is_usage_error(&e) => return usage(&e, err),
        Err(e) => {
            report_error(&e, err);
            return 1;
        }
    };
    let mut buf = Vec::new();
    let written = match cli.format {
        Format::Json => output
            .json(&policy)
            .map_err(std::io::Error::other)
            .and_then(|s| writeln!(buf, "{s}")),
        Format::Csv => output.csv(&mut buf),
        Format::Text => write!(buf, "{}", output.text()),
    };
    let written = written.and_then(|_| match &cli.out {
        Some(path) => std::fs::write(path, &buf),
        None => out.write_all(&buf),
    });
    match written {
        Ok(()) => 0,
        Err(e) => {
            report_error(&Error::Parse(format!("cannot write output: {e}")), err);
            1
        }
    }
}

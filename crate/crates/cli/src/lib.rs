//! Command-line front end: tests on CSV data, power studies, null-table
//! caches, and efficiency constants.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use corank::efficiency::{are_elliptical, omega, EllipticalModel, RadialFamily};
use corank::konijn::{local_delta, Case, KonijnConfig};
use corank::pipeline::{power_study, run_tests, PowerConfig, TestSetup};
use corank::scores::{Normalization, ScoreKind};
use corank::stats::{Method, TestKind, TestResult};
use corank::Points;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] corank::Error),
    #[error("cannot read '{path}': {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write output: {0}")]
    Write(#[from] std::io::Error),
}

impl CliError {
    /// 3 for failures of the numerical routines, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "corank",
    version,
    about = "Center-outward rank and sign tests of independence between random vectors"
)]
pub struct Cli {
    /// Worker threads for simulations (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run independence tests on a CSV file.
    Test(TestArgs),
    /// Rejection frequencies over simulated Konijn alternatives.
    Power(PowerArgs),
    /// Compute or reuse cached null tables and print their quantiles.
    Critval(CritvalArgs),
    /// Efficiency of a score test relative to Wilks' test.
    Are(AreArgs),
    /// Lower bound on the Spearman efficiency for d1, d2 <= 10.
    OmegaTable(OutArgs),
    /// Write a simulated Konijn sample as CSV.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Asymptotic,
    Permutation,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CaseArg {
    A,
    B,
    C,
    D,
}

impl From<CaseArg> for Case {
    fn from(c: CaseArg) -> Case {
        match c {
            CaseArg::A => Case::A,
            CaseArg::B => Case::B,
            CaseArg::C => Case::C,
            CaseArg::D => Case::D,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Grid,
    Population,
}

impl From<NormArg> for Normalization {
    fn from(n: NormArg) -> Normalization {
        match n {
            NormArg::Grid => Normalization::Grid,
            NormArg::Population => Normalization::Population,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScoreArg {
    Sign,
    Wilcoxon,
    Vdw,
}

impl From<ScoreArg> for ScoreKind {
    fn from(s: ScoreArg) -> ScoreKind {
        match s {
            ScoreArg::Sign => ScoreKind::Sign,
            ScoreArg::Wilcoxon => ScoreKind::Wilcoxon,
            ScoreArg::Vdw => ScoreKind::VanDerWaerden,
        }
    }
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// How p-values or critical values of the rank tests are obtained.
#[derive(Debug, Args)]
pub struct NullArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Asymptotic)]
    pub method: MethodArg,
    /// Monte Carlo pairings for the permutation method.
    #[arg(long = "B", default_value_t = 999)]
    pub b: usize,
    #[arg(long, default_value_t = 0)]
    pub null_seed: u64,
    /// Directory for cached null tables; tables are kept in memory if unset.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = NormArg::Grid)]
    pub normalization: NormArg,
}

impl NullArgs {
    fn method(&self) -> Method {
        match self.method {
            MethodArg::Asymptotic => Method::Asymptotic,
            MethodArg::Permutation => Method::Permutation {
                b: self.b,
                seed: self.null_seed,
            },
            MethodArg::Exact => Method::Exact,
        }
    }
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// CSV with a header row; the first d1 columns are the first block.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub d1: usize,
    #[arg(long)]
    pub d2: usize,
    /// Comma-separated subset of sign,spearman,kendall,vdw,wilks.
    #[arg(long, default_value = "sign,spearman,kendall,vdw,wilks")]
    pub tests: String,
    #[arg(long, default_value_t = 0)]
    pub grid_seed: u64,
    #[command(flatten)]
    pub null: NullArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    #[arg(long, value_enum)]
    pub case: CaseArg,
    #[arg(long)]
    pub d1: usize,
    /// Defaults to d1; the simulated families use equal dimensions.
    #[arg(long)]
    pub d2: Option<usize>,
    #[arg(long)]
    pub n: usize,
    /// Comma-separated values of tau.
    #[arg(long, default_value = "0,0.2,0.4,0.6,0.8")]
    pub taus: String,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value = "sign,spearman,kendall,vdw,wilks")]
    pub tests: String,
    #[arg(long, default_value_t = 0)]
    pub grid_seed: u64,
    #[arg(long, default_value_t = 1)]
    pub data_seed: u64,
    #[command(flatten)]
    pub null: NullArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct CritvalArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d1: usize,
    #[arg(long)]
    pub d2: usize,
    /// Rank tests only.
    #[arg(long, default_value = "sign,spearman,kendall,vdw")]
    pub tests: String,
    /// permutation or exact.
    #[arg(long, value_enum, default_value_t = MethodArg::Permutation)]
    pub method: MethodArg,
    #[arg(long = "B", default_value_t = 999)]
    pub b: usize,
    #[arg(long, default_value_t = 0)]
    pub grid_seed: u64,
    #[arg(long, default_value_t = 0)]
    pub null_seed: u64,
    #[arg(long, default_value = "corank-cache")]
    pub cache_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = NormArg::Grid)]
    pub normalization: NormArg,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct AreArgs {
    #[arg(long, value_enum, default_value_t = ScoreArg::Vdw)]
    pub score: ScoreArg,
    /// Score of the second block (default: same as the first).
    #[arg(long, value_enum)]
    pub score2: Option<ScoreArg>,
    /// gaussian or t<nu>, e.g. t3.
    #[arg(long, default_value = "gaussian")]
    pub family: String,
    /// Radial family of the second block (default: same as the first).
    #[arg(long)]
    pub family2: Option<String>,
    #[arg(long)]
    pub d1: usize,
    #[arg(long)]
    pub d2: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub case: CaseArg,
    #[arg(long)]
    pub d1: usize,
    #[arg(long)]
    pub d2: Option<usize>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 1)]
    pub data_seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> CliResult<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Input("--threads must be at least 1".into()));
        }
        // fails only if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let (text, out) = match &cli.command {
        Command::Test(a) => (cmd_test(a)?, &a.out),
        Command::Power(a) => (cmd_power(a)?, &a.out),
        Command::Critval(a) => (cmd_critval(a)?, &a.out),
        Command::Are(a) => (cmd_are(a)?, &a.out),
        Command::OmegaTable(a) => (cmd_omega_table()?, a),
        Command::Generate(a) => (cmd_generate(a)?, &a.out),
    };
    emit(&text, out.out.as_deref())
}

fn emit(text: &str, path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn check_dims(d1: usize, d2: usize) -> CliResult<()> {
    if d1 == 0 || d2 == 0 {
        return Err(CliError::Input("--d1 and --d2 must be at least 1".into()));
    }
    Ok(())
}

/// Reads a CSV with one header row into the two blocks.
pub fn read_blocks(path: &Path, d1: usize, d2: usize) -> CliResult<(Points, Points)> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let width = reader
        .headers()
        .map_err(|e| CliError::Input(format!("malformed CSV header: {e}")))?
        .len();
    if width != d1 + d2 {
        return Err(CliError::Input(format!(
            "expected d1 + d2 = {} columns, the header has {width}",
            d1 + d2
        )));
    }
    let (mut x1, mut x2) = (Vec::new(), Vec::new());
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| CliError::Input(format!("line {line}: {e}")))?;
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                CliError::Input(format!(
                    "line {line}, column {}: not a number: {cell:?}",
                    j + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::Input(format!(
                    "line {line}, column {}: non-finite value",
                    j + 1
                )));
            }
            if j < d1 {
                x1.push(v);
            } else {
                x2.push(v);
            }
        }
    }
    Ok((Points::new(d1, x1)?, Points::new(d2, x2)?))
}

#[derive(Serialize)]
struct TestReport {
    n: usize,
    d1: usize,
    d2: usize,
    results: Vec<TestResult>,
}

pub fn cmd_test(a: &TestArgs) -> CliResult<String> {
    check_dims(a.d1, a.d2)?;
    let tests = TestKind::parse_list(&a.tests)?;
    let (x1, x2) = read_blocks(&a.input, a.d1, a.d2)?;
    let n = x1.len();
    if n < corank::pipeline::MIN_N {
        return Err(CliError::Input(format!(
            "need at least {} observations, got {n}",
            corank::pipeline::MIN_N
        )));
    }
    for (x, block) in [(&x1, 1), (&x2, 2)] {
        if let Some((i, j)) = x.find_duplicate() {
            return Err(CliError::Input(format!(
                "block {block}: rows {} and {} coincide",
                i + 1,
                j + 1
            )));
        }
    }
    let setup = TestSetup::new(n, a.d1, a.d2, a.grid_seed, a.null.normalization.into())?;
    let results = run_tests(
        &x1,
        &x2,
        &tests,
        &setup,
        a.null.method(),
        a.null.cache_dir.as_deref(),
    )?;
    let report = TestReport {
        n,
        d1: a.d1,
        d2: a.d2,
        results,
    };
    let mut s = serde_json::to_string_pretty(&report).expect("report serialises");
    s.push('\n');
    Ok(s)
}

fn parse_taus(s: &str) -> CliResult<Vec<f64>> {
    let taus = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| CliError::Input(format!("bad tau value {t:?}")))
        })
        .collect::<CliResult<Vec<f64>>>()?;
    if taus.is_empty() {
        return Err(CliError::Input("--taus is empty".into()));
    }
    Ok(taus)
}

fn equal_dims(d1: usize, d2: Option<usize>) -> CliResult<usize> {
    let d2 = d2.unwrap_or(d1);
    check_dims(d1, d2)?;
    if d1 != d2 {
        return Err(CliError::Input(
            "the simulated Konijn families need d1 = d2".into(),
        ));
    }
    Ok(d1)
}

pub fn cmd_power(a: &PowerArgs) -> CliResult<String> {
    let d = equal_dims(a.d1, a.d2)?;
    let mut cfg = PowerConfig::new(a.case.into(), d, a.n, parse_taus(&a.taus)?, a.reps);
    cfg.alpha = a.alpha;
    cfg.tests = TestKind::parse_list(&a.tests)?;
    cfg.grid_seed = a.grid_seed;
    cfg.data_seed = a.data_seed;
    cfg.method = a.null.method();
    cfg.normalization = a.null.normalization.into();
    Ok(power_study(&cfg, a.null.cache_dir.as_deref())?.to_csv())
}

pub fn cmd_critval(a: &CritvalArgs) -> CliResult<String> {
    check_dims(a.d1, a.d2)?;
    let tests = TestKind::parse_list(&a.tests)?;
    if tests.contains(&TestKind::Wilks) {
        return Err(CliError::Input(
            "wilks is not distribution free and has no null table".into(),
        ));
    }
    let method = match a.method {
        MethodArg::Permutation => {
            if a.b < corank::nulldist::MIN_REPLICATES {
                return Err(CliError::Input(format!(
                    "--B must be at least {}",
                    corank::nulldist::MIN_REPLICATES
                )));
            }
            Method::Permutation {
                b: a.b,
                seed: a.null_seed,
            }
        }
        MethodArg::Exact => Method::Exact,
        MethodArg::Asymptotic => {
            return Err(CliError::Input(
                "critval needs --method permutation or exact".into(),
            ))
        }
    };
    let setup = TestSetup::new(a.n, a.d1, a.d2, a.grid_seed, a.normalization.into())?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = ["test", "n", "d1", "d2", "method", "q0.90", "q0.95", "q0.99"];
    w.write_record(header).map_err(csv_error)?;
    for kind in tests {
        let table = setup.null_table(kind, method, Some(&a.cache_dir))?;
        let mut row = vec![
            kind.to_string(),
            a.n.to_string(),
            a.d1.to_string(),
            a.d2.to_string(),
            method.to_string(),
        ];
        for p in [0.90, 0.95, 0.99] {
            row.push(table.quantile(p)?.to_string());
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Write(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Write(std::io::Error::other(e))
}

pub fn cmd_are(a: &AreArgs) -> CliResult<String> {
    check_dims(a.d1, a.d2)?;
    let f1: RadialFamily = a.family.parse()?;
    let f2: RadialFamily = match &a.family2 {
        Some(s) => s.parse()?,
        None => f1,
    };
    let model = EllipticalModel::identity(a.d1, a.d2, f1, f2);
    let s1: ScoreKind = a.score.into();
    let s2: ScoreKind = a.score2.map(Into::into).unwrap_or(s1);
    let report = are_elliptical(s1, s2, &model)?;
    let mut s = serde_json::to_string_pretty(&report).expect("report serialises");
    s.push('\n');
    Ok(s)
}

pub fn cmd_omega_table() -> CliResult<String> {
    let mut out = String::from("d1");
    for d2 in 1..=10 {
        out.push_str(&format!(",{d2}"));
    }
    out.push('\n');
    for d1 in 1..=10 {
        out.push_str(&d1.to_string());
        for d2 in 1..=10 {
            out.push_str(&format!(",{:.4}", omega(d1, d2)?));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn cmd_generate(a: &GenerateArgs) -> CliResult<String> {
    let d = equal_dims(a.d1, a.d2)?;
    if a.n == 0 {
        return Err(CliError::Input("--n must be positive".into()));
    }
    let delta = local_delta(a.tau, a.n);
    let (x1, x2) = KonijnConfig::case(a.case.into(), d, delta).generate(a.n, a.data_seed)?;
    let mut out = String::new();
    let header: Vec<String> = (1..=d)
        .map(|j| format!("x1_{j}"))
        .chain((1..=d).map(|j| format!("x2_{j}")))
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..a.n {
        let cells: Vec<String> = x1
            .row(i)
            .iter()
            .chain(x2.row(i))
            .map(|v| format!("{v:e}"))
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

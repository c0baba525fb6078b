//! Command-line drivers.
//!
//! Every command accepts the same flags; a flat `key = value` config file
//! may supply any of them and explicit flags win. Output files start with a
//! comment block recording the resolved configuration (JSON files carry it
//! in a leading `config` object instead).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Number;

use crate::analysis::{self, ConvergenceRow, Oracle};
use crate::chebyshev::{self, Parity};
use crate::dynamics::{self, ModalSolution};
use crate::eigsolver::EigenDecomposition;
use crate::error::Error;
use crate::fourier;
use crate::kernel::Micromodulus;
use crate::problem::{Basis, BoundaryCondition, SpectralProblem};
use crate::quadrature::{self, Interval, Mesh};

const CSV_DIGITS: usize = 6;
const JSON_DIGITS: usize = 17;
const CURVE_SAMPLES: usize = 401;
const SNAPSHOT_POINTS: usize = 200;
const DEFAULT_REFERENCE_N: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Multipliers,
    Eigen,
    Converge,
    Antiperiodic,
    Evolve,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Multipliers => "multipliers",
            Command::Eigen => "eigen",
            Command::Converge => "converge",
            Command::Antiperiodic => "antiperiodic",
            Command::Evolve => "evolve",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Validated configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// `None` selects the benchmark Gaussian `4 e^{-y²}/√π`.
    pub kernel_spec: Option<String>,
    pub delta: f64,
    pub n: usize,
    pub basis: Basis,
    pub bc: BoundaryCondition,
    pub domain: Interval,
    pub times: Vec<f64>,
    pub modes: Option<usize>,
    pub output_dir: PathBuf,
    pub format: Format,
    pub emit_plot_script: bool,
    pub parity: Option<Parity>,
    pub center: f64,
    pub rho: f64,
    pub levels: usize,
    pub oracle: Oracle,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Run(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "nonlocal-spectral", version, about = "Spectral eigensolvers for the 1-D peridynamic operator")]
struct Cli {
    #[command(subcommand)]
    command: CommandArgs,
}

#[derive(Subcommand, Debug)]
enum CommandArgs {
    /// Exact multiplier curve with the Fourier and Chebyshev spectra.
    Multipliers(Flags),
    /// Sorted discrete spectrum and eigenvectors.
    Eigen(Flags),
    /// Spectral error and observed rate over N, 2N, 4N, ...
    Converge(Flags),
    /// Odd Chebyshev sub-basis against a refined reference.
    Antiperiodic(Flags),
    /// Modal solution snapshots from a Gaussian pulse at rest.
    Evolve(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// Flat `key = value` file with defaults for any flag.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "fourier|chebyshev")]
    basis: Option<String>,
    #[arg(long, value_name = "periodic|antiperiodic|free")]
    bc: Option<String>,
    /// gaussian:<amplitude>:<width> | tophat:<height> | table:<path>
    #[arg(long, value_name = "SPEC")]
    kernel: Option<String>,
    #[arg(long, value_name = "R", allow_hyphen_values = true)]
    delta: Option<String>,
    #[arg(long, value_name = "INT")]
    n: Option<String>,
    #[arg(long, value_name = "A:B", allow_hyphen_values = true)]
    domain: Option<String>,
    #[arg(long, value_name = "T1,T2,...")]
    times: Option<String>,
    #[arg(long, value_name = "INT")]
    modes: Option<String>,
    #[arg(long, value_name = "csv|json")]
    format: Option<String>,
    #[arg(long, value_name = "DIR")]
    out: Option<String>,
    /// Also write a gnuplot script for the emitted tables.
    #[arg(long)]
    plot: bool,
    /// Chebyshev sub-basis: all | even | odd.
    #[arg(long)]
    parity: Option<String>,
    /// Centre of the initial pulse for `evolve`.
    #[arg(long, allow_hyphen_values = true)]
    center: Option<String>,
    #[arg(long)]
    rho: Option<String>,
    /// Number of refinement levels for `converge`.
    #[arg(long)]
    levels: Option<String>,
    /// multiplier | self:<n_ref>
    #[arg(long)]
    oracle: Option<String>,
}

const KEYS: [&str; 16] = [
    "basis", "bc", "kernel", "delta", "n", "domain", "times", "modes", "format", "out", "plot", "parity", "center",
    "rho", "levels", "oracle",
];

impl Flags {
    fn entries(self) -> (Option<PathBuf>, BTreeMap<&'static str, String>) {
        let mut m = BTreeMap::new();
        let pairs = [
            ("basis", self.basis),
            ("bc", self.bc),
            ("kernel", self.kernel),
            ("delta", self.delta),
            ("n", self.n),
            ("domain", self.domain),
            ("times", self.times),
            ("modes", self.modes),
            ("format", self.format),
            ("out", self.out),
            ("parity", self.parity),
            ("center", self.center),
            ("rho", self.rho),
            ("levels", self.levels),
            ("oracle", self.oracle),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                m.insert(k, v);
            }
        }
        if self.plot {
            m.insert("plot", "true".into());
        }
        (self.config, m)
    }
}

/// Parses a flat `key = value` file; `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<&'static str, String>, CliError> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected `key = value`, got `{raw}`", lineno + 1)))?;
        let key = key.trim();
        let known = KEYS
            .iter()
            .find(|k| **k == key)
            .ok_or_else(|| CliError::Usage(format!("config line {}: unknown key `{key}`", lineno + 1)))?;
        out.insert(*known, value.trim().to_string());
    }
    Ok(out)
}

fn bad(key: &str, value: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("invalid value `{value}` for `{key}`: {why}"))
}

/// Real number, also accepting `pi`, `2pi`, `-pi` and `<x>pi`.
fn parse_real(key: &str, value: &str) -> Result<f64, CliError> {
    let v = value.trim();
    let parsed = if let Some(coef) = v.strip_suffix("pi") {
        match coef {
            "" => Ok(1.0),
            "-" => Ok(-1.0),
            c => f64::from_str(c.trim_end_matches('*')),
        }
        .map(|c| c * PI)
    } else {
        f64::from_str(v)
    };
    match parsed {
        Ok(x) if x.is_finite() => Ok(x),
        Ok(_) => Err(bad(key, value, "not finite")),
        Err(e) => Err(bad(key, value, e)),
    }
}

fn parse_usize(key: &str, value: &str) -> Result<usize, CliError> {
    usize::from_str(value.trim()).map_err(|e| bad(key, value, e))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(key, value, "expected true or false")),
    }
}

/// Parses argv (program name first) into a validated [`RunConfig`].
pub fn parse_config<I, T>(args: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    let (command, flags) = match cli.command {
        CommandArgs::Multipliers(f) => (Command::Multipliers, f),
        CommandArgs::Eigen(f) => (Command::Eigen, f),
        CommandArgs::Converge(f) => (Command::Converge, f),
        CommandArgs::Antiperiodic(f) => (Command::Antiperiodic, f),
        CommandArgs::Evolve(f) => (Command::Evolve, f),
    };
    let (config_path, overrides) = flags.entries();
    let mut values = match config_path {
        Some(p) => {
            let text = fs::read_to_string(&p)
                .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", p.display())))?;
            parse_config_file(&text)?
        }
        None => BTreeMap::new(),
    };
    values.extend(overrides);
    resolve(command, &values)
}

fn resolve(command: Command, v: &BTreeMap<&'static str, String>) -> Result<RunConfig, CliError> {
    let get = |k: &str| v.get(k).map(String::as_str);

    let n = match get("n") {
        Some(s) => parse_usize("n", s)?,
        None => return Err(CliError::Usage("missing required `n` (--n <int>)".into())),
    };
    let basis = match get("basis") {
        None if command == Command::Antiperiodic => Basis::Chebyshev,
        None | Some("fourier") => Basis::Fourier,
        Some("chebyshev") => Basis::Chebyshev,
        Some(s) => return Err(bad("basis", s, "expected fourier or chebyshev")),
    };
    let bc = match get("bc") {
        None if command == Command::Antiperiodic => BoundaryCondition::Antiperiodic,
        None | Some("periodic") => BoundaryCondition::Periodic,
        Some("antiperiodic") => BoundaryCondition::Antiperiodic,
        Some("free") => BoundaryCondition::Free,
        Some(s) => return Err(bad("bc", s, "expected periodic, antiperiodic or free")),
    };
    if command == Command::Antiperiodic && (basis != Basis::Chebyshev || bc != BoundaryCondition::Antiperiodic) {
        return Err(CliError::Usage("`antiperiodic` uses the Chebyshev basis with bc = antiperiodic".into()));
    }
    let domain = match get("domain") {
        Some(s) => {
            let (a, b) = s.split_once(':').ok_or_else(|| bad("domain", s, "expected <a>:<b>"))?;
            Interval::new(parse_real("domain", a)?, parse_real("domain", b)?).map_err(|e| bad("domain", s, e))?
        }
        None if command == Command::Antiperiodic => Interval { a: -1.0, b: 1.0 },
        None => Interval::periodic_cell(),
    };
    let delta = match get("delta") {
        Some(s) => parse_real("delta", s)?,
        None => 3.0,
    };
    if !(delta > 0.0) {
        return Err(bad("delta", get("delta").unwrap_or(""), "horizon must be positive"));
    }
    let kernel_spec = get("kernel").map(str::to_string);
    let kernel = build_kernel(kernel_spec.as_deref(), delta).map_err(|e| bad("kernel", get("kernel").unwrap_or(""), e))?;

    let times = match get("times") {
        Some(s) => s
            .split(',')
            .map(|t| {
                let t = parse_real("times", t)?;
                if t < 0.0 {
                    return Err(bad("times", s, "times must be nonnegative"));
                }
                Ok(t)
            })
            .collect::<Result<Vec<_>, _>>()?,
        None => vec![1.0],
    };
    let modes = get("modes").map(|s| parse_usize("modes", s)).transpose()?;
    let format = match get("format") {
        None | Some("csv") => Format::Csv,
        Some("json") => Format::Json,
        Some(s) => return Err(bad("format", s, "expected csv or json")),
    };
    let output_dir = PathBuf::from(get("out").unwrap_or("."));
    let emit_plot_script = get("plot").map(|s| parse_bool("plot", s)).transpose()?.unwrap_or(false);
    let parity = match get("parity") {
        None => None,
        Some("all") => Some(Parity::All),
        Some("even") => Some(Parity::EvenOnly),
        Some("odd") => Some(Parity::OddOnly),
        Some(s) => return Err(bad("parity", s, "expected all, even or odd")),
    };
    if parity.is_some() && basis != Basis::Chebyshev {
        return Err(CliError::Usage("`parity` applies to the Chebyshev basis only".into()));
    }
    let center = get("center").map(|s| parse_real("center", s)).transpose()?.unwrap_or(0.0);
    let rho = get("rho").map(|s| parse_real("rho", s)).transpose()?.unwrap_or(1.0);
    if !(rho > 0.0) {
        return Err(bad("rho", get("rho").unwrap_or(""), "density must be positive"));
    }
    let levels = get("levels").map(|s| parse_usize("levels", s)).transpose()?.unwrap_or(5);
    if levels == 0 {
        return Err(bad("levels", "0", "need at least one level"));
    }
    let oracle = match get("oracle") {
        None if command == Command::Antiperiodic => Oracle::SelfRefinement(DEFAULT_REFERENCE_N),
        None | Some("multiplier") => Oracle::Multiplier,
        Some(s) => match s.strip_prefix("self:") {
            Some(r) => Oracle::SelfRefinement(parse_usize("oracle", r)?),
            None => return Err(bad("oracle", s, "expected multiplier or self:<n>")),
        },
    };

    let cfg = RunConfig {
        command,
        kernel_spec,
        delta,
        n,
        basis,
        bc,
        domain,
        times,
        modes,
        output_dir,
        format,
        emit_plot_script,
        parity,
        center,
        rho,
        levels,
        oracle,
    };
    let problem = cfg.problem_with(kernel).map_err(|e| CliError::Usage(e.to_string()))?;
    validate_command(&cfg, &problem)?;
    Ok(cfg)
}

fn validate_command(cfg: &RunConfig, problem: &SpectralProblem) -> Result<(), CliError> {
    let top = cfg.n << (cfg.levels - 1);
    match (cfg.command, cfg.oracle) {
        (Command::Converge, Oracle::SelfRefinement(r)) if r <= top => {
            return Err(CliError::Usage(format!("reference N = {r} must exceed the largest level N = {top}")))
        }
        (Command::Antiperiodic, Oracle::SelfRefinement(r)) if r < cfg.n || r % 2 != 0 => {
            return Err(CliError::Usage(format!("reference N = {r} must be even and at least N = {}", cfg.n)))
        }
        (Command::Antiperiodic, Oracle::Multiplier) => {
            return Err(CliError::Usage("`antiperiodic` compares against a self-refined reference (self:<n>)".into()))
        }
        (Command::Antiperiodic, _) if cfg.n < 3 => {
            return Err(CliError::Usage(format!("antiperiodic problem needs n >= 3, got {}", cfg.n)))
        }
        (Command::Multipliers, _) if problem.domain != Interval::periodic_cell() => {
            return Err(CliError::Usage("`multipliers` runs on the periodic cell [0, 2pi]".into()))
        }
        _ => {}
    }
    if let Some(m) = cfg.modes {
        if cfg.command == Command::Evolve && m > cfg.basis_size() {
            return Err(CliError::Usage(format!("{m} modes requested but the basis has {} functions", cfg.basis_size())));
        }
    }
    Ok(())
}

fn build_kernel(spec: Option<&str>, delta: f64) -> crate::Result<Micromodulus> {
    match spec {
        None => Ok(Micromodulus::benchmark(delta)),
        Some(s) => Micromodulus::from_spec(s, delta),
    }
}

impl RunConfig {
    pub fn kernel(&self) -> crate::Result<Micromodulus> {
        build_kernel(self.kernel_spec.as_deref(), self.delta)
    }

    pub fn problem(&self) -> crate::Result<SpectralProblem> {
        self.problem_with(self.kernel()?)
    }

    fn problem_with(&self, kernel: Micromodulus) -> crate::Result<SpectralProblem> {
        SpectralProblem::new(self.domain, self.n, kernel, self.basis, self.bc)
    }

    fn effective_parity(&self) -> Parity {
        self.parity.unwrap_or_else(|| Parity::for_bc(self.bc))
    }

    fn basis_size(&self) -> usize {
        match self.basis {
            Basis::Fourier => self.n + 1,
            Basis::Chebyshev => chebyshev::ChebBasisSpec { n: self.n, parity: self.effective_parity(), domain: self.domain }
                .indices()
                .len(),
        }
    }

    /// Resolved settings in a fixed order, as written to output headers.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let kernel = self
            .kernel_spec
            .clone()
            .unwrap_or_else(|| format!("gaussian:{}:1", 4.0 / PI.sqrt()));
        let parity = match self.basis {
            Basis::Fourier => "none",
            Basis::Chebyshev => match self.effective_parity() {
                Parity::All => "all",
                Parity::EvenOnly => "even",
                Parity::OddOnly => "odd",
            },
        };
        let oracle = match self.oracle {
            Oracle::Multiplier => "multiplier".to_string(),
            Oracle::SelfRefinement(n) => format!("self:{n}"),
        };
        vec![
            ("command", self.command.name().to_string()),
            ("basis", format!("{:?}", self.basis).to_lowercase()),
            ("bc", format!("{:?}", self.bc).to_lowercase()),
            ("kernel", kernel),
            ("delta", self.delta.to_string()),
            ("n", self.n.to_string()),
            ("domain", format!("{}:{}", self.domain.a, self.domain.b)),
            ("times", self.times.iter().map(f64::to_string).collect::<Vec<_>>().join(",")),
            ("modes", self.modes.map_or("all".into(), |m| m.to_string())),
            ("format", if self.format == Format::Csv { "csv" } else { "json" }.into()),
            ("out", self.output_dir.display().to_string()),
            ("plot", self.emit_plot_script.to_string()),
            ("parity", parity.into()),
            ("center", self.center.to_string()),
            ("rho", self.rho.to_string()),
            ("levels", self.levels.to_string()),
            ("oracle", oracle),
        ]
    }

    fn header(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "# {k} = {v}");
        }
        s
    }
}

#[derive(Debug, Clone, Copy)]
enum Cell {
    Int(usize),
    Real(f64),
    Empty,
}

/// One output table, rendered as CSV or as a JSON object of columns.
struct Table {
    name: String,
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

fn sig_number(x: f64, digits: usize) -> Number {
    let text = analysis::format_sig(x, digits);
    Number::from_str(&text).expect("formatted float is valid JSON")
}

fn json_cell(c: Cell) -> serde_json::Value {
    match c {
        Cell::Int(i) => serde_json::Value::from(i),
        Cell::Real(x) if x.is_finite() => serde_json::Value::Number(sig_number(x, JSON_DIGITS)),
        Cell::Real(_) | Cell::Empty => serde_json::Value::Null,
    }
}

impl Table {
    fn csv(&self, header: &str) -> String {
        let mut s = header.to_string();
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Int(i) => i.to_string(),
                    Cell::Real(x) => analysis::format_sig(*x, CSV_DIGITS),
                    Cell::Empty => String::new(),
                })
                .collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    fn json_columns(&self) -> serde_json::Map<String, serde_json::Value> {
        self.columns
            .iter()
            .enumerate()
            .map(|(j, c)| (c.clone(), serde_json::Value::Array(self.rows.iter().map(|r| json_cell(r[j])).collect())))
            .collect()
    }
}

#[derive(Serialize)]
struct EigenJson {
    config: serde_json::Map<String, serde_json::Value>,
    eigenvalues: Vec<Number>,
    eigenvectors: Vec<Vec<Number>>,
    basis_labels: Vec<String>,
}

#[derive(Serialize)]
struct TablesJson {
    config: serde_json::Map<String, serde_json::Value>,
    tables: serde_json::Map<String, serde_json::Value>,
}

fn config_json(cfg: &RunConfig) -> serde_json::Map<String, serde_json::Value> {
    cfg.entries().into_iter().map(|(k, v)| (k.to_string(), serde_json::Value::String(v))).collect()
}

struct Output<'a> {
    cfg: &'a RunConfig,
    written: Vec<PathBuf>,
}

impl Output<'_> {
    fn write(&mut self, name: &str, contents: &str) -> crate::Result<()> {
        let path = self.cfg.output_dir.join(name);
        let mut f = fs::File::create(&path)?;
        f.write_all(contents.as_bytes())?;
        self.written.push(path);
        Ok(())
    }

    fn tables(&mut self, stem: &str, tables: &[Table]) -> crate::Result<()> {
        match self.cfg.format {
            Format::Csv => {
                let header = self.cfg.header();
                for t in tables {
                    self.write(&format!("{}.csv", t.name), &t.csv(&header))?;
                }
                Ok(())
            }
            Format::Json => {
                let doc = TablesJson {
                    config: config_json(self.cfg),
                    tables: tables
                        .iter()
                        .map(|t| (t.name.clone(), serde_json::Value::Object(t.json_columns())))
                        .collect(),
                };
                let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Numerical(e.to_string()))?;
                self.write(&format!("{stem}.json"), &(text + "\n"))
            }
        }
    }
}

fn spectrum_table(name: &str, values: &[f64], nu: impl Fn(usize) -> usize) -> Table {
    Table {
        name: name.into(),
        columns: vec!["k".into(), "nu".into(), "lambda".into()],
        rows: values.iter().enumerate().map(|(k, v)| vec![Cell::Int(k), Cell::Int(nu(k)), Cell::Real(*v)]).collect(),
    }
}

fn solve(cfg: &RunConfig, problem: &SpectralProblem) -> crate::Result<EigenDecomposition> {
    match problem.basis {
        Basis::Fourier => analysis::solve_problem(problem, None),
        Basis::Chebyshev => analysis::solve_problem(problem, Some(cfg.effective_parity())),
    }
}

fn run_multipliers(cfg: &RunConfig, out: &mut Output<'_>) -> crate::Result<Vec<String>> {
    let kernel = cfg.kernel()?;
    let nu_max = (cfg.n / 2).max(1) as f64;
    let curve = kernel.multiplier_curve(0.0, nu_max, CURVE_SAMPLES)?;
    let exact = Table {
        name: "multipliers".into(),
        columns: vec!["nu".into(), "lambda".into()],
        rows: curve.iter().map(|s| vec![Cell::Real(s.nu), Cell::Real(s.lambda)]).collect(),
    };
    let fourier_problem = SpectralProblem::fourier(kernel.clone(), cfg.n)?;
    let fd = fourier::eigen_fourier(&fourier_problem)?;
    let cheb_problem = SpectralProblem::chebyshev(kernel, cfg.n, Interval::periodic_cell(), BoundaryCondition::Periodic)?;
    let cd = chebyshev::eigen_with_parity(&cheb_problem, cfg.parity.unwrap_or(Parity::All))?;
    out.tables(
        "multipliers",
        &[
            exact,
            spectrum_table("fourier_spectrum", &fd.values, |k| fd.basis_labels[index_of(&fd, k)].index()),
            spectrum_table("chebyshev_spectrum", &cd.values, |k| k.div_ceil(2)),
        ],
    )?;
    Ok(vec!["multipliers".into(), "fourier_spectrum".into(), "chebyshev_spectrum".into()])
}

/// Basis position of the dominant coefficient of eigenvector `k`.
fn index_of(d: &EigenDecomposition, k: usize) -> usize {
    let w = &d.vectors[k];
    (0..w.len()).fold(0, |best, i| if w[i].abs() > w[best].abs() { i } else { best })
}

fn run_eigen(cfg: &RunConfig, out: &mut Output<'_>) -> crate::Result<Vec<String>> {
    let d = solve(cfg, &cfg.problem()?)?;
    match cfg.format {
        Format::Csv => {
            let mut header = cfg.header();
            let labels: Vec<String> = d.basis_labels.iter().map(ToString::to_string).collect();
            let _ = writeln!(header, "# basis_labels = {}", labels.join(" "));
            let mut columns = vec!["k".to_string(), "eigenvalue".to_string()];
            columns.extend(labels);
            let rows = d
                .values
                .iter()
                .zip(&d.vectors)
                .enumerate()
                .map(|(k, (v, w))| {
                    let mut row = vec![Cell::Int(k), Cell::Real(*v)];
                    row.extend(w.iter().map(|c| Cell::Real(*c)));
                    row
                })
                .collect();
            let t = Table { name: "eigen".into(), columns, rows };
            out.write("eigen.csv", &t.csv(&header))?;
        }
        Format::Json => {
            let doc = EigenJson {
                config: config_json(cfg),
                eigenvalues: d.values.iter().map(|v| sig_number(*v, JSON_DIGITS)).collect(),
                eigenvectors: d.vectors.iter().map(|w| w.iter().map(|c| sig_number(*c, JSON_DIGITS)).collect()).collect(),
                basis_labels: d.basis_labels.iter().map(ToString::to_string).collect(),
            };
            let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Numerical(e.to_string()))?;
            out.write("eigen.json", &(text + "\n"))?;
        }
    }
    Ok(vec!["eigen".into()])
}

fn run_converge(cfg: &RunConfig, out: &mut Output<'_>) -> crate::Result<Vec<String>> {
    let problem = cfg.problem()?;
    let ns: Vec<usize> = (0..cfg.levels).map(|i| cfg.n << i).collect();
    let parity = (cfg.basis == Basis::Chebyshev).then(|| cfg.effective_parity());
    let rows: Vec<ConvergenceRow> = analysis::convergence_study(&problem, &ns, cfg.oracle, parity)?;
    let name = format!("converge_{}", format!("{:?}", cfg.basis).to_lowercase());
    let t = Table {
        name: name.clone(),
        columns: vec!["N".into(), "error".into(), "rate".into()],
        rows: rows
            .iter()
            .map(|r| vec![Cell::Int(r.n), Cell::Real(r.error), r.rate.map_or(Cell::Empty, Cell::Real)])
            .collect(),
    };
    out.tables(&name, &[t])?;
    Ok(vec![name])
}

fn run_antiperiodic(cfg: &RunConfig, out: &mut Output<'_>) -> crate::Result<Vec<String>> {
    let kernel = cfg.kernel()?;
    let n_ref = match cfg.oracle {
        Oracle::SelfRefinement(r) => r,
        Oracle::Multiplier => DEFAULT_REFERENCE_N,
    };
    let d = chebyshev::antiperiodic_eigen(&kernel, cfg.domain, cfg.n)?;
    let r = chebyshev::antiperiodic_eigen(&kernel, cfg.domain, n_ref)?;
    let m = d.len().min(r.len());
    let values = Table {
        name: "antiperiodic".into(),
        columns: vec!["k".into(), "lambda_n".into(), "lambda_ref".into(), "rel_diff".into()],
        rows: (0..m)
            .map(|k| {
                let rel = if r.values[k] != 0.0 { ((d.values[k] - r.values[k]) / r.values[k]).abs() } else { 0.0 };
                vec![Cell::Int(k), Cell::Real(d.values[k]), Cell::Real(r.values[k]), Cell::Real(rel)]
            })
            .collect(),
    };
    let shown = cfg.modes.unwrap_or(4).min(d.len());
    let mut columns = vec!["x".to_string()];
    columns.extend((0..shown).map(|k| format!("w{k}")));
    let mesh = Mesh::gcl(SNAPSHOT_POINTS, cfg.domain)?;
    let modes = Table {
        name: "antiperiodic_modes".into(),
        columns,
        rows: mesh
            .nodes
            .iter()
            .map(|&x| {
                let mut row = vec![Cell::Real(x)];
                row.extend((0..shown).map(|k| Cell::Real(d.evaluate(k, x).unwrap_or(f64::NAN))));
                row
            })
            .collect(),
    };
    out.tables("antiperiodic", &[values, modes])?;
    Ok(vec!["antiperiodic".into(), "antiperiodic_modes".into()])
}

fn time_label(t: f64) -> String {
    t.to_string()
}

fn run_evolve(cfg: &RunConfig, out: &mut Output<'_>) -> crate::Result<Vec<String>> {
    let problem = cfg.problem()?;
    let d = solve(cfg, &problem)?;
    let modes = cfg.modes.unwrap_or(d.len());
    let quad_n = (4 * d.len()).max(1024);
    let u0 = dynamics::gaussian_pulse(cfg.center);
    let v0 = |_: f64| 0.0;
    let sol: ModalSolution = dynamics::project_initial(&d, &u0, &v0, modes, quad_n, cfg.rho)?;
    let mesh = match cfg.basis {
        Basis::Fourier => quadrature::uniform_mesh(cfg.domain.a, cfg.domain.b, SNAPSHOT_POINTS)?,
        Basis::Chebyshev => Mesh::gcl(SNAPSHOT_POINTS, cfg.domain)?,
    };
    let tables: Vec<Table> = cfg
        .times
        .iter()
        .map(|&t| {
            let u = dynamics::snapshot(&sol, &mesh, t);
            Table {
                name: format!("snapshot_t{}", time_label(t)),
                columns: vec!["x".into(), "u".into()],
                rows: mesh.nodes.iter().zip(u).map(|(x, u)| vec![Cell::Real(*x), Cell::Real(u)]).collect(),
            }
        })
        .collect();
    out.tables("evolve", &tables)?;
    Ok(tables.into_iter().map(|t| t.name).collect())
}

fn plot_script(cfg: &RunConfig, tables: &[String]) -> String {
    let mut s = cfg.header();
    s.push_str("set datafile separator ','\nset key autotitle columnheader\nset grid\n");
    let file = |t: &str| format!("'{t}.csv'");
    match cfg.command {
        Command::Multipliers => {
            let _ = writeln!(s, "set xlabel 'frequency'\nset ylabel 'eigenvalue'");
            let _ = writeln!(
                s,
                "plot {} using 1:2 with lines, {} using 2:3 with points pt 7, {} using 2:3 with points pt 6",
                file(&tables[0]),
                file(&tables[1]),
                file(&tables[2])
            );
        }
        Command::Eigen => {
            let _ = writeln!(s, "set xlabel 'k'\nset ylabel 'eigenvalue'\nplot {} using 1:2 with linespoints", file("eigen"));
        }
        Command::Converge => {
            let _ = writeln!(
                s,
                "set logscale xy\nset xlabel 'N'\nset ylabel 'relative error'\nplot {} using 1:2 with linespoints",
                file(&tables[0])
            );
        }
        Command::Antiperiodic => {
            let _ = writeln!(
                s,
                "set xlabel 'k'\nset ylabel 'eigenvalue'\nplot {f} using 1:2 with points pt 7, {f} using 1:3 with lines",
                f = file(&tables[0])
            );
        }
        Command::Evolve => {
            let _ = writeln!(s, "set xlabel 'x'\nset ylabel 'u'");
            let parts: Vec<String> = tables.iter().map(|t| format!("{} using 1:2 with lines", file(t))).collect();
            let _ = writeln!(s, "plot {}", parts.join(", "));
        }
    }
    s
}

/// Executes a validated configuration; returns the files written.
pub fn run(cfg: &RunConfig) -> crate::Result<Vec<PathBuf>> {
    fs::create_dir_all(&cfg.output_dir)?;
    let mut out = Output { cfg, written: Vec::new() };
    let tables = match cfg.command {
        Command::Multipliers => run_multipliers(cfg, &mut out)?,
        Command::Eigen => run_eigen(cfg, &mut out)?,
        Command::Converge => run_converge(cfg, &mut out)?,
        Command::Antiperiodic => run_antiperiodic(cfg, &mut out)?,
        Command::Evolve => run_evolve(cfg, &mut out)?,
    };
    if cfg.emit_plot_script {
        let script = plot_script(cfg, &tables);
        out.write("plot.gp", &script)?;
    }
    Ok(out.written)
}

/// Entry point shared by the binary: parse, run, report. Returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    match Cli::try_parse_from(&args) {
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return 0;
        }
        _ => {}
    }
    let result = parse_config(args).and_then(|cfg| run(&cfg).map_err(CliError::from));
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &str) -> Result<RunConfig, CliError> {
        parse_config(std::iter::once("nonlocal-spectral").chain(args.split_whitespace()))
    }

    #[test]
    fn benchmark_flags() {
        let c = parse("eigen --basis fourier --kernel gaussian:2.2568:1 --delta 3 --n 20").unwrap();
        assert_eq!(c.command, Command::Eigen);
        assert_eq!(c.n, 20);
        assert_eq!(c.basis, Basis::Fourier);
        assert_eq!(c.domain, Interval::periodic_cell());
        let k = c.kernel().unwrap();
        assert!((k.beta() - 4.0).abs() < 1e-3);
    }

    #[test]
    fn usage_errors() {
        assert_eq!(parse("eigen --basis fourier").unwrap_err().exit_code(), 2);
        let e = parse("eigen --n 21 --basis fourier").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(parse("eigen --n 20 --format xml").unwrap_err().to_string().contains("format"));
        assert!(parse("eigen --n 20 --domain 0:1").is_err());
        assert!(parse("eigen --n 20 --parity even").is_err());
        assert!(parse("converge --n 20 --levels 3 --oracle self:80").is_err());
        assert!(parse("bogus --n 20").is_err());
    }

    #[test]
    fn config_file_and_overrides() {
        let m = parse_config_file("# comment\nn = 20\nbasis = chebyshev  # trailing\n\ndelta=1\n").unwrap();
        assert_eq!(m["n"], "20");
        assert_eq!(m["basis"], "chebyshev");
        assert_eq!(m["delta"], "1");
        assert!(parse_config_file("colour = red").unwrap_err().to_string().contains("colour"));
        assert!(parse_config_file("just words").is_err());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(&path, "n = 40\ndelta = 1\ndomain = 0:2pi\n").unwrap();
        let c = parse(&format!("eigen --config {} --n 20", path.display())).unwrap();
        assert_eq!(c.n, 20);
        assert_eq!(c.delta, 1.0);
        assert!((c.domain.b - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn antiperiodic_defaults() {
        let c = parse("antiperiodic --n 50 --delta 1").unwrap();
        assert_eq!(c.basis, Basis::Chebyshev);
        assert_eq!(c.bc, BoundaryCondition::Antiperiodic);
        assert_eq!(c.domain, Interval { a: -1.0, b: 1.0 });
        assert_eq!(c.oracle, Oracle::SelfRefinement(200));
    }

    #[test]
    fn real_parsing() {
        assert_eq!(parse_real("x", "2pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_real("x", "-pi").unwrap(), -PI);
        assert_eq!(parse_real("x", "0.5").unwrap(), 0.5);
        assert!(parse_real("x", "abc").is_err());
        assert!(parse_real("x", "inf").is_err());
    }

    #[test]
    fn csv_header_records_config() {
        let c = parse("eigen --n 4").unwrap();
        let t = Table { name: "t".into(), columns: vec!["k".into()], rows: vec![vec![Cell::Int(1)]] };
        let text = t.csv(&c.header());
        assert!(text.starts_with("# command = eigen\n"));
        assert!(text.contains("# n = 4\n"));
        assert!(text.ends_with("k\n1\n"));
    }

    #[test]
    fn json_numbers_have_17_digits() {
        let n = sig_number(0.1, JSON_DIGITS);
        assert_eq!(n.to_string(), "1.0000000000000001e-1");
    }
}

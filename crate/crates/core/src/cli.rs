//! Configuration and command dispatch.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bubbles::{bubble, bubble_scan, default_exponent, instanton, scan_slopes, BubbleSpec};
use crate::constants::{
    choquard_constant, sobolev_constant, sobolev_constant_closed_form, ConstantsReport, ProblemParams,
};
use crate::error::{Error, Result};
use crate::io;
use crate::level::{minimize_constraint, minimize_nehari, verify_constraint_level, verify_nehari_level, SolverOptions};
use crate::profiles::random_profiles;
use crate::radial::{dirichlet_energy, mass_norm, power_integral, RadialField, RadialGrid, SharedGrid};
use crate::riesz::{newton_oracle, KernelMatrix};
use crate::variational::{energy_breakdown, fibering_root};

pub const DEFAULT_EPS: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];
/// Bubbles must be concentrated enough for H(t v_ε) = 1 to be solvable.
pub const DEFAULT_CONSTRAINT_EPS: [f64; 4] = [0.01, 0.005, 0.0025, 0.00125];
pub const DEFAULT_OUTPUT_DIR: &str = "choquard-output";
pub const THREADS_ENV: &str = "CHOQUARD_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Constants,
    BubbleScan,
    Fibering,
    LevelCheck,
    ConstraintCheck,
    Solve,
    Oracle,
}

impl Command {
    /// Everything except the constants table and the oracles needs the
    /// parameters inside the existence regime.
    pub fn requires_regime(self) -> bool {
        !matches!(self, Command::Constants | Command::Oracle)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum OracleTest {
    Newton,
    Hls,
    Sobolev,
    #[default]
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Problem {
    #[default]
    Nehari,
    Constraint,
}

#[derive(Debug, Parser)]
#[command(
    name = "choquard",
    version,
    about = "Radial numerics for the critical Choquard equation"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Space dimension N.
    #[arg(long)]
    pub n: Option<u32>,
    /// Riesz order α in (0, N).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Local exponent q in (2, 2N/(N-2)).
    #[arg(long)]
    pub q: Option<f64>,
    /// Comma-separated, strictly decreasing.
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// Exponent s in σ = ε^s (N = 4).
    #[arg(long)]
    pub s: Option<f64>,
    /// rMin,rMax,M
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<GridConfig>,
    /// Field CSV with columns r,value.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Output directory [default: choquard-output].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Oracle selection.
    #[arg(long, value_enum, default_value_t)]
    pub test: OracleTest,
    /// Seed for the random test profiles.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Minimization problem for `solve`.
    #[arg(long, value_enum, default_value_t)]
    pub problem: Problem,
}

impl std::fmt::Display for OracleTest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.to_possible_value().expect("no skipped variants").get_name())
    }
}

impl std::fmt::Display for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.to_possible_value().expect("no skipped variants").get_name())
    }
}

fn parse_grid(s: &str) -> std::result::Result<GridConfig, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected rMin,rMax,M, got {s:?}"));
    }
    let num = |t: &str| t.parse::<f64>().map_err(|_| format!("cannot parse {t:?} as a number"));
    Ok(GridConfig {
        r_min: num(parts[0])?,
        r_max: num(parts[1])?,
        nodes: parts[2]
            .parse()
            .map_err(|_| format!("cannot parse {:?} as a node count", parts[2]))?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct GridConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub nodes: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            r_min: 1e-6,
            r_max: 1e4,
            nodes: 2048,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(alias = "N")]
    pub n: u32,
    pub alpha: f64,
    pub q: f64,
    pub grid: GridConfig,
    pub eps_list: Option<Vec<f64>>,
    pub s_exponent: Option<f64>,
    pub solver: SolverOptions,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 5,
            alpha: 2.0,
            q: 3.0,
            grid: GridConfig::default(),
            eps_list: None,
            s_exponent: None,
            solver: SolverOptions::default(),
            output_dir: None,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn params(&self) -> Result<ProblemParams> {
        ProblemParams::new(self.n, self.alpha, self.q).map_err(|e| match e {
            Error::Domain(msg) => Error::Config(msg),
            other => other,
        })
    }

    pub fn grid(&self) -> Result<SharedGrid> {
        Ok(RadialGrid::new(self.n, self.grid.r_min, self.grid.r_max, self.grid.nodes)?.shared())
    }

    /// The configured ε list, or the default for the command.
    pub fn eps_for(&self, cmd: Command) -> Vec<f64> {
        match (&self.eps_list, cmd) {
            (Some(list), _) => list.clone(),
            (None, Command::ConstraintCheck) => DEFAULT_CONSTRAINT_EPS.to_vec(),
            (None, _) => DEFAULT_EPS.to_vec(),
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }
}

/// Flag values that take precedence over the configuration document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub n: Option<u32>,
    pub alpha: Option<f64>,
    pub q: Option<f64>,
    pub eps: Option<Vec<f64>>,
    pub s: Option<f64>,
    pub grid: Option<GridConfig>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl From<&Cli> for Overrides {
    fn from(cli: &Cli) -> Self {
        Self {
            n: cli.n,
            alpha: cli.alpha,
            q: cli.q,
            eps: cli.eps.clone(),
            s: cli.s,
            grid: cli.grid,
            out: cli.out.clone(),
            seed: cli.seed,
        }
    }
}

/// Parses a JSON document (empty means all defaults), applies the flag
/// overrides and validates the result.
pub fn parse_config(document: &str, overrides: &Overrides, require_regime: bool) -> Result<RunConfig> {
    let mut cfg = if document.trim().is_empty() {
        RunConfig::default()
    } else {
        let mut de = serde_json::Deserializer::from_str(document);
        serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config(format!("at `{path}`: {}", e.into_inner()))
        })?
    };
    if let Some(n) = overrides.n {
        cfg.n = n;
    }
    if let Some(a) = overrides.alpha {
        cfg.alpha = a;
    }
    if let Some(q) = overrides.q {
        cfg.q = q;
    }
    if let Some(eps) = &overrides.eps {
        cfg.eps_list = Some(eps.clone());
    }
    if let Some(s) = overrides.s {
        cfg.s_exponent = Some(s);
    }
    if let Some(g) = overrides.grid {
        cfg.grid = g;
    }
    if let Some(out) = &overrides.out {
        cfg.output_dir = Some(out.clone());
    }
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    validate(&cfg, require_regime)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig, require_regime: bool) -> Result<()> {
    let params = cfg.params()?;
    cfg.grid()?;
    cfg.solver.validate()?;
    if let Some(list) = &cfg.eps_list {
        if list.is_empty() {
            return Err(Error::Config("at `epsList`: list is empty".into()));
        }
        if let Some(e) = list.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(Error::Config(format!("at `epsList`: values must be positive, got {e}")));
        }
        if list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("at `epsList`: values must be strictly decreasing".into()));
        }
    }
    if let Some(s) = cfg.s_exponent {
        if params.n() != 4 {
            return Err(Error::Config(format!(
                "at `sExponent`: only used for N = 4, got N = {}",
                params.n()
            )));
        }
        let (lo, hi) = (4.0 - params.q(), params.q() - 2.0);
        if require_regime && !(s > lo && s < hi) {
            return Err(Error::Config(format!("at `sExponent`: need {lo} < s < {hi}, got {s}")));
        }
    }
    if require_regime {
        params.require_existence_regime()?;
    }
    Ok(())
}

pub fn load_config(path: Option<&Path>, overrides: &Overrides, require_regime: bool) -> Result<RunConfig> {
    let document = match path {
        Some(p) => fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
        None => String::new(),
    };
    parse_config(&document, overrides, require_regime)
}

/// Command-specific inputs that are not part of [`RunConfig`].
#[derive(Debug, Clone, Default)]
pub struct CommandOptions {
    pub input: Option<PathBuf>,
    pub test: OracleTest,
    pub problem: Problem,
}

/// Result of a command: the main report and the files written.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    pub report: Value,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

pub fn write_report<T: Serialize + ?Sized>(report: &T, path: &Path) -> Result<()> {
    io::write_json(report, path)
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Data(format!("cannot serialize report: {e}")))
}

pub fn run_command(cmd: Command, cfg: &RunConfig, opts: &CommandOptions) -> Result<Outcome> {
    let params = cfg.params()?;
    if cmd.requires_regime() {
        params.require_existence_regime()?;
    }
    let out = cfg.output_dir();
    match cmd {
        Command::Constants => {
            let report = json!({
                "params": { "n": params.n(), "alpha": params.alpha(), "p": params.p(), "q": params.q() },
                "constants": ConstantsReport::compute(&params)?,
            });
            let path = out.join("constants.json");
            write_report(&report, &path)?;
            Ok(Outcome {
                passed: true,
                report,
                files: vec![path],
            })
        }
        Command::BubbleScan => run_bubble_scan(cfg, &params, &out),
        Command::Fibering => run_fibering(cfg, &params, opts, &out),
        Command::LevelCheck => {
            let grid = cfg.grid()?;
            let kernel = KernelMatrix::build(&grid, params.alpha())?;
            let r = verify_nehari_level(&params, &grid, &kernel, &cfg.eps_for(cmd), cfg.s_exponent)?;
            let path = out.join("level_report.json");
            write_report(&r, &path)?;
            Ok(Outcome {
                passed: r.passed,
                report: to_value(&r)?,
                files: vec![path],
            })
        }
        Command::ConstraintCheck => {
            let grid = cfg.grid()?;
            let kernel = KernelMatrix::build(&grid, params.alpha())?;
            let r = verify_constraint_level(&params, &grid, &kernel, &cfg.eps_for(cmd), cfg.s_exponent)?;
            let path = out.join("constraint_report.json");
            write_report(&r, &path)?;
            Ok(Outcome {
                passed: r.passed,
                report: to_value(&r)?,
                files: vec![path],
            })
        }
        Command::Solve => run_solve(cfg, &params, opts, &out),
        Command::Oracle => run_oracle(cfg, &params, opts.test, &out),
    }
}

/// Expected log-log slopes of D and C along the scan, with the tolerance.
pub fn expected_slopes(params: &ProblemParams, s_exponent: Option<f64>) -> (f64, f64, f64) {
    let (nf, q) = (params.n() as f64, params.q());
    if params.n() == 4 {
        let s = s_exponent.unwrap_or_else(|| default_exponent(params));
        (2.0 - s, 4.0 - q, 0.1)
    } else {
        (2.0, (2.0 * nf - q * (nf - 2.0)) / 2.0, 0.05)
    }
}

fn run_bubble_scan(cfg: &RunConfig, params: &ProblemParams, out: &Path) -> Result<Outcome> {
    let grid = cfg.grid()?;
    let kernel = KernelMatrix::build(&grid, params.alpha())?;
    let s = if params.n() == 4 {
        Some(cfg.s_exponent.unwrap_or_else(|| default_exponent(params)))
    } else {
        None
    };
    let rows = bubble_scan(&grid, &kernel, params, &cfg.eps_for(Command::BubbleScan), s)?;
    let slopes = scan_slopes(&rows)?;
    let (d_expected, c_expected, tol) = expected_slopes(params, s);
    let within = |fit: Option<crate::bubbles::SlopeFit>, want: f64| fit.is_some_and(|f| (f.slope - want).abs() <= tol);
    let passed = within(slopes.d, d_expected) && within(slopes.c, c_expected);
    let report = json!({
        "sExponent": s,
        "slopes": slopes,
        "expected": { "d": d_expected, "c": c_expected, "tolerance": tol },
        "passed": passed,
    });
    let csv = out.join("bubble_scan.csv");
    let js = out.join("bubble_slopes.json");
    io::write_scan(&rows, &csv)?;
    write_report(&report, &js)?;
    Ok(Outcome {
        passed,
        report,
        files: vec![csv, js],
    })
}

fn run_fibering(cfg: &RunConfig, params: &ProblemParams, opts: &CommandOptions, out: &Path) -> Result<Outcome> {
    let input = opts
        .input
        .as_ref()
        .ok_or_else(|| Error::Config("fibering needs a field file (--in field.csv)".into()))?;
    let grid = cfg.grid()?;
    let u = io::read_field(input, &grid)?;
    let kernel = KernelMatrix::build(&grid, params.alpha())?;
    let f = fibering_root(&u, &kernel, params)?;
    let changes = f
        .g_samples
        .windows(2)
        .filter(|w| (w[0].1 > 0.0) != (w[1].1 > 0.0))
        .count();
    let report = json!({
        "tRoot": f.t_root,
        "tOne": f.t_one,
        "bracketLo": f.bracket_lo,
        "bracketHi": f.bracket_hi,
        "signChanges": changes,
        "passed": changes == 1,
    });
    let csv = out.join("fibering.csv");
    let js = out.join("fibering.json");
    let rows: Vec<Vec<f64>> = f.g_samples.iter().map(|(t, g)| vec![*t, *g]).collect();
    io::write_csv(&csv, &["t", "g"], &rows)?;
    write_report(&report, &js)?;
    Ok(Outcome {
        passed: changes == 1,
        report,
        files: vec![csv, js],
    })
}

fn run_solve(cfg: &RunConfig, params: &ProblemParams, opts: &CommandOptions, out: &Path) -> Result<Outcome> {
    let grid = cfg.grid()?;
    let kernel = KernelMatrix::build(&grid, params.alpha())?;
    let s = if params.n() == 4 {
        Some(cfg.s_exponent.unwrap_or_else(|| default_exponent(params)))
    } else {
        None
    };
    let (field, report) = match opts.problem {
        Problem::Nehari => {
            let start = match &opts.input {
                Some(path) => io::read_field(path, &grid)?,
                None => {
                    let eps = cfg.eps_for(Command::Solve)[0];
                    bubble(&grid, &crate::bubbles::spec_for(params, eps, s)?)?
                }
            };
            minimize_nehari(params, &kernel, &start, &cfg.solver)?
        }
        Problem::Constraint => {
            let start = match &opts.input {
                Some(path) => io::read_field(path, &grid)?,
                None => constraint_start(cfg, params, &grid, &kernel, s)?,
            };
            minimize_constraint(params, &kernel, &start, &cfg.solver)?
        }
    };
    let csv = out.join("solution.csv");
    let js = out.join("solve_report.json");
    io::write_field(&field, &csv)?;
    write_report(&report, &js)?;
    Ok(Outcome {
        passed: report.passed,
        report: to_value(&report)?,
        files: vec![csv, js],
    })
}

/// t_ε v_ε for the ε that gives the lowest T in the constraint check.
pub fn constraint_start(
    cfg: &RunConfig,
    params: &ProblemParams,
    grid: &SharedGrid,
    kernel: &KernelMatrix,
    s: Option<f64>,
) -> Result<RadialField> {
    let eps_list = match &cfg.eps_list {
        Some(l) => l.clone(),
        None => DEFAULT_CONSTRAINT_EPS.to_vec(),
    };
    let check = verify_constraint_level(params, grid, kernel, &eps_list, s)?;
    let eps = check.eps_used.expect("constraint check records the eps used");
    let sample = check
        .samples
        .iter()
        .find(|x| x.eps == eps)
        .expect("eps used is among the samples");
    let u = bubble(grid, &crate::bubbles::spec_for(params, eps, s)?)?;
    let critical = params.critical_exponent();
    let norm = power_integral(&u, critical)?.powf(1.0 / critical);
    u.scaled(sample.t.expect("feasible sample has t") / norm)
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OracleCheck {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl OracleCheck {
    fn relative(name: &str, value: f64, reference: f64, tolerance: f64) -> Self {
        let error = (value - reference).abs() / reference.abs();
        Self {
            name: name.into(),
            value,
            reference,
            error,
            tolerance,
            passed: error < tolerance,
        }
    }
}

pub const ORACLE_FIELDS: usize = 10;

/// Largest relative L² gap between the α = 2 kernel and Newton's formula
/// over seeded random fields.
pub fn newton_discrepancy(grid: &SharedGrid, kernel: &KernelMatrix, seed: u64, count: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for f in random_profiles(grid, seed, count, true)? {
        let k = kernel.apply(&f)?;
        let n = newton_oracle(&f)?;
        let diff = k.combine(1.0, &n, -1.0)?;
        worst = worst.max((mass_norm(&diff)? / mass_norm(&n)?).sqrt());
    }
    Ok(worst)
}

fn run_oracle(cfg: &RunConfig, params: &ProblemParams, test: OracleTest, out: &Path) -> Result<Outcome> {
    let grid = cfg.grid()?;
    let n = params.n();
    let mut checks = Vec::new();
    if matches!(test, OracleTest::Newton | OracleTest::All) {
        let kernel = KernelMatrix::build(&grid, 2.0)?;
        let worst = newton_discrepancy(&grid, &kernel, cfg.seed, ORACLE_FIELDS)?;
        checks.push(OracleCheck {
            name: "newton".into(),
            value: worst,
            reference: 0.0,
            error: worst,
            tolerance: 1e-6,
            passed: worst < 1e-6,
        });
    }
    if matches!(test, OracleTest::Hls | OracleTest::All) {
        let kernel = KernelMatrix::build(&grid, params.alpha())?;
        let s = sobolev_constant_closed_form(n)?;
        let c0 = choquard_constant(n, params.alpha())?;
        let extremal = c0 * s.powf((n as f64 + params.alpha()) / 2.0);
        for eps in [0.1, 0.3, 1.0] {
            let u = bubble(&grid, &BubbleSpec::new(n, eps, 0.0)?)?;
            let b = energy_breakdown(&u, &kernel, params)?.b;
            checks.push(OracleCheck::relative(
                &format!("hls-extremal-eps-{eps}"),
                b,
                extremal,
                5e-3,
            ));
        }
        let critical = params.critical_exponent();
        let mut worst = 0.0f64;
        for u in random_profiles(&grid, cfg.seed, ORACLE_FIELDS, true)? {
            let b = energy_breakdown(&u, &kernel, params)?.b;
            let norm = power_integral(&u, critical)?.powf(1.0 / critical);
            worst = worst.max(b / (c0 * norm.powf(2.0 * params.p())));
        }
        checks.push(OracleCheck {
            name: "hls-inequality".into(),
            value: worst,
            reference: 1.0,
            error: (worst - 1.0).max(0.0),
            tolerance: 0.0,
            passed: worst <= 1.0,
        });
    }
    if matches!(test, OracleTest::Sobolev | OracleTest::All) {
        let s = sobolev_constant(n)?;
        let target = s.powf(n as f64 / 2.0);
        let u = instanton(&grid)?;
        checks.push(OracleCheck::relative(
            "sobolev-gradient",
            dirichlet_energy(&u)?,
            target,
            5e-3,
        ));
        checks.push(OracleCheck::relative(
            "sobolev-critical-norm",
            power_integral(&u, params.critical_exponent())?,
            target,
            5e-3,
        ));
    }
    let passed = checks.iter().all(|c| c.passed);
    let report = json!({ "test": test.to_string(), "checks": checks, "passed": passed });
    let path = out.join("oracle_report.json");
    write_report(&report, &path)?;
    Ok(Outcome {
        passed,
        report,
        files: vec![path],
    })
}

/// Sizes the global worker pool from the environment, if requested.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|t| *t > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot size the worker pool: {e}")))
}

/// Runs a parsed command line; returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let run = || -> Result<Outcome> {
        configure_threads()?;
        let cfg = load_config(
            cli.config.as_deref(),
            &Overrides::from(cli),
            cli.command.requires_regime(),
        )?;
        let opts = CommandOptions {
            input: cli.input.clone(),
            test: cli.test,
            problem: cli.problem,
        };
        run_command(cli.command, &cfg, &opts)
    };
    match run() {
        Ok(outcome) => match io::to_json(&outcome.report) {
            Ok(text) => {
                print!("{text}");
                outcome.exit_code()
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

//! Command-line front end.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{validate_n, Config, DEFAULT_C, DEFAULT_GRID, DEFAULT_N};
use crate::error::{Result, SteklovError};
use crate::geometry::{build_quadrature, curve_from_spec, InteriorGrid};
use crate::layer::assemble_boundary_ops;
use crate::nodal::{boundary_zeros, field_on_grid, level_set_extract, FieldEvaluator, FieldKind};
use crate::oracle::{oracle_eigenvalue, oracle_layer_multiplier, theta_multiplier, LayerOp};
use crate::steklov::{cauchy_data, spectrum, write_traces, ProblemKind, SpectrumReport, SteklovSystem};
use crate::verify::{csv_row, run_suite, SuiteReport, CSV_HEADER};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "steklov", version, about = "Biharmonic Steklov spectra, identities and nodal sets on planar domains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Lowest eigenvalues of THETA, XI or PI on a domain
    Solve(SolveArgs),
    /// Closed-form disk eigenvalue and layer multipliers
    Oracle(OracleArgs),
    /// Nodal or level set of a reconstructed eigenfunction
    Nodal(NodalArgs),
    /// Run a verification suite
    Verify(VerifyArgs),
    /// Aggregate suite reports into one CSV table
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Problem {
    Theta,
    Xi,
    Pi,
}

impl From<Problem> for ProblemKind {
    fn from(p: Problem) -> Self {
        match p {
            Problem::Theta => ProblemKind::Theta,
            Problem::Xi => ProblemKind::Xi,
            Problem::Pi => ProblemKind::Pi,
        }
    }
}

#[derive(Args, Debug)]
pub struct DomainArgs {
    /// Domain: disk, ellipse:A,B, kite or star:EPS,M
    #[arg(long, default_value = "disk")]
    pub domain: String,
    /// Boundary quadrature nodes (even, 32..=512)
    #[arg(long, default_value_t = DEFAULT_N)]
    pub n: usize,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long, value_enum)]
    pub problem: Problem,
    #[command(flatten)]
    pub domain: DomainArgs,
    /// Number of eigenpairs (at most N/8)
    #[arg(long, default_value_t = 10)]
    pub modes: usize,
    /// Spectrum JSON output; standard output when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Eigenfunction traces as CSV
    #[arg(long)]
    pub traces: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long, value_enum)]
    pub problem: Problem,
    /// Angular frequency
    #[arg(long)]
    pub k: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Field {
    /// The eigenfunction e
    E,
    /// Its Laplacian
    Lap,
}

#[derive(Args, Debug)]
pub struct NodalArgs {
    #[arg(long, value_enum)]
    pub problem: Problem,
    /// Eigenpair index in ascending order, starting at 0
    #[arg(long)]
    pub mode_index: usize,
    /// Level of the extracted set
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Field whose level set is extracted
    #[arg(long, value_enum, default_value = "e")]
    pub field: Field,
    #[command(flatten)]
    pub domain: DomainArgs,
    /// Interior grid nodes along the longer side (3..=501)
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    /// Collar width [default: 0.02 × diameter]
    #[arg(long)]
    pub collar: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// symbols, layers, disk, identities, scaling or all
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[command(flatten)]
    pub domain: DomainArgs,
    /// Interior grid nodes along the longer side (3..=501)
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    /// Collar width [default: 0.02 × diameter]
    #[arg(long)]
    pub collar: Option<f64>,
    /// Admissibility constant
    #[arg(long, default_value_t = DEFAULT_C)]
    pub c: f64,
    /// Report JSON; standard output when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV summary, one row per check
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Omit run metadata so that repeated runs are byte-identical
    #[arg(long)]
    pub canonical: bool,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Directory holding suite report JSON files
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    configure_threads();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                SteklovError::InvalidConfig(_)
                | SteklovError::InvalidDomain(..)
                | SteklovError::InvalidQuadrature(_)
                | SteklovError::InvalidArgument(_) => EXIT_USAGE,
                _ => EXIT_FAIL,
            }
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("STEKLOV_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn run(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Solve(a) => solve(a),
        Command::Oracle(a) => oracle(a),
        Command::Nodal(a) => nodal(a),
        Command::Verify(a) => verify(a),
        Command::Report(a) => report(a),
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, format!("{text}\n"))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn solve(a: SolveArgs) -> Result<i32> {
    let curve = curve_from_spec(&a.domain.domain)?;
    validate_n(a.domain.n)?;
    let kind: ProblemKind = a.problem.into();
    let grid = build_quadrature(&curve, a.domain.n)?;
    let ops = assemble_boundary_ops(&curve, &grid)?;
    let sys = SteklovSystem::new(&ops)?;
    let op = sys.operator(kind, &ops);
    let pairs = spectrum(kind, &op, a.modes)?;
    let report = SpectrumReport::new(kind, &ops, &op, sys.condition_number, &pairs);
    emit(a.out.as_deref(), &serde_json::to_string_pretty(&report)?)?;
    if let Some(p) = a.traces {
        let mut f = std::io::BufWriter::new(fs::File::create(p)?);
        write_traces(&mut f, &ops, &pairs)?;
        f.flush()?;
    }
    Ok(EXIT_PASS)
}

fn oracle(a: OracleArgs) -> Result<i32> {
    let kind: ProblemKind = a.problem.into();
    let e = oracle_eigenvalue(kind, a.k);
    println!("problem = {kind}");
    println!("k = {}", a.k);
    println!("mu = {}", e.mu);
    println!("λ = {}", e.lambda);
    println!("multiplicity = {}", if a.k == 0 { 1 } else { 2 });
    println!("theta multiplier = {}", theta_multiplier(a.k));
    for op in [LayerOp::S1, LayerOp::S2, LayerOp::S3, LayerOp::N, LayerOp::Lambda] {
        println!("{op} multiplier = {}", oracle_layer_multiplier(op, a.k));
    }
    Ok(EXIT_PASS)
}

fn nodal(a: NodalArgs) -> Result<i32> {
    let cfg = Config {
        domain: a.domain.domain.clone(),
        n: a.domain.n,
        grid: a.grid,
        collar: a.collar,
        c: DEFAULT_C,
    };
    let curve = cfg.validate()?;
    let kind: ProblemKind = a.problem.into();
    if a.mode_index >= cfg.n / 8 {
        return Err(SteklovError::InvalidArgument(format!(
            "mode index must be below N/8 = {} (got {})",
            cfg.n / 8,
            a.mode_index
        )));
    }
    let grid = build_quadrature(&curve, cfg.n)?;
    let ops = assemble_boundary_ops(&curve, &grid)?;
    let sys = SteklovSystem::new(&ops)?;
    let op = sys.operator(kind, &ops);
    let pairs = spectrum(kind, &op, a.mode_index + 1)?;
    let pair = &pairs[a.mode_index];
    let cd = cauchy_data(kind, pair, &ops, Some(&sys.theta_small))?;
    let interior = InteriorGrid::new(&curve, cfg.grid, cfg.collar_for(&curve))?;
    let source = FieldEvaluator::new(&curve, &grid, &cd);
    let fields = field_on_grid(&source, &interior, false, false)?;
    let (fk, trace) = match (a.field, kind) {
        (Field::E, ProblemKind::Theta) => (FieldKind::E, &cd.u),
        (Field::E, _) => (FieldKind::E, &cd.dn_u),
        (Field::Lap, _) => (FieldKind::LapE, &cd.lap_u),
    };
    let scalar = fields.scalar(fk).expect("values are always sampled");
    let mut geom = level_set_extract(&scalar, a.alpha);
    let zeros = boundary_zeros(trace, geom.alpha);
    geom.bridge_to_boundary(&curve, &zeros.params, 2.0 * (interior.collar + 2.0 * interior.h));
    fs::write(&a.out, format!("{}\n", geom.to_json()?))?;
    if let Some(svg) = a.svg {
        fs::write(svg, geom.to_svg(&curve))?;
    }
    Ok(EXIT_PASS)
}

fn verify(a: VerifyArgs) -> Result<i32> {
    let cfg = Config { domain: a.domain.domain, n: a.domain.n, grid: a.grid, collar: a.collar, c: a.c };
    let report = run_suite(&a.suite, &cfg)?;
    emit(a.out.as_deref(), &report.to_json(a.canonical)?)?;
    if let Some(p) = a.csv {
        report.write_csv(fs::File::create(p)?)?;
    }
    for c in report.failures() {
        eprintln!("FAIL {}: measured {:.6e}, expected {:.6e}", c.id, c.measured, c.expected);
    }
    Ok(if report.pass { EXIT_PASS } else { EXIT_FAIL })
}

fn report(a: ReportArgs) -> Result<i32> {
    let mut paths: Vec<PathBuf> = fs::read_dir(&a.input)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let reports: Vec<SuiteReport> =
        paths.iter().filter_map(|p| serde_json::from_str(&fs::read_to_string(p).ok()?).ok()).collect();
    if reports.is_empty() {
        return Err(SteklovError::InvalidArgument(format!(
            "no suite reports found in {}",
            a.input.display()
        )));
    }
    let mut w = csv::Writer::from_path(&a.out).map_err(std::io::Error::from)?;
    w.write_record(CSV_HEADER).map_err(std::io::Error::from)?;
    for r in &reports {
        for c in &r.checks {
            w.write_record(csv_row(&r.suite, c)).map_err(std::io::Error::from)?;
        }
    }
    w.flush()?;
    Ok(if reports.iter().all(|r| r.pass) { EXIT_PASS } else { EXIT_FAIL })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors() {
        assert_eq!(dispatch(["steklov", "frobnicate"]), EXIT_USAGE);
        assert_eq!(dispatch(["steklov", "solve", "--problem", "theta", "--n", "17"]), EXIT_USAGE);
        assert_eq!(dispatch(["steklov", "solve", "--problem", "theta", "--domain", "star:0.3,5"]), EXIT_USAGE);
        assert_eq!(dispatch(["steklov", "verify", "--suite", "nope"]), EXIT_USAGE);
    }

    #[test]
    fn oracle_runs() {
        assert_eq!(dispatch(["steklov", "oracle", "--problem", "xi", "--k", "3"]), EXIT_PASS);
    }
}

//! Named verification suites, log-log scaling fits and suite reports.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Result, SteklovError};
use crate::geometry::{build_quadrature, curve_from_spec, BoundaryCurve, CurveKind, InteriorGrid, QuadratureGrid};
use crate::kernels::{symbol_q, symbol_q_numeric, KernelId, SymbolQuadrature};
use crate::layer::{assemble_boundary_ops, assemble_kernel, default_jump_distances, jump_test_nodes, BoundaryOps};
use crate::nodal::{
    boundary_ibp_residual, boundary_zeros, field_on_grid, interior_flux_check, interior_ibp_residual,
    level_set_extract, FieldEvaluator, FieldKind, FieldSource, IdentityContext, OracleSource, Provenance,
    ScalarField,
};
use crate::operator::DiscreteOperator;
use crate::oracle::{
    oracle_eigenvalue, oracle_layer_multiplier, theta_multiplier, DiskMode, LayerOp, Parity,
};
use crate::steklov::{
    boundary_energy, cauchy_data, reciprocity_residual, CauchyData, EigenPair, ProblemKind, SteklovSystem,
};

pub use crate::nodal::sigma_exponent;

/// Built-in domains exercised by the multi-domain checks.
pub const BUILTIN_DOMAINS: [&str; 4] = ["disk", "ellipse:2,1", "kite", "star:0.1,3"];
/// Quadrature size of the high-frequency asymptotics checks.
pub const ASYMPTOTIC_N: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|measured − expected| ≤ tolerance`
    Abs,
    /// `|measured − expected| ≤ tolerance·|expected|`
    Rel,
    /// `measured ≥ expected − tolerance`
    AtLeast,
    /// `measured ≤ expected + tolerance`
    AtMost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub description: String,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

impl Check {
    pub fn new(
        id: impl Into<String>,
        description: impl Into<String>,
        measured: f64,
        expected: f64,
        tolerance: f64,
        comparison: Comparison,
    ) -> Self {
        let d = measured - expected;
        let pass = measured.is_finite()
            && match comparison {
                Comparison::Abs => d.abs() <= tolerance,
                Comparison::Rel => d.abs() <= tolerance * expected.abs(),
                Comparison::AtLeast => d >= -tolerance,
                Comparison::AtMost => d <= tolerance,
            };
        Check {
            id: id.into(),
            description: description.into(),
            measured,
            expected,
            tolerance,
            comparison,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub domain: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub grid: usize,
    pub collar: f64,
    pub c: f64,
}

/// Run-dependent data, excluded from canonical output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub wall_clock_seconds: f64,
    pub unix_time: u64,
    pub threads: usize,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub pass: bool,
    pub environment: Environment,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Metadata>,
}

impl SuiteReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Pretty JSON; `canonical` drops the metadata so equal configurations
    /// give byte-identical text.
    pub fn to_json(&self, canonical: bool) -> Result<String> {
        if canonical {
            let mut r = self.clone();
            r.metadata = None;
            Ok(serde_json::to_string_pretty(&r)?)
        } else {
            Ok(serde_json::to_string_pretty(self)?)
        }
    }

    /// One row per check.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER).map_err(std::io::Error::from)?;
        for c in &self.checks {
            w.write_record(csv_row(&self.suite, c)).map_err(std::io::Error::from)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub const CSV_HEADER: [&str; 8] =
    ["suite", "id", "description", "measured", "expected", "tolerance", "comparison", "pass"];

pub fn csv_row(suite: &str, c: &Check) -> [String; 8] {
    [
        suite.to_string(),
        c.id.clone(),
        c.description.clone(),
        format!("{:.12e}", c.measured),
        format!("{:.12e}", c.expected),
        format!("{:.3e}", c.tolerance),
        serde_json::to_value(c.comparison).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        c.pass.to_string(),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Symbols,
    Layers,
    Disk,
    Identities,
    Scaling,
    All,
}

impl Suite {
    pub const PARTS: [Suite; 5] = [Suite::Symbols, Suite::Layers, Suite::Disk, Suite::Identities, Suite::Scaling];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Symbols => "symbols",
            Suite::Layers => "layers",
            Suite::Disk => "disk",
            Suite::Identities => "identities",
            Suite::Scaling => "scaling",
            Suite::All => "all",
        })
    }
}

impl FromStr for Suite {
    type Err = SteklovError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symbols" => Ok(Suite::Symbols),
            "layers" => Ok(Suite::Layers),
            "disk" => Ok(Suite::Disk),
            "identities" => Ok(Suite::Identities),
            "scaling" => Ok(Suite::Scaling),
            "all" => Ok(Suite::All),
            _ => Err(SteklovError::InvalidConfig(format!(
                "unknown suite `{s}` (expected symbols, layers, disk, identities, scaling or all)"
            ))),
        }
    }
}

/// Ordinary least squares on `(log x, log y)`: `(slope, intercept, r²)`.
pub fn fit_scaling_exponent(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 4 {
        return Err(SteklovError::InvalidArgument(format!(
            "need at least 4 paired samples (got {} and {})",
            xs.len(),
            ys.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(SteklovError::InvalidArgument("scaling fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(SteklovError::InvalidArgument("scaling fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok((slope, my - slope * mx, r2))
}

/// Operators and eigenpairs of all three problems on one grid.
pub struct Spectra {
    pub system: SteklovSystem,
    pub operators: Vec<DiscreteOperator>,
    pub pairs: Vec<Vec<EigenPair>>,
}

impl Spectra {
    fn slot(kind: ProblemKind) -> usize {
        ProblemKind::ALL.iter().position(|k| *k == kind).unwrap_or(0)
    }

    pub fn operator(&self, kind: ProblemKind) -> &DiscreteOperator {
        &self.operators[Self::slot(kind)]
    }

    pub fn pairs(&self, kind: ProblemKind) -> &[EigenPair] {
        &self.pairs[Self::slot(kind)]
    }
}

/// Reconstructed fields of one disk eigenmode on the shared interior grid.
pub struct ModeFields {
    pub pair: EigenPair,
    pub cd: CauchyData,
    pub e: Vec<f64>,
    pub lap_e: Vec<f64>,
}

type FieldKey = (ProblemKind, usize, usize, usize, u64);

/// Cache shared by the suites of one run.
#[derive(Default)]
pub struct Lab {
    ops: BTreeMap<(String, usize), Arc<BoundaryOps>>,
    spectra: BTreeMap<(String, usize), Arc<Spectra>>,
    grids: BTreeMap<(usize, u64), Arc<InteriorGrid>>,
    fields: BTreeMap<FieldKey, Arc<ModeFields>>,
}

impl Lab {
    pub fn new() -> Self {
        Lab::default()
    }

    pub fn ops(&mut self, domain: &str, n: usize) -> Result<Arc<BoundaryOps>> {
        let key = (domain.to_string(), n);
        if let Some(o) = self.ops.get(&key) {
            return Ok(o.clone());
        }
        let curve = curve_from_spec(domain)?;
        let grid = build_quadrature(&curve, n)?;
        let ops = Arc::new(assemble_boundary_ops(&curve, &grid)?);
        self.ops.insert(key, ops.clone());
        Ok(ops)
    }

    /// The lowest `N/8` eigenpairs of `Θ`, `Ξ` and `Π`.
    pub fn spectra(&mut self, domain: &str, n: usize) -> Result<Arc<Spectra>> {
        let key = (domain.to_string(), n);
        if let Some(s) = self.spectra.get(&key) {
            return Ok(s.clone());
        }
        let ops = self.ops(domain, n)?;
        let system = SteklovSystem::new(&ops)?;
        let mut operators = Vec::new();
        let mut pairs = Vec::new();
        for kind in ProblemKind::ALL {
            let op = system.operator(kind, &ops);
            pairs.push(crate::steklov::spectrum(kind, &op, n / 8)?);
            operators.push(op);
        }
        let s = Arc::new(Spectra { system, operators, pairs });
        self.spectra.insert(key, s.clone());
        Ok(s)
    }

    pub fn disk_grid(&mut self, resolution: usize, collar: f64) -> Result<Arc<InteriorGrid>> {
        let key = (resolution, collar.to_bits());
        if let Some(g) = self.grids.get(&key) {
            return Ok(g.clone());
        }
        let g = Arc::new(InteriorGrid::new(&BoundaryCurve::new(CurveKind::Disk), resolution, collar)?);
        self.grids.insert(key, g.clone());
        Ok(g)
    }

    /// BEM-reconstructed `e` and `Δe` of disk eigenpair `index` on the
    /// non-collar nodes.
    pub fn disk_fields(&mut self, setup: &DiskSetup, kind: ProblemKind, index: usize) -> Result<Arc<ModeFields>> {
        let key = (kind, index, setup.n, setup.grid, setup.collar.to_bits());
        if let Some(f) = self.fields.get(&key) {
            return Ok(f.clone());
        }
        let ops = self.ops("disk", setup.n)?;
        let sp = self.spectra("disk", setup.n)?;
        let interior = self.disk_grid(setup.grid, setup.collar)?;
        let pair = sp.pairs(kind)[index].clone();
        let cd = cauchy_data(kind, &pair, &ops, Some(&sp.system.theta_small))?;
        let source = FieldEvaluator::new(&ops.curve, &ops.grid, &cd);
        let g = field_on_grid(&source, &interior, false, false)?;
        let f = Arc::new(ModeFields { e: g.e, lap_e: g.lap_e, pair, cd });
        self.fields.insert(key, f.clone());
        Ok(f)
    }
}

/// Disk settings of the identity and nodal checks.
#[derive(Debug, Clone, Copy)]
pub struct DiskSetup {
    pub n: usize,
    pub grid: usize,
    pub collar: f64,
    pub c: f64,
}

impl DiskSetup {
    pub fn from_config(cfg: &Config) -> Self {
        let disk = BoundaryCurve::new(CurveKind::Disk);
        DiskSetup { n: cfg.n, grid: cfg.grid, collar: cfg.collar_for(&disk), c: cfg.c }
    }
}

/// Runs a named suite at `cfg`.
pub fn run_suite(name: &str, cfg: &Config) -> Result<SuiteReport> {
    let suite: Suite = name.parse()?;
    run_suite_with(suite, cfg, &mut Lab::new())
}

pub fn run_suite_with(suite: Suite, cfg: &Config, lab: &mut Lab) -> Result<SuiteReport> {
    let curve = cfg.validate()?;
    let start = Instant::now();
    let parts: Vec<Suite> = if suite == Suite::All { Suite::PARTS.to_vec() } else { vec![suite] };
    let mut checks = Vec::new();
    for part in parts {
        match part {
            Suite::Symbols => symbols_suite(&mut checks)?,
            Suite::Layers => layers_suite(cfg, lab, &mut checks)?,
            Suite::Disk => disk_suite(cfg, lab, &mut checks)?,
            Suite::Identities => identities_suite(cfg, lab, &mut checks)?,
            Suite::Scaling => scaling_suite(cfg, lab, &mut checks)?,
            Suite::All => {}
        }
    }
    let metadata = Metadata {
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        unix_time: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        threads: rayon::current_num_threads(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    Ok(SuiteReport {
        suite: suite.to_string(),
        pass: checks.iter().all(|c| c.pass),
        environment: Environment {
            domain: curve.descriptor(),
            n: cfg.n,
            grid: cfg.grid,
            collar: cfg.collar_for(&curve),
            c: cfg.c,
        },
        checks,
        metadata: Some(metadata),
    })
}

/// Eigenpair index representing angular frequency `k` on the disk.
pub fn disk_index(k: usize) -> usize {
    if k == 0 {
        0
    } else {
        2 * k - 1
    }
}

fn cos_k(grid: &QuadratureGrid, k: usize) -> Vec<f64> {
    grid.sample_fn(|t| (k as f64 * t).cos())
}

fn sin_k(grid: &QuadratureGrid, k: usize) -> Vec<f64> {
    grid.sample_fn(|t| (k as f64 * t).sin())
}

/// Coefficients of `φ` on `cos kt`, `sin kt` and the relative residual outside their span.
pub fn trig_projection(grid: &QuadratureGrid, phi: &[f64], k: usize) -> (f64, f64, f64) {
    let c = cos_k(grid, k);
    let ca = grid.inner(phi, &c) / grid.inner(&c, &c);
    let (sa, s) = if k == 0 {
        (0.0, vec![0.0; phi.len()])
    } else {
        let s = sin_k(grid, k);
        (grid.inner(phi, &s) / grid.inner(&s, &s), s)
    };
    let rest: Vec<f64> = (0..phi.len()).map(|i| phi[i] - ca * c[i] - sa * s[i]).collect();
    (ca, sa, grid.l2_norm(&rest) / grid.l2_norm(phi))
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

fn symbols_suite(out: &mut Vec<Check>) -> Result<()> {
    let opts = SymbolQuadrature::default();
    for j in [1u8, 2, 3] {
        for x in [0.0, 0.25, 1.0, 2.5] {
            for xi in [0.5, 1.0, 3.0] {
                let num = symbol_q_numeric(j, x, xi, opts)?;
                out.push(Check::new(
                    format!("symbols.q{j}.x{x}.xi{xi}"),
                    format!("q{j}(x_n={x}, xi'={xi}) by quadrature vs closed form"),
                    num.re,
                    symbol_q(j, x, xi)?,
                    1e-7,
                    Comparison::Abs,
                ));
            }
        }
    }
    for xi in [0.5, 1.0, 3.0] {
        out.push(Check::new(
            format!("symbols.boundary.q3.xi{xi}"),
            "q3(0, xi') equals xi'^-3 / 4",
            symbol_q_numeric(3, 0.0, xi, opts)?.re,
            0.25 / xi.powi(3),
            1e-7,
            Comparison::Abs,
        ));
        out.push(Check::new(
            format!("symbols.boundary.q1.xi{xi}"),
            "q1(0, xi') equals -1 / (2 xi')",
            symbol_q_numeric(1, 0.0, xi, opts)?.re,
            -0.5 / xi,
            1e-7,
            Comparison::Abs,
        ));
    }
    for n in 2..=8 {
        out.push(Check::new(
            format!("symbols.sigma.p2.n{n}"),
            "sigma(n, 2) vanishes",
            sigma_exponent(n, 2.0)?,
            0.0,
            1e-15,
            Comparison::Abs,
        ));
    }
    out.push(Check::new("symbols.sigma.n3.pinf", "sigma(3, inf)", sigma_exponent(3, f64::INFINITY)?, 0.5, 1e-15, Comparison::Abs));
    out.push(Check::new("symbols.sigma.n4.p4", "sigma(4, 4)", sigma_exponent(4, 4.0)?, 0.25, 1e-15, Comparison::Abs));
    for n in 3..=8 {
        let nf = n as f64;
        let p = 2.0 * nf / (nf - 2.0);
        let q = 1.0 / p;
        let first = (nf - 1.0) * (0.5 - q) - 0.5;
        out.push(Check::new(
            format!("symbols.sigma.continuity.n{n}"),
            "sigma branches agree at the branch point",
            sigma_exponent(n, p)?,
            first,
            1e-14,
            Comparison::Abs,
        ));
    }
    Ok(())
}

/// Largest nodal deviation of `A trig(kt)` from `m · trig(kt)` over both parities.
fn multiplier_error(op: &DiscreteOperator, grid: &QuadratureGrid, k: usize, m: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for f in [cos_k(grid, k), sin_k(grid, k)] {
        if k == 0 && f.iter().all(|v| *v == 0.0) {
            continue;
        }
        let af = op.apply(&f);
        worst = worst.max(max_abs((0..f.len()).map(|i| af[i] - m * f[i])));
    }
    worst
}

fn discrete_multiplier(op: &DiscreteOperator, grid: &QuadratureGrid, k: usize) -> f64 {
    let c = cos_k(grid, k);
    grid.inner(&op.apply(&c), &c) / grid.inner(&c, &c)
}

fn layers_suite(cfg: &Config, lab: &mut Lab, out: &mut Vec<Check>) -> Result<()> {
    let disk = lab.ops("disk", cfg.n)?;
    for op in [LayerOp::S1, LayerOp::S2, LayerOp::S3, LayerOp::N, LayerOp::Lambda] {
        let d = disk.by_name(&op.to_string()).expect("layer operator");
        let err = max_abs((0..=16).map(|k| multiplier_error(d, &disk.grid, k, oracle_layer_multiplier(op, k))));
        out.push(Check::new(
            format!("layers.disk.multiplier.{op}"),
            format!("circle multipliers of {op} for k <= 16 vs oracle table, largest nodal error"),
            err,
            0.0,
            1e-7,
            Comparison::Abs,
        ));
    }
    let kmax = cfg.n / 8;
    let s3 = max_abs((8..=kmax).map(|k| {
        let kf = k as f64;
        4.0 * kf.powi(3) * discrete_multiplier(&disk.s3, &disk.grid, k) - 1.0
    }));
    out.push(Check::new(
        "layers.disk.decay.S3",
        format!("4k^3 times the S3 multiplier tends to 1, largest deviation over k in [8, {kmax}]"),
        s3,
        0.0,
        0.02,
        Comparison::Abs,
    ));
    let s1 = max_abs((8..=kmax).map(|k| -2.0 * k as f64 * discrete_multiplier(&disk.s1, &disk.grid, k) - 1.0));
    out.push(Check::new(
        "layers.disk.decay.S1",
        format!("-2k times the S1 multiplier equals 1 over k in [8, {kmax}]"),
        s1,
        0.0,
        1e-6,
        Comparison::Abs,
    ));

    for domain in BUILTIN_DOMAINS {
        let ops = lab.ops(domain, cfg.n)?;
        let curve = &ops.curve;
        let tol = if domain == "disk" { 1e-8 } else { 1e-6 };
        for name in ["S1", "S3", "Lambda"] {
            out.push(Check::new(
                format!("layers.{domain}.symmetry.{name}"),
                format!("asymmetry of the weight-conjugated {name}"),
                ops.by_name(name).expect("layer operator").asymmetry,
                0.0,
                tol,
                Comparison::Abs,
            ));
        }
        if domain == "disk" {
            out.push(Check::new(
                "layers.disk.symmetry.N",
                "asymmetry of the weight-conjugated N",
                ops.n.asymmetry,
                0.0,
                tol,
                Comparison::Abs,
            ));
        }
        out.push(Check::new(
            format!("layers.{domain}.adjoint.N"),
            "N is the arclength adjoint of the harmonic double-layer transpose K'",
            adjoint_residual(&ops),
            0.0,
            1e-6,
            Comparison::Abs,
        ));
        let kappa = ops.grid.integrate(&ops.grid.curvature());
        out.push(Check::new(
            format!("layers.{domain}.total_curvature"),
            "integral of the curvature over the boundary",
            kappa,
            2.0 * std::f64::consts::PI,
            1e-10,
            Comparison::Abs,
        ));

        let f = ops.grid.sample_fn(|t| 0.25 + (3.0 * t).cos() + 0.5 * (5.0 * t).sin());
        let nodes: Vec<usize> = (0..8).map(|j| j * cfg.n / 8).collect();
        let reports = jump_test_nodes(&ops, &f, &nodes, &default_jump_distances(curve))?;
        let one_sided = max_abs(reports.iter().flat_map(|r| {
            [r.l4_interior - r.nf - 0.5 * r.f, r.l4_exterior - r.nf + 0.5 * r.f]
        }));
        out.push(Check::new(
            format!("layers.{domain}.jump.L4"),
            "extrapolated interior and exterior limits of L4 equal Nf +/- f/2 at 8 nodes",
            one_sided,
            0.0,
            1e-5,
            Comparison::Abs,
        ));
        out.push(Check::new(
            format!("layers.{domain}.jump.continuity"),
            "L1, L2, L3 limits agree from both sides at 8 nodes",
            max_abs(reports.iter().flat_map(|r| r.continuity)),
            0.0,
            1e-6,
            Comparison::Abs,
        ));
        out.push(Check::new(
            format!("layers.{domain}.jump.traces"),
            "L1, L2, L3 limits equal S3 f, S2 f, S1 f at 8 nodes",
            max_abs(reports.iter().flat_map(|r| r.trace_residual)),
            0.0,
            1e-6,
            Comparison::Abs,
        ));
    }
    Ok(())
}

/// `‖W·N − (W·K')ᵀ‖ / ‖W·N‖` in the Frobenius norm.
fn adjoint_residual(ops: &BoundaryOps) -> f64 {
    let kp = assemble_kernel(KernelId::DnxE, &ops.grid);
    let w = &ops.grid.weights;
    let n = w.len();
    let wn = DMatrix::from_fn(n, n, |i, j| w[i] * ops.n.matrix[(i, j)]);
    let wk = DMatrix::from_fn(n, n, |i, j| w[i] * kp[(i, j)]);
    (&wn - wk.transpose()).norm() / wn.norm()
}

fn disk_suite(cfg: &Config, lab: &mut Lab, out: &mut Vec<Check>) -> Result<()> {
    let ops = lab.ops("disk", cfg.n)?;
    let sp = lab.spectra("disk", cfg.n)?;
    let grid = &ops.grid;
    for kind in ProblemKind::ALL {
        let pairs = sp.pairs(kind);
        for k in 0..=10 {
            let oracle = oracle_eigenvalue(kind, k).mu;
            let idx: Vec<usize> = if k == 0 { vec![0] } else { vec![2 * k - 1, 2 * k] };
            let worst = idx
                .iter()
                .map(|&i| pairs[i].mu)
                .max_by(|a, b| (a - oracle).abs().total_cmp(&(b - oracle).abs()))
                .unwrap_or(f64::NAN);
            let (tol, cmp) = if oracle == 0.0 { (1e-6, Comparison::Abs) } else { (1e-6, Comparison::Rel) };
            out.push(Check::new(
                format!("disk.eigenvalue.{kind}.k{k}"),
                format!("{kind} eigenvalue(s) at angular frequency {k} vs closed form"),
                worst,
                oracle,
                tol,
                cmp,
            ));
        }
        let mus: Vec<f64> = pairs.iter().take(21).map(|p| p.mu).collect();
        out.push(Check::new(
            format!("disk.multiplicity.{kind}"),
            "cluster sizes of the lowest 21 eigenvalues differ from 1, 2, 2, ... in this many places",
            multiplicity_mismatches(&mus) as f64,
            0.0,
            0.0,
            Comparison::Abs,
        ));
        let span = max_abs((0..=10).flat_map(|k| {
            let idx: Vec<usize> = if k == 0 { vec![0] } else { vec![2 * k - 1, 2 * k] };
            idx.into_iter().map(move |i| (i, k))
        }).map(|(i, k)| trig_projection(grid, &pairs[i].phi, k).2));
        out.push(Check::new(
            format!("disk.eigenspace.{kind}"),
            "eigenfunctions for k <= 10 lie in span{cos k theta, sin k theta}, largest relative residual",
            span,
            0.0,
            1e-6,
            Comparison::Abs,
        ));
        out.push(Check::new(
            format!("disk.asymmetry.{kind}"),
            format!("asymmetry of {kind} before symmetrization"),
            sp.operator(kind).asymmetry,
            0.0,
            1e-6,
            Comparison::Abs,
        ));
    }

    let theta = &sp.system.theta_small;
    let err = max_abs((0..=10).map(|k| {
        let m = theta_multiplier(k);
        multiplier_error(theta, grid, k, m) / m.abs().max(1.0)
    }));
    out.push(Check::new(
        "disk.theta_multiplier",
        "small theta maps cos k theta to -2k(k+1) cos k theta for k <= 10, largest relative nodal error",
        err,
        0.0,
        1e-6,
        Comparison::Abs,
    ));
    let kmax = cfg.n / 16;
    let ratio = max_abs((1..=kmax).map(|k| {
        let kf = k as f64;
        sp.pairs(ProblemKind::Theta)[2 * k - 1].mu / (2.0 * kf.powi(3)) - (1.0 + 1.0 / kf)
    }));
    out.push(Check::new(
        "disk.theta_ratio",
        format!("mu_k(Theta) / (2k^3) equals 1 + 1/k for k <= {kmax}, largest deviation"),
        ratio,
        0.0,
        1e-4,
        Comparison::Abs,
    ));

    // Cauchy data of representative modes
    for (kind, k) in [(ProblemKind::Theta, 1), (ProblemKind::Xi, 2), (ProblemKind::Pi, 0)] {
        let pair = &sp.pairs(kind)[disk_index(k)];
        let cd = cauchy_data(kind, pair, &ops, Some(theta))?;
        let (c, s, _) = trig_projection(grid, &pair.phi, k);
        let modes = vec![
            (DiskMode::new(kind, k, Parity::Cos), c),
            (DiskMode::new(kind, k, Parity::Sin), s),
        ];
        let exact = OracleSource::new(modes).cauchy_data(grid);
        let err = max_abs((0..grid.n).flat_map(|i| {
            [
                cd.u[i] - exact.u[i],
                cd.dn_u[i] - exact.dn_u[i],
                cd.lap_u[i] - exact.lap_u[i],
                cd.dn_lap_u[i] - exact.dn_lap_u[i],
            ]
        }));
        out.push(Check::new(
            format!("disk.cauchy.{kind}.k{k}"),
            "Cauchy data of the eigenfunction vs separation of variables",
            err,
            0.0,
            1e-6,
            Comparison::Abs,
        ));
    }
    out.push(Check::new(
        "disk.condition",
        "condition number of S2 - S3 Lambda",
        sp.system.condition_number,
        crate::steklov::MAX_CONDITION,
        0.0,
        Comparison::AtMost,
    ));
    Ok(())
}

/// Number of places where eigenvalue clusters deviate from sizes `1, 2, 2, …`.
pub fn multiplicity_mismatches(mus: &[f64]) -> usize {
    let mut sizes = Vec::new();
    let mut i = 0;
    while i < mus.len() {
        let mut j = i + 1;
        while j < mus.len() && (mus[j] - mus[i]).abs() <= 1e-6 * mus[i].abs().max(1.0) {
            j += 1;
        }
        sizes.push(j - i);
        i = j;
    }
    let expected: Vec<usize> = (0..sizes.len()).map(|g| if g == 0 { 1 } else { 2 }).collect();
    let last = sizes.len().saturating_sub(1);
    sizes
        .iter()
        .zip(&expected)
        .enumerate()
        // the final cluster may be cut by the truncation
        .filter(|(g, (s, e))| !(*g == last && **s < **e) && s != e)
        .count()
}

fn identities_suite(cfg: &Config, lab: &mut Lab, out: &mut Vec<Check>) -> Result<()> {
    let mut domains = vec!["disk".to_string(), "kite".to_string()];
    let own = curve_from_spec(&cfg.domain)?.descriptor();
    if !domains.contains(&own) {
        domains.push(own);
    }
    for domain in &domains {
        let ops = lab.ops(domain, cfg.n)?;
        let sp = lab.spectra(domain, cfg.n)?;
        let w = &ops.grid.weights;
        for kind in ProblemKind::ALL {
            let cds = sp
                .pairs(kind)
                .iter()
                .take(10)
                .map(|p| cauchy_data(kind, p, &ops, Some(&sp.system.theta_small)))
                .collect::<Result<Vec<_>>>()?;
            let energy = cds.iter().map(|cd| boundary_energy(cd, w)).fold(f64::INFINITY, f64::min);
            out.push(Check::new(
                format!("identities.{domain}.energy.{kind}"),
                "smallest boundary energy over the 10 lowest modes",
                energy,
                0.0,
                1e-8,
                Comparison::AtLeast,
            ));
            let mut worst: f64 = 0.0;
            for i in 0..5 {
                for j in i + 1..5 {
                    worst = worst.max(reciprocity_residual(&cds[i], &cds[j], w));
                }
            }
            out.push(Check::new(
                format!("identities.{domain}.reciprocity.{kind}"),
                "largest Green reciprocity residual over 10 pairs of distinct modes",
                worst,
                0.0,
                1e-6,
                Comparison::Abs,
            ));
        }
    }

    let kite = lab.ops("kite", cfg.n)?;
    let ksp = lab.spectra("kite", cfg.n)?;
    let h = kite.grid.curvature();
    let xi = ksp.operator(ProblemKind::Xi);
    let pi = ksp.operator(ProblemKind::Pi);
    let mut worst: f64 = 0.0;
    for p in ksp.pairs(ProblemKind::Xi).iter().take(10) {
        let a = xi.apply(&p.phi);
        let b = pi.apply(&p.phi);
        let scale = max_abs(a.iter().copied());
        worst = worst.max(max_abs((0..a.len()).map(|i| a[i] - b[i] - h[i] * p.phi[i])) / scale);
    }
    out.push(Check::new(
        "identities.kite.xi_pi_curvature",
        "Xi phi - Pi phi - H phi relative to Xi phi over 10 modes",
        worst,
        0.0,
        1e-12,
        Comparison::Abs,
    ));
    for kind in ProblemKind::ALL {
        out.push(Check::new(
            format!("identities.kite.asymmetry.{kind}"),
            format!("asymmetry of {kind} before symmetrization"),
            ksp.operator(kind).asymmetry,
            0.0,
            1e-6,
            Comparison::Abs,
        ));
    }

    let setup = DiskSetup::from_config(cfg);
    let ops = lab.ops("disk", setup.n)?;
    let sp = lab.spectra("disk", setup.n)?;
    let interior = lab.disk_grid(setup.grid, setup.collar)?;
    for kind in ProblemKind::ALL {
        for k in 1..=3 {
            let pair = &sp.pairs(kind)[disk_index(k)];
            let cd = cauchy_data(kind, pair, &ops, Some(&sp.system.theta_small))?;
            let source = FieldEvaluator::new(&ops.curve, &ops.grid, &cd);
            let fields = field_on_grid(&source, &interior, true, false)?;
            out.push(Check::new(
                format!("identities.disk.interior_energy.{kind}.k{k}"),
                "lattice integral of (Delta e)^2 vs the boundary energy",
                fields.area_integral(|_, lap| lap * lap),
                boundary_energy(&cd, &ops.grid.weights),
                0.02,
                Comparison::Rel,
            ));
        }
    }

    let sqrt_pi = std::f64::consts::PI.sqrt();
    for kind in ProblemKind::ALL {
        for k in 0..=8 {
            let f = lab.disk_fields(&setup, kind, disk_index(k))?;
            let source = FieldEvaluator::new(&ops.curve, &ops.grid, &f.cd);
            let ctx = IdentityContext {
                kind,
                lambda: f.pair.lambda,
                curve: &ops.curve,
                grid: &ops.grid,
                cd: &f.cd,
                source: &source,
                interior: &interior,
            };
            let (c, s, _) = trig_projection(&ops.grid, &f.pair.phi, k);
            let oracle = OracleSource::new(vec![
                (DiskMode::new(kind, k, Parity::Cos), c),
                (DiskMode::new(kind, k, Parity::Sin), s),
            ]);
            let mut err: f64 = 0.0;
            for i in 0..f.e.len() {
                if interior.is_active(i) {
                    let p = interior.point(i % interior.nx, i / interior.nx);
                    let o = oracle.sample(p)?;
                    err = err.max((f.e[i] - o.e).abs()).max((f.lap_e[i] - o.lap_e).abs());
                }
            }
            out.push(Check::new(
                format!("identities.disk.reconstruction.{kind}.k{k}"),
                "sup error of BEM e and Delta e vs the disk oracle on the non-collar grid",
                err,
                0.0,
                1e-6,
                Comparison::Abs,
            ));
            if k == 0 {
                continue;
            }
            let lap = scalar(&interior, &f.lap_e, FieldKind::LapE);
            let r = interior_ibp_residual(&ctx, &lap, 0.0, setup.c)?;
            out.push(Check::new(
                format!("identities.disk.interior_ibp.{kind}.k{k}"),
                "|B - S| / |B| for the zero set of Delta e",
                r.residual,
                0.0,
                0.05,
                Comparison::Abs,
            ));
            if kind == ProblemKind::Xi && k == 2 {
                out.push(Check::new(
                    "identities.disk.interior_ibp.fixture",
                    "B for XI k = 2 rescaled to the boundary datum cos 2 theta",
                    r.b * sqrt_pi,
                    48.0,
                    1e-6,
                    Comparison::Rel,
                ));
            }
            if kind == ProblemKind::Theta {
                let e = scalar(&interior, &f.e, FieldKind::E);
                let fl = interior_flux_check(&ctx, &e)?;
                out.push(Check::new(
                    format!("identities.disk.flux_ratio.k{k}"),
                    "F / ((lambda^3 / 2) |e|_L1) for THETA",
                    fl.ratio,
                    0.9,
                    0.0,
                    Comparison::AtLeast,
                ));
                if k == 2 {
                    out.push(Check::new(
                        "identities.disk.flux.fixture",
                        "flux F for THETA k = 2 rescaled to the boundary datum cos 2 theta",
                        fl.flux * sqrt_pi,
                        48.0,
                        0.05,
                        Comparison::Rel,
                    ));
                    out.push(Check::new(
                        "identities.disk.flux.fixture_ratio",
                        "F equals (lambda^3 / 2) |e|_L1 for THETA k = 2",
                        fl.ratio,
                        1.0,
                        0.05,
                        Comparison::Rel,
                    ));
                }
            }
        }
    }

    for k in 1..=16 {
        let phi = cos_k(&ops.grid, k);
        let r = boundary_ibp_residual(&ops.curve, &phi, 0.0);
        let exact = 4.0 * (k * k) as f64;
        out.push(Check::new(
            format!("identities.disk.boundary_ibp.k{k}"),
            "relative residual of the boundary identity for cos k theta",
            r.residual,
            0.0,
            1e-8,
            Comparison::Abs,
        ));
        out.push(Check::new(
            format!("identities.disk.boundary_ibp_value.k{k}"),
            "boundary side of the identity for cos k theta equals 4k^2",
            r.lhs,
            exact,
            1e-8,
            Comparison::Rel,
        ));
    }
    Ok(())
}

/// Active-node restriction of stored grid values.
fn scalar<'a>(grid: &'a InteriorGrid, values: &[f64], kind: FieldKind) -> ScalarField<'a> {
    let values = (0..values.len()).map(|i| if grid.is_active(i) { values[i] } else { f64::NAN }).collect();
    ScalarField { grid, kind, provenance: Provenance::BemReconstructed, values }
}

fn slope_check(
    out: &mut Vec<Check>,
    id: String,
    description: String,
    xs: &[f64],
    ys: &[f64],
    expected: f64,
    tolerance: f64,
    comparison: Comparison,
) -> Result<()> {
    let (slope, _, _) = fit_scaling_exponent(xs, ys)?;
    out.push(Check::new(id, description, slope, expected, tolerance, comparison));
    Ok(())
}

fn scaling_suite(cfg: &Config, lab: &mut Lab, out: &mut Vec<Check>) -> Result<()> {
    let xs: Vec<f64> = (1..=8).map(f64::from).collect();
    let cubic: Vec<f64> = xs.iter().map(|x| 2.0 * x * x * x).collect();
    let (slope, _, r2) = fit_scaling_exponent(&xs, &cubic)?;
    out.push(Check::new("scaling.fit.cubic.slope", "fit of y = 2x^3", slope, 3.0, 1e-12, Comparison::Abs));
    out.push(Check::new("scaling.fit.cubic.r2", "r^2 of the fit of y = 2x^3", r2, 1.0, 1e-12, Comparison::Abs));
    let (slope, _, _) = fit_scaling_exponent(&xs, &xs)?;
    out.push(Check::new("scaling.fit.linear.slope", "fit of y = x", slope, 1.0, 1e-12, Comparison::Abs));

    let n = ASYMPTOTIC_N;
    let disk = lab.spectra("disk", n)?;
    let ks: Vec<usize> = (4..=32).collect();
    slope_check(
        out,
        "scaling.disk.xi_growth".into(),
        "log-log slope of lambda(Xi) at angular frequency k in [4, 32]".into(),
        &ks.iter().map(|&k| k as f64).collect::<Vec<_>>(),
        &ks.iter().map(|&k| disk.pairs(ProblemKind::Xi)[disk_index(k)].lambda).collect::<Vec<_>>(),
        1.0,
        0.02,
        Comparison::Abs,
    )?;
    let ratio = max_abs((1..=32).map(|k| {
        let kf = k as f64;
        disk.pairs(ProblemKind::Theta)[2 * k - 1].mu / (2.0 * kf.powi(3)) - (1.0 + 1.0 / kf)
    }));
    out.push(Check::new(
        "scaling.disk.theta_ratio",
        format!("mu_k(Theta) / (2k^3) equals 1 + 1/k for k <= 32 at N = {n}, largest deviation"),
        ratio,
        0.0,
        1e-4,
        Comparison::Abs,
    ));

    let ks: Vec<usize> = (8..=32).collect();
    let xs: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    for domain in ["ellipse:2,1", "kite"] {
        let sp = lab.spectra(domain, n)?;
        for (kind, expected) in [(ProblemKind::Theta, 3.0), (ProblemKind::Xi, 1.0), (ProblemKind::Pi, 1.0)] {
            let ys: Vec<f64> = ks.iter().map(|&k| sp.pairs(kind)[disk_index(k)].mu).collect();
            slope_check(
                out,
                format!("scaling.{domain}.growth.{kind}"),
                format!("log-log slope of the {kind} eigenvalue of index 2k - 1 vs k in [8, 32] at N = {n}"),
                &xs,
                &ys,
                expected,
                0.05,
                Comparison::Abs,
            )?;
        }
    }

    let setup = DiskSetup::from_config(cfg);
    let interior = lab.disk_grid(setup.grid, setup.collar)?;
    let ks: Vec<usize> = (4..=16).collect();
    let mut lambdas = Vec::new();
    let mut counts = Vec::new();
    let mut lap_lengths = Vec::new();
    let mut lp_ratio = f64::INFINITY;
    let mut density = f64::INFINITY;
    let disk_ops = lab.ops("disk", setup.n)?;
    for &k in &ks {
        let f = lab.disk_fields(&setup, ProblemKind::Xi, disk_index(k))?;
        let e = scalar(&interior, &f.e, FieldKind::E);
        let geom = level_set_extract(&e, 0.0);
        let expected = 2.0 * k as f64 * (1.0 - setup.collar);
        out.push(Check::new(
            format!("scaling.disk.nodal_length.xi.k{k}"),
            "collar-trimmed interior nodal length of the XI mode vs 2k(1 - collar)",
            geom.raw_length,
            expected,
            0.05,
            Comparison::Rel,
        ));
        let lap = level_set_extract(&scalar(&interior, &f.lap_e, FieldKind::LapE), 0.0);
        lap_lengths.push(lap.raw_length);
        let count = boundary_zeros(&f.cd.dn_u, 0.0).count as f64;
        lambdas.push(f.pair.lambda);
        counts.push(count);
        density = density.min(count / f.pair.lambda);
        let g = &disk_ops.grid;
        let l1 = g.integrate(&f.pair.phi.iter().map(|v| v.abs()).collect::<Vec<_>>());
        lp_ratio = lp_ratio.min(l1 / g.l2_norm(&f.pair.phi));
    }
    slope_check(
        out,
        "scaling.disk.boundary_zeros.xi".into(),
        "log-log slope of the boundary zero count vs lambda, XI modes k = 4..16".into(),
        &lambdas,
        &counts,
        1.0,
        0.05,
        Comparison::Abs,
    )?;
    slope_check(
        out,
        "scaling.disk.lap_level_length.xi".into(),
        "log-log slope of the length of {Delta e = 0} vs lambda, XI modes k = 4..16".into(),
        &lambdas,
        &lap_lengths,
        0.0,
        0.05,
        Comparison::AtLeast,
    )?;
    out.push(Check::new(
        "scaling.disk.boundary_zero_density.xi",
        "smallest boundary zero count / lambda over XI modes k = 4..16",
        density,
        setup.c,
        0.0,
        Comparison::AtLeast,
    ));
    out.push(Check::new(
        "scaling.disk.lp_ratio.xi",
        "smallest |phi|_L1 / |phi|_L2 over XI modes k = 4..16",
        lp_ratio,
        setup.c,
        0.0,
        Comparison::AtLeast,
    ));

    let kite = lab.spectra("kite", setup.n)?;
    let (mut kl, mut kc) = (Vec::new(), Vec::new());
    for &k in &ks {
        let p = &kite.pairs(ProblemKind::Xi)[disk_index(k)];
        kl.push(p.lambda);
        kc.push(boundary_zeros(&p.phi, 0.0).count as f64);
    }
    slope_check(
        out,
        "scaling.kite.boundary_zeros.xi".into(),
        "log-log slope of the boundary zero count vs lambda, XI modes of index 2k - 1, k = 4..16".into(),
        &kl,
        &kc,
        1.0,
        0.05,
        Comparison::Abs,
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_examples() {
        let xs = [1.0, 2.0, 3.0, 5.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x * x * x).collect();
        let (s, b, r2) = fit_scaling_exponent(&xs, &ys).unwrap();
        assert!((s - 3.0).abs() < 1e-12 && (b - 2f64.ln()).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
        assert!((fit_scaling_exponent(&xs, &xs).unwrap().0 - 1.0).abs() < 1e-12);
        assert!(fit_scaling_exponent(&xs, &[1.0, 0.0, 1.0, 1.0, 1.0]).is_err());
        assert!(fit_scaling_exponent(&xs[..3], &ys[..3]).is_err());
    }

    #[test]
    fn check_comparisons() {
        assert!(Check::new("a", "", 1.05, 1.0, 0.1, Comparison::Rel).pass);
        assert!(!Check::new("a", "", 1.2, 1.0, 0.1, Comparison::Rel).pass);
        assert!(Check::new("a", "", -1e-9, 0.0, 1e-8, Comparison::AtLeast).pass);
        assert!(!Check::new("a", "", f64::NAN, 0.0, 1.0, Comparison::Abs).pass);
        assert!(!Check::new("a", "", 2.0, 1.0, 0.5, Comparison::AtMost).pass);
    }

    #[test]
    fn multiplicity_pattern() {
        assert_eq!(multiplicity_mismatches(&[0.0, 4.0, 4.0, 24.0, 24.0]), 0);
        assert_eq!(multiplicity_mismatches(&[0.0, 4.0, 4.0, 24.0]), 0);
        assert_eq!(multiplicity_mismatches(&[0.0, 0.0, 4.0, 4.0, 5.0]), 1);
        assert_eq!(multiplicity_mismatches(&[0.0, 0.0, 4.0, 5.0, 5.0]), 2);
    }

    #[test]
    fn symbols_suite_passes_and_is_canonical() {
        let r = run_suite("symbols", &Config::default()).unwrap();
        assert_eq!(r.checks.iter().filter(|c| c.id.starts_with("symbols.q")).count(), 36);
        assert!(r.pass, "{:?}", r.failures().collect::<Vec<_>>());
        let a = r.to_json(true).unwrap();
        assert!(!a.contains("wall_clock"));
        let back: SuiteReport = serde_json::from_str(&a).unwrap();
        assert_eq!(back.checks.len(), r.checks.len());
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), r.checks.len() + 1);
    }

    #[test]
    fn unknown_suite_and_invalid_config() {
        assert!(run_suite("bogus", &Config::default()).is_err());
        let bad = Config { n: 17, ..Config::default() };
        assert!(run_suite("symbols", &bad).unwrap_err().to_string().contains("N must be even"));
    }
}

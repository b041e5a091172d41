//! End-to-end acceptance: two `verify --suite all --canonical` runs of the binary,
//! checks grouped by property with their tolerances pinned.

use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use steklov::verify::{Check, SuiteReport};

const RUNTIME_LIMIT_SECONDS: f64 = 300.0;

struct Runs {
    first: String,
    second: String,
    report: SuiteReport,
    seconds: f64,
}

fn runs() -> &'static Runs {
    static RUNS: OnceLock<Runs> = OnceLock::new();
    RUNS.get_or_init(|| {
        let run = || {
            let start = Instant::now();
            let out = Command::new(env!("CARGO_BIN_EXE_steklov"))
                .args(["verify", "--suite", "all", "--canonical"])
                .output()
                .expect("binary runs");
            (String::from_utf8(out.stdout).expect("utf-8 report"), start.elapsed().as_secs_f64())
        };
        let (first, seconds) = run();
        let (second, _) = run();
        let report = serde_json::from_str(&first).expect("suite report JSON");
        Runs { first, second, report, seconds }
    })
}

/// Checks whose id starts with one of `prefixes`, each carrying the pinned tolerance.
fn property(name: &str, groups: &[(&str, f64)]) {
    let report = &runs().report;
    let mut selected: Vec<&Check> = Vec::new();
    for (prefix, tol) in groups {
        let hits: Vec<&Check> = report.checks.iter().filter(|c| c.id.starts_with(prefix)).collect();
        assert!(!hits.is_empty(), "{name}: no checks under `{prefix}`");
        for c in &hits {
            assert_eq!(c.tolerance, *tol, "{name}: tolerance of {} drifted", c.id);
        }
        selected.extend(hits);
    }
    let failed: Vec<&&Check> = selected.iter().filter(|c| !c.pass).collect();
    let verdict = if failed.is_empty() { "PASS" } else { "FAIL" };
    println!("{verdict} {name} ({} checks, {} failed)", selected.len(), failed.len());
    for c in &failed {
        println!("     {}: measured {:.6e}, expected {:.6e}, tolerance {:.1e}", c.id, c.measured, c.expected, c.tolerance);
    }
    assert!(failed.is_empty(), "{name}: {} of {} checks failed", failed.len(), selected.len());
}

#[test]
fn disk_spectrum_equivalence() {
    property("disk_spectrum_equivalence", &[("disk.eigenvalue.", 1e-6), ("disk.multiplicity.", 0.0)]);
}

#[test]
fn layer_multiplier_equivalence() {
    property(
        "layer_multiplier_equivalence",
        &[
            ("layers.disk.multiplier.S1", 1e-7),
            ("layers.disk.multiplier.S3", 1e-7),
            ("layers.disk.multiplier.N", 1e-7),
            ("layers.disk.multiplier.Lambda", 1e-7),
        ],
    );
}

#[test]
fn jump_relations() {
    let mut groups = Vec::new();
    for d in ["disk", "ellipse:2,1", "kite", "star:0.1,3"] {
        groups.push((format!("layers.{d}.jump.L4"), 1e-5));
        groups.push((format!("layers.{d}.jump.continuity"), 1e-6));
    }
    let g: Vec<(&str, f64)> = groups.iter().map(|(p, t)| (p.as_str(), *t)).collect();
    property("jump_relations", &g);
}

#[test]
fn symbol_integrals() {
    let report = &runs().report;
    assert_eq!(report.checks.iter().filter(|c| c.id.starts_with("symbols.q")).count(), 36);
    property("symbol_integrals", &[("symbols.q", 1e-7), ("symbols.boundary.", 1e-7)]);
}

#[test]
fn symbol_asymptotics() {
    property(
        "symbol_asymptotics",
        &[
            ("scaling.ellipse:2,1.growth.", 0.05),
            ("scaling.kite.growth.", 0.05),
            ("scaling.disk.theta_ratio", 1e-4),
        ],
    );
}

#[test]
fn green_identities() {
    property(
        "green_identities",
        &[
            ("identities.disk.energy.", 1e-8),
            ("identities.kite.energy.", 1e-8),
            ("identities.disk.reciprocity.", 1e-6),
            ("identities.kite.reciprocity.", 1e-6),
        ],
    );
}

#[test]
fn xi_equals_pi_plus_curvature() {
    property(
        "xi_equals_pi_plus_curvature",
        &[
            ("disk.eigenvalue.pi.", 1e-6),
            ("identities.kite.xi_pi_curvature", 1e-12),
            ("identities.kite.asymmetry.", 1e-6),
        ],
    );
}

#[test]
fn interior_identity() {
    let report = &runs().report;
    let modes = report.checks.iter().filter(|c| c.id.starts_with("identities.disk.interior_ibp.")).count();
    assert_eq!(modes, 3 * 8 + 1);
    property(
        "interior_identity",
        &[
            ("identities.disk.interior_ibp.theta", 0.05),
            ("identities.disk.interior_ibp.xi", 0.05),
            ("identities.disk.interior_ibp.pi", 0.05),
            ("identities.disk.interior_ibp.fixture", 1e-6),
        ],
    );
}

#[test]
fn interior_flux() {
    property(
        "interior_flux",
        &[
            ("identities.disk.flux.fixture", 0.05),
            ("identities.disk.flux_ratio.", 0.0),
        ],
    );
}

#[test]
fn boundary_identity() {
    property(
        "boundary_identity",
        &[("identities.disk.boundary_ibp.", 1e-8), ("identities.disk.boundary_ibp_value.", 1e-8)],
    );
}

#[test]
fn nodal_scaling() {
    property(
        "nodal_scaling",
        &[
            ("scaling.disk.boundary_zeros.xi", 0.05),
            ("scaling.kite.boundary_zeros.xi", 0.05),
            ("scaling.disk.nodal_length.xi.", 0.05),
            ("scaling.disk.lap_level_length.xi", 0.05),
        ],
    );
}

#[test]
fn field_reconstruction() {
    property("field_reconstruction", &[("identities.disk.reconstruction.", 1e-6)]);
}

#[test]
fn determinism() {
    let r = runs();
    let same = !r.first.is_empty() && r.first == r.second;
    println!("{} determinism ({} bytes per report)", if same { "PASS" } else { "FAIL" }, r.first.len());
    assert!(same);
}

#[test]
fn suite_runtime() {
    let s = runs().seconds;
    println!("{} suite_runtime ({s:.1} s for `verify --suite all`)", if s < RUNTIME_LIMIT_SECONDS { "PASS" } else { "FAIL" });
    assert!(s < RUNTIME_LIMIT_SECONDS);
}

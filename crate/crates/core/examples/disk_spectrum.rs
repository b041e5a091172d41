//! Lowest eigenvalues of THETA, XI and PI on the unit disk against the closed forms.

use steklov::geometry::{build_quadrature, BoundaryCurve, CurveKind};
use steklov::layer::assemble_boundary_ops;
use steklov::oracle::oracle_spectrum;
use steklov::steklov::{spectrum, ProblemKind, SteklovSystem};

fn main() -> steklov::Result<()> {
    let curve = BoundaryCurve::new(CurveKind::Disk);
    let grid = build_quadrature(&curve, 256)?;
    let ops = assemble_boundary_ops(&curve, &grid)?;
    let sys = SteklovSystem::new(&ops)?;
    println!("cond(S2 - S3 Lambda) = {:.3e}", sys.condition_number);
    for kind in ProblemKind::ALL {
        let op = sys.operator(kind, &ops);
        let pairs = spectrum(kind, &op, 9)?;
        let exact = oracle_spectrum(kind, 9);
        println!("{kind} (asymmetry {:.1e})", op.asymmetry);
        for (p, e) in pairs.iter().zip(&exact) {
            println!("  {:>2}  mu = {:>14.9}  oracle = {:>6}  lambda = {:.6}", p.index, p.mu, e, p.lambda);
        }
    }
    Ok(())
}

//! Eigenvalue growth on the kite at N = 512, fitted in log-log coordinates.

use steklov::geometry::{build_quadrature, curve_from_spec};
use steklov::layer::assemble_boundary_ops;
use steklov::steklov::{spectrum, ProblemKind, SteklovSystem};
use steklov::verify::fit_scaling_exponent;

fn main() -> steklov::Result<()> {
    let kite = curve_from_spec("kite")?;
    let grid = build_quadrature(&kite, 512)?;
    let ops = assemble_boundary_ops(&kite, &grid)?;
    let sys = SteklovSystem::new(&ops)?;
    let ks: Vec<f64> = (8..=32).map(f64::from).collect();
    for kind in ProblemKind::ALL {
        let pairs = spectrum(kind, &sys.operator(kind, &ops), 64)?;
        let mus: Vec<f64> = (8..=32).map(|k| pairs[2 * k - 1].mu).collect();
        let (slope, _, r2) = fit_scaling_exponent(&ks, &mus)?;
        println!("{kind}: slope {slope:.4} (r^2 = {r2:.6}), mu_63 = {:.3}", pairs[63].mu);
    }
    Ok(())
}

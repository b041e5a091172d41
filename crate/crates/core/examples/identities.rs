//! Green energy, interior integration by parts, flux and boundary identities for disk modes.

use steklov::geometry::{build_quadrature, curve_from_spec, InteriorGrid};
use steklov::layer::assemble_boundary_ops;
use steklov::nodal::{
    boundary_ibp_residual, field_on_grid, interior_flux_check, interior_ibp_residual, FieldEvaluator, FieldKind,
    IdentityContext,
};
use steklov::steklov::{boundary_energy, cauchy_data, spectrum, ProblemKind, SteklovSystem};

fn main() -> steklov::Result<()> {
    let disk = curve_from_spec("disk")?;
    let grid = build_quadrature(&disk, 256)?;
    let ops = assemble_boundary_ops(&disk, &grid)?;
    let sys = SteklovSystem::new(&ops)?;
    let interior = InteriorGrid::new(&disk, 201, 0.04)?;

    for kind in ProblemKind::ALL {
        let pairs = spectrum(kind, &sys.operator(kind, &ops), 6)?;
        let pair = &pairs[3];
        let cd = cauchy_data(kind, pair, &ops, Some(&sys.theta_small))?;
        let source = FieldEvaluator::new(&disk, &grid, &cd);
        let fields = field_on_grid(&source, &interior, false, false)?;
        let ctx = IdentityContext {
            kind,
            lambda: pair.lambda,
            curve: &disk,
            grid: &grid,
            cd: &cd,
            source: &source,
            interior: &interior,
        };
        let ibp = interior_ibp_residual(&ctx, &fields.scalar(FieldKind::LapE).unwrap(), 0.0, 0.1)?;
        let flux = interior_flux_check(&ctx, &fields.scalar(FieldKind::E).unwrap())?;
        println!(
            "{kind}: energy {:.6}  B {:.6}  S {:.6}  |B-S|/|B| {:.1e}  flux {:.6} ratio {:.4}",
            boundary_energy(&cd, &grid.weights),
            ibp.b,
            ibp.s,
            ibp.residual,
            flux.flux,
            flux.ratio
        );
    }

    for k in [1usize, 4, 16] {
        let r = boundary_ibp_residual(&disk, &grid.sample_fn(|t| (k as f64 * t).cos()), 0.0);
        println!("cos {k}t: {:.10} = {:.10}, residual {:.1e}", r.lhs, r.rhs, r.residual);
    }
    Ok(())
}

//! Circle multipliers of the boundary layer operators and the jump relations on the kite.

use steklov::geometry::{build_quadrature, curve_from_spec};
use steklov::layer::{assemble_boundary_ops, default_jump_distances, jump_test_nodes};
use steklov::oracle::{oracle_layer_multiplier, LayerOp};

fn main() -> steklov::Result<()> {
    let disk = curve_from_spec("disk")?;
    let grid = build_quadrature(&disk, 128)?;
    let ops = assemble_boundary_ops(&disk, &grid)?;
    println!("  k        S1            S3            N        Lambda");
    for k in [0usize, 1, 2, 4, 8, 16] {
        let f = grid.sample_fn(|t| (k as f64 * t).cos());
        let m = |name: &str| grid.inner(&ops.by_name(name).unwrap().apply(&f), &f) / grid.inner(&f, &f);
        println!("{k:>3} {:>13.9} {:>13.9} {:>10.6} {:>10.6}", m("S1"), m("S3"), m("N"), m("Lambda"));
        let s3 = oracle_layer_multiplier(LayerOp::S3, k);
        assert!((m("S3") - s3).abs() < 1e-10);
    }

    let kite = curve_from_spec("kite")?;
    let grid = build_quadrature(&kite, 256)?;
    let ops = assemble_boundary_ops(&kite, &grid)?;
    let f = grid.sample_fn(|t| (2.0 * t).cos() + 0.3 * (3.0 * t).sin());
    let nodes = [0, 64, 128, 192];
    for r in jump_test_nodes(&ops, &f, &nodes, &default_jump_distances(&kite))? {
        println!(
            "t = {:.3}: L4 jump residual {:.1e}, continuity {:.1e} {:.1e} {:.1e}",
            r.t, r.jump_residual, r.continuity[0], r.continuity[1], r.continuity[2]
        );
    }
    Ok(())
}

//! Nodal set of an XI eigenfunction on the disk and the zero set of its Laplacian.

use steklov::geometry::{build_quadrature, curve_from_spec, InteriorGrid};
use steklov::layer::assemble_boundary_ops;
use steklov::nodal::{boundary_zeros, field_on_grid, level_set_extract, FieldEvaluator, FieldKind};
use steklov::steklov::{cauchy_data, spectrum, ProblemKind, SteklovSystem};

fn main() -> steklov::Result<()> {
    let disk = curve_from_spec("disk")?;
    let grid = build_quadrature(&disk, 256)?;
    let ops = assemble_boundary_ops(&disk, &grid)?;
    let sys = SteklovSystem::new(&ops)?;
    let pairs = spectrum(ProblemKind::Xi, &sys.operator(ProblemKind::Xi, &ops), 8)?;
    let pair = &pairs[5];
    let cd = cauchy_data(ProblemKind::Xi, pair, &ops, None)?;

    let interior = InteriorGrid::new(&disk, 201, 0.04)?;
    let fields = field_on_grid(&FieldEvaluator::new(&disk, &grid, &cd), &interior, false, false)?;
    let mut nodal = level_set_extract(&fields.scalar(FieldKind::E).unwrap(), 0.0);
    let zeros = boundary_zeros(&cd.dn_u, 0.0);
    nodal.bridge_to_boundary(&disk, &zeros.params, 2.0 * (0.04 + 2.0 * interior.h));
    let lap = level_set_extract(&fields.scalar(FieldKind::LapE).unwrap(), 0.0);

    println!("lambda = {:.6}, boundary zeros = {}", pair.lambda, zeros.count);
    println!("nodal set: {} segments, length {:.4} ({:.4} inside the collar)", nodal.segments.len(), nodal.length, nodal.raw_length);
    println!("zero set of the Laplacian: length {:.4}", lap.raw_length);
    let path = std::env::temp_dir().join("xi_mode5.svg");
    std::fs::write(&path, nodal.to_svg(&disk))?;
    println!("wrote {}", path.display());
    Ok(())
}

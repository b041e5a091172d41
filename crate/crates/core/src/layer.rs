//! Nyström discretization of `S₁, S₂, S₃, N, Λ` and off-boundary evaluation
//! of the potentials `L₁`–`L₄`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SteklovError};
use crate::geometry::{BoundaryCurve, Point, QuadratureGrid};
use crate::kernels::{split_diag, split_offdiag, KernelId, Pair};
use crate::operator::DiscreteOperator;
use crate::trig::TrigPoly;

/// Off-boundary evaluation refines the boundary rule until
/// `M · d ≥ NEAR_FIELD_FACTOR · L` (`L = 2π · max speed`).
pub const NEAR_FIELD_FACTOR: f64 = 6.0;
pub const DEFAULT_MAX_UPSAMPLE: usize = 128;
pub const MIN_NODES: usize = 32;
const MAX_BORDERED_CONDITION: f64 = 1e14;

/// Kress weights `R_j(t_i)` indexed by `(i - j) mod n`.
pub fn kress_weights(n: usize) -> Vec<f64> {
    let half = n / 2;
    let hf = half as f64;
    (0..n)
        .map(|d| {
            let tau = 2.0 * PI * d as f64 / n as f64;
            let s: f64 = (1..half).map(|m| (m as f64 * tau).cos() / m as f64).sum();
            let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
            -2.0 * PI / hf * s - PI / (hf * hf) * sign
        })
        .collect()
}

fn log_sin_table(n: usize) -> Vec<f64> {
    (0..n)
        .map(|d| {
            let h = (PI * d as f64 / n as f64).sin();
            (4.0 * h * h).ln()
        })
        .collect()
}

/// Log-split Nyström matrix of one kernel on the grid.
pub fn assemble_kernel(which: KernelId, grid: &QuadratureGrid) -> DMatrix<f64> {
    let n = grid.n;
    let rw = kress_weights(n);
    let ls = log_sin_table(n);
    let h = 2.0 * PI / n as f64;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = &grid.nodes[i];
            (0..n)
                .map(|j| {
                    let yj = &grid.nodes[j];
                    let d = (i + n - j) % n;
                    let (k1, k2) = if i == j {
                        split_diag(which, xi.speed, xi.curvature)
                    } else {
                        let dv = [yj.point[0] - xi.point[0], yj.point[1] - xi.point[1]];
                        let pair = Pair {
                            d: dv,
                            r2: dv[0] * dv[0] + dv[1] * dv[1],
                            normal_x: xi.normal,
                            normal_y: yj.normal,
                        };
                        split_offdiag(which, &pair, ls[d])
                    };
                    (k1 * rw[d] + h * k2) * yj.speed
                })
                .collect()
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// The boundary operator bundle on one grid.
#[derive(Debug, Clone)]
pub struct BoundaryOps {
    pub curve: BoundaryCurve,
    pub grid: QuadratureGrid,
    pub s1: DiscreteOperator,
    pub s2: DiscreteOperator,
    pub s3: DiscreteOperator,
    pub n: DiscreteOperator,
    pub lambda: DiscreteOperator,
    /// 1-norm condition number of the bordered single-layer system.
    pub bordered_condition: f64,
}

impl BoundaryOps {
    pub fn by_name(&self, name: &str) -> Option<&DiscreteOperator> {
        match name {
            "S1" => Some(&self.s1),
            "S2" => Some(&self.s2),
            "S3" => Some(&self.s3),
            "N" => Some(&self.n),
            "Lambda" | "Λ" => Some(&self.lambda),
            _ => None,
        }
    }

    pub fn curvature(&self) -> Vec<f64> {
        self.grid.curvature()
    }
}

pub fn assemble_boundary_ops(curve: &BoundaryCurve, grid: &QuadratureGrid) -> Result<BoundaryOps> {
    if grid.n < MIN_NODES || grid.n % 2 != 0 {
        return Err(SteklovError::InvalidQuadrature(format!(
            "N must be even and ≥ {MIN_NODES} (got {})",
            grid.n
        )));
    }
    let w = &grid.weights;
    let s1 = DiscreteOperator::new("S1", assemble_kernel(KernelId::LapEHat, grid), w);
    let s2 = DiscreteOperator::new("S2", assemble_kernel(KernelId::DnEHat, grid), w);
    let s3 = DiscreteOperator::new("S3", assemble_kernel(KernelId::EHat, grid), w);
    let n_op = DiscreteOperator::new("N", assemble_kernel(KernelId::DnLapEHat, grid), w);
    let (lambda, bordered_condition) = dirichlet_to_neumann(grid)?;
    Ok(BoundaryOps {
        curve: curve.clone(),
        grid: grid.clone(),
        s1,
        s2,
        s3,
        n: n_op,
        lambda: DiscreteOperator::new("Lambda", lambda, w),
        bordered_condition,
    })
}

/// `Λ = (K' − ½I)Φ`, where `Φ` maps Dirichlet data to the mean-zero
/// single-layer density of the bordered system `[[V, 1], [wᵀ, 0]]`.
fn dirichlet_to_neumann(grid: &QuadratureGrid) -> Result<(DMatrix<f64>, f64)> {
    let n = grid.n;
    let v = assemble_kernel(KernelId::E, grid);
    let kp = assemble_kernel(KernelId::DnxE, grid);
    let mut b = DMatrix::zeros(n + 1, n + 1);
    b.view_mut((0, 0), (n, n)).copy_from(&v);
    for i in 0..n {
        b[(i, n)] = 1.0;
        b[(n, i)] = grid.weights[i];
    }
    let norm1 = |m: &DMatrix<f64>| {
        (0..m.ncols()).map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
    };
    let inv = match b.clone().lu().try_inverse() {
        Some(inv) => inv,
        None => return Err(SteklovError::SingularBordered(f64::INFINITY)),
    };
    let cond = norm1(&b) * norm1(&inv);
    if !cond.is_finite() || cond > MAX_BORDERED_CONDITION {
        return Err(SteklovError::SingularBordered(cond));
    }
    let phi = inv.view((0, 0), (n, n)).into_owned();
    let mut jump = kp;
    for i in 0..n {
        jump[(i, i)] -= 0.5;
    }
    Ok((jump * phi, cond))
}

pub(crate) struct LevelGeom {
    pub(crate) points: Vec<Point>,
    pub(crate) normals: Vec<Point>,
    pub(crate) weights: Vec<f64>,
}

/// Boundary rules at `n · 2^l` nodes, built on demand.
pub struct BoundarySampler {
    curve: BoundaryCurve,
    n: usize,
    levels: Vec<OnceLock<LevelGeom>>,
    length_scale: f64,
}

impl BoundarySampler {
    pub fn new(curve: &BoundaryCurve, n: usize, max_factor: usize) -> Self {
        let count = (max_factor.max(1) as f64).log2().floor() as usize + 1;
        BoundarySampler {
            curve: curve.clone(),
            n,
            levels: (0..count).map(|_| OnceLock::new()).collect(),
            length_scale: 2.0 * PI * curve.max_speed(),
        }
    }

    pub fn curve(&self) -> &BoundaryCurve {
        &self.curve
    }

    pub fn base_nodes(&self) -> usize {
        self.n
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Smallest distance at which the finest rule is still accurate.
    pub fn floor(&self) -> f64 {
        NEAR_FIELD_FACTOR * self.length_scale / (self.n << (self.levels.len() - 1)) as f64
    }

    pub fn level_for(&self, distance: f64) -> Option<usize> {
        (0..self.levels.len())
            .find(|&l| (self.n << l) as f64 * distance >= NEAR_FIELD_FACTOR * self.length_scale)
    }

    pub(crate) fn geom(&self, l: usize) -> &LevelGeom {
        self.levels[l].get_or_init(|| {
            let m = self.n << l;
            let h = 2.0 * PI / m as f64;
            let cps: Vec<_> = (0..m).map(|j| self.curve.at(h * j as f64)).collect();
            LevelGeom {
                points: cps.iter().map(|c| c.point).collect(),
                normals: cps.iter().map(|c| c.normal).collect(),
                weights: cps.iter().map(|c| c.speed * h).collect(),
            }
        })
    }
}

/// A set of nodal boundary functions with lazily built trigonometric resamplings.
pub struct UpsampledSet {
    polys: Vec<TrigPoly>,
    levels: Vec<OnceLock<Vec<Vec<f64>>>>,
}

impl UpsampledSet {
    pub fn new(densities: &[&[f64]], level_count: usize) -> Self {
        UpsampledSet {
            polys: densities.iter().map(|d| TrigPoly::from_nodal(d)).collect(),
            levels: (0..level_count).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn at(&self, l: usize) -> &Vec<Vec<f64>> {
        self.levels[l].get_or_init(|| {
            self.polys.iter().map(|p| p.resample(p.len() << l)).collect()
        })
    }
}

/// Values of `L₁f₁, L₂f₂, L₃f₃, L₄f₄` at one off-boundary point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialField {
    pub point: Point,
    pub inside: bool,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
}

/// Evaluates the four layer potentials for fixed densities.
pub struct LayerPotentials<'a> {
    sampler: &'a BoundarySampler,
    densities: UpsampledSet,
}

impl<'a> LayerPotentials<'a> {
    /// `densities = [f₁, f₂, f₃, f₄]` for the kernels `Ê, ∂_ν,y Ê, Δ_y Ê, ∂_ν,y Δ_y Ê`.
    pub fn new(sampler: &'a BoundarySampler, densities: [&[f64]; 4]) -> Self {
        LayerPotentials { sampler, densities: UpsampledSet::new(&densities, sampler.level_count()) }
    }

    pub fn eval(&self, p: Point) -> Result<PotentialField> {
        let loc = self.sampler.curve.locate(p, 0.0);
        let floor = self.sampler.floor();
        let level = match self.sampler.level_for(loc.distance) {
            Some(l) => l,
            None => return Err(SteklovError::CollarPoint(p[0], p[1], loc.distance, floor)),
        };
        let g = self.sampler.geom(level);
        let f = self.densities.at(level);
        let mut acc = [0.0; 4];
        for j in 0..g.points.len() {
            let d = [g.points[j][0] - p[0], g.points[j][1] - p[1]];
            let r2 = d[0] * d[0] + d[1] * d[1];
            let log_r = 0.5 * r2.ln();
            let proj = d[0] * g.normals[j][0] + d[1] * g.normals[j][1];
            let w = g.weights[j];
            acc[0] += f[0][j] * r2 * log_r * w;
            acc[1] += f[1][j] * (2.0 * log_r + 1.0) * proj * w;
            acc[2] += f[2][j] * (log_r + 1.0) * w;
            acc[3] += f[3][j] * proj / r2 * w;
        }
        Ok(PotentialField {
            point: p,
            inside: loc.inside,
            l1: acc[0] / (8.0 * PI),
            l2: acc[1] / (8.0 * PI),
            l3: acc[2] / (2.0 * PI),
            l4: acc[3] / (2.0 * PI),
        })
    }
}

/// One-shot evaluation of the four potentials at `p`.
pub fn eval_potentials(
    curve: &BoundaryCurve,
    grid: &QuadratureGrid,
    densities: [&[f64]; 4],
    p: Point,
) -> Result<PotentialField> {
    let sampler = BoundarySampler::new(curve, grid.n, DEFAULT_MAX_UPSAMPLE);
    LayerPotentials::new(&sampler, densities).eval(p)
}

/// Value at `0` of the interpolating polynomial through `(x_i, y_i)`.
pub fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (xs[i + m] * p[i] - xs[i] * p[i + 1]) / (xs[i + m] - xs[i]);
        }
    }
    p[0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JumpReport {
    pub t: f64,
    pub f: f64,
    pub nf: f64,
    pub l4_interior: f64,
    pub l4_exterior: f64,
    /// `|L₄f₊ − L₄f₋ − f|`
    pub jump_residual: f64,
    /// `|L₄f₊ + L₄f₋ − 2Nf|`
    pub mean_residual: f64,
    /// `|Lⱼf₊ − Lⱼf₋|` for `j = 1, 2, 3`.
    pub continuity: [f64; 3],
    /// `|Lⱼf₊ − Sf|` against `S₃f, S₂f, S₁f`.
    pub trace_residual: [f64; 3],
}

/// Default offsets for [`jump_test`]: `s₀ 2^{-i}` for six halvings.
pub fn default_jump_distances(curve: &BoundaryCurve) -> Vec<f64> {
    let s0 = 0.05 * curve.diameter();
    (0..6).map(|i| s0 / (1 << i) as f64).collect()
}

/// Jump and continuity check at node `node`, extrapolating `s → 0` from
/// `x ∓ sν` over `distances`.
pub fn jump_test(ops: &BoundaryOps, f: &[f64], node: usize, distances: &[f64]) -> Result<JumpReport> {
    Ok(jump_test_nodes(ops, f, &[node], distances)?.remove(0))
}

/// [`jump_test`] at several nodes sharing one refined boundary rule.
pub fn jump_test_nodes(
    ops: &BoundaryOps,
    f: &[f64],
    nodes: &[usize],
    distances: &[f64],
) -> Result<Vec<JumpReport>> {
    let sampler = BoundarySampler::new(&ops.curve, ops.grid.n, 8 * DEFAULT_MAX_UPSAMPLE);
    let min = distances.iter().cloned().fold(f64::INFINITY, f64::min);
    if distances.len() < 2 || min < 5.0 * sampler.floor() {
        return Err(SteklovError::InvalidArgument(format!(
            "jump distances must number at least 2 and exceed {:.3e}",
            5.0 * sampler.floor()
        )));
    }
    let pot = LayerPotentials::new(&sampler, [f, f, f, f]);
    let nf_all = ops.n.apply(f);
    let traces = [ops.s3.apply(f), ops.s2.apply(f), ops.s1.apply(f)];
    nodes
        .iter()
        .map(|&node| {
            let c = &ops.grid.nodes[node];
            let side = |sign: f64| -> Result<Vec<Vec<f64>>> {
                let mut vals = vec![Vec::new(); 4];
                for &s in distances {
                    let p = [c.point[0] + sign * s * c.normal[0], c.point[1] + sign * s * c.normal[1]];
                    let v = pot.eval(p)?;
                    if v.inside != (sign < 0.0) {
                        return Err(SteklovError::InvalidArgument(format!(
                            "offset {s} crosses the boundary at node {node}"
                        )));
                    }
                    for (k, x) in [v.l1, v.l2, v.l3, v.l4].into_iter().enumerate() {
                        vals[k].push(x);
                    }
                }
                Ok(vals)
            };
            let lim = |v: &Vec<f64>| extrapolate_to_zero(distances, v);
            let li: Vec<f64> = side(-1.0)?.iter().map(lim).collect();
            let lo: Vec<f64> = side(1.0)?.iter().map(lim).collect();
            let nf = nf_all[node];
            Ok(JumpReport {
                t: c.t,
                f: f[node],
                nf,
                l4_interior: li[3],
                l4_exterior: lo[3],
                jump_residual: (li[3] - lo[3] - f[node]).abs(),
                mean_residual: (li[3] + lo[3] - 2.0 * nf).abs(),
                continuity: [(li[0] - lo[0]).abs(), (li[1] - lo[1]).abs(), (li[2] - lo[2]).abs()],
                trace_residual: [
                    (li[0] - traces[0][node]).abs(),
                    (li[1] - traces[1][node]).abs(),
                    (li[2] - traces[2][node]).abs(),
                ],
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_quadrature, CurveKind};
    use crate::oracle::{oracle_layer_multiplier, LayerOp};

    fn disk_ops(n: usize) -> BoundaryOps {
        let curve = BoundaryCurve::new(CurveKind::Disk);
        let grid = build_quadrature(&curve, n).unwrap();
        assemble_boundary_ops(&curve, &grid).unwrap()
    }

    fn multiplier(op: &DiscreteOperator, grid: &QuadratureGrid, k: usize) -> f64 {
        let f = grid.sample_fn(|t| (k as f64 * t).cos());
        let g = op.apply(&f);
        grid.inner(&g, &f) / grid.inner(&f, &f)
    }

    #[test]
    fn kress_weights_integrate_log_kernel() {
        // ∫ log(4 sin²(s/2)) cos(2s) ds = -π
        let n = 32;
        let rw = kress_weights(n);
        let v: f64 = (0..n).map(|j| rw[j] * (2.0 * 2.0 * PI * j as f64 / n as f64).cos()).sum();
        assert!((v + PI).abs() < 1e-13);
    }

    #[test]
    fn disk_multipliers() {
        let ops = disk_ops(64);
        for k in 0..=8 {
            for (op, which) in [
                (&ops.s1, LayerOp::S1),
                (&ops.s2, LayerOp::S2),
                (&ops.s3, LayerOp::S3),
                (&ops.n, LayerOp::N),
                (&ops.lambda, LayerOp::Lambda),
            ] {
                let m = multiplier(op, &ops.grid, k);
                let want = oracle_layer_multiplier(which, k);
                assert!((m - want).abs() < 1e-10, "{} k={k}: {m} vs {want}", op.name);
            }
        }
        let f = ops.grid.sample_fn(|t| (2.0 * t).cos());
        let g = ops.s3.apply(&f);
        assert!((g[5] - f[5] / 24.0).abs() < 1e-12);
    }

    #[test]
    fn disk_operators_are_symmetric() {
        let ops = disk_ops(64);
        for op in [&ops.s1, &ops.s3, &ops.n, &ops.lambda] {
            assert!(op.asymmetry < 1e-10, "{} {}", op.name, op.asymmetry);
        }
    }

    #[test]
    fn too_few_nodes_rejected() {
        let curve = BoundaryCurve::new(CurveKind::Disk);
        let grid = build_quadrature(&curve, 16).unwrap();
        assert!(assemble_boundary_ops(&curve, &grid).is_err());
    }

    #[test]
    fn gauss_identity_and_harmonic_extension() {
        let curve = BoundaryCurve::new(CurveKind::Kite);
        let grid = build_quadrature(&curve, 64).unwrap();
        let one = vec![1.0; 64];
        let zero = vec![0.0; 64];
        let inside = eval_potentials(&curve, &grid, [&zero, &zero, &zero, &one], [-0.3, 0.2]).unwrap();
        assert!((inside.l4 - 1.0).abs() < 1e-12);
        let outside = eval_potentials(&curve, &grid, [&zero, &zero, &zero, &one], [1.5, 0.4]).unwrap();
        assert!(outside.l4.abs() < 1e-12);

        let disk = BoundaryCurve::new(CurveKind::Disk);
        let dg = build_quadrature(&disk, 64).unwrap();
        for k in 1..5 {
            let f = dg.sample_fn(|t| (k as f64 * t).cos());
            for r in [0.3, 0.9, 0.995] {
                let v = eval_potentials(&disk, &dg, [&f, &f, &f, &f], [r, 0.0]).unwrap();
                assert!((v.l4 - 0.5 * r.powi(k)).abs() < 1e-12, "k={k} r={r}: {}", v.l4);
            }
        }
    }

    #[test]
    fn collar_and_far_field() {
        let disk = BoundaryCurve::new(CurveKind::Disk);
        let grid = build_quadrature(&disk, 64).unwrap();
        let f = grid.sample_fn(|t| t.sin() + 0.3);
        let err = eval_potentials(&disk, &grid, [&f, &f, &f, &f], [0.99999, 0.0]);
        assert!(matches!(err, Err(SteklovError::CollarPoint(..))));
        let v = eval_potentials(&disk, &grid, [&f, &f, &f, &f], [10.0, 0.0]).unwrap();
        let l1: f64 = f.iter().zip(&grid.weights).map(|(a, w)| a.abs() * w).sum();
        let kmax = 11f64.powi(2) * 11f64.ln() / (8.0 * PI);
        assert!(v.l1.abs() <= l1 * kmax);
    }

    #[test]
    fn jump_relations() {
        let ops = disk_ops(64);
        let one = vec![1.0; 64];
        let d = default_jump_distances(&ops.curve);
        let r = jump_test(&ops, &one, 0, &d).unwrap();
        assert!((r.l4_interior - 1.0).abs() < 1e-6 && r.l4_exterior.abs() < 1e-6);
        let f = ops.grid.sample_fn(|t| (3.0 * t).cos());
        let r = jump_test(&ops, &f, 0, &d).unwrap();
        assert!((r.l4_interior - 0.5).abs() < 1e-6 && (r.l4_exterior + 0.5).abs() < 1e-6);

        let curve = BoundaryCurve::new(CurveKind::Kite);
        let grid = build_quadrature(&curve, 128).unwrap();
        let kops = assemble_boundary_ops(&curve, &grid).unwrap();
        let f = grid.sample_fn(|t| (2.0 * t).cos());
        let d = default_jump_distances(&curve);
        for node in [0, 17, 64, 100] {
            let r = jump_test(&kops, &f, node, &d).unwrap();
            assert!(r.jump_residual < 1e-5, "{r:?}");
            assert!(r.mean_residual < 1e-5, "{r:?}");
            assert!(r.continuity.iter().all(|c| *c < 1e-6), "{r:?}");
        }
    }

    #[test]
    fn neville_extrapolation_is_exact_on_polynomials() {
        let xs = [0.4, 0.2, 0.1, 0.05];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - x + 3.0 * x * x * x).collect();
        assert!((extrapolate_to_zero(&xs, &ys) - 2.0).abs() < 1e-13);
    }
}

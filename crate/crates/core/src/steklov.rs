//! The operators `θ, Θ, Ξ, Π`, their spectra and the Cauchy data of eigenfunctions.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SteklovError};
use crate::layer::BoundaryOps;
use crate::operator::{DiscreteOperator, TrigSubspace};

pub const MAX_CONDITION: f64 = 1e12;
pub const ZERO_MODE_TOL: f64 = 1e-8;
const EIGEN_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Theta,
    Xi,
    Pi,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 3] = [ProblemKind::Theta, ProblemKind::Xi, ProblemKind::Pi];

    /// Physical `λ` from the operator eigenvalue `μ`.
    pub fn lambda_of(self, mu: f64) -> f64 {
        match self {
            ProblemKind::Theta => mu.cbrt(),
            _ => mu,
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::Theta => "theta",
            ProblemKind::Xi => "xi",
            ProblemKind::Pi => "pi",
        })
    }
}

impl FromStr for ProblemKind {
    type Err = SteklovError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "theta" => Ok(ProblemKind::Theta),
            "xi" => Ok(ProblemKind::Xi),
            "pi" => Ok(ProblemKind::Pi),
            _ => Err(SteklovError::InvalidArgument(format!(
                "unknown problem `{s}` (expected theta, xi or pi)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenPair {
    pub index: usize,
    pub mu: f64,
    pub lambda: f64,
    /// Nodal values, `‖φ‖_{L²(∂M)} = 1`.
    pub phi: Vec<f64>,
    /// Set when `μ` fell inside the zero band and was reported as 0.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyData {
    pub u: Vec<f64>,
    pub dn_u: Vec<f64>,
    pub lap_u: Vec<f64>,
    pub dn_lap_u: Vec<f64>,
}

impl CauchyData {
    pub fn zeros(n: usize) -> Self {
        CauchyData { u: vec![0.0; n], dn_u: vec![0.0; n], lap_u: vec![0.0; n], dn_lap_u: vec![0.0; n] }
    }
}

/// `θ`, `Ξ` and the conditioning of `S₂ − S₃Λ`, sharing one factorization.
#[derive(Debug, Clone)]
pub struct SteklovSystem {
    pub theta_small: DiscreteOperator,
    pub xi: DiscreteOperator,
    pub condition_number: f64,
}

impl SteklovSystem {
    pub fn new(ops: &BoundaryOps) -> Result<Self> {
        let n = ops.grid.n;
        let m = &ops.s2.matrix - &ops.s3.matrix * &ops.lambda.matrix;
        let sv = m.clone().singular_values();
        let smax = sv.max();
        let smin = sv.min();
        let condition_number = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if !(condition_number < MAX_CONDITION) {
            return Err(SteklovError::IllConditioned { name: "S2 - S3 Lambda".into(), condition: condition_number });
        }
        let lu = m.lu();
        let mut rhs = -&ops.n.matrix;
        for i in 0..n {
            rhs[(i, i)] += 0.5;
        }
        let solve = |b: &DMatrix<f64>, name: &str| {
            lu.solve(b).ok_or_else(|| SteklovError::IllConditioned {
                name: name.into(),
                condition: condition_number,
            })
        };
        let theta = solve(&rhs, "theta")?;
        let xi = solve(&ops.s1.matrix, "Xi")?;
        let w = &ops.grid.weights;
        Ok(SteklovSystem {
            theta_small: DiscreteOperator::new("theta", theta, w),
            xi: DiscreteOperator::new("Xi", xi, w),
            condition_number,
        })
    }

    /// `Θ`, `Ξ` or `Π`, restricted and symmetrized.
    pub fn operator(&self, kind: ProblemKind, ops: &BoundaryOps) -> DiscreteOperator {
        let w = &ops.grid.weights;
        let mut op = match kind {
            ProblemKind::Theta => {
                DiscreteOperator::new("Theta", -(&ops.lambda.matrix * &self.theta_small.matrix), w)
            }
            ProblemKind::Xi => self.xi.clone(),
            ProblemKind::Pi => {
                let mut m = self.xi.matrix.clone();
                for (i, h) in ops.grid.curvature().iter().enumerate() {
                    m[(i, i)] -= h;
                }
                DiscreteOperator::new("Pi", m, w)
            }
        };
        op.symmetrize_on(&spectral_subspace(ops));
        op
    }
}

/// Trigonometric subspace used for the spectral problems: degree `N/4`.
pub fn spectral_subspace(ops: &BoundaryOps) -> TrigSubspace {
    TrigSubspace::new(&ops.grid.t, &ops.grid.weights, ops.grid.n / 4)
}

/// `θ = (S₂ − S₃Λ)⁻¹(½I − N)` and the condition number of `S₂ − S₃Λ`.
pub fn assemble_theta_small(ops: &BoundaryOps) -> Result<(DiscreteOperator, f64)> {
    let sys = SteklovSystem::new(ops)?;
    Ok((sys.theta_small, sys.condition_number))
}

/// The symmetrized operator for `kind` together with the condition number.
pub fn assemble_operator(kind: ProblemKind, ops: &BoundaryOps) -> Result<(DiscreteOperator, f64)> {
    let sys = SteklovSystem::new(ops)?;
    Ok((sys.operator(kind, ops), sys.condition_number))
}

/// Lowest `count` eigenpairs of a symmetrized operator.
pub fn spectrum(kind: ProblemKind, op: &DiscreteOperator, count: usize) -> Result<Vec<EigenPair>> {
    let n = op.n();
    if !op.symmetrized {
        return Err(SteklovError::InvalidArgument(format!("operator {} is not symmetrized", op.name)));
    }
    if count > n / 8 {
        return Err(SteklovError::InvalidArgument(format!(
            "requested {count} modes but at most N/8 = {} are resolved",
            n / 8
        )));
    }
    let m = op.spectral_matrix();
    let eig = SymmetricEigen::try_new(m, 1e-15, EIGEN_MAX_ITER)
        .ok_or_else(|| SteklovError::EigenNonConvergence(op.name.clone()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let inv_sqrt_w: DVector<f64> = op.weights.map(|w| 1.0 / w.sqrt());
    let mut pairs = Vec::with_capacity(count);
    for (index, &c) in order.iter().take(count).enumerate() {
        let g = eig.eigenvectors.column(c).into_owned();
        let psi = match &op.galerkin {
            Some(gal) => &gal.basis * g,
            None => g,
        };
        let mut phi: Vec<f64> = psi.component_mul(&inv_sqrt_w).iter().copied().collect();
        normalize_sign(&mut phi);
        let raw = eig.eigenvalues[c];
        let clamped = raw.abs() < ZERO_MODE_TOL;
        let mu = if clamped { 0.0 } else { raw };
        pairs.push(EigenPair { index, mu, lambda: kind.lambda_of(mu), phi, clamped });
    }
    Ok(pairs)
}

fn normalize_sign(phi: &mut [f64]) {
    let mut best = 0;
    for (i, v) in phi.iter().enumerate() {
        if v.abs() > phi[best].abs() * (1.0 + 1e-9) {
            best = i;
        }
    }
    if phi[best] < 0.0 {
        phi.iter_mut().for_each(|v| *v = -*v);
    }
}

/// Boundary Cauchy data of the eigenfunction for `pair`; `theta_small` is
/// required for `THETA`.
pub fn cauchy_data(
    kind: ProblemKind,
    pair: &EigenPair,
    ops: &BoundaryOps,
    theta_small: Option<&DiscreteOperator>,
) -> Result<CauchyData> {
    let n = pair.phi.len();
    let phi = pair.phi.clone();
    match kind {
        ProblemKind::Theta => {
            let theta = theta_small.ok_or_else(|| {
                SteklovError::InvalidArgument("THETA Cauchy data needs the θ operator".into())
            })?;
            Ok(CauchyData {
                lap_u: theta.apply(&phi),
                dn_lap_u: phi.iter().map(|v| -pair.mu * v).collect(),
                dn_u: vec![0.0; n],
                u: phi,
            })
        }
        ProblemKind::Xi | ProblemKind::Pi => {
            let lap_u: Vec<f64> = if kind == ProblemKind::Xi {
                phi.iter().map(|v| pair.lambda * v).collect()
            } else {
                phi.iter().zip(ops.grid.curvature()).map(|(v, h)| (pair.lambda + h) * v).collect()
            };
            Ok(CauchyData { u: vec![0.0; n], dn_u: phi, dn_lap_u: ops.lambda.apply(&lap_u), lap_u })
        }
    }
}

/// `∫_{∂M} ∂_ν u Δu − u ∂_ν Δu ds`.
pub fn boundary_energy(cd: &CauchyData, weights: &[f64]) -> f64 {
    (0..weights.len())
        .map(|i| (cd.dn_u[i] * cd.lap_u[i] - cd.u[i] * cd.dn_lap_u[i]) * weights[i])
        .sum()
}

/// Green reciprocity residual
/// `∫ ∂_νΔu·v − Δu·∂_νv + ∂_νu·Δv − u·∂_νΔv`, divided by the integral of the
/// absolute values of the four terms.
pub fn reciprocity_residual(a: &CauchyData, b: &CauchyData, weights: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut scale = 0.0;
    for i in 0..weights.len() {
        let terms = [
            a.dn_lap_u[i] * b.u[i],
            -a.lap_u[i] * b.dn_u[i],
            a.dn_u[i] * b.lap_u[i],
            -a.u[i] * b.dn_lap_u[i],
        ];
        sum += terms.iter().sum::<f64>() * weights[i];
        scale += terms.iter().map(|t| t.abs()).sum::<f64>() * weights[i];
    }
    if scale == 0.0 {
        0.0
    } else {
        sum.abs() / scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub problem: ProblemKind,
    pub domain: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub eigenvalues: Vec<f64>,
    pub lambda: Vec<f64>,
    pub asymmetry: f64,
    pub condition_number: f64,
}

impl SpectrumReport {
    pub fn new(kind: ProblemKind, ops: &BoundaryOps, op: &DiscreteOperator, cond: f64, pairs: &[EigenPair]) -> Self {
        SpectrumReport {
            problem: kind,
            domain: ops.curve.descriptor(),
            n: ops.grid.n,
            eigenvalues: pairs.iter().map(|p| p.mu).collect(),
            lambda: pairs.iter().map(|p| p.lambda).collect(),
            asymmetry: op.asymmetry,
            condition_number: cond,
        }
    }
}

/// Eigenfunction traces as CSV: `t, x, y, phi_0, phi_1, …` over boundary nodes.
pub fn write_traces(out: &mut impl Write, ops: &BoundaryOps, pairs: &[EigenPair]) -> Result<()> {
    let mut header = vec!["t".to_string(), "x".into(), "y".into()];
    header.extend(pairs.iter().map(|p| format!("phi_{}", p.index)));
    writeln!(out, "{}", header.join(","))?;
    for (i, node) in ops.grid.nodes.iter().enumerate() {
        let mut row = vec![
            format!("{:.16e}", node.t),
            format!("{:.16e}", node.point[0]),
            format!("{:.16e}", node.point[1]),
        ];
        row.extend(pairs.iter().map(|p| format!("{:.16e}", p.phi[i])));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_quadrature, BoundaryCurve, CurveKind};
    use crate::layer::assemble_boundary_ops;
    use crate::oracle::{oracle_spectrum, theta_multiplier};

    fn ops(kind: CurveKind, n: usize) -> BoundaryOps {
        let curve = BoundaryCurve::new(kind);
        let grid = build_quadrature(&curve, n).unwrap();
        assemble_boundary_ops(&curve, &grid).unwrap()
    }

    #[test]
    fn theta_small_disk_multipliers() {
        let ops = ops(CurveKind::Disk, 64);
        let (theta, cond) = assemble_theta_small(&ops).unwrap();
        assert!(cond > 1.0 && cond < MAX_CONDITION);
        for k in 0..6 {
            let f = ops.grid.sample_fn(|t| (k as f64 * t).cos());
            let g = theta.apply(&f);
            let m = ops.grid.inner(&g, &f) / ops.grid.inner(&f, &f);
            assert!((m - theta_multiplier(k)).abs() < 1e-7 * (1.0 + m.abs()), "k={k} {m}");
        }
    }

    #[test]
    fn disk_spectra_match_oracle() {
        let ops = ops(CurveKind::Disk, 128);
        let sys = SteklovSystem::new(&ops).unwrap();
        for kind in ProblemKind::ALL {
            let op = sys.operator(kind, &ops);
            assert!(op.asymmetry < 1e-8, "{kind} {}", op.asymmetry);
            let pairs = spectrum(kind, &op, 11).unwrap();
            let want = oracle_spectrum(kind, 11);
            for (p, w) in pairs.iter().zip(&want) {
                assert!((p.mu - w).abs() <= 1e-7 * w.max(1.0), "{kind}: {} vs {w}", p.mu);
                assert!((ops.grid.l2_norm(&p.phi) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn disk_cauchy_data() {
        let ops = ops(CurveKind::Disk, 64);
        let sys = SteklovSystem::new(&ops).unwrap();
        let op = sys.operator(ProblemKind::Theta, &ops);
        let pairs = spectrum(ProblemKind::Theta, &op, 3).unwrap();
        assert!(pairs[0].clamped && pairs[0].mu == 0.0);
        let cd = cauchy_data(ProblemKind::Theta, &pairs[1], &ops, Some(&sys.theta_small)).unwrap();
        for i in 0..64 {
            assert!((cd.lap_u[i] + 4.0 * cd.u[i]).abs() < 1e-8);
            assert!((cd.dn_lap_u[i] + 4.0 * cd.u[i]).abs() < 1e-8);
        }
        let xi = sys.operator(ProblemKind::Xi, &ops);
        let pairs = spectrum(ProblemKind::Xi, &xi, 7).unwrap();
        let cd = cauchy_data(ProblemKind::Xi, &pairs[3], &ops, None).unwrap();
        for i in 0..64 {
            assert!((cd.lap_u[i] - 6.0 * cd.dn_u[i]).abs() < 1e-8);
            assert!((cd.dn_lap_u[i] - 12.0 * cd.dn_u[i]).abs() < 1e-7);
        }
        let pi = sys.operator(ProblemKind::Pi, &ops);
        let pairs = spectrum(ProblemKind::Pi, &pi, 1).unwrap();
        let cd = cauchy_data(ProblemKind::Pi, &pairs[0], &ops, None).unwrap();
        let c = cd.dn_u[0];
        for i in 0..64 {
            assert!((cd.lap_u[i] - 2.0 * c).abs() < 1e-8 && cd.dn_lap_u[i].abs() < 1e-8);
        }
    }

    #[test]
    fn green_identities_on_kite() {
        let ops = ops(CurveKind::Kite, 128);
        let sys = SteklovSystem::new(&ops).unwrap();
        for kind in ProblemKind::ALL {
            let op = sys.operator(kind, &ops);
            let pairs = spectrum(kind, &op, 6).unwrap();
            let cds: Vec<_> =
                pairs.iter().map(|p| cauchy_data(kind, p, &ops, Some(&sys.theta_small)).unwrap()).collect();
            for cd in &cds {
                assert!(boundary_energy(cd, &ops.grid.weights) >= -1e-8);
            }
            assert!(reciprocity_residual(&cds[1], &cds[4], &ops.grid.weights) < 1e-6);
        }
    }

    #[test]
    fn mode_count_is_limited() {
        let ops = ops(CurveKind::Disk, 64);
        let (op, _) = assemble_operator(ProblemKind::Xi, &ops).unwrap();
        assert!(spectrum(ProblemKind::Xi, &op, 9).is_err());
        assert!("omega".parse::<ProblemKind>().is_err());
    }
}

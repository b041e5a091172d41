//! Closed-form unit-disk spectra, eigenfunctions and layer multipliers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::SteklovError;
use crate::geometry::Point;
use crate::steklov::ProblemKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Cos,
    Sin,
}

/// `u = (a r^k + b r^{k+2}) · trig(kθ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskMode {
    pub kind: ProblemKind,
    pub k: usize,
    pub parity: Parity,
    pub a: f64,
    pub b: f64,
}

impl DiskMode {
    pub fn new(kind: ProblemKind, k: usize, parity: Parity) -> Self {
        let kf = k as f64;
        let (a, b) = match kind {
            ProblemKind::Theta => ((kf + 2.0) / 2.0, -kf / 2.0),
            ProblemKind::Xi | ProblemKind::Pi => (-0.5, 0.5),
        };
        DiskMode { kind, k, parity, a, b }
    }

    fn angular(&self, theta: f64) -> f64 {
        let x = self.k as f64 * theta;
        match self.parity {
            Parity::Cos => x.cos(),
            Parity::Sin => x.sin(),
        }
    }

    /// Boundary values `(u, ∂_ν u, Δu, ∂_ν Δu)` at angle `θ`.
    pub fn cauchy_at(&self, theta: f64) -> [f64; 4] {
        let k = self.k as f64;
        let tr = self.angular(theta);
        let lap = self.b * (4.0 * k + 4.0);
        [
            (self.a + self.b) * tr,
            (self.a * k + self.b * (k + 2.0)) * tr,
            lap * tr,
            lap * k * tr,
        ]
    }

    pub fn eval(&self, p: Point) -> OracleField {
        // z^k and k z^{k-1}
        let (mut zr, mut zi) = (1.0, 0.0);
        let (mut dr, mut di) = (0.0, 0.0);
        for m in 0..self.k {
            if m + 1 == self.k {
                dr = self.k as f64 * zr;
                di = self.k as f64 * zi;
            }
            let nr = zr * p[0] - zi * p[1];
            zi = zr * p[1] + zi * p[0];
            zr = nr;
        }
        let (pv, grad_p) = match self.parity {
            Parity::Cos => (zr, [dr, -di]),
            Parity::Sin => (zi, [di, dr]),
        };
        let r2 = p[0] * p[0] + p[1] * p[1];
        let radial = self.a + self.b * r2;
        let lap = self.b * (4.0 * self.k as f64 + 4.0);
        OracleField {
            e: radial * pv,
            grad_e: [
                radial * grad_p[0] + 2.0 * self.b * pv * p[0],
                radial * grad_p[1] + 2.0 * self.b * pv * p[1],
            ],
            lap_e: lap * pv,
            grad_lap_e: [lap * grad_p[0], lap * grad_p[1]],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleEigen {
    pub mu: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleField {
    pub e: f64,
    pub grad_e: Point,
    pub lap_e: f64,
    pub grad_lap_e: Point,
}

pub fn oracle_eigenvalue(kind: ProblemKind, k: usize) -> OracleEigen {
    let kf = k as f64;
    match kind {
        ProblemKind::Theta => {
            let mu = 2.0 * kf * kf * (kf + 1.0);
            OracleEigen { mu, lambda: mu.cbrt() }
        }
        ProblemKind::Xi => OracleEigen { mu: 2.0 * (kf + 1.0), lambda: 2.0 * (kf + 1.0) },
        ProblemKind::Pi => OracleEigen { mu: 2.0 * kf + 1.0, lambda: 2.0 * kf + 1.0 },
    }
}

/// Closed-form fields at an interior point `p`, `|p| ≤ 1`.
pub fn oracle_eval(kind: ProblemKind, k: usize, parity: Parity, p: Point) -> OracleField {
    DiskMode::new(kind, k, parity).eval(p)
}

/// `θ` multiplier on `cos kθ`.
pub fn theta_multiplier(k: usize) -> f64 {
    let k = k as f64;
    -2.0 * k * (k + 1.0)
}

/// First `count` raw eigenvalues `μ` in ascending order, with the k ≥ 1 modes doubled.
pub fn oracle_spectrum(kind: ProblemKind, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut k = 0;
    while out.len() < count {
        let mu = oracle_eigenvalue(kind, k).mu;
        out.push(mu);
        if k > 0 && out.len() < count {
            out.push(mu);
        }
        k += 1;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LayerOp {
    S1,
    S2,
    S3,
    N,
    Lambda,
}

impl fmt::Display for LayerOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LayerOp::S1 => "S1",
            LayerOp::S2 => "S2",
            LayerOp::S3 => "S3",
            LayerOp::N => "N",
            LayerOp::Lambda => "Lambda",
        };
        f.write_str(s)
    }
}

impl FromStr for LayerOp {
    type Err = SteklovError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "S1" | "s1" => Ok(LayerOp::S1),
            "S2" | "s2" => Ok(LayerOp::S2),
            "S3" | "s3" => Ok(LayerOp::S3),
            "N" | "n" => Ok(LayerOp::N),
            "Lambda" | "lambda" | "Λ" => Ok(LayerOp::Lambda),
            _ => Err(SteklovError::InvalidArgument(format!("unknown layer operator `{s}`"))),
        }
    }
}

pub fn oracle_layer_multiplier(op: LayerOp, k: usize) -> f64 {
    let kf = k as f64;
    let high = |kf: f64| 1.0 / (4.0 * kf * (kf * kf - 1.0));
    match op {
        LayerOp::Lambda => kf,
        LayerOp::N => {
            if k == 0 {
                0.5
            } else {
                0.0
            }
        }
        LayerOp::S1 => {
            if k == 0 {
                1.0
            } else {
                -1.0 / (2.0 * kf)
            }
        }
        LayerOp::S3 => match k {
            0 => 0.25,
            1 => -3.0 / 16.0,
            _ => high(kf),
        },
        LayerOp::S2 => match k {
            0 => 0.5,
            1 => -5.0 / 16.0,
            _ => high(kf),
        },
    }
}

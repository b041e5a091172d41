//! Planar Laplace and biharmonic fundamental solutions, their log splittings
//! on the parameter torus, and the boundary symbol integrals.
//!
//! With `r = |x - y|`:
//!
//! ```text
//! E        = (1/2π) log r
//! Ê        = (1/8π) r² log r
//! Δ_y Ê    = (1/2π)(log r + 1)
//! ∂_ν,y Ê  = (1/8π)(2 log r + 1) <y - x, ν_y>
//! ∂_ν,y Δ_y Ê = (1/2π) <y - x, ν_y> / r²
//! ```

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SteklovError};
use crate::geometry::{BoundaryCurve, Point};
use crate::quadrature::{wynn_epsilon, GaussRule};

const FOUR_PI: f64 = 4.0 * PI;
const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelBundle {
    pub e: f64,
    pub e_hat: f64,
    pub lap_e_hat: f64,
    pub dn_e_hat: f64,
    pub dn_lap_e_hat: f64,
}

pub fn kernel_values(x: Point, y: Point, normal_y: Point) -> Result<KernelBundle> {
    let d = [y[0] - x[0], y[1] - x[1]];
    let r2 = d[0] * d[0] + d[1] * d[1];
    if r2 == 0.0 {
        return Err(SteklovError::CoincidentPoints);
    }
    let log_r = 0.5 * r2.ln();
    let proj = d[0] * normal_y[0] + d[1] * normal_y[1];
    Ok(KernelBundle {
        e: log_r / TWO_PI,
        e_hat: r2 * log_r / (8.0 * PI),
        lap_e_hat: (log_r + 1.0) / TWO_PI,
        dn_e_hat: (2.0 * log_r + 1.0) * proj / (8.0 * PI),
        dn_lap_e_hat: proj / (TWO_PI * r2),
    })
}

/// Gradients in `x` of the five kernels, used for field derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelGradients {
    pub e: Point,
    pub e_hat: Point,
    pub lap_e_hat: Point,
    pub dn_e_hat: Point,
    pub dn_lap_e_hat: Point,
}

pub(crate) fn kernel_gradients(x: Point, y: Point, normal_y: Point) -> KernelGradients {
    let xy = [x[0] - y[0], x[1] - y[1]];
    let r2 = xy[0] * xy[0] + xy[1] * xy[1];
    let log_r = 0.5 * r2.ln();
    // <y - x, ν_y>
    let proj = -(xy[0] * normal_y[0] + xy[1] * normal_y[1]);
    let g_e = [xy[0] / (TWO_PI * r2), xy[1] / (TWO_PI * r2)];
    let c_hat = (2.0 * log_r + 1.0) / (8.0 * PI);
    let dn_lap = [
        (-normal_y[0] / r2 - 2.0 * proj * xy[0] / (r2 * r2)) / TWO_PI,
        (-normal_y[1] / r2 - 2.0 * proj * xy[1] / (r2 * r2)) / TWO_PI,
    ];
    KernelGradients {
        e: g_e,
        e_hat: [c_hat * xy[0], c_hat * xy[1]],
        lap_e_hat: g_e,
        dn_e_hat: [
            (2.0 * xy[0] * proj / r2 - (2.0 * log_r + 1.0) * normal_y[0]) / (8.0 * PI),
            (2.0 * xy[1] * proj / r2 - (2.0 * log_r + 1.0) * normal_y[1]) / (8.0 * PI),
        ],
        dn_lap_e_hat: dn_lap,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelId {
    /// Laplace fundamental solution `E`.
    E,
    /// Biharmonic fundamental solution `Ê`.
    EHat,
    /// `Δ_y Ê`.
    LapEHat,
    /// `∂_ν,y Ê`.
    DnEHat,
    /// `∂_ν,y Δ_y Ê`.
    DnLapEHat,
    /// `∂_ν,x E`, the adjoint double layer of the harmonic single layer.
    DnxE,
}

/// `K(t,s) = K1(t,s)·log(4 sin²((t-s)/2)) + K2(t,s)` for a kernel evaluated
/// at `x(t)`, `x(s)`, `ν(s)` (no arclength factor).
#[derive(Debug, Clone)]
pub struct SplitKernel<'a> {
    which: KernelId,
    curve: &'a BoundaryCurve,
}

pub fn split_kernel(which: KernelId, curve: &BoundaryCurve) -> SplitKernel<'_> {
    SplitKernel { which, curve }
}

pub(crate) fn log4sin2(t: f64, s: f64) -> f64 {
    let h = (0.5 * (t - s)).sin();
    (4.0 * h * h).ln()
}

/// Geometry of a source/target pair needed by the split kernels.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Pair {
    /// `y - x`
    pub d: Point,
    pub r2: f64,
    pub normal_x: Point,
    pub normal_y: Point,
}

impl Pair {
    pub(crate) fn proj_y(&self) -> f64 {
        self.d[0] * self.normal_y[0] + self.d[1] * self.normal_y[1]
    }
    pub(crate) fn proj_x(&self) -> f64 {
        -(self.d[0] * self.normal_x[0] + self.d[1] * self.normal_x[1])
    }
}

/// Split factors `(K1, K2)` off the diagonal, given the pair geometry and the
/// precomputed `log(4 sin²((t-s)/2))`.
pub(crate) fn split_offdiag(which: KernelId, p: &Pair, log_sin: f64) -> (f64, f64) {
    let lr2 = p.r2.ln();
    let rem = lr2 - log_sin;
    match which {
        KernelId::E => (1.0 / FOUR_PI, rem / FOUR_PI),
        KernelId::LapEHat => (1.0 / FOUR_PI, (0.5 * rem + 1.0) / TWO_PI),
        KernelId::EHat => (p.r2 / (16.0 * PI), p.r2 * rem / (16.0 * PI)),
        KernelId::DnEHat => {
            let q = p.proj_y();
            (q / (8.0 * PI), (rem + 1.0) * q / (8.0 * PI))
        }
        KernelId::DnLapEHat => (0.0, p.proj_y() / (TWO_PI * p.r2)),
        KernelId::DnxE => (0.0, p.proj_x() / (TWO_PI * p.r2)),
    }
}

/// Analytic diagonal limits `(K1(t,t), K2(t,t))`.
pub(crate) fn split_diag(which: KernelId, speed: f64, curvature: f64) -> (f64, f64) {
    match which {
        KernelId::E => (1.0 / FOUR_PI, speed.ln() / TWO_PI),
        KernelId::LapEHat => (1.0 / FOUR_PI, (speed.ln() + 1.0) / TWO_PI),
        KernelId::EHat | KernelId::DnEHat => (0.0, 0.0),
        KernelId::DnLapEHat | KernelId::DnxE => (0.0, curvature / FOUR_PI),
    }
}

impl SplitKernel<'_> {
    pub fn which(&self) -> KernelId {
        self.which
    }

    fn pair(&self, t: f64, s: f64) -> (Pair, f64, f64) {
        let cx = self.curve.at(t);
        let cy = self.curve.at(s);
        let d = [cy.point[0] - cx.point[0], cy.point[1] - cx.point[1]];
        (
            Pair { d, r2: d[0] * d[0] + d[1] * d[1], normal_x: cx.normal, normal_y: cy.normal },
            cx.speed,
            cx.curvature,
        )
    }

    /// `(K1(t,s), K2(t,s))`, using the analytic limits when `t == s`.
    pub fn factors(&self, t: f64, s: f64) -> (f64, f64) {
        let (p, speed, curvature) = self.pair(t, s);
        if p.r2 == 0.0 {
            split_diag(self.which, speed, curvature)
        } else {
            split_offdiag(self.which, &p, log4sin2(t, s))
        }
    }

    /// The unsplit kernel at `t != s`.
    pub fn value(&self, t: f64, s: f64) -> f64 {
        let (p, _, _) = self.pair(t, s);
        let log_r = 0.5 * p.r2.ln();
        match self.which {
            KernelId::E => log_r / TWO_PI,
            KernelId::EHat => p.r2 * log_r / (8.0 * PI),
            KernelId::LapEHat => (log_r + 1.0) / TWO_PI,
            KernelId::DnEHat => (2.0 * log_r + 1.0) * p.proj_y() / (8.0 * PI),
            KernelId::DnLapEHat => p.proj_y() / (TWO_PI * p.r2),
            KernelId::DnxE => p.proj_x() / (TWO_PI * p.r2),
        }
    }
}

/// Closed-form boundary symbol integrals
/// `q3 = ¼(ξ'^-3 + x ξ'^-2) e^{-xξ'}`, `q2 = -x/(4ξ') e^{-xξ'}`,
/// `q1 = -e^{-xξ'}/(2ξ')`.
pub fn symbol_q(j: u8, x_n: f64, xi: f64) -> Result<f64> {
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(SteklovError::InvalidSymbol(format!("ξ' must be positive (got {xi})")));
    }
    if !(x_n >= 0.0) || !x_n.is_finite() {
        return Err(SteklovError::InvalidSymbol(format!("x_n must be >= 0 (got {x_n})")));
    }
    let decay = (-x_n * xi).exp();
    match j {
        1 => Ok(-decay / (2.0 * xi)),
        2 => Ok(-x_n / (4.0 * xi) * decay),
        3 => Ok(0.25 * (xi.powi(-3) + x_n / (xi * xi)) * decay),
        _ => Err(SteklovError::InvalidSymbol(format!("symbol index must be 1, 2 or 3 (got {j})"))),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SymbolQuadrature {
    /// Core interval is `|ξ_n| <= cutoff_factor · ξ'`.
    pub cutoff_factor: f64,
    pub order: usize,
    /// Half-periods summed (then accelerated) in an oscillatory tail.
    pub tail_panels: usize,
}

impl Default for SymbolQuadrature {
    fn default() -> Self {
        SymbolQuadrature { cutoff_factor: 200.0, order: 20, tail_panels: 24 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolIntegral {
    pub re: f64,
    /// Must vanish; reported as a diagnostic.
    pub im: f64,
    /// Magnitude of the contribution from `|ξ_n|` beyond the cutoff.
    pub tail: f64,
}

/// `(1/2π) ∫ p(ξ', ξ_n) e^{i x_n ξ_n} dξ_n` by quadrature, with
/// `p = |ξ|^-4`, `iξ_n|ξ|^-4`, `-|ξ|^-2` for `j = 3, 2, 1`.
pub fn symbol_q_numeric(j: u8, x_n: f64, xi: f64, opts: SymbolQuadrature) -> Result<SymbolIntegral> {
    if !(xi > 0.0) || !xi.is_finite() || !x_n.is_finite() {
        return Err(SteklovError::InvalidSymbol(format!(
            "non-convergent parameters x_n = {x_n}, ξ' = {xi}"
        )));
    }
    if !(opts.cutoff_factor > 0.0) || opts.order < 2 || opts.tail_panels < 4 {
        return Err(SteklovError::InvalidSymbol("invalid quadrature settings".into()));
    }
    if !(1..=3).contains(&j) {
        return Err(SteklovError::InvalidSymbol(format!("symbol index must be 1, 2 or 3 (got {j})")));
    }
    let a2 = xi * xi;
    // p(s)·e^{ixs}/(2π) split into real and imaginary parts
    let integrand = move |s: f64| -> (f64, f64) {
        let (sn, cs) = (x_n * s).sin_cos();
        let q = a2 + s * s;
        let (re, im) = match j {
            3 => (cs / (q * q), sn / (q * q)),
            2 => (-s * sn / (q * q), s * cs / (q * q)),
            _ => (-cs / q, -sn / q),
        };
        (re / TWO_PI, im / TWO_PI)
    };
    let rule = GaussRule::new(opts.order);
    let cutoff = opts.cutoff_factor * xi;
    let mut width = 0.5 * xi;
    if x_n != 0.0 {
        width = width.min(0.5 * PI / x_n.abs());
    }
    let panels = (cutoff / width).ceil() as usize;
    let h = cutoff / panels as f64;

    let mut re = 0.0;
    let mut im = 0.0;
    let mut tail_total = 0.0;
    for sign in [1.0, -1.0] {
        let f = |s: f64| integrand(sign * s);
        for p in 0..panels {
            let (a, b) = (h * p as f64, h * (p + 1) as f64);
            for (s, w) in rule.mapped(a, b) {
                let v = f(s);
                re += w * v.0;
                im += w * v.1;
            }
        }
        let (tr, ti) = if x_n == 0.0 {
            // s = ξ' tan φ maps the algebraic tail onto a finite interval
            let phi0 = (cutoff / xi).atan();
            let mut acc = (0.0, 0.0);
            for (phi, w) in rule.mapped(phi0, 0.5 * PI) {
                let s = xi * phi.tan();
                let jac = xi / phi.cos().powi(2);
                let v = f(s);
                acc.0 += w * v.0 * jac;
                acc.1 += w * v.1 * jac;
            }
            acc
        } else {
            // consecutive half-periods alternate in sign
            let step = PI / x_n.abs();
            let mut partial_re = Vec::with_capacity(opts.tail_panels);
            let mut partial_im = Vec::with_capacity(opts.tail_panels);
            let (mut sr, mut si) = (0.0, 0.0);
            for k in 0..opts.tail_panels {
                let a = cutoff + step * k as f64;
                for (s, w) in rule.mapped(a, a + step) {
                    let v = f(s);
                    sr += w * v.0;
                    si += w * v.1;
                }
                partial_re.push(sr);
                partial_im.push(si);
            }
            (wynn_epsilon(&partial_re), wynn_epsilon(&partial_im))
        };
        re += tr;
        im += ti;
        tail_total += tr.abs().max(ti.abs());
    }
    Ok(SymbolIntegral { re, im, tail: tail_total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::curve_from_spec;

    #[test]
    fn unit_distance_and_e_distance() {
        let k = kernel_values([0.0, 0.0], [1.0, 0.0], [0.3, 0.8]).unwrap();
        assert_eq!(k.e, 0.0);
        assert_eq!(k.e_hat, 0.0);
        let e = std::f64::consts::E;
        let k = kernel_values([0.0, 0.0], [e, 0.0], [1.0, 0.0]).unwrap();
        assert!((k.e - 1.0 / TWO_PI).abs() < 1e-15);
        assert!((k.lap_e_hat - 1.0 / PI).abs() < 1e-15);
        assert!(kernel_values([1.0, 2.0], [1.0, 2.0], [1.0, 0.0]).is_err());
    }

    #[test]
    fn circle_double_layer_is_constant() {
        for (t, s) in [(0.1, 2.0), (1.0, 4.5), (3.0, 3.1)] {
            let x = [f64::cos(t), f64::sin(t)];
            let y = [f64::cos(s), f64::sin(s)];
            let k = kernel_values(x, y, y).unwrap();
            assert!((k.dn_lap_e_hat - 1.0 / FOUR_PI).abs() < 1e-14);
        }
    }

    #[test]
    fn laplacian_of_biharmonic_kernel_is_shifted_laplace_kernel() {
        let mut seed = 12345u64;
        let mut rnd = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 * 4.0 - 2.0
        };
        for _ in 0..1000 {
            let x = [rnd(), rnd()];
            let y = [rnd(), rnd()];
            let k = kernel_values(x, y, [1.0, 0.0]).unwrap();
            assert!((k.lap_e_hat - (k.e + 1.0 / TWO_PI)).abs() < 1e-14);
        }
    }

    #[test]
    fn disk_splittings() {
        let c = curve_from_spec("disk").unwrap();
        let dl = split_kernel(KernelId::DnLapEHat, &c);
        for (t, s) in [(0.0, 0.0), (0.3, 2.0), (5.0, 1.0)] {
            let (k1, k2) = dl.factors(t, s);
            assert_eq!(k1, 0.0);
            assert!((k2 - 1.0 / FOUR_PI).abs() < 1e-14);
        }
        let lap = split_kernel(KernelId::LapEHat, &c);
        assert!((lap.factors(1.0, 1.0).1 - 1.0 / TWO_PI).abs() < 1e-15);
        let hat = split_kernel(KernelId::EHat, &c);
        assert_eq!(hat.factors(2.0, 2.0), (0.0, 0.0));
    }

    #[test]
    fn diagonal_limits_are_continuous() {
        let c = curve_from_spec("kite").unwrap();
        for which in [KernelId::E, KernelId::LapEHat, KernelId::EHat, KernelId::DnEHat, KernelId::DnLapEHat, KernelId::DnxE] {
            let sk = split_kernel(which, &c);
            for t in [0.3, 1.7, 4.0] {
                let d = sk.factors(t, t);
                let near = sk.factors(t, t + 1e-5);
                assert!((d.0 - near.0).abs() < 1e-4, "{which:?} K1");
                assert!((d.1 - near.1).abs() < 1e-4, "{which:?} K2 {d:?} {near:?}");
            }
        }
    }

    #[test]
    fn symbol_closed_forms_at_boundary() {
        for xi in [0.5, 1.0, 2.0, 4.0] {
            assert!((symbol_q(3, 0.0, xi).unwrap() - 0.25 / xi.powi(3)).abs() < 1e-15);
            assert!((symbol_q(1, 0.0, xi).unwrap() + 0.5 / xi).abs() < 1e-15);
            assert_eq!(symbol_q(2, 0.0, xi).unwrap(), 0.0);
        }
        assert!(symbol_q(1, 0.0, 0.0).is_err());
        assert!(symbol_q(4, 0.0, 1.0).is_err());
    }

    #[test]
    fn symbol_numeric_spot_checks() {
        let o = SymbolQuadrature::default();
        let v = symbol_q_numeric(1, 0.5, 2.0, o).unwrap();
        assert!((v.re - symbol_q(1, 0.5, 2.0).unwrap()).abs() < 1e-8, "{v:?}");
        assert!(v.im.abs() < 1e-12);
        let v = symbol_q_numeric(3, 0.0, 1.0, o).unwrap();
        assert!((v.re - 0.25).abs() < 1e-8);
        let v = symbol_q_numeric(2, 0.0, 3.0, o).unwrap();
        assert!(v.re.abs() < 1e-8);
        assert!(symbol_q_numeric(1, 0.0, -1.0, o).is_err());
    }
}

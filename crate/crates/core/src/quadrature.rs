//! One-dimensional quadrature helpers.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    if n == 1 {
        x[0] = 0.0;
        w[0] = 2.0;
    }
    (x, w)
}

/// Fixed-order Gauss–Legendre rule mapped to arbitrary intervals.
#[derive(Debug, Clone)]
pub struct GaussRule {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl GaussRule {
    pub fn new(order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        GaussRule { x, w }
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.x.iter().zip(&self.w).map(|(x, w)| w * f(c + h * x)).sum::<f64>() * h
    }

    /// Nodes and weights on `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.x.iter().zip(&self.w).map(move |(x, w)| (c + h * x, w * h))
    }

    /// Composite rule over `panels` equal panels.
    pub fn composite(&self, a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|p| self.integrate(a + h * p as f64, a + h * (p + 1) as f64, &f))
            .sum()
    }
}

/// Wynn's epsilon algorithm applied to a sequence of partial sums; returns
/// the last accelerated estimate on the highest even column.
pub fn wynn_epsilon(partial: &[f64]) -> f64 {
    let n = partial.len();
    if n < 3 {
        return *partial.last().unwrap_or(&0.0);
    }
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = partial.to_vec();
    let mut best = partial[n - 1];
    let mut col = 0;
    while cur.len() > 1 {
        let next: Vec<f64> = (0..cur.len() - 1)
            .map(|i| {
                let d = cur[i + 1] - cur[i];
                if d == 0.0 {
                    f64::INFINITY
                } else {
                    prev[i + 1] + 1.0 / d
                }
            })
            .collect();
        col += 1;
        if next.iter().any(|v| !v.is_finite()) {
            break;
        }
        if col % 2 == 0 {
            best = *next.last().unwrap();
        }
        prev = cur;
        cur = next;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = GaussRule::new(10);
        let v = rule.integrate(0.0, 2.0, |x| x.powi(19));
        assert!((v - 2f64.powi(20) / 20.0).abs() < 1e-9);
        let (_, w) = gauss_legendre(7);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let (x, _) = gauss_legendre(1);
        assert_eq!(x, vec![0.0]);
    }

    #[test]
    fn wynn_accelerates_alternating_series() {
        // ln 2 = 1 - 1/2 + 1/3 - ...
        let mut s = 0.0;
        let partial: Vec<f64> = (1..=15)
            .map(|k| {
                s += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
                s
            })
            .collect();
        assert!((wynn_epsilon(&partial) - 2f64.ln()).abs() < 1e-10);
    }
}

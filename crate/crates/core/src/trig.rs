//! Trigonometric interpolation of periodic nodal data on `t_j = 2πj/N`.

use std::f64::consts::PI;

/// Real trigonometric interpolant of even length `n`.
#[derive(Debug, Clone)]
pub struct TrigPoly {
    n: usize,
    /// `a[m]`, `m = 0..=n/2`, with the constant and Nyquist terms already halved.
    a: Vec<f64>,
    b: Vec<f64>,
}

fn cos_sin_table(n: usize) -> (Vec<f64>, Vec<f64>) {
    (0..n)
        .map(|j| (2.0 * PI * j as f64 / n as f64).sin_cos())
        .map(|(s, c)| (c, s))
        .unzip()
}

impl TrigPoly {
    pub fn from_nodal(values: &[f64]) -> Self {
        let n = values.len();
        assert!(n >= 2 && n % 2 == 0, "trigonometric interpolation needs an even node count");
        let half = n / 2;
        let (ct, st) = cos_sin_table(n);
        let mut a = vec![0.0; half + 1];
        let mut b = vec![0.0; half + 1];
        for m in 0..=half {
            let (mut sa, mut sb) = (0.0, 0.0);
            for (j, f) in values.iter().enumerate() {
                let k = (m * j) % n;
                sa += f * ct[k];
                sb += f * st[k];
            }
            a[m] = 2.0 * sa / n as f64;
            b[m] = 2.0 * sb / n as f64;
        }
        a[0] *= 0.5;
        a[half] *= 0.5;
        b[0] = 0.0;
        b[half] = 0.0;
        TrigPoly { n, a, b }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Cosine/sine coefficient of frequency `m` in the standard normalization.
    pub fn coefficient(&self, m: usize) -> (f64, f64) {
        let half = self.n / 2;
        if m == 0 || m == half {
            (2.0 * self.a[m], 0.0)
        } else if m < half {
            (self.a[m], self.b[m])
        } else {
            (0.0, 0.0)
        }
    }

    /// Value and first two derivatives at `t`. The Nyquist term is dropped in
    /// the derivatives.
    pub fn eval_derivs(&self, t: f64) -> (f64, f64, f64) {
        let half = self.n / 2;
        let (s1, c1) = t.sin_cos();
        let (mut c, mut s) = (1.0, 0.0);
        let (mut v, mut d1, mut d2) = (self.a[0], 0.0, 0.0);
        for m in 1..=half {
            let cn = c * c1 - s * s1;
            s = s * c1 + c * s1;
            c = cn;
            if m % 64 == 0 {
                let (sm, cm) = (m as f64 * t).sin_cos();
                c = cm;
                s = sm;
            }
            let (am, bm) = (self.a[m], self.b[m]);
            v += am * c + bm * s;
            if m < half {
                let mf = m as f64;
                d1 += mf * (bm * c - am * s);
                d2 -= mf * mf * (am * c + bm * s);
            }
        }
        (v, d1, d2)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_derivs(t).0
    }

    /// Samples the interpolant on `m` equispaced nodes (`m` a multiple of `n`).
    pub fn resample(&self, m: usize) -> Vec<f64> {
        assert!(m % self.n == 0);
        let half = self.n / 2;
        let (ct, st) = cos_sin_table(m);
        (0..m)
            .map(|i| {
                let mut v = self.a[0];
                for k in 1..=half {
                    let idx = (k * i) % m;
                    v += self.a[k] * ct[idx] + self.b[k] * st[idx];
                }
                v
            })
            .collect()
    }

    /// Spectral derivative `d/dt` at the interpolation nodes.
    pub fn derivative_nodal(&self) -> Vec<f64> {
        let n = self.n;
        let half = n / 2;
        let (ct, st) = cos_sin_table(n);
        (0..n)
            .map(|j| {
                let mut v = 0.0;
                for m in 1..half {
                    let idx = (m * j) % n;
                    v += m as f64 * (self.b[m] * ct[idx] - self.a[m] * st[idx]);
                }
                v
            })
            .collect()
    }

    /// Parameters where the interpolant crosses `level`, located by sign
    /// changes between nodes and refined by bisection.
    pub fn crossings(&self, nodal: &[f64], level: f64) -> Vec<f64> {
        let n = self.n;
        let h = 2.0 * PI / n as f64;
        let mut out = Vec::new();
        for j in 0..n {
            let f0 = nodal[j] - level;
            let f1 = nodal[(j + 1) % n] - level;
            if f0 == 0.0 {
                out.push(h * j as f64);
                continue;
            }
            if f0 * f1 >= 0.0 {
                continue;
            }
            let (mut lo, mut hi) = (h * j as f64, h * (j + 1) as f64);
            let mut flo = f0;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let fm = self.eval(mid) - level;
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm > 0.0) == (flo > 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..n).map(|j| f(2.0 * PI * j as f64 / n as f64)).collect()
    }

    #[test]
    fn reproduces_trig_polynomials_off_grid() {
        let f = |t: f64| 0.3 + (3.0 * t).cos() - 0.5 * (7.0 * t).sin();
        let p = TrigPoly::from_nodal(&sample(32, f));
        for i in 0..50 {
            let t = 0.1237 * i as f64;
            let (v, d1, d2) = p.eval_derivs(t);
            assert!((v - f(t)).abs() < 1e-13);
            let df = -3.0 * (3.0 * t).sin() - 3.5 * (7.0 * t).cos();
            let ddf = -9.0 * (3.0 * t).cos() + 24.5 * (7.0 * t).sin();
            assert!((d1 - df).abs() < 1e-12);
            assert!((d2 - ddf).abs() < 1e-11);
        }
        let (a3, b3) = p.coefficient(3);
        assert!((a3 - 1.0).abs() < 1e-14 && b3.abs() < 1e-14);
        let (_, b7) = p.coefficient(7);
        assert!((b7 + 0.5).abs() < 1e-14);
    }

    #[test]
    fn resample_matches_evaluation() {
        let f = |t: f64| (2.0 * t).sin() * t.cos();
        let p = TrigPoly::from_nodal(&sample(16, f));
        let fine = p.resample(64);
        for (i, v) in fine.iter().enumerate() {
            assert!((v - f(2.0 * PI * i as f64 / 64.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn crossings_of_cosine() {
        let nodal = sample(64, |t| (3.0 * t).cos());
        let p = TrigPoly::from_nodal(&nodal);
        let z = p.crossings(&nodal, 0.0);
        assert_eq!(z.len(), 6);
        for t in z {
            assert!((3.0 * t).cos().abs() < 1e-13);
        }
        assert_eq!(p.crossings(&nodal, 0.5).len(), 6);
    }
}

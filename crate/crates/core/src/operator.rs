//! Dense nodal operators on a boundary quadrature grid.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::Result;

/// An `N×N` matrix mapping nodal samples of `f` to nodal samples of `Af`,
/// together with the arclength weights that define the `L²(∂M)` pairing.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub name: String,
    pub matrix: DMatrix<f64>,
    pub weights: DVector<f64>,
    /// Relative Frobenius norm of the antisymmetric part of the
    /// weight-conjugated matrix (or of its Galerkin restriction when present),
    /// measured before any symmetrization.
    pub asymmetry: f64,
    pub symmetrized: bool,
    pub galerkin: Option<Galerkin>,
}

/// Restriction of an operator to trigonometric polynomials of degree at most
/// `degree`, in a basis orthonormal for the arclength inner product.
#[derive(Debug, Clone)]
pub struct Galerkin {
    pub degree: usize,
    /// Orthonormal basis in weight-conjugated coordinates (`N × (2·degree+1)`).
    pub basis: DMatrix<f64>,
    /// Symmetric part of the restricted matrix.
    pub matrix: DMatrix<f64>,
}

impl DiscreteOperator {
    pub fn new(name: impl Into<String>, matrix: DMatrix<f64>, weights: &[f64]) -> Self {
        let weights = DVector::from_column_slice(weights);
        let asymmetry = asymmetry(&conjugate(&matrix, &weights));
        DiscreteOperator {
            name: name.into(),
            matrix,
            weights,
            asymmetry,
            symmetrized: false,
            galerkin: None,
        }
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let v = &self.matrix * DVector::from_column_slice(f);
        v.iter().copied().collect()
    }

    /// `W^{1/2} A W^{-1/2}`.
    pub fn conjugated(&self) -> DMatrix<f64> {
        conjugate(&self.matrix, &self.weights)
    }

    /// Replaces the spectral representation by the symmetric part of the
    /// Galerkin restriction to degree `degree`; the asymmetry diagnostic is
    /// recomputed on the restriction first.
    pub fn symmetrize_on(&mut self, subspace: &TrigSubspace) {
        let c = self.conjugated();
        let g = subspace.basis.transpose() * c * &subspace.basis;
        self.asymmetry = asymmetry(&g);
        let sym = (&g + g.transpose()) * 0.5;
        self.galerkin = Some(Galerkin {
            degree: subspace.degree,
            basis: subspace.basis.clone(),
            matrix: sym,
        });
        self.symmetrized = true;
    }

    /// Symmetric matrix whose spectrum is the operator's spectrum.
    pub fn spectral_matrix(&self) -> DMatrix<f64> {
        match &self.galerkin {
            Some(g) => g.matrix.clone(),
            None => {
                let c = self.conjugated();
                (&c + c.transpose()) * 0.5
            }
        }
    }

    /// Writes the nodal matrix as CSV with 17 significant digits.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv_to(&mut out)?;
        Ok(())
    }

    pub fn write_csv_to(&self, out: &mut impl Write) -> Result<()> {
        for i in 0..self.matrix.nrows() {
            let row: Vec<String> =
                (0..self.matrix.ncols()).map(|j| format!("{:.16e}", self.matrix[(i, j)])).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

pub(crate) fn conjugate(a: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    DMatrix::from_fn(n, n, |i, j| a[(i, j)] * (w[i] / w[j]).sqrt())
}

pub(crate) fn asymmetry(c: &DMatrix<f64>) -> f64 {
    let norm = c.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (c - c.transpose()).norm() / norm
}

/// Trigonometric polynomials of degree `<= degree` on the nodes, orthonormalized
/// in weight-conjugated coordinates.
#[derive(Debug, Clone)]
pub struct TrigSubspace {
    pub degree: usize,
    pub basis: DMatrix<f64>,
}

impl TrigSubspace {
    pub fn new(t: &[f64], weights: &[f64], degree: usize) -> Self {
        let n = t.len();
        assert!(2 * degree < n, "subspace degree must stay below the Nyquist frequency");
        let cols = 2 * degree + 1;
        let z = DMatrix::from_fn(n, cols, |i, c| {
            let s = weights[i].sqrt();
            let m = ((c + 1) / 2) as f64;
            s * if c == 0 {
                1.0
            } else if c % 2 == 1 {
                (m * t[i]).cos()
            } else {
                (m * t[i]).sin()
            }
        });
        let basis = z.qr().q();
        TrigSubspace { degree, basis }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asymmetry_of_symmetric_and_skew() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 3.0]);
        assert_eq!(asymmetry(&s), 0.0);
        let k = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!((asymmetry(&k) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn subspace_is_orthonormal() {
        let n = 32;
        let t: Vec<f64> = (0..n).map(|j| 2.0 * std::f64::consts::PI * j as f64 / n as f64).collect();
        let w: Vec<f64> = t.iter().map(|t| 0.2 * (1.5 + t.cos())).collect();
        let sub = TrigSubspace::new(&t, &w, 8);
        let g = sub.basis.transpose() * &sub.basis;
        assert!((g - DMatrix::identity(17, 17)).norm() < 1e-13);
    }

    #[test]
    fn csv_has_full_precision() {
        let op = DiscreteOperator::new("id", DMatrix::from_row_slice(1, 1, &[1.0 / 3.0]), &[1.0]);
        let mut buf = Vec::new();
        op.write_csv_to(&mut buf).unwrap();
        let v: f64 = String::from_utf8(buf).unwrap().trim().parse().unwrap();
        assert_eq!(v, 1.0 / 3.0);
    }
}

//! Small dense helpers shared by the geometry modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::jet_algebra::Jet3;

/// Row-major square matrix of jets.
#[derive(Clone, Debug)]
pub struct JetMatrix {
    pub n: usize,
    pub data: Vec<Jet3>,
}

impl JetMatrix {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> Jet3) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn get(&self, i: usize, j: usize) -> &Jet3 {
        &self.data[i * self.n + j]
    }

    pub fn values(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).value())
    }

    pub fn partial(&self, a: usize) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|j| j.partial(a)).collect(),
        }
    }

    /// Gauss-Jordan inverse with partial pivoting on the values. Returns
    /// `None` if a pivot is exactly zero.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.n;
        let nvars = self.data.first()?.nvars();
        let mut a: Vec<Vec<Jet3>> = (0..n)
            .map(|i| (0..n).map(|j| self.get(i, j).clone()).collect())
            .collect();
        let mut inv: Vec<Vec<Jet3>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| Jet3::constant(nvars, if i == j { 1.0 } else { 0.0 }))
                    .collect()
            })
            .collect();
        for col in 0..n {
            let pivot = (col..n).max_by(|&r, &s| {
                a[r][col]
                    .value()
                    .abs()
                    .total_cmp(&a[s][col].value().abs())
            })?;
            if a[pivot][col].value() == 0.0 {
                return None;
            }
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let p = a[col][col].recip();
            for j in 0..n {
                a[col][j] = &a[col][j] * &p;
                inv[col][j] = &inv[col][j] * &p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a[r][col].clone();
                if factor.max_abs() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a[r][j] = &a[r][j] - &(&factor * &a[col][j]);
                    inv[r][j] = &inv[r][j] - &(&factor * &inv[col][j]);
                }
            }
        }
        Some(Self {
            n,
            data: inv.into_iter().flatten().collect(),
        })
    }
}

/// Determinant cutoff `1e-10 * scale^dim` with `scale` the largest entry.
pub fn det_threshold(m: &DMatrix<f64>) -> f64 {
    let scale = m.iter().fold(0.0_f64, |s, x| s.max(x.abs()));
    1e-10 * scale.powi(m.nrows() as i32)
}

/// Number of negative eigenvalues of a symmetric matrix.
pub fn negative_eigen_count(m: &DMatrix<f64>) -> usize {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .filter(|&&l| l < 0.0)
        .count()
}

/// Solves `m x = rhs` by LU with partial pivoting.
pub fn solve(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    m.clone().lu().solve(rhs)
}

pub fn max_abs<'a>(it: impl IntoIterator<Item = &'a f64>) -> f64 {
    it.into_iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

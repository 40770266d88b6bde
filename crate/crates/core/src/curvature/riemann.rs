use nalgebra::DMatrix;

use super::connection::ConnectionJets;
use crate::error::{Error, Result};

/// Planes whose Gram determinant falls below this are rejected.
pub const PLANE_TOL: f64 = 1e-12;

/// Curvature of a connection at a point, with
/// `R(d_a, d_b) d_c = R^d_abc d_d`.
#[derive(Clone, Debug)]
pub struct CurvaturePoint {
    n: usize,
    riem: Vec<f64>,
    ricci: DMatrix<f64>,
}

impl CurvaturePoint {
    /// From `R^d_abc` stored `[((d * n + a) * n + b) * n + c]`.
    pub fn from_components(n: usize, riem: Vec<f64>) -> Self {
        assert_eq!(riem.len(), n * n * n * n);
        let ricci = DMatrix::from_fn(n, n, |b, c| (0..n).map(|d| riem[((d * n + d) * n + b) * n + c]).sum());
        CurvaturePoint { n, riem, ricci }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `R^d_abc`.
    pub fn get(&self, d: usize, a: usize, b: usize, c: usize) -> f64 {
        let n = self.n;
        self.riem[((d * n + a) * n + b) * n + c]
    }

    /// Components of `R(X, Y) Z`.
    pub fn apply(&self, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|d| {
                let mut s = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            s += self.get(d, a, b, c) * x[a] * y[b] * z[c];
                        }
                    }
                }
                s
            })
            .collect()
    }

    /// `Ric(Y, Z) = tr(X -> R(X, Y) Z)`.
    pub fn ricci(&self) -> &DMatrix<f64> {
        &self.ricci
    }

    pub fn ricci_on(&self, y: &[f64], z: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s += self.ricci[(a, b)] * y[a] * z[b];
            }
        }
        s
    }

    pub fn scalar(&self, g_inv: &DMatrix<f64>) -> f64 {
        self.ricci.component_mul(g_inv).sum()
    }

    /// `g(R(X, Y) X, Y) / (g(X, X) g(Y, Y) - g(X, Y)^2)`.
    pub fn sectional(&self, g: &DMatrix<f64>, x: &[f64], y: &[f64]) -> Result<f64> {
        let form = |u: &[f64], v: &[f64]| -> f64 {
            let mut s = 0.0;
            for a in 0..self.n {
                for b in 0..self.n {
                    s += g[(a, b)] * u[a] * v[b];
                }
            }
            s
        };
        let denominator = form(x, x) * form(y, y) - form(x, y).powi(2);
        if denominator.abs() < PLANE_TOL {
            return Err(Error::DegeneratePlane { denominator });
        }
        Ok(form(&self.apply(x, y, x), y) / denominator)
    }

    /// `max |R^d_abc + R^d_bac|`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut m = 0.0_f64;
        for d in 0..n {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        m = m.max((self.get(d, a, b, c) + self.get(d, b, a, c)).abs());
                    }
                }
            }
        }
        m
    }

    /// `max |R^d_abc + R^d_bca + R^d_cab|`; zero for torsion-free connections.
    pub fn bianchi_defect(&self) -> f64 {
        let n = self.n;
        let mut m = 0.0_f64;
        for d in 0..n {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        let s = self.get(d, a, b, c) + self.get(d, b, c, a) + self.get(d, c, a, b);
                        m = m.max(s.abs());
                    }
                }
            }
        }
        m
    }
}

/// `R^d_abc = d_a Gamma^d_bc - d_b Gamma^d_ac + Gamma^d_ae Gamma^e_bc - Gamma^d_be Gamma^e_ac`.
pub fn riemann(conn: &ConnectionJets) -> CurvaturePoint {
    let n = conn.dim();
    let g = |c: usize, a: usize, b: usize| conn.get(c, a, b).value();
    let mut riem = vec![0.0; n * n * n * n];
    for d in 0..n {
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut s = conn.get(d, b, c).grad(a) - conn.get(d, a, c).grad(b);
                    for e in 0..n {
                        s += g(d, a, e) * g(e, b, c) - g(d, b, e) * g(e, a, c);
                    }
                    riem[((d * n + a) * n + b) * n + c] = s;
                }
            }
        }
    }
    CurvaturePoint::from_components(n, riem)
}

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::jet_algebra::Jet3;
use crate::linalg::JetMatrix;

/// A pseudo-Riemannian metric on a coordinate patch.
pub trait MetricField: Sync {
    fn dim(&self) -> usize;

    /// Component jets at `x`; at least order 2 for curvature.
    fn metric_jets(&self, x: &[f64]) -> Result<JetMatrix>;

    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.metric_jets(x)?.values())
    }
}

/// Connection coefficients `Gamma^c_ab` at a point, stored `[(c * n + a) * n + b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionCoeffs {
    n: usize,
    gamma: Vec<f64>,
}

impl ConnectionCoeffs {
    pub fn new(n: usize, gamma: Vec<f64>) -> Self {
        assert_eq!(gamma.len(), n * n * n);
        Self { n, gamma }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, c: usize, a: usize, b: usize) -> f64 {
        self.gamma[(c * self.n + a) * self.n + b]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.gamma
    }

    /// `max |Gamma^c_ab - Gamma^c_ba|`.
    pub fn torsion(&self) -> f64 {
        let n = self.n;
        let mut t = 0.0_f64;
        for c in 0..n {
            for a in 0..n {
                for b in 0..n {
                    t = t.max((self.get(c, a, b) - self.get(c, b, a)).abs());
                }
            }
        }
        t
    }
}

/// Connection coefficients as jets; derivatives give curvature.
#[derive(Clone, Debug)]
pub struct ConnectionJets {
    n: usize,
    gamma: Vec<Jet3>,
}

impl ConnectionJets {
    pub fn new(n: usize, gamma: Vec<Jet3>) -> Self {
        assert_eq!(gamma.len(), n * n * n);
        Self { n, gamma }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize, usize) -> Jet3) -> Self {
        let mut gamma = Vec::with_capacity(n * n * n);
        for c in 0..n {
            for a in 0..n {
                for b in 0..n {
                    gamma.push(f(c, a, b));
                }
            }
        }
        Self { n, gamma }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, c: usize, a: usize, b: usize) -> &Jet3 {
        &self.gamma[(c * self.n + a) * self.n + b]
    }

    pub fn values(&self) -> ConnectionCoeffs {
        ConnectionCoeffs::new(self.n, self.gamma.iter().map(Jet3::value).collect())
    }
}

/// Levi-Civita connection of `metric` as jets at `x`.
pub fn christoffel_jets(metric: &dyn MetricField, x: &[f64]) -> Result<ConnectionJets> {
    let n = metric.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.len(),
        });
    }
    let g = metric.metric_jets(x)?;
    levi_civita(&g, x)
}

/// Levi-Civita connection from metric component jets.
pub fn levi_civita(g: &JetMatrix, x: &[f64]) -> Result<ConnectionJets> {
    let n = g.n;
    let ginv = g.inverse().ok_or_else(|| Error::DegenerateAssocMetric {
        point: x.to_vec(),
        det: g.values().determinant(),
    })?;
    let dg: Vec<JetMatrix> = (0..n).map(|c| g.partial(c)).collect();
    // first kind: [ab, e] = 1/2 (d_a g_eb + d_b g_ea - d_e g_ab)
    let first = |a: usize, b: usize, e: usize| -> Jet3 {
        (dg[a].get(e, b) + dg[b].get(e, a) - dg[e].get(a, b)).scale(0.5)
    };
    let mut gamma = vec![None; n * n * n];
    for a in 0..n {
        for b in a..n {
            let kinds: Vec<Jet3> = (0..n).map(|e| first(a, b, e)).collect();
            for c in 0..n {
                let mut s = ginv.get(c, 0) * &kinds[0];
                for (e, k) in kinds.iter().enumerate().skip(1) {
                    s = s + ginv.get(c, e) * k;
                }
                gamma[(c * n + a) * n + b] = Some(s.clone());
                gamma[(c * n + b) * n + a] = Some(s);
            }
        }
    }
    Ok(ConnectionJets::new(n, gamma.into_iter().map(Option::unwrap).collect()))
}

/// `max |d_a g_bc - Gamma^d_ab g_dc - Gamma^d_ac g_bd|`.
pub fn metricity_defect(conn: &ConnectionCoeffs, g: &JetMatrix) -> f64 {
    let n = g.n;
    let mut m = 0.0_f64;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut s = g.get(b, c).grad(a);
                for d in 0..n {
                    s -= conn.get(d, a, b) * g.get(d, c).value() + conn.get(d, a, c) * g.get(b, d).value();
                }
                m = m.max(s.abs());
            }
        }
    }
    m
}

use super::rigging::RiggingSpec;
use crate::curvature::ConnectionJets;
use crate::error::Result;
use crate::jet_algebra::Jet3;
use crate::linalg::JetMatrix;
use crate::monge_chart::SurfaceChart;

/// Every rigging-induced object of a Monge chart at one parameter point, as
/// jets in the `n` chart variables.
///
/// Orders: `F` 3; `F_a`, `N`, `xi`, `eta`, `g` 2; `B`, `tau`, `A_N`, `A*`,
/// `C` and the induced connection 1.
#[derive(Clone, Debug)]
pub struct LocalGeometry {
    pub p: Vec<f64>,
    pub n: usize,
    /// Ambient signs `eps_0..eps_n`.
    pub eps: Vec<f64>,
    pub f: Jet3,
    pub df: Vec<Jet3>,
    /// Ambient components `N^0..N^n`.
    pub rig: Vec<Jet3>,
    /// Ambient components `xi^0..xi^n`; tangent coordinates are `xi[1..]`.
    pub xi: Vec<Jet3>,
    pub eta: Vec<Jet3>,
    pub g: JetMatrix,
    pub b: JetMatrix,
    pub tau: Vec<Jet3>,
    /// `a_n.get(c, a)` is `(A_N d_a)^c`.
    pub a_n: JetMatrix,
    /// `a_star.get(c, a)` is `(A* d_a)^c`.
    pub a_star: JetMatrix,
    /// `c.get(a, b) = C(d_a, P d_b)`.
    pub c: JetMatrix,
    /// Induced connection `Gamma^c_ab = -B_ab N^c`.
    pub gamma: ConnectionJets,
}

impl LocalGeometry {
    pub fn new(chart: &SurfaceChart, spec: &RiggingSpec, p: &[f64]) -> Result<Self> {
        let n = chart.dim();
        let sig = chart.signature();
        let eps: Vec<f64> = sig.signs().to_vec();
        let f = chart.jet(p)?;
        let df: Vec<Jet3> = (0..n).map(|a| f.partial(a)).collect();
        let (rig, xi) = spec.components(&f, &df, &eps[1..], p)?;

        let amb = |u: &[Jet3], v: &dyn Fn(usize) -> Jet3| -> Jet3 {
            let mut s = u[0].clone() * v(0).scale(eps[0]);
            for i in 1..=n {
                s = s + &u[i] * &v(i).scale(eps[i]);
            }
            s
        };
        let zero = Jet3::constant(n, 0.0);
        let one = Jet3::constant(n, 1.0);
        // ambient components of d_a
        let tangent = |a: usize| {
            let df = df[a].clone();
            let zero = zero.clone();
            let one = one.clone();
            move |i: usize| match i {
                0 => df.clone(),
                i if i == a + 1 => one.clone(),
                _ => zero.clone(),
            }
        };
        let eta: Vec<Jet3> = (0..n).map(|a| amb(&rig, &tangent(a))).collect();
        let g = JetMatrix::from_fn(n, |a, b| {
            let flat = if a == b { eps[a + 1] } else { 0.0 };
            -(&df[a] * &df[b]) + flat
        });
        // B_ab = <F_ab e_0, xi>
        let b = JetMatrix::from_fn(n, |a, c| df[a].partial(c).scale(eps[0]) * xi[0].truncate(1));
        let drig: Vec<Vec<Jet3>> = (0..n).map(|a| rig.iter().map(|r| r.partial(a)).collect()).collect();
        let dxi: Vec<Vec<Jet3>> = (0..n).map(|a| xi.iter().map(|x| x.partial(a)).collect()).collect();
        let tau: Vec<Jet3> = (0..n)
            .map(|a| {
                let mut s = &drig[a][0] * &xi[0].scale(eps[0]);
                for i in 1..=n {
                    s = s + &drig[a][i] * &xi[i].scale(eps[i]);
                }
                s
            })
            .collect();
        let a_n = JetMatrix::from_fn(n, |c, a| -(&drig[a][c + 1] - &(&tau[a] * &rig[c + 1])));
        let a_star = JetMatrix::from_fn(n, |c, a| -(&dxi[a][c + 1] + &(&tau[a] * &xi[c + 1])));
        let c = JetMatrix::from_fn(n, |a, bb| {
            let mut s = a_n.get(0, a) * g.get(0, bb);
            for k in 1..n {
                s = s + a_n.get(k, a) * g.get(k, bb);
            }
            s
        });
        let gamma = ConnectionJets::from_fn(n, |k, a, bb| -(b.get(a, bb) * &rig[k + 1]));
        Ok(Self {
            p: p.to_vec(),
            n,
            eps,
            f,
            df,
            rig,
            xi,
            eta,
            g,
            b,
            tau,
            a_n,
            a_star,
            c,
            gamma,
        })
    }

    /// Tangent coordinates of `xi`.
    pub fn xi_coords(&self) -> Vec<Jet3> {
        self.xi[1..].to_vec()
    }

    pub fn mean_curvature(&self) -> f64 {
        (0..self.n).map(|a| self.a_n.get(a, a).value()).sum::<f64>() / self.n as f64
    }

    pub fn mean_curvature_star(&self) -> f64 {
        (0..self.n).map(|a| self.a_star.get(a, a).value()).sum::<f64>() / self.n as f64
    }
}

//! Rigging-induced structure on a null Monge hypersurface: rigged vector
//! field, screen distribution, fundamental forms and shape operators.

mod local;
mod rigging;

use nalgebra::{DMatrix, DVector};

pub use local::LocalGeometry;
pub use rigging::{BaseRigging, MongeRiggingField, RiggingSpec, SpecialExtension, X0_ZERO_TOL};

use crate::ambient::{inner, AmbientVector, Signature};
use crate::assoc_metric::AlphaField;
use crate::curvature::levi_civita;
use crate::error::{Error, Result};
use crate::jet_algebra::Jet3;
use crate::linalg::{self, JetMatrix};
use crate::monge_chart::SurfaceChart;

/// Pivots of the screen Gram-Schmidt below this are degenerate.
pub const SCREEN_PIVOT_TOL: f64 = 1e-8;

/// Pointwise rigging data. Tangent vectors are given in chart coordinates
/// unless the field name says otherwise.
#[derive(Clone, Debug)]
pub struct RiggedPoint {
    pub p: Vec<f64>,
    pub sig: Signature,
    pub position: AmbientVector,
    pub tangent: Vec<AmbientVector>,
    pub normal: AmbientVector,
    pub rigging: AmbientVector,
    pub xi_ambient: AmbientVector,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub g: DMatrix<f64>,
    /// Screen frame `E_1..E_{n-1}`, `g(E_k, E_l) = screen_signs[k] delta_kl`.
    pub screen: Vec<Vec<f64>>,
    pub screen_signs: Vec<f64>,
}

impl RiggedPoint {
    pub fn dim(&self) -> usize {
        self.p.len()
    }

    /// Ambient image of a tangent coordinate vector.
    pub fn push_forward(&self, v: &[f64]) -> AmbientVector {
        let mut out = AmbientVector::zeros(self.dim() + 1);
        for (a, t) in self.tangent.iter().enumerate() {
            for i in 0..out.dim() {
                out.0[i] += v[a] * t[i];
            }
        }
        out
    }

    pub fn metric(&self, x: &[f64], y: &[f64]) -> f64 {
        bilinear(&self.g, x, y)
    }

    pub fn eta_of(&self, x: &[f64]) -> f64 {
        dot(&self.eta, x)
    }

    /// `P X = X - eta(X) xi`.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let e = self.eta_of(x);
        x.iter().zip(&self.xi).map(|(v, s)| v - e * s).collect()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn bilinear(m: &DMatrix<f64>, x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for a in 0..x.len() {
        for b in 0..y.len() {
            s += m[(a, b)] * x[a] * y[b];
        }
    }
    s
}

/// `M x` for a matrix stored as `m[(c, a)] = (M d_a)^c`.
pub(crate) fn apply(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (m * DVector::from_column_slice(x)).as_slice().to_vec()
}

/// Orthonormal frame of the screen `ker eta` by Gram-Schmidt over the
/// projected coordinate vectors, pivoting on the largest `|g(v, v)|`.
fn screen_frame(g: &DMatrix<f64>, eta: &[f64], xi: &[f64], p: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let n = eta.len();
    let mut candidates: Vec<Vec<f64>> = (0..n)
        .map(|c| (0..n).map(|d| if d == c { 1.0 } else { 0.0 } - eta[c] * xi[d]).collect())
        .collect();
    let mut frame = Vec::with_capacity(n.saturating_sub(1));
    let mut signs = Vec::with_capacity(n.saturating_sub(1));
    for _ in 1..n {
        let (best, norm) = candidates
            .iter()
            .enumerate()
            .map(|(i, v)| (i, bilinear(g, v, v)))
            .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
            .ok_or_else(|| Error::DegenerateScreen { point: p.to_vec() })?;
        if norm.abs() < SCREEN_PIVOT_TOL {
            return Err(Error::DegenerateScreen { point: p.to_vec() });
        }
        let v = candidates.swap_remove(best);
        let scale = norm.abs().sqrt();
        let e: Vec<f64> = v.iter().map(|x| x / scale).collect();
        let sign = norm.signum();
        for w in candidates.iter_mut() {
            let c = sign * bilinear(g, w, &e);
            w.iter_mut().zip(&e).for_each(|(wi, ei)| *wi -= c * ei);
        }
        frame.push(e);
        signs.push(sign);
    }
    Ok((frame, signs))
}

impl LocalGeometry {
    pub fn rigged_point(&self, chart: &SurfaceChart) -> Result<RiggedPoint> {
        let n = self.n;
        let val = |v: &[Jet3]| v.iter().map(Jet3::value).collect::<Vec<f64>>();
        let rigging = AmbientVector(val(&self.rig));
        let xi_ambient = AmbientVector(val(&self.xi));
        let xi = xi_ambient.0[1..].to_vec();
        let eta = val(&self.eta);
        let g = self.g.values();
        let (screen, screen_signs) = screen_frame(&g, &eta, &xi, &self.p)?;
        let tangent = (0..n)
            .map(|a| {
                let mut v = AmbientVector::basis(n + 1, a + 1);
                v.0[0] = self.df[a].value();
                v
            })
            .collect();
        let mut normal = AmbientVector::basis(n + 1, 0);
        for a in 0..n {
            normal.0[a + 1] = chart.eps(a) * self.df[a].value();
        }
        Ok(RiggedPoint {
            p: self.p.clone(),
            sig: chart.signature().clone(),
            position: chart.position(&self.p)?,
            tangent,
            normal,
            rigging,
            xi_ambient,
            xi,
            eta,
            g,
            screen,
            screen_signs,
        })
    }

    pub fn forms(&self, chart: &SurfaceChart) -> Result<FormsPoint> {
        let n = self.n;
        let point = self.rigged_point(chart)?;
        let d_eta = DMatrix::from_fn(n, n, |a, b| self.eta[b].grad(a) - self.eta[a].grad(b));
        Ok(FormsPoint {
            point,
            b: self.b.values(),
            c: self.c.values(),
            a_n: self.a_n.values(),
            a_star: self.a_star.values(),
            tau: self.tau.iter().map(Jet3::value).collect(),
            h: self.mean_curvature(),
            h_star: self.mean_curvature_star(),
            d_eta,
        })
    }
}

/// Second fundamental forms, shape operators and rotation form at a point.
#[derive(Clone, Debug)]
pub struct FormsPoint {
    pub point: RiggedPoint,
    /// `B(d_a, d_b)`.
    pub b: DMatrix<f64>,
    /// `C(d_a, P d_b)`.
    pub c: DMatrix<f64>,
    /// `a_n[(c, a)] = (A_N d_a)^c`.
    pub a_n: DMatrix<f64>,
    pub a_star: DMatrix<f64>,
    pub tau: Vec<f64>,
    pub h: f64,
    pub h_star: f64,
    /// `d eta(d_a, d_b) = d_a eta_b - d_b eta_a`.
    pub d_eta: DMatrix<f64>,
}

pub fn build_rigged_point(chart: &SurfaceChart, spec: &RiggingSpec, p: &[f64]) -> Result<RiggedPoint> {
    LocalGeometry::new(chart, spec, p)?.rigged_point(chart)
}

pub fn fundamental_forms(chart: &SurfaceChart, spec: &RiggingSpec, p: &[f64]) -> Result<FormsPoint> {
    LocalGeometry::new(chart, spec, p)?.forms(chart)
}

/// `eta(d_a) = <N, d_a>` from the pointwise ambient vectors.
pub fn eta_form(rp: &RiggedPoint) -> Result<Vec<f64>> {
    rp.tangent.iter().map(|t| inner(&rp.rigging, t, &rp.sig)).collect()
}

/// Scalar defects of the normalisation and screen conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizationDefects {
    /// `|<xi, N> - 1|`
    pub xi_n: f64,
    /// `|<N, N>|`
    pub n_n: f64,
    /// `|<xi, xi>|`
    pub xi_xi: f64,
    /// `max_a |<xi, d_a>|`
    pub xi_tangent: f64,
    /// `|eta(xi) - 1|`
    pub eta_xi: f64,
    /// `max_k |eta(E_k)|`
    pub eta_screen: f64,
    /// `max_kl |g(E_k, E_l) - s_k delta_kl|`
    pub screen_orthonormal: f64,
    /// `max_k |<E_k, N>|` in the ambient space.
    pub screen_n: f64,
}

pub fn normalization_defects(chart: &SurfaceChart, rp: &RiggedPoint) -> Result<NormalizationDefects> {
    let sig = chart.signature();
    let xi = &rp.xi_ambient;
    let n = &rp.rigging;
    let mut xi_tangent = 0.0_f64;
    for t in &rp.tangent {
        xi_tangent = xi_tangent.max(inner(xi, t, sig)?.abs());
    }
    let mut eta_screen = 0.0_f64;
    let mut screen_n = 0.0_f64;
    let mut screen_orthonormal = 0.0_f64;
    for (k, e) in rp.screen.iter().enumerate() {
        eta_screen = eta_screen.max(rp.eta_of(e).abs());
        screen_n = screen_n.max(inner(&rp.push_forward(e), n, sig)?.abs());
        for (l, f) in rp.screen.iter().enumerate() {
            let target = if k == l { rp.screen_signs[k] } else { 0.0 };
            screen_orthonormal = screen_orthonormal.max((rp.metric(e, f) - target).abs());
        }
    }
    Ok(NormalizationDefects {
        xi_n: (inner(xi, n, sig)? - 1.0).abs(),
        n_n: inner(n, n, sig)?.abs(),
        xi_xi: inner(xi, xi, sig)?.abs(),
        xi_tangent,
        eta_xi: (rp.eta_of(&rp.xi) - 1.0).abs(),
        eta_screen,
        screen_orthonormal,
        screen_n,
    })
}

/// `|g(A_N X, Y) - g(X, A_N Y) - [tau(X) eta(Y) - tau(Y) eta(X) - d eta(X, Y)]|`.
pub fn weingarten_symmetry_defect(forms: &FormsPoint, x: &[f64], y: &[f64]) -> f64 {
    let rp = &forms.point;
    let lhs = rp.metric(&apply(&forms.a_n, x), y) - rp.metric(x, &apply(&forms.a_n, y));
    let rhs = dot(&forms.tau, x) * rp.eta_of(y) - dot(&forms.tau, y) * rp.eta_of(x) - bilinear(&forms.d_eta, x, y);
    (lhs - rhs).abs()
}

pub fn d_eta(chart: &SurfaceChart, spec: &RiggingSpec, p: &[f64]) -> Result<DMatrix<f64>> {
    Ok(fundamental_forms(chart, spec, p)?.d_eta)
}

/// Jets of `g_alpha = g + alpha eta (x) eta` on the hypersurface.
pub(crate) fn g_alpha_jets(local: &LocalGeometry, alpha: &Jet3) -> JetMatrix {
    JetMatrix::from_fn(local.n, |a, b| local.g.get(a, b) + &(alpha * &(&local.eta[a] * &local.eta[b])))
}

/// The Lie derivative `L_xi g_alpha` two ways: from the jets of `xi` and
/// `g_alpha`, and as `-2B + d alpha(xi) eta (x) eta`.
#[derive(Clone, Debug)]
pub struct LieCheck {
    pub computed: DMatrix<f64>,
    pub formula: DMatrix<f64>,
}

impl LieCheck {
    pub fn residual(&self) -> f64 {
        linalg::max_abs((&self.computed - &self.formula).iter())
    }

    pub fn on(&self, x: &[f64], y: &[f64]) -> (f64, f64) {
        (bilinear(&self.computed, x, y), bilinear(&self.formula, x, y))
    }
}

pub fn lie_xi_g_alpha(chart: &SurfaceChart, spec: &RiggingSpec, alpha: &AlphaField, p: &[f64]) -> Result<LieCheck> {
    let local = LocalGeometry::new(chart, spec, p)?;
    let n = local.n;
    let a_jet = alpha.on_chart(&local.f, p)?;
    let ga = g_alpha_jets(&local, &a_jet);
    let xi = local.xi_coords();
    let computed = DMatrix::from_fn(n, n, |a, b| {
        let mut s = 0.0;
        for c in 0..n {
            s += xi[c].value() * ga.get(a, b).grad(c)
                + ga.get(c, b).value() * xi[c].grad(a)
                + ga.get(a, c).value() * xi[c].grad(b);
        }
        s
    });
    let dalpha_xi = alpha.d_alpha(&local)?;
    let eta: Vec<f64> = local.eta.iter().map(Jet3::value).collect();
    let formula = DMatrix::from_fn(n, n, |a, b| -2.0 * local.b.get(a, b).value() + dalpha_xi * eta[a] * eta[b]);
    Ok(LieCheck { computed, formula })
}

/// `div_{g_alpha} xi` from the Levi-Civita connection of `g_alpha`, together
/// with the closed forms `d alpha(xi) / (2|alpha|) - n H*` and
/// `d alpha(xi) / (2 alpha) - n H*`. The two closed forms differ only where
/// `alpha < 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct DivCheck {
    pub computed: f64,
    pub abs_alpha_form: f64,
    pub signed_alpha_form: f64,
}

pub fn div_g_alpha_xi(chart: &SurfaceChart, spec: &RiggingSpec, alpha: &AlphaField, p: &[f64]) -> Result<DivCheck> {
    let local = LocalGeometry::new(chart, spec, p)?;
    let n = local.n;
    let a_jet = alpha.on_chart(&local.f, p)?;
    let ga = g_alpha_jets(&local, &a_jet);
    let conn = levi_civita(&ga, p)?;
    let xi = local.xi_coords();
    let mut computed = 0.0;
    for c in 0..n {
        computed += xi[c].grad(c);
        for d in 0..n {
            computed += conn.get(c, c, d).value() * xi[d].value();
        }
    }
    let a = a_jet.value();
    let dalpha_xi = alpha.d_alpha(&local)?;
    let nh = n as f64 * local.mean_curvature_star();
    Ok(DivCheck {
        computed,
        abs_alpha_form: dalpha_xi / (2.0 * a.abs()) - nh,
        signed_alpha_form: dalpha_xi / (2.0 * a) - nh,
    })
}

/// Pointwise type of the rigged hypersurface.
#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub totally_geodesic: bool,
    /// `B = rho g` on the screen.
    pub umbilical: Option<f64>,
    /// `A_N = phi A*` on the screen; `None` when not conformal or when `A*`
    /// vanishes there.
    pub screen_conformal: Option<f64>,
    pub closed: bool,
}

pub fn classify(forms: &FormsPoint, tol: f64) -> Classification {
    let rp = &forms.point;
    let m = rp.screen.len();
    let screen_form = |f: &dyn Fn(&[f64], &[f64]) -> f64| -> DMatrix<f64> {
        DMatrix::from_fn(m, m, |k, l| f(&rp.screen[k], &rp.screen[l]))
    };
    let b_s = screen_form(&|x, y| bilinear(&forms.b, x, y));
    let g_s = DMatrix::from_fn(m, m, |k, l| if k == l { rp.screen_signs[k] } else { 0.0 });
    let totally_geodesic = linalg::max_abs(forms.b.iter()) < tol;
    let umbilical = if m == 0 {
        Some(0.0)
    } else {
        let rho = b_s.dot(&g_s) / g_s.dot(&g_s);
        (linalg::max_abs((&b_s - &g_s * rho).iter()) < tol).then_some(rho)
    };
    let s_n = screen_form(&|x, y| rp.metric(&apply(&forms.a_n, x), y));
    let s_star = screen_form(&|x, y| rp.metric(&apply(&forms.a_star, x), y));
    let screen_conformal = if linalg::max_abs(s_star.iter()) < tol {
        None
    } else {
        let phi = s_n.dot(&s_star) / s_star.dot(&s_star);
        (linalg::max_abs((&s_n - &s_star * phi).iter()) < tol).then_some(phi)
    };
    Classification {
        totally_geodesic,
        umbilical,
        screen_conformal,
        closed: linalg::max_abs(forms.d_eta.iter()) < tol,
    }
}

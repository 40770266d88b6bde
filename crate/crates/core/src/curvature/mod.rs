//! Connections and curvature on the chart, and the residuals of the
//! curvature relations between `nabla^alpha`, the induced connection and the
//! flat ambient space.

mod connection;
mod riemann;

pub use connection::{
    christoffel_jets, levi_civita, metricity_defect, ConnectionCoeffs, ConnectionJets, MetricField,
};
pub use riemann::{riemann, CurvaturePoint, PLANE_TOL};

use nalgebra::DMatrix;

use crate::assoc_metric::{check_hypotheses, AlphaField};
use crate::error::{Error, Result};
use crate::jet_algebra::{evaluate_jet, Expression, Jet3};
use crate::monge_chart::SurfaceChart;
use crate::rigged_geometry::{g_alpha_jets, LocalGeometry, RiggedPoint, RiggingSpec};

/// Levi-Civita coefficients of `metric` at `p`.
pub fn christoffels(metric: &dyn MetricField, p: &[f64]) -> Result<ConnectionCoeffs> {
    Ok(christoffel_jets(metric, p)?.values())
}

/// `Gamma^c_ab = -B_ab N^c` of the connection induced by the rigging.
pub fn induced_connection(chart: &SurfaceChart, spec: &RiggingSpec, p: &[f64]) -> Result<ConnectionCoeffs> {
    Ok(LocalGeometry::new(chart, spec, p)?.gamma.values())
}

/// `(tr nabla X, d_a X^a)` for the induced connection and a vector field
/// given by one expression per chart component.
pub fn induced_divergence(chart: &SurfaceChart, spec: &RiggingSpec, field: &[Expression], p: &[f64]) -> Result<(f64, f64)> {
    let n = chart.dim();
    if field.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: field.len(),
        });
    }
    let gamma = induced_connection(chart, spec, p)?;
    let jets: Vec<Jet3> = field.iter().map(|e| evaluate_jet(e, p)).collect::<Result<_>>()?;
    let plain: f64 = (0..n).map(|a| jets[a].grad(a)).sum();
    let mut div = plain;
    for a in 0..n {
        for b in 0..n {
            div += gamma.get(a, a, b) * jets[b].value();
        }
    }
    Ok((div, plain))
}

type Tensor3 = Vec<Vec<Vec<f64>>>;

fn tensor3(n: usize, f: impl Fn(usize, usize, usize) -> f64) -> Tensor3 {
    (0..n)
        .map(|a| (0..n).map(|b| (0..n).map(|c| f(a, b, c)).collect()).collect())
        .collect()
}

/// Values of the rigging data with the covariant derivatives of `B` and
/// `C` and the curvature of the induced connection.
struct Induced {
    local: LocalGeometry,
    n: usize,
    g: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    a_n: DMatrix<f64>,
    a_star: DMatrix<f64>,
    tau: Vec<f64>,
    eta: Vec<f64>,
    xi: Vec<f64>,
    /// `d tau(d_a, d_b) = d_a tau_b - d_b tau_a`.
    dtau: DMatrix<f64>,
    /// `nb[a][b][c] = (nabla_a B)(d_b, d_c)`.
    nb: Tensor3,
    /// `nc[a][b][c] = (nabla_a C)(d_b, P d_c)`.
    nc: Tensor3,
    r: CurvaturePoint,
}

impl Induced {
    fn new(chart: &SurfaceChart, spec: &RiggingSpec, p: &[f64]) -> Result<Self> {
        let local = LocalGeometry::new(chart, spec, p)?;
        let n = local.n;
        let val = |v: &[Jet3]| v.iter().map(Jet3::value).collect::<Vec<f64>>();
        let gam = |c: usize, a: usize, b: usize| local.gamma.get(c, a, b).value();
        let eta = val(&local.eta);
        let xi = val(&local.xi[1..]);
        let nb = tensor3(n, |a, b, c| {
            let mut s = local.b.get(b, c).grad(a);
            for d in 0..n {
                s -= gam(d, a, b) * local.b.get(d, c).value() + gam(d, a, c) * local.b.get(b, d).value();
            }
            s
        });
        // W_c = P d_c, with components W_c^d = delta^d_c - eta_c xi^d.
        let w = |c: usize, d: usize| -> Jet3 {
            let delta = if c == d { 1.0 } else { 0.0 };
            -(&local.eta[c] * &local.xi[d + 1]) + delta
        };
        let nc = tensor3(n, |a, b, c| {
            let mut s = local.c.get(b, c).grad(a);
            for d in 0..n {
                s -= gam(d, a, b) * local.c.get(d, c).value();
            }
            for d in 0..n {
                let mut nw = w(c, d).grad(a);
                for e in 0..n {
                    nw += gam(d, a, e) * w(c, e).value();
                }
                let a_n_g: f64 = (0..n)
                    .map(|f| local.a_n.get(f, b).value() * local.g.get(f, d).value())
                    .sum();
                s -= a_n_g * nw;
            }
            s
        });
        let dtau = DMatrix::from_fn(n, n, |a, b| local.tau[b].grad(a) - local.tau[a].grad(b));
        let r = riemann(&local.gamma);
        Ok(Self {
            n,
            g: local.g.values(),
            b: local.b.values(),
            c: local.c.values(),
            a_n: local.a_n.values(),
            a_star: local.a_star.values(),
            tau: val(&local.tau),
            eta,
            xi,
            dtau,
            nb,
            nc,
            r,
            local,
        })
    }

    /// `g(A_N X, W)` for tangent `X` and any `W`; equals `C(X, P W)`.
    fn c_form(&self, x: &[f64], w: &[f64]) -> f64 {
        bilinear(&self.g, &mat_vec(&self.a_n, x), w)
    }
}

/// Adds `nabla^alpha` data to `Induced`.
struct WithAlpha {
    ind: Induced,
    rp: RiggedPoint,
    alpha_jet: Jet3,
    alpha: f64,
    da_xi: f64,
    g_alpha: DMatrix<f64>,
    r_alpha: CurvaturePoint,
}

impl WithAlpha {
    fn new(chart: &SurfaceChart, spec: &RiggingSpec, alpha: &AlphaField, p: &[f64]) -> Result<Self> {
        let ind = Induced::new(chart, spec, p)?;
        let rp = check_hypotheses(chart, &ind.local, alpha)?;
        let a_jet = alpha.on_chart(&ind.local.f, p)?;
        let ga = g_alpha_jets(&ind.local, &a_jet);
        let r_alpha = riemann(&levi_civita(&ga, p)?);
        Ok(Self {
            da_xi: alpha.d_alpha(&ind.local)?,
            alpha: a_jet.value(),
            alpha_jet: a_jet,
            g_alpha: ga.values(),
            r_alpha,
            rp,
            ind,
        })
    }

    fn tau_xi(&self) -> f64 {
        dot(&self.ind.tau, &self.ind.xi)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mat_vec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (0..m.nrows()).map(|r| (0..x.len()).map(|c| m[(r, c)] * x[c]).sum()).collect()
}

fn bilinear(m: &DMatrix<f64>, x: &[f64], y: &[f64]) -> f64 {
    dot(&mat_vec(m, y), x)
}

fn unit(n: usize, a: usize) -> Vec<f64> {
    (0..n).map(|i| if i == a { 1.0 } else { 0.0 }).collect()
}

/// Tangent coordinates to ambient components `(sum F_c v^c, v)`.
fn ambient(local: &LocalGeometry, v: &[f64]) -> Vec<f64> {
    let x0: f64 = (0..local.n).map(|c| local.df[c].value() * v[c]).sum();
    std::iter::once(x0).chain(v.iter().copied()).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

fn curvature_relation(w: &WithAlpha, a: usize, b: usize, c: usize) -> f64 {
    let ind = &w.ind;
    let n = ind.n;
    let al = w.alpha;
    let k = |x: usize| {
        ind.b[(x, c)] / al - ind.c[(x, c)] + ind.tau[x] * ind.eta[c] + ind.eta[x] * ind.eta[c] * w.da_xi / (2.0 * al)
    };
    let brace = ind.nb[a][b][c] / al - ind.nb[b][a][c] / al + ind.nc[b][a][c] - ind.nc[a][b][c]
        - (ind.b[(b, c)] / al - 2.0 * ind.c[(b, c)]) * ind.tau[a]
        + (ind.b[(a, c)] / al - 2.0 * ind.c[(a, c)]) * ind.tau[b]
        + w.da_xi / (2.0 * al * al)
            * (ind.eta[b] * (2.0 * ind.b[(a, c)] - al * ind.c[(a, c)])
                - ind.eta[a] * (2.0 * ind.b[(b, c)] - al * ind.c[(b, c)]));
    let xi_coeff = ind.dtau[(a, b)] * ind.eta[c] + brace;
    let (ky, kx) = (k(b), k(a));
    let rhs: Vec<f64> = (0..n)
        .map(|d| ind.r.get(d, a, b, c) - ky * ind.a_star[(d, a)] + kx * ind.a_star[(d, b)] + xi_coeff * ind.xi[d])
        .collect();
    let lhs: Vec<f64> = (0..n).map(|d| w.r_alpha.get(d, a, b, c)).collect();
    max_abs_diff(&ambient(&ind.local, &lhs), &ambient(&ind.local, &rhs))
}

/// `R_alpha(d_a, d_b) d_c` from the Levi-Civita connection of `g_alpha`
/// against its expression through the curvature of the induced connection,
/// `A*`, `d tau`, `nabla B`, `nabla C`, `tau` and `d alpha(xi)`. Max-norm in
/// ambient components.
pub fn curvature_relation_residual(
    chart: &SurfaceChart,
    spec: &RiggingSpec,
    alpha: &AlphaField,
    p: &[f64],
    a: usize,
    b: usize,
    c: usize,
) -> Result<f64> {
    let n = chart.dim();
    if a >= n || b >= n || c >= n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.max(b).max(c) + 1,
        });
    }
    Ok(curvature_relation(&WithAlpha::new(chart, spec, alpha, p)?, a, b, c))
}

/// Maximum of `curvature_relation_residual` over all index triples.
pub fn curvature_relation_max(chart: &SurfaceChart, spec: &RiggingSpec, alpha: &AlphaField, p: &[f64]) -> Result<f64> {
    let w = WithAlpha::new(chart, spec, alpha, p)?;
    let n = w.ind.n;
    let mut m = 0.0_f64;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                m = m.max(curvature_relation(&w, a, b, c));
            }
        }
    }
    Ok(m)
}

/// `nabla^alpha = nabla + K (x) xi` with
/// `K(X, Y) = B/alpha - C(X, PY) + tau(X) eta(Y) + eta(X) eta(Y) d alpha(xi) / 2 alpha`,
/// as jets.
fn k_jets(w: &WithAlpha) -> crate::linalg::JetMatrix {
    let l = &w.ind.local;
    let n = l.n;
    let inv = w.alpha_jet.recip();
    let mut da_xi = &w.alpha_jet.partial(0) * &l.xi[1];
    for a in 1..n {
        da_xi = da_xi + &w.alpha_jet.partial(a) * &l.xi[a + 1];
    }
    let f = (&da_xi * &inv).scale(0.5);
    crate::linalg::JetMatrix::from_fn(n, |x, y| {
        l.b.get(x, y) * &inv - l.c.get(x, y).clone() + &l.tau[x] * &l.eta[y] + &(&l.eta[x] * &l.eta[y]) * &f
    })
}

/// `R_alpha(d_a, d_b) d_c` against `R - K(Y,Z) A* X + K(X,Z) A* Y + k xi`
/// with `k = (nabla_X K)(Y,Z) - (nabla_Y K)(X,Z) + (d alpha(xi) / 2 alpha)[eta(X) K(Y,Z) - eta(Y) K(X,Z)]`
/// and `nabla K` taken from the jets of `K`. Maximum over index triples.
pub fn curvature_relation_rederived_max(
    chart: &SurfaceChart,
    spec: &RiggingSpec,
    alpha: &AlphaField,
    p: &[f64],
) -> Result<f64> {
    let w = WithAlpha::new(chart, spec, alpha, p)?;
    let ind = &w.ind;
    let n = ind.n;
    let k = k_jets(&w);
    let gam = |c: usize, a: usize, b: usize| ind.local.gamma.get(c, a, b).value();
    let nk = tensor3(n, |a, b, c| {
        let mut s = k.get(b, c).grad(a);
        for d in 0..n {
            s -= gam(d, a, b) * k.get(d, c).value() + gam(d, a, c) * k.get(b, d).value();
        }
        s
    });
    let f = w.da_xi / (2.0 * w.alpha);
    let kv = |x: usize, y: usize| k.get(x, y).value();
    let mut m = 0.0_f64;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let coeff = nk[a][b][c] - nk[b][a][c] + f * (ind.eta[a] * kv(b, c) - ind.eta[b] * kv(a, c));
                let rhs: Vec<f64> = (0..n)
                    .map(|d| {
                        ind.r.get(d, a, b, c) - kv(b, c) * ind.a_star[(d, a)] + kv(a, c) * ind.a_star[(d, b)]
                            + coeff * ind.xi[d]
                    })
                    .collect();
                let lhs: Vec<f64> = (0..n).map(|d| w.r_alpha.get(d, a, b, c)).collect();
                m = m.max(max_abs_diff(&ambient(&ind.local, &lhs), &ambient(&ind.local, &rhs)));
            }
        }
    }
    Ok(m)
}

/// The five Gauss-Codazzi right sides for a flat ambient, each maximised
/// over coordinate index tuples:
/// `g(R(X,Y)Z, PT) + B(X,Z)C(Y,PT) - B(Y,Z)C(X,PT)`, `eta(R(X,Y)Z)`,
/// the `nabla C` and `nabla B` Codazzi equations, and
/// `C(Y, A* X) - C(X, A* Y) - d tau(X,Y)`.
pub fn gauss_codazzi_residuals(chart: &SurfaceChart, spec: &RiggingSpec, p: &[f64]) -> Result<[f64; 5]> {
    let ind = Induced::new(chart, spec, p)?;
    let n = ind.n;
    let mut out = [0.0_f64; 5];
    let mut up = |i: usize, v: f64| out[i] = out[i].max(v.abs());
    for a in 0..n {
        for b in 0..n {
            let ga = mat_vec(&ind.a_star, &unit(n, a));
            let gb = mat_vec(&ind.a_star, &unit(n, b));
            up(4, ind.c_form(&unit(n, b), &ga) - ind.c_form(&unit(n, a), &gb) - ind.dtau[(a, b)]);
            for c in 0..n {
                let rv: Vec<f64> = (0..n).map(|d| ind.r.get(d, a, b, c)).collect();
                up(1, dot(&ind.eta, &rv));
                up(
                    2,
                    ind.nc[a][b][c] - ind.nc[b][a][c] + ind.c[(a, c)] * ind.tau[b] - ind.c[(b, c)] * ind.tau[a],
                );
                up(
                    3,
                    ind.nb[a][b][c] - ind.nb[b][a][c] + ind.b[(b, c)] * ind.tau[a] - ind.b[(a, c)] * ind.tau[b],
                );
                for d in 0..n {
                    let pd: Vec<f64> = (0..n).map(|e| unit(n, d)[e] - ind.eta[d] * ind.xi[e]).collect();
                    up(
                        0,
                        bilinear(&ind.g, &rv, &pd) + ind.b[(a, c)] * ind.c[(b, d)] - ind.b[(b, c)] * ind.c[(a, d)],
                    );
                }
            }
        }
    }
    Ok(out)
}

/// The three Ricci relations for a flat ambient, as maxima over the screen
/// frame: `Ric_alpha(X, Y)` for screen `X, Y`, `Ric_alpha(xi, xi)`, and
/// `Ric_alpha(xi, X)`.
pub fn ricci_relation_residuals(
    chart: &SurfaceChart,
    spec: &RiggingSpec,
    alpha: &AlphaField,
    p: &[f64],
) -> Result<[f64; 3]> {
    let w = WithAlpha::new(chart, spec, alpha, p)?;
    let ind = &w.ind;
    let nf = ind.n as f64;
    let al = w.alpha;
    let h = ind.local.mean_curvature();
    let hs = ind.local.mean_curvature_star();
    let tau_xi = w.tau_xi();
    let a_n_xi = mat_vec(&ind.a_n, &ind.xi);
    let ric = |x: &[f64], y: &[f64]| w.r_alpha.ricci_on(x, y);

    let mut screen = 0.0_f64;
    for x in &w.rp.screen {
        for y in &w.rp.screen {
            let sx = mat_vec(&ind.a_star, x);
            let sy = mat_vec(&ind.a_star, y);
            let nx = mat_vec(&ind.a_n, x);
            let ny = mat_vec(&ind.a_n, y);
            let bxy = bilinear(&ind.b, x, y);
            let cxy = bilinear(&ind.g, &nx, y);
            let formula = -bilinear(&ind.g, &a_n_xi, y) * dot(&ind.tau, x) + bilinear(&ind.g, &sx, &sy) / al
                - bilinear(&ind.g, &sx, &ny)
                - bilinear(&ind.g, &nx, &sy)
                + nf * bxy * (h - hs / al)
                + nf * cxy * hs
                - (2.0 * bxy / al - cxy) * tau_xi
                - w.da_xi / (2.0 * al * al) * (2.0 * bxy + al * cxy);
            screen = screen.max((ric(x, y) - formula).abs());
        }
    }
    let xi_xi = (ric(&ind.xi, &ind.xi) + nf * (tau_xi + w.da_xi / (2.0 * al)) * hs).abs();
    let mut xi_screen = 0.0_f64;
    for x in &w.rp.screen {
        let formula = bilinear(&ind.dtau, &ind.xi, x) + nf * bilinear(&ind.g, &a_n_xi, x) * hs;
        xi_screen = xi_screen.max((ric(&ind.xi, x) - formula).abs());
    }
    Ok([screen, xi_xi, xi_screen])
}

/// Sectional-curvature relations for a flat ambient: planes `span(xi, E)`
/// over the screen frame, and for `n >= 3` planes `span(E_k, E_l)`.
pub fn sectional_relation_residuals(
    chart: &SurfaceChart,
    spec: &RiggingSpec,
    alpha: &AlphaField,
    p: &[f64],
) -> Result<(f64, Option<f64>)> {
    let w = WithAlpha::new(chart, spec, alpha, p)?;
    let ind = &w.ind;
    let al = w.alpha;
    let tau_xi = w.tau_xi();
    let screen = &w.rp.screen;
    let mut first = 0.0_f64;
    for x in screen {
        let k = w.r_alpha.sectional(&w.g_alpha, &ind.xi, x)?;
        let formula = (tau_xi + w.da_xi / (2.0 * al)) * bilinear(&ind.b, x, x) / (al * bilinear(&ind.g, x, x));
        first = first.max((k - formula).abs());
    }
    if ind.n < 3 {
        return Ok((first, None));
    }
    let mut second = 0.0_f64;
    for (i, x) in screen.iter().enumerate() {
        for y in &screen[i + 1..] {
            let k = w.r_alpha.sectional(&w.g_alpha, x, y)?;
            let (bxx, byy, bxy) = (bilinear(&ind.b, x, x), bilinear(&ind.b, y, y), bilinear(&ind.b, x, y));
            let (cxx, cyy, cxy) = (ind.c_form(x, x), ind.c_form(y, y), ind.c_form(x, y));
            let gg = bilinear(&ind.g, x, x) * bilinear(&ind.g, y, y);
            let formula = (bxx * byy - bxy * bxy) / (al * gg) + (2.0 * bxy * cxy - bxx * cyy - byy * cxx) / gg;
            second = second.max((k - formula).abs());
        }
    }
    Ok((first, Some(second)))
}

/// Scalar curvature of `g_alpha` and its expression through traces of the
/// shape operators, the mean curvatures, `tau` and `d alpha(xi)`, as
/// `(direct, formula)`.
pub fn scalar_relation(chart: &SurfaceChart, spec: &RiggingSpec, alpha: &AlphaField, p: &[f64]) -> Result<(f64, f64)> {
    let w = WithAlpha::new(chart, spec, alpha, p)?;
    let ind = &w.ind;
    let g_inv = w.g_alpha.clone().try_inverse().ok_or_else(|| Error::DegenerateAssocMetric {
        point: p.to_vec(),
        det: w.g_alpha.determinant(),
    })?;
    let direct = w.r_alpha.scalar(&g_inv);
    let nf = ind.n as f64;
    let al = w.alpha;
    let h = ind.local.mean_curvature();
    let hs = ind.local.mean_curvature_star();
    let tau_xi = w.tau_xi();
    let tr_sn = (&ind.a_star * &ind.a_n).trace();
    let tr_ss = (&ind.a_star * &ind.a_star).trace();
    let tau_a_n_xi = dot(&ind.tau, &mat_vec(&ind.a_n, &ind.xi));
    let formula = -2.0 * tr_sn + tr_ss / al + nf * nf * (2.0 * h - hs / al) * hs - tau_a_n_xi
        + nf * (h - 3.0 * hs / al) * tau_xi
        - nf / (2.0 * al * al) * w.da_xi * (h + 3.0 * hs);
    Ok((direct, formula))
}

/// The screen Ricci and scalar relations with the `xi`-slot term
/// `g(R_alpha(xi, X) Y, N)` taken as `-(B(X, Y) / alpha)[tau(xi) + d alpha(xi) / 2 alpha]`,
/// which is what the curvature relation and the Codazzi equations give for a
/// flat ambient. Returns `(screen Ricci residual, scalar residual)`.
pub fn rederived_ricci_scalar_residuals(
    chart: &SurfaceChart,
    spec: &RiggingSpec,
    alpha: &AlphaField,
    p: &[f64],
) -> Result<[f64; 2]> {
    let w = WithAlpha::new(chart, spec, alpha, p)?;
    let ind = &w.ind;
    let nf = ind.n as f64;
    let al = w.alpha;
    let h = ind.local.mean_curvature();
    let hs = ind.local.mean_curvature_star();
    let lambda = w.tau_xi() + w.da_xi / (2.0 * al);
    let mut screen = 0.0_f64;
    for x in &w.rp.screen {
        for y in &w.rp.screen {
            let sx = mat_vec(&ind.a_star, x);
            let sy = mat_vec(&ind.a_star, y);
            let nx = mat_vec(&ind.a_n, x);
            let ny = mat_vec(&ind.a_n, y);
            let bxy = bilinear(&ind.b, x, y);
            let cxy = ind.c_form(x, y);
            let formula = bilinear(&ind.g, &sx, &sy) / al - bilinear(&ind.g, &sx, &ny) - bilinear(&ind.g, &nx, &sy)
                + nf * bxy * (h - hs / al)
                + nf * cxy * hs
                - bxy / al * lambda;
            screen = screen.max((w.r_alpha.ricci_on(x, y) - formula).abs());
        }
    }
    let g_inv = w.g_alpha.clone().try_inverse().ok_or_else(|| Error::DegenerateAssocMetric {
        point: p.to_vec(),
        det: w.g_alpha.determinant(),
    })?;
    let tr_sn = (&ind.a_star * &ind.a_n).trace();
    let tr_ss = (&ind.a_star * &ind.a_star).trace();
    let formula = -2.0 * tr_sn + tr_ss / al + nf * nf * (2.0 * h - hs / al) * hs - 2.0 * nf * hs / al * lambda;
    Ok([screen, (w.r_alpha.scalar(&g_inv) - formula).abs()])
}

pub fn scalar_relation_residual(chart: &SurfaceChart, spec: &RiggingSpec, alpha: &AlphaField, p: &[f64]) -> Result<f64> {
    let (direct, formula) = scalar_relation(chart, spec, alpha, p)?;
    Ok((direct - formula).abs())
}

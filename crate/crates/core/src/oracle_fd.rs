//! Finite-difference oracle: central mixed differences with Richardson
//! extrapolation. It only ever evaluates functions pointwise, so it is
//! independent of the jet arithmetic it is used to check.

use nalgebra::DMatrix;

use crate::curvature::{ConnectionCoeffs, CurvaturePoint, MetricField};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Central,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdConfig {
    /// Base step; `None` picks `1e-4` for first derivatives and `1e-3`
    /// above. The step is multiplied by `max(1, |p|_inf)`.
    pub h: Option<f64>,
    pub scheme: Scheme,
    /// Rows of the Richardson table; 1 is a plain central difference.
    pub levels: usize,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            h: None,
            scheme: Scheme::Central,
            levels: 2,
        }
    }
}

impl FdConfig {
    pub fn with_step(h: f64) -> Self {
        Self {
            h: Some(h),
            ..Self::default()
        }
    }

    fn step(&self, order: usize, p: &[f64]) -> f64 {
        let base = self.h.unwrap_or(if order == 1 { 1e-4 } else { 1e-3 });
        let scale = p.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        base * scale
    }
}

/// `||a - b||_inf / max(||b||_inf, 1)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    let scale = b.iter().fold(1.0_f64, |m, y| m.max(y.abs()));
    diff / scale
}

type VecFn<'a> = dyn Fn(&[f64]) -> Result<Vec<f64>> + 'a;

fn eval_at(f: &VecFn<'_>, x: &[f64]) -> Result<Vec<f64>> {
    f(x).map_err(|e| match e {
        Error::DimensionMismatch { .. } => e,
        _ => Error::StencilOutOfDomain { point: x.to_vec() },
    })
}

/// Central mixed difference `d^k f / du^{dirs[0]} ... du^{dirs[k-1]}`
/// with a single step `h`.
fn central(f: &VecFn<'_>, p: &[f64], dirs: &[usize], h: f64) -> Result<Vec<f64>> {
    let k = dirs.len();
    let mut acc: Option<Vec<f64>> = None;
    let mut x = p.to_vec();
    for mask in 0..(1usize << k) {
        x.copy_from_slice(p);
        let mut sign = 1.0;
        for (bit, &dir) in dirs.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                x[dir] -= h;
                sign = -sign;
            } else {
                x[dir] += h;
            }
        }
        let v = eval_at(f, &x)?;
        match acc.as_mut() {
            None => acc = Some(v.iter().map(|y| sign * y).collect()),
            Some(a) => a.iter_mut().zip(&v).for_each(|(s, y)| *s += sign * y),
        }
    }
    let scale = (2.0 * h).powi(k as i32);
    Ok(acc.unwrap_or_default().into_iter().map(|s| s / scale).collect())
}

fn richardson(f: &VecFn<'_>, p: &[f64], dirs: &[usize], cfg: &FdConfig) -> Result<Vec<f64>> {
    if p.iter().any(|x| !x.is_finite()) {
        return Err(Error::StencilOutOfDomain { point: p.to_vec() });
    }
    let levels = cfg.levels.max(1);
    let h0 = cfg.step(dirs.len(), p);
    let mut rows: Vec<Vec<Vec<f64>>> = Vec::with_capacity(levels);
    for i in 0..levels {
        let h = h0 / f64::powi(2.0, i as i32);
        let mut row = vec![central(f, p, dirs, h)?];
        for j in 1..=i {
            let w = f64::powi(4.0, j as i32);
            let prev = &rows[i - 1][j - 1];
            let cur = &row[j - 1];
            let next = cur.iter().zip(prev).map(|(c, q)| (w * c - q) / (w - 1.0)).collect();
            row.push(next);
        }
        rows.push(row);
    }
    Ok(rows.pop().and_then(|mut r| r.pop()).unwrap_or_default())
}

fn scalar<'a>(f: &'a (dyn Fn(&[f64]) -> Result<f64> + 'a)) -> impl Fn(&[f64]) -> Result<Vec<f64>> + 'a {
    move |x| f(x).map(|v| vec![v])
}

pub fn fd_gradient(f: &dyn Fn(&[f64]) -> Result<f64>, p: &[f64], cfg: &FdConfig) -> Result<Vec<f64>> {
    let g = scalar(f);
    (0..p.len())
        .map(|a| Ok(richardson(&g, p, &[a], cfg)?[0]))
        .collect()
}

/// Symmetric by construction: only `a <= b` is differenced.
pub fn fd_hessian(f: &dyn Fn(&[f64]) -> Result<f64>, p: &[f64], cfg: &FdConfig) -> Result<DMatrix<f64>> {
    let g = scalar(f);
    let n = p.len();
    let mut h = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v = richardson(&g, p, &[a, b], cfg)?[0];
            h[(a, b)] = v;
            h[(b, a)] = v;
        }
    }
    Ok(h)
}

/// Dense symmetric order-3 tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensor3 {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SymTensor3 {
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[(a * self.n + b) * self.n + c]
    }
}

pub fn fd_third(f: &dyn Fn(&[f64]) -> Result<f64>, p: &[f64], cfg: &FdConfig) -> Result<SymTensor3> {
    let g = scalar(f);
    let n = p.len();
    let mut data = vec![0.0; n * n * n];
    for a in 0..n {
        for b in a..n {
            for c in b..n {
                let v = richardson(&g, p, &[a, b, c], cfg)?[0];
                for (i, j, k) in [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
                    data[(i * n + j) * n + k] = v;
                }
            }
        }
    }
    Ok(SymTensor3 { n, data })
}

/// `jac[a][k] = d f_k / du^a` for a vector-valued `f`.
pub fn fd_jacobian(
    f: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    p: &[f64],
    cfg: &FdConfig,
) -> Result<Vec<Vec<f64>>> {
    (0..p.len()).map(|a| richardson(f, p, &[a], cfg)).collect()
}

/// Christoffel symbols of the second kind from differenced metric values.
pub fn fd_christoffels(metric: &dyn MetricField, p: &[f64], cfg: &FdConfig) -> Result<ConnectionCoeffs> {
    let n = metric.dim();
    if p.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: p.len(),
        });
    }
    let values = |x: &[f64]| -> Result<Vec<f64>> { Ok(metric.metric(x)?.transpose().as_slice().to_vec()) };
    let dg = fd_jacobian(&values, p, cfg)?;
    let g = metric.metric(p)?;
    let ginv = g
        .clone()
        .try_inverse()
        .ok_or(Error::DegenerateAssocMetric {
            point: p.to_vec(),
            det: g.determinant(),
        })?;
    // dg[c][a*n + b] = d_c g_ab
    let d = |c: usize, a: usize, b: usize| dg[c][a * n + b];
    let mut gamma = vec![0.0; n * n * n];
    for c in 0..n {
        for a in 0..n {
            for b in a..n {
                let mut s = 0.0;
                for e in 0..n {
                    s += ginv[(c, e)] * (d(a, e, b) + d(b, e, a) - d(e, a, b));
                }
                gamma[(c * n + a) * n + b] = 0.5 * s;
                gamma[(c * n + b) * n + a] = 0.5 * s;
            }
        }
    }
    Ok(ConnectionCoeffs::new(n, gamma))
}

/// Riemann tensor by differencing `fd_christoffels` with an outer step of
/// `outer` times `max(1, |p|_inf)`.
pub fn fd_riemann(metric: &dyn MetricField, p: &[f64], cfg: &FdConfig, outer: f64) -> Result<CurvaturePoint> {
    let n = metric.dim();
    let gamma = |x: &[f64]| -> Result<Vec<f64>> { Ok(fd_christoffels(metric, x, cfg)?.as_slice().to_vec()) };
    let outer = FdConfig {
        h: Some(outer),
        ..*cfg
    };
    let dgamma = fd_jacobian(&gamma, p, &outer)?;
    let g0 = fd_christoffels(metric, p, cfg)?;
    let idx = |c: usize, a: usize, b: usize| (c * n + a) * n + b;
    let mut riem = vec![0.0; n * n * n * n];
    for d in 0..n {
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut s = dgamma[a][idx(d, b, c)] - dgamma[b][idx(d, a, c)];
                    for e in 0..n {
                        s += g0.get(d, a, e) * g0.get(e, b, c) - g0.get(d, b, e) * g0.get(e, a, c);
                    }
                    riem[((d * n + a) * n + b) * n + c] = s;
                }
            }
        }
    }
    Ok(CurvaturePoint::from_components(n, riem))
}

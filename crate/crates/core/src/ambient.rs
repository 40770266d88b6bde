//! Flat semi-Euclidean ambient space `R^{n+1}_q` and the twisted metric
//! `g_alpha = g + alpha * eta (x) eta` built from a rigging field.

use std::ops::{Add, Index, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};

use crate::curvature::MetricField;
use crate::error::{Error, Result};
use crate::jet_algebra::Jet3;
use crate::linalg::{self, JetMatrix};
use crate::oracle_fd::{fd_christoffels, FdConfig};

/// Diagonal metric with `q` leading minus signs.
#[derive(Clone, Debug, PartialEq)]
pub struct Signature {
    q: usize,
    eps: Vec<f64>,
}

impl Signature {
    pub fn new(dim: usize, q: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSignature("dimension must be positive".into()));
        }
        if q > dim {
            return Err(Error::InvalidSignature(format!(
                "index {q} exceeds dimension {dim}"
            )));
        }
        let eps = (0..dim).map(|i| if i < q { -1.0 } else { 1.0 }).collect();
        Ok(Self { q, eps })
    }

    pub fn dim(&self) -> usize {
        self.eps.len()
    }

    pub fn index(&self) -> usize {
        self.q
    }

    pub fn eps(&self, i: usize) -> f64 {
        self.eps[i]
    }

    pub fn signs(&self) -> &[f64] {
        &self.eps
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.eps))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AmbientVector(pub Vec<f64>);

impl AmbientVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[i] = 1.0;
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.0)
    }
}

impl From<Vec<f64>> for AmbientVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Index<usize> for AmbientVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for &AmbientVector {
    type Output = AmbientVector;
    fn add(self, rhs: &AmbientVector) -> AmbientVector {
        AmbientVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &AmbientVector {
    type Output = AmbientVector;
    fn sub(self, rhs: &AmbientVector) -> AmbientVector {
        AmbientVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Mul<&AmbientVector> for f64 {
    type Output = AmbientVector;
    fn mul(self, rhs: &AmbientVector) -> AmbientVector {
        AmbientVector(rhs.0.iter().map(|a| self * a).collect())
    }
}

impl Neg for &AmbientVector {
    type Output = AmbientVector;
    fn neg(self) -> AmbientVector {
        -1.0 * self
    }
}

/// `sum_i eps_i u^i v^i`.
pub fn inner(u: &AmbientVector, v: &AmbientVector, sig: &Signature) -> Result<f64> {
    for w in [u, v] {
        if w.dim() != sig.dim() {
            return Err(Error::DimensionMismatch {
                expected: sig.dim(),
                found: w.dim(),
            });
        }
    }
    Ok((0..sig.dim()).map(|i| sig.eps(i) * u[i] * v[i]).sum())
}

/// Components of `g + alpha * eta (x) eta` with `eta = g(N, .)`.
pub fn twisted_metric(
    _p: &[f64],
    n_vec: &AmbientVector,
    alpha: f64,
    sig: &Signature,
) -> Result<DMatrix<f64>> {
    let dim = sig.dim();
    if n_vec.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: n_vec.dim(),
        });
    }
    let eta: Vec<f64> = (0..dim).map(|i| sig.eps(i) * n_vec[i]).collect();
    Ok(DMatrix::from_fn(dim, dim, |i, j| {
        let flat = if i == j { sig.eps(i) } else { 0.0 };
        flat + alpha * eta[i] * eta[j]
    }))
}

/// Fails when `|det m|` falls below `1e-10 * scale^(n+1)`.
pub fn check_nondegenerate(p: &[f64], m: &DMatrix<f64>) -> Result<f64> {
    let det = m.determinant();
    if det.abs() < linalg::det_threshold(m) {
        return Err(Error::DegenerateTwistedMetric {
            point: p.to_vec(),
            det,
        });
    }
    Ok(det)
}

/// A vector field on (an open subset of) the ambient space, given by exact
/// component jets in the `n+1` ambient coordinates.
pub trait AmbientVectorField: Sync {
    fn dim(&self) -> usize;

    fn jets(&self, x: &[f64]) -> Result<Vec<Jet3>>;

    fn value(&self, x: &[f64]) -> Result<AmbientVector> {
        Ok(AmbientVector(self.jets(x)?.iter().map(Jet3::value).collect()))
    }
}

pub trait AmbientScalarField: Sync {
    fn jet(&self, x: &[f64]) -> Result<Jet3>;

    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.jet(x)?.value())
    }
}

/// `x -> offset + matrix * x`.
#[derive(Clone, Debug)]
pub struct AffineVectorField {
    pub offset: Vec<f64>,
    pub matrix: DMatrix<f64>,
}

impl AffineVectorField {
    pub fn constant(v: AmbientVector) -> Self {
        let d = v.dim();
        Self {
            offset: v.0,
            matrix: DMatrix::zeros(d, d),
        }
    }
}

impl AmbientVectorField for AffineVectorField {
    fn dim(&self) -> usize {
        self.offset.len()
    }

    fn jets(&self, x: &[f64]) -> Result<Vec<Jet3>> {
        let d = self.dim();
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: x.len(),
            });
        }
        Ok((0..d)
            .map(|i| {
                let value = self.offset[i] + (0..d).map(|j| self.matrix[(i, j)] * x[j]).sum::<f64>();
                let grad: Vec<f64> = (0..d).map(|j| self.matrix[(i, j)]).collect();
                Jet3::from_derivatives(value, &grad, |_, _| 0.0, |_, _, _| 0.0)
            })
            .collect())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ConstantScalarField(pub f64);

impl AmbientScalarField for ConstantScalarField {
    fn jet(&self, x: &[f64]) -> Result<Jet3> {
        Ok(Jet3::constant(x.len(), self.0))
    }
}

/// The twisted metric as a field over the ambient coordinates.
pub struct TwistedMetricField<'a> {
    pub rigging: &'a dyn AmbientVectorField,
    pub alpha: &'a dyn AmbientScalarField,
    pub sig: &'a Signature,
}

impl MetricField for TwistedMetricField<'_> {
    fn dim(&self) -> usize {
        self.sig.dim()
    }

    fn metric_jets(&self, x: &[f64]) -> Result<JetMatrix> {
        let d = self.sig.dim();
        let n_jets = self.rigging.jets(x)?;
        let alpha = self.alpha.jet(x)?;
        let eta: Vec<Jet3> = (0..d).map(|i| n_jets[i].scale(self.sig.eps(i))).collect();
        Ok(JetMatrix::from_fn(d, |i, j| {
            let flat = if i == j { self.sig.eps(i) } else { 0.0 };
            &(&alpha * &eta[i]) * &eta[j] + flat
        }))
    }
}

/// Compares the Levi-Civita connection of the twisted metric, with
/// Christoffel symbols taken by finite differences, against its closed form
/// in terms of the flat connection, `eta = g(N, .)`, `d eta`, `L_N g` and
/// `d alpha`. The closed form holds where `N` is null.
///
/// Returns the max-norm of the difference of `nabla^alpha_U V`.
pub fn twisted_connection_residual(
    p: &[f64],
    u: &AmbientVector,
    v: &dyn AmbientVectorField,
    rigging: &dyn AmbientVectorField,
    alpha: &dyn AmbientScalarField,
    sig: &Signature,
    fd: &FdConfig,
) -> Result<f64> {
    let d = sig.dim();
    for found in [p.len(), u.dim(), v.dim(), rigging.dim()] {
        if found != d {
            return Err(Error::DimensionMismatch { expected: d, found });
        }
    }
    let field = TwistedMetricField { rigging, alpha, sig };
    let g_alpha = field.metric(p)?;
    let det = check_nondegenerate(p, &g_alpha)?;
    let gamma = fd_christoffels(&field, p, fd)?;

    let v_jets = v.jets(p)?;
    let vv: Vec<f64> = v_jets.iter().map(Jet3::value).collect();
    let flat_uv: Vec<f64> = (0..d)
        .map(|i| (0..d).map(|j| u[j] * v_jets[i].grad(j)).sum())
        .collect();

    let lhs: Vec<f64> = (0..d)
        .map(|i| {
            let mut s = flat_uv[i];
            for j in 0..d {
                for k in 0..d {
                    s += gamma.get(i, j, k) * u[j] * vv[k];
                }
            }
            s
        })
        .collect();

    let n_jets = rigging.jets(p)?;
    let nv: Vec<f64> = n_jets.iter().map(Jet3::value).collect();
    let eta: Vec<f64> = (0..d).map(|i| sig.eps(i) * nv[i]).collect();
    // d eta_ij = d_i eta_j - d_j eta_i
    let deta = DMatrix::from_fn(d, d, |i, j| {
        sig.eps(j) * n_jets[j].grad(i) - sig.eps(i) * n_jets[i].grad(j)
    });
    let a_jet = alpha.jet(p)?;
    let a = a_jet.value();
    let da: Vec<f64> = a_jet.gradient().to_vec();

    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let eta_u = dot(&eta, u.as_slice());
    let eta_v = dot(&eta, &vv);
    let du_n: Vec<f64> = (0..d).map(|i| dot(u.as_slice(), n_jets[i].gradient())).collect();
    let dv_n: Vec<f64> = (0..d).map(|i| dot(&vv, n_jets[i].gradient())).collect();
    let flat = |x: &[f64], y: &[f64]| (0..d).map(|i| sig.eps(i) * x[i] * y[i]).sum::<f64>();
    let lie_n_g = flat(&du_n, &vv) + flat(u.as_slice(), &dv_n);
    let i_v_deta: Vec<f64> = (0..d).map(|j| (0..d).map(|i| vv[i] * deta[(i, j)]).sum()).collect();
    let i_u_deta: Vec<f64> = (0..d).map(|j| (0..d).map(|i| u[i] * deta[(i, j)]).sum()).collect();

    let covector = DVector::from_fn(d, |j, _| {
        a * eta_u * i_v_deta[j] + a * eta_v * i_u_deta[j] - eta_u * eta_v * da[j]
    });
    let sharp = linalg::solve(&g_alpha, &covector).ok_or(Error::DegenerateTwistedMetric {
        point: p.to_vec(),
        det,
    })?;
    let n_coeff = 0.5 * (a * lie_n_g + dot(&da, u.as_slice()) * eta_v + dot(&da, &vv) * eta_u);

    let rhs: Vec<f64> = (0..d)
        .map(|i| flat_uv[i] + 0.5 * sharp[i] + n_coeff * nv[i])
        .collect();
    Ok(lhs
        .iter()
        .zip(&rhs)
        .fold(0.0_f64, |m, (l, r)| m.max((l - r).abs())))
}

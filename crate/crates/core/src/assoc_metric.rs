//! The associated metric `g_alpha = g + alpha eta (x) eta` on a rigged null
//! hypersurface, the Gauss map and shape operator of `M` inside
//! `(R^{n+1}, g_alpha-bar)`, and the tests for `nabla = nabla^alpha`.

use nalgebra::{DMatrix, DVector};

use crate::ambient::{AmbientScalarField, AmbientVector, TwistedMetricField};
use crate::curvature::{christoffel_jets, levi_civita, MetricField};
use crate::error::{Error, Result};
use crate::jet_algebra::{Expression, Jet3};
use crate::linalg::{self, JetMatrix};
use crate::monge_chart::SurfaceChart;
use crate::oracle_fd::{fd_christoffels, FdConfig};
use crate::rigged_geometry::{
    g_alpha_jets, LocalGeometry, MongeRiggingField, RiggedPoint, RiggingSpec, SpecialExtension,
};

/// Tolerance for the closed-rigging and leaf-constancy preconditions.
pub const HYPOTHESIS_TOL: f64 = 1e-8;

/// A nowhere-vanishing function of `x0` with a fixed sign.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaField {
    expr: Expression,
    sign: f64,
}

impl AlphaField {
    pub fn new(expr: Expression, sign: f64) -> Result<Self> {
        if expr.arity() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: expr.arity(),
            });
        }
        if sign != 1.0 && sign != -1.0 {
            return Err(Error::Config(format!("alpha sign must be +1 or -1, got {sign}")));
        }
        Ok(Self { expr, sign })
    }

    pub fn parse(text: &str, sign: f64) -> Result<Self> {
        Self::new(Expression::parse_x0(text)?, sign)
    }

    pub fn constant(value: f64) -> Result<Self> {
        if value == 0.0 {
            return Err(Error::Config("alpha must not vanish".into()));
        }
        Self::parse(&format!("{value:e}"), value.signum())
    }

    /// Takes the sign from the value at `x0`.
    pub fn with_sign_at(expr: Expression, x0: f64) -> Result<Self> {
        let v = expr.eval(&[x0])?;
        if v == 0.0 || !v.is_finite() {
            return Err(Error::Config(format!("alpha({x0}) = {v} has no sign")));
        }
        Self::new(expr, v.signum())
    }

    pub fn expression(&self) -> &Expression {
        &self.expr
    }

    pub fn sign(&self) -> f64 {
        self.sign
    }

    pub fn value(&self, x0: f64) -> Result<f64> {
        self.expr.eval(&[x0])
    }

    /// `alpha'(x0)`.
    pub fn derivative(&self, x0: f64) -> Result<f64> {
        Ok(self.expr.univariate_derivatives(x0)?[1])
    }

    fn checked(&self, value: f64, point: &[f64]) -> Result<()> {
        if !(value * self.sign > 0.0) {
            return Err(Error::AlphaSignMismatch {
                point: point.to_vec(),
                value,
            });
        }
        Ok(())
    }

    /// `alpha(F)` as a jet in the chart variables.
    pub fn on_chart(&self, f: &Jet3, point: &[f64]) -> Result<Jet3> {
        let j = self.expr.compose_univariate(f)?;
        self.checked(j.value(), point)?;
        Ok(j)
    }

    /// `d alpha(xi) = alpha'(F) xi^0`.
    pub fn d_alpha(&self, local: &LocalGeometry) -> Result<f64> {
        Ok(self.derivative(local.f.value())? * local.xi[0].value())
    }

    /// `d alpha(d_a) = alpha'(F) F_a` on `M`.
    pub fn d_alpha_tangent(&self, local: &LocalGeometry) -> Result<Vec<f64>> {
        let d = self.derivative(local.f.value())?;
        Ok(local.df.iter().map(|j| d * j.value()).collect())
    }

    /// `max_k |d alpha(E_k)|` over a screen frame.
    pub fn leaf_defect(&self, local: &LocalGeometry, rp: &RiggedPoint) -> Result<f64> {
        let da = self.d_alpha_tangent(local)?;
        Ok(rp
            .screen
            .iter()
            .map(|e| e.iter().zip(&da).map(|(x, y)| x * y).sum::<f64>().abs())
            .fold(0.0, f64::max))
    }
}

impl AmbientScalarField for AlphaField {
    /// `alpha(x0)` in the ambient coordinates.
    fn jet(&self, x: &[f64]) -> Result<Jet3> {
        let x0 = Jet3::variable(x.len(), 0, x[0]);
        let j = self.expr.compose_univariate(&x0)?;
        self.checked(j.value(), x)?;
        Ok(j)
    }
}

/// Fails with `NotClosed` or `AlphaNotLeafConstant` when a hypothesis of the
/// coincidence and curvature relations is violated at the point.
pub fn check_hypotheses(chart: &SurfaceChart, local: &LocalGeometry, alpha: &AlphaField) -> Result<RiggedPoint> {
    let n = local.n;
    let mut defect = 0.0_f64;
    for a in 0..n {
        for b in 0..n {
            defect = defect.max((local.eta[b].grad(a) - local.eta[a].grad(b)).abs());
        }
    }
    if defect > HYPOTHESIS_TOL {
        return Err(Error::NotClosed {
            point: local.p.clone(),
            defect,
        });
    }
    let rp = local.rigged_point(chart)?;
    let leaf = alpha.leaf_defect(local, &rp)?;
    if leaf > HYPOTHESIS_TOL {
        return Err(Error::AlphaNotLeafConstant {
            point: local.p.clone(),
            component: leaf,
        });
    }
    Ok(rp)
}

#[derive(Clone, Debug)]
pub struct AssocMetricPoint {
    pub g_alpha: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    pub alpha: f64,
    pub det: f64,
    /// Number of negative eigenvalues.
    pub index: usize,
}

pub fn g_alpha_at(chart: &SurfaceChart, spec: &RiggingSpec, alpha: &AlphaField, p: &[f64]) -> Result<AssocMetricPoint> {
    let local = LocalGeometry::new(chart, spec, p)?;
    let a = alpha.on_chart(&local.f, p)?;
    let g_alpha = g_alpha_jets(&local, &a).values();
    let det = g_alpha.determinant();
    let inverse = match g_alpha.clone().try_inverse() {
        Some(inv) if det.abs() >= linalg::det_threshold(&g_alpha) => inv,
        _ => return Err(Error::DegenerateAssocMetric { point: p.to_vec(), det }),
    };
    let index = linalg::negative_eigen_count(&g_alpha);
    Ok(AssocMetricPoint {
        g_alpha,
        inverse,
        alpha: a.value(),
        det,
        index,
    })
}

/// `g_alpha` as a metric field over the chart.
pub struct AssocMetric<'a> {
    pub chart: &'a SurfaceChart,
    pub spec: &'a RiggingSpec,
    pub alpha: &'a AlphaField,
}

impl MetricField for AssocMetric<'_> {
    fn dim(&self) -> usize {
        self.chart.dim()
    }

    fn metric_jets(&self, x: &[f64]) -> Result<JetMatrix> {
        let local = LocalGeometry::new(self.chart, self.spec, x)?;
        let a = self.alpha.on_chart(&local.f, x)?;
        Ok(g_alpha_jets(&local, &a))
    }
}

/// `delta_alpha = sqrt|alpha| N - (sign(alpha) / sqrt|alpha|) xi`.
pub fn gauss_map(rp: &RiggedPoint, alpha: &AlphaField) -> Result<AmbientVector> {
    let x0 = rp.position[0];
    let a = alpha.value(x0)?;
    alpha.checked(a, &rp.p)?;
    let r = a.abs().sqrt();
    Ok(&(r * &rp.rigging) - &((alpha.sign() / r) * &rp.xi_ambient))
}

/// Pointwise ingredients shared by the shape-operator formulas.
struct DeltaData {
    local: LocalGeometry,
    alpha: f64,
    sign: f64,
    root: f64,
    /// `d alpha(d_a)` on `M`.
    da: Vec<f64>,
    /// `g_alpha`-dual of `d alpha` on `M`.
    da_sharp: Vec<f64>,
    /// `d alpha(N)` and `d alpha(delta)` in the ambient space.
    da_n: f64,
    da_delta: f64,
}

fn delta_data(chart: &SurfaceChart, spec: &RiggingSpec, alpha: &AlphaField, p: &[f64]) -> Result<DeltaData> {
    let local = LocalGeometry::new(chart, spec, p)?;
    let a_jet = alpha.on_chart(&local.f, p)?;
    let g_alpha = g_alpha_jets(&local, &a_jet).values();
    let a = a_jet.value();
    let sign = alpha.sign();
    let root = a.abs().sqrt();
    let da = alpha.d_alpha_tangent(&local)?;
    let da_sharp = linalg::solve(&g_alpha, &DVector::from_column_slice(&da))
        .ok_or_else(|| Error::DegenerateAssocMetric {
            point: p.to_vec(),
            det: g_alpha.determinant(),
        })?
        .as_slice()
        .to_vec();
    let d1 = alpha.derivative(local.f.value())?;
    let da_n = d1 * local.rig[0].value();
    let da_xi = d1 * local.xi[0].value();
    let da_delta = root * da_n - sign / root * da_xi;
    Ok(DeltaData {
        local,
        alpha: a,
        sign,
        root,
        da,
        da_sharp,
        da_n,
        da_delta,
    })
}

/// `A_delta` in coordinates, `[(c, a)] = (A_delta d_a)^c`, from the closed form
/// `(s / sqrt|alpha|) [alpha A_N - A* - tau xi - (d alpha / 2 alpha) xi
///  - (eta / 2 sqrt|alpha|)(sqrt|alpha| d alpha^# + d alpha(delta) xi)]`.
pub fn shape_operator_delta(
    chart: &SurfaceChart,
    spec: &RiggingSpec,
    alpha: &AlphaField,
    p: &[f64],
) -> Result<DMatrix<f64>> {
    let d = delta_data(chart, spec, alpha, p)?;
    let l = &d.local;
    let n = l.n;
    let xi: Vec<f64> = l.xi[1..].iter().map(Jet3::value).collect();
    Ok(DMatrix::from_fn(n, n, |c, a| {
        let eta = l.eta[a].value();
        let inner = d.alpha * l.a_n.get(c, a).value()
            - l.a_star.get(c, a).value()
            - l.tau[a].value() * xi[c]
            - d.da[a] / (2.0 * d.alpha) * xi[c]
            - eta / (2.0 * d.root) * (d.root * d.da_sharp[c] + d.da_delta * xi[c]);
        d.sign / d.root * inner
    }))
}

/// Where the ambient Christoffel symbols of the twisted metric come from.
#[derive(Clone, Copy, Debug)]
pub enum AmbientConnection<'a> {
    Jets,
    FiniteDifference(&'a FdConfig),
}

/// `A_delta` from `A_delta X = -(nabla^alpha-bar_X delta)^T`, with the
/// rigging continued off `M` by `extension`. Also returns the largest
/// normal component of `nabla^alpha-bar_X delta`, which vanishes when `M` is
/// a hypersurface of the twisted ambient with unit normal `delta`.
pub fn shape_operator_delta_connection(
    chart: &SurfaceChart,
    spec: &RiggingSpec,
    alpha: &AlphaField,
    p: &[f64],
    extension: SpecialExtension,
    source: AmbientConnection<'_>,
) -> Result<(DMatrix<f64>, f64)> {
    let local = LocalGeometry::new(chart, spec, p)?;
    let n = local.n;
    let sig = chart.signature();
    let rigging = MongeRiggingField::new(chart, spec).with_extension(extension);
    let field = TwistedMetricField {
        rigging: &rigging,
        alpha,
        sig,
    };
    let x = chart.position(p)?;
    let gamma = match source {
        AmbientConnection::Jets => christoffel_jets(&field, x.as_slice())?.values(),
        AmbientConnection::FiniteDifference(cfg) => fd_christoffels(&field, x.as_slice(), cfg)?,
    };

    let a_jet = alpha.on_chart(&local.f, p)?;
    let s = alpha.sign();
    let root = a_jet
        .scale(s)
        .try_sqrt()
        .ok_or_else(|| Error::AlphaSignMismatch {
            point: p.to_vec(),
            value: a_jet.value(),
        })?;
    let inv = root.recip().scale(s);
    let delta: Vec<Jet3> = (0..=n).map(|i| &root * &local.rig[i] - &inv * &local.xi[i]).collect();
    let dv: Vec<f64> = delta.iter().map(Jet3::value).collect();

    let mut shape = DMatrix::zeros(n, n);
    let mut normal = 0.0_f64;
    for a in 0..n {
        let mut t = vec![0.0; n + 1];
        t[0] = local.df[a].value();
        t[a + 1] = 1.0;
        let w: Vec<f64> = (0..=n)
            .map(|i| {
                let mut v = delta[i].grad(a);
                for j in 0..=n {
                    for k in 0..=n {
                        v += gamma.get(i, j, k) * t[j] * dv[k];
                    }
                }
                v
            })
            .collect();
        let tangential: f64 = (0..n).map(|c| local.df[c].value() * w[c + 1]).sum();
        normal = normal.max((w[0] - tangential).abs());
        for c in 0..n {
            shape[(c, a)] = -w[c + 1];
        }
    }
    Ok((shape, normal))
}

/// The nonzero principal curvature predicted for a screen conformal rigging
/// with leaf-constant `alpha`:
/// `-(s / 2 sqrt|alpha|)[2 tau(xi) + eta(d alpha^#) + d alpha(N)]`, with
/// eigenvector `xi`.
pub fn principal_curvature(chart: &SurfaceChart, spec: &RiggingSpec, alpha: &AlphaField, p: &[f64]) -> Result<f64> {
    let d = delta_data(chart, spec, alpha, p)?;
    let l = &d.local;
    let tau_xi: f64 = (0..l.n).map(|a| l.tau[a].value() * l.xi[a + 1].value()).sum();
    let eta_sharp: f64 = (0..l.n).map(|a| l.eta[a].value() * d.da_sharp[a]).sum();
    Ok(-d.sign / (2.0 * d.root) * (2.0 * tau_xi + eta_sharp + d.da_n))
}

/// `max_ab |2B - 2 alpha C + 2 alpha tau (x) eta + d alpha(xi) eta (x) eta|`.
pub fn coincidence_residual(chart: &SurfaceChart, spec: &RiggingSpec, alpha: &AlphaField, p: &[f64]) -> Result<f64> {
    let local = LocalGeometry::new(chart, spec, p)?;
    check_hypotheses(chart, &local, alpha)?;
    let a = alpha.on_chart(&local.f, p)?.value();
    let da_xi = alpha.d_alpha(&local)?;
    let n = local.n;
    let mut m = 0.0_f64;
    for x in 0..n {
        for y in 0..n {
            let eta_x = local.eta[x].value();
            let eta_y = local.eta[y].value();
            let r = 2.0 * local.b.get(x, y).value() - 2.0 * a * local.c.get(x, y).value()
                + 2.0 * a * local.tau[x].value() * eta_y
                + eta_x * eta_y * da_xi;
            m = m.max(r.abs());
        }
    }
    Ok(m)
}

/// The two conditions `A* = alpha A_N` and `2 alpha tau(xi) + d alpha(xi) = 0`,
/// as `(max |A* - alpha A_N|, |2 alpha tau(xi) + d alpha(xi)|)`.
pub fn coincidence_conditions(
    chart: &SurfaceChart,
    spec: &RiggingSpec,
    alpha: &AlphaField,
    p: &[f64],
) -> Result<(f64, f64)> {
    let local = LocalGeometry::new(chart, spec, p)?;
    let a = alpha.on_chart(&local.f, p)?.value();
    let n = local.n;
    let mut shape = 0.0_f64;
    for c in 0..n {
        for b in 0..n {
            shape = shape.max((local.a_star.get(c, b).value() - a * local.a_n.get(c, b).value()).abs());
        }
    }
    let tau_xi: f64 = (0..n).map(|b| local.tau[b].value() * local.xi[b + 1].value()).sum();
    Ok((shape, (2.0 * a * tau_xi + alpha.d_alpha(&local)?).abs()))
}

/// Compares the Levi-Civita connection of `g_alpha` with
/// `nabla_X Y - (1/2) eta(X) eta(Y) d alpha^# + (bracket / 2 alpha) xi`,
/// bracket `2B - 2 alpha C + 2 alpha tau(X) eta(Y) + d alpha(X) eta(Y) + d alpha(Y) eta(X)`,
/// over coordinate `X, Y`.
pub fn connection_relation_residual(
    chart: &SurfaceChart,
    spec: &RiggingSpec,
    alpha: &AlphaField,
    p: &[f64],
) -> Result<f64> {
    let d = delta_data(chart, spec, alpha, p)?;
    let l = &d.local;
    let n = l.n;
    let a_jet = alpha.on_chart(&l.f, p)?;
    let conn = levi_civita(&g_alpha_jets(l, &a_jet), p)?;
    let xi: Vec<f64> = l.xi[1..].iter().map(Jet3::value).collect();
    let mut m = 0.0_f64;
    for x in 0..n {
        for y in 0..n {
            let eta_x = l.eta[x].value();
            let eta_y = l.eta[y].value();
            let bracket = 2.0 * l.b.get(x, y).value() - 2.0 * d.alpha * l.c.get(x, y).value()
                + 2.0 * d.alpha * l.tau[x].value() * eta_y
                + d.da[x] * eta_y
                + d.da[y] * eta_x;
            for c in 0..n {
                let rhs = l.gamma.get(c, x, y).value() - 0.5 * eta_x * eta_y * d.da_sharp[c]
                    + bracket / (2.0 * d.alpha) * xi[c];
                m = m.max((conn.get(c, x, y).value() - rhs).abs());
            }
        }
    }
    Ok(m)
}

/// `max_cab |Gamma_induced - Gamma(g_alpha)|`.
pub fn christoffel_mismatch(chart: &SurfaceChart, spec: &RiggingSpec, alpha: &AlphaField, p: &[f64]) -> Result<f64> {
    let local = LocalGeometry::new(chart, spec, p)?;
    let a_jet = alpha.on_chart(&local.f, p)?;
    let conn = levi_civita(&g_alpha_jets(&local, &a_jet), p)?;
    let n = local.n;
    let mut m = 0.0_f64;
    for c in 0..n {
        for a in 0..n {
            for b in 0..n {
                m = m.max((conn.get(c, a, b).value() - local.gamma.get(c, a, b).value()).abs());
            }
        }
    }
    Ok(m)
}

/// The pair `(phi N, alpha / phi^2)` built from `(spec, alpha)`.
pub fn rescale(spec: &RiggingSpec, phi: &Expression, alpha: &AlphaField) -> Result<(RiggingSpec, AlphaField)> {
    let spec = spec.rescaled(phi)?;
    let expr = Expression::x0(alpha.expression().root().clone() / phi.root().clone().powi(2))?;
    Ok((spec, AlphaField::new(expr, alpha.sign())?))
}

pub fn rescaled_coincidence(
    chart: &SurfaceChart,
    spec: &RiggingSpec,
    phi: &Expression,
    alpha: &AlphaField,
    p: &[f64],
) -> Result<f64> {
    let (spec, alpha) = rescale(spec, phi, alpha)?;
    coincidence_residual(chart, &spec, &alpha, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::inner;
    use crate::rigged_geometry::build_rigged_point;

    fn special_alpha() -> AlphaField {
        AlphaField::parse("2*x0^2", 1.0).unwrap()
    }

    #[test]
    fn light_cone_metrics_at_anchor() {
        let chart = SurfaceChart::light_cone(2).unwrap();
        let p = [1.0, 0.0];
        let want = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let g1 = g_alpha_at(&chart, &RiggingSpec::GenericUcc, &AlphaField::constant(1.0).unwrap(), &p).unwrap();
        assert!((g1.g_alpha - &want).abs().max() < 1e-12);
        assert_eq!(g1.index, 0);
        let gs = g_alpha_at(&chart, &RiggingSpec::Special, &special_alpha(), &p).unwrap();
        assert!((gs.g_alpha - want).abs().max() < 1e-12);
    }

    #[test]
    fn gauss_map_is_unit_and_normal() {
        let chart = SurfaceChart::light_cone(3).unwrap();
        let p = [0.4, -0.7, 1.1];
        for (spec, alpha) in [
            (RiggingSpec::GenericUcc, AlphaField::constant(1.0).unwrap()),
            (RiggingSpec::Special, special_alpha()),
            (RiggingSpec::GenericUcc, AlphaField::constant(-0.5).unwrap()),
        ] {
            let rp = build_rigged_point(&chart, &spec, &p).unwrap();
            let delta = gauss_map(&rp, &alpha).unwrap();
            let a = alpha.value(rp.position[0]).unwrap();
            let gbar = crate::ambient::twisted_metric(&p, &rp.rigging, a, &rp.sig).unwrap();
            let form = |u: &AmbientVector, v: &AmbientVector| {
                (DVector::from_column_slice(u.as_slice()).transpose() * &gbar * DVector::from_column_slice(v.as_slice()))[0]
            };
            assert!((form(&delta, &delta) + alpha.sign()).abs() < 1e-12);
            for t in &rp.tangent {
                assert!(form(&delta, t).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gauss_map_at_anchor() {
        let chart = SurfaceChart::light_cone(2).unwrap();
        let rp = build_rigged_point(&chart, &RiggingSpec::GenericUcc, &[1.0, 0.0]).unwrap();
        let delta = gauss_map(&rp, &AlphaField::constant(1.0).unwrap()).unwrap();
        assert!((delta.0[0] + 2f64.sqrt()).abs() < 1e-14);
        assert!(delta.0[1].abs() < 1e-14 && delta.0[2].abs() < 1e-14);
        assert!((inner(&delta, &delta, &rp.sig).unwrap() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn ucc_with_unit_alpha_is_totally_geodesic() {
        let chart = SurfaceChart::light_cone(3).unwrap();
        let a = shape_operator_delta(&chart, &RiggingSpec::GenericUcc, &AlphaField::constant(1.0).unwrap(), &[0.3, 0.9, -0.2])
            .unwrap();
        assert!(a.abs().max() < 1e-12);
    }

    #[test]
    fn special_rigging_coincides() {
        let chart = SurfaceChart::light_cone(2).unwrap();
        let p = [0.7, -1.3];
        let alpha = special_alpha();
        assert!(coincidence_residual(&chart, &RiggingSpec::Special, &alpha, &p).unwrap() < 1e-9);
        let (shape, tau) = coincidence_conditions(&chart, &RiggingSpec::Special, &alpha, &p).unwrap();
        assert!(shape < 1e-9 && tau < 1e-9);
        assert!(christoffel_mismatch(&chart, &RiggingSpec::Special, &alpha, &p).unwrap() < 1e-8);
    }

    #[test]
    fn sign_mismatch_is_rejected() {
        let chart = SurfaceChart::light_cone(2).unwrap();
        let alpha = AlphaField::parse("x0 - 10", 1.0).unwrap();
        assert!(matches!(
            g_alpha_at(&chart, &RiggingSpec::GenericUcc, &alpha, &[1.0, 0.0]),
            Err(Error::AlphaSignMismatch { .. })
        ));
    }

    #[test]
    fn identity_rescaling_keeps_residual() {
        let chart = SurfaceChart::light_cone(2).unwrap();
        let p = [0.7, -1.3];
        let alpha = AlphaField::constant(2.0).unwrap();
        let one = Expression::parse_x0("1").unwrap();
        let base = coincidence_residual(&chart, &RiggingSpec::GenericUcc, &alpha, &p).unwrap();
        let scaled = rescaled_coincidence(&chart, &RiggingSpec::GenericUcc, &one, &alpha, &p).unwrap();
        assert!((base - scaled).abs() < 1e-12);
    }
}

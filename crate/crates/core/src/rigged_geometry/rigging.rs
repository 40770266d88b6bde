use std::f64::consts::FRAC_1_SQRT_2;

use crate::ambient::AmbientVectorField;
use crate::error::{Error, Result};
use crate::jet_algebra::{Expression, Jet3};
use crate::monge_chart::SurfaceChart;

/// `|x^0|` below this makes the special rigging undefined.
pub const X0_ZERO_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaseRigging {
    /// `N = (-e_0 + eps^a F_a e_a) / sqrt 2`, `xi = n / sqrt 2`.
    GenericUcc,
    /// `N = (e_0 - eps^a F_a e_a) / (2 x^0)`, `xi = -x^0 n`.
    Special,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RiggingSpec {
    GenericUcc,
    Special,
    /// `N = phi(x^0) N_base`, `xi = xi_base / phi(x^0)`.
    Scaled { phi: Expression, base: BaseRigging },
}

impl From<BaseRigging> for RiggingSpec {
    fn from(b: BaseRigging) -> Self {
        match b {
            BaseRigging::GenericUcc => RiggingSpec::GenericUcc,
            BaseRigging::Special => RiggingSpec::Special,
        }
    }
}

impl RiggingSpec {
    pub fn scaled(phi: Expression, base: BaseRigging) -> Result<Self> {
        if phi.arity() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: phi.arity(),
            });
        }
        Ok(RiggingSpec::Scaled { phi, base })
    }

    pub fn base(&self) -> BaseRigging {
        match self {
            RiggingSpec::GenericUcc => BaseRigging::GenericUcc,
            RiggingSpec::Special => BaseRigging::Special,
            RiggingSpec::Scaled { base, .. } => *base,
        }
    }

    pub fn phi(&self) -> Option<&Expression> {
        match self {
            RiggingSpec::Scaled { phi, .. } => Some(phi),
            _ => None,
        }
    }

    /// The rigging `phi N`, folding into an existing conformal factor.
    pub fn rescaled(&self, phi: &Expression) -> Result<Self> {
        let phi = match self.phi() {
            None => phi.clone(),
            Some(old) => Expression::x0(old.root().clone() * phi.root().clone())?,
        };
        Self::scaled(phi, self.base())
    }

    pub fn label(&self) -> String {
        match self {
            RiggingSpec::GenericUcc => "generic_ucc".into(),
            RiggingSpec::Special => "special".into(),
            RiggingSpec::Scaled { phi, base } => {
                let base: RiggingSpec = (*base).into();
                format!("scaled({phi}, {})", base.label())
            }
        }
    }

    fn phi_jet(&self, x0: &Jet3, point: &[f64]) -> Result<Option<Jet3>> {
        let Some(phi) = self.phi() else {
            return Ok(None);
        };
        let j = phi.compose_univariate(x0)?;
        if j.value() == 0.0 {
            return Err(Error::RiggingUndefined { point: point.to_vec() });
        }
        Ok(Some(j))
    }

    /// Ambient components of `N` and `xi` as jets, given the jet of `x^0`,
    /// jets of `F_a` and the parameter signs. All jets share one variable set.
    pub(crate) fn components(
        &self,
        x0: &Jet3,
        df: &[Jet3],
        eps: &[f64],
        point: &[f64],
    ) -> Result<(Vec<Jet3>, Vec<Jet3>)> {
        let nv = x0.nvars();
        let one = Jet3::constant(nv, 1.0);
        let eps_df: Vec<Jet3> = df.iter().zip(eps).map(|(d, &e)| d.scale(e)).collect();
        let (mut rig, mut xi) = match self.base() {
            BaseRigging::GenericUcc => {
                let s = FRAC_1_SQRT_2;
                let rig = std::iter::once(one.scale(-s))
                    .chain(eps_df.iter().map(|d| d.scale(s)))
                    .collect::<Vec<_>>();
                let xi = std::iter::once(one.scale(s))
                    .chain(eps_df.iter().map(|d| d.scale(s)))
                    .collect::<Vec<_>>();
                (rig, xi)
            }
            BaseRigging::Special => {
                if x0.value().abs() < X0_ZERO_TOL {
                    return Err(Error::RiggingUndefined { point: point.to_vec() });
                }
                let half_inv = x0.recip().scale(0.5);
                let rig = std::iter::once(half_inv.clone())
                    .chain(eps_df.iter().map(|d| -(&half_inv * d)))
                    .collect::<Vec<_>>();
                let xi = std::iter::once(-x0)
                    .chain(eps_df.iter().map(|d| -(x0 * d)))
                    .collect::<Vec<_>>();
                (rig, xi)
            }
        };
        if let Some(phi) = self.phi_jet(x0, point)? {
            let inv = phi.recip();
            rig.iter_mut().for_each(|r| *r = &phi * &*r);
            xi.iter_mut().for_each(|x| *x = &inv * &*x);
        }
        Ok((rig, xi))
    }
}

/// How the special rigging is continued off the hypersurface.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpecialExtension {
    /// `(e_0 - eps^a F_a(x^) e_a) / (2 x^0)`.
    InverseX0,
    /// `(e_0 - eps^a F_a(x^) e_a) / (x^0 + F(x^))`, whose metric dual is closed.
    Symmetric,
}

/// The rigging `N` of a Monge chart continued to a neighbourhood in the
/// ambient space by freezing the parameter dependence of `F_a`.
pub struct MongeRiggingField<'a> {
    pub chart: &'a SurfaceChart,
    pub spec: &'a RiggingSpec,
    pub extension: SpecialExtension,
}

impl<'a> MongeRiggingField<'a> {
    pub fn new(chart: &'a SurfaceChart, spec: &'a RiggingSpec) -> Self {
        Self {
            chart,
            spec,
            extension: SpecialExtension::InverseX0,
        }
    }

    pub fn with_extension(mut self, extension: SpecialExtension) -> Self {
        self.extension = extension;
        self
    }
}

impl AmbientVectorField for MongeRiggingField<'_> {
    fn dim(&self) -> usize {
        self.chart.dim() + 1
    }

    fn jets(&self, x: &[f64]) -> Result<Vec<Jet3>> {
        let n = self.chart.dim();
        if x.len() != n + 1 {
            return Err(Error::DimensionMismatch {
                expected: n + 1,
                found: x.len(),
            });
        }
        let f = self.chart.jet(&x[1..])?.embed(n + 1, 1);
        let df: Vec<Jet3> = (0..n).map(|a| f.partial(a + 1)).collect();
        let eps: Vec<f64> = (0..n).map(|a| self.chart.eps(a)).collect();
        let x0 = Jet3::variable(n + 1, 0, x[0]);
        let (rig, _) = self.spec.components(&x0, &df, &eps, x)?;
        if self.spec.base() != BaseRigging::Special || self.extension == SpecialExtension::InverseX0 {
            return Ok(rig);
        }
        // Swap 1/(2 x0) for 1/(x0 + F); both agree on the hypersurface.
        let sum = &x0 + &f;
        if sum.value().abs() < X0_ZERO_TOL {
            return Err(Error::RiggingUndefined { point: x.to_vec() });
        }
        let ratio = &x0.scale(2.0) * &sum.recip();
        Ok(rig.into_iter().map(|r| &r * &ratio).collect())
    }
}

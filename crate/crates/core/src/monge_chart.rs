//! Monge charts `x(u) = (F(u), u)` of null hypersurfaces and point sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ambient::{AmbientVector, Signature};
use crate::error::{Error, Result};
use crate::jet_algebra::{evaluate_jet, Expr, Expression, Jet3};

/// Points whose null residual exceeds this are rejected by the sampler.
pub const NULL_ADMISSION_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exclusion {
    /// Open Euclidean ball in parameter space.
    Ball { center: Vec<f64>, r: f64 },
}

impl Exclusion {
    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            Exclusion::Ball { center, r } => {
                let d2: f64 = p.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                d2 < r * r
            }
        }
    }
}

/// A graph `x^0 = F(u^1, ..., u^n)` in `R^{n+1}_q`.
#[derive(Clone, Debug)]
pub struct SurfaceChart {
    n: usize,
    sig: Signature,
    f: Expression,
    exclusions: Vec<Exclusion>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SurfaceChart {
    /// Sampling box defaults to `[-2, 2]^n`.
    pub fn new(n: usize, q: usize, f: Expression) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("hypersurface dimension must be positive".into()));
        }
        if q == 0 {
            return Err(Error::InvalidSignature(
                "a null Monge graph needs a timelike x0 direction (q >= 1)".into(),
            ));
        }
        if f.arity() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: f.arity(),
            });
        }
        Ok(Self {
            n,
            sig: Signature::new(n + 1, q)?,
            f,
            exclusions: Vec::new(),
            lower: vec![-2.0; n],
            upper: vec![2.0; n],
        })
    }

    pub fn parse(n: usize, q: usize, text: &str) -> Result<Self> {
        Self::new(n, q, Expression::parse_chart(text, n)?)
    }

    pub fn with_exclusions(mut self, exclusions: Vec<Exclusion>) -> Self {
        self.exclusions = exclusions;
        self
    }

    pub fn with_box(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        for v in [&lower, &upper] {
            if v.len() != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    found: v.len(),
                });
            }
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::Config("sampling box has an empty side".into()));
        }
        self.lower = lower;
        self.upper = upper;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn function(&self) -> &Expression {
        &self.f
    }

    pub fn exclusions(&self) -> &[Exclusion] {
        &self.exclusions
    }

    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lower, &self.upper)
    }

    /// `eps^a` of the parameter direction `a` (0-based), i.e. `eps_{a+1}`.
    pub fn eps(&self, a: usize) -> f64 {
        self.sig.eps(a + 1)
    }

    fn check(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: p.len(),
            });
        }
        Ok(())
    }

    /// Inside no exclusion and `F` evaluable.
    pub fn in_domain(&self, p: &[f64]) -> bool {
        p.len() == self.n
            && !self.exclusions.iter().any(|e| e.contains(p))
            && self.f.eval(p).map_or(false, f64::is_finite)
    }

    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        self.check(p)?;
        self.f.eval(p)
    }

    /// Exact order-3 jet of `F` at `p`.
    pub fn jet(&self, p: &[f64]) -> Result<Jet3> {
        self.check(p)?;
        evaluate_jet(&self.f, p)
    }

    /// Ambient position `(F(p), p)`.
    pub fn position(&self, p: &[f64]) -> Result<AmbientVector> {
        let x0 = self.eval(p)?;
        Ok(AmbientVector(std::iter::once(x0).chain(p.iter().copied()).collect()))
    }

    /// `F = <a, u>`; null exactly when `sum eps^a a_a^2 = 1`.
    pub fn hyperplane(a: &[f64], q: usize) -> Result<Self> {
        let n = a.len();
        let mut root = Expr::constant(0.0);
        for (i, &ai) in a.iter().enumerate() {
            root = root + Expr::var(i) * ai;
        }
        Self::new(n, q, Expression::chart(root, n)?)
    }

    /// `F = sqrt(sum_a eps^a (u^a - c_a)^2)`, the light cone with vertex
    /// `(0, c)`, with a ball of radius `r_excl` around the vertex removed.
    pub fn cone(center: &[f64], q: usize, r_excl: f64) -> Result<Self> {
        let n = center.len();
        let sig = Signature::new(n + 1, q)?;
        let mut sum: Option<Expr> = None;
        for (a, &c) in center.iter().enumerate() {
            let shifted = if c == 0.0 {
                Expr::var(a)
            } else {
                Expr::var(a) - c
            };
            let term = shifted.powi(2);
            let term = if sig.eps(a + 1) < 0.0 { -term } else { term };
            sum = Some(match sum {
                None => term,
                Some(s) => s + term,
            });
        }
        let root = sum.unwrap_or(Expr::constant(0.0)).sqrt();
        Ok(Self::new(n, q, Expression::chart(root, n)?)?.with_exclusions(vec![Exclusion::Ball {
            center: center.to_vec(),
            r: r_excl,
        }]))
    }

    pub fn light_cone(n: usize) -> Result<Self> {
        Self::cone(&vec![0.0; n], 1, 0.1)
    }
}

/// `|sum_a eps^a F_a^2 - 1|`.
pub fn null_residual(chart: &SurfaceChart, p: &[f64]) -> Result<f64> {
    let f = chart.jet(p)?;
    let s: f64 = (0..chart.dim()).map(|a| chart.eps(a) * f.grad(a) * f.grad(a)).sum();
    Ok((s - 1.0).abs())
}

/// `max_b |sum_a eps^a F_a F_ab|`, evaluated only on null points.
pub fn gradient_identity_residual(chart: &SurfaceChart, p: &[f64]) -> Result<f64> {
    let residual = null_residual(chart, p)?;
    if residual > NULL_ADMISSION_TOL {
        return Err(Error::NotNull {
            point: p.to_vec(),
            residual,
        });
    }
    let f = chart.jet(p)?;
    let n = chart.dim();
    Ok((0..n)
        .map(|b| (0..n).map(|a| chart.eps(a) * f.grad(a) * f.hess(a, b)).sum::<f64>().abs())
        .fold(0.0, f64::max))
}

/// `d_a = F_a e_0 + e_a`.
pub fn tangent_frame(chart: &SurfaceChart, p: &[f64]) -> Result<Vec<AmbientVector>> {
    let f = chart.jet(p)?;
    let n = chart.dim();
    Ok((0..n)
        .map(|a| {
            let mut v = AmbientVector::basis(n + 1, a + 1);
            v.0[0] = f.grad(a);
            v
        })
        .collect())
}

/// `e_0 + eps^a F_a e_a`; it is orthogonal to every `d_a` and null on null points.
pub fn normal(chart: &SurfaceChart, p: &[f64]) -> Result<AmbientVector> {
    let f = chart.jet(p)?;
    let n = chart.dim();
    let mut v = AmbientVector::basis(n + 1, 0);
    for a in 0..n {
        v.0[a + 1] = chart.eps(a) * f.grad(a);
    }
    Ok(v)
}

#[derive(Clone, Debug)]
pub struct SamplePoint {
    pub p: Vec<f64>,
    pub f: Jet3,
}

#[derive(Clone, Debug)]
pub struct SampleSet {
    pub seed: u64,
    pub attempts: usize,
    pub points: Vec<SamplePoint>,
}

/// Draws uniformly from the chart box with a seeded ChaCha stream, rejecting
/// points in the chart's or the extra exclusions, outside the domain of `F`,
/// or off the null locus. Gives up after `1000 * count` draws.
pub fn sample(chart: &SurfaceChart, count: usize, seed: u64, exclusions: &[Exclusion]) -> Result<SampleSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_attempts = 1000 * count.max(1);
    let mut points = Vec::with_capacity(count);
    let mut attempts = 0;
    let (lo, hi) = chart.bounds();
    while points.len() < count {
        if attempts == max_attempts {
            return Err(Error::SamplingExhausted {
                requested: count,
                admitted: points.len(),
                attempts,
            });
        }
        attempts += 1;
        let p: Vec<f64> = lo.iter().zip(hi).map(|(&l, &h)| rng.gen_range(l..h)).collect();
        if exclusions.iter().any(|e| e.contains(&p)) || !chart.in_domain(&p) {
            continue;
        }
        match null_residual(chart, &p) {
            Ok(r) if r <= NULL_ADMISSION_TOL => {}
            _ => continue,
        }
        let f = chart.jet(&p)?;
        points.push(SamplePoint { p, f });
    }
    Ok(SampleSet {
        seed,
        attempts,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::inner;

    #[test]
    fn light_cone_is_null_and_normal_is_orthogonal() {
        let chart = SurfaceChart::light_cone(3).unwrap();
        let p = [0.3, -1.2, 0.5];
        assert!(null_residual(&chart, &p).unwrap() < 1e-14);
        assert!(gradient_identity_residual(&chart, &p).unwrap() < 1e-14);
        let nv = normal(&chart, &p).unwrap();
        let sig = chart.signature();
        assert!(inner(&nv, &nv, sig).unwrap().abs() < 1e-14);
        for t in tangent_frame(&chart, &p).unwrap() {
            assert!(inner(&nv, &t, sig).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn non_null_rejected_by_identity_check() {
        let chart = SurfaceChart::parse(2, 1, "u1^2 + u2").unwrap();
        assert!(matches!(
            gradient_identity_residual(&chart, &[1.0, 1.0]),
            Err(Error::NotNull { .. })
        ));
    }

    #[test]
    fn sampler_is_deterministic_and_respects_exclusions() {
        let chart = SurfaceChart::light_cone(2).unwrap();
        let extra = [Exclusion::Ball {
            center: vec![1.0, 1.0],
            r: 0.5,
        }];
        let a = sample(&chart, 20, 7, &extra).unwrap();
        let b = sample(&chart, 20, 7, &extra).unwrap();
        assert_eq!(a.points.len(), 20);
        for (x, y) in a.points.iter().zip(&b.points) {
            assert_eq!(x.p, y.p);
            assert!(!extra[0].contains(&x.p));
            assert!(x.p.iter().map(|v| v * v).sum::<f64>() >= 0.01);
        }
    }

    #[test]
    fn sampler_reports_exhaustion() {
        // Not null anywhere.
        let chart = SurfaceChart::parse(2, 1, "2*u1").unwrap();
        let err = sample(&chart, 5, 1, &[]).unwrap_err();
        assert!(matches!(err, Error::SamplingExhausted { attempts: 5000, admitted: 0, .. }));
    }

    #[test]
    fn lorentzian_hyperplane() {
        // eps = (-1, +1): -a1^2 + a2^2 = 1
        let chart = SurfaceChart::hyperplane(&[0.75, 1.25], 2).unwrap();
        assert!(null_residual(&chart, &[0.2, 0.4]).unwrap() < 1e-14);
    }
}

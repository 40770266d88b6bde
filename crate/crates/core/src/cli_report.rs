//! Run configuration, verification suites, reports and the `nullrig` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ambient::twisted_metric;
use crate::assoc_metric::{
    coincidence_conditions, coincidence_residual, connection_relation_residual, christoffel_mismatch,
    g_alpha_at, gauss_map, rescaled_coincidence, shape_operator_delta, shape_operator_delta_connection, AlphaField,
    AmbientConnection,
};
use crate::curvature::{
    curvature_relation_max, curvature_relation_rederived_max, gauss_codazzi_residuals, levi_civita,
    metricity_defect, rederived_ricci_scalar_residuals, ricci_relation_residuals, riemann,
    scalar_relation_residual, sectional_relation_residuals,
};
use crate::error::{Error, Result};
use crate::jet_algebra::Expression;
use crate::monge_chart::{
    gradient_identity_residual, null_residual, sample, Exclusion, SurfaceChart,
};
use crate::rigged_geometry::{
    build_rigged_point, div_g_alpha_xi, fundamental_forms, g_alpha_jets, lie_xi_g_alpha, normalization_defects,
    weingarten_symmetry_defect, BaseRigging, LocalGeometry, RiggingSpec, SpecialExtension,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SuiteName {
    Structure,
    Coincidence,
    Curvature,
}

impl SuiteName {
    pub const ALL: [SuiteName; 3] = [SuiteName::Structure, SuiteName::Coincidence, SuiteName::Curvature];

    pub fn as_str(self) -> &'static str {
        match self {
            SuiteName::Structure => "structure",
            SuiteName::Coincidence => "coincidence",
            SuiteName::Curvature => "curvature",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SuiteSelection {
    /// `"all"` or a single suite name.
    Named(String),
    List(Vec<SuiteName>),
}

impl Default for SuiteSelection {
    fn default() -> Self {
        SuiteSelection::Named("all".into())
    }
}

impl SuiteSelection {
    pub fn resolve(&self) -> Result<Vec<SuiteName>> {
        match self {
            SuiteSelection::Named(s) if s == "all" => Ok(SuiteName::ALL.to_vec()),
            SuiteSelection::Named(s) => Ok(vec![parse_suite(s)?]),
            SuiteSelection::List(v) => {
                let mut v = v.clone();
                v.sort();
                v.dedup();
                Ok(v)
            }
        }
    }
}

fn parse_suite(s: &str) -> Result<SuiteName> {
    SuiteName::ALL
        .into_iter()
        .find(|n| n.as_str() == s)
        .ok_or_else(|| Error::Config(format!("unknown suite `{s}`")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseName {
    GenericUcc,
    Special,
}

impl From<BaseName> for BaseRigging {
    fn from(b: BaseName) -> Self {
        match b {
            BaseName::GenericUcc => BaseRigging::GenericUcc,
            BaseName::Special => BaseRigging::Special,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiggingConfig {
    GenericUcc,
    Special,
    Scaled { phi: String, base: BaseName },
}

impl RiggingConfig {
    pub fn build(&self) -> Result<RiggingSpec> {
        match self {
            RiggingConfig::GenericUcc => Ok(RiggingSpec::GenericUcc),
            RiggingConfig::Special => Ok(RiggingSpec::Special),
            RiggingConfig::Scaled { phi, base } => RiggingSpec::scaled(Expression::parse_x0(phi)?, (*base).into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

fn default_points() -> usize {
    50
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub q: usize,
    #[serde(rename = "F")]
    pub f: String,
    #[serde(default)]
    pub exclude: Vec<Exclusion>,
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoxConfig>,
    pub rigging: RiggingConfig,
    pub alpha: String,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub seed: u64,
    /// Per-check overrides, keyed by check id.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default = "default_tol_scale")]
    pub tol_scale: f64,
    #[serde(default)]
    pub suite: SuiteSelection,
    /// Output locations are not part of the run and not hashed.
    #[serde(default)]
    pub outputs: OutputConfig,
}

fn default_tol_scale() -> f64 {
    1.0
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    /// SHA-256 of the canonical JSON of everything that affects the result.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.outputs = OutputConfig::default();
        let text = serde_json::to_string(&canonical).expect("config serialises");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn chart(&self) -> Result<SurfaceChart> {
        if self.n < 2 {
            return Err(Error::Config(format!("n = {} but at least 2 is required", self.n)));
        }
        if self.q == 0 {
            return Err(Error::Config("q = 0: a null Monge graph needs q >= 1".into()));
        }
        if self.q > self.n + 1 {
            return Err(Error::Config(format!("q = {} exceeds n + 1 = {}", self.q, self.n + 1)));
        }
        let mut chart = SurfaceChart::parse(self.n, self.q, &self.f)?.with_exclusions(self.exclude.clone());
        if let Some(b) = &self.bounds {
            chart = chart.with_box(b.lower.clone(), b.upper.clone())?;
        }
        Ok(chart)
    }

    /// Validates everything that can be checked before sampling.
    pub fn validate(&self) -> Result<(SurfaceChart, RiggingSpec, Expression, Vec<SuiteName>)> {
        let chart = self.chart()?;
        let spec = self.rigging.build()?;
        let alpha = Expression::parse_x0(&self.alpha)?;
        if !(self.tol_scale > 0.0) {
            return Err(Error::Config("tol_scale must be positive".into()));
        }
        for (id, t) in &self.tolerances {
            if !(*t >= 0.0) {
                return Err(Error::Config(format!("tolerance for `{id}` must be non-negative")));
            }
        }
        let suites = self.suite.resolve()?;
        let all: Vec<&str> = SuiteName::ALL.iter().flat_map(|s| checks(*s)).map(|c| c.id).collect();
        for id in self.tolerances.keys() {
            if !all.contains(&id.as_str()) {
                return Err(Error::Config(format!("tolerance given for unknown check `{id}`")));
            }
        }
        Ok((chart, spec, alpha, suites))
    }
}

/// Outcome of one check at one point.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Value(f64),
    Skipped(String),
    Failed(String),
}

struct Ctx<'a> {
    chart: &'a SurfaceChart,
    spec: &'a RiggingSpec,
    alpha: &'a AlphaField,
    q: usize,
}

type Eval = fn(&Ctx<'_>, &[f64]) -> Result<f64>;

struct CheckDef {
    id: &'static str,
    formula: &'static str,
    tol: f64,
    eval: Eval,
}

fn phi_check(ctx: &Ctx<'_>, p: &[f64], phi: &str) -> Result<f64> {
    rescaled_coincidence(ctx.chart, ctx.spec, &Expression::parse_x0(phi)?, ctx.alpha, p)
}

fn checks(suite: SuiteName) -> Vec<CheckDef> {
    match suite {
        SuiteName::Structure => vec![
            CheckDef {
                id: "null_residual",
                formula: "|eps^a F_a^2 - 1|",
                tol: 1e-10,
                eval: |c, p| null_residual(c.chart, p),
            },
            CheckDef {
                id: "gradient_identity",
                formula: "eps^a F_a F_ab = 0",
                tol: 1e-10,
                eval: |c, p| gradient_identity_residual(c.chart, p),
            },
            CheckDef {
                id: "xi_n_pairing",
                formula: "g(xi, N) = 1",
                tol: 1e-10,
                eval: |c, p| Ok(normalization_defects(c.chart, &build_rigged_point(c.chart, c.spec, p)?)?.xi_n),
            },
            CheckDef {
                id: "n_null",
                formula: "g(N, N) = 0",
                tol: 1e-10,
                eval: |c, p| Ok(normalization_defects(c.chart, &build_rigged_point(c.chart, c.spec, p)?)?.n_n),
            },
            CheckDef {
                id: "eta_xi",
                formula: "eta(xi) = 1",
                tol: 1e-10,
                eval: |c, p| Ok(normalization_defects(c.chart, &build_rigged_point(c.chart, c.spec, p)?)?.eta_xi),
            },
            CheckDef {
                id: "screen_orthonormal",
                formula: "g(E_k, E_l) = eps_k delta_kl, eta(E_k) = 0",
                tol: 1e-10,
                eval: |c, p| {
                    let d = normalization_defects(c.chart, &build_rigged_point(c.chart, c.spec, p)?)?;
                    Ok(d.screen_orthonormal.max(d.eta_screen).max(d.screen_n))
                },
            },
            CheckDef {
                id: "weingarten_symmetry",
                formula: "g(A_N X, Y) - g(X, A_N Y) = tau(X)eta(Y) - tau(Y)eta(X) - d eta(X, Y)",
                tol: 1e-9,
                eval: |c, p| {
                    let forms = fundamental_forms(c.chart, c.spec, p)?;
                    let n = p.len();
                    let e = |a: usize| (0..n).map(|i| if i == a { 1.0 } else { 0.0 }).collect::<Vec<f64>>();
                    let mut m = 0.0_f64;
                    for a in 0..n {
                        for b in 0..n {
                            m = m.max(weingarten_symmetry_defect(&forms, &e(a), &e(b)));
                        }
                    }
                    Ok(m)
                },
            },
            CheckDef {
                id: "index_law",
                formula: "nu_alpha = q - (1 + sign(alpha)) / 2",
                tol: 0.0,
                eval: |c, p| {
                    let m = g_alpha_at(c.chart, c.spec, c.alpha, p)?;
                    let expected = if c.alpha.sign() > 0.0 { c.q - 1 } else { c.q };
                    Ok((m.index as f64 - expected as f64).abs())
                },
            },
            CheckDef {
                id: "gauss_map_norm",
                formula: "g_alpha(delta_alpha, delta_alpha) = -sign(alpha)",
                tol: 1e-10,
                eval: |c, p| {
                    let rp = build_rigged_point(c.chart, c.spec, p)?;
                    let delta = gauss_map(&rp, c.alpha)?;
                    let a = c.alpha.value(rp.position[0])?;
                    let gbar = twisted_metric(rp.position.as_slice(), &rp.rigging, a, &rp.sig)?;
                    let d = nalgebra::DVector::from_column_slice(delta.as_slice());
                    Ok(((d.transpose() * &gbar * &d)[0] + c.alpha.sign()).abs())
                },
            },
            CheckDef {
                id: "gauss_map_orthogonal",
                formula: "g_alpha(delta_alpha, X) = 0",
                tol: 1e-10,
                eval: |c, p| {
                    let rp = build_rigged_point(c.chart, c.spec, p)?;
                    let delta = gauss_map(&rp, c.alpha)?;
                    let a = c.alpha.value(rp.position[0])?;
                    let gbar = twisted_metric(rp.position.as_slice(), &rp.rigging, a, &rp.sig)?;
                    let d = nalgebra::DVector::from_column_slice(delta.as_slice());
                    let mut m = 0.0_f64;
                    for t in &rp.tangent {
                        let t = nalgebra::DVector::from_column_slice(t.as_slice());
                        m = m.max((d.transpose() * &gbar * t)[0].abs());
                    }
                    Ok(m)
                },
            },
            CheckDef {
                id: "lie_xi_g_alpha",
                formula: "L_xi g_alpha = -2B + d alpha(xi) eta (x) eta",
                tol: 1e-7,
                eval: |c, p| Ok(lie_xi_g_alpha(c.chart, c.spec, c.alpha, p)?.residual()),
            },
            CheckDef {
                id: "div_xi_printed",
                formula: "div_{g_alpha} xi = d alpha(xi) / (2|alpha|) - n H*",
                tol: 1e-7,
                eval: |c, p| {
                    let d = div_g_alpha_xi(c.chart, c.spec, c.alpha, p)?;
                    Ok((d.computed - d.abs_alpha_form).abs())
                },
            },
            CheckDef {
                id: "div_xi_signed",
                formula: "div_{g_alpha} xi = d alpha(xi) / (2 alpha) - n H*",
                tol: 1e-7,
                eval: |c, p| {
                    let d = div_g_alpha_xi(c.chart, c.spec, c.alpha, p)?;
                    Ok((d.computed - d.signed_alpha_form).abs())
                },
            },
        ],
        SuiteName::Coincidence => vec![
            CheckDef {
                id: "coincidence",
                formula: "2B(X,Y) - 2 alpha C(X,PY) + 2 alpha tau(X)eta(Y) + eta(X)eta(Y) d alpha(xi) = 0",
                tol: 1e-9,
                eval: |c, p| coincidence_residual(c.chart, c.spec, c.alpha, p),
            },
            CheckDef {
                id: "shape_operators_proportional",
                formula: "A*_xi = alpha A_N",
                tol: 1e-9,
                eval: |c, p| Ok(coincidence_conditions(c.chart, c.spec, c.alpha, p)?.0),
            },
            CheckDef {
                id: "rotation_condition",
                formula: "2 alpha tau(xi) + d alpha(xi) = 0",
                tol: 1e-8,
                eval: |c, p| Ok(coincidence_conditions(c.chart, c.spec, c.alpha, p)?.1),
            },
            CheckDef {
                id: "christoffel_coincidence",
                formula: "nabla = nabla^alpha (Levi-Civita of g_alpha)",
                tol: 1e-8,
                eval: |c, p| christoffel_mismatch(c.chart, c.spec, c.alpha, p),
            },
            CheckDef {
                id: "induced_metricity",
                formula: "nabla g_alpha = 0",
                tol: 1e-7,
                eval: |c, p| {
                    let local = LocalGeometry::new(c.chart, c.spec, p)?;
                    let a = c.alpha.on_chart(&local.f, p)?;
                    Ok(metricity_defect(&local.gamma.values(), &g_alpha_jets(&local, &a)))
                },
            },
            CheckDef {
                id: "connection_relation",
                formula: "nabla^alpha_X Y = nabla_X Y - eta(X)eta(Y) d alpha^# / 2 + [2B - 2 alpha C(X,PY) + 2 alpha tau(X)eta(Y) + d alpha(X)eta(Y) + d alpha(Y)eta(X)] xi / (2 alpha)",
                tol: 1e-7,
                eval: |c, p| connection_relation_residual(c.chart, c.spec, c.alpha, p),
            },
            CheckDef {
                id: "shape_operator_delta",
                formula: "A_delta = (s/sqrt|alpha|)[alpha A_N - A*_xi - tau xi - (d alpha / 2 alpha) xi - (eta / 2 sqrt|alpha|)(sqrt|alpha| d alpha^# + d alpha(delta) xi)]",
                tol: 1e-8,
                eval: |c, p| {
                    let closed = shape_operator_delta(c.chart, c.spec, c.alpha, p)?;
                    let (conn, normal) = shape_operator_delta_connection(
                        c.chart,
                        c.spec,
                        c.alpha,
                        p,
                        SpecialExtension::Symmetric,
                        AmbientConnection::Jets,
                    )?;
                    Ok((closed - conn).abs().max().max(normal))
                },
            },
            CheckDef {
                id: "rescaled_coincidence_x0",
                formula: "(phi N, alpha / phi^2) with phi = x0",
                tol: 1e-8,
                eval: |c, p| phi_check(c, p, "x0"),
            },
            CheckDef {
                id: "rescaled_coincidence_2",
                formula: "(phi N, alpha / phi^2) with phi = 2",
                tol: 1e-8,
                eval: |c, p| phi_check(c, p, "2"),
            },
            CheckDef {
                id: "rescaled_coincidence_x0_sq",
                formula: "(phi N, alpha / phi^2) with phi = x0*x0",
                tol: 1e-8,
                eval: |c, p| phi_check(c, p, "x0*x0"),
            },
        ],
        SuiteName::Curvature => vec![
            CheckDef {
                id: "curvature_relation",
                formula: "R_alpha(X,Y)Z = R(X,Y)Z - K(Y,Z) A*X + K(X,Z) A*Y + d tau(X,Y)eta(Z) xi + {nabla B, nabla C, tau, d alpha(xi) brace} xi",
                tol: 1e-6,
                eval: |c, p| curvature_relation_max(c.chart, c.spec, c.alpha, p),
            },
            CheckDef {
                id: "curvature_relation_rederived",
                formula: "R_alpha = R - K(Y,Z) A*X + K(X,Z) A*Y + [(nabla_X K)(Y,Z) - (nabla_Y K)(X,Z) + (d alpha(xi)/2 alpha)(eta(X)K(Y,Z) - eta(Y)K(X,Z))] xi",
                tol: 1e-6,
                eval: |c, p| curvature_relation_rederived_max(c.chart, c.spec, c.alpha, p),
            },
            CheckDef {
                id: "gauss_codazzi_screen",
                formula: "g(R(X,Y)Z, PT) + B(X,Z)C(Y,PT) - B(Y,Z)C(X,PT) = 0",
                tol: 1e-6,
                eval: |c, p| Ok(gauss_codazzi_residuals(c.chart, c.spec, p)?[0]),
            },
            CheckDef {
                id: "gauss_codazzi_normal",
                formula: "g(R(X,Y)Z, N) = 0",
                tol: 1e-6,
                eval: |c, p| Ok(gauss_codazzi_residuals(c.chart, c.spec, p)?[1]),
            },
            CheckDef {
                id: "codazzi_c",
                formula: "(nabla_X C)(Y,PZ) - (nabla_Y C)(X,PZ) + C(X,PZ)tau(Y) - C(Y,PZ)tau(X) = 0",
                tol: 1e-6,
                eval: |c, p| Ok(gauss_codazzi_residuals(c.chart, c.spec, p)?[2]),
            },
            CheckDef {
                id: "codazzi_b",
                formula: "(nabla_X B)(Y,Z) - (nabla_Y B)(X,Z) + B(Y,Z)tau(X) - B(X,Z)tau(Y) = 0",
                tol: 1e-6,
                eval: |c, p| Ok(gauss_codazzi_residuals(c.chart, c.spec, p)?[3]),
            },
            CheckDef {
                id: "codazzi_tau",
                formula: "C(Y, A*X) - C(X, A*Y) - d tau(X,Y) = 0",
                tol: 1e-6,
                eval: |c, p| Ok(gauss_codazzi_residuals(c.chart, c.spec, p)?[4]),
            },
            CheckDef {
                id: "ricci_screen",
                formula: "Ric_alpha(X,Y) = -C(xi,Y)tau(X) + g(A*X,A*Y)/alpha - g(A*X,A_N Y) - g(A_N X,A*Y) + nB(H - H*/alpha) + nC H* - [2B/alpha - C]tau(xi) - d alpha(xi)[2B + alpha C]/(2 alpha^2)",
                tol: 1e-7,
                eval: |c, p| Ok(ricci_relation_residuals(c.chart, c.spec, c.alpha, p)?[0]),
            },
            CheckDef {
                id: "ricci_xi_xi",
                formula: "Ric_alpha(xi,xi) = -n[tau(xi) + d alpha(xi)/(2 alpha)]H*",
                tol: 1e-7,
                eval: |c, p| Ok(ricci_relation_residuals(c.chart, c.spec, c.alpha, p)?[1]),
            },
            CheckDef {
                id: "ricci_xi_screen",
                formula: "Ric_alpha(xi,X) = d tau(xi,X) + n g(A_N xi, X)H*",
                tol: 1e-7,
                eval: |c, p| Ok(ricci_relation_residuals(c.chart, c.spec, c.alpha, p)?[2]),
            },
            CheckDef {
                id: "ricci_screen_rederived",
                formula: "Ric_alpha(X,Y) = g(A*X,A*Y)/alpha - g(A*X,A_N Y) - g(A_N X,A*Y) + nB(H - H*/alpha) + nC H* - (B/alpha)[tau(xi) + d alpha(xi)/(2 alpha)]",
                tol: 1e-7,
                eval: |c, p| Ok(rederived_ricci_scalar_residuals(c.chart, c.spec, c.alpha, p)?[0]),
            },
            CheckDef {
                id: "sectional_xi_screen",
                formula: "K_alpha(xi, X) = [tau(xi) + d alpha(xi)/(2 alpha)]B(X,X) / (alpha g(X,X))",
                tol: 1e-6,
                eval: |c, p| Ok(sectional_relation_residuals(c.chart, c.spec, c.alpha, p)?.0),
            },
            CheckDef {
                id: "sectional_screen",
                formula: "K_alpha(X,Y) = [B(X,X)B(Y,Y) - B(X,Y)^2]/(alpha g(X,X)g(Y,Y)) + [2B(X,Y)C(X,Y) - B(X,X)C(Y,Y) - B(Y,Y)C(X,X)]/(g(X,X)g(Y,Y))",
                tol: 1e-6,
                eval: |c, p| {
                    sectional_relation_residuals(c.chart, c.spec, c.alpha, p)?
                        .1
                        .ok_or_else(|| Error::Config("needs two orthogonal screen vectors (n >= 3)".into()))
                },
            },
            CheckDef {
                id: "scalar_relation",
                formula: "s_alpha = -2 tr(A* A_N) + tr(A*^2)/alpha + n^2(2H - H*/alpha)H* - tau(A_N xi) + n(H - 3H*/alpha)tau(xi) - n d alpha(xi)(H + 3H*)/(2 alpha^2)",
                tol: 1e-6,
                eval: |c, p| scalar_relation_residual(c.chart, c.spec, c.alpha, p),
            },
            CheckDef {
                id: "scalar_relation_rederived",
                formula: "s_alpha = -2 tr(A* A_N) + tr(A*^2)/alpha + n^2(2H - H*/alpha)H* - (2n H*/alpha)[tau(xi) + d alpha(xi)/(2 alpha)]",
                tol: 1e-6,
                eval: |c, p| Ok(rederived_ricci_scalar_residuals(c.chart, c.spec, c.alpha, p)?[1]),
            },
            CheckDef {
                id: "bianchi_alpha",
                formula: "R_alpha(X,Y)Z + R_alpha(Y,Z)X + R_alpha(Z,X)Y = 0, R_alpha(X,Y) = -R_alpha(Y,X)",
                tol: 1e-8,
                eval: |c, p| {
                    let local = LocalGeometry::new(c.chart, c.spec, p)?;
                    let a = c.alpha.on_chart(&local.f, p)?;
                    let r = riemann(&levi_civita(&g_alpha_jets(&local, &a), p)?);
                    Ok(r.bianchi_defect().max(r.antisymmetry_defect()))
                },
            },
        ],
    }
}

fn classify(e: Error) -> Outcome {
    match e {
        Error::DegeneratePlane { .. } => Outcome::Skipped("degenerate_plane".into()),
        Error::RiggingUndefined { .. } => Outcome::Skipped("rigging_undefined".into()),
        Error::Config(m) if m.contains("n >= 3") => Outcome::Skipped("needs_n_ge_3".into()),
        other => Outcome::Failed(other.kind().into()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub id: String,
    pub paper_ref: String,
    pub max_residual: Option<f64>,
    pub mean_residual: Option<f64>,
    pub tol: f64,
    pub pass: bool,
    pub skipped: usize,
    pub skip_reasons: BTreeMap<String, usize>,
    pub errors: BTreeMap<String, usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub checks: Vec<CheckReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointRow {
    pub point: usize,
    pub u: Vec<f64>,
    pub suite: String,
    pub check: String,
    pub outcome: Outcome,
}

impl Serialize for Outcome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Outcome::Value(v) => s.serialize_f64(*v),
            Outcome::Skipped(r) => s.serialize_str(&format!("skipped:{r}")),
            Outcome::Failed(r) => s.serialize_str(&format!("error:{r}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub config_hash: String,
    pub seed: u64,
    pub points: usize,
    pub suites: Vec<SuiteReport>,
    #[serde(skip)]
    pub rows: Vec<PointRow>,
}

impl Report {
    /// Every non-skipped check passes.
    pub fn all_pass(&self) -> bool {
        self.suites.iter().flat_map(|s| &s.checks).all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }

    pub fn to_csv(&self) -> String {
        let n = self.rows.first().map_or(0, |r| r.u.len());
        let mut out = String::from("point");
        for a in 0..n {
            out.push_str(&format!(",u{}", a + 1));
        }
        out.push_str(",suite,check,residual,status\n");
        for r in &self.rows {
            out.push_str(&r.point.to_string());
            for u in &r.u {
                out.push_str(&format!(",{u:e}"));
            }
            let (residual, status) = match &r.outcome {
                Outcome::Value(v) => (format!("{v:e}"), "ok".to_string()),
                Outcome::Skipped(s) => (String::new(), format!("skipped:{s}")),
                Outcome::Failed(s) => (String::new(), format!("error:{s}")),
            };
            out.push_str(&format!(",{},{},{residual},{status}\n", r.suite, r.check));
        }
        out
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Writes the JSON and CSV files named in the config.
pub fn emit(report: &Report, outputs: &OutputConfig) -> Result<()> {
    if let Some(p) = &outputs.json {
        write_file(p, &report.to_json())?;
    }
    if let Some(p) = &outputs.csv {
        write_file(p, &report.to_csv())?;
    }
    Ok(())
}

/// Samples the chart, fixes the sign of alpha over the sample and runs the
/// selected suites. The result depends only on the config.
pub fn run(config: &RunConfig) -> Result<Report> {
    let (chart, spec, alpha_expr, suites) = config.validate()?;
    let samples = sample(&chart, config.points, config.seed, &[])?;
    let points: Vec<Vec<f64>> = samples.points.iter().map(|s| s.p.clone()).collect();

    let x0s: Vec<f64> = samples.points.iter().map(|s| s.f.value()).collect();
    let alpha = match x0s.first() {
        Some(&x0) => AlphaField::with_sign_at(alpha_expr, x0)?,
        None => AlphaField::new(alpha_expr, 1.0)?,
    };
    for (p, &x0) in points.iter().zip(&x0s) {
        let v = alpha.value(x0)?;
        if !(v * alpha.sign() > 0.0) {
            return Err(Error::Config(format!(
                "alpha changes sign over the sample: alpha = {v:e} at {p:?}"
            )));
        }
    }

    let ctx = Ctx {
        chart: &chart,
        spec: &spec,
        alpha: &alpha,
        q: config.q,
    };
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for suite in suites {
        let defs = checks(suite);
        let outcomes: Vec<Vec<Outcome>> = points
            .par_iter()
            .map(|p| {
                defs.iter()
                    .map(|d| match (d.eval)(&ctx, p) {
                        Ok(v) if v.is_finite() => Outcome::Value(v),
                        Ok(_) => Outcome::Failed("non_finite".into()),
                        Err(e) => classify(e),
                    })
                    .collect()
            })
            .collect();
        let mut checks_out = Vec::with_capacity(defs.len());
        for (k, d) in defs.iter().enumerate() {
            let tol = config.tolerances.get(d.id).copied().unwrap_or(d.tol) * config.tol_scale;
            let mut max: Option<f64> = None;
            let mut sum = 0.0;
            let mut count = 0usize;
            let mut skip_reasons = BTreeMap::new();
            let mut errors = BTreeMap::new();
            for o in outcomes.iter().map(|row| &row[k]) {
                match o {
                    Outcome::Value(v) => {
                        max = Some(max.map_or(*v, |m: f64| m.max(*v)));
                        sum += v;
                        count += 1;
                    }
                    Outcome::Skipped(r) => *skip_reasons.entry(r.clone()).or_insert(0) += 1,
                    Outcome::Failed(r) => *errors.entry(r.clone()).or_insert(0) += 1,
                }
            }
            let pass = errors.is_empty() && max.map_or(true, |m| m <= tol);
            checks_out.push(CheckReport {
                id: d.id.into(),
                paper_ref: d.formula.into(),
                max_residual: max,
                mean_residual: (count > 0).then(|| sum / count as f64),
                tol,
                pass,
                skipped: skip_reasons.values().sum(),
                skip_reasons,
                errors,
            });
        }
        for (i, (p, row)) in points.iter().zip(&outcomes).enumerate() {
            for (d, o) in defs.iter().zip(row) {
                rows.push(PointRow {
                    point: i,
                    u: p.clone(),
                    suite: suite.as_str().into(),
                    check: d.id.into(),
                    outcome: o.clone(),
                });
            }
        }
        reports.push(SuiteReport {
            name: suite.as_str().into(),
            checks: checks_out,
        });
    }
    Ok(Report {
        config_hash: config.hash(),
        seed: config.seed,
        points: points.len(),
        suites: reports,
        rows,
    })
}

/// Check ids of a suite, in report order.
pub fn check_ids(suite: SuiteName) -> Vec<&'static str> {
    checks(suite).iter().map(|c| c.id).collect()
}

#[derive(Parser, Debug)]
#[command(name = "nullrig", version, about = "Numerical checks for rigged null hypersurfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run verification suites described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// all, structure, coincidence or curvature.
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "tol-scale")]
        tol_scale: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("NULLRIG_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Config(format!("NULLRIG_THREADS = `{v}` is not a positive integer")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::Config(e.to_string()))
}

fn execute(cli: Cli) -> Result<bool> {
    let Command::Run {
        config,
        suite,
        points,
        seed,
        tol_scale,
        out,
        csv,
    } = cli.command;
    let mut cfg = RunConfig::load(&config)?;
    if let Some(s) = suite {
        cfg.suite = SuiteSelection::Named(s);
    }
    if let Some(n) = points {
        cfg.points = n;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = tol_scale {
        cfg.tol_scale = t;
    }
    if out.is_some() {
        cfg.outputs.json = out;
    }
    if csv.is_some() {
        cfg.outputs.csv = csv;
    }
    let report = thread_pool()?.install(|| run(&cfg))?;
    if cfg.outputs.json.is_none() {
        print!("{}", report.to_json());
    }
    emit(&report, &cfg.outputs)?;
    for s in &report.suites {
        for c in &s.checks {
            if !c.pass {
                eprintln!("FAIL {}/{}: max residual {:?} > tol {:e}, errors {:?}", s.name, c.id, c.max_residual, c.tol, c.errors);
            }
        }
    }
    Ok(report.all_pass())
}

/// Exit status: 0 when every check passes, 1 when some check fails, 2 on
/// configuration or runtime errors.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("nullrig: {} error: {e}", e.kind());
            2
        }
    }
}

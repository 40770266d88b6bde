//! Acceptance criteria 1-10. Each test prints one line per checked quantity
//! and fails if any line fails.

use std::process::Command;

use nalgebra::{DMatrix, DVector};
use nullrig::ambient::{twisted_metric, AffineVectorField, AmbientVector, ConstantScalarField, Signature, TwistedMetricField};
use nullrig::assoc_metric::{
    christoffel_mismatch, coincidence_conditions, coincidence_residual, g_alpha_at, gauss_map, rescaled_coincidence,
    shape_operator_delta, AlphaField, AssocMetric,
};
use nullrig::curvature::{
    christoffels, curvature_relation_max, curvature_relation_rederived_max, gauss_codazzi_residuals,
    induced_divergence, rederived_ricci_scalar_residuals, ricci_relation_residuals, scalar_relation,
    scalar_relation_residual, sectional_relation_residuals,
};
use nullrig::jet_algebra::{evaluate_jet, Expression};
use nullrig::monge_chart::{gradient_identity_residual, null_residual, sample, SurfaceChart};
use nullrig::oracle_fd::{fd_christoffels, fd_gradient, fd_hessian, fd_third, relative_error, FdConfig};
use nullrig::rigged_geometry::{
    build_rigged_point, div_g_alpha_xi, fundamental_forms, lie_xi_g_alpha, normalization_defects,
    weingarten_symmetry_defect, RiggingSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Criterion {
    id: u32,
    ok: bool,
}

impl Criterion {
    fn new(id: u32) -> Self {
        Self { id, ok: true }
    }

    /// `value <= tol`.
    fn below(&mut self, name: &str, value: f64, tol: f64) {
        let pass = value <= tol;
        self.record(name, pass, &format!("{value:.3e} <= {tol:e}"));
    }

    /// `value > bound`.
    fn above(&mut self, name: &str, value: f64, bound: f64) {
        let pass = value > bound;
        self.record(name, pass, &format!("{value:.3e} > {bound:e}"));
    }

    fn record(&mut self, name: &str, pass: bool, detail: &str) {
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {} {name}: {detail}", self.id);
        self.ok &= pass;
    }

    fn info(&self, name: &str, detail: &str) {
        println!("[INFO] criterion {} {name}: {detail}", self.id);
    }

    fn finish(self) {
        assert!(self.ok, "criterion {} has failing lines", self.id);
    }
}

fn points(chart: &SurfaceChart, count: usize, seed: u64) -> Vec<Vec<f64>> {
    sample(chart, count, seed, &[]).unwrap().points.into_iter().map(|s| s.p).collect()
}

fn max_over(ps: &[Vec<f64>], f: impl Fn(&[f64]) -> f64) -> f64 {
    ps.iter().map(|p| f(p)).fold(0.0, f64::max)
}

fn mat_max(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

fn special_alpha() -> AlphaField {
    AlphaField::parse("2*x0^2", 1.0).unwrap()
}

fn one() -> AlphaField {
    AlphaField::constant(1.0).unwrap()
}

#[test]
fn criterion_01_null_structure() {
    let mut c = Criterion::new(1);
    let chart = SurfaceChart::light_cone(2).unwrap();
    let ps = points(&chart, 50, 1);
    for spec in [RiggingSpec::GenericUcc, RiggingSpec::Special] {
        let label = spec.label();
        let d: Vec<_> = ps
            .iter()
            .map(|p| normalization_defects(&chart, &build_rigged_point(&chart, &spec, p).unwrap()).unwrap())
            .collect();
        let m = |f: fn(&nullrig::rigged_geometry::NormalizationDefects) -> f64| d.iter().map(f).fold(0.0, f64::max);
        c.below(&format!("{label} g(xi,N) - 1"), m(|d| d.xi_n), 1e-10);
        c.below(&format!("{label} g(N,N)"), m(|d| d.n_n), 1e-10);
        c.below(&format!("{label} eta(xi) - 1"), m(|d| d.eta_xi), 1e-10);
        c.below(
            &format!("{label} screen orthogonality"),
            m(|d| d.screen_orthonormal.max(d.eta_screen).max(d.screen_n)),
            1e-10,
        );
    }
    c.below("null_residual", max_over(&ps, |p| null_residual(&chart, p).unwrap()), 1e-10);
    c.below(
        "gradient_identity_residual",
        max_over(&ps, |p| gradient_identity_residual(&chart, p).unwrap()),
        1e-10,
    );
    c.finish();
}

/// `sum_i c_i u^(e_i)` with small random integer exponents.
fn random_polynomial(rng: &mut ChaCha8Rng, n: usize) -> String {
    let terms: Vec<String> = (0..4)
        .map(|_| {
            let coef: f64 = rng.gen_range(-2.0..2.0);
            let mono: Vec<String> = (0..n).map(|a| format!("u{}^{}", a + 1, rng.gen_range(0..3))).collect();
            format!("({coef})*{}", mono.join("*"))
        })
        .collect();
    terms.join(" + ")
}

#[test]
fn criterion_02_generic_ucc_proposition() {
    let mut c = Criterion::new(2);
    for n in [2, 3] {
        let chart = SurfaceChart::light_cone(n).unwrap();
        let spec = RiggingSpec::GenericUcc;
        let ps = points(&chart, 50, 2);
        let forms: Vec<_> = ps.iter().map(|p| fundamental_forms(&chart, &spec, p).unwrap()).collect();
        c.below(
            &format!("n={n} |tau|"),
            forms.iter().flat_map(|f| f.tau.iter()).fold(0.0, |m, t| m.max(t.abs())),
            1e-12,
        );
        c.below(
            &format!("n={n} |A_N - A*|"),
            forms.iter().map(|f| mat_max(&(&f.a_n - &f.a_star))).fold(0.0, f64::max),
            1e-10,
        );
        let df_screen = ps
            .iter()
            .zip(&forms)
            .map(|(p, f)| {
                let grad = chart.jet(p).unwrap();
                f.point
                    .screen
                    .iter()
                    .map(|e| (0..n).map(|a| grad.grad(a) * e[a]).sum::<f64>().abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        c.below(&format!("n={n} dF on screen"), df_screen, 1e-10);
        c.below(
            &format!("n={n} d eta"),
            forms.iter().map(|f| mat_max(&f.d_eta)).fold(0.0, f64::max),
            1e-12,
        );
        c.below(
            &format!("n={n} coincidence_residual(alpha=1)"),
            max_over(&ps, |p| coincidence_residual(&chart, &spec, &one(), p).unwrap()),
            1e-9,
        );

        let mut rng = ChaCha8Rng::seed_from_u64(20 + n as u64);
        let mut worst = 0.0_f64;
        for k in 0..20 {
            let field: Vec<Expression> = (0..n)
                .map(|_| Expression::parse_chart(&random_polynomial(&mut rng, n), n).unwrap())
                .collect();
            let p = &ps[k];
            let (div, plain) = induced_divergence(&chart, &spec, &field, p).unwrap();
            worst = worst.max((div - plain).abs());
        }
        c.below(&format!("n={n} div X - d_a X^a (20 polynomial fields)"), worst, 1e-8);
    }
    c.finish();
}

#[test]
fn criterion_03_totally_geodesic() {
    let mut c = Criterion::new(3);
    for n in [2, 3] {
        let chart = SurfaceChart::light_cone(n).unwrap();
        let ps = points(&chart, 50, 3);
        c.below(
            &format!("n={n} |A_delta_1|"),
            max_over(&ps, |p| mat_max(&shape_operator_delta(&chart, &RiggingSpec::GenericUcc, &one(), p).unwrap())),
            1e-9,
        );
    }
    c.finish();
}

#[test]
fn criterion_04_special_rigging() {
    let mut c = Criterion::new(4);
    let alpha = special_alpha();
    let spec = RiggingSpec::Special;
    for n in [2, 3] {
        let chart = SurfaceChart::light_cone(n).unwrap();
        let ps = points(&chart, 50, 4);
        let mut tau_eta = 0.0_f64;
        let mut metric = 0.0_f64;
        for p in &ps {
            let f = fundamental_forms(&chart, &spec, p).unwrap();
            tau_eta = tau_eta.max(f.tau.iter().zip(&f.point.eta).fold(0.0, |m, (t, e)| m.max((t - e).abs())));
            let g = g_alpha_at(&chart, &spec, &alpha, p).unwrap().g_alpha;
            let grad = chart.jet(p).unwrap();
            let expected = DMatrix::from_fn(n, n, |a, b| {
                let flat = if a == b { chart.eps(a) } else { 0.0 };
                flat + grad.grad(a) * grad.grad(b)
            });
            metric = metric.max(mat_max(&(g - expected)));
        }
        c.below(&format!("n={n} tau - eta"), tau_eta, 1e-10);
        let conds: Vec<(f64, f64)> = ps
            .iter()
            .map(|p| coincidence_conditions(&chart, &spec, &alpha, p).unwrap())
            .collect();
        c.below(
            &format!("n={n} |A* - 2 x0^2 A_N|"),
            conds.iter().map(|x| x.0).fold(0.0, f64::max),
            1e-9,
        );
        c.below(
            &format!("n={n} 2 alpha tau(xi) + d alpha(xi)"),
            conds.iter().map(|x| x.1).fold(0.0, f64::max),
            1e-8,
        );
        c.below(
            &format!("n={n} coincidence_residual"),
            max_over(&ps, |p| coincidence_residual(&chart, &spec, &alpha, p).unwrap()),
            1e-9,
        );
        c.below(&format!("n={n} g_alpha - (eps_a delta_ab + F_a F_b)"), metric, 1e-14);
    }
    let chart = SurfaceChart::light_cone(2).unwrap();
    let g = g_alpha_at(&chart, &spec, &alpha, &[1.0, 0.0]).unwrap().g_alpha;
    let anchor = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
    c.below("g_alpha at (1,0) vs [[2,0],[0,1]]", mat_max(&(g - anchor)), 1e-14);
    c.finish();
}

#[test]
fn criterion_05_connection_coincidence() {
    let mut c = Criterion::new(5);
    for n in [2, 3] {
        let chart = SurfaceChart::light_cone(n).unwrap();
        let ps = points(&chart, 50, 5);
        for (spec, alpha) in [(RiggingSpec::GenericUcc, one()), (RiggingSpec::Special, special_alpha())] {
            c.below(
                &format!("n={n} {} induced vs christoffels(g_alpha)", spec.label()),
                max_over(&ps, |p| christoffel_mismatch(&chart, &spec, &alpha, p).unwrap()),
                1e-8,
            );
        }
        let two = AlphaField::constant(2.0).unwrap();
        let spec = RiggingSpec::GenericUcc;
        let dev = max_over(&ps, |p| {
            let b = mat_max(&fundamental_forms(&chart, &spec, p).unwrap().b);
            (coincidence_residual(&chart, &spec, &two, p).unwrap() - 2.0 * b).abs()
        });
        c.below(&format!("n={n} negative control |coincidence - 2 max|B||"), dev, 1e-9);
        let least = ps
            .iter()
            .map(|p| christoffel_mismatch(&chart, &spec, &two, p).unwrap())
            .fold(f64::INFINITY, f64::min);
        c.above(&format!("n={n} negative control Christoffel mismatch (min over points)"), least, 1e-3);
    }
    c.finish();
}

#[test]
fn criterion_06_rescaling() {
    let mut c = Criterion::new(6);
    for n in [2, 3] {
        let chart = SurfaceChart::light_cone(n).unwrap();
        let ps = points(&chart, 50, 6);
        for (spec, alpha) in [(RiggingSpec::GenericUcc, one()), (RiggingSpec::Special, special_alpha())] {
            for phi in ["x0", "2", "x0*x0"] {
                let phi_e = Expression::parse_x0(phi).unwrap();
                c.below(
                    &format!("n={n} {} phi={phi}", spec.label()),
                    max_over(&ps, |p| rescaled_coincidence(&chart, &spec, &phi_e, &alpha, p).unwrap()),
                    1e-8,
                );
            }
        }
    }
    c.finish();
}

#[test]
fn criterion_07_curvature_relations() {
    let mut c = Criterion::new(7);
    for n in [2, 3] {
        let chart = SurfaceChart::light_cone(n).unwrap();
        let ps = points(&chart, 25, 7);
        for (spec, alpha) in [(RiggingSpec::GenericUcc, one()), (RiggingSpec::Special, special_alpha())] {
            let case = format!("n={n} {}", spec.label());
            c.below(
                &format!("{case} curvature relation (all index triples)"),
                max_over(&ps, |p| curvature_relation_max(&chart, &spec, &alpha, p).unwrap()),
                1e-6,
            );
            let gc: Vec<[f64; 5]> = ps.iter().map(|p| gauss_codazzi_residuals(&chart, &spec, p).unwrap()).collect();
            for k in 0..5 {
                c.below(
                    &format!("{case} Gauss-Codazzi {}", k + 1),
                    gc.iter().map(|r| r[k]).fold(0.0, f64::max),
                    1e-6,
                );
            }
            let ric: Vec<[f64; 3]> = ps
                .iter()
                .map(|p| ricci_relation_residuals(&chart, &spec, &alpha, p).unwrap())
                .collect();
            for (k, name) in ["Ric(X,Y) screen", "Ric(xi,xi)", "Ric(xi,X)"].iter().enumerate() {
                c.below(&format!("{case} {name}"), ric.iter().map(|r| r[k]).fold(0.0, f64::max), 1e-7);
            }
            let sec: Vec<(f64, Option<f64>)> = ps
                .iter()
                .map(|p| sectional_relation_residuals(&chart, &spec, &alpha, p).unwrap())
                .collect();
            c.below(
                &format!("{case} sectional K(xi,X)"),
                sec.iter().map(|s| s.0).fold(0.0, f64::max),
                1e-6,
            );
            if n >= 3 {
                c.below(
                    &format!("{case} sectional K(X,Y)"),
                    sec.iter().map(|s| s.1.unwrap()).fold(0.0, f64::max),
                    1e-6,
                );
            }
            c.below(
                &format!("{case} scalar relation"),
                max_over(&ps, |p| scalar_relation_residual(&chart, &spec, &alpha, p).unwrap()),
                1e-6,
            );
            let rederived: Vec<[f64; 2]> = ps
                .iter()
                .map(|p| rederived_ricci_scalar_residuals(&chart, &spec, &alpha, p).unwrap())
                .collect();
            let curv = max_over(&ps, |p| curvature_relation_rederived_max(&chart, &spec, &alpha, p).unwrap());
            c.info(
                &format!("{case} rederived relations"),
                &format!(
                    "curvature {curv:.3e}, Ric(X,Y) {:.3e}, scalar {:.3e}",
                    rederived.iter().map(|r| r[0]).fold(0.0, f64::max),
                    rederived.iter().map(|r| r[1]).fold(0.0, f64::max)
                ),
            );
        }
    }

    let chart = SurfaceChart::light_cone(2).unwrap();
    let spec = RiggingSpec::GenericUcc;
    let p = [1.0, 0.0];
    let f = fundamental_forms(&chart, &spec, &p).unwrap();
    let expected_h = -1.0 / (2.0 * 2.0_f64.sqrt());
    c.below("anchor H + 1/(2 sqrt 2)", (f.h - expected_h).abs(), 1e-12);
    c.below("anchor H* + 1/(2 sqrt 2)", (f.h_star - expected_h).abs(), 1e-12);
    c.below("anchor tr(A*^2) - 1/2", ((&f.a_star * &f.a_star).trace() - 0.5).abs(), 1e-12);
    let (direct, formula) = scalar_relation(&chart, &spec, &one(), &p).unwrap();
    c.below("anchor scalar formula", formula.abs(), 1e-12);
    c.below("anchor direct s_1", direct.abs(), 1e-7);
    c.below("anchor |direct - formula|", (direct - formula).abs(), 1e-7);
    c.finish();
}

#[test]
fn criterion_08_structural_lemmas() {
    let mut c = Criterion::new(8);
    let cases: Vec<(SurfaceChart, RiggingSpec, AlphaField, &str)> = vec![
        (SurfaceChart::light_cone(2).unwrap(), RiggingSpec::GenericUcc, one(), "cone2 ucc alpha=1"),
        (
            SurfaceChart::light_cone(2).unwrap(),
            RiggingSpec::GenericUcc,
            AlphaField::constant(-1.0).unwrap(),
            "cone2 ucc alpha=-1",
        ),
        (SurfaceChart::light_cone(2).unwrap(), RiggingSpec::Special, special_alpha(), "cone2 special"),
        (SurfaceChart::light_cone(3).unwrap(), RiggingSpec::Special, special_alpha(), "cone3 special"),
        (
            SurfaceChart::parse(2, 2, "sqrt(u2^2 - u1^2)").unwrap(),
            RiggingSpec::GenericUcc,
            AlphaField::constant(0.5).unwrap(),
            "q=2 ucc alpha=1/2",
        ),
        (
            SurfaceChart::parse(2, 2, "sqrt(u2^2 - u1^2)").unwrap(),
            RiggingSpec::GenericUcc,
            AlphaField::constant(-3.0).unwrap(),
            "q=2 ucc alpha=-3",
        ),
    ];
    for (chart, spec, alpha, label) in &cases {
        let q = chart.signature().index();
        let ps = points(chart, 30, 8);
        let expected = if alpha.sign() > 0.0 { q - 1 } else { q };
        let wrong = ps
            .iter()
            .filter(|p| g_alpha_at(chart, spec, alpha, p).unwrap().index != expected)
            .count();
        c.record(
            &format!("{label} index = {expected}"),
            wrong == 0,
            &format!("{wrong} of {} points differ", ps.len()),
        );
        let norm = max_over(&ps, |p| {
            let rp = build_rigged_point(chart, spec, p).unwrap();
            let d = gauss_map(&rp, alpha).unwrap();
            let a = alpha.value(rp.position.0[0]).unwrap();
            let gbar = twisted_metric(rp.position.as_slice(), &rp.rigging, a, &rp.sig).unwrap();
            let v = DVector::from_column_slice(d.as_slice());
            ((v.transpose() * gbar * &v)[0] + alpha.sign()).abs()
        });
        c.below(&format!("{label} g_alpha(delta,delta) + sign(alpha)"), norm, 1e-10);
        let weingarten = max_over(&ps, |p| {
            let f = fundamental_forms(chart, spec, p).unwrap();
            let n = p.len();
            let mut m = 0.0_f64;
            for a in 0..n {
                for b in 0..n {
                    let ea: Vec<f64> = (0..n).map(|i| f64::from(u8::from(i == a))).collect();
                    let eb: Vec<f64> = (0..n).map(|i| f64::from(u8::from(i == b))).collect();
                    m = m.max(weingarten_symmetry_defect(&f, &ea, &eb));
                }
            }
            m
        });
        c.below(&format!("{label} Weingarten symmetry"), weingarten, 1e-9);
        c.below(
            &format!("{label} Lie derivative"),
            max_over(&ps, |p| lie_xi_g_alpha(chart, spec, alpha, p).unwrap().residual()),
            1e-7,
        );
        c.below(
            &format!("{label} divergence"),
            max_over(&ps, |p| {
                let d = div_g_alpha_xi(chart, spec, alpha, p).unwrap();
                (d.computed - d.abs_alpha_form).abs()
            }),
            1e-7,
        );
    }

    // Negative alpha with d alpha(xi) != 0 separates the two coefficient forms.
    let chart = SurfaceChart::light_cone(2).unwrap();
    let alpha = AlphaField::parse("-2*x0^2", -1.0).unwrap();
    let ps = points(&chart, 30, 8);
    let divs: Vec<_> = ps
        .iter()
        .map(|p| div_g_alpha_xi(&chart, &RiggingSpec::Special, &alpha, p).unwrap())
        .collect();
    c.info(
        "special alpha=-2 x0^2 divergence",
        &format!(
            "|computed - 1/(2|alpha|) form| = {:.3e}, |computed - 1/(2 alpha) form| = {:.3e}",
            divs.iter().map(|d| (d.computed - d.abs_alpha_form).abs()).fold(0.0, f64::max),
            divs.iter().map(|d| (d.computed - d.signed_alpha_form).abs()).fold(0.0, f64::max)
        ),
    );
    c.below(
        "special alpha=-2 x0^2 divergence, 1/(2 alpha) form",
        divs.iter().map(|d| (d.computed - d.signed_alpha_form).abs()).fold(0.0, f64::max),
        1e-7,
    );
    c.finish();
}

const CATALOG: [(usize, &str); 6] = [
    (2, "sqrt(u1^2 + u2^2)"),
    (2, "u1^3*u2 - 2*u2^2 + u1"),
    (2, "sqrt(1 + u1^2 + 3*u2^4)"),
    (3, "sqrt(u1^2 + u2^2 + u3^2)"),
    (3, "u1*u2*u3 + u3^3/(1 + u1^2)"),
    (3, "(u1 + 2*u2 - u3)^2 / (2 + u2^2)"),
];

#[test]
fn criterion_09_oracle_agreement() {
    let mut c = Criterion::new(9);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut g_err, mut h_err, mut t_err) = (0.0_f64, 0.0_f64, 0.0_f64);
    let cfg = FdConfig::default();
    let mut evaluations = 0;
    while evaluations < 100 {
        let (n, text) = CATALOG[rng.gen_range(0..CATALOG.len())];
        let expr = Expression::parse_chart(text, n).unwrap();
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
        if p.iter().map(|x| x * x).sum::<f64>() < 0.25 {
            continue;
        }
        let jet = evaluate_jet(&expr, &p).unwrap();
        let f = |x: &[f64]| expr.eval(x);
        let grad = fd_gradient(&f, &p, &cfg).unwrap();
        g_err = g_err.max(relative_error(&grad, jet.gradient()));
        let hess = fd_hessian(&f, &p, &cfg).unwrap();
        let jh: Vec<f64> = (0..n * n).map(|k| jet.hess(k / n, k % n)).collect();
        let fh: Vec<f64> = (0..n * n).map(|k| hess[(k / n, k % n)]).collect();
        h_err = h_err.max(relative_error(&fh, &jh));
        let third = fd_third(&f, &p, &cfg).unwrap();
        let idx: Vec<(usize, usize, usize)> = (0..n * n * n).map(|k| (k / (n * n), (k / n) % n, k % n)).collect();
        let jt: Vec<f64> = idx.iter().map(|&(a, b, d)| jet.third(a, b, d)).collect();
        let ft: Vec<f64> = idx.iter().map(|&(a, b, d)| third.get(a, b, d)).collect();
        t_err = t_err.max(relative_error(&ft, &jt));
        evaluations += 1;
    }
    c.below("gradients (100 evaluations)", g_err, 1e-6);
    c.below("Hessians (100 evaluations)", h_err, 1e-5);
    c.below("third derivatives (100 evaluations)", t_err, 1e-3);

    let mut chr = 0.0_f64;
    for n in [2, 3] {
        let chart = SurfaceChart::light_cone(n).unwrap();
        let ps = points(&chart, 10, 9);
        for (spec, alpha) in [(RiggingSpec::GenericUcc, one()), (RiggingSpec::Special, special_alpha())] {
            let metric = AssocMetric {
                chart: &chart,
                spec: &spec,
                alpha: &alpha,
            };
            for p in &ps {
                let a = christoffels(&metric, p).unwrap();
                let b = fd_christoffels(&metric, p, &cfg).unwrap();
                chr = chr.max(relative_error(b.as_slice(), a.as_slice()));
            }
        }
    }
    let sig = Signature::new(3, 1).unwrap();
    let rig = AffineVectorField::constant(AmbientVector(vec![0.5, 0.5, 0.0]));
    let ambient = TwistedMetricField {
        rigging: &rig,
        alpha: &ConstantScalarField(3.0),
        sig: &sig,
    };
    let a = christoffels(&ambient, &[0.3, 0.1, -0.2]).unwrap();
    let b = fd_christoffels(&ambient, &[0.3, 0.1, -0.2], &cfg).unwrap();
    chr = chr.max(relative_error(b.as_slice(), a.as_slice()));
    c.below("analytic vs FD Christoffels", chr, 1e-6);

    let plain = FdConfig {
        levels: 1,
        ..FdConfig::with_step(1e-2)
    };
    let half = FdConfig {
        levels: 1,
        ..FdConfig::with_step(5e-3)
    };
    let expr = Expression::parse_chart("sqrt(1 + u1^2 + 3*u2^4)", 2).unwrap();
    let p = [0.7, -0.4];
    let exact = evaluate_jet(&expr, &p).unwrap();
    let f = |x: &[f64]| expr.eval(x);
    let e1 = relative_error(&fd_gradient(&f, &p, &plain).unwrap(), exact.gradient());
    let e2 = relative_error(&fd_gradient(&f, &p, &half).unwrap(), exact.gradient());
    c.above("gradient error ratio when halving h", e1 / e2, 3.5);
    c.finish();
}

fn nullrig(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_nullrig")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn config_path(name: &str) -> String {
    format!("{}/../../configs/{name}.json", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn criterion_10_determinism_and_cli() {
    let mut c = Criterion::new(10);
    let flagship = config_path("flagship");
    let (code_a, a) = nullrig(&["run", "--config", &flagship]);
    let (code_b, b) = nullrig(&["run", "--config", &flagship]);
    c.record("identical config and seed give identical JSON", a == b && !a.is_empty(), &format!("{} bytes", a.len()));
    c.record("flagship exits 0", code_a == 0 && code_b == 0, &format!("exit {code_a}"));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let out_s = out.to_str().unwrap();
    let (code, _) = nullrig(&["run", "--config", &flagship, "--out", out_s, "--points", "20", "--seed", "5"]);
    let mut threaded = std::process::Command::new(env!("CARGO_BIN_EXE_nullrig"));
    let single = dir.path().join("single.json");
    threaded
        .env("NULLRIG_THREADS", "1")
        .args(["run", "--config", &flagship, "--points", "20", "--seed", "5", "--out"])
        .arg(&single);
    let status = threaded.status().unwrap();
    let bytes_multi = std::fs::read(&out).unwrap();
    let bytes_single = std::fs::read(&single).unwrap();
    c.record(
        "JSON independent of worker count",
        code == 0 && status.success() && bytes_multi == bytes_single,
        &format!("exit {code}/{:?}", status.code()),
    );

    for name in ["flagship", "negative_control", "special", "cone3"] {
        let path = dir.path().join(format!("{name}.json"));
        let (code, _) = nullrig(&["run", "--config", &config_path(name), "--out", path.to_str().unwrap()]);
        let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
        let all_pass = report["suites"]
            .as_array()
            .unwrap()
            .iter()
            .flat_map(|s| s["checks"].as_array().unwrap())
            .all(|c| c["pass"].as_bool().unwrap());
        c.record(
            &format!("{name}: exit 0 iff every check passes"),
            (code == 0) == all_pass && (code == 0 || code == 1),
            &format!("exit {code}, all pass {all_pass}"),
        );
    }
    let (code, _) = nullrig(&["run", "--config", &config_path("negative_control")]);
    c.record("negative control exits nonzero", code != 0, &format!("exit {code}"));

    let bad = dir.path().join("q0.json");
    std::fs::write(
        &bad,
        r#"{"n": 2, "q": 0, "F": "sqrt(u1^2 + u2^2)", "rigging": "generic_ucc", "alpha": "1"}"#,
    )
    .unwrap();
    let (code, _) = nullrig(&["run", "--config", bad.to_str().unwrap()]);
    c.record("q = 0 is a config error", code == 2, &format!("exit {code}"));
    let non_null = dir.path().join("nonnull.json");
    std::fs::write(
        &non_null,
        r#"{"n": 2, "q": 1, "F": "u1^2", "rigging": "generic_ucc", "alpha": "1", "points": 5}"#,
    )
    .unwrap();
    let (code, _) = nullrig(&["run", "--config", non_null.to_str().unwrap()]);
    c.record("non-null surface exits nonzero", code != 0, &format!("exit {code}"));
    c.finish();
}

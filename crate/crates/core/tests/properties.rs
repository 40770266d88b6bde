//! Property tests for the invariants of the geometric pipeline.

use nalgebra::DMatrix;
use proptest::prelude::*;

use nullrig::ambient::{inner, twisted_metric, AmbientVector, Signature};
use nullrig::assoc_metric::{coincidence_residual, g_alpha_at, AlphaField, AssocMetric};
use nullrig::curvature::{induced_connection, levi_civita, metricity_defect, MetricField};
use nullrig::jet_algebra::{evaluate_jet, Expression};
use nullrig::monge_chart::{null_residual, SurfaceChart};
use nullrig::oracle_fd::{fd_gradient, relative_error, FdConfig};
use nullrig::rigged_geometry::{build_rigged_point, LocalGeometry, RiggingSpec};

/// A point of the n-dimensional light cone chart away from the vertex.
fn cone_point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    (0.3..1.8_f64, prop::collection::vec(-1.0..1.0_f64, n)).prop_filter_map("direction too short", |(r, d)| {
        let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        (norm > 0.2).then(|| d.iter().map(|x| r * x / norm).collect())
    })
}

fn dim_and_point() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (2usize..=3).prop_flat_map(|n| (Just(n), cone_point(n)))
}

fn spec_and_alpha() -> impl Strategy<Value = (RiggingSpec, AlphaField)> {
    prop_oneof![
        (0.2..3.0_f64).prop_map(|a| (RiggingSpec::GenericUcc, AlphaField::constant(a).unwrap())),
        (-3.0..-0.2_f64).prop_map(|a| (RiggingSpec::GenericUcc, AlphaField::constant(a).unwrap())),
        Just((RiggingSpec::Special, AlphaField::parse("2*x0^2", 1.0).unwrap())),
        Just((RiggingSpec::Special, AlphaField::parse("-x0", -1.0).unwrap())),
    ]
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inner_is_symmetric_and_bilinear(
        q in 0usize..=3,
        u in prop::collection::vec(-5.0..5.0_f64, 4),
        v in prop::collection::vec(-5.0..5.0_f64, 4),
        w in prop::collection::vec(-5.0..5.0_f64, 4),
        s in -3.0..3.0_f64,
    ) {
        let sig = Signature::new(4, q).unwrap();
        let (u, v, w) = (AmbientVector(u), AmbientVector(v), AmbientVector(w));
        let uv = inner(&u, &v, &sig).unwrap();
        prop_assert!((uv - inner(&v, &u, &sig).unwrap()).abs() < 1e-12);
        let lhs = inner(&(&(s * &u) + &w), &v, &sig).unwrap();
        let rhs = s * uv + inner(&w, &v, &sig).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn cone_points_are_null((_n, p) in dim_and_point()) {
        let chart = SurfaceChart::light_cone(p.len()).unwrap();
        prop_assert!(null_residual(&chart, &p).unwrap() < 1e-12);
    }

    #[test]
    fn g_alpha_is_a_rank_one_update((_n, p) in dim_and_point(), (spec, alpha) in spec_and_alpha()) {
        let chart = SurfaceChart::light_cone(p.len()).unwrap();
        let rp = build_rigged_point(&chart, &spec, &p).unwrap();
        let m = g_alpha_at(&chart, &spec, &alpha, &p).unwrap();
        let diff = &m.g_alpha - &rp.g;
        let sv = diff.singular_values();
        let mut sv: Vec<f64> = sv.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        prop_assert!(sv[1] <= 1e-10 * sv[0].max(1.0));
    }

    #[test]
    fn twisted_metric_agrees_with_flat_on_the_rigging((_n, p) in dim_and_point(), (spec, alpha) in spec_and_alpha()) {
        let chart = SurfaceChart::light_cone(p.len()).unwrap();
        let rp = build_rigged_point(&chart, &spec, &p).unwrap();
        let a = alpha.value(rp.position.0[0]).unwrap();
        let twisted = twisted_metric(rp.position.as_slice(), &rp.rigging, a, &rp.sig).unwrap();
        let flat = rp.sig.matrix();
        let nv = nalgebra::DVector::from_column_slice(rp.rigging.as_slice());
        let d = (&twisted * &nv) - (&flat * &nv);
        prop_assert!(d.amax() < 1e-10);
    }

    #[test]
    fn index_follows_the_sign_of_alpha((_n, p) in dim_and_point(), (spec, alpha) in spec_and_alpha()) {
        let chart = SurfaceChart::light_cone(p.len()).unwrap();
        let m = g_alpha_at(&chart, &spec, &alpha, &p).unwrap();
        let expected = if alpha.sign() > 0.0 { 0 } else { 1 };
        prop_assert_eq!(m.index, expected);
    }

    #[test]
    fn coincidence_implies_metricity((_n, p) in dim_and_point(), special in any::<bool>()) {
        let chart = SurfaceChart::light_cone(p.len()).unwrap();
        let (spec, alpha) = if special {
            (RiggingSpec::Special, AlphaField::parse("2*x0^2", 1.0).unwrap())
        } else {
            (RiggingSpec::GenericUcc, AlphaField::constant(1.0).unwrap())
        };
        prop_assert!(coincidence_residual(&chart, &spec, &alpha, &p).unwrap() < 1e-9);
        let local = LocalGeometry::new(&chart, &spec, &p).unwrap();
        let m = AssocMetric { chart: &chart, spec: &spec, alpha: &alpha }.metric_jets(&p).unwrap();
        prop_assert!(metricity_defect(&local.gamma.values(), &m) < 1e-9);
        let lc = levi_civita(&m, &p).unwrap().values();
        let diff: f64 = lc.as_slice().iter().zip(local.gamma.values().as_slice()).fold(0.0, |x, (a, b)| x.max((a - b).abs()));
        prop_assert!(diff < 1e-8);
    }

    #[test]
    fn induced_connection_is_torsion_free((_n, p) in dim_and_point(), (spec, _alpha) in spec_and_alpha()) {
        let chart = SurfaceChart::light_cone(p.len()).unwrap();
        prop_assert!(induced_connection(&chart, &spec, &p).unwrap().torsion() < 1e-14);
    }

    #[test]
    fn richardson_improves_on_plain_differences(
        c in prop::collection::vec(-2.0..2.0_f64, 3),
        p in prop::collection::vec(-1.0..1.0_f64, 2),
    ) {
        let text = format!("({})*u1^3*u2 + ({})*u2^4 + ({})*u1^2", c[0], c[1], c[2]);
        let expr = Expression::parse_chart(&text, 2).unwrap();
        let exact = evaluate_jet(&expr, &p).unwrap();
        let f = |x: &[f64]| expr.eval(x);
        let plain = FdConfig { levels: 1, ..FdConfig::with_step(1e-2) };
        let rich = FdConfig { levels: 2, ..FdConfig::with_step(1e-2) };
        let e1 = relative_error(&fd_gradient(&f, &p, &plain).unwrap(), exact.gradient());
        let e2 = relative_error(&fd_gradient(&f, &p, &rich).unwrap(), exact.gradient());
        prop_assert!(e2 <= e1 + 1e-12, "plain {e1:e}, extrapolated {e2:e}");
    }

    #[test]
    fn jets_of_equal_expressions_agree((_n, p) in dim_and_point()) {
        let n = p.len();
        let names: Vec<String> = (1..=n).map(|a| format!("u{a}^2")).collect();
        let sum = names.join(" + ");
        let a = evaluate_jet(&Expression::parse_chart(&format!("sqrt({sum})^2"), n).unwrap(), &p).unwrap();
        let b = evaluate_jet(&Expression::parse_chart(&sum, n).unwrap(), &p).unwrap();
        prop_assert!((&a - &b).max_abs() < 1e-12);
    }
}

#[test]
fn rank_one_update_has_the_rigging_form() {
    let chart = SurfaceChart::light_cone(2).unwrap();
    let p = [0.6, -0.9];
    let rp = build_rigged_point(&chart, &RiggingSpec::GenericUcc, &p).unwrap();
    let m = g_alpha_at(&chart, &RiggingSpec::GenericUcc, &AlphaField::constant(2.5).unwrap(), &p).unwrap();
    let eta = nalgebra::DVector::from_column_slice(&rp.eta);
    let expected = &rp.g + 2.5 * &eta * eta.transpose();
    assert!(max_abs(&(m.g_alpha - expected)) < 1e-14);
}

use conformal_forms::error::Error;
use conformal_forms::fields::{FormField, ScalarField};
use conformal_forms::grid::TorusGrid;
use conformal_forms::verification::*;

fn flat4() -> Setting {
    Setting::new(4, 8, &MetricSpec::Flat).unwrap()
}

#[test]
fn report_records_residuals() {
    let s = flat4();
    let mut rep = IdentityReport::new("probe", s.meta(1, Some(2), 7));
    rep.record("a", "x", -1e-12, 1e-10);
    rep.record("b", "x", f64::NAN, 1e-10);
    rep.record_error("c", "x", &Error::Params("boom".into()), 1e-10);
    assert!(rep.identities[0].pass && rep.identities[0].residual == 1e-12);
    assert!(!rep.identities[1].pass && rep.identities[1].residual.is_infinite());
    assert!(rep.identities[2].name.contains("boom") && !rep.identities[2].pass);
    assert!(!rep.passed());
    assert_eq!(rep.meta.grid, vec![8; 4]);
    assert_eq!(rep.meta.ell, Some(2));
}

#[test]
fn suite_report_json_schema() {
    let s = flat4();
    let mut ok = IdentityReport::new("ok", s.meta(0, None, 1));
    ok.record("a", "x", 0.0, 1.0);
    let mut bad = IdentityReport::new("bad", s.meta(0, None, 2));
    bad.record("a", "x", 2.0, 1.0);
    let r = SuiteReport::new("custom", vec![ok, bad]);
    assert_eq!((r.summary.passed, r.summary.failed), (1, 1));
    assert!(!r.passed());
    let v: serde_json::Value = serde_json::to_value(&r).unwrap();
    assert_eq!(v["suite"], "custom");
    assert_eq!(v["summary"]["passed"], 1);
    assert_eq!(v["summary"]["failed"], 1);
    let first = &v["scenarios"][0];
    assert_eq!(first["scenario"], "ok");
    for key in ["name", "anchor", "residual", "tolerance", "pass"] {
        assert!(first["identities"][0].get(key).is_some(), "{key}");
    }
    for key in ["n", "k", "ell", "metric", "grid", "seed"] {
        assert!(first["meta"].get(key).is_some(), "{key}");
    }
    let back: SuiteReport = serde_json::from_value(v).unwrap();
    assert_eq!(back.scenarios.len(), 2);
}

#[test]
fn metric_spec_roundtrip() {
    let spec = MetricSpec::Conformal { phi: dim4_phi() };
    let text = serde_json::to_string(&spec).unwrap();
    assert!(text.contains("\"type\":\"conformal\""));
    assert_eq!(serde_json::from_str::<MetricSpec>(&text).unwrap(), spec);
    assert_eq!(MetricSpec::Flat.describe(), "flat");
    assert!(spec.describe().contains("sin"));
}

#[test]
fn relative_residual_floor() {
    let g = TorusGrid::cube(4, 4).unwrap();
    let z = FormField::zeros(&g, 1);
    assert_eq!(relative(&z, &z, 0.0), 0.0);
    let a = FormField::from_scalar(&ScalarField::constant(&g, 1e-3));
    let b = FormField::zeros(&g, 0);
    assert!((relative(&a, &b, 0.0) - 1.0).abs() <= 1e-15);
    assert!((relative(&a, &b, 1.0) - 1e-3).abs() <= 1e-15);
}

#[test]
fn flat_structural_checks_pass() {
    let s = flat4();
    for k in 0..2 {
        for rep in [
            check_factorizations(&s, k, 1),
            check_annihilation(&s, k, 2),
            check_undetermined_independence(&s, k, 3),
            check_critical_agreement(&s, k, 4),
            check_flat_sequences(&s, k, 5),
            check_homothety(&s, 0.3, k, 6),
        ] {
            assert!(rep.passed(), "{}: {:?}", rep.scenario, rep.worst());
            assert!(!rep.identities.is_empty());
        }
    }
}

#[test]
fn failing_identity_is_reported() {
    let s = Setting::new(4, 8, &MetricSpec::Conformal { phi: dim4_phi() }).unwrap();
    let rep = check_reference(&s, &["L1"], 3, 0.0);
    assert!(!rep.passed());
    assert!(rep.worst().unwrap().residual > 0.0);
}

#[test]
fn unknown_suite_is_rejected() {
    assert!(matches!(run_suite("nope", 0), Err(Error::Params(_))));
    assert_eq!(SUITES, ["quick", "full", "dim4", "dim6", "covariance"]);
}

#[test]
fn tolerances_are_pinned() {
    assert_eq!(TOL_SERIES, 1e-8);
    assert_eq!(TOL_CURVED, 1e-6);
    assert_eq!(TOL_COVARIANCE, 1e-5);
    assert_eq!(TOL_EXACT, 1e-10);
}

#[test]
fn base_laplacian_on_curved_setting() {
    let s = Setting::new(4, 8, &MetricSpec::Conformal { phi: dim4_phi() }).unwrap();
    assert!(check_base_laplacian(&s, 1, 4).passed());
}

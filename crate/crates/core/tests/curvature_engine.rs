use conformal_forms::curvature::{
    compute_curvature, conformal_metric, fg_metric_series, metric_square, ricci_fd, CurvatureData,
};
use conformal_forms::exterior::Metric;
use conformal_forms::fields::{spectral_partial, ScalarField, TensorField};
use conformal_forms::grid::TorusGrid;

fn phi4(y: &[f64]) -> f64 {
    0.1 * y[0].sin() + 0.05 * y[1].cos()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn tensor_diff(a: &TensorField, b: &TensorField) -> f64 {
    max_diff(&a.data, &b.data)
}

#[test]
fn flat_metric_has_no_curvature() {
    let g = TorusGrid::cube(4, 8).unwrap();
    let c = compute_curvature(&Metric::flat(&g)).unwrap();
    for t in [&c.christoffel, &c.ricci, &c.schouten, &c.cotton, &c.bach] {
        assert!(t.max_abs() <= 1e-12);
    }
    assert!(c.riemann.max_abs() <= 1e-12 && c.weyl.max_abs() <= 1e-12 && c.scal.max_abs() <= 1e-12);
    let reference = CurvatureData::flat(&g);
    assert_eq!(reference.ricci.data, vec![0.0; reference.ricci.data.len()]);
}

#[test]
fn conformal_metric_is_consistent() {
    let g = TorusGrid::cube(4, 8).unwrap();
    let phi = ScalarField::from_fn(&g, phi4);
    let m = conformal_metric(&phi);
    let det = phi.map(|p| (4.0 * p).exp());
    assert!(max_diff(&m.sqrt_det.values, &det.values) <= 1e-12);
    for a in 0..4 {
        for b in 0..4 {
            let mut s = vec![0.0; g.len()];
            for c in 0..4 {
                let (x, y) = (m.h.comp(&[a, c]), m.h_inv.comp(&[c, b]));
                s.iter_mut().zip(x.iter().zip(y)).for_each(|(o, (u, v))| *o += u * v);
            }
            let id = if a == b { 1.0 } else { 0.0 };
            assert!(s.iter().all(|v| (v - id).abs() <= 1e-13));
        }
    }
    let zero = conformal_metric(&ScalarField::zeros(&g));
    assert_eq!(zero.h.data, Metric::flat(&g).h.data);
}

#[test]
fn weyl_vanishes_on_conformally_flat_metrics() {
    for (n, size) in [(4, 16), (6, 8)] {
        let g = TorusGrid::cube(n, size).unwrap();
        let c = compute_curvature(&conformal_metric(&ScalarField::from_fn(&g, phi4))).unwrap();
        assert!(c.weyl.max_abs() <= 1e-8 * c.riemann.max_abs(), "n={n}");
    }
}

#[test]
fn riemann_symmetries() {
    let g = TorusGrid::cube(4, 8).unwrap();
    let c = compute_curvature(&conformal_metric(&ScalarField::from_fn(&g, phi4))).unwrap();
    let scale = c.riemann.max_abs();
    for p in (0..g.len()).step_by(97) {
        for a in 0..4 {
            for b in 0..4 {
                for cc in 0..4 {
                    for d in 0..4 {
                        let r = c.riemann.value(a, b, cc, d, p);
                        assert!((r + c.riemann.value(b, a, cc, d, p)).abs() <= 1e-8 * scale);
                        assert!((r - c.riemann.value(cc, d, a, b, p)).abs() <= 1e-8 * scale);
                        let bianchi = r + c.riemann.value(a, cc, d, b, p) + c.riemann.value(a, d, b, cc, p);
                        assert!(bianchi.abs() <= 1e-8 * scale);
                    }
                }
            }
        }
    }
}

#[test]
fn ricci_against_finite_differences() {
    let g = TorusGrid::cube(4, 16).unwrap();
    let phi = |y: &[f64]| 0.1 * y[0].sin();
    let c = compute_curvature(&conformal_metric(&ScalarField::from_fn(&g, phi))).unwrap();
    let h = move |y: &[f64]| {
        let e = (2.0 * phi(y)).exp();
        (0..16).map(|i| if i % 5 == 0 { e } else { 0.0 }).collect::<Vec<_>>()
    };
    let scale = c.ricci.max_abs();
    for p in [0, 1234, 40000, g.len() - 1] {
        let fd = ricci_fd(&h, &g.point(p), 1e-2);
        for a in 0..4 {
            for b in 0..4 {
                let v = c.ricci.comp(&[a, b])[p];
                assert!((v - fd[a * 4 + b]).abs() <= 1e-6 * scale, "({a},{b}) at {p}");
            }
        }
    }
}

#[test]
fn scalar_curvature_matches_conformal_change() {
    // Scal = e^{−2φ}(2(n−1)Δ₀φ − (n−1)(n−2)|dφ|²) with Δ₀ = −Σ∂²
    let g = TorusGrid::cube(4, 16).unwrap();
    let phi = ScalarField::from_fn(&g, phi4);
    let c = compute_curvature(&conformal_metric(&phi)).unwrap();
    let expect: Vec<f64> = (0..g.len())
        .map(|p| {
            let y = g.point(p);
            let (s1, c1, s2, c2) = (y[0].sin(), y[0].cos(), y[1].sin(), y[1].cos());
            let lap = 0.1 * s1 + 0.05 * c2;
            let grad2 = (0.1 * c1).powi(2) + (0.05 * s2).powi(2);
            (-2.0 * phi.values[p]).exp() * (6.0 * lap - 6.0 * grad2)
        })
        .collect();
    assert!(max_diff(&c.scal.values, &expect) <= 1e-12);
}

#[test]
fn schouten_trace_relation() {
    let g = TorusGrid::cube(4, 8).unwrap();
    let c = compute_curvature(&conformal_metric(&ScalarField::from_fn(&g, phi4))).unwrap();
    let tr = c.schouten_trace();
    let expect = c.scal.map(|s| s / 6.0);
    assert!(max_diff(&tr.values, &expect.values) <= 1e-12);
}

#[test]
fn bach_vanishes_in_dimension_four() {
    let g = TorusGrid::cube(4, 16).unwrap();
    let c = compute_curvature(&conformal_metric(&ScalarField::from_fn(&g, phi4))).unwrap();
    assert!(c.bach.max_abs() <= 1e-7 * c.ricci.max_abs().powi(2).max(c.ricci.max_abs()));
}

#[test]
fn collar_series_coefficients() {
    let g = TorusGrid::cube(4, 16).unwrap();
    let c = compute_curvature(&conformal_metric(&ScalarField::from_fn(&g, phi4))).unwrap();
    let ms = fg_metric_series(&c).unwrap();
    assert_eq!(ms.coeffs.len(), 5);
    assert!(tensor_diff(&ms.coeffs[2], &c.schouten.scale(-1.0)) <= 1e-12);
    // the same coefficient written as −P₀/2 with P₀ = (2Ric − Scal h/(n−1))/(n−2)
    let n = 4.0;
    let mut p0 = c.ricci.scale(2.0 / (n - 2.0));
    for a in 0..4 {
        let o = p0.comp_mut(&[a, a]);
        for (v, (s, h)) in o.iter_mut().zip(c.scal.values.iter().zip(c.metric.h.comp(&[a, a]))) {
            *v -= s * h / ((n - 1.0) * (n - 2.0));
        }
    }
    assert!(tensor_diff(&ms.coeffs[2], &p0.scale(-0.5)) <= 1e-12);
    assert!(tensor_diff(&ms.coeffs[4], &metric_square(&c.metric, &c.schouten).scale(0.25)) <= 1e-8);
    assert!(ms.coeffs[1].max_abs() == 0.0 && ms.coeffs[3].max_abs() == 0.0);
}

#[test]
fn flat_series_is_constant() {
    for (n, size) in [(4, 8), (6, 4)] {
        let g = TorusGrid::cube(n, size).unwrap();
        let ms = fg_metric_series(&CurvatureData::flat(&g)).unwrap();
        assert_eq!(ms.coeffs.len(), if n == 4 { 5 } else { 7 });
        assert_eq!(ms.coeffs[0].data, Metric::flat(&g).h.data);
        assert!(ms.coeffs[1..].iter().all(|t| t.max_abs() == 0.0));
    }
}

#[test]
fn spectral_partial_agrees_with_christoffel() {
    // Γ^0_{00} = ∂₀φ for e^{2φ}δ
    let g = TorusGrid::cube(4, 16).unwrap();
    let phi = ScalarField::from_fn(&g, phi4);
    let c = compute_curvature(&conformal_metric(&phi)).unwrap();
    let d0 = spectral_partial(&phi, 0, 1).unwrap();
    assert!(max_diff(c.christoffel.comp(&[0, 0, 0]), &d0.values) <= 1e-12);
}

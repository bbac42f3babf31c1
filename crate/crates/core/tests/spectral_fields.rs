use std::f64::consts::PI;

use conformal_forms::exterior::{quadrature_inner, Metric};
use conformal_forms::fields::{random_lowfreq_form, random_trig_form, spectral_partial, FormField, ScalarField};
use conformal_forms::grid::TorusGrid;
use conformal_forms::io::{read_field, write_field, Field};
use proptest::prelude::*;

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn derivative_of_sine_is_cosine() {
    let g = TorusGrid::cube(4, 16).unwrap();
    let f = ScalarField::from_fn(&g, |y| y[0].sin());
    let df = spectral_partial(&f, 0, 1).unwrap();
    let expect = ScalarField::from_fn(&g, |y| y[0].cos());
    assert!(max_diff(&df.values, &expect.values) <= 1e-12);
}

#[test]
fn derivative_of_constant_vanishes() {
    let g = TorusGrid::cube(4, 8).unwrap();
    let f = ScalarField::constant(&g, 2.5);
    for axis in 0..4 {
        assert!(spectral_partial(&f, axis, 1).unwrap().max_abs() <= 1e-14);
    }
}

#[test]
fn second_derivative_against_finite_differences() {
    // f = sin(2y₀)cos(y₁), ∂₁² f = −f; five-point centered stencil at h = 2π/1024
    let g = TorusGrid::new(&[16, 16, 4, 4]).unwrap();
    let f = ScalarField::from_fn(&g, |y| (2.0 * y[0]).sin() * y[1].cos());
    let d2 = spectral_partial(&f, 1, 2).unwrap();
    let h = 2.0 * PI / 1024.0;
    let exact = |y: &[f64]| (2.0 * y[0]).sin() * y[1].cos();
    let mut worst: f64 = 0.0;
    for p in 0..g.len() {
        let y = g.point(p);
        let at = |s: f64| {
            let mut z = y.clone();
            z[1] += s * h;
            exact(&z)
        };
        let fd = (-at(2.0) + 16.0 * at(1.0) - 30.0 * at(0.0) + 16.0 * at(-1.0) - at(-2.0)) / (12.0 * h * h);
        worst = worst.max((d2.values[p] - fd).abs());
        assert!((d2.values[p] + exact(&y)).abs() <= 1e-12);
    }
    assert!(worst <= 1e-6, "{worst}");
}

#[test]
fn axis_out_of_range_is_rejected() {
    let g = TorusGrid::cube(4, 8).unwrap();
    let f = ScalarField::constant(&g, 1.0);
    assert!(spectral_partial(&f, 4, 1).is_err());
}

#[test]
fn non_finite_values_are_rejected() {
    let g = TorusGrid::cube(4, 4).unwrap();
    let mut v = vec![0.0; g.len()];
    v[3] = f64::NAN;
    assert!(ScalarField::from_values(&g, v).is_err());
}

#[test]
fn grid_invariants() {
    assert!(TorusGrid::new(&[8, 8, 8]).is_err());
    assert!(TorusGrid::new(&[2, 8, 8, 8]).is_err());
    assert!(TorusGrid::new(&[6, 8, 8, 8]).is_err());
    let g = TorusGrid::new(&[8, 4, 16, 8]).unwrap();
    assert_eq!(g.len(), 8 * 4 * 16 * 8);
}

#[test]
fn unit_coframe_has_volume_norm() {
    let g = TorusGrid::cube(4, 8).unwrap();
    let one = ScalarField::constant(&g, 1.0);
    let dy = FormField::monomial(&one, &[0]);
    let v = quadrature_inner(&dy, &dy, &Metric::flat(&g)).unwrap();
    assert!((v - (2.0 * PI).powi(4)).abs() <= 1e-9);
}

#[test]
fn orthogonal_modes_pair_to_zero() {
    let g = TorusGrid::cube(4, 8).unwrap();
    let a = FormField::monomial(&ScalarField::from_fn(&g, |y| y[0].sin()), &[1]);
    let b = FormField::monomial(&ScalarField::from_fn(&g, |y| y[0].cos()), &[1]);
    assert!(quadrature_inner(&a, &b, &Metric::flat(&g)).unwrap().abs() <= 1e-10);
}

#[test]
fn conformal_quadrature_matches_refined_grid() {
    let phi = |y: &[f64]| 0.1 * y[0].sin();
    let value = |size: usize| {
        let g = TorusGrid::cube(4, size).unwrap();
        let m = Metric::conformal(&ScalarField::from_fn(&g, phi));
        let w = random_trig_form(4, 1, 1, 9).sample(&g);
        quadrature_inner(&w, &w, &m).unwrap()
    };
    let coarse = value(16);
    let fine = value(32);
    assert!((coarse - fine).abs() <= 1e-10 * fine.abs(), "{coarse} vs {fine}");
}

#[test]
fn random_forms_are_deterministic() {
    let g = TorusGrid::cube(4, 8).unwrap();
    let a = random_lowfreq_form(&g, 2, 2, 0).unwrap();
    let b = random_lowfreq_form(&g, 2, 2, 0).unwrap();
    assert_eq!(a.data, b.data);
    let c = random_lowfreq_form(&g, 2, 2, 1).unwrap();
    assert_ne!(a.data, c.data);
}

#[test]
fn random_forms_respect_mode_bound() {
    let t = random_trig_form(4, 1, 2, 5);
    assert!(t.comps.iter().all(|p| p.max_mode() <= 2));
    let g = TorusGrid::cube(4, 8).unwrap();
    assert!(random_lowfreq_form(&g, 1, 3, 0).is_err());
}

#[test]
fn symbolic_and_spectral_derivatives_agree() {
    let g = TorusGrid::cube(4, 16).unwrap();
    let t = random_trig_form(4, 1, 3, 17);
    for axis in 0..4 {
        let symbolic = t.derivative(axis).sample(&g);
        let sampled = t.sample(&g);
        for c in 0..sampled.n_comps() {
            let f = ScalarField::from_values(&g, sampled.comp(c).to_vec()).unwrap();
            let d = spectral_partial(&f, axis, 1).unwrap();
            assert!(max_diff(&d.values, symbolic.comp(c)) <= 1e-12);
        }
    }
}

#[test]
fn fbin_round_trip_is_bit_exact() {
    let g = TorusGrid::cube(4, 4).unwrap();
    let w = random_lowfreq_form(&g, 2, 1, 3).unwrap();
    let mut bytes = Vec::new();
    write_field(&mut bytes, &Field::Form(w.clone())).unwrap();
    let header = std::str::from_utf8(&bytes[..bytes.iter().position(|&b| b == b'\n').unwrap()]).unwrap();
    let json: serde_json::Value = serde_json::from_str(header).unwrap();
    assert_eq!(json["format"], "FBIN1");
    assert_eq!(json["kind"], "form");
    assert_eq!(json["order"], "lex");
    match read_field(&bytes[..]).unwrap() {
        Field::Form(r) => assert_eq!(r.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), w.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>()),
        _ => panic!("wrong kind"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mixed_partials_commute(seed in 0u64..1000) {
        let g = TorusGrid::cube(4, 8).unwrap();
        let f = random_lowfreq_form(&g, 0, 2, seed).unwrap().to_scalar();
        let ab = spectral_partial(&spectral_partial(&f, 0, 1).unwrap(), 2, 1).unwrap();
        let ba = spectral_partial(&spectral_partial(&f, 2, 1).unwrap(), 0, 1).unwrap();
        prop_assert!(max_diff(&ab.values, &ba.values) <= 1e-10 * ab.max_abs().max(1.0));
    }

    #[test]
    fn quadrature_is_symmetric_and_bilinear(seed in 0u64..1000, s in -3.0f64..3.0) {
        let g = TorusGrid::cube(4, 8).unwrap();
        let m = Metric::conformal(&ScalarField::from_fn(&g, |y| 0.1 * y[1].cos()));
        let a = random_lowfreq_form(&g, 1, 1, seed).unwrap();
        let b = random_lowfreq_form(&g, 1, 1, seed + 1).unwrap();
        let c = random_lowfreq_form(&g, 1, 1, seed + 2).unwrap();
        let ab = quadrature_inner(&a, &b, &m).unwrap();
        let ba = quadrature_inner(&b, &a, &m).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.abs().max(1.0));
        let mut lin = a.scale(s);
        lin.axpy(1.0, &c);
        let lhs = quadrature_inner(&lin, &b, &m).unwrap();
        let rhs = s * ab + quadrature_inner(&c, &b, &m).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-11 * lhs.abs().max(1.0));
    }
}

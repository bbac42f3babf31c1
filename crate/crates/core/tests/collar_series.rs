use conformal_forms::curvature::{compute_curvature, conformal_metric, fg_metric_series};
use conformal_forms::exterior::{codifferential, exterior_derivative, hodge_star, j_apply, raise_first};
use conformal_forms::fields::{random_lowfreq_form, FormField, ScalarField};
use conformal_forms::grid::TorusGrid;
use conformal_forms::series::{
    apply_d, apply_delta, apply_laplacian, slice_metric, star_series, FSeries, FormPair, LogSeriesForm, MetricSeries,
    StarSeries,
};

fn curved_setting(size: usize) -> (MetricSeries, StarSeries, conformal_forms::curvature::CurvatureData) {
    let g = TorusGrid::cube(4, size).unwrap();
    let phi = ScalarField::from_fn(&g, |y| 0.1 * y[0].sin() + 0.05 * y[1].cos());
    let curv = compute_curvature(&conformal_metric(&phi)).unwrap();
    let ms = fg_metric_series(&curv).unwrap();
    let star = star_series(&ms, 4).unwrap();
    (ms, star, curv)
}

fn flat_star(g: &TorusGrid, order: usize) -> StarSeries {
    star_series(&MetricSeries::flat(g, order), order).unwrap()
}

fn pair_diff(a: &FormPair, b: &FormPair) -> f64 {
    let t = a.t.sub(&b.t).max_abs();
    let n = match (&a.n, &b.n) {
        (Some(x), Some(y)) => x.sub(y).max_abs(),
        (Some(x), None) | (None, Some(x)) => x.max_abs(),
        (None, None) => 0.0,
    };
    t.max(n)
}

fn random_series(g: &TorusGrid, k: usize, order: usize, seed: u64) -> LogSeriesForm {
    let mut s = LogSeriesForm::new(g, k, order, 0.0);
    for j in (0..=order).step_by(2) {
        let t = random_lowfreq_form(g, k, 1, seed + j as u64).unwrap();
        let n = (k > 0).then(|| random_lowfreq_form(g, k - 1, 1, seed + 50 + j as u64).unwrap());
        s.insert(j, 0, FormPair { t, n }).unwrap();
    }
    s
}

#[test]
fn flat_star_has_only_leading_term() {
    let g = TorusGrid::cube(4, 4).unwrap();
    let s = flat_star(&g, 4);
    assert!(s.is_flat());
    for k in 0..=4 {
        assert!(s.coefficient(k, 2).max_abs() == 0.0 && s.coefficient(k, 4).max_abs() == 0.0);
        let w = random_lowfreq_form(&g, k, 1, k as u64).unwrap();
        let lead = s.coefficient(k, 0).apply(&w);
        assert!(lead.sub(&conformal_forms::exterior::flat_star(&w)).max_abs() <= 1e-15);
    }
}

#[test]
fn first_star_correction_is_half_commutator() {
    let (_, star, curv) = curved_setting(8);
    // h_x = h₀ − x²P, so the correction is ½[⋆₀, J(h₀⁻¹P)] with the standard Schouten P
    let p0 = raise_first(&curv.schouten, &curv.metric);
    for k in 0..=4 {
        let w = random_lowfreq_form(star.grid(), k, 1, 10 + k as u64).unwrap();
        let got = star.coefficient(k, 2).apply(&w);
        let comm = hodge_star(&j_apply(&p0, &w), &curv.metric).sub(&j_apply(&p0, &hodge_star(&w, &curv.metric)));
        let expect = comm.scale(0.5);
        assert!(got.sub(&expect).max_abs() <= 1e-8 * expect.max_abs().max(1.0), "k={k}");
    }
}

#[test]
fn second_star_correction() {
    // x⁴ coefficient (2[J(P),[J(P),⋆₀]] − [J(2P²),⋆₀])/16 when the Bach term vanishes
    let (_, star, curv) = curved_setting(8);
    let m = &curv.metric;
    let p = raise_first(&curv.schouten, m);
    let p2 = raise_first(&conformal_forms::curvature::metric_square(m, &curv.schouten).scale(2.0), m);
    let comm = |e: &conformal_forms::fields::TensorField, w: &FormField, inner: &dyn Fn(&FormField) -> FormField| {
        j_apply(e, &inner(w)).sub(&inner(&j_apply(e, w)))
    };
    let st = |w: &FormField| hodge_star(w, m);
    for k in 0..=4 {
        let w = random_lowfreq_form(star.grid(), k, 1, 15 + k as u64).unwrap();
        let inner = |u: &FormField| comm(&p, u, &st);
        let expect = comm(&p, &w, &inner).scale(2.0).sub(&comm(&p2, &w, &st)).scale(1.0 / 16.0);
        let got = star.coefficient(k, 4).apply(&w);
        assert!(got.sub(&expect).max_abs() <= 1e-8 * expect.max_abs().max(1.0), "k={k}");
    }
}

#[test]
fn star_series_inverts() {
    let (_, star, _) = curved_setting(8);
    for k in 0..=4 {
        let w = random_lowfreq_form(star.grid(), k, 1, 20 + k as u64).unwrap();
        let mut y = FSeries::new();
        y.insert((0, 0), w.clone());
        let back = star.star_inverse(&star.star(&y, 4), 4);
        assert!(back[&(0, 0)].sub(&w).max_abs() <= 1e-10 * w.max_abs());
        for (key, c) in back.iter().filter(|(key, _)| key.0 > 0) {
            assert!(c.max_abs() <= 1e-10 * w.max_abs(), "k={k} {key:?}");
        }
    }
}

#[test]
fn star_order_is_bounded_by_metric() {
    let g = TorusGrid::cube(4, 4).unwrap();
    assert!(star_series(&MetricSeries::flat(&g, 4), 6).is_err());
}

#[test]
fn d_of_closed_constant_is_zero() {
    let g = TorusGrid::cube(4, 8).unwrap();
    let a = random_lowfreq_form(&g, 0, 1, 1).unwrap();
    let w = LogSeriesForm::single(4, 0.0, 0, 0, FormPair::tangential(exterior_derivative(&a).unwrap())).unwrap();
    assert!(apply_d(&w).unwrap().max_abs() <= 1e-12);
}

#[test]
fn d_of_normal_term() {
    let g = TorusGrid::cube(4, 8).unwrap();
    let beta = random_lowfreq_form(&g, 1, 1, 2).unwrap();
    let w = LogSeriesForm::single(4, 0.0, 2, 0, FormPair::normal(beta.clone())).unwrap();
    let dw = apply_d(&w).unwrap();
    assert_eq!(dw.degree, 3);
    let c = dw.coefficient(2, 0);
    assert!(c.t.max_abs() == 0.0);
    assert!(c.n.unwrap().sub(&exterior_derivative(&beta).unwrap()).max_abs() <= 1e-14);
    assert_eq!(dw.terms.len(), 1);
}

#[test]
fn d_squares_to_zero_on_series() {
    let g = TorusGrid::cube(4, 8).unwrap();
    for k in 0..3 {
        let mut w = random_series(&g, k, 4, 30);
        w.insert(2, 1, FormPair::tangential(random_lowfreq_form(&g, k, 1, 99).unwrap())).unwrap();
        let dd = apply_d(&apply_d(&w).unwrap()).unwrap();
        assert!(dd.max_abs() <= 1e-9 * w.max_abs(), "k={k}");
    }
}

#[test]
fn flat_delta_of_tangential_constant() {
    let g = TorusGrid::cube(4, 8).unwrap();
    let w0 = random_lowfreq_form(&g, 2, 1, 3).unwrap();
    let w = LogSeriesForm::single(4, 0.0, 0, 0, FormPair::tangential(w0.clone())).unwrap();
    let out = apply_delta(&w, &flat_star(&g, 4)).unwrap();
    let expect = codifferential(&w0, &conformal_forms::exterior::Metric::flat(&g)).unwrap();
    assert!(out.terms.iter().all(|(&(j, _), c)| j == 2 || c.max_abs() == 0.0));
    let c = out.coefficient(2, 0);
    assert!(c.t.sub(&expect).max_abs() <= 1e-12 && c.n.unwrap().max_abs() == 0.0);
}

#[test]
fn flat_delta_indicial_action() {
    let g = TorusGrid::cube(4, 4).unwrap();
    for k in 1..=4 {
        let w0 = FormField::from_data(&g, k - 1, vec![1.0; g.len() * conformal_forms::multiindex::binomial(4, k - 1)]).unwrap();
        let w = LogSeriesForm::single(4, 0.0, 0, 0, FormPair::normal(w0.clone())).unwrap();
        let out = apply_delta(&w, &flat_star(&g, 4)).unwrap();
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let expect = w0.scale(sign * (2.0 * k as f64 - 6.0));
        assert!(out.coefficient(0, 0).t.sub(&expect).max_abs() <= 1e-14, "k={k}");
    }
}

#[test]
fn delta_matches_slice_codifferential() {
    let (ms, star, _) = curved_setting(8);
    let x = 1e-2;
    let h_x = slice_metric(&ms, x).unwrap();
    for k in 1..=3 {
        let w0 = random_lowfreq_form(star.grid(), k, 1, 40 + k as u64).unwrap();
        let w = LogSeriesForm::single(4, 0.0, 0, 0, FormPair::tangential(w0.clone())).unwrap();
        let series = apply_delta(&w, &star).unwrap().evaluate(x).t;
        // g = x⁻²(dx² + h_x) gives x² δ_{h_x} on tangential forms
        let exact = codifferential(&w0, &h_x).unwrap().scale(x * x);
        assert!(series.sub(&exact).max_abs() <= 1e-6 * exact.max_abs(), "k={k}");
    }
}

#[test]
fn delta_rejects_functions_and_overlong_series() {
    let (_, star, _) = curved_setting(4);
    let g = star.grid().clone();
    let f = LogSeriesForm::single(4, 0.0, 0, 0, FormPair::tangential(FormField::zeros(&g, 0))).unwrap();
    assert!(apply_delta(&f, &star).is_err());
    let w = LogSeriesForm::single(6, 0.0, 0, 0, FormPair::tangential(FormField::zeros(&g, 1))).unwrap();
    assert!(apply_delta(&w, &star).is_err());
}

#[test]
fn flat_laplacian_indicial_family() {
    let g = TorusGrid::cube(4, 8).unwrap();
    let star = flat_star(&g, 6);
    for k in 0..=2 {
        for j in 0..=3usize {
            let w0 = random_lowfreq_form(&g, k, 1, 60 + k as u64).unwrap();
            let w = LogSeriesForm::single(j + 2, 0.0, j, 0, FormPair::tangential(w0.clone())).unwrap();
            let out = apply_laplacian(&w, &star, 0.0).unwrap();
            let c = out.coefficient(j, 0);
            let root = (j * (4 - 2 * k)) as f64 - (j * j) as f64;
            assert!(c.t.sub(&w0.scale(root)).max_abs() <= 1e-11 * w0.max_abs(), "k={k} j={j}");
            assert!(c.n.map_or(0.0, |b| b.max_abs()) <= 1e-12);
        }
    }
}

#[test]
fn flat_laplacian_of_log_term() {
    let g = TorusGrid::cube(4, 8).unwrap();
    for k in 0..2 {
        let w0 = random_lowfreq_form(&g, k, 1, 70 + k as u64).unwrap();
        let w = LogSeriesForm::single(2, 0.0, 0, 1, FormPair::tangential(w0.clone())).unwrap();
        let out = apply_laplacian(&w, &flat_star(&g, 2), 0.0).unwrap();
        let expect = w0.scale(4.0 - 2.0 * k as f64);
        assert!(out.coefficient(0, 0).t.sub(&expect).max_abs() <= 1e-12, "k={k}");
        assert!(out.coefficient(0, 1).t.max_abs() <= 1e-12);
    }
}

#[test]
fn laplacian_shift_subtracts_input() {
    let (_, star, _) = curved_setting(8);
    let w = random_series(star.grid(), 1, 4, 80);
    let a = apply_laplacian(&w, &star, 0.0).unwrap();
    let b = apply_laplacian(&w, &star, 3.0).unwrap();
    for (&(j, l), c) in &w.terms {
        let lhs = a.coefficient(j, l);
        let mut rhs = b.coefficient(j, l);
        rhs.axpy(3.0, c);
        assert!(pair_diff(&lhs, &rhs) <= 1e-12 * lhs.max_abs().max(1.0));
    }
}

#[test]
fn curved_laplacian_commutes_with_d() {
    let (_, star, _) = curved_setting(8);
    for k in 0..3 {
        let w = random_series(star.grid(), k, 4, 90 + 10 * k as u64);
        let a = apply_laplacian(&apply_d(&w).unwrap(), &star, 0.0).unwrap();
        let b = apply_d(&apply_laplacian(&w, &star, 0.0).unwrap()).unwrap();
        let scale = a.max_abs().max(b.max_abs());
        for j in 0..=4 {
            for l in 0..=1 {
                assert!(pair_diff(&a.coefficient(j, l), &b.coefficient(j, l)) <= 1e-7 * scale, "k={k} j={j}");
            }
        }
    }
}

#[test]
fn even_inputs_give_even_outputs() {
    let (_, star, _) = curved_setting(8);
    let w = random_series(star.grid(), 2, 4, 120);
    let out = apply_laplacian(&w, &star, 0.0).unwrap();
    for (&(j, _), c) in &out.terms {
        if j % 2 == 1 {
            assert!(c.max_abs() <= 1e-14);
        }
    }
}

#[test]
fn log_cap_is_enforced() {
    let g = TorusGrid::cube(4, 4).unwrap();
    let mut s = LogSeriesForm::new(&g, 1, 4, 0.0);
    assert!(s.insert(0, 3, FormPair::zeros(&g, 1)).is_err());
}

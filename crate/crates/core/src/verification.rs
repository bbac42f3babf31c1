//! Identity suites: numerical residuals of the structural identities satisfied by the extracted operators.

use serde::{Deserialize, Serialize};

use crate::curvature::{compute_curvature, fg_metric_series, fg_metric_series_with, CurvatureData};
use crate::error::{Error, Result};
use crate::exterior::{d_unchecked, delta_unchecked, form_laplacian, interior, quadrature_inner, Metric};
use crate::fields::{random_lowfreq_form, FormField, Phase, ScalarField, TensorField, TrigPolynomial};
use crate::grid::TorusGrid;
use crate::reference::{ref_dim4, ref_dim6, ref_generic, ConstantTable};
use crate::series::{star_series, MetricSeries, StarSeries};
use crate::solver::{
    delta_of_solution, extract_critical, operator_gk, operator_gk_with, operator_lk, operator_lk_ell, operator_qk,
    operator_qk_with, solve_absolute_series, IndicialData,
};

/// Series-internal identities.
pub const TOL_SERIES: f64 = 1e-8;
/// Curved operator comparisons.
pub const TOL_CURVED: f64 = 1e-6;
/// Solver-vs-solver conformal covariance.
pub const TOL_COVARIANCE: f64 = 1e-5;
/// Homothety (constant conformal factor) and agreement of identical code paths.
pub const TOL_EXACT: f64 = 1e-10;

/// Boundary metric of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MetricSpec {
    Flat,
    Conformal { phi: TrigPolynomial },
}

impl MetricSpec {
    pub fn describe(&self) -> String {
        match self {
            MetricSpec::Flat => "flat".into(),
            MetricSpec::Conformal { phi } => {
                let terms: Vec<String> = phi
                    .terms
                    .iter()
                    .map(|t| {
                        let f = match t.phase {
                            Phase::Sin => "sin",
                            Phase::Cos => "cos",
                        };
                        format!("{}·{f}{:?}", t.amplitude, t.mode)
                    })
                    .collect();
                format!("e^(2φ)δ, φ = {}", terms.join(" + "))
            }
        }
    }
}

/// A grid with a boundary metric, its curvature and the Hodge star series of its collar metric.
pub struct Setting {
    pub spec: MetricSpec,
    pub grid: TorusGrid,
    pub curv: CurvatureData,
    pub phi: Option<ScalarField>,
    pub star: StarSeries,
}

impl Setting {
    pub fn new(n: usize, size: usize, spec: &MetricSpec) -> Result<Self> {
        let grid = TorusGrid::cube(n, size)?;
        match spec {
            MetricSpec::Flat => {
                let star = star_series(&MetricSeries::flat(&grid, n), n)?;
                Ok(Setting { spec: spec.clone(), curv: CurvatureData::flat(&grid), grid, phi: None, star })
            }
            MetricSpec::Conformal { phi } => {
                if 4 * phi.max_mode() as usize > size {
                    return Err(Error::Params(format!("conformal factor mode {} too high for grid {size}", phi.max_mode())));
                }
                let f = phi.sample(&grid);
                let curv = compute_curvature(&Metric::conformal(&f))?;
                let star = star_series(&fg_metric_series(&curv)?, n)?;
                Ok(Setting { spec: spec.clone(), grid, curv, phi: Some(f), star })
            }
        }
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn metric(&self) -> &Metric {
        &self.curv.metric
    }

    pub fn meta(&self, k: usize, ell: Option<usize>, seed: u64) -> ScenarioMeta {
        ScenarioMeta { n: self.n(), k, ell, metric: self.spec.describe(), grid: self.grid.sizes().to_vec(), seed }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityResult {
    pub name: String,
    pub anchor: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioMeta {
    pub n: usize,
    pub k: usize,
    pub ell: Option<usize>,
    pub metric: String,
    pub grid: Vec<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityReport {
    pub scenario: String,
    pub identities: Vec<IdentityResult>,
    pub meta: ScenarioMeta,
}

impl IdentityReport {
    pub fn new(scenario: impl Into<String>, meta: ScenarioMeta) -> Self {
        IdentityReport { scenario: scenario.into(), identities: Vec::new(), meta }
    }

    pub fn record(&mut self, name: &str, anchor: &str, residual: f64, tolerance: f64) {
        let residual = if residual.is_finite() { residual.abs() } else { f64::INFINITY };
        self.identities.push(IdentityResult {
            name: name.into(),
            anchor: anchor.into(),
            residual,
            tolerance,
            pass: residual <= tolerance,
        });
    }

    /// Records a failed identity when a computation errors out.
    pub fn record_error(&mut self, name: &str, anchor: &str, err: &Error, tolerance: f64) {
        self.identities.push(IdentityResult {
            name: format!("{name} (error: {err})"),
            anchor: anchor.into(),
            residual: f64::INFINITY,
            tolerance,
            pass: false,
        });
    }

    pub fn passed(&self) -> bool {
        self.identities.iter().all(|i| i.pass)
    }

    pub fn worst(&self) -> Option<&IdentityResult> {
        self.identities.iter().max_by(|a, b| (a.residual / a.tolerance).total_cmp(&(b.residual / b.tolerance)))
    }
}

/// ‖a−b‖ / max(‖a‖, ‖b‖, floor), maximum norms.
pub fn relative(a: &FormField, b: &FormField, floor: f64) -> f64 {
    a.sub(b).max_abs() / a.max_abs().max(b.max_abs()).max(floor).max(f64::MIN_POSITIVE)
}

/// Operator scale ‖Au‖/‖u‖ from probe inputs and outputs.
pub fn operator_scale(pairs: &[(&FormField, &FormField)]) -> f64 {
    pairs.iter().map(|(u, au)| au.max_abs() / u.max_abs().max(f64::MIN_POSITIVE)).fold(0.0, f64::max)
}

fn test_form(grid: &TorusGrid, k: usize, seed: u64) -> Result<FormField> {
    random_lowfreq_form(grid, k, 1, seed)
}

fn exact_form(grid: &TorusGrid, k: usize, seed: u64) -> Result<FormField> {
    if k == 0 {
        return Ok(FormField::from_scalar(&ScalarField::constant(grid, 1.0 + (seed % 7) as f64 * 0.25)));
    }
    Ok(d_unchecked(&test_form(grid, k - 1, seed)?))
}

fn sign(e: usize) -> f64 {
    if e % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

macro_rules! attempt {
    ($rep:expr, $name:expr, $anchor:expr, $tol:expr, $body:expr) => {
        match (|| -> Result<f64> { $body })() {
            Ok(r) => $rep.record($name, $anchor, r, $tol),
            Err(e) => $rep.record_error($name, $anchor, &e, $tol),
        }
    };
}

/// Factorizations G_k = (−1)^k δ₀Q_k/(n−2k) on closed forms, L_k = (−1)^k G_{k+1}d/(n−2k),
/// the chain L_k = −δ₀Q_{k+1}d/((n−2k)(n−2k−2)), and L_{n/2−1} = δ₀d/2.
pub fn check_factorizations(s: &Setting, k: usize, seed: u64) -> IdentityReport {
    let n = s.n();
    let mut rep = IdentityReport::new(format!("factorizations n={n} k={k} {}", s.spec.describe()), s.meta(k, None, seed));
    let m = s.metric();
    let nk = (n - 2 * k) as f64;
    if k >= 1 && 2 * k < n {
        attempt!(rep, "G_k = (-1)^k δQ_k/(n-2k) on closed forms", "G_k from Q_k", TOL_SERIES, {
            let w = exact_form(&s.grid, k, seed)?;
            let g = operator_gk(&w, &s.star)?;
            let q = operator_qk(&w, &s.star)?;
            let rhs = delta_unchecked(&q, m).scale(sign(k) / nk);
            Ok(relative(&g, &rhs, operator_scale(&[(&w, &q)])))
        });
    }
    if 2 * k + 2 <= n {
        attempt!(rep, "L_k = (-1)^k G_{k+1} d/(n-2k)", "L_k from G_{k+1}", TOL_SERIES, {
            let w = test_form(&s.grid, k, seed)?;
            let l = operator_lk(&w, &s.star)?;
            let g = operator_gk(&d_unchecked(&w), &s.star)?;
            Ok(relative(&l, &g.scale(sign(k) / nk), 0.0))
        });
    }
    if 2 * k + 4 <= n {
        attempt!(rep, "L_k = -δQ_{k+1}d/((n-2k)(n-2k-2))", "L_k from Q_{k+1}", TOL_SERIES, {
            let w = test_form(&s.grid, k, seed)?;
            let l = operator_lk(&w, &s.star)?;
            let q = operator_qk(&d_unchecked(&w), &s.star)?;
            let rhs = delta_unchecked(&q, m).scale(-1.0 / (nk * (nk - 2.0)));
            Ok(relative(&l, &rhs, 0.0))
        });
    }
    if 2 * k + 2 == n {
        attempt!(rep, "L_{n/2-1} = δd/2", "critical L", TOL_SERIES, {
            let w = test_form(&s.grid, k, seed)?;
            let l = operator_lk(&w, &s.star)?;
            Ok(relative(&l, &delta_unchecked(&d_unchecked(&w), m).scale(0.5), 0.0))
        });
    }
    rep
}

/// Closed-form annihilation L_k∘d = 0, coclosed ranges δ₀∘G_k = 0 and δ₀∘L_k = 0.
pub fn check_annihilation(s: &Setting, k: usize, seed: u64) -> IdentityReport {
    let n = s.n();
    let mut rep = IdentityReport::new(format!("annihilation n={n} k={k} {}", s.spec.describe()), s.meta(k, None, seed));
    let m = s.metric();
    let probe = test_form(&s.grid, k, seed);
    let probe_l = probe.as_ref().ok().and_then(|w| operator_lk(w, &s.star).ok());
    if let (Ok(w), Some(lw)) = (&probe, &probe_l) {
        let scale = operator_scale(&[(w, lw)]);
        if k >= 1 {
            attempt!(rep, "L_k d = 0", "L_k vanishes on closed forms", TOL_SERIES, {
                let a = exact_form(&s.grid, k, seed + 11)?;
                Ok(operator_lk(&a, &s.star)?.max_abs() / (scale * a.max_abs()).max(f64::MIN_POSITIVE))
            });
        }
        attempt!(rep, "δ L_k = 0", "L_k has coclosed range", TOL_SERIES, {
            let dl = if k == 0 { FormField::zeros(&s.grid, 0) } else { delta_unchecked(lw, m) };
            Ok(dl.max_abs() / lw.max_abs().max(f64::MIN_POSITIVE))
        });
        if k >= 1 {
            attempt!(rep, "δ G_k = 0", "G_k has coclosed range", TOL_SERIES, {
                let g = operator_gk(w, &s.star)?;
                let dg = if k == 1 { FormField::zeros(&s.grid, 0) } else { delta_unchecked(&g, m) };
                Ok(dg.max_abs() / g.max_abs().max(f64::MIN_POSITIVE))
            });
        }
    } else {
        let err = match probe {
            Err(e) => e,
            Ok(w) => operator_lk(&w, &s.star).err().unwrap_or(Error::Guard("probe failed".into())),
        };
        rep.record_error("probe L_k", "operator scale", &err, TOL_SERIES);
    }
    rep
}

/// Residual below the extraction order and the decay of δ_g ω_{F₁}.
pub fn check_decay(s: &Setting, k: usize, ell: usize, seed: u64) -> IdentityReport {
    let n = s.n();
    let mut rep = IdentityReport::new(format!("decay n={n} k={k} l={ell} {}", s.spec.describe()), s.meta(k, Some(ell), seed));
    attempt!(rep, "(Δ-λ)ω_F1 vanishes below x^(α+2ℓ)", "formal solution residual", TOL_SERIES, {
        let w = test_form(&s.grid, k, seed)?;
        let idx = IndicialData::new(n, k, ell)?;
        let sol = solve_absolute_series(&w, &idx, &s.star, None)?;
        let mut worst: f64 = 0.0;
        for j in 0..2 * ell {
            worst = worst.max(sol.residual.coefficient(j, 0).max_abs());
        }
        let top = sol.residual.coefficient(2 * ell, 0);
        let n_top = top.n.as_ref().map(|b| b.max_abs()).unwrap_or(0.0);
        worst = worst.max(n_top);
        Ok(worst / w.max_abs())
    });
    if k == 0 {
        // δ_g of a collar function vanishes identically
        return rep;
    }
    attempt!(rep, "δ_g ω_F1 = O(x^(α+2ℓ+2))", "decay of the codifferential", TOL_SERIES, {
        let w = test_form(&s.grid, k, seed)?;
        let idx = IndicialData::new(n, k, ell)?;
        let sol = solve_absolute_series(&w, &idx, &s.star, None)?;
        let del = delta_of_solution(&sol, &s.star)?;
        let mut worst: f64 = 0.0;
        for j in 0..=2 * ell {
            worst = worst.max(del.coefficient(j, 0).max_abs());
        }
        Ok(worst / w.max_abs())
    });
    rep
}

/// Symmetry of L_k^ℓ on all k-forms and of Q_k on closed k-forms.
pub fn check_symmetry(s: &Setting, k: usize, ell: usize, seed: u64) -> IdentityReport {
    let n = s.n();
    let mut rep = IdentityReport::new(format!("symmetry n={n} k={k} l={ell} {}", s.spec.describe()), s.meta(k, Some(ell), seed));
    let m = s.metric();
    let pairing = |u: &FormField, v: &FormField, au: &FormField, av: &FormField| -> Result<f64> {
        let a = quadrature_inner(au, v, m)?;
        let b = quadrature_inner(u, av, m)?;
        let nu = quadrature_inner(u, u, m)?.sqrt();
        let nv = quadrature_inner(v, v, m)?.sqrt();
        let nau = quadrature_inner(au, au, m)?.sqrt();
        let nav = quadrature_inner(av, av, m)?.sqrt();
        let scale = (nau / nu).max(nav / nv) * nu * nv;
        Ok((a - b).abs() / scale.max(f64::MIN_POSITIVE))
    };
    attempt!(rep, "⟨L_k^ℓ u, v⟩ = ⟨u, L_k^ℓ v⟩", "symmetry of L_k^ℓ", TOL_SERIES, {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            let u = test_form(&s.grid, k, seed + 2 * i)?;
            let v = test_form(&s.grid, k, seed + 2 * i + 1)?;
            let au = operator_lk_ell(&u, ell, &s.star)?;
            let av = operator_lk_ell(&v, ell, &s.star)?;
            worst = worst.max(pairing(&u, &v, &au, &av)?);
        }
        Ok(worst)
    });
    if 2 * k < n && ell == n / 2 - k {
        attempt!(rep, "⟨Q_k u, v⟩ = ⟨u, Q_k v⟩ on closed forms", "symmetry of Q_k", TOL_SERIES, {
            let u = exact_form(&s.grid, k, seed + 5)?;
            let v = exact_form(&s.grid, k, seed + 6)?;
            let au = operator_qk(&u, &s.star)?;
            let av = operator_qk(&v, &s.star)?;
            pairing(&u, &v, &au, &av)
        });
    }
    rep
}

/// Independence of G_k and Q_k from the formally undetermined tangential term, and (n=6) from the
/// trace-free part of the x⁶ metric coefficient.
pub fn check_undetermined_independence(s: &Setting, k: usize, seed: u64) -> IdentityReport {
    let n = s.n();
    let mut rep = IdentityReport::new(format!("undetermined n={n} k={k} {}", s.spec.describe()), s.meta(k, None, seed));
    if k >= 1 && 2 * k < n {
        attempt!(rep, "G_k independent of v^(t)", "undetermined term in ω_F1", TOL_SERIES, {
            let w = test_form(&s.grid, k, seed)?;
            let v = test_form(&s.grid, k, seed + 101)?;
            Ok(relative(&operator_gk_with(&w, &s.star, Some(&v))?, &operator_gk(&w, &s.star)?, w.max_abs().max(v.max_abs())))
        });
    }
    if 2 * k + 2 < n {
        attempt!(rep, "Q_k independent of v^(t)", "undetermined term in ω'_F1", TOL_SERIES, {
            let w = exact_form(&s.grid, k, seed)?;
            let v = test_form(&s.grid, k + 1, seed + 102)?;
            // Q_0 of a flat constant is exactly zero, so the inputs set the scale
            Ok(relative(&operator_qk_with(&w, &s.star, Some(&v))?, &operator_qk(&w, &s.star)?, w.max_abs().max(v.max_abs())))
        });
    }
    if n == 6 && 2 * k < n {
        attempt!(rep, "G_k, Q_k independent of trace-free h_3", "undetermined metric coefficient", TOL_SERIES, {
            let h3 = tt_perturbation(&s.grid, seed);
            let ms = fg_metric_series_with(&s.curv, Some(&h3))?;
            let star = star_series(&ms, n)?;
            let w = exact_form(&s.grid, k, seed + 3)?;
            let mut worst = relative(&operator_qk(&w, &star)?, &operator_qk(&w, &s.star)?, w.max_abs());
            if k >= 1 {
                let u = test_form(&s.grid, k, seed + 4)?;
                worst = worst.max(relative(&operator_gk(&u, &star)?, &operator_gk(&u, &s.star)?, 0.0));
            }
            Ok(worst)
        });
    }
    rep
}

/// A transverse trace-free symmetric tensor on the flat torus: diag(0,0,f,−f,0,…) with f = f(y₁).
pub fn tt_perturbation(grid: &TorusGrid, seed: u64) -> TensorField {
    let amp = 0.5 + 0.1 * (seed % 5) as f64;
    let f = ScalarField::from_fn(grid, |y| amp * (y[0].sin() + 0.3 * y[1].cos()));
    let mut t = TensorField::zeros(grid, 2);
    t.comp_mut(&[2, 2]).copy_from_slice(&f.values);
    let neg: Vec<f64> = f.values.iter().map(|v| -v).collect();
    t.comp_mut(&[3, 3]).copy_from_slice(&neg);
    t.symmetric = true;
    t
}

/// The critical path and the general L_k^ℓ path at ℓ = n/2−k agree.
pub fn check_critical_agreement(s: &Setting, k: usize, seed: u64) -> IdentityReport {
    let n = s.n();
    let mut rep = IdentityReport::new(format!("critical agreement n={n} k={k} {}", s.spec.describe()), s.meta(k, Some(n / 2 - k), seed));
    attempt!(rep, "L_k^(n/2-k) = L_k", "critical specialization", TOL_EXACT, {
        let w = test_form(&s.grid, k, seed)?;
        Ok(relative(&operator_lk_ell(&w, n / 2 - k, &s.star)?, &operator_lk(&w, &s.star)?, 0.0))
    });
    rep
}

/// Flat metric: series coefficients follow the closed a/b sequences, and L_k^ℓ, G_k, Q_k, B_k equal
/// their principal parts.
pub fn check_flat_sequences(s: &Setting, k: usize, seed: u64) -> IdentityReport {
    let n = s.n();
    let mut rep = IdentityReport::new(format!("flat sequences n={n} k={k}"), s.meta(k, None, seed));
    if !matches!(s.spec, MetricSpec::Flat) {
        rep.record_error("flat sequences", "flat metric", &Error::Params("needs the flat metric".into()), TOL_SERIES);
        return rep;
    }
    let m = s.metric();
    let ct = ConstantTable::new(n);
    let dd = |x: &FormField| delta_unchecked(&d_unchecked(x), m);
    let ddl = |x: &FormField| if x.degree == 0 { FormField::zeros(&x.grid, 0) } else { d_unchecked(&delta_unchecked(x, m)) };
    attempt!(rep, "ω_F1 coefficients = a/b sequences", "flat critical series", TOL_SERIES, {
        let w = test_form(&s.grid, k, seed)?;
        let idx = IndicialData::critical(n, k)?;
        let sol = solve_absolute_series(&w, &idx, &s.star, None)?;
        let mut worst: f64 = 0.0;
        let (mut pa, mut pb) = (w.clone(), w.clone());
        for i in 0..=(n / 2 - k) {
            if 2 * i < n - 2 * k || i == 0 {
                let c = sol.series.coefficient(2 * i, 0);
                let mut expect = pa.scale(ct.a_even(k, i));
                if i > 0 {
                    expect.axpy(ct.b_even(k, i), &pb);
                }
                worst = worst.max(relative(&c.t, &expect, w.max_abs()));
            }
            if k >= 1 && 2 * i + 2 <= n - 2 * k {
                let c = sol.series.coefficient(2 * i + 2, 0);
                // (δd)^i δ = δ(dδ)^i
                let expect = delta_unchecked(&pb, m).scale(ct.a_odd(k, i));
                let got = c.n.unwrap_or_else(|| FormField::zeros(&s.grid, k - 1));
                worst = worst.max(relative(&got, &expect, w.max_abs()));
            }
            pa = dd(&pa);
            pb = ddl(&pb);
        }
        Ok(worst)
    });
    for ell in 1..=(n / 2 - k) {
        attempt!(rep, &format!("L_k^{ell} = principal part"), "flat L_k^ℓ", TOL_SERIES, {
            let w = test_form(&s.grid, k, seed + ell as u64)?;
            let got = operator_lk_ell(&w, ell, &s.star)?;
            let r = ref_generic("Lkl_principal", &w, &s.curv, n, k, ell)?;
            Ok(relative(&got, &r, 0.0))
        });
    }
    if k >= 1 {
        attempt!(rep, "G_k = principal part", "flat G_k", TOL_SERIES, {
            let w = test_form(&s.grid, k, seed + 20)?;
            Ok(relative(&operator_gk(&w, &s.star)?, &ref_generic("Gk_principal", &w, &s.curv, n, k, 0)?, 0.0))
        });
        attempt!(rep, "B_k = principal part", "flat B_k", TOL_SERIES, {
            let w = test_form(&s.grid, k, seed + 21)?;
            let ex = extract_critical(&w, &s.star, None)?;
            let mut x = delta_unchecked(&w, m);
            for _ in 0..(n / 2 - k) {
                x = dd(&x);
            }
            let c_val = ex.get("Ck").map(|c| c.max_abs()).unwrap_or(0.0);
            Ok(relative(ex.get("Bk").expect("B_k"), &x.scale(ct.principal_b(k)), 0.0).max(c_val / w.max_abs()))
        });
    }
    attempt!(rep, "Q_k = principal part on closed forms", "flat Q_k", TOL_SERIES, {
        let w = if k == 0 { test_form(&s.grid, 0, seed + 22)? } else { exact_form(&s.grid, k, seed + 22)? };
        if k == 0 {
            // closed 0-forms are constants, where Q_0 of the flat metric vanishes
            let c = exact_form(&s.grid, 0, seed)?;
            return Ok(operator_qk(&c, &s.star)?.max_abs() / c.max_abs());
        }
        Ok(relative(&operator_qk(&w, &s.star)?, &ref_generic("Qk_principal", &w, &s.curv, n, k, 0)?, 0.0))
    });
    rep
}

/// Solver against the closed-form operators of dimension 4 or 6 and against the generic formulas.
pub fn check_reference(s: &Setting, names: &[&str], seed: u64, tol: f64) -> IdentityReport {
    let n = s.n();
    let mut rep = IdentityReport::new(format!("reference n={n} {}", s.spec.describe()), s.meta(0, None, seed));
    for (i, name) in names.iter().enumerate() {
        let seed = seed + i as u64;
        attempt!(rep, &format!("{name} solver = closed form"), "explicit low-dimensional formulas", tol, {
            let (op, k) = name.split_at(1);
            let k: usize = k.parse().map_err(|_| Error::Params(format!("bad operator name {name}")))?;
            let w = match op {
                "Q" => exact_form(&s.grid, k, seed)?,
                _ => test_form(&s.grid, k, seed)?,
            };
            let got = match op {
                "L" => operator_lk(&w, &s.star)?,
                "G" => operator_gk(&w, &s.star)?,
                "Q" => operator_qk(&w, &s.star)?,
                _ => return Err(Error::Params(format!("unknown operator {name}"))),
            };
            let r = match n {
                4 => ref_dim4(name, &w, &s.curv)?,
                6 => ref_dim6(name, &w, &s.curv)?,
                _ => return Err(Error::Dimension(n)),
            };
            Ok(relative(&got, &r, w.max_abs()))
        });
    }
    rep
}

/// Solver against the generic-n formulas: G_{n/2−1}, Q_{n/2−1}, L_{n/2−2}, L¹_k, L²_k.
pub fn check_generic(s: &Setting, seed: u64, tol: f64) -> IdentityReport {
    let n = s.n();
    let mut rep = IdentityReport::new(format!("generic formulas n={n} {}", s.spec.describe()), s.meta(0, None, seed));
    let h = n / 2;
    attempt!(rep, "G_{n/2-1} = closed form", "generic critical G", tol, {
        let w = test_form(&s.grid, h - 1, seed)?;
        Ok(relative(&operator_gk(&w, &s.star)?, &ref_generic("G_crit", &w, &s.curv, n, h - 1, 1)?, w.max_abs()))
    });
    attempt!(rep, "Q_{n/2-1} = closed form", "generic critical Q", tol, {
        let w = exact_form(&s.grid, h - 1, seed + 1)?;
        Ok(relative(&operator_qk(&w, &s.star)?, &ref_generic("Q_crit", &w, &s.curv, n, h - 1, 1)?, w.max_abs()))
    });
    attempt!(rep, "L_{n/2-2} = closed form", "generic critical L", tol, {
        let w = test_form(&s.grid, h - 2, seed + 2)?;
        Ok(relative(&operator_lk(&w, &s.star)?, &ref_generic("L_crit2", &w, &s.curv, n, h - 2, 2)?, w.max_abs()))
    });
    for k in 0..h {
        attempt!(rep, &format!("L^1_{k} = closed form"), "first non-critical operator", tol, {
            let w = test_form(&s.grid, k, seed + 3 + k as u64)?;
            Ok(relative(&operator_lk_ell(&w, 1, &s.star)?, &ref_generic("L1_ell", &w, &s.curv, n, k, 1)?, w.max_abs()))
        });
        if 2 * k + 4 <= n {
            attempt!(rep, &format!("L^2_{k} = closed form"), "second non-critical operator", tol, {
                let w = test_form(&s.grid, k, seed + 10 + k as u64)?;
                Ok(relative(&operator_lk_ell(&w, 2, &s.star)?, &ref_generic("L2_ell", &w, &s.curv, n, k, 2)?, w.max_abs()))
            });
        }
    }
    rep
}

/// Conformal change laws between the flat metric and e^{2φ}δ, computed solver-vs-solver:
/// L̂ = e^{(2k−n)φ}L, Ĝ = e^{(2k−2−n)φ}(G + (−1)^{k+1} i_{∇φ}L) (interior product in the first slot), Q̂ω = e^{(2k−n)φ}(Qω + (n−2k)L(φω)),
/// and invariance of ∫⟨Q_k u, u⟩ for closed u.
pub fn check_conformal_covariance(flat: &Setting, curved: &Setting, k: usize, seed: u64, tol: f64) -> IdentityReport {
    let n = flat.n();
    let mut rep = IdentityReport::new(format!("conformal covariance n={n} k={k} {}", curved.spec.describe()), curved.meta(k, None, seed));
    let phi = match &curved.phi {
        Some(p) => p.clone(),
        None => ScalarField::zeros(&curved.grid),
    };
    let weight = |e: f64| phi.map(|p| (e * p).exp());
    let e_l = (2 * k) as f64 - n as f64;
    attempt!(rep, "L̂_k = e^((2k-n)φ) L_k", "conformal change of L_k", tol, {
        let w = test_form(&flat.grid, k, seed)?;
        let lhat = operator_lk(&w, &curved.star)?;
        let l = operator_lk(&w, &flat.star)?;
        Ok(relative(&lhat, &l.mul_scalar(&weight(e_l)), w.max_abs()))
    });
    if k >= 1 {
        attempt!(rep, "Ĝ_k = e^((2k-2-n)φ)(G_k + (-1)^(k+1) i_∇φ L_k)", "conformal change of G_k", tol, {
            let w = test_form(&flat.grid, k, seed + 1)?;
            let ghat = operator_gk(&w, &curved.star)?;
            let g = operator_gk(&w, &flat.star)?;
            let l = operator_lk(&w, &flat.star)?;
            let grad = (0..n).map(|a| phi.partial(a, 1)).collect::<Result<Vec<ScalarField>>>()?;
            let mut rhs = g;
            rhs.axpy(sign(k + 1), &interior(&grad, &l)?);
            Ok(relative(&ghat, &rhs.mul_scalar(&weight(e_l - 2.0)), w.max_abs()))
        });
    }
    attempt!(rep, "Q̂_k ω = e^((2k-n)φ)(Q_k ω + (n-2k) L_k(φω))", "conformal change of Q_k", tol, {
        let w = exact_form(&flat.grid, k, seed + 2)?;
        let qhat = operator_qk(&w, &curved.star)?;
        let mut rhs = operator_qk(&w, &flat.star)?;
        rhs.axpy(-e_l, &operator_lk(&w.mul_scalar(&phi), &flat.star)?);
        Ok(relative(&qhat, &rhs.mul_scalar(&weight(e_l)), w.max_abs()))
    });
    attempt!(rep, "∫⟨Q_k u, u⟩ conformally invariant on closed u", "invariant pairing", tol, {
        let u = exact_form(&flat.grid, k, seed + 3)?;
        let norm = |w: &FormField, m: &Metric| quadrature_inner(w, w, m).map(f64::sqrt);
        let qc = operator_qk(&u, &curved.star)?;
        let qf = operator_qk(&u, &flat.star)?;
        let a = quadrature_inner(&qc, &u, curved.metric())?;
        let b = quadrature_inner(&qf, &u, flat.metric())?;
        let scale = (norm(&qc, curved.metric())? * norm(&u, curved.metric())?).max(norm(&qf, flat.metric())? * norm(&u, flat.metric())?);
        Ok((a - b).abs() / scale.max(f64::MIN_POSITIVE))
    });
    rep
}

/// Constant conformal factor: every operator rescales by its weight.
pub fn check_homothety(flat: &Setting, c: f64, k: usize, seed: u64) -> IdentityReport {
    let n = flat.n();
    let mut rep = IdentityReport::new(format!("homothety n={n} k={k} c={c}"), flat.meta(k, None, seed));
    attempt!(rep, "L̂_k = e^((2k-n)c) L_k for constant φ = c", "homothety", TOL_EXACT, {
        let spec = MetricSpec::Conformal { phi: TrigPolynomial::single(c, vec![0; n], Phase::Cos) };
        let hat = Setting::new(n, flat.grid.sizes()[0], &spec)?;
        let w = test_form(&flat.grid, k, seed)?;
        let lhat = operator_lk(&w, &hat.star)?;
        let l = operator_lk(&w, &flat.star)?;
        Ok(relative(&lhat, &l.scale((((2 * k) as f64 - n as f64) * c).exp()), 0.0))
    });
    rep
}

/// Laplacian consistency of a setting: the solver never sees the metric through anything but the
/// star series, so check that slice Laplacians are consistent with the base metric.
pub fn check_base_laplacian(s: &Setting, k: usize, seed: u64) -> IdentityReport {
    let mut rep = IdentityReport::new(format!("base calculus n={} k={k} {}", s.n(), s.spec.describe()), s.meta(k, None, seed));
    attempt!(rep, "dΔ = Δd", "Laplacian commutes with d", 1e-7, {
        let w = test_form(&s.grid, k, seed)?;
        let a = d_unchecked(&form_laplacian(&w, s.metric()));
        let b = form_laplacian(&d_unchecked(&w), s.metric());
        Ok(relative(&a, &b, 0.0))
    });
    rep
}

/// Suite report in the JSON schema {"suite", "scenarios", "summary": {"passed", "failed"}}.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub scenarios: Vec<IdentityReport>,
    pub summary: Summary,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
}

impl SuiteReport {
    pub fn new(suite: &str, scenarios: Vec<IdentityReport>) -> Self {
        let passed = scenarios.iter().filter(|r| r.passed()).count();
        let failed = scenarios.len() - passed;
        SuiteReport { suite: suite.into(), scenarios, summary: Summary { passed, failed } }
    }

    pub fn passed(&self) -> bool {
        self.summary.failed == 0
    }
}

pub const SUITES: [&str; 5] = ["quick", "full", "dim4", "dim6", "covariance"];

/// Conformal factor of the dimension-4 curved scenarios.
pub fn dim4_phi() -> TrigPolynomial {
    TrigPolynomial::new(vec![
        crate::fields::TrigTerm { amplitude: 0.1, mode: vec![1, 0, 0, 0], phase: Phase::Sin },
        crate::fields::TrigTerm { amplitude: 0.05, mode: vec![0, 1, 0, 0], phase: Phase::Cos },
    ])
}

/// Conformal factor of the dimension-6 curved scenarios.
pub fn dim6_phi() -> TrigPolynomial {
    TrigPolynomial::new(vec![
        crate::fields::TrigTerm { amplitude: 0.02, mode: vec![1, 0, 0, 0, 0, 0], phase: Phase::Sin },
        crate::fields::TrigTerm { amplitude: 0.01, mode: vec![0, 1, 0, 0, 0, 0], phase: Phase::Cos },
    ])
}

fn structural(s: &Setting, seed: u64, out: &mut Vec<IdentityReport>) {
    let n = s.n();
    for k in 0..n / 2 {
        out.push(check_factorizations(s, k, seed + k as u64));
        out.push(check_annihilation(s, k, seed + 10 + k as u64));
        out.push(check_undetermined_independence(s, k, seed + 20 + k as u64));
        out.push(check_critical_agreement(s, k, seed + 30 + k as u64));
        for ell in 1..=(n / 2 - k) {
            out.push(check_decay(s, k, ell, seed + 40 + (10 * k + ell) as u64));
            out.push(check_symmetry(s, k, ell, seed + 60 + (10 * k + ell) as u64));
        }
    }
}

/// Runs a named suite. `seed` shifts every scenario seed.
pub fn run_suite(name: &str, seed: u64) -> Result<SuiteReport> {
    let mut out = Vec::new();
    match name {
        "quick" => {
            let flat4 = Setting::new(4, 16, &MetricSpec::Flat)?;
            structural(&flat4, seed, &mut out);
            for k in 0..2 {
                out.push(check_flat_sequences(&flat4, k, seed + 80 + k as u64));
            }
            out.push(check_homothety(&flat4, 0.3, 1, seed + 90));
        }
        "dim4" => {
            let s = Setting::new(4, 16, &MetricSpec::Conformal { phi: dim4_phi() })?;
            out.push(check_reference(&s, &["L1", "G1", "Q1", "L0", "Q0"], seed + 100, TOL_CURVED));
            out.push(check_generic(&s, seed + 110, TOL_CURVED));
            out.push(check_base_laplacian(&s, 1, seed + 120));
        }
        "dim6" => {
            let s = Setting::new(6, 8, &MetricSpec::Conformal { phi: dim6_phi() })?;
            out.push(check_reference(&s, &["L2", "G2", "Q2", "L1"], seed + 200, TOL_CURVED));
            out.push(check_reference(&s, &["Q1"], seed + 205, 1e-5));
            let flat = Setting::new(6, 8, &MetricSpec::Flat)?;
            out.push(check_reference(&flat, &["L0", "Q0"], seed + 210, TOL_SERIES));
        }
        "covariance" => {
            let flat = Setting::new(4, 16, &MetricSpec::Flat)?;
            let curved = Setting::new(4, 16, &MetricSpec::Conformal { phi: dim4_phi() })?;
            for k in 0..2 {
                out.push(check_conformal_covariance(&flat, &curved, k, seed + 300 + k as u64, TOL_COVARIANCE));
                out.push(check_homothety(&flat, 0.25, k, seed + 310 + k as u64));
            }
        }
        "full" => {
            let flat4 = Setting::new(4, 16, &MetricSpec::Flat)?;
            let curved4 = Setting::new(4, 16, &MetricSpec::Conformal { phi: dim4_phi() })?;
            structural(&flat4, seed, &mut out);
            structural(&curved4, seed + 1000, &mut out);
            for k in 0..2 {
                out.push(check_flat_sequences(&flat4, k, seed + 80 + k as u64));
                out.push(check_conformal_covariance(&flat4, &curved4, k, seed + 300 + k as u64, TOL_COVARIANCE));
                out.push(check_homothety(&flat4, 0.25, k, seed + 310 + k as u64));
            }
            out.push(check_reference(&curved4, &["L1", "G1", "Q1", "L0", "Q0"], seed + 100, TOL_CURVED));
            out.push(check_generic(&curved4, seed + 110, TOL_CURVED));
            drop(curved4);
            let flat6 = Setting::new(6, 8, &MetricSpec::Flat)?;
            for k in 0..3 {
                out.push(check_flat_sequences(&flat6, k, seed + 400 + k as u64));
                out.push(check_factorizations(&flat6, k, seed + 410 + k as u64));
            }
            out.push(check_undetermined_independence(&flat6, 0, seed + 420));
        }
        other => return Err(Error::Params(format!("unknown suite {other}; expected one of {SUITES:?}"))),
    }
    Ok(SuiteReport::new(name, out))
}

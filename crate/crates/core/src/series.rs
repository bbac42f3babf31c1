//! Log-graded power series in the collar variable x with boundary form coefficients,
//! and the series realizations of d, δ_g and Δ on the collar.

use crate::error::{Error, Result};
use crate::exterior::{self, apply_slot_derivation, d_unchecked, flat_star, flat_star_inverse, EndomorphismField, Metric};
use crate::fields::{FormField, ScalarField, TensorField};
use crate::grid::TorusGrid;
use std::collections::BTreeMap;

/// Highest power of log x kept in any series.
pub const LOG_CAP: usize = 2;

/// Truncated even expansion of the collar metric h_x.
#[derive(Debug, Clone)]
pub struct MetricSeries {
    pub base: Metric,
    /// coefficient of x^j at index j (odd entries zero)
    pub coeffs: Vec<TensorField>,
}

impl MetricSeries {
    pub fn new(base: Metric, coeffs: Vec<TensorField>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Params("metric series needs a leading term".into()));
        }
        for (j, c) in coeffs.iter().enumerate() {
            if j % 2 == 1 && c.max_abs() != 0.0 {
                return Err(Error::Params(format!("odd coefficient x^{j} must vanish")));
            }
        }
        Ok(MetricSeries { base, coeffs })
    }

    pub fn flat(grid: &TorusGrid, order: usize) -> Self {
        let base = Metric::flat(grid);
        let mut coeffs = vec![base.h.clone()];
        coeffs.extend((1..=order).map(|_| TensorField::zeros(grid, 2)));
        MetricSeries { base, coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn grid(&self) -> &TorusGrid {
        self.base.grid()
    }

    /// The slice metric h_x at a given x.
    pub fn evaluate(&self, x: f64) -> Result<Metric> {
        let mut h = self.coeffs[0].clone();
        for (j, c) in self.coeffs.iter().enumerate().skip(1) {
            h = h.add(&c.scale(x.powi(j as i32)));
        }
        Metric::from_tensor(&h)
    }

    /// W_m with h_x = h₀(I + Σ_m W_m x^{2m}), pointwise matrices W = h₀⁻¹(h_x − h₀).
    fn relative(&self) -> Vec<TensorField> {
        let grid = self.grid();
        let n = grid.n();
        let len = grid.len();
        let mut out = Vec::new();
        for j in (2..=self.order()).step_by(2) {
            let c = &self.coeffs[j];
            let mut w = TensorField::zeros(grid, 2);
            for a in 0..n {
                for b in 0..n {
                    let o = w.comp_mut(&[a, b]);
                    for e in 0..n {
                        let hi = self.base.h_inv.comp(&[a, e]);
                        let cc = c.comp(&[e, b]);
                        for p in 0..len {
                            o[p] += hi[p] * cc[p];
                        }
                    }
                }
            }
            out.push(w);
        }
        out
    }

    /// Coefficients of the inverse metric series h_x⁻¹ up to x^order.
    pub fn inverse_coefficients(&self) -> Vec<TensorField> {
        let grid = self.grid();
        let n = grid.n();
        let len = grid.len();
        let w = self.relative();
        let mm = w.len();
        // (I+W)⁻¹ = Σ_r (−W)^r as a series in t = x², then multiplied by h₀⁻¹ on the right
        let mut out = vec![TensorField::zeros(grid, 2); self.order() + 1];
        let mut wp = vec![0.0; mm * n * n];
        for p in 0..len {
            for (m, wm) in w.iter().enumerate() {
                for c in 0..n * n {
                    wp[m * n * n + c] = wm.data[c * len + p];
                }
            }
            let inv = series_inverse(&wp, n, mm);
            let h0i = self.base.h_inv.matrix_at(p);
            for m in 0..=mm {
                let prod = matmul(&inv[m * n * n..(m + 1) * n * n], &h0i, n);
                for c in 0..n * n {
                    out[2 * m].data[c * len + p] = prod[c];
                }
            }
        }
        for t in out.iter_mut() {
            t.symmetrize();
        }
        out
    }
}

fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

/// Powers of the matrix series W(t) = Σ_{m=1}^{M} W_m t^m: returns coefficient arrays of W^r.
fn series_powers(w: &[f64], n: usize, mm: usize) -> Vec<Vec<f64>> {
    let nn = n * n;
    let mut powers = Vec::new();
    let mut cur = vec![0.0; (mm + 1) * nn];
    cur[nn..].copy_from_slice(&w[..mm * nn]);
    for _ in 1..=mm {
        powers.push(cur.clone());
        let mut next = vec![0.0; (mm + 1) * nn];
        for a in 1..=mm {
            for b in 1..=mm - a.min(mm) {
                if a + b > mm {
                    break;
                }
                let prod = matmul(&cur[a * nn..(a + 1) * nn], &w[(b - 1) * nn..b * nn], n);
                next[(a + b) * nn..(a + b + 1) * nn].iter_mut().zip(&prod).for_each(|(o, v)| *o += v);
            }
        }
        cur = next;
    }
    powers
}

/// (I + W(t))⁻¹ coefficients t^0..t^M.
fn series_inverse(w: &[f64], n: usize, mm: usize) -> Vec<f64> {
    let nn = n * n;
    let mut out = vec![0.0; (mm + 1) * nn];
    for i in 0..n {
        out[i * n + i] = 1.0;
    }
    for (r, pw) in series_powers(w, n, mm).iter().enumerate() {
        let s = if (r + 1) % 2 == 0 { 1.0 } else { -1.0 };
        out.iter_mut().zip(pw).for_each(|(o, v)| *o += s * v);
    }
    out
}

/// K(t) = −log(I + W(t)) coefficients t^1..t^M.
fn series_neg_log(w: &[f64], n: usize, mm: usize) -> Vec<f64> {
    let nn = n * n;
    let mut out = vec![0.0; (mm + 1) * nn];
    for (r, pw) in series_powers(w, n, mm).iter().enumerate() {
        let r1 = (r + 1) as f64;
        // log(I+W) = Σ (−1)^{r+1} W^r / r
        let s = if (r + 1) % 2 == 0 { 1.0 } else { -1.0 } / r1;
        out.iter_mut().zip(pw).for_each(|(o, v)| *o += s * v);
    }
    out[nn..].to_vec()
}

/// Series of the Hodge stars of h_x on all degrees:
/// ⋆_x = E ∘ exp(D(K(x)) − ½ tr K(x)) ∘ B₀ with K = −log(h₀⁻¹h_x) and B₀ = √det h₀ Λ(h₀⁻¹).
#[derive(Debug, Clone)]
pub struct StarSeries {
    pub base: Metric,
    pub order: usize,
    /// K_m (coefficient of x^{2m}), m = 1..
    pub log_coeffs: Vec<TensorField>,
    pub log_traces: Vec<ScalarField>,
    nonzero: Vec<bool>,
}

/// Builds the star series of h_x up to x^order.
pub fn star_series(ms: &MetricSeries, order: usize) -> Result<StarSeries> {
    if order > ms.order() {
        return Err(Error::Truncation(format!("star order {order} exceeds metric order {}", ms.order())));
    }
    let grid = ms.grid();
    let n = grid.n();
    let len = grid.len();
    let mm = order / 2;
    let w = ms.relative();
    let w = &w[..mm.min(w.len())];
    let mm = w.len();
    let mut log_coeffs = vec![TensorField::zeros(grid, 2); mm];
    let nonzero_w = w.iter().any(|t| t.max_abs() != 0.0);
    if nonzero_w {
        let mut wp = vec![0.0; mm * n * n];
        for p in 0..len {
            for (m, wm) in w.iter().enumerate() {
                for c in 0..n * n {
                    wp[m * n * n + c] = wm.data[c * len + p];
                }
            }
            let k = series_neg_log(&wp, n, mm);
            for (m, km) in log_coeffs.iter_mut().enumerate() {
                for c in 0..n * n {
                    km.data[c * len + p] = k[m * n * n + c];
                }
            }
        }
    }
    let log_traces: Vec<ScalarField> = log_coeffs.iter().map(exterior::trace).collect();
    let nonzero = log_coeffs.iter().map(|k| k.max_abs() != 0.0).collect();
    Ok(StarSeries { base: ms.base.clone(), order, log_coeffs, log_traces, nonzero })
}

/// Series with one form coefficient per (power j, log power l).
pub type FSeries = BTreeMap<(usize, usize), FormField>;

fn add_term(s: &mut FSeries, key: (usize, usize), scale: f64, w: &FormField) {
    match s.get_mut(&key) {
        Some(e) => e.axpy(scale, w),
        None => {
            s.insert(key, w.scale(scale));
        }
    }
}

impl StarSeries {
    pub fn grid(&self) -> &TorusGrid {
        self.base.grid()
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn is_flat(&self) -> bool {
        !self.nonzero.iter().any(|&b| b)
    }

    /// M_m w = D(K_m)w − ½ tr(K_m) w, acting on k-vector components.
    fn apply_m(&self, m: usize, w: &FormField) -> FormField {
        let mut out = w.mul_scalar(&self.log_traces[m - 1]).scale(-0.5);
        if w.degree > 0 {
            out.axpy(1.0, &apply_slot_derivation(&self.log_coeffs[m - 1], w));
        }
        out
    }

    /// exp(sign·M(x)) applied to a series, truncated at `max_j`.
    pub fn apply_exp(&self, y: &FSeries, sign: f64, max_j: usize) -> FSeries {
        let mut result: FSeries = y.clone();
        if self.is_flat() {
            return result;
        }
        let mut power = y.clone();
        let mut r = 0usize;
        loop {
            r += 1;
            let mut next = FSeries::new();
            for (&(j, l), w) in &power {
                for m in 1..=self.log_coeffs.len() {
                    if !self.nonzero[m - 1] || j + 2 * m > max_j {
                        continue;
                    }
                    let v = self.apply_m(m, w);
                    add_term(&mut next, (j + 2 * m, l), 1.0, &v);
                }
            }
            if next.is_empty() {
                break;
            }
            let fact: f64 = (1..=r).map(|i| i as f64).product();
            let s = sign.powi(r as i32) / fact;
            for (key, w) in &next {
                add_term(&mut result, *key, s, w);
            }
            power = next;
        }
        result
    }

    fn base_raise(&self, w: &FormField) -> FormField {
        exterior::raise(w, &self.base).mul_scalar(&self.base.sqrt_det)
    }

    fn base_lower(&self, w: &FormField) -> FormField {
        let inv = self.base.sqrt_det.map(|v| 1.0 / v);
        exterior::lower(w, &self.base).mul_scalar(&inv)
    }

    /// ⋆_x applied to a series of k-forms.
    pub fn star(&self, y: &FSeries, max_j: usize) -> FSeries {
        let raised: FSeries = y.iter().map(|(k, w)| (*k, self.base_raise(w))).collect();
        self.apply_exp(&raised, 1.0, max_j).into_iter().map(|(k, w)| (k, flat_star(&w))).collect()
    }

    /// ⋆_x⁻¹ applied to a series of (n−k)-forms, returning k-forms.
    pub fn star_inverse(&self, y: &FSeries, max_j: usize) -> FSeries {
        let pre: FSeries = y.iter().map(|(k, w)| (*k, flat_star_inverse(w))).collect();
        self.apply_exp(&pre, -1.0, max_j).into_iter().map(|(k, w)| (k, self.base_lower(&w))).collect()
    }

    /// Dense x^j coefficient of ⋆_x on k-forms (test helper; materializes C(n,k)² fields).
    pub fn coefficient(&self, k: usize, j: usize) -> EndomorphismField {
        let grid = self.grid().clone();
        EndomorphismField::from_action(&grid, k, self.n() - k, |e| {
            let mut s = FSeries::new();
            s.insert((0, 0), e.clone());
            self.star(&s, j).remove(&(j, 0)).unwrap_or_else(|| FormField::zeros(&grid, self.n() - k))
        })
    }

    /// Dense x^j coefficient of ⋆_x⁻¹ mapping (n−k)-forms to k-forms.
    pub fn inverse_coefficient(&self, k: usize, j: usize) -> EndomorphismField {
        let grid = self.grid().clone();
        EndomorphismField::from_action(&grid, self.n() - k, k, |e| {
            let mut s = FSeries::new();
            s.insert((0, 0), e.clone());
            self.star_inverse(&s, j).remove(&(j, 0)).unwrap_or_else(|| FormField::zeros(&grid, k))
        })
    }
}

/// Coefficient pair: tangential k-form and normal (k−1)-form (absent when k = 0).
#[derive(Debug, Clone, PartialEq)]
pub struct FormPair {
    pub t: FormField,
    pub n: Option<FormField>,
}

impl FormPair {
    pub fn zeros(grid: &TorusGrid, k: usize) -> Self {
        FormPair { t: FormField::zeros(grid, k), n: if k == 0 { None } else { Some(FormField::zeros(grid, k - 1)) } }
    }

    pub fn tangential(t: FormField) -> Self {
        let k = t.degree;
        let grid = t.grid.clone();
        FormPair { t, n: if k == 0 { None } else { Some(FormField::zeros(&grid, k - 1)) } }
    }

    /// β ∧ dx/x
    pub fn normal(beta: FormField) -> Self {
        let grid = beta.grid.clone();
        FormPair { t: FormField::zeros(&grid, beta.degree + 1), n: Some(beta) }
    }

    pub fn degree(&self) -> usize {
        self.n.as_ref().map(|b| b.degree + 1).unwrap_or(0)
    }

    pub fn axpy(&mut self, s: f64, other: &FormPair) {
        self.t.axpy(s, &other.t);
        if let (Some(a), Some(b)) = (self.n.as_mut(), other.n.as_ref()) {
            a.axpy(s, b);
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        FormPair { t: self.t.scale(s), n: self.n.as_ref().map(|b| b.scale(s)) }
    }

    pub fn max_abs(&self) -> f64 {
        self.t.max_abs().max(self.n.as_ref().map(|b| b.max_abs()).unwrap_or(0.0))
    }

    /// Coefficient of the interior product i_{x∂x}: (−1)^{k−1} times the normal part.
    pub fn interior_normal(&self) -> Option<FormField> {
        let k = self.degree();
        self.n.as_ref().map(|b| if k % 2 == 1 { b.clone() } else { b.scale(-1.0) })
    }
}

/// x^α Σ_{j,l} x^j log^l(x) (t_{j,l} + n_{j,l} ∧ dx/x), truncated at j ≤ order.
#[derive(Debug, Clone)]
pub struct LogSeriesForm {
    pub grid: TorusGrid,
    pub degree: usize,
    pub order: usize,
    pub shift: f64,
    pub terms: BTreeMap<(usize, usize), FormPair>,
}

impl LogSeriesForm {
    pub fn new(grid: &TorusGrid, degree: usize, order: usize, shift: f64) -> Self {
        LogSeriesForm { grid: grid.clone(), degree, order, shift, terms: BTreeMap::new() }
    }

    pub fn single(order: usize, shift: f64, j: usize, l: usize, c: FormPair) -> Result<Self> {
        let mut s = LogSeriesForm::new(&c.t.grid, c.degree(), order, shift);
        s.insert(j, l, c)?;
        Ok(s)
    }

    pub fn insert(&mut self, j: usize, l: usize, c: FormPair) -> Result<()> {
        if l > LOG_CAP {
            return Err(Error::LogCap(format!("log power {l} at order {j}")));
        }
        if j > self.order {
            return Ok(());
        }
        match self.terms.get_mut(&(j, l)) {
            Some(e) => e.axpy(1.0, &c),
            None => {
                self.terms.insert((j, l), c);
            }
        }
        Ok(())
    }

    pub fn add_scaled(&mut self, s: f64, other: &LogSeriesForm) -> Result<()> {
        for (&(j, l), c) in &other.terms {
            self.insert(j, l, c.scale(s))?;
        }
        Ok(())
    }

    pub fn get(&self, j: usize, l: usize) -> Option<&FormPair> {
        self.terms.get(&(j, l))
    }

    pub fn coefficient(&self, j: usize, l: usize) -> FormPair {
        self.get(j, l).cloned().unwrap_or_else(|| FormPair::zeros(&self.grid, self.degree))
    }

    fn part(&self, normal: bool) -> FSeries {
        self.terms
            .iter()
            .filter_map(|(k, c)| if normal { c.n.clone().map(|b| (*k, b)) } else { Some((*k, c.t.clone())) })
            .collect()
    }

    /// Evaluate the truncated series at a positive x.
    pub fn evaluate(&self, x: f64) -> FormPair {
        let mut out = FormPair::zeros(&self.grid, self.degree);
        for (&(j, l), c) in &self.terms {
            let w = x.powf(self.shift + j as f64) * x.ln().powi(l as i32);
            out.axpy(w, c);
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.max_abs()).fold(0.0, f64::max)
    }
}

/// x∂_x on a series with shift α: x^{α+j}log^l ↦ (α+j)x^{α+j}log^l + l x^{α+j}log^{l−1}.
fn x_dx(s: &FSeries, shift: f64) -> FSeries {
    let mut out = FSeries::new();
    for (&(j, l), w) in s {
        let e = shift + j as f64;
        if e != 0.0 {
            add_term(&mut out, (j, l), e, w);
        }
        if l > 0 {
            add_term(&mut out, (j, l - 1), l as f64, w);
        }
    }
    out
}

fn assemble(grid: &TorusGrid, degree: usize, order: usize, shift: f64, t: FSeries, n: FSeries) -> Result<LogSeriesForm> {
    let mut out = LogSeriesForm::new(grid, degree, order, shift);
    for ((j, l), w) in t {
        let mut c = FormPair::zeros(grid, degree);
        c.t = w;
        out.insert(j, l, c)?;
    }
    for ((j, l), w) in n {
        out.insert(j, l, FormPair::normal(w))?;
    }
    Ok(out)
}

/// Exterior derivative on the collar: (dω^t, (−1)^k x∂_x ω^t + dω^n).
pub fn apply_d(w: &LogSeriesForm) -> Result<LogSeriesForm> {
    let k = w.degree;
    let nn = w.grid.n();
    if k > nn {
        return Ok(LogSeriesForm::new(&w.grid, k + 1, w.order, w.shift));
    }
    let t = w.part(false);
    let mut tang = FSeries::new();
    if k < nn {
        for (key, c) in &t {
            let dc = d_unchecked(c);
            if !dc.is_zero() {
                tang.insert(*key, dc);
            }
        }
    }
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let mut norm = FSeries::new();
    for (key, c) in x_dx(&t, w.shift) {
        add_term(&mut norm, key, sign, &c);
    }
    for (key, c) in w.part(true) {
        let dc = d_unchecked(&c);
        add_term(&mut norm, key, 1.0, &dc);
    }
    let mut out = assemble(&w.grid, k + 1, w.order, w.shift, tang, FSeries::new())?;
    for ((j, l), c) in norm {
        let mut p = FormPair::normal(c);
        if k + 1 > nn {
            p.t = FormField::zeros(&w.grid, k + 1);
        }
        out.insert(j, l, p)?;
    }
    Ok(out)
}

/// δ_x = (−1)^k ⋆_x⁻¹ d ⋆_x applied to a series of k-forms (k ≥ 1), truncated at max_j.
fn delta_x(s: &FSeries, k: usize, star: &StarSeries, max_j: usize) -> FSeries {
    let st = star.star(s, max_j);
    let dst: FSeries = st.into_iter().map(|(key, w)| (key, d_unchecked(&w))).collect();
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    star.star_inverse(&dst, max_j).into_iter().map(|(key, w)| (key, w.scale(sign))).collect()
}

fn shift2(s: FSeries, max_j: usize) -> FSeries {
    s.into_iter().filter(|((j, _), _)| j + 2 <= max_j).map(|((j, l), w)| ((j + 2, l), w)).collect()
}

/// Codifferential of the collar metric g = x⁻²(dx² + h_x) on a series.
pub fn apply_delta(w: &LogSeriesForm, star: &StarSeries) -> Result<LogSeriesForm> {
    let k = w.degree;
    let nn = w.grid.n();
    if k == 0 {
        return Err(Error::Degree("codifferential of a collar 0-form".into()));
    }
    if !star.is_flat() && w.order > star.order {
        return Err(Error::Truncation(format!("series order {} exceeds star order {}", w.order, star.order)));
    }
    let n_order = w.order;
    let t = w.part(false);
    let nrm = w.part(true);
    // tangential output
    let mut tang = FSeries::new();
    if k <= nn && n_order >= 2 {
        for (key, c) in shift2(delta_x(&t, k, star, n_order - 2), n_order) {
            add_term(&mut tang, key, 1.0, &c);
        }
    }
    if !nrm.is_empty() {
        // (−1)^k ⋆⁻¹ (2k−n−2 + x∂_x) ⋆ on the normal (k−1)-forms; the flat permutation cancels.
        let c0 = 2.0 * k as f64 - nn as f64 - 2.0;
        let raised: FSeries = nrm.iter().map(|(key, b)| (*key, star.base_raise(b))).collect();
        let ts = star.apply_exp(&raised, 1.0, n_order);
        let mut op = x_dx(&ts, w.shift);
        for (key, c) in &ts {
            add_term(&mut op, *key, c0, c);
        }
        let back = star.apply_exp(&op, -1.0, n_order);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        for (key, c) in back {
            add_term(&mut tang, key, sign, &star.base_lower(&c));
        }
    }
    let mut norm = FSeries::new();
    if k >= 2 && n_order >= 2 {
        norm = shift2(delta_x(&nrm, k - 1, star, n_order - 2), n_order);
    }
    if k - 1 > nn {
        tang.clear();
    }
    let mut out = assemble(&w.grid, k - 1, w.order, w.shift, tang, FSeries::new())?;
    for ((j, l), c) in norm {
        out.insert(j, l, FormPair::normal(c))?;
    }
    Ok(out)
}

/// (dδ_g + δ_g d − λ) on a series.
pub fn apply_laplacian(w: &LogSeriesForm, star: &StarSeries, lambda: f64) -> Result<LogSeriesForm> {
    let nn = w.grid.n();
    let mut out = LogSeriesForm::new(&w.grid, w.degree, w.order, w.shift);
    if w.degree <= nn {
        let dw = apply_d(w)?;
        out.add_scaled(1.0, &apply_delta(&dw, star)?)?;
    }
    if w.degree > 0 {
        let dl = apply_delta(w, star)?;
        out.add_scaled(1.0, &apply_d(&dl)?)?;
    }
    if lambda != 0.0 {
        out.add_scaled(-lambda, w)?;
    }
    Ok(out)
}

/// Slice metric g restricted to boundary directions is x⁻²h_x; helper returning h_x at x.
pub fn slice_metric(ms: &MetricSeries, x: f64) -> Result<Metric> {
    ms.evaluate(x)
}

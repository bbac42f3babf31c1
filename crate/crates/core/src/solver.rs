//! Order-by-order formal solutions of (Δ_k − λ)ω = 0 near the boundary and the operators
//! read off from their first obstructions.

use crate::error::{Error, Result};
use crate::exterior::{d_unchecked, delta_unchecked};
use crate::fields::FormField;
use crate::series::{apply_d, apply_delta, apply_laplacian, FormPair, LogSeriesForm, StarSeries};
use std::collections::BTreeMap;

/// Relative size below which a residual at an indicial root counts as zero.
pub const ROOT_TOL: f64 = 1e-10;

/// Exponent data of the shifted operator Δ_k − λ with λ = (n/2−k)² − ℓ².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicialData {
    pub n: usize,
    pub k: usize,
    pub ell: usize,
    pub lambda: f64,
    pub shift: usize,
}

impl IndicialData {
    pub fn new(n: usize, k: usize, ell: usize) -> Result<Self> {
        if n % 2 != 0 || 2 * k >= n {
            return Err(Error::Params(format!("need even n and k < n/2, got n={n}, k={k}")));
        }
        let m = n / 2 - k;
        if ell == 0 || ell > m {
            return Err(Error::Params(format!("ℓ={ell} outside [1, {m}]")));
        }
        let lambda = (m * m) as f64 - (ell * ell) as f64;
        Ok(IndicialData { n, k, ell, lambda, shift: m - ell })
    }

    pub fn critical(n: usize, k: usize) -> Result<Self> {
        if 2 * k >= n {
            return Err(Error::Params(format!("critical case needs k < n/2, got k={k}")));
        }
        Self::new(n, k, n / 2 - k)
    }

    pub fn is_critical(&self) -> bool {
        self.shift == 0
    }

    /// Scalar indicial factor on tangential coefficients at relative order j.
    pub fn d_t(&self, j: usize) -> f64 {
        let s = (self.shift + j) as f64;
        s * ((self.n - 2 * self.k) as f64 - s) - self.lambda
    }

    /// Scalar indicial factor on normal coefficients at relative order j.
    pub fn d_n(&self, j: usize) -> f64 {
        let s = (self.shift + j) as f64;
        s * ((self.n - 2 * self.k + 2) as f64 - s) - self.lambda
    }

    /// Tangential roots relative to the shift.
    pub fn tangential_roots(&self) -> [f64; 2] {
        [0.0, 2.0 * self.ell as f64]
    }

    /// Normal roots relative to the shift: n/2−k+1 ± √(ℓ²+n+1−2k) − α.
    pub fn normal_roots(&self) -> [f64; 2] {
        let c = (self.n / 2 - self.k + 1) as f64;
        let r = ((self.ell * self.ell + self.n + 1 - 2 * self.k) as f64).sqrt();
        [c - r - self.shift as f64, c + r - self.shift as f64]
    }
}

fn rel(v: f64, scale: f64) -> f64 {
    v / scale.max(f64::MIN_POSITIVE)
}

/// Solves P_j c = −r triangularly (normal part first), for the problem described by `idx`.
pub fn indicial_solve(j: usize, r: &FormPair, idx: &IndicialData) -> Result<FormPair> {
    indicial_solve_scaled(j, r, idx, r.max_abs(), true)
}

fn indicial_solve_scaled(j: usize, r: &FormPair, idx: &IndicialData, scale: f64, tangential: bool) -> Result<FormPair> {
    let k = r.degree();
    let mut c = FormPair::zeros(&r.t.grid, k);
    if let (Some(rn), Some(cn)) = (r.n.as_ref(), c.n.as_mut()) {
        let dn = idx.d_n(j);
        if dn == 0.0 {
            if rel(rn.max_abs(), scale) > ROOT_TOL {
                return Err(Error::IndicialRoot { order: j as i32, residual: rn.max_abs() });
            }
        } else {
            *cn = rn.scale(-1.0 / dn);
        }
    }
    if !tangential {
        return Ok(c);
    }
    let mut rt = r.t.clone();
    if let Some(cn) = c.n.as_ref() {
        if k >= 1 && !cn.is_zero() {
            let s = if k % 2 == 1 { 2.0 } else { -2.0 };
            rt.axpy(s, &d_unchecked(cn));
        }
    }
    let dt = idx.d_t(j);
    if dt == 0.0 {
        if rel(rt.max_abs(), scale) > ROOT_TOL {
            return Err(Error::IndicialRoot { order: j as i32, residual: rt.max_abs() });
        }
    } else {
        c.t = rt.scale(-1.0 / dt);
    }
    Ok(c)
}

/// A formal solution together with its Laplace residual (Δ−λ)ω.
#[derive(Debug, Clone)]
pub struct FormalSolution {
    pub series: LogSeriesForm,
    pub residual: LogSeriesForm,
}

/// Operators read off from a formal solution, keyed by name.
#[derive(Debug, Clone)]
pub struct BGExtraction {
    pub input: FormField,
    pub series: LogSeriesForm,
    pub fields: BTreeMap<String, FormField>,
}

impl BGExtraction {
    pub fn get(&self, name: &str) -> Option<&FormField> {
        self.fields.get(name)
    }
}

fn add_single(
    sol: &mut FormalSolution,
    star: &StarSeries,
    lambda: f64,
    j: usize,
    c: FormPair,
) -> Result<()> {
    if c.max_abs() == 0.0 {
        return Ok(());
    }
    let single = LogSeriesForm::single(sol.series.order, sol.series.shift, j, 0, c.clone())?;
    let lap = apply_laplacian(&single, star, lambda)?;
    sol.residual.add_scaled(1.0, &lap)?;
    sol.series.insert(j, 0, c)?;
    Ok(())
}

fn guard_zero(sol: &FormalSolution, j: usize, scale: f64, tangential: bool, normal: bool) -> Result<()> {
    let c = sol.residual.coefficient(j, 0);
    let t = if tangential { c.t.max_abs() } else { 0.0 };
    let n = if normal { c.n.as_ref().map(|b| b.max_abs()).unwrap_or(0.0) } else { 0.0 };
    let r = rel(t.max(n), scale);
    if r > 1e-8 {
        return Err(Error::Guard(format!("residual at order {j} is {r:e} after solving")));
    }
    Ok(())
}

/// The even series ω_{F₁} = x^α(Σ x^{2j}ω^t_{2j} + Σ x^{2j}ω^n_{2j}∧dx/x) with ω^t_0 = ω₀, solving
/// (Δ−λ)ω_{F₁} = O_t(x^{α+2ℓ}) + O_n(x^{α+2ℓ+2}). An optional tangential term `v` is placed at
/// the formally undetermined order x^{α+2ℓ}.
pub fn solve_absolute_series(
    w0: &FormField,
    idx: &IndicialData,
    star: &StarSeries,
    v: Option<&FormField>,
) -> Result<FormalSolution> {
    let k = idx.k;
    if w0.degree != k || w0.grid.n() != idx.n {
        return Err(Error::Degree(format!("input degree {} does not match k={k}", w0.degree)));
    }
    let top = 2 * idx.ell;
    let order = if k == 0 { top } else { top + 2 };
    let grid = &w0.grid;
    let mut sol = FormalSolution {
        series: LogSeriesForm::new(grid, k, order, idx.shift as f64),
        residual: LogSeriesForm::new(grid, k, order, idx.shift as f64),
    };
    let scale = w0.max_abs();
    add_single(&mut sol, star, idx.lambda, 0, FormPair::tangential(w0.clone()))?;
    guard_zero(&sol, 0, scale, true, true)?;
    for j in (2..=top).step_by(2) {
        let r = sol.residual.coefficient(j, 0);
        // the tangential root at 2ℓ is where the obstruction lives
        let c = indicial_solve_scaled(j, &r, idx, scale, j < top)?;
        add_single(&mut sol, star, idx.lambda, j, c)?;
        guard_zero(&sol, j, scale, j < top, true)?;
    }
    if let Some(v) = v {
        add_single(&mut sol, star, idx.lambda, top, FormPair::tangential(v.clone()))?;
    }
    Ok(sol)
}

fn interior_normal(c: &FormPair) -> FormField {
    c.interior_normal().expect("normal part present")
}

/// L_k^ℓ ω₀ = (1/2ℓ)·(tangential coefficient of (Δ−λ)ω_{F₁} at relative order 2ℓ).
pub fn extract_lk_ell(sol: &FormalSolution, idx: &IndicialData) -> Result<FormField> {
    let top = 2 * idx.ell;
    let scale = sol.series.coefficient(0, 0).t.max_abs();
    for j in 0..top {
        let c = sol.residual.coefficient(j, 0);
        if rel(c.max_abs(), scale) > 1e-8 {
            return Err(Error::Guard(format!("residual at order {j} below extraction is {:e}", c.max_abs())));
        }
    }
    Ok(sol.residual.coefficient(top, 0).t.scale(1.0 / top as f64))
}

/// (B_k, C_k, D_k) of a critical solution; D_k is meaningful for closed inputs.
pub fn extract_bk_ck_dk(sol: &FormalSolution, idx: &IndicialData, star: &StarSeries) -> Result<(FormField, FormField, FormField)> {
    if !idx.is_critical() {
        return Err(Error::Params("B_k, C_k, D_k need the critical series".into()));
    }
    if idx.k == 0 {
        return Err(Error::Params("B_k, C_k, D_k need k ≥ 1".into()));
    }
    let m = idx.n - 2 * idx.k;
    let b = interior_normal(&sol.residual.coefficient(m + 2, 0));
    let delta = apply_delta(&sol.series, star)?;
    let c = delta.coefficient(m + 2, 0).t;
    let dw = apply_d(&sol.series)?;
    let d = interior_normal(&dw.coefficient(m, 0));
    Ok((b, c, d))
}

/// δ_g ω_{F₁} as a series (used for the decay identities).
pub fn delta_of_solution(sol: &FormalSolution, star: &StarSeries) -> Result<LogSeriesForm> {
    apply_delta(&sol.series, star)
}

pub fn operator_lk_ell(w0: &FormField, ell: usize, star: &StarSeries) -> Result<FormField> {
    let idx = IndicialData::new(w0.grid.n(), w0.degree, ell)?;
    let sol = solve_absolute_series(w0, &idx, star, None)?;
    extract_lk_ell(&sol, &idx)
}

pub fn operator_lk(w0: &FormField, star: &StarSeries) -> Result<FormField> {
    let idx = IndicialData::critical(w0.grid.n(), w0.degree)?;
    let sol = solve_absolute_series(w0, &idx, star, None)?;
    extract_lk_ell(&sol, &idx)
}

/// Full critical extraction: L_k, B_k, C_k, D_k and G_k.
pub fn extract_critical(w0: &FormField, star: &StarSeries, v: Option<&FormField>) -> Result<BGExtraction> {
    let n = w0.grid.n();
    let k = w0.degree;
    let idx = IndicialData::critical(n, k)?;
    let sol = solve_absolute_series(w0, &idx, star, v)?;
    let mut fields = BTreeMap::new();
    fields.insert("Lk".to_string(), extract_lk_ell(&sol, &idx)?);
    if k >= 1 {
        let (b, c, d) = extract_bk_ck_dk(&sol, &idx, star)?;
        let s = if k % 2 == 1 { 1.0 } else { -1.0 } / (n - 2 * k) as f64;
        let mut g = b.clone();
        g.axpy(-2.0, &c);
        fields.insert("Gk".to_string(), g.scale(s));
        fields.insert("Bk".to_string(), b);
        fields.insert("Ck".to_string(), c);
        fields.insert("Dk".to_string(), d);
    }
    Ok(BGExtraction { input: w0.clone(), series: sol.series, fields })
}

/// G_k for 0 < k < n/2 by the series; G_{n/2} = (−1)^{n/2+1}δ₀.
pub fn operator_gk(w0: &FormField, star: &StarSeries) -> Result<FormField> {
    operator_gk_with(w0, star, None)
}

pub fn operator_gk_with(w0: &FormField, star: &StarSeries, v: Option<&FormField>) -> Result<FormField> {
    let n = w0.grid.n();
    let k = w0.degree;
    if 2 * k == n {
        let s = if (n / 2) % 2 == 1 { 1.0 } else { -1.0 };
        return Ok(delta_unchecked(w0, &star.base).scale(s));
    }
    if k == 0 || 2 * k > n {
        return Err(Error::Params(format!("G_k needs 0 < k ≤ n/2, got k={k}")));
    }
    Ok(extract_critical(w0, star, v)?.fields.remove("Gk").expect("G_k present"))
}

fn check_closed(w0: &FormField) -> Result<()> {
    if w0.degree >= w0.grid.n() {
        return Ok(());
    }
    let d = d_unchecked(w0).max_abs();
    if d > 1e-9 * w0.max_abs().max(1.0) {
        return Err(Error::NotClosed(d));
    }
    Ok(())
}

/// The series ω'_{F₁} = ω₀∧dx/x + Σ_{j≥1} x^{2j}(ω^t_{2j} + ω^n_{2j}∧dx/x) of degree p+1 with
/// Δω'_{F₁} = O(x^{n−2p}); `v` optionally sets the undetermined tangential term at x^{n−2p−2}.
pub fn solve_relative_series(w0: &FormField, star: &StarSeries, v: Option<&FormField>) -> Result<FormalSolution> {
    check_closed(w0)?;
    let n = w0.grid.n();
    let p = w0.degree;
    let k = p + 1;
    if 2 * k > n {
        return Err(Error::Params(format!("relative series needs p ≤ n/2−1, got p={p}")));
    }
    let idx = IndicialData { n, k, ell: n / 2 - k, lambda: 0.0, shift: 0 };
    let m = n - 2 * k;
    let order = m + 2;
    let grid = &w0.grid;
    let mut sol = FormalSolution { series: LogSeriesForm::new(grid, k, order, 0.0), residual: LogSeriesForm::new(grid, k, order, 0.0) };
    let scale = w0.max_abs();
    add_single(&mut sol, star, 0.0, 0, FormPair::normal(w0.clone()))?;
    guard_zero(&sol, 0, scale, true, true)?;
    for j in (2..=m).step_by(2) {
        let r = sol.residual.coefficient(j, 0);
        let c = indicial_solve_scaled(j, &r, &idx, scale, j < m)?;
        add_single(&mut sol, star, 0.0, j, c)?;
        guard_zero(&sol, j, scale, true, true)?;
    }
    if let Some(v) = v {
        if m == 0 {
            return Err(Error::Params("no undetermined tangential term when p = n/2−1".into()));
        }
        add_single(&mut sol, star, 0.0, m, FormPair::tangential(v.clone()))?;
    }
    // the tangential log coefficient vanishes: the residual at the root must be zero
    let rt = sol.residual.coefficient(m, 0).t.max_abs();
    if rel(rt, scale) > 1e-8 {
        return Err(Error::Guard(format!("tangential log coefficient {rt:e} does not vanish")));
    }
    Ok(sol)
}

/// B'_p, D'_p and Q_p of a closed p-form.
pub fn extract_relative(w0: &FormField, star: &StarSeries, v: Option<&FormField>) -> Result<BGExtraction> {
    let n = w0.grid.n();
    let p = w0.degree;
    let k = p + 1;
    let m = n - 2 * k;
    let sol = solve_relative_series(w0, star, v)?;
    let bp = interior_normal(&sol.residual.coefficient(m + 2, 0));
    let mut fields = BTreeMap::new();
    let s = if k % 2 == 1 { 1.0 } else { -1.0 } / (m + 2) as f64;
    let mut q = bp.clone();
    if m > 0 {
        let dw = apply_d(&sol.series)?;
        let dp = interior_normal(&dw.coefficient(m, 0));
        q.axpy(-2.0 / m as f64, &delta_unchecked(&dp, &star.base));
        fields.insert("Dpk".to_string(), dp);
    }
    fields.insert("Qk".to_string(), q.scale(s));
    fields.insert("Bpk".to_string(), bp);
    Ok(BGExtraction { input: w0.clone(), series: sol.series, fields })
}

/// Q_p on closed p-forms, 0 ≤ p ≤ n/2−1.
pub fn operator_qk(w0: &FormField, star: &StarSeries) -> Result<FormField> {
    Ok(extract_relative(w0, star, None)?.fields.remove("Qk").expect("Q_k present"))
}

pub fn operator_qk_with(w0: &FormField, star: &StarSeries, v: Option<&FormField>) -> Result<FormField> {
    Ok(extract_relative(w0, star, v)?.fields.remove("Qk").expect("Q_k present"))
}

/// Operator names accepted by [`apply_named`].
pub const OPERATORS: [&str; 9] = ["Lk", "Lk_ell", "Gk", "Qk", "Bk", "Ck", "Dk", "Bpk", "Dpk"];

/// Applies an operator by name; `ell` is required for "Lk_ell".
pub fn apply_named(name: &str, w0: &FormField, ell: Option<usize>, star: &StarSeries) -> Result<FormField> {
    let take = |mut ex: BGExtraction, key: &str| {
        ex.fields.remove(key).ok_or_else(|| Error::Params(format!("{key} is not defined for degree {}", w0.degree)))
    };
    match name {
        "Lk" => operator_lk(w0, star),
        "Lk_ell" => {
            let ell = ell.ok_or_else(|| Error::Params("Lk_ell needs ell".into()))?;
            operator_lk_ell(w0, ell, star)
        }
        "Gk" => operator_gk(w0, star),
        "Qk" => operator_qk(w0, star),
        "Bk" | "Ck" | "Dk" => {
            if name == "Dk" {
                check_closed(w0)?;
            }
            take(extract_critical(w0, star, None)?, name)
        }
        "Bpk" | "Dpk" => take(extract_relative(w0, star, None)?, name),
        other => Err(Error::Params(format!("unknown operator {other}; expected one of {OPERATORS:?}"))),
    }
}

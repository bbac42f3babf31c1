//! Closed-form operators in dimensions 4 and 6, generic low-order formulas, and normalization constants.

use crate::curvature::{full_contract, metric_square, CurvatureData};
use crate::error::{Error, Result};
use crate::exterior::{d_unchecked, delta_unchecked, form_laplacian, j_sym_apply, raise_first, trace, Metric};
use crate::fields::{FormField, ScalarField, TensorField};
use crate::spectral::partial;

fn factorial(m: usize) -> f64 {
    (1..=m).map(|i| i as f64).product()
}

/// Normalization and principal-part constants.
#[derive(Debug, Clone, Copy)]
pub struct ConstantTable {
    pub n: usize,
}

impl ConstantTable {
    pub fn new(n: usize) -> Self {
        ConstantTable { n }
    }

    /// c_k^ℓ = (−4)^ℓ (ℓ−1)! (ℓ+1)! (k − n/2 − ℓ)
    pub fn c_k_ell(&self, k: usize, ell: usize) -> f64 {
        (-4.0f64).powi(ell as i32) * factorial(ell - 1) * factorial(ell + 1) * (k as f64 - self.n as f64 / 2.0 - ell as f64)
    }

    /// c_k = (−1)^{n/2−k−1} 2^{n−2k+1} ((n/2−k)!)² (n/2−k+1)
    pub fn c_k(&self, k: usize) -> f64 {
        let m = self.n / 2 - k;
        let s = if (m + 1) % 2 == 0 { 1.0 } else { -1.0 };
        s * 2f64.powi((self.n - 2 * k + 1) as i32) * factorial(m).powi(2) * (m as f64 + 1.0)
    }

    /// Coefficient of Δ^{n/2−k} in Q_k (and of (δd)^{n/2−k} in L_k).
    pub fn principal_q(&self, k: usize) -> f64 {
        let m = self.n / 2 - k;
        let s = if (self.n / 2 + k + 1) % 2 == 0 { 1.0 } else { -1.0 };
        s * (self.n - 2 * k) as f64 / (2f64.powi((self.n - 2 * k) as i32) * factorial(m).powi(2))
    }

    /// Coefficient of (δd)^{n/2−k}δ in G_k.
    pub fn principal_g(&self, k: usize) -> f64 {
        let m = self.n / 2 - k;
        let s = if (self.n / 2 + 1) % 2 == 0 { 1.0 } else { -1.0 };
        s / (2f64.powi((self.n - 2 * k) as i32) * factorial(m).powi(2))
    }

    /// Coefficients (of (δd)^ℓ, of (dδ)^ℓ) in L_k^ℓ.
    pub fn principal_l_ell(&self, k: usize, ell: usize) -> (f64, f64) {
        let s = if (ell + 1) % 2 == 0 { 1.0 } else { -1.0 };
        let c = s * ell as f64 / (2f64.powi(2 * ell as i32 - 1) * factorial(ell).powi(2));
        let r = (self.n as f64 - 2.0 * k as f64 - 2.0 * ell as f64) / (self.n as f64 - 2.0 * k as f64 + 2.0 * ell as f64);
        (c, c * r)
    }

    /// Critical flat series coefficients: ω^t_{2i} = a_{2i}(δd)^i + b_{2i}(dδ)^i, ω^n_{2i+2} = a_{2i+1}(δd)^iδ.
    pub fn a_even(&self, k: usize, i: usize) -> f64 {
        let prod: f64 = (1..=i).map(|j| (2 * k + 2 * j) as f64 - self.n as f64).product();
        1.0 / (2f64.powi(i as i32) * factorial(i) * prod)
    }

    pub fn a_odd(&self, k: usize, i: usize) -> f64 {
        let prod: f64 = (0..=i).map(|j| (2 * k + 2 * j) as f64 - self.n as f64).product();
        let s = if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };
        s / (2f64.powi(i as i32) * factorial(i) * prod)
    }

    pub fn b_even(&self, k: usize, i: usize) -> f64 {
        let prod: f64 = (0..i).map(|j| (2 * k + 2 * j) as f64 - self.n as f64).product();
        1.0 / (2f64.powi(i as i32) * factorial(i) * prod)
    }

    /// Coefficient of (δd)^{n/2−k}δ in B_k on the flat torus.
    pub fn principal_b(&self, k: usize) -> f64 {
        let m = self.n / 2 - k;
        let prod: f64 = (0..m).map(|j| (2 * k + 2 * j) as f64 - self.n as f64).product();
        1.0 / (2f64.powi(m as i32 - 1) * factorial(m - 1) * prod)
    }
}

/// Prefactors of G₁, Q₁, L₀ exactly as displayed in the dimension-6 formulas.
pub const DIM6_PRINTED_PREFACTORS: [(&str, f64); 3] = [("G1", 1.0 / 16.0), ("Q1", -1.0 / 4.0), ("L0", 1.0 / 96.0)];

/// Prefactors of G₁, Q₁, L₀ fixed by the principal parts and by G₁ = −δQ₁/4, L₀ = G₁d/6.
pub const DIM6_PREFACTORS: [(&str, f64); 3] = [("G1", 1.0 / 64.0), ("Q1", -1.0 / 16.0), ("L0", 1.0 / 384.0)];

fn dim6_prefactor(name: &str) -> f64 {
    DIM6_PREFACTORS.iter().find(|(n, _)| *n == name).map(|(_, v)| *v).expect("known prefactor")
}

/// Boundary geometry and the elementary operators the closed forms are written in.
pub struct Geometry<'a> {
    pub curv: &'a CurvatureData,
}

impl<'a> Geometry<'a> {
    pub fn new(curv: &'a CurvatureData) -> Self {
        Geometry { curv }
    }

    fn m(&self) -> &Metric {
        &self.curv.metric
    }

    pub fn d(&self, w: &FormField) -> FormField {
        d_unchecked(w)
    }

    pub fn delta(&self, w: &FormField) -> FormField {
        delta_unchecked(w, self.m())
    }

    pub fn lap(&self, w: &FormField) -> FormField {
        form_laplacian(w, self.m())
    }

    /// j(H) = J(h⁻¹H)
    pub fn j(&self, h: &TensorField, w: &FormField) -> FormField {
        j_sym_apply(h, self.m(), w)
    }

    /// j♯(H) = 2j(H) − tr(H)
    pub fn j_sharp(&self, h: &TensorField, w: &FormField) -> FormField {
        let mut out = self.j(h, w).scale(2.0);
        out.axpy(-1.0, &w.mul_scalar(&self.tr(h)));
        out
    }

    pub fn tr(&self, h: &TensorField) -> ScalarField {
        trace(&raise_first(h, self.m()))
    }

    pub fn scal(&self) -> &ScalarField {
        &self.curv.scal
    }

    /// Symmetric tensor a·Ric + b·Scal·h.
    pub fn ric_scal(&self, a: f64, b: f64) -> TensorField {
        let grid = self.m().grid();
        let n = grid.n();
        let mut t = self.curv.ricci.scale(a);
        for x in 0..n {
            for y in 0..n {
                let h = self.m().h.comp(&[x, y]).to_vec();
                let s = &self.curv.scal.values;
                t.comp_mut(&[x, y]).iter_mut().zip(h.iter().zip(s)).for_each(|(o, (hv, sv))| *o += b * hv * sv);
            }
        }
        t
    }

    /// Laplacian of a function.
    pub fn lap_fn(&self, f: &ScalarField) -> ScalarField {
        self.lap(&FormField::from_scalar(f)).to_scalar()
    }

    /// Ric^{ab}∇_a∇_b f
    pub fn ric_hess(&self, f: &ScalarField) -> ScalarField {
        let grid = self.m().grid();
        let n = grid.n();
        let len = grid.len();
        let df: Vec<Vec<f64>> = (0..n).map(|a| partial(grid, &f.values, a, 1)).collect();
        let mut hess = TensorField::zeros(grid, 2);
        for a in 0..n {
            for b in a..n {
                let mut v = partial(grid, &df[a], b, 1);
                for c in 0..n {
                    let g = self.curv.christoffel.comp(&[c, a, b]);
                    for p in 0..len {
                        v[p] -= g[p] * df[c][p];
                    }
                }
                hess.comp_mut(&[a, b]).copy_from_slice(&v);
                hess.comp_mut(&[b, a]).copy_from_slice(&v);
            }
        }
        full_contract(self.m(), &self.curv.ricci, &hess)
    }
}

fn add(a: &FormField, s: f64, b: &FormField) -> FormField {
    let mut o = a.clone();
    o.axpy(s, b);
    o
}

fn check_dim(curv: &CurvatureData, n: usize) -> Result<()> {
    if curv.metric.n() != n {
        return Err(Error::Dimension(curv.metric.n()));
    }
    Ok(())
}

fn check_degree(w: &FormField, k: usize, name: &str) -> Result<()> {
    if w.degree != k {
        return Err(Error::Degree(format!("{name} acts on {k}-forms, got degree {}", w.degree)));
    }
    Ok(())
}

/// (Δ − c₁ j(Ric) + c₂ Scal) ω
fn shifted_laplacian(g: &Geometry, w: &FormField, c1: f64, c2: f64) -> FormField {
    let mut out = g.lap(w);
    out.axpy(-c1, &g.j(&g.curv.ricci, w));
    out.axpy(c2, &w.mul_scalar(g.scal()));
    out
}

/// Closed-form operators in dimension 4: L1, G1, Q1, L0, Q0, G0.
pub fn ref_dim4(name: &str, w: &FormField, curv: &CurvatureData) -> Result<FormField> {
    check_dim(curv, 4)?;
    let g = Geometry::new(curv);
    match name {
        "L1" => {
            check_degree(w, 1, name)?;
            Ok(g.delta(&g.d(w)).scale(0.5))
        }
        "G1" => {
            check_degree(w, 1, name)?;
            Ok(g.delta(&shifted_laplacian(&g, w, 2.0, 2.0 / 3.0)).scale(-0.25))
        }
        "Q1" => {
            check_degree(w, 1, name)?;
            Ok(shifted_laplacian(&g, w, 2.0, 2.0 / 3.0).scale(0.5))
        }
        "L0" => {
            check_degree(w, 0, name)?;
            Ok(g.delta(&shifted_laplacian(&g, &g.d(w), 2.0, 2.0 / 3.0)).scale(-1.0 / 16.0))
        }
        "G0" => {
            check_degree(w, 0, name)?;
            Ok(FormField::zeros(&w.grid, 0))
        }
        "Q0" => {
            check_degree(w, 0, name)?;
            let s = g.scal();
            let mut q = g.lap_fn(s);
            let r2 = curv.ricci_norm2();
            for ((o, r), sv) in q.values.iter_mut().zip(&r2.values).zip(&s.values) {
                *o = -(*o - 3.0 * r + sv * sv) / 24.0;
            }
            Ok(w.mul_scalar(&q))
        }
        _ => Err(Error::Params(format!("unknown dimension-4 operator {name}"))),
    }
}

/// The common bracket of G₁, Q₁, L₀ in dimension 6, applied to a 1-form η (Q₁ form).
fn dim6_q1_bracket(g: &Geometry, eta: &FormField) -> FormField {
    let curv = g.curv;
    let m = &curv.metric;
    let lap = g.lap(eta);
    let mut out = g.lap(&lap);
    // −(dδ/2) j(Ric − 3/10 Scal)
    let t1 = g.j(&g.ric_scal(1.0, -0.3), eta);
    out.axpy(-0.5, &g.d(&g.delta(&t1)));
    // −j(2Ric − 3/5 Scal)Δ
    out.axpy(-1.0, &g.j(&g.ric_scal(2.0, -0.6), &lap));
    // −d(Scal δη)/20
    out.axpy(-1.0 / 20.0, &g.d(&g.delta(eta).mul_scalar(g.scal())));
    // + j(2B − tr B + 3Ric²/4 − 16 Scal Ric/5 + 449 Scal²/100)
    let n = m.n();
    let grid = m.grid();
    let ric2 = metric_square(m, &curv.ricci);
    let trb = g.tr(&curv.bach);
    let mut h = curv.bach.scale(2.0).add(&ric2.scale(0.75));
    for a in 0..n {
        for b in 0..n {
            let hv = m.h.comp(&[a, b]).to_vec();
            let rv = curv.ricci.comp(&[a, b]).to_vec();
            let o = h.comp_mut(&[a, b]);
            for p in 0..grid.len() {
                let s = curv.scal.values[p];
                o[p] += -trb.values[p] * hv[p] - 3.2 * s * rv[p] + 4.49 * s * s * hv[p];
            }
        }
    }
    out.axpy(1.0, &g.j(&h, eta));
    out
}

/// Closed-form operators in dimension 6: L2, G2, Q2, L1, G1, Q1, L0, G0, Q0.
pub fn ref_dim6(name: &str, w: &FormField, curv: &CurvatureData) -> Result<FormField> {
    check_dim(curv, 6)?;
    let g = Geometry::new(curv);
    match name {
        "L2" => {
            check_degree(w, 2, name)?;
            Ok(g.delta(&g.d(w)).scale(0.5))
        }
        "G2" => {
            check_degree(w, 2, name)?;
            Ok(g.delta(&shifted_laplacian(&g, w, 1.0, 0.4)).scale(0.25))
        }
        "Q2" => {
            check_degree(w, 2, name)?;
            Ok(shifted_laplacian(&g, w, 1.0, 0.4).scale(0.5))
        }
        "L1" => {
            check_degree(w, 1, name)?;
            Ok(g.delta(&shifted_laplacian(&g, &g.d(w), 1.0, 0.4)).scale(-1.0 / 16.0))
        }
        "Q1" => {
            check_degree(w, 1, name)?;
            Ok(dim6_q1_bracket(&g, w).scale(dim6_prefactor("Q1")))
        }
        "G1" => {
            check_degree(w, 1, name)?;
            // δ applied to the Q₁ bracket reproduces the displayed G₁ bracket term by term
            Ok(g.delta(&dim6_q1_bracket(&g, w)).scale(dim6_prefactor("G1")))
        }
        "L0" => {
            check_degree(w, 0, name)?;
            Ok(g.delta(&dim6_q1_bracket(&g, &g.d(w))).scale(dim6_prefactor("L0")))
        }
        "G0" => {
            check_degree(w, 0, name)?;
            Ok(FormField::zeros(&w.grid, 0))
        }
        "Q0" => {
            check_degree(w, 0, name)?;
            Ok(w.mul_scalar(&dim6_q0(&g)))
        }
        _ => Err(Error::Params(format!("unknown dimension-6 operator {name}"))),
    }
}

/// Q₀1 in dimension 6.
pub fn dim6_q0(g: &Geometry) -> ScalarField {
    let curv = g.curv;
    let m = &curv.metric;
    let s = g.scal();
    let ls = g.lap_fn(s);
    let l2s = g.lap_fn(&ls);
    let rh = g.ric_hess(s);
    let trb = g.tr(&curv.bach);
    let ltrb = g.lap_fn(&trb);
    let p = &curv.schouten;
    let p2n = full_contract(m, p, p);
    let lp2 = g.lap_fn(&p2n);
    // tr(P³) = (P²)^a_b P^b_a
    let p2u = raise_first(&metric_square(m, p), m);
    let pu = raise_first(p, m);
    let n = m.n();
    let len = m.grid().len();
    let mut trp3 = vec![0.0; len];
    for a in 0..n {
        for b in 0..n {
            let x = p2u.comp(&[a, b]);
            let y = pu.comp(&[b, a]);
            for q in 0..len {
                trp3[q] += x[q] * y[q];
            }
        }
    }
    let pb = full_contract(m, p, &curv.bach);
    let mut v = vec![0.0; len];
    for q in 0..len {
        let sv = s.values[q];
        v[q] = (l2s.values[q] + sv * ls.values[q] + 2.0 * rh.values[q] - 20.0 * ltrb.values[q] - 40.0 * lp2.values[q]
            + 0.08 * sv * sv * sv
            - 12.0 * sv * trb.values[q]
            - 80.0 * trp3[q]
            - 80.0 * pb.values[q])
            / 640.0;
    }
    ScalarField { grid: m.grid().clone(), values: v }
}

/// Generic formulas valid for all even n:
/// "G_crit" = G_{n/2−1}, "L_crit2" = L_{n/2−2}, "Q_crit" = Q_{n/2−1},
/// "L1_ell" = L¹_k, "L2_ell" = L²_k, and the flat principal parts "Lk_principal", "Gk_principal",
/// "Qk_principal", "Lkl_principal".
pub fn ref_generic(name: &str, w: &FormField, curv: &CurvatureData, n: usize, k: usize, ell: usize) -> Result<FormField> {
    check_dim(curv, n)?;
    check_degree(w, k, name)?;
    let g = Geometry::new(curv);
    let nf = n as f64;
    let kf = k as f64;
    let ct = ConstantTable::new(n);
    let sgn = |e: usize| if e % 2 == 0 { 1.0 } else { -1.0 };
    let p0 = curv.schouten.scale(2.0);
    match name {
        "G_crit" => {
            if 2 * k + 2 != n {
                return Err(Error::Params("G_crit acts on (n/2−1)-forms".into()));
            }
            let mut inner = g.d(&g.delta(w)).scale(0.25);
            inner.axpy(-0.5, &g.j(&p0, w));
            inner.axpy(0.25, &w.mul_scalar(&g.tr(&p0)));
            Ok(g.delta(&inner).scale(sgn(n / 2 + 1)))
        }
        "Q_crit" => {
            if 2 * k + 2 != n {
                return Err(Error::Params("Q_crit acts on (n/2−1)-forms".into()));
            }
            Ok(shifted_laplacian(&g, w, 4.0 / (nf - 2.0), 2.0 / (nf - 1.0)).scale(0.5))
        }
        "L_crit2" => {
            if 2 * k + 4 != n {
                return Err(Error::Params("L_crit2 acts on (n/2−2)-forms".into()));
            }
            let dw = g.d(w);
            let mut inner = g.d(&g.delta(&dw)).scale(1.0 / 16.0);
            inner.axpy(-1.0 / (4.0 * (nf - 2.0)), &g.j(&curv.ricci, &dw));
            inner.axpy(1.0 / (8.0 * (nf - 1.0)), &dw.mul_scalar(g.scal()));
            Ok(g.delta(&inner).scale(-1.0))
        }
        "L1_ell" => {
            let a = nf - 2.0 * kf - 2.0;
            let mut out = g.delta(&g.d(w)).scale(0.5);
            if k > 0 {
                out.axpy(a / (2.0 * (nf - 2.0 * kf + 2.0)), &g.d(&g.delta(w)));
            }
            out.axpy((nf + kf - 2.0) * a / (8.0 * (nf - 1.0) * (nf - 2.0)), &w.mul_scalar(g.scal()));
            out.axpy(-a / (2.0 * (nf - 2.0)), &g.j(&curv.ricci, w));
            Ok(out)
        }
        "L2_ell" => {
            if 2 * k + 4 > n {
                return Err(Error::Params("L²_k needs k ≤ n/2−2".into()));
            }
            let p = &curv.schouten;
            let e = nf - 2.0 * kf - 4.0;
            let ddel = |x: &FormField| if x.degree > 0 { g.d(&g.delta(x)) } else { FormField::zeros(&x.grid, x.degree) };
            let deld = |x: &FormField| g.delta(&g.d(x));
            // −(e/16)·[(δd)²/e − 2δj♯(P)d/e] is evaluated with e cancelled
            let mut out = deld(&deld(w)).scale(-1.0 / 16.0);
            out.axpy(2.0 / 16.0, &g.delta(&g.j_sharp(p, &g.d(w))));
            let mut rest = ddel(&ddel(w)).scale(1.0 / (nf - 2.0 * kf + 4.0));
            if k > 0 {
                rest.axpy(2.0 / (nf - 2.0 * kf + 4.0), &g.d(&g.j_sharp(p, &g.delta(w))));
            }
            let lap = g.lap(w);
            rest.axpy(-0.5, &g.j(p, &lap));
            rest.axpy(-0.5, &g.lap(&g.j_sharp(p, w)));
            let mut hb = metric_square(&curv.metric, p);
            if n != 4 {
                hb = hb.add(&curv.bach.scale(1.0 / (nf - 4.0)));
            }
            rest.axpy(1.0, &g.j_sharp(&hb, w));
            let js = g.j_sharp(p, w);
            rest.axpy((nf - 2.0 * kf) / 4.0, &g.j_sharp(p, &js));
            out.axpy(-e / 16.0, &rest);
            Ok(out)
        }
        "Lk_principal" => {
            let m = n / 2 - k;
            let mut x = w.clone();
            for _ in 0..m {
                x = g.delta(&g.d(&x));
            }
            Ok(x.scale(ct.principal_q(k)))
        }
        "Qk_principal" => {
            let m = n / 2 - k;
            let mut x = w.clone();
            for _ in 0..m {
                x = g.lap(&x);
            }
            Ok(x.scale(ct.principal_q(k)))
        }
        "Gk_principal" => {
            if k == 0 {
                return Err(Error::Params("G_k needs k ≥ 1".into()));
            }
            let m = n / 2 - k;
            let mut x = g.delta(w);
            for _ in 0..m {
                x = g.delta(&g.d(&x));
            }
            Ok(x.scale(ct.principal_g(k)))
        }
        "Lkl_principal" => {
            let (ca, cb) = ct.principal_l_ell(k, ell);
            let mut x = w.clone();
            let mut y = w.clone();
            for _ in 0..ell {
                x = g.delta(&g.d(&x));
                y = if y.degree > 0 { g.d(&g.delta(&y)) } else { FormField::zeros(&y.grid, 0) };
            }
            Ok(add(&x.scale(ca), cb, &y))
        }
        _ => Err(Error::Params(format!("unknown generic operator {name}"))),
    }
}

//! Exterior calculus on the torus for a pointwise metric field.

use crate::error::{Error, Result};
use crate::fields::{FormField, ScalarField, TensorField};
use crate::grid::TorusGrid;
use crate::linalg;
use crate::multiindex::{axes, binomial, complement, insert_sign, star_sign, table};
use crate::spectral;

/// Riemannian metric sampled on the grid.
#[derive(Debug, Clone)]
pub struct Metric {
    pub h: TensorField,
    pub h_inv: TensorField,
    pub sqrt_det: ScalarField,
    /// φ when h = e^{2φ}δ; enables scalar fast paths.
    pub conformal_factor: Option<ScalarField>,
}

impl Metric {
    pub fn flat(grid: &TorusGrid) -> Self {
        Metric {
            h: TensorField::identity(grid),
            h_inv: TensorField::identity(grid),
            sqrt_det: ScalarField::constant(grid, 1.0),
            conformal_factor: Some(ScalarField::zeros(grid)),
        }
    }

    /// The metric e^{2φ}δ.
    pub fn conformal(phi: &ScalarField) -> Self {
        let grid = &phi.grid;
        let n = grid.n();
        let e2 = phi.map(|v| (2.0 * v).exp());
        let em2 = phi.map(|v| (-2.0 * v).exp());
        let h = TensorField::symmetric_from(grid, |a, b| if a == b { e2.values.clone() } else { vec![0.0; grid.len()] });
        let h_inv =
            TensorField::symmetric_from(grid, |a, b| if a == b { em2.values.clone() } else { vec![0.0; grid.len()] });
        Metric { h, h_inv, sqrt_det: phi.map(|v| (n as f64 * v).exp()), conformal_factor: Some(phi.clone()) }
    }

    /// General metric from its components; checks positive definiteness pointwise.
    pub fn from_tensor(h: &TensorField) -> Result<Self> {
        if h.rank != 2 {
            return Err(Error::Params("metric must be a rank-2 tensor".into()));
        }
        let grid = &h.grid;
        let n = grid.n();
        let len = grid.len();
        let mut h = h.clone();
        h.symmetrize();
        let mut h_inv = TensorField::zeros(grid, 2);
        let mut sqrt_det = vec![0.0; len];
        for p in 0..len {
            let m = h.matrix_at(p);
            if !linalg::is_positive_definite(&m, n) {
                return Err(Error::SingularMetric(format!("not positive definite at point {p}")));
            }
            let (inv, det) =
                linalg::inverse(&m, n).ok_or_else(|| Error::SingularMetric(format!("singular at point {p}")))?;
            for c in 0..n * n {
                h_inv.data[c * len + p] = inv[c];
            }
            sqrt_det[p] = det.sqrt();
        }
        h_inv.symmetrize();
        Ok(Metric { h, h_inv, sqrt_det: ScalarField { grid: grid.clone(), values: sqrt_det }, conformal_factor: None })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.h.grid
    }

    pub fn n(&self) -> usize {
        self.h.grid.n()
    }

    pub fn is_flat(&self) -> bool {
        matches!(&self.conformal_factor, Some(phi) if phi.values.iter().all(|&v| v == 0.0))
    }
}

/// Pointwise linear map from k-forms to k'-forms.
#[derive(Debug, Clone, PartialEq)]
pub struct EndomorphismField {
    pub grid: TorusGrid,
    pub deg_in: usize,
    pub deg_out: usize,
    pub kind: EndoKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EndoKind {
    /// multiple of the identity (deg_in == deg_out)
    Scalar(Vec<f64>),
    /// row-major C(n,deg_out)×C(n,deg_in) matrices, entry-major then grid point
    Dense(Vec<f64>),
}

impl EndomorphismField {
    pub fn identity(grid: &TorusGrid, k: usize) -> Self {
        EndomorphismField { grid: grid.clone(), deg_in: k, deg_out: k, kind: EndoKind::Scalar(vec![1.0; grid.len()]) }
    }

    pub fn scalar(f: &ScalarField, k: usize) -> Self {
        EndomorphismField { grid: f.grid.clone(), deg_in: k, deg_out: k, kind: EndoKind::Scalar(f.values.clone()) }
    }

    pub fn dims(&self) -> (usize, usize) {
        let n = self.grid.n();
        (binomial(n, self.deg_out), binomial(n, self.deg_in))
    }

    /// Dense materialization.
    pub fn to_dense(&self) -> Vec<f64> {
        match &self.kind {
            EndoKind::Dense(d) => d.clone(),
            EndoKind::Scalar(s) => {
                let (r, c) = self.dims();
                let len = self.grid.len();
                let mut d = vec![0.0; r * c * len];
                for i in 0..r {
                    d[(i * c + i) * len..(i * c + i + 1) * len].copy_from_slice(s);
                }
                d
            }
        }
    }

    /// Build a dense field by applying `f` to each basis form.
    pub fn from_action(grid: &TorusGrid, deg_in: usize, deg_out: usize, f: impl Fn(&FormField) -> FormField) -> Self {
        let n = grid.n();
        let (r, c) = (binomial(n, deg_out), binomial(n, deg_in));
        let len = grid.len();
        let mut d = vec![0.0; r * c * len];
        for j in 0..c {
            let mut e = FormField::zeros(grid, deg_in);
            e.comp_mut(j).iter_mut().for_each(|v| *v = 1.0);
            let out = f(&e);
            for i in 0..r {
                d[(i * c + j) * len..(i * c + j + 1) * len].copy_from_slice(out.comp(i));
            }
        }
        EndomorphismField { grid: grid.clone(), deg_in, deg_out, kind: EndoKind::Dense(d) }
    }

    pub fn apply(&self, w: &FormField) -> FormField {
        assert_eq!(w.degree, self.deg_in, "endomorphism degree mismatch");
        let len = self.grid.len();
        match &self.kind {
            EndoKind::Scalar(s) => {
                let mut out = w.clone();
                for c in 0..w.n_comps() {
                    out.comp_mut(c).iter_mut().zip(s).for_each(|(a, b)| *a *= b);
                }
                out
            }
            EndoKind::Dense(d) => {
                let (r, c) = self.dims();
                let mut out = FormField::zeros(&self.grid, self.deg_out);
                for i in 0..r {
                    let o = &mut out.data[i * len..(i + 1) * len];
                    for j in 0..c {
                        let m = &d[(i * c + j) * len..(i * c + j + 1) * len];
                        let x = w.comp(j);
                        for p in 0..len {
                            o[p] += m[p] * x[p];
                        }
                    }
                }
                out
            }
        }
    }

    /// self ∘ other
    pub fn compose(&self, other: &EndomorphismField) -> EndomorphismField {
        assert_eq!(self.deg_in, other.deg_out);
        if let (EndoKind::Scalar(a), EndoKind::Scalar(b)) = (&self.kind, &other.kind) {
            return EndomorphismField {
                grid: self.grid.clone(),
                deg_in: other.deg_in,
                deg_out: self.deg_out,
                kind: EndoKind::Scalar(a.iter().zip(b).map(|(x, y)| x * y).collect()),
            };
        }
        EndomorphismField::from_action(&self.grid, other.deg_in, self.deg_out, |e| self.apply(&other.apply(e)))
    }

    pub fn add(&self, other: &EndomorphismField, s: f64) -> EndomorphismField {
        assert_eq!((self.deg_in, self.deg_out), (other.deg_in, other.deg_out));
        match (&self.kind, &other.kind) {
            (EndoKind::Scalar(a), EndoKind::Scalar(b)) => EndomorphismField {
                kind: EndoKind::Scalar(a.iter().zip(b).map(|(x, y)| x + s * y).collect()),
                ..self.clone()
            },
            _ => {
                let a = self.to_dense();
                let b = other.to_dense();
                EndomorphismField { kind: EndoKind::Dense(a.iter().zip(&b).map(|(x, y)| x + s * y).collect()), ..self.clone() }
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        match &self.kind {
            EndoKind::Scalar(s) => crate::fields::max_abs(s),
            EndoKind::Dense(d) => crate::fields::max_abs(d),
        }
    }
}

/// Exterior derivative by spectral partials.
pub fn exterior_derivative(w: &FormField) -> Result<FormField> {
    let n = w.grid.n();
    let k = w.degree;
    if k >= n {
        return Err(Error::Degree(format!("d of a {k}-form in dimension {n}")));
    }
    Ok(d_unchecked(w))
}

pub(crate) fn d_unchecked(w: &FormField) -> FormField {
    let n = w.grid.n();
    let k = w.degree;
    let t = table(n);
    let mut out = FormField::zeros(&w.grid, k + 1);
    if k >= n {
        return out;
    }
    for (ci, &mask) in t.lists[k].iter().enumerate() {
        let src = w.comp(ci);
        if src.iter().all(|&v| v == 0.0) {
            continue;
        }
        for a in 0..n {
            if mask & (1 << a) != 0 {
                continue;
            }
            let sign = insert_sign(a, mask);
            let dst = t.pos[(mask | (1 << a)) as usize];
            let der = spectral::partial(&w.grid, src, a, 1);
            out.comp_mut(dst).iter_mut().zip(&der).for_each(|(o, v)| *o += sign * v);
        }
    }
    out
}

/// Raise all indices of a k-form: components of the k-vector Λ^k(h⁻¹)ω.
pub fn raise(w: &FormField, m: &Metric) -> FormField {
    let k = w.degree;
    if k == 0 {
        return w.clone();
    }
    if let Some(phi) = &m.conformal_factor {
        let f = phi.map(|v| (-2.0 * k as f64 * v).exp());
        return w.mul_scalar(&f);
    }
    compound_apply(&m.h_inv, w, false)
}

/// Lower all indices (inverse of `raise`).
pub fn lower(w: &FormField, m: &Metric) -> FormField {
    let k = w.degree;
    if k == 0 {
        return w.clone();
    }
    if let Some(phi) = &m.conformal_factor {
        let f = phi.map(|v| (2.0 * k as f64 * v).exp());
        return w.mul_scalar(&f);
    }
    compound_apply(&m.h, w, false)
}

/// out_I = Σ_J det(M[I,J]) w_J (or with M transposed).
pub(crate) fn compound_apply(mat: &TensorField, w: &FormField, transpose: bool) -> FormField {
    let grid = &w.grid;
    let n = grid.n();
    let k = w.degree;
    let c = binomial(n, k);
    let len = grid.len();
    let mut out = FormField::zeros(grid, k);
    let mut local = vec![0.0; c];
    for p in 0..len {
        let mut mm = mat.matrix_at(p);
        if transpose {
            for a in 0..n {
                for b in a + 1..n {
                    mm.swap(a * n + b, b * n + a);
                }
            }
        }
        let comp = linalg::compound(&mm, n, k);
        for (j, l) in local.iter_mut().enumerate() {
            *l = w.data[j * len + p];
        }
        for i in 0..c {
            let s: f64 = (0..c).map(|j| comp[i * c + j] * local[j]).sum();
            out.data[i * len + p] = s;
        }
    }
    out
}

/// The signed permutation dy^I ↦ sign(I,I^c) dy^{I^c} (flat Hodge star).
pub fn flat_star(w: &FormField) -> FormField {
    let n = w.grid.n();
    let t = table(n);
    let mut out = FormField::zeros(&w.grid, n - w.degree);
    for (ci, &mask) in t.lists[w.degree].iter().enumerate() {
        let s = star_sign(mask, n);
        let dst = t.pos[complement(mask, n) as usize];
        out.comp_mut(dst).iter_mut().zip(w.comp(ci)).for_each(|(o, v)| *o = s * v);
    }
    out
}

/// Inverse of `flat_star` on (n−k)-forms producing k-forms.
pub fn flat_star_inverse(w: &FormField) -> FormField {
    let n = w.grid.n();
    let k = n - w.degree;
    let t = table(n);
    let mut out = FormField::zeros(&w.grid, k);
    for (ci, &mask) in t.lists[k].iter().enumerate() {
        let s = star_sign(mask, n);
        let src = t.pos[complement(mask, n) as usize];
        out.comp_mut(ci).iter_mut().zip(w.comp(src)).for_each(|(o, v)| *o = s * v);
    }
    out
}

/// Hodge star of h with orientation dy¹∧…∧dyⁿ.
pub fn hodge_star(w: &FormField, m: &Metric) -> FormField {
    flat_star(&raise(w, m).mul_scalar(&m.sqrt_det))
}

/// Inverse Hodge star mapping (n−k)-forms back to k-forms.
pub fn hodge_star_inverse(w: &FormField, m: &Metric) -> FormField {
    let inv = m.sqrt_det.map(|v| 1.0 / v);
    lower(&flat_star_inverse(w), m).mul_scalar(&inv)
}

/// δ = (−1)^k ⋆⁻¹ d ⋆ on k-forms.
pub fn codifferential(w: &FormField, m: &Metric) -> Result<FormField> {
    if w.degree == 0 {
        return Err(Error::Degree("codifferential of a 0-form".into()));
    }
    Ok(delta_unchecked(w, m))
}

pub(crate) fn delta_unchecked(w: &FormField, m: &Metric) -> FormField {
    let k = w.degree;
    if k == 0 {
        return FormField { grid: w.grid.clone(), degree: 0, data: vec![] };
    }
    let s = hodge_star(w, m);
    let ds = d_unchecked(&s);
    let r = hodge_star_inverse(&ds, m);
    if k % 2 == 1 {
        r.scale(-1.0)
    } else {
        r
    }
}

/// Hodge Laplacian dδ + δd (positive convention).
pub fn form_laplacian(w: &FormField, m: &Metric) -> FormField {
    let n = w.grid.n();
    let k = w.degree;
    let mut out = FormField::zeros(&w.grid, k);
    if k < n {
        out.axpy(1.0, &delta_unchecked(&d_unchecked(w), m));
    }
    if k > 0 {
        out.axpy(1.0, &d_unchecked(&delta_unchecked(w, m)));
    }
    out
}

/// Wedge product α ∧ β.
pub fn wedge(a: &FormField, b: &FormField) -> Result<FormField> {
    let n = a.grid.n();
    a.grid.same_as(&b.grid)?;
    if a.degree + b.degree > n {
        return Err(Error::Degree(format!("wedge degree {} exceeds {n}", a.degree + b.degree)));
    }
    let t = table(n);
    let mut out = FormField::zeros(&a.grid, a.degree + b.degree);
    for (i, &mi) in t.lists[a.degree].iter().enumerate() {
        for (j, &mj) in t.lists[b.degree].iter().enumerate() {
            let s = crate::multiindex::wedge_sign(mi, mj);
            if s == 0.0 {
                continue;
            }
            let dst = t.pos[(mi | mj) as usize];
            let (x, y) = (a.comp(i).to_vec(), b.comp(j));
            out.comp_mut(dst).iter_mut().zip(x.iter().zip(y)).for_each(|(o, (p, q))| *o += s * p * q);
        }
    }
    Ok(out)
}

/// Interior product i_X ω for a vector field given by its components X^a.
pub fn interior(x: &[ScalarField], w: &FormField) -> Result<FormField> {
    let n = w.grid.n();
    if x.len() != n {
        return Err(Error::Params("vector field needs n components".into()));
    }
    if w.degree == 0 {
        return Err(Error::Degree("interior product of a 0-form".into()));
    }
    let t = table(n);
    let mut out = FormField::zeros(&w.grid, w.degree - 1);
    for (ci, &mask) in t.lists[w.degree].iter().enumerate() {
        for (slot, a) in axes(mask).enumerate() {
            let rest = mask & !(1 << a);
            let s = if slot % 2 == 0 { 1.0 } else { -1.0 };
            let dst = t.pos[rest as usize];
            let src = w.comp(ci).to_vec();
            out.comp_mut(dst).iter_mut().zip(src.iter().zip(&x[a].values)).for_each(|(o, (v, xa))| *o += s * v * xa);
        }
    }
    Ok(out)
}

/// Pointwise metric pairing ⟨a,b⟩_h.
pub fn pointwise_inner(a: &FormField, b: &FormField, m: &Metric) -> Result<ScalarField> {
    if a.degree != b.degree {
        return Err(Error::Degree(format!("pairing of degrees {} and {}", a.degree, b.degree)));
    }
    a.grid.same_as(&b.grid)?;
    let rb = raise(b, m);
    let len = a.grid.len();
    let mut v = vec![0.0; len];
    for c in 0..a.n_comps() {
        for ((o, x), y) in v.iter_mut().zip(a.comp(c)).zip(rb.comp(c)) {
            *o += x * y;
        }
    }
    Ok(ScalarField { grid: a.grid.clone(), values: v })
}

/// L² pairing ∫⟨a,b⟩_h dvol_h by the equal-weight trapezoid rule.
pub fn quadrature_inner(a: &FormField, b: &FormField, m: &Metric) -> Result<f64> {
    if m.sqrt_det.values.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::SingularMetric("non-positive volume density".into()));
    }
    let pw = pointwise_inner(a, b, m)?;
    let s: f64 = pw.values.iter().zip(&m.sqrt_det.values).map(|(x, y)| x * y).sum();
    Ok(s * a.grid.cell_volume())
}

/// Transition table for slot derivations on k-forms: (src, dst, row b, col c, sign).
pub(crate) fn derivation_table(n: usize, k: usize) -> Vec<(usize, usize, usize, usize, f64)> {
    let t = table(n);
    let mut entries = Vec::new();
    for (src, &mask) in t.lists[k].iter().enumerate() {
        for (slot, c) in axes(mask).enumerate() {
            let rest = mask & !(1 << c);
            for b in 0..n {
                if rest & (1 << b) != 0 {
                    continue;
                }
                let sign = if slot % 2 == 0 { 1.0 } else { -1.0 } * insert_sign(b, rest);
                let dst = t.pos[(rest | (1 << b)) as usize];
                entries.push((src, dst, b, c, sign));
            }
        }
    }
    entries
}

/// Applies the derivation extension of the pointwise matrix M acting on each slot of a k-vector,
/// i.e. e_c ↦ Σ_b M_{bc} e_b. With M = Eᵀ this is J(E) on forms.
pub fn apply_slot_derivation(mat: &TensorField, w: &FormField) -> FormField {
    let grid = &w.grid;
    let n = grid.n();
    let mut out = FormField::zeros(grid, w.degree);
    if w.degree == 0 {
        return out;
    }
    let len = grid.len();
    for (src, dst, b, c, sign) in derivation_table(n, w.degree) {
        let m = &mat.data[(b * n + c) * len..(b * n + c + 1) * len];
        let x = &w.data[src * len..(src + 1) * len];
        let o = &mut out.data[dst * len..(dst + 1) * len];
        for p in 0..len {
            o[p] += sign * m[p] * x[p];
        }
    }
    out
}

fn transpose(t: &TensorField) -> TensorField {
    let n = t.grid.n();
    let mut out = t.clone();
    for a in 0..n {
        for b in 0..n {
            out.comp_mut(&[a, b]).copy_from_slice(t.comp(&[b, a]));
        }
    }
    out
}

/// J(E) on k-forms for a (1,1)-tensor with components E[a][b] = E^a_b.
pub fn j_operator(endo: &TensorField, k: usize) -> Result<EndomorphismField> {
    if endo.rank != 2 {
        return Err(Error::Params(format!("J needs a rank-2 tensor, got rank {}", endo.rank)));
    }
    let grid = &endo.grid;
    if k == 0 {
        return Ok(EndomorphismField::scalar(&ScalarField::zeros(grid), 0));
    }
    let mt = transpose(endo);
    Ok(EndomorphismField::from_action(grid, k, k, |e| apply_slot_derivation(&mt, e)))
}

/// J applied directly to a form, for a (1,1)-tensor E^a_b.
pub fn j_apply(endo: &TensorField, w: &FormField) -> FormField {
    apply_slot_derivation(&transpose(endo), w)
}

/// The endomorphism h⁻¹H of a symmetric 2-tensor H.
pub fn raise_first(hsym: &TensorField, m: &Metric) -> TensorField {
    let grid = &hsym.grid;
    let n = grid.n();
    let len = grid.len();
    let mut out = TensorField::zeros(grid, 2);
    for a in 0..n {
        for b in 0..n {
            let o = out.comp_mut(&[a, b]);
            for c in 0..n {
                let hi = m.h_inv.comp(&[a, c]);
                let hh = hsym.comp(&[c, b]);
                for p in 0..len {
                    o[p] += hi[p] * hh[p];
                }
            }
        }
    }
    out
}

/// Pointwise trace of an endomorphism field.
pub fn trace(endo: &TensorField) -> ScalarField {
    let grid = &endo.grid;
    let mut v = vec![0.0; grid.len()];
    for a in 0..grid.n() {
        v.iter_mut().zip(endo.comp(&[a, a])).for_each(|(o, x)| *o += x);
    }
    ScalarField { grid: grid.clone(), values: v }
}

/// j(H) := J(h⁻¹H) applied to a form, for a symmetric 2-tensor H.
pub fn j_sym_apply(hsym: &TensorField, m: &Metric, w: &FormField) -> FormField {
    j_apply(&raise_first(hsym, m), w)
}

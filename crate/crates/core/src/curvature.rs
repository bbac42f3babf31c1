//! Curvature of a boundary metric by spectral differentiation of its components.

use crate::error::{Error, Result};
use crate::exterior::{j_operator, raise_first, trace, EndomorphismField, Metric};
use crate::fields::{ScalarField, TensorField};
use crate::grid::TorusGrid;
use crate::series::MetricSeries;
use crate::spectral::partial;

/// Rank-4 field with the symmetries of a curvature tensor, stored on index pairs a<b, c<d
/// with R_{abcd} = R_{cdab}.
#[derive(Debug, Clone)]
pub struct CurvatureTensor {
    pub grid: TorusGrid,
    pairs: Vec<(usize, usize)>,
    pair_index: Vec<usize>,
    data: Vec<f64>,
}

impl CurvatureTensor {
    pub fn zeros(grid: &TorusGrid) -> Self {
        let n = grid.n();
        let mut pairs = Vec::new();
        let mut pair_index = vec![usize::MAX; n * n];
        for a in 0..n {
            for b in a + 1..n {
                pair_index[a * n + b] = pairs.len();
                pairs.push((a, b));
            }
        }
        let np = pairs.len();
        CurvatureTensor { grid: grid.clone(), pairs, pair_index, data: vec![0.0; np * (np + 1) / 2 * grid.len()] }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    fn slot(i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        j * (j + 1) / 2 + i
    }

    fn pair(&self, a: usize, b: usize) -> Option<(usize, f64)> {
        let n = self.grid.n();
        if a == b {
            return None;
        }
        if a < b {
            Some((self.pair_index[a * n + b], 1.0))
        } else {
            Some((self.pair_index[b * n + a], -1.0))
        }
    }

    /// Stored slice for pair indices (i,j) and the sign relating it to R_{abcd}.
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> Option<(&[f64], f64)> {
        let (i, s1) = self.pair(a, b)?;
        let (j, s2) = self.pair(c, d)?;
        let len = self.grid.len();
        let k = Self::slot(i, j);
        Some((&self.data[k * len..(k + 1) * len], s1 * s2))
    }

    pub fn value(&self, a: usize, b: usize, c: usize, d: usize, p: usize) -> f64 {
        self.get(a, b, c, d).map(|(v, s)| s * v[p]).unwrap_or(0.0)
    }

    pub fn slot_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let len = self.grid.len();
        let k = Self::slot(i, j);
        &mut self.data[k * len..(k + 1) * len]
    }

    pub fn max_abs(&self) -> f64 {
        crate::fields::max_abs(&self.data)
    }
}

#[derive(Debug, Clone)]
pub struct CurvatureData {
    pub metric: Metric,
    /// Γ^a_{bc} stored at index [a,b,c]
    pub christoffel: TensorField,
    pub riemann: CurvatureTensor,
    pub ricci: TensorField,
    pub scal: ScalarField,
    pub schouten: TensorField,
    pub cotton: TensorField,
    pub weyl: CurvatureTensor,
    pub bach: TensorField,
}

fn is_zero(v: &[f64]) -> bool {
    v.iter().all(|&x| x == 0.0)
}

fn axpy(o: &mut [f64], s: f64, x: &[f64]) {
    o.iter_mut().zip(x).for_each(|(a, b)| *a += s * b);
}

fn axpy_prod(o: &mut [f64], s: f64, x: &[f64], y: &[f64]) {
    for ((a, b), c) in o.iter_mut().zip(x).zip(y) {
        *a += s * b * c;
    }
}

/// Contract with the inverse metric on both indices: T^{ab} S_{ab}.
pub fn full_contract(m: &Metric, t: &TensorField, s: &TensorField) -> ScalarField {
    let n = m.n();
    let grid = m.grid();
    let mut v = vec![0.0; grid.len()];
    let tu = raise_both(m, t);
    for a in 0..n {
        for b in 0..n {
            axpy_prod(&mut v, 1.0, tu.comp(&[a, b]), s.comp(&[a, b]));
        }
    }
    ScalarField { grid: grid.clone(), values: v }
}

/// T^{ab} = h^{ac}h^{bd}T_{cd}
pub fn raise_both(m: &Metric, t: &TensorField) -> TensorField {
    let n = m.n();
    let grid = m.grid();
    let mut mid = TensorField::zeros(grid, 2);
    for a in 0..n {
        for d in 0..n {
            let o = mid.comp_mut(&[a, d]);
            for c in 0..n {
                axpy_prod(o, 1.0, m.h_inv.comp(&[a, c]), t.comp(&[c, d]));
            }
        }
    }
    let mut out = TensorField::zeros(grid, 2);
    for a in 0..n {
        for b in 0..n {
            let o = out.comp_mut(&[a, b]);
            for d in 0..n {
                axpy_prod(o, 1.0, mid.comp(&[a, d]), m.h_inv.comp(&[d, b]));
            }
        }
    }
    out.symmetric = t.symmetric;
    out
}

/// Matrix square with the metric: (P²)_{ab} = P_{ac}h^{cd}P_{db}.
pub fn metric_square(m: &Metric, t: &TensorField) -> TensorField {
    let n = m.n();
    let grid = m.grid();
    let up = crate::exterior::raise_first(t, m);
    let mut out = TensorField::zeros(grid, 2);
    for a in 0..n {
        for b in 0..n {
            let o = out.comp_mut(&[a, b]);
            for c in 0..n {
                axpy_prod(o, 1.0, t.comp(&[a, c]), up.comp(&[c, b]));
            }
        }
    }
    out.symmetrize();
    out
}

/// The metric e^{2φ}δ.
pub fn conformal_metric(phi: &ScalarField) -> Metric {
    Metric::conformal(phi)
}

pub fn compute_curvature(m: &Metric) -> Result<CurvatureData> {
    let grid = m.grid().clone();
    let n = grid.n();
    let len = grid.len();
    if n < 4 {
        return Err(Error::Dimension(n));
    }
    let h = &m.h;
    // dh[c][a][b] = ∂_c h_ab
    let mut dh = vec![TensorField::zeros(&grid, 2); n];
    for (c, dhc) in dh.iter_mut().enumerate() {
        for a in 0..n {
            for b in a..n {
                let src = h.comp(&[a, b]);
                if is_zero(src) {
                    continue;
                }
                let v = partial(&grid, src, c, 1);
                dhc.comp_mut(&[a, b]).copy_from_slice(&v);
                dhc.comp_mut(&[b, a]).copy_from_slice(&v);
            }
        }
    }
    // lowered Γ_{f,bc}
    let mut gl = TensorField::zeros(&grid, 3);
    for f in 0..n {
        for b in 0..n {
            for c in b..n {
                let mut v = vec![0.0; len];
                axpy(&mut v, 0.5, dh[b].comp(&[f, c]));
                axpy(&mut v, 0.5, dh[c].comp(&[f, b]));
                axpy(&mut v, -0.5, dh[f].comp(&[b, c]));
                gl.comp_mut(&[f, b, c]).copy_from_slice(&v);
                gl.comp_mut(&[f, c, b]).copy_from_slice(&v);
            }
        }
    }
    drop(dh);
    let mut christoffel = TensorField::zeros(&grid, 3);
    for a in 0..n {
        for b in 0..n {
            for c in b..n {
                let mut v = vec![0.0; len];
                for f in 0..n {
                    axpy_prod(&mut v, 1.0, m.h_inv.comp(&[a, f]), gl.comp(&[f, b, c]));
                }
                christoffel.comp_mut(&[a, b, c]).copy_from_slice(&v);
                christoffel.comp_mut(&[a, c, b]).copy_from_slice(&v);
            }
        }
    }
    let d2 = |x: usize, y: usize, a: usize, b: usize| -> Option<Vec<f64>> {
        let src = h.comp(&[a, b]);
        if is_zero(src) {
            return None;
        }
        Some(if x == y { partial(&grid, src, x, 2) } else { partial(&grid, &partial(&grid, src, x, 1), y, 1) })
    };
    let mut riemann = CurvatureTensor::zeros(&grid);
    let pairs = riemann.pairs().to_vec();
    for (i, &(a, b)) in pairs.iter().enumerate() {
        for (j, &(c, d)) in pairs.iter().enumerate().skip(i) {
            let mut v = vec![0.0; len];
            for (s, x, y, p, q) in [(0.5, b, c, a, d), (0.5, a, d, b, c), (-0.5, a, c, b, d), (-0.5, b, d, a, c)] {
                if let Some(t) = d2(x, y, p, q) {
                    axpy(&mut v, s, &t);
                }
            }
            for e in 0..n {
                // Γ_{e,bc}Γ^e_{ad} − Γ_{e,bd}Γ^e_{ac}
                axpy_prod(&mut v, 1.0, gl.comp(&[e, b, c]), christoffel.comp(&[e, a, d]));
                axpy_prod(&mut v, -1.0, gl.comp(&[e, b, d]), christoffel.comp(&[e, a, c]));
            }
            riemann.slot_mut(i, j).copy_from_slice(&v);
        }
    }
    drop(gl);
    // Ric_{bd} = h^{ac} R_{abcd}
    let mut ricci = TensorField::zeros(&grid, 2);
    for b in 0..n {
        for d in b..n {
            let mut v = vec![0.0; len];
            for a in 0..n {
                for c in 0..n {
                    if let Some((r, s)) = riemann.get(a, b, c, d) {
                        axpy_prod(&mut v, s, m.h_inv.comp(&[a, c]), r);
                    }
                }
            }
            ricci.comp_mut(&[b, d]).copy_from_slice(&v);
            ricci.comp_mut(&[d, b]).copy_from_slice(&v);
        }
    }
    ricci.symmetric = true;
    let mut scal = vec![0.0; len];
    for a in 0..n {
        for b in 0..n {
            axpy_prod(&mut scal, 1.0, m.h_inv.comp(&[a, b]), ricci.comp(&[a, b]));
        }
    }
    let scal = ScalarField { grid: grid.clone(), values: scal };
    let nf = n as f64;
    let mut schouten = TensorField::zeros(&grid, 2);
    for a in 0..n {
        for b in 0..n {
            let mut v = ricci.comp(&[a, b]).to_vec();
            axpy_prod(&mut v, -1.0 / (2.0 * (nf - 1.0)), &scal.values, h.comp(&[a, b]));
            v.iter_mut().for_each(|x| *x /= nf - 2.0);
            schouten.comp_mut(&[a, b]).copy_from_slice(&v);
        }
    }
    schouten.symmetrize();
    // W = R − P ⊙ h
    let mut weyl = riemann.clone();
    for (i, &(a, b)) in pairs.iter().enumerate() {
        for (j, &(c, d)) in pairs.iter().enumerate().skip(i) {
            let w = weyl.slot_mut(i, j);
            axpy_prod(w, -1.0, schouten.comp(&[a, c]), h.comp(&[b, d]));
            axpy_prod(w, -1.0, schouten.comp(&[b, d]), h.comp(&[a, c]));
            axpy_prod(w, 1.0, schouten.comp(&[a, d]), h.comp(&[b, c]));
            axpy_prod(w, 1.0, schouten.comp(&[b, c]), h.comp(&[a, d]));
        }
    }
    // C_{abc} = ∂_a P_{bc} − ∂_b P_{ac} − Γ^e_{ac}P_{be} + Γ^e_{bc}P_{ae}
    let mut dp = vec![TensorField::zeros(&grid, 2); n];
    for (x, dpx) in dp.iter_mut().enumerate() {
        for a in 0..n {
            for b in a..n {
                let v = partial(&grid, schouten.comp(&[a, b]), x, 1);
                dpx.comp_mut(&[a, b]).copy_from_slice(&v);
                dpx.comp_mut(&[b, a]).copy_from_slice(&v);
            }
        }
    }
    let mut cotton = TensorField::zeros(&grid, 3);
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            for c in 0..n {
                let mut v = dp[a].comp(&[b, c]).to_vec();
                axpy(&mut v, -1.0, dp[b].comp(&[a, c]));
                for e in 0..n {
                    axpy_prod(&mut v, -1.0, christoffel.comp(&[e, a, c]), schouten.comp(&[b, e]));
                    axpy_prod(&mut v, 1.0, christoffel.comp(&[e, b, c]), schouten.comp(&[a, e]));
                }
                cotton.comp_mut(&[a, b, c]).copy_from_slice(&v);
            }
        }
    }
    drop(dp);
    // B_{ab} = h^{cd}∇_d C_{cab} + P^{cd} W_{cadb}
    let pu = raise_both(m, &schouten);
    let mut bach = TensorField::zeros(&grid, 2);
    for a in 0..n {
        for b in 0..n {
            let mut v = vec![0.0; len];
            for c in 0..n {
                for d in 0..n {
                    let hcd = m.h_inv.comp(&[c, d]);
                    if is_zero(hcd) {
                        continue;
                    }
                    let mut nab = partial(&grid, cotton.comp(&[c, a, b]), d, 1);
                    for e in 0..n {
                        axpy_prod(&mut nab, -1.0, christoffel.comp(&[e, d, c]), cotton.comp(&[e, a, b]));
                        axpy_prod(&mut nab, -1.0, christoffel.comp(&[e, d, a]), cotton.comp(&[c, e, b]));
                        axpy_prod(&mut nab, -1.0, christoffel.comp(&[e, d, b]), cotton.comp(&[c, a, e]));
                    }
                    axpy_prod(&mut v, 1.0, hcd, &nab);
                    if let Some((w, s)) = weyl.get(c, a, d, b) {
                        axpy_prod(&mut v, s, pu.comp(&[c, d]), w);
                    }
                }
            }
            bach.comp_mut(&[a, b]).copy_from_slice(&v);
        }
    }
    bach.symmetrize();
    Ok(CurvatureData { metric: m.clone(), christoffel, riemann, ricci, scal, schouten, cotton, weyl, bach })
}

impl CurvatureData {
    /// Curvature of the flat metric, without differentiating anything.
    pub fn flat(grid: &TorusGrid) -> Self {
        let zero2 = TensorField::zeros(grid, 2);
        CurvatureData {
            metric: Metric::flat(grid),
            christoffel: TensorField::zeros(grid, 3),
            riemann: CurvatureTensor::zeros(grid),
            ricci: zero2.clone(),
            scal: ScalarField::zeros(grid),
            schouten: zero2.clone(),
            cotton: TensorField::zeros(grid, 3),
            weyl: CurvatureTensor::zeros(grid),
            bach: zero2,
        }
    }

    /// |Ric|² = Ric^{ab}Ric_{ab}
    pub fn ricci_norm2(&self) -> ScalarField {
        full_contract(&self.metric, &self.ricci, &self.ricci)
    }

    pub fn schouten_trace(&self) -> ScalarField {
        crate::exterior::trace(&crate::exterior::raise_first(&self.schouten, &self.metric))
    }
}

/// Collar metric expansion h_x = h₀ − x²P + x⁴h₂/8 − x⁶h₃/48 with h₃ reduced to its trace part.
pub fn fg_metric_series(curv: &CurvatureData) -> Result<MetricSeries> {
    fg_metric_series_with(curv, None)
}

/// As `fg_metric_series`, adding an optional trace-free h₃ contribution (n=6 only).
pub fn fg_metric_series_with(curv: &CurvatureData, h3_tracefree: Option<&TensorField>) -> Result<MetricSeries> {
    let m = &curv.metric;
    let n = m.n();
    if n != 4 && n != 6 {
        return Err(Error::Dimension(n));
    }
    let nf = n as f64;
    let p = &curv.schouten;
    let p2 = metric_square(m, p);
    // h₂ = −2B/(n−4) + 2P²
    let mut h2 = p2.scale(2.0);
    if n != 4 {
        h2 = h2.add(&curv.bach.scale(-2.0 / (nf - 4.0)));
    }
    let mut coeffs = vec![m.h.clone(), TensorField::zeros(m.grid(), 2), p.scale(-1.0), TensorField::zeros(m.grid(), 2), h2.scale(1.0 / 8.0)];
    if n == 6 {
        // tr h₃ = −8 tr(PB)/(n−4)
        let tr = full_contract(m, p, &curv.bach).map(|v| -8.0 * v / (nf - 4.0));
        let mut h3 = TensorField::zeros(m.grid(), 2);
        for a in 0..n {
            for b in 0..n {
                let o = h3.comp_mut(&[a, b]);
                axpy_prod(o, 1.0 / nf, &tr.values, m.h.comp(&[a, b]));
            }
        }
        if let Some(tf) = h3_tracefree {
            h3 = h3.add(tf);
        }
        coeffs.push(TensorField::zeros(m.grid(), 2));
        coeffs.push(h3.scale(-1.0 / 48.0));
    }
    for c in coeffs.iter_mut() {
        c.symmetrize();
    }
    MetricSeries::new(m.clone(), coeffs)
}

/// A = J(h₀⁻¹P₀) − Tr(h₀⁻¹P₀)/2 on k-forms, with P₀ = 2P.
pub fn a_operator(curv: &CurvatureData, k: usize) -> Result<EndomorphismField> {
    let n = curv.metric.n();
    if k > n {
        return Err(Error::Degree(format!("degree {k} exceeds dimension {n}")));
    }
    let e = raise_first(&curv.schouten.scale(2.0), &curv.metric);
    let tr = trace(&e).map(|t| -0.5 * t);
    let s = EndomorphismField::scalar(&tr, k);
    if k == 0 {
        return Ok(s);
    }
    Ok(j_operator(&e, k)?.add(&s, 1.0))
}

fn stencil(f: &dyn Fn(&[f64]) -> Vec<f64>, y: &[f64], axis: usize, step: f64) -> Vec<f64> {
    let at = |s: f64| {
        let mut z = y.to_vec();
        z[axis] += s;
        f(&z)
    };
    let (p2, p1, m1, m2) = (at(2.0 * step), at(step), at(-step), at(-2.0 * step));
    (0..p1.len()).map(|i| (-p2[i] + 8.0 * p1[i] - 8.0 * m1[i] + m2[i]) / (12.0 * step)).collect()
}

/// Ricci tensor at one point by nested five-point finite differences of a metric given pointwise
/// as a row-major n×n matrix. Independent of the spectral engine; used as a test oracle.
pub fn ricci_fd(h: &dyn Fn(&[f64]) -> Vec<f64>, y: &[f64], step: f64) -> Vec<f64> {
    let n = y.len();
    // Γ^a_{bc} at a point, flattened as [a*n*n + b*n + c]
    let gamma = |z: &[f64]| -> Vec<f64> {
        let hz = h(z);
        let (hinv, _) = crate::linalg::inverse(&hz, n).expect("metric invertible");
        let dh: Vec<Vec<f64>> = (0..n).map(|c| stencil(h, z, c, step)).collect();
        let mut g = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut s = 0.0;
                    for d in 0..n {
                        s += hinv[a * n + d] * (dh[b][d * n + c] + dh[c][d * n + b] - dh[d][b * n + c]);
                    }
                    g[a * n * n + b * n + c] = 0.5 * s;
                }
            }
        }
        g
    };
    let g0 = gamma(y);
    let dg: Vec<Vec<f64>> = (0..n).map(|c| stencil(&gamma, y, c, step)).collect();
    let gi = |a: usize, b: usize, c: usize| g0[a * n * n + b * n + c];
    let mut ric = vec![0.0; n * n];
    for b in 0..n {
        for d in 0..n {
            let mut s = 0.0;
            for a in 0..n {
                // R^a_{bad} = ∂_a Γ^a_{db} − ∂_d Γ^a_{ab} + Γ^a_{ae}Γ^e_{db} − Γ^a_{de}Γ^e_{ab}
                s += dg[a][a * n * n + d * n + b] - dg[d][a * n * n + a * n + b];
                for e in 0..n {
                    s += gi(a, a, e) * gi(e, d, b) - gi(a, d, e) * gi(e, a, b);
                }
            }
            ric[b * n + d] = s;
        }
    }
    ric
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_is_flat() {
        let g = TorusGrid::cube(4, 8).unwrap();
        let c = compute_curvature(&Metric::flat(&g)).unwrap();
        assert!(c.riemann.max_abs() < 1e-12);
        assert!(c.bach.max_abs() < 1e-12);
        assert!(c.scal.max_abs() < 1e-12);
    }
}

use crate::error::{Error, Result};
use crate::grid::TorusGrid;
use crate::multiindex::{binomial, table};
use crate::spectral;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: TorusGrid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &TorusGrid) -> Self {
        ScalarField { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: &TorusGrid, c: f64) -> Self {
        ScalarField { grid: grid.clone(), values: vec![c; grid.len()] }
    }

    pub fn from_values(grid: &TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!("expected {} values, got {}", grid.len(), values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("scalar field"));
        }
        Ok(ScalarField { grid: grid.clone(), values })
    }

    pub fn from_fn(grid: &TorusGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|p| f(&grid.point(p))).collect();
        ScalarField { grid: grid.clone(), values }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn partial(&self, axis: usize, order: u32) -> Result<ScalarField> {
        let values = spectral::partial_checked(&self.grid, &self.values, axis, order)?;
        Ok(ScalarField { grid: self.grid.clone(), values })
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.values)
    }
}

/// Spectral partial derivative of a scalar field.
pub fn spectral_partial(f: &ScalarField, axis: usize, order: u32) -> Result<ScalarField> {
    f.partial(axis, order)
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Tensor field with fully stored components, indices flattened in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub grid: TorusGrid,
    pub rank: usize,
    pub symmetric: bool,
    pub data: Vec<f64>,
}

impl TensorField {
    pub fn zeros(grid: &TorusGrid, rank: usize) -> Self {
        let count = grid.n().pow(rank as u32);
        TensorField { grid: grid.clone(), rank, symmetric: false, data: vec![0.0; count * grid.len()] }
    }

    /// Symmetric rank-2 field built from a component function; symmetry enforced by averaging.
    pub fn symmetric_from(grid: &TorusGrid, f: impl Fn(usize, usize) -> Vec<f64>) -> Self {
        let mut t = Self::zeros(grid, 2);
        let n = grid.n();
        for a in 0..n {
            for b in a..n {
                let v = if a == b {
                    f(a, a)
                } else {
                    let x = f(a, b);
                    let y = f(b, a);
                    x.iter().zip(&y).map(|(p, q)| 0.5 * (p + q)).collect()
                };
                t.comp_mut(&[a, b]).copy_from_slice(&v);
                t.comp_mut(&[b, a]).copy_from_slice(&v);
            }
        }
        t.symmetric = true;
        t
    }

    pub fn identity(grid: &TorusGrid) -> Self {
        Self::symmetric_from(grid, |a, b| vec![if a == b { 1.0 } else { 0.0 }; grid.len()])
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| acc * self.grid.n() + i)
    }

    pub fn comp(&self, idx: &[usize]) -> &[f64] {
        let len = self.grid.len();
        let c = self.flat_index(idx);
        &self.data[c * len..(c + 1) * len]
    }

    pub fn comp_mut(&mut self, idx: &[usize]) -> &mut [f64] {
        let len = self.grid.len();
        let c = self.flat_index(idx);
        &mut self.data[c * len..(c + 1) * len]
    }

    /// Rank-2 components at one point, row-major n×n.
    pub fn matrix_at(&self, p: usize) -> Vec<f64> {
        debug_assert_eq!(self.rank, 2);
        let len = self.grid.len();
        (0..self.grid.n() * self.grid.n()).map(|c| self.data[c * len + p]).collect()
    }

    /// Symmetrize a rank-2 field in place (exact bitwise symmetry).
    pub fn symmetrize(&mut self) {
        assert_eq!(self.rank, 2);
        let n = self.grid.n();
        let len = self.grid.len();
        for a in 0..n {
            for b in a + 1..n {
                for p in 0..len {
                    let i = (a * n + b) * len + p;
                    let j = (b * n + a) * len + p;
                    let m = 0.5 * (self.data[i] + self.data[j]);
                    self.data[i] = m;
                    self.data[j] = m;
                }
            }
        }
        self.symmetric = true;
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut t = self.clone();
        t.data.iter_mut().for_each(|v| *v *= s);
        t
    }

    pub fn add(&self, other: &TensorField) -> Self {
        assert_eq!(self.rank, other.rank);
        let mut t = self.clone();
        t.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
        t.symmetric = self.symmetric && other.symmetric;
        t
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }
}

/// Differential k-form; components in lexicographic multi-index order, component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FormField {
    pub grid: TorusGrid,
    pub degree: usize,
    pub data: Vec<f64>,
}

impl FormField {
    pub fn zeros(grid: &TorusGrid, degree: usize) -> Self {
        let c = binomial(grid.n(), degree);
        FormField { grid: grid.clone(), degree, data: vec![0.0; c * grid.len()] }
    }

    pub fn from_data(grid: &TorusGrid, degree: usize, data: Vec<f64>) -> Result<Self> {
        if degree > grid.n() || data.len() != binomial(grid.n(), degree) * grid.len() {
            return Err(Error::Degree(format!("data length {} does not fit a {degree}-form", data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("form field"));
        }
        Ok(FormField { grid: grid.clone(), degree, data })
    }

    pub fn from_scalar(f: &ScalarField) -> Self {
        FormField { grid: f.grid.clone(), degree: 0, data: f.values.clone() }
    }

    pub fn to_scalar(&self) -> ScalarField {
        assert_eq!(self.degree, 0);
        ScalarField { grid: self.grid.clone(), values: self.data.clone() }
    }

    /// Form f·dy^I for the given axes (sorted internally, sign of the reordering applied).
    pub fn monomial(f: &ScalarField, axes: &[usize]) -> Self {
        let n = f.grid.n();
        let mut sorted = axes.to_vec();
        let mut sign = 1.0;
        for i in 0..sorted.len() {
            for j in 0..sorted.len() - 1 - i {
                if sorted[j] > sorted[j + 1] {
                    sorted.swap(j, j + 1);
                    sign = -sign;
                }
            }
        }
        let mask = sorted.iter().fold(0u16, |m, &a| m | (1 << a));
        let mut w = FormField::zeros(&f.grid, axes.len());
        if mask.count_ones() as usize != axes.len() {
            return w;
        }
        let c = table(n).pos[mask as usize];
        w.comp_mut(c).iter_mut().zip(&f.values).for_each(|(o, v)| *o = sign * v);
        w
    }

    pub fn n_comps(&self) -> usize {
        binomial(self.grid.n(), self.degree)
    }

    pub fn comp(&self, c: usize) -> &[f64] {
        let len = self.grid.len();
        &self.data[c * len..(c + 1) * len]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [f64] {
        let len = self.grid.len();
        &mut self.data[c * len..(c + 1) * len]
    }

    /// Component by axis list (must be sorted).
    pub fn comp_axes(&self, axes: &[usize]) -> &[f64] {
        let mask = axes.iter().fold(0u16, |m, &a| m | (1 << a));
        self.comp(table(self.grid.n()).pos[mask as usize])
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut w = self.clone();
        w.data.iter_mut().for_each(|v| *v *= s);
        w
    }

    pub fn add(&self, other: &FormField) -> Self {
        let mut w = self.clone();
        w.axpy(1.0, other);
        w
    }

    pub fn sub(&self, other: &FormField) -> Self {
        let mut w = self.clone();
        w.axpy(-1.0, other);
        w
    }

    /// self += s·other
    pub fn axpy(&mut self, s: f64, other: &FormField) {
        assert_eq!(self.degree, other.degree, "degree mismatch in axpy");
        assert_eq!(self.data.len(), other.data.len());
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += s * b);
    }

    /// Pointwise product with a scalar field.
    pub fn mul_scalar(&self, f: &ScalarField) -> Self {
        let len = self.grid.len();
        let mut w = self.clone();
        for c in 0..self.n_comps() {
            w.data[c * len..(c + 1) * len].iter_mut().zip(&f.values).for_each(|(a, b)| *a *= b);
        }
        w
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    /// Discrete L2 norm with flat weights (grid average of squared components).
    pub fn rms(&self) -> f64 {
        (self.data.iter().map(|v| v * v).sum::<f64>() / self.grid.len() as f64).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }
}

/// One term a·sin(m·y) or a·cos(m·y).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrigTerm {
    pub amplitude: f64,
    pub mode: Vec<i32>,
    pub phase: Phase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Sin,
    Cos,
}

/// Band-limited trigonometric polynomial, evaluated exactly and differentiated symbolically.
#[derive(Debug, Clone, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct TrigPolynomial {
    pub terms: Vec<TrigTerm>,
}

impl TrigPolynomial {
    pub fn new(terms: Vec<TrigTerm>) -> Self {
        TrigPolynomial { terms }
    }

    pub fn single(amplitude: f64, mode: Vec<i32>, phase: Phase) -> Self {
        TrigPolynomial { terms: vec![TrigTerm { amplitude, mode, phase }] }
    }

    pub fn max_mode(&self) -> i32 {
        self.terms.iter().flat_map(|t| t.mode.iter().map(|m| m.abs())).max().unwrap_or(0)
    }

    pub fn eval_at(&self, y: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let arg: f64 = t.mode.iter().zip(y).map(|(&m, &x)| m as f64 * x).sum();
                t.amplitude
                    * match t.phase {
                        Phase::Sin => arg.sin(),
                        Phase::Cos => arg.cos(),
                    }
            })
            .sum()
    }

    pub fn sample(&self, grid: &TorusGrid) -> ScalarField {
        let n = grid.n();
        let mut values = vec![0.0; grid.len()];
        // separable evaluation via angle addition would be faster; direct evaluation is exact enough
        let coords: Vec<Vec<f64>> = (0..n).map(|a| grid.axis_coords(a)).collect();
        let strides = grid.strides().to_vec();
        let sizes = grid.sizes().to_vec();
        for t in &self.terms {
            let m: Vec<f64> = (0..n).map(|a| *t.mode.get(a).unwrap_or(&0) as f64).collect();
            for (p, v) in values.iter_mut().enumerate() {
                let mut arg = 0.0;
                for a in 0..n {
                    if m[a] != 0.0 {
                        arg += m[a] * coords[a][(p / strides[a]) % sizes[a]];
                    }
                }
                *v += t.amplitude
                    * match t.phase {
                        Phase::Sin => arg.sin(),
                        Phase::Cos => arg.cos(),
                    };
            }
        }
        ScalarField { grid: grid.clone(), values }
    }

    /// Exact symbolic derivative along `axis`.
    pub fn derivative(&self, axis: usize) -> TrigPolynomial {
        let terms = self
            .terms
            .iter()
            .filter_map(|t| {
                let m = *t.mode.get(axis).unwrap_or(&0) as f64;
                if m == 0.0 {
                    return None;
                }
                Some(match t.phase {
                    Phase::Sin => TrigTerm { amplitude: t.amplitude * m, mode: t.mode.clone(), phase: Phase::Cos },
                    Phase::Cos => TrigTerm { amplitude: -t.amplitude * m, mode: t.mode.clone(), phase: Phase::Sin },
                })
            })
            .collect();
        TrigPolynomial { terms }
    }
}

/// Symbolic form: one trigonometric polynomial per component.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigForm {
    pub n: usize,
    pub degree: usize,
    pub comps: Vec<TrigPolynomial>,
}

impl TrigForm {
    pub fn sample(&self, grid: &TorusGrid) -> FormField {
        let mut w = FormField::zeros(grid, self.degree);
        for (c, poly) in self.comps.iter().enumerate() {
            let s = poly.sample(grid);
            w.comp_mut(c).copy_from_slice(&s.values);
        }
        w
    }

    /// Like [`TrigForm::sample`], but rejects a wrong component count or modes the grid cannot resolve.
    pub fn sample_checked(&self, grid: &TorusGrid) -> Result<FormField> {
        if self.n != grid.n() || self.degree > self.n {
            return Err(Error::Degree(format!("{}-form on a {}-torus", self.degree, grid.n())));
        }
        let c = binomial(self.n, self.degree);
        if self.comps.len() != c {
            return Err(Error::Degree(format!("{} components given, a {}-form in dimension {} has {c}", self.comps.len(), self.degree, self.n)));
        }
        let min = *grid.sizes().iter().min().unwrap();
        let top = self.comps.iter().map(|p| p.max_mode()).max().unwrap_or(0);
        if 4 * top as usize > min {
            return Err(Error::Params(format!("mode {top} exceeds min(sizes)/4 = {}", min / 4)));
        }
        if self.comps.iter().flat_map(|p| &p.terms).any(|t| t.mode.len() != self.n) {
            return Err(Error::Params(format!("mode vectors must have {} entries", self.n)));
        }
        Ok(self.sample(grid))
    }

    /// Componentwise derivative along `axis`.
    pub fn derivative(&self, axis: usize) -> TrigForm {
        TrigForm { n: self.n, degree: self.degree, comps: self.comps.iter().map(|p| p.derivative(axis)).collect() }
    }
}

/// Number of random trigonometric terms per component.
pub const RANDOM_TERMS: usize = 3;

/// Deterministic random band-limited form in symbolic representation.
pub fn random_trig_form(n: usize, k: usize, max_mode: i32, seed: u64) -> TrigForm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 40) ^ ((k as u64) << 48));
    let comps = (0..binomial(n, k))
        .map(|_| {
            let mut terms = Vec::with_capacity(RANDOM_TERMS + 1);
            terms.push(TrigTerm { amplitude: rng.gen_range(-0.5..0.5), mode: vec![0; n], phase: Phase::Cos });
            for _ in 0..RANDOM_TERMS {
                let mode: Vec<i32> = (0..n).map(|_| rng.gen_range(-max_mode..=max_mode)).collect();
                let amplitude = rng.gen_range(-1.0..1.0);
                let phase = if rng.gen_bool(0.5) { Phase::Sin } else { Phase::Cos };
                terms.push(TrigTerm { amplitude, mode, phase });
            }
            TrigPolynomial { terms }
        })
        .collect();
    TrigForm { n, degree: k, comps }
}

/// Deterministic pseudo-random trigonometric k-form with modes |m_i| ≤ max_mode.
pub fn random_lowfreq_form(grid: &TorusGrid, k: usize, max_mode: usize, seed: u64) -> Result<FormField> {
    let min = *grid.sizes().iter().min().unwrap();
    if max_mode > min / 4 {
        return Err(Error::Params(format!("max_mode {max_mode} exceeds min(sizes)/4 = {}", min / 4)));
    }
    if k > grid.n() {
        return Err(Error::Degree(format!("degree {k} above dimension {}", grid.n())));
    }
    Ok(random_trig_form(grid.n(), k, max_mode as i32, seed).sample(grid))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_sign() {
        let g = TorusGrid::cube(4, 4).unwrap();
        let one = ScalarField::constant(&g, 1.0);
        let w = FormField::monomial(&one, &[1, 0]);
        assert_eq!(w.comp(0)[0], -1.0);
        let z = FormField::monomial(&one, &[1, 1]);
        assert!(z.is_zero());
    }

    #[test]
    fn symmetric_exact() {
        let g = TorusGrid::cube(4, 4).unwrap();
        let t = TensorField::symmetric_from(&g, |a, b| vec![(a * 10 + b) as f64 * 0.1; g.len()]);
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(t.comp(&[a, b]), t.comp(&[b, a]));
            }
        }
    }
}

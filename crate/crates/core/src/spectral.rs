//! Fourier differentiation along single axes of the torus grid.

use crate::error::{Error, Result};
use crate::grid::TorusGrid;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<usize, Plans>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
    static SCRATCH: RefCell<(Vec<Complex64>, Vec<Complex64>)> = const { RefCell::new((Vec::new(), Vec::new())) };
}

fn plans(size: usize) -> Plans {
    PLANS.with(|p| {
        let mut p = p.borrow_mut();
        let (planner, cache) = &mut *p;
        cache
            .entry(size)
            .or_insert_with(|| (planner.plan_fft_forward(size), planner.plan_fft_inverse(size)))
            .clone()
    })
}

/// Symmetric wave number of DFT bin `q` on `size` points.
pub fn wavenumber(q: usize, size: usize) -> f64 {
    if q <= size / 2 {
        q as f64
    } else {
        q as f64 - size as f64
    }
}

/// Multiplier (i m)^order, real part and imaginary part, with the Nyquist bin zeroed for odd order.
fn multipliers(size: usize, order: u32) -> Vec<Complex64> {
    (0..size)
        .map(|q| {
            if order % 2 == 1 && q == size / 2 {
                return Complex64::new(0.0, 0.0);
            }
            let m = wavenumber(q, size);
            Complex64::new(0.0, m).powu(order) / size as f64
        })
        .collect()
}

/// Derivative of order `order` along `axis`; returns the real part and the largest imaginary residue.
pub fn partial_raw(grid: &TorusGrid, values: &[f64], axis: usize, order: u32) -> (Vec<f64>, f64) {
    let size = grid.sizes()[axis];
    let stride = grid.strides()[axis];
    let len = grid.len();
    let block = size * stride;
    let outer = len / block;
    let (fwd, inv) = plans(size);
    let mult = multipliers(size, order);
    let mut out = vec![0.0; len];
    let mut max_imag = 0.0f64;
    SCRATCH.with(|s| {
        let mut s = s.borrow_mut();
        let (buf, scratch) = &mut *s;
        buf.resize(len, Complex64::new(0.0, 0.0));
        let need = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        scratch.resize(need, Complex64::new(0.0, 0.0));
        // gather lines contiguously
        for o in 0..outer {
            let base = o * block;
            for i in 0..stride {
                let line = &mut buf[(o * stride + i) * size..(o * stride + i + 1) * size];
                for (q, c) in line.iter_mut().enumerate() {
                    *c = Complex64::new(values[base + q * stride + i], 0.0);
                }
            }
        }
        fwd.process_with_scratch(buf, scratch);
        for line in buf.chunks_exact_mut(size) {
            for (c, m) in line.iter_mut().zip(&mult) {
                *c *= m;
            }
        }
        inv.process_with_scratch(buf, scratch);
        for o in 0..outer {
            let base = o * block;
            for i in 0..stride {
                let line = &buf[(o * stride + i) * size..(o * stride + i + 1) * size];
                for (q, c) in line.iter().enumerate() {
                    out[base + q * stride + i] = c.re;
                    max_imag = max_imag.max(c.im.abs());
                }
            }
        }
    });
    (out, max_imag)
}

/// Unchecked spectral derivative used on internally generated data.
pub fn partial(grid: &TorusGrid, values: &[f64], axis: usize, order: u32) -> Vec<f64> {
    partial_raw(grid, values, axis, order).0
}

/// Checked spectral derivative: validates input and the imaginary residue.
pub fn partial_checked(grid: &TorusGrid, values: &[f64], axis: usize, order: u32) -> Result<Vec<f64>> {
    if axis >= grid.n() {
        return Err(Error::Axis { axis, n: grid.n() });
    }
    if order == 0 {
        return Err(Error::Params("derivative order must be at least 1".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("spectral_partial input"));
    }
    let (out, imag) = partial_raw(grid, values, axis, order);
    let scale = out
        .iter()
        .chain(values.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    if imag > 1e-10 * scale {
        return Err(Error::Imaginary { imag, scale });
    }
    Ok(out)
}

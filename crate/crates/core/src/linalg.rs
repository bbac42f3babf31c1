//! Small dense helpers for pointwise n×n matrices (n ≤ 8).

/// Determinant of a k×k row-major matrix by partial-pivot elimination (input is clobbered).
pub fn det_in_place(m: &mut [f64], k: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..k {
        let mut piv = col;
        for r in col + 1..k {
            if m[r * k + col].abs() > m[piv * k + col].abs() {
                piv = r;
            }
        }
        if m[piv * k + col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            for c in 0..k {
                m.swap(piv * k + c, col * k + c);
            }
            det = -det;
        }
        let d = m[col * k + col];
        det *= d;
        for r in col + 1..k {
            let f = m[r * k + col] / d;
            if f != 0.0 {
                for c in col..k {
                    m[r * k + c] -= f * m[col * k + c];
                }
            }
        }
    }
    det
}

/// Inverse and determinant of an n×n matrix by Gauss-Jordan; None when singular.
pub fn inverse(a: &[f64], n: usize) -> Option<(Vec<f64>, f64)> {
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    let mut det = 1.0;
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if m[r * n + col].abs() > m[piv * n + col].abs() {
                piv = r;
            }
        }
        let p = m[piv * n + col];
        if p.abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for c in 0..n {
                m.swap(piv * n + c, col * n + c);
                inv.swap(piv * n + c, col * n + c);
            }
            det = -det;
        }
        det *= p;
        for c in 0..n {
            m[col * n + c] /= p;
            inv[col * n + c] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r * n + col];
                if f != 0.0 {
                    for c in 0..n {
                        m[r * n + c] -= f * m[col * n + c];
                        inv[r * n + c] -= f * inv[col * n + c];
                    }
                }
            }
        }
    }
    Some((inv, det))
}

/// True when the symmetric matrix admits a Cholesky factorization.
pub fn is_positive_definite(a: &[f64], n: usize) -> bool {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for p in 0..j {
                s -= l[i * n + p] * l[j * n + p];
            }
            if i == j {
                if s <= 0.0 {
                    return false;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    true
}

/// Entries det(M[I,J]) of the k-th compound matrix, indexed by lexicographic subsets.
pub fn compound(m: &[f64], n: usize, k: usize) -> Vec<f64> {
    let list = &crate::multiindex::table(n).lists[k];
    let c = list.len();
    let mut out = vec![0.0; c * c];
    let mut sub = vec![0.0; k * k];
    for (r, &ri) in list.iter().enumerate() {
        let rows: Vec<usize> = crate::multiindex::axes(ri).collect();
        for (s, &si) in list.iter().enumerate() {
            let cols: Vec<usize> = crate::multiindex::axes(si).collect();
            for (i, &a) in rows.iter().enumerate() {
                for (j, &b) in cols.iter().enumerate() {
                    sub[i * k + j] = m[a * n + b];
                }
            }
            out[r * c + s] = if k == 0 { 1.0 } else { det_in_place(&mut sub, k) };
        }
    }
    out
}

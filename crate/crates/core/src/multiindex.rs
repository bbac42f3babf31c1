//! Strictly increasing multi-indices stored as bit masks, in lexicographic order.

use std::sync::OnceLock;

pub const MAX_DIM: usize = 8;

/// Index tables for all degrees of one dimension.
#[derive(Debug)]
pub struct IndexTable {
    pub n: usize,
    /// `lists[k]` holds the masks of degree k in lexicographic order.
    pub lists: Vec<Vec<u16>>,
    /// position of a mask inside its degree list
    pub pos: Vec<usize>,
}

fn build(n: usize) -> IndexTable {
    let mut lists = vec![Vec::new(); n + 1];
    for k in 0..=n {
        let mut cur = Vec::with_capacity(k);
        rec(n, k, 0, &mut cur, &mut lists[k]);
    }
    let mut pos = vec![usize::MAX; 1 << n];
    for l in &lists {
        for (i, &m) in l.iter().enumerate() {
            pos[m as usize] = i;
        }
    }
    IndexTable { n, lists, pos }
}

fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<u16>) {
    if cur.len() == k {
        out.push(cur.iter().fold(0u16, |m, &i| m | (1 << i)));
        return;
    }
    for i in start..n {
        cur.push(i);
        rec(n, k, i + 1, cur, out);
        cur.pop();
    }
}

pub fn table(n: usize) -> &'static IndexTable {
    static TABLES: OnceLock<Vec<IndexTable>> = OnceLock::new();
    let t = TABLES.get_or_init(|| (0..=MAX_DIM).map(build).collect());
    &t[n]
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Axes of a mask in increasing order.
pub fn axes(mask: u16) -> impl Iterator<Item = usize> {
    (0..16).filter(move |i| mask & (1 << i) != 0)
}

/// Sign of dy^a ∧ dy^I relative to the sorted index I ∪ {a}.
pub fn insert_sign(a: usize, mask: u16) -> f64 {
    let below = (mask & ((1u16 << a) - 1)).count_ones();
    if below % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Sign with dy^I ∧ dy^J = sign · dy^{I∪J} (zero when they overlap).
pub fn wedge_sign(i: u16, j: u16) -> f64 {
    if i & j != 0 {
        return 0.0;
    }
    // count pairs (a in I, b in J) with a > b
    let mut inv = 0u32;
    for b in axes(j) {
        inv += (i >> (b + 1)).count_ones();
    }
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn complement(mask: u16, n: usize) -> u16 {
    !mask & ((1u16 << n) - 1)
}

/// Sign of the permutation (I, I^c) relative to dy^1 ∧ … ∧ dy^n.
pub fn star_sign(mask: u16, n: usize) -> f64 {
    wedge_sign(mask, complement(mask, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_order() {
        let t = table(4);
        assert_eq!(t.lists[2].len(), 6);
        assert_eq!(t.lists[2][0], 0b0011);
        assert_eq!(t.lists[2][1], 0b0101);
        assert_eq!(t.lists[2][5], 0b1100);
        for k in 0..=6 {
            assert_eq!(table(6).lists[k].len(), binomial(6, k));
        }
    }

    #[test]
    fn signs() {
        // dy2 ∧ dy1 = -dy1∧dy2
        assert_eq!(insert_sign(1, 0b01), -1.0);
        assert_eq!(insert_sign(0, 0b10), 1.0);
        assert_eq!(star_sign(0b0001, 4), 1.0);
        // dy2 ∧ dy1dy3dy4 = -vol
        assert_eq!(star_sign(0b0010, 4), -1.0);
        assert_eq!(wedge_sign(0b0011, 0b1100), 1.0);
    }
}

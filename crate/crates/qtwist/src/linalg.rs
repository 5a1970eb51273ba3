//! Small dense helpers: Kronecker products, permutations, and a rank-aware
//! least-squares solve that also hands back the numerical null space.

use crate::{CMat, C64};
use nalgebra::DVector;

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn diag(v: &[C64]) -> CMat {
    CMat::from_diagonal(&DVector::from_column_slice(v))
}

/// Flip `P(a (x) b) = b (x) a` on `C^2 (x) C^2`.
pub fn flip() -> CMat {
    let mut p = CMat::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            p[(2 * j + i, 2 * i + j)] = C64::new(1.0, 0.0);
        }
    }
    p
}

/// Operator that reorders `n` qubit-like slots: a tensor whose `k`-th
/// factor lives in slot `order[k]` is mapped to standard slot order.
pub fn slot_permutation(order: &[usize]) -> CMat {
    let n = order.len();
    let d = 1usize << n;
    let mut p = CMat::zeros(d, d);
    for src in 0..d {
        let mut dst = 0;
        for (k, &slot) in order.iter().enumerate() {
            let bit = (src >> (n - 1 - k)) & 1;
            dst |= bit << (n - 1 - slot);
        }
        p[(dst, src)] = C64::new(1.0, 0.0);
    }
    p
}

/// Embeds a two-slot operator into three slots `(i, j)` with `i != j`.
pub fn embed3(x: &CMat, i: usize, j: usize) -> CMat {
    let k = 3 - i - j;
    let wide = kron(x, &eye(2));
    let p = slot_permutation(&[i, j, k]);
    &p * wide * p.transpose()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Row-major vectorisation of `X T - T Y` as a matrix acting on `vec(T)`.
pub fn sylvester_map(x: &CMat, y: &CMat) -> CMat {
    let n = x.nrows();
    kron(x, &eye(n)) - kron(&eye(n), &y.transpose())
}

pub fn vec_rows(m: &CMat) -> Vec<C64> {
    let mut v = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            v.push(m[(i, j)]);
        }
    }
    v
}

pub fn unvec_rows(v: &[C64], n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| v[i * n + j])
}

/// Minimum-norm least-squares solution of `A x = b` via the SVD.
pub struct LstsqSolution {
    pub x: Vec<C64>,
    pub rank: usize,
    /// `max |A x - b|` relative to `max(1, max |b|)`.
    pub residual: f64,
    /// Orthonormal basis of the numerical null space (columns).
    pub null_space: Vec<Vec<C64>>,
}

pub fn lstsq(a: &CMat, b: &[C64], rcond: f64) -> LstsqSolution {
    let n = a.ncols();
    let bv = DVector::from_column_slice(b);
    if n == 0 {
        return LstsqSolution { x: vec![], rank: 0, residual: 0.0, null_space: vec![] };
    }
    // Pad short systems so the thin SVD returns a full right basis.
    let a_full = if a.nrows() < n {
        let mut p = CMat::zeros(n, n);
        p.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let mut b_full = DVector::zeros(a_full.nrows());
    b_full.rows_mut(0, b.len()).copy_from(&bv);
    let svd = a_full.svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = smax * rcond;
    let utb = u.adjoint() * &b_full;
    let mut x = DVector::<C64>::zeros(n);
    let mut rank = 0;
    let mut null_space = Vec::new();
    for k in 0..n {
        let s = svd.singular_values[k];
        let vk = vt.row(k).adjoint();
        if s > tol && s > 0.0 {
            rank += 1;
            x += vk * (utb[k] / s);
        } else {
            null_space.push(vk.iter().cloned().collect());
        }
    }
    let r = a * &x - bv;
    let scale = b.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let residual = r.iter().map(|v| v.norm()).fold(0.0, f64::max) / scale;
    LstsqSolution { x: x.iter().cloned().collect(), rank, residual, null_space }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flip_swaps_factors() {
        let a = CMat::from_fn(2, 2, |i, j| C64::new((i * 2 + j) as f64, 1.0));
        let b = CMat::from_fn(2, 2, |i, j| C64::new(1.0, (i + 3 * j) as f64));
        let p = flip();
        assert!(max_abs(&(&p * kron(&a, &b) * &p - kron(&b, &a))) < 1e-15);
    }

    #[test]
    fn embed_matches_explicit_kron() {
        let x = CMat::from_fn(4, 4, |i, j| C64::new(i as f64 + 0.5, j as f64));
        assert!(max_abs(&(embed3(&x, 0, 1) - kron(&x, &eye(2)))) < 1e-15);
        assert!(max_abs(&(embed3(&x, 1, 2) - kron(&eye(2), &x))) < 1e-15);
        let p23 = kron(&eye(2), &flip());
        assert!(max_abs(&(embed3(&x, 0, 2) - &p23 * kron(&x, &eye(2)) * &p23)) < 1e-15);
        // reversed slots: first factor in slot 1, second in slot 0
        let p = flip();
        assert!(max_abs(&(embed3(&x, 1, 0) - kron(&(&p * &x * &p), &eye(2)))) < 1e-15);
    }

    #[test]
    fn lstsq_reports_null_space() {
        let a = CMat::from_row_slice(2, 3, &[C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(2.0, 0.0)]);
        let s = lstsq(&a, &[C64::new(2.0, 0.0), C64::new(4.0, 0.0)], 1e-12);
        assert_eq!(s.rank, 2);
        assert_eq!(s.null_space.len(), 1);
        assert!((s.x[0] - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((s.x[2] - C64::new(2.0, 0.0)).norm() < 1e-14);
        assert!(s.residual < 1e-14);
    }
}

//! The fundamental evaluation representation of quantum affine sl(2):
//! generator matrices with their spectral weights, the Cartan form
//! `phi = H (x) H / 2`, twisted generators `f`, and numeric tensor-product
//! representations built with the coproduct
//! `D(e_a) = 1 (x) e_a + e_a (x) q^{s(a) H}`,
//! `D(e_-a) = q^{-s(a) H} (x) e_-a + e_-a (x) 1`.
//!
//! Generator arrays are indexed by the simple root `a` in `{0, 1}`;
//! `s(1) = +1`, `s(0) = -1` is the sign with `phi(a, .) = s(a) H`.

use crate::fps::{SeriesMatrix, VarTag};
use crate::linalg::{diag, eye, kron};
use crate::{CMat, C64};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvRepError {
    #[error("q = {0} is degenerate (0 or +-1)")]
    DegenerateQ(C64),
    #[error("spectral weights ({0}, {1}) do not reduce to a power series in one ratio")]
    IncompatibleWeights(i32, i32),
}

/// `phi(a, .) = s(a) H`.
pub fn s(a: usize) -> f64 {
    if a == 1 {
        1.0
    } else {
        -1.0
    }
}

fn cm(rows: [[f64; 2]; 2]) -> CMat {
    CMat::from_fn(2, 2, |i, j| C64::new(rows[i][j], 0.0))
}

pub fn e12() -> CMat {
    cm([[0.0, 1.0], [0.0, 0.0]])
}

pub fn e21() -> CMat {
    cm([[0.0, 0.0], [1.0, 0.0]])
}

pub fn h_matrix() -> CMat {
    cm([[1.0, 0.0], [0.0, -1.0]])
}

/// A 2x2 matrix carrying the factor `z^weight`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedMat {
    pub mat: CMat,
    pub weight: i32,
}

impl WeightedMat {
    pub fn at(&self, z: C64) -> CMat {
        &self.mat * z.powi(self.weight)
    }
}

/// Generator matrices of the evaluation module (matrix parts; the
/// spectral parameter enters only through the weights of `e0`, `e_neg0`).
#[derive(Clone, Debug)]
pub struct RepGenerators {
    pub q: C64,
    pub kappa: C64,
    pub e1: WeightedMat,
    pub e_neg1: WeightedMat,
    pub e0: WeightedMat,
    pub e_neg0: WeightedMat,
    pub h: CMat,
}

pub fn build_rep(q: C64) -> Result<RepGenerators, EvRepError> {
    let one = C64::new(1.0, 0.0);
    if q.norm() < 1e-300 || (q - one).norm() < 1e-14 || (q + one).norm() < 1e-14 {
        return Err(EvRepError::DegenerateQ(q));
    }
    let kappa = (q - q.inv()).sqrt();
    let w = |m: CMat, weight| WeightedMat { mat: m * kappa, weight };
    Ok(RepGenerators {
        q,
        kappa,
        e1: w(e12(), 0),
        e_neg1: w(e21(), 0),
        e0: w(e21(), 1),
        e_neg0: w(e12(), -1),
        h: h_matrix(),
    })
}

impl RepGenerators {
    pub fn e(&self, a: usize) -> &WeightedMat {
        if a == 1 {
            &self.e1
        } else {
            &self.e0
        }
    }

    pub fn e_neg(&self, a: usize) -> &WeightedMat {
        if a == 1 {
            &self.e_neg1
        } else {
            &self.e_neg0
        }
    }

    /// `q^{t H}` as a 2x2 diagonal matrix.
    pub fn q_h(&self, t: f64) -> CMat {
        q_diag(self.q, &[1.0, -1.0], t)
    }

    /// The module at spectral parameter `z`.
    pub fn at(&self, z: C64) -> Rep {
        Rep {
            q: self.q,
            e: [self.e0.at(z), self.e1.at(z)],
            em: [self.e_neg0.at(z), self.e_neg1.at(z)],
            h: vec![1.0, -1.0],
            factors: 1,
        }
    }
}

/// `diag(q^{t h_i})`.
pub fn q_diag(q: C64, h: &[f64], t: f64) -> CMat {
    let lq = q.ln();
    let v: Vec<C64> = h.iter().map(|&hi| (lq * (t * hi)).exp()).collect();
    diag(&v)
}

/// `phi = H (x) H / 2`, its q-exponential, and `phi(a, .)` as 2x2 matrices.
#[derive(Clone, Debug)]
pub struct CartanForm {
    pub phi: CMat,
    pub q_phi: CMat,
    pub phi_weights: [CMat; 2],
}

pub fn cartan_form(q: C64) -> CartanForm {
    let h = h_matrix();
    let phi = kron(&h, &h) * C64::new(0.5, 0.0);
    let q_phi = q_diag(q, &[0.5, -0.5, -0.5, 0.5], 1.0);
    CartanForm { phi, q_phi, phi_weights: [&h * C64::new(-1.0, 0.0), h.clone()] }
}

/// `f_a = q^{-s(a) H} e_a` and `f_-a = e_-a q^{s(a) H}`.
#[derive(Clone, Debug)]
pub struct TwistedGenerators {
    pub f: [WeightedMat; 2],
    pub f_neg: [WeightedMat; 2],
}

pub fn twisted_generators(rep: &RepGenerators) -> TwistedGenerators {
    let f = |a: usize| WeightedMat { mat: rep.q_h(-s(a)) * &rep.e(a).mat, weight: rep.e(a).weight };
    let fm = |a: usize| WeightedMat { mat: &rep.e_neg(a).mat * rep.q_h(s(a)), weight: rep.e_neg(a).weight };
    TwistedGenerators { f: [f(0), f(1)], f_neg: [fm(0), fm(1)] }
}

/// `a(z1) (x) b(z2)` as a matrix series in the ratio named by `tag`, placed
/// at order `order`. The total weight must vanish so that only the ratio
/// survives, and the resulting power must be non-negative.
pub fn tensor(a: &WeightedMat, b: &WeightedMat, tag: VarTag, order: usize) -> Result<SeriesMatrix, EvRepError> {
    let (wa, wb) = (a.weight, b.weight);
    if wa + wb != 0 {
        return Err(EvRepError::IncompatibleWeights(wa, wb));
    }
    // z1^wa z2^wb = (z2/z1)^wb = (z1/z2)^wa
    let n = match tag {
        VarTag::Z2OverZ1 => wb,
        VarTag::Z1OverZ2 => wa,
        VarTag::Other => {
            if wa == 0 {
                0
            } else {
                return Err(EvRepError::IncompatibleWeights(wa, wb));
            }
        }
    };
    if n < 0 || n as usize > order {
        return Err(EvRepError::IncompatibleWeights(wa, wb));
    }
    let mut s = SeriesMatrix::zero(4, order, tag);
    let mut c = s.coeffs().to_vec();
    c[n as usize] = kron(&a.mat, &b.mat);
    s = SeriesMatrix::from_coeffs(c, tag);
    Ok(s)
}

pub fn identity_weighted() -> WeightedMat {
    WeightedMat { mat: eye(2), weight: 0 }
}

/// Rep-level Cartan element: `q^{H_hat} X q^{-H_hat}` acts as
/// `q^{h} X q^{-h}` times `q^{degree * weight(X)}`, the second factor
/// standing for the derivation `z d/dz` (realised by rescaling `z`).
#[derive(Clone, Debug)]
pub struct CartanElement {
    pub h: CMat,
    pub degree: f64,
}

impl CartanElement {
    pub fn conjugate(&self, q: C64, x: &WeightedMat) -> WeightedMat {
        let d: Vec<f64> = (0..2).map(|i| self.h[(i, i)].re).collect();
        let qp = q_diag(q, &d, 1.0);
        let qm = q_diag(q, &d, -1.0);
        let scale = (q.ln() * (self.degree * x.weight as f64)).exp();
        WeightedMat { mat: qp * &x.mat * qm * scale, weight: x.weight }
    }
}

/// Solves for the diagonal traceless `h` with `[h, e1] = 2 e1`, and for the
/// degree coefficient that makes `ad H_hat` act on `e0` by the same root
/// length `(a0|a0) = 2`.
pub fn solve_cartan_element(rep: &RepGenerators) -> CartanElement {
    // unknowns (h1, h2): (h1 - h2) = 2 from the e1 entry, h1 + h2 = 0
    let m = nalgebra::Matrix2::new(1.0, -1.0, 1.0, 1.0);
    let sol = m.lu().solve(&nalgebra::Vector2::new(2.0, 0.0)).expect("nonsingular");
    let h = diag(&[C64::new(sol[0], 0.0), C64::new(sol[1], 0.0)]);
    // e0 ~ E21 has H-weight (h2 - h1); its z-weight is e0.weight
    let degree = (2.0 - (sol[1] - sol[0])) / rep.e0.weight as f64;
    CartanElement { h, degree }
}

/// A concrete (numeric) module: generators at fixed spectral parameters,
/// diagonal `H` eigenvalues, and the number of evaluation factors.
#[derive(Clone, Debug)]
pub struct Rep {
    pub q: C64,
    pub e: [CMat; 2],
    pub em: [CMat; 2],
    pub h: Vec<f64>,
    pub factors: usize,
}

impl Rep {
    pub fn evaluation(q: C64, z: C64) -> Result<Rep, EvRepError> {
        Ok(build_rep(q)?.at(z))
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }

    pub fn q_h(&self, t: f64) -> CMat {
        q_diag(self.q, &self.h, t)
    }

    pub fn f(&self, a: usize) -> CMat {
        self.q_h(-s(a)) * &self.e[a]
    }

    pub fn fm(&self, a: usize) -> CMat {
        &self.em[a] * self.q_h(s(a))
    }

    /// `A (x) B` with the coproduct action.
    pub fn tensor(a: &Rep, b: &Rep) -> Rep {
        let (ia, ib) = (eye(a.dim()), eye(b.dim()));
        let e = |g: usize| kron(&ia, &b.e[g]) + kron(&a.e[g], &b.q_h(s(g)));
        let em = |g: usize| kron(&a.q_h(-s(g)), &b.em[g]) + kron(&a.em[g], &ib);
        let mut h = Vec::with_capacity(a.dim() * b.dim());
        for ha in &a.h {
            for hb in &b.h {
                h.push(ha + hb);
            }
        }
        Rep { q: a.q, e: [e(0), e(1)], em: [em(0), em(1)], h, factors: a.factors + b.factors }
    }

    /// The opposite coproduct `D'(x) = P D(x) P` on `A (x) B`.
    pub fn tensor_opposite(a: &Rep, b: &Rep) -> Rep {
        let (ia, ib) = (eye(a.dim()), eye(b.dim()));
        let e = |g: usize| kron(&a.e[g], &ib) + kron(&a.q_h(s(g)), &b.e[g]);
        let em = |g: usize| kron(&a.em[g], &b.q_h(-s(g))) + kron(&ia, &b.em[g]);
        let mut h = Vec::with_capacity(a.dim() * b.dim());
        for ha in &a.h {
            for hb in &b.h {
                h.push(ha + hb);
            }
        }
        Rep { q: a.q, e: [e(0), e(1)], em: [em(0), em(1)], h, factors: a.factors + b.factors }
    }

    pub fn h_matrix(&self) -> CMat {
        let v: Vec<C64> = self.h.iter().map(|&x| C64::new(x, 0.0)).collect();
        diag(&v)
    }
}

/// `q^phi` on `A (x) B`, i.e. `diag(q^{h_a h_b / 2})`.
pub fn q_phi_on(a: &Rep, b: &Rep) -> CMat {
    let lq = a.q.ln();
    let mut v = Vec::with_capacity(a.dim() * b.dim());
    for ha in &a.h {
        for hb in &b.h {
            v.push((lq * (0.5 * ha * hb)).exp());
        }
    }
    diag(&v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    fn comm(a: &CMat, b: &CMat) -> CMat {
        a * b - b * a
    }

    #[test]
    fn defining_relations() {
        let q = C64::new(0.5, 0.0);
        let r = build_rep(q).unwrap();
        assert!((r.kappa * r.kappa - (q - q.inv())).norm() < 1e-15);
        let c = comm(&r.e1.mat, &r.e_neg1.mat);
        let want = diag(&[q - q.inv(), q.inv() - q]);
        assert!(max_abs(&(c - &want)) < 1e-12);
        assert!(max_abs(&(comm(&r.h, &r.e1.mat) - &r.e1.mat * C64::new(2.0, 0.0))) < 1e-15);
        assert!(max_abs(&(comm(&r.h, &r.e0.mat) + &r.e0.mat * C64::new(2.0, 0.0))) < 1e-15);
        // [e0, e_-0] with weights z and 1/z cancelling
        let z = C64::new(0.3, 0.7);
        let c0 = comm(&r.e0.at(z), &r.e_neg0.at(z));
        assert!(max_abs(&(c0 - (r.q_h(-1.0) - r.q_h(1.0)))) < 1e-12);
        // different simple roots commute
        assert!(max_abs(&comm(&r.e1.at(z), &r.e_neg0.at(z))) < 1e-15);
        assert!(matches!(build_rep(C64::new(1.0, 0.0)), Err(EvRepError::DegenerateQ(_))));
        assert!(build_rep(C64::new(-1.0, 0.0)).is_err());
    }

    #[test]
    fn cartan_form_entries() {
        let q = C64::new(0.5, 0.0);
        let cf = cartan_form(q);
        let want = [q.sqrt(), q.sqrt().inv(), q.sqrt().inv(), q.sqrt()];
        for (i, w) in want.iter().enumerate() {
            assert!((cf.q_phi[(i, i)] - w).norm() < 1e-15);
        }
        assert!(max_abs(&(&cf.phi_weights[1] + &cf.phi_weights[0])) == 0.0);
    }

    #[test]
    fn twisted_generators_are_diagonal_rescalings() {
        let r = build_rep(C64::new(0.6, 0.2)).unwrap();
        let t = twisted_generators(&r);
        for a in 0..2 {
            let m = &t.f[a].mat;
            let e = &r.e(a).mat;
            for i in 0..2 {
                for j in 0..2 {
                    assert_eq!(m[(i, j)].norm() == 0.0, e[(i, j)].norm() == 0.0);
                }
            }
            assert_eq!(t.f[a].weight, r.e(a).weight);
        }
    }

    #[test]
    fn tensor_placements() {
        let r = build_rep(C64::new(0.5, 0.0)).unwrap();
        let one = identity_weighted();
        let s = tensor(&r.e1, &one, VarTag::Z2OverZ1, 2).unwrap();
        assert!(max_abs(&(s.coeff(0) - kron(&(e12() * r.kappa), &eye(2)))) < 1e-15);
        assert!(max_abs(&(tensor(&one, &one, VarTag::Other, 0).unwrap().coeff(0) - eye(4))) == 0.0);
        // e_-1 (x) e1: the only nonzero entry is at (row 2, col 1)
        let t = tensor(&r.e_neg1, &r.e1, VarTag::Z2OverZ1, 1).unwrap();
        let m = t.coeff(0);
        for i in 0..4 {
            for j in 0..4 {
                let want = if (i, j) == (2, 1) { r.kappa * r.kappa } else { C64::new(0.0, 0.0) };
                assert!((m[(i, j)] - want).norm() < 1e-15);
            }
        }
        // e_-0 (x) e0 carries z2/z1
        let t = tensor(&r.e_neg0, &r.e0, VarTag::Z2OverZ1, 2).unwrap();
        assert!(max_abs(t.coeff(0)) == 0.0 && max_abs(t.coeff(1)) > 0.0);
        assert!(tensor(&r.e_neg0, &r.e0, VarTag::Z1OverZ2, 2).is_err());
        assert!(tensor(&r.e0, &one, VarTag::Z2OverZ1, 2).is_err());
    }

    #[test]
    fn cartan_element() {
        let q = C64::new(0.5, 0.0);
        let r = build_rep(q).unwrap();
        let ce = solve_cartan_element(&r);
        assert!(max_abs(&(comm(&ce.h, &r.e1.mat) - &r.e1.mat * C64::new(2.0, 0.0))) < 1e-14);
        assert!(max_abs(&(&ce.h - h_matrix())) < 1e-14);
        let c = ce.conjugate(q, &r.e0);
        assert!(max_abs(&(c.mat - &r.e0.mat * q.powi(2))) < 1e-14);
        let c = ce.conjugate(q, &r.e1);
        assert!(max_abs(&(c.mat - &r.e1.mat * q.powi(2))) < 1e-14);
    }

    #[test]
    fn tensor_module_keeps_relations() {
        let q = C64::new(0.5, 0.1);
        let a = Rep::evaluation(q, C64::new(1.0, 0.0)).unwrap();
        let b = Rep::evaluation(q, C64::new(0.3, -0.2)).unwrap();
        for t in [Rep::tensor(&a, &b), Rep::tensor_opposite(&a, &b)] {
            for g in 0..2 {
                let c = comm(&t.e[g], &t.em[g]);
                let want = t.q_h(s(g)) - t.q_h(-s(g));
                assert!(max_abs(&(c - want)) < 1e-12);
            }
            assert!(max_abs(&comm(&t.e[0], &t.em[1])) < 1e-12);
        }
    }
}

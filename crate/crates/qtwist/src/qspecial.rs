//! q-series and elliptic special functions: q-Pochhammer products, the
//! R-matrix normalizer `A(q,x)`, theta functions, Jacobi elliptic functions
//! and the quarter period / modulus of a nome.

use crate::fps::TruncatedSeries;
use crate::C64;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecialError {
    #[error("q-Pochhammer base {0} has modulus >= 1")]
    DivergentBase(C64),
    #[error("|q| = 1 is not allowed")]
    ModulusOne,
    #[error("modular parameter tau = {0} must have positive imaginary part")]
    BadModularParam(C64),
    #[error("nome {0} must satisfy 0 < |nome| < 1")]
    BadNome(C64),
    #[error("argument {0} outside the convergence domain")]
    ConvergenceDomain(C64),
}

/// Factors closer to 1 than this (relative) end an infinite product.
pub const PRODUCT_CUTOFF: f64 = 1e-16;
const MAX_FACTORS: usize = 100_000;

/// `(a; q)_inf` or, with two bases, `(a; q, p)_inf = prod_{m,n} (1 - a q^m p^n)`.
#[derive(Clone, Debug)]
pub struct QPochhammerArgs {
    pub a: C64,
    pub bases: Vec<C64>,
    pub cutoff: f64,
}

impl QPochhammerArgs {
    pub fn single(a: C64, q: C64) -> Self {
        QPochhammerArgs { a, bases: vec![q], cutoff: PRODUCT_CUTOFF }
    }

    pub fn double(a: C64, q: C64, p: C64) -> Self {
        QPochhammerArgs { a, bases: vec![q, p], cutoff: PRODUCT_CUTOFF }
    }
}

fn single_product(a: C64, q: C64, cutoff: f64) -> C64 {
    let mut acc = C64::new(1.0, 0.0);
    let mut t = a;
    for _ in 0..MAX_FACTORS {
        if t.norm() < cutoff {
            break;
        }
        acc *= C64::new(1.0, 0.0) - t;
        t *= q;
    }
    acc
}

pub fn q_pochhammer(args: &QPochhammerArgs) -> Result<C64, SpecialError> {
    for b in &args.bases {
        if b.norm() >= 1.0 {
            return Err(SpecialError::DivergentBase(*b));
        }
    }
    match args.bases.as_slice() {
        [q] => Ok(single_product(args.a, *q, args.cutoff)),
        [q, p] => {
            let mut acc = C64::new(1.0, 0.0);
            let mut t = args.a;
            for _ in 0..MAX_FACTORS {
                if t.norm() < args.cutoff {
                    break;
                }
                acc *= single_product(t, *q, args.cutoff);
                t *= p;
            }
            Ok(acc)
        }
        _ => panic!("one or two bases expected"),
    }
}

fn check_q(q: C64) -> Result<(), SpecialError> {
    if (q.norm() - 1.0).abs() < 1e-14 {
        Err(SpecialError::ModulusOne)
    } else {
        Ok(())
    }
}

/// Coefficient `(q^k - q^-k)/(k (q^k + q^-k))` of `x^k` in `log A(q,x)`.
fn log_a_coeff(q: C64, k: usize) -> C64 {
    let qk = q.powu(k as u32);
    let qi = qk.inv();
    (qk - qi) / (qk + qi) / k as f64
}

/// `A(q,x) = exp(sum_k (1/k) (q^k - q^-k)/(q^k + q^-k) x^k)`, the scalar
/// normalizer of the standard R-matrix, evaluated from the sum (|x| < 1).
pub fn normalizer_a(q: C64, x: C64) -> Result<C64, SpecialError> {
    check_q(q)?;
    if x.norm() >= 1.0 {
        return Err(SpecialError::ConvergenceDomain(x));
    }
    let mut s = C64::new(0.0, 0.0);
    let mut xk = C64::new(1.0, 0.0);
    for k in 1..MAX_FACTORS {
        xk *= x;
        // the k-th coefficient is bounded by 1/k
        if xk.norm() / (k as f64) < 1e-18 {
            break;
        }
        s += log_a_coeff(q, k) * xk;
    }
    Ok(s.exp())
}

/// Power series of `A(q,x)` in `x` to the given order.
pub fn normalizer_a_series(q: C64, order: usize) -> Result<TruncatedSeries, SpecialError> {
    check_q(q)?;
    let mut c = vec![C64::new(0.0, 0.0); order + 1];
    for (k, v) in c.iter_mut().enumerate().skip(1) {
        *v = log_a_coeff(q, k);
    }
    Ok(TruncatedSeries::new(c).exp())
}

/// `A(q,x)` from q-Pochhammer products:
/// `(x;q^4)(xq^4;q^4)/(xq^2;q^4)^2` for |q| < 1, and the same expression in
/// `1/q` inverted for |q| > 1. Converges for every `x` away from the poles.
pub fn normalizer_a_product(q: C64, x: C64) -> Result<C64, SpecialError> {
    check_q(q)?;
    let (b, invert) = if q.norm() < 1.0 { (q, false) } else { (q.inv(), true) };
    let b2 = b * b;
    let b4 = b2 * b2;
    let num = single_product(x, b4, PRODUCT_CUTOFF) * single_product(x * b4, b4, PRODUCT_CUTOFF);
    let den = single_product(x * b2, b4, PRODUCT_CUTOFF).powu(2);
    let v = num / den;
    Ok(if invert { v.inv() } else { v })
}

/// The four classical theta functions with quasi-periods 1 and `tau`,
/// nome `p = exp(i pi tau)`; e.g. `theta_3(z) = sum_n p^{n^2} e^{2 pi i n z}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThetaKind {
    One,
    Two,
    Three,
    Four,
}

/// Labels used for the eight-vertex weights in the physics literature
/// this crate follows (unadorned, 1, 2, 3), and their classical meaning.
///
/// The assignment was fixed by matching the twisted R-matrix numerically:
/// the unadorned function is the odd one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EightVertexTheta {
    Plain,
    One,
    Two,
    Three,
}

impl EightVertexTheta {
    pub fn classical(self) -> ThetaKind {
        match self {
            EightVertexTheta::Plain => ThetaKind::One,
            EightVertexTheta::One => ThetaKind::Two,
            EightVertexTheta::Two => ThetaKind::Four,
            EightVertexTheta::Three => ThetaKind::Three,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ThetaParams {
    pub z: C64,
    pub tau: C64,
    pub kind: ThetaKind,
}

fn nome_pow(tau: C64, a: f64) -> C64 {
    (C64::new(0.0, PI) * tau * a).exp()
}

/// Theta function by its Fourier sum.
pub fn theta(params: ThetaParams) -> Result<C64, SpecialError> {
    let ThetaParams { z, tau, kind } = params;
    if tau.im <= 0.0 {
        return Err(SpecialError::BadModularParam(tau));
    }
    let one = C64::new(1.0, 0.0);
    let half = matches!(kind, ThetaKind::One | ThetaKind::Two);
    let mut acc = if half { C64::new(0.0, 0.0) } else { one };
    let start = if half { 0 } else { 1 };
    let growth = (2.0 * PI * z.im.abs()).exp();
    for n in start..MAX_FACTORS {
        let m = if half { n as f64 + 0.5 } else { n as f64 };
        let w = nome_pow(tau, m * m);
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let arg = C64::new(2.0 * PI * m, 0.0) * z;
        let term = match kind {
            ThetaKind::One => w * arg.sin() * (2.0 * sign),
            ThetaKind::Two => w * arg.cos() * 2.0,
            ThetaKind::Three => w * arg.cos() * 2.0,
            ThetaKind::Four => w * arg.cos() * (2.0 * sign),
        };
        acc += term;
        if n > 2 && w.norm() * growth.powf(2.0 * m) < 1e-18 * acc.norm().max(1e-300) {
            break;
        }
    }
    Ok(acc)
}

/// Theta function by its Jacobi triple product (independent of [`theta`]).
pub fn theta_product(params: ThetaParams) -> Result<C64, SpecialError> {
    let ThetaParams { z, tau, kind } = params;
    if tau.im <= 0.0 {
        return Err(SpecialError::BadModularParam(tau));
    }
    let one = C64::new(1.0, 0.0);
    let p = nome_pow(tau, 1.0);
    let c2 = (C64::new(2.0 * PI, 0.0) * z).cos();
    let mut acc = match kind {
        ThetaKind::One => nome_pow(tau, 0.25) * (C64::new(PI, 0.0) * z).sin() * 2.0,
        ThetaKind::Two => nome_pow(tau, 0.25) * (C64::new(PI, 0.0) * z).cos() * 2.0,
        _ => one,
    };
    let mut p2n = one;
    for n in 1..MAX_FACTORS {
        let podd = p2n * p; // p^{2n-1}
        p2n *= p * p; // p^{2n}
        let f = match kind {
            ThetaKind::One => one - p2n * c2 * 2.0 + p2n * p2n,
            ThetaKind::Two => one + p2n * c2 * 2.0 + p2n * p2n,
            ThetaKind::Three => one + podd * c2 * 2.0 + podd * podd,
            ThetaKind::Four => one - podd * c2 * 2.0 + podd * podd,
        };
        acc *= (one - p2n) * f;
        if n > 2 && podd.norm() * (1.0 + c2.norm()) < 1e-18 {
            break;
        }
    }
    Ok(acc)
}

/// Modular parameter `tau` with `exp(i pi tau) = nome` (principal log).
pub fn tau_from_nome(nome: C64) -> Result<C64, SpecialError> {
    if nome.norm() >= 1.0 || nome.norm() == 0.0 {
        return Err(SpecialError::BadNome(nome));
    }
    Ok(nome.ln() / C64::new(0.0, PI))
}

fn th(kind: ThetaKind, z: C64, tau: C64) -> C64 {
    theta(ThetaParams { z, tau, kind }).expect("tau checked by caller")
}

/// `(sn, cn, dn)` at `v = 2K w` for the modulus belonging to `nome`,
/// computed from theta quotients in the reduced argument `w`.
pub fn jacobi_from_reduced(w: C64, nome: C64) -> Result<(C64, C64, C64), SpecialError> {
    let tau = tau_from_nome(nome)?;
    let zero = C64::new(0.0, 0.0);
    let (t2, t3, t4) = (th(ThetaKind::Two, zero, tau), th(ThetaKind::Three, zero, tau), th(ThetaKind::Four, zero, tau));
    let d = th(ThetaKind::Four, w, tau);
    let sn = t3 / t2 * th(ThetaKind::One, w, tau) / d;
    let cn = t4 / t2 * th(ThetaKind::Two, w, tau) / d;
    let dn = t4 / t3 * th(ThetaKind::Three, w, tau) / d;
    Ok((sn, cn, dn))
}

/// Jacobi elliptic functions `(sn, cn, dn)(v, k)` where `k` is the modulus
/// of the given nome.
pub fn jacobi_sn_cn_dn(v: C64, nome: C64) -> Result<(C64, C64, C64), SpecialError> {
    let (kk, _) = quarter_period_and_modulus(nome)?;
    jacobi_from_reduced(v / (kk * 2.0), nome)
}

/// Real quarter period `K` and modulus `k` for the nome `eps`, from the
/// infinite products
/// `K = (pi/2) prod ((1+e^{2n-1})/(1-e^{2n-1}) (1-e^{2n})/(1+e^{2n}))^2` and
/// `k = 4 sqrt(e) prod ((1+e^{2n})/(1+e^{2n-1}))^4`.
pub fn quarter_period_and_modulus(eps: C64) -> Result<(C64, C64), SpecialError> {
    if eps.norm() >= 1.0 {
        return Err(SpecialError::BadNome(eps));
    }
    let one = C64::new(1.0, 0.0);
    let mut kq = C64::new(PI / 2.0, 0.0);
    let mut km = eps.sqrt() * 4.0;
    let mut odd = eps;
    for _ in 0..MAX_FACTORS {
        let even = odd * eps;
        let f = (one + odd) / (one - odd) * (one - even) / (one + even);
        kq *= f * f;
        let g = (one + even) / (one + odd);
        km *= g * g * g * g;
        if odd.norm() < PRODUCT_CUTOFF {
            break;
        }
        odd = even * eps;
    }
    Ok((kq, km))
}

/// Arithmetic-geometric mean of two complex numbers (principal square roots).
pub fn agm(mut a: C64, mut b: C64) -> C64 {
    for _ in 0..200 {
        let an = (a + b) * 0.5;
        let bn = (a * b).sqrt();
        let done = (an - bn).norm() <= 1e-16 * an.norm();
        a = an;
        b = bn;
        if done {
            break;
        }
    }
    a
}

/// Complete elliptic integral of the first kind by the AGM,
/// `K(k) = pi / (2 agm(1, sqrt(1 - k^2)))`.
pub fn elliptic_k_agm(k: C64) -> C64 {
    let one = C64::new(1.0, 0.0);
    C64::new(PI / 2.0, 0.0) / agm(one, (one - k * k).sqrt())
}

/// Nome of a real modulus by the AGM: `exp(-pi K'/K)`.
pub fn nome_from_modulus(k: f64) -> f64 {
    let kk = elliptic_k_agm(C64::new(k, 0.0)).re;
    let kp = elliptic_k_agm(C64::new((1.0 - k * k).sqrt(), 0.0)).re;
    (-PI * kp / kk).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    /// sn, cn, dn for real argument and parameter m = k^2 by the descending
    /// AGM/Landen scheme; an oracle independent of theta functions.
    fn sn_cn_dn_agm(u: f64, m: f64) -> (f64, f64, f64) {
        let mut a = vec![1.0f64];
        let mut cs = vec![m.sqrt()];
        let mut b = (1.0 - m).sqrt();
        while cs.last().unwrap().abs() > 1e-16 {
            let an = (a.last().unwrap() + b) / 2.0;
            let cn = (a.last().unwrap() - b) / 2.0;
            b = (a.last().unwrap() * b).sqrt();
            a.push(an);
            cs.push(cn);
            if a.len() > 60 {
                break;
            }
        }
        let n = a.len() - 1;
        let mut phi = 2f64.powi(n as i32) * a[n] * u;
        let mut prev = phi;
        for k in (1..=n).rev() {
            prev = phi;
            phi = (phi + (cs[k] / a[k] * phi.sin()).asin()) / 2.0;
        }
        (phi.sin(), phi.cos(), phi.cos() / (prev - phi).cos())
    }

    #[test]
    fn pochhammer_basics() {
        assert_eq!(q_pochhammer(&QPochhammerArgs::single(c(0.0), c(0.5))).unwrap(), c(1.0));
        // term-by-term log-sum oracle
        let (x, q4) = (0.1, 0.5f64.powi(4));
        let logsum: f64 = (0..200).map(|n| (1.0 - x * q4.powi(n)).ln()).sum();
        let v = q_pochhammer(&QPochhammerArgs::single(c(x), c(q4))).unwrap();
        assert!((v - c(logsum.exp())).norm() < 1e-13);
        // double product with degenerate second base
        let d = q_pochhammer(&QPochhammerArgs::double(c(0.3), c(0.4), c(0.0))).unwrap();
        let s = q_pochhammer(&QPochhammerArgs::single(c(0.3), c(0.4))).unwrap();
        assert!((d - s).norm() < 1e-15);
        assert!(matches!(q_pochhammer(&QPochhammerArgs::single(c(0.3), c(1.0))), Err(SpecialError::DivergentBase(_))));
    }

    #[test]
    fn normalizer_first_coefficient_and_symmetry() {
        let q = C64::new(0.6, 0.1);
        let s = normalizer_a_series(q, 5).unwrap();
        assert!((s.coeff(1) - (q - q.inv()) / (q + q.inv())).norm() < 1e-15);
        assert_eq!(normalizer_a(q, c(0.0)).unwrap(), c(1.0));
        let p = normalizer_a(c(0.6), c(0.3)).unwrap() * normalizer_a(c(1.0 / 0.6), c(0.3)).unwrap();
        assert!((p - c(1.0)).norm() < 1e-12);
        assert_eq!(normalizer_a(C64::new(0.0, 1.0), c(0.1)), Err(SpecialError::ModulusOne));
    }

    #[test]
    fn normalizer_sum_vs_product() {
        let a = normalizer_a(c(0.5), c(0.2)).unwrap();
        let b = normalizer_a_product(c(0.5), c(0.2)).unwrap();
        assert!((a - b).norm() < 1e-12);
        assert!((normalizer_a_product(c(0.5), c(0.0)).unwrap() - c(1.0)).norm() < 1e-15);
        let big = normalizer_a_product(c(2.0), c(0.2)).unwrap();
        assert!((big - normalizer_a(c(0.5), c(0.2)).unwrap().inv()).norm() < 1e-12);
    }

    #[test]
    fn swapped_product_arrangement_is_the_reciprocal() {
        // (x q^2; q^4)^2 / ((x; q^4)(x q^4; q^4)) is 1/A, not A
        let (q, x) = (0.5f64, 0.2f64);
        let q4 = q.powi(4);
        let sw = q_pochhammer(&QPochhammerArgs::single(c(x * q * q), c(q4))).unwrap().powu(2)
            / (q_pochhammer(&QPochhammerArgs::single(c(x), c(q4))).unwrap()
                * q_pochhammer(&QPochhammerArgs::single(c(x * q4), c(q4))).unwrap());
        let a = normalizer_a(c(q), c(x)).unwrap();
        assert!((sw * a - c(1.0)).norm() < 1e-12);
        assert!((sw - a).norm() > 1e-2);
    }

    #[test]
    fn series_matches_numeric() {
        let q = c(0.7);
        let s = normalizer_a_series(q, 60).unwrap();
        let x = c(0.3);
        assert!((s.eval(x) - normalizer_a(q, x).unwrap()).norm() < 1e-13);
        // shifted argument: A(q, q^4 x)
        let sh = s.rescale_variable(q.powu(4));
        assert!((sh.eval(x) - normalizer_a_product(q, q.powu(4) * x).unwrap()).norm() < 1e-13);
    }

    #[test]
    fn theta_sum_vs_product_and_zeros() {
        let tau = C64::new(0.0, 0.5);
        for kind in [ThetaKind::One, ThetaKind::Two, ThetaKind::Three, ThetaKind::Four] {
            for z in [c(0.1), C64::new(0.23, -0.07), C64::new(-0.4, 0.2)] {
                let a = theta(ThetaParams { z, tau, kind }).unwrap();
                let b = theta_product(ThetaParams { z, tau, kind }).unwrap();
                assert!((a - b).norm() < 1e-12 * a.norm().max(1.0), "{kind:?} {z}");
            }
        }
        assert!(theta(ThetaParams { z: c(0.0), tau, kind: ThetaKind::One }).unwrap().norm() < 1e-16);
        // the fourth function vanishes at z = tau/2
        assert!(theta(ThetaParams { z: tau / 2.0, tau, kind: ThetaKind::Four }).unwrap().norm() < 1e-14);
        assert!(theta(ThetaParams { z: c(0.1), tau: c(0.5), kind: ThetaKind::One }).is_err());
    }

    #[test]
    fn theta_four_at_zero_against_product() {
        let tau = C64::new(0.1, 0.8);
        let p = nome_pow(tau, 1.0);
        let mut prod = c(1.0);
        for n in 1..200 {
            let pn = p.powu(n);
            prod *= (c(1.0) - pn) / (c(1.0) + pn);
        }
        let v = theta(ThetaParams { z: c(0.0), tau, kind: ThetaKind::Four }).unwrap();
        assert!((v - prod).norm() < 1e-13);
    }

    #[test]
    fn theta_quasi_periodicity() {
        let tau = C64::new(0.1, 0.7);
        let z = C64::new(0.17, 0.05);
        let t = |z| theta(ThetaParams { z, tau, kind: ThetaKind::Three }).unwrap();
        assert!((t(z + 1.0) - t(z)).norm() < 1e-12);
        let f = (C64::new(0.0, -PI) * tau - C64::new(0.0, 2.0 * PI) * z).exp();
        assert!((t(z + tau) - f * t(z)).norm() < 1e-10);
    }

    #[test]
    fn eight_vertex_labels() {
        assert_eq!(EightVertexTheta::Plain.classical(), ThetaKind::One);
        assert_eq!(EightVertexTheta::Two.classical(), ThetaKind::Four);
    }

    #[test]
    fn jacobi_identities_and_agm_oracle() {
        let nome = c(0.05);
        let (sn, cn, dn) = jacobi_sn_cn_dn(c(0.0), nome).unwrap();
        assert!(sn.norm() < 1e-15 && (cn - c(1.0)).norm() < 1e-15 && (dn - c(1.0)).norm() < 1e-15);
        let (_, k) = quarter_period_and_modulus(nome).unwrap();
        for v in [c(0.3), C64::new(0.7, 0.2), C64::new(-1.1, 0.4)] {
            let (sn, cn, dn) = jacobi_sn_cn_dn(v, nome).unwrap();
            assert!((sn * sn + cn * cn - c(1.0)).norm() < 1e-10);
            assert!((dn * dn + k * k * sn * sn - c(1.0)).norm() < 1e-10);
        }
        let (sn, cn, dn) = jacobi_sn_cn_dn(c(0.3), nome).unwrap();
        let (a, b, d) = sn_cn_dn_agm(0.3, k.re * k.re);
        assert!((sn - c(a)).norm() < 1e-9 && (cn - c(b)).norm() < 1e-9 && (dn - c(d)).norm() < 1e-9);
    }

    #[test]
    fn quarter_period_products() {
        let (kk, k) = quarter_period_and_modulus(c(0.0)).unwrap();
        assert!((kk - c(PI / 2.0)).norm() < 1e-15 && k.norm() == 0.0);
        let (kk, k) = quarter_period_and_modulus(c(0.05)).unwrap();
        assert!((kk - elliptic_k_agm(k)).norm() < 1e-9);
        assert!((nome_from_modulus(k.re) - 0.05).abs() < 1e-12);
        let mut last = 0.0;
        for i in 1..30 {
            let (_, k) = quarter_period_and_modulus(c(0.01 * i as f64)).unwrap();
            assert!(k.re > last);
            last = k.re;
        }
    }
}

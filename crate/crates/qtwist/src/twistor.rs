//! Twistors deforming the trigonometric R-matrix into Baxter's
//! eight-vertex R-matrix.
//!
//! The twistor is the ordered product `F = F^1 F^2 F^3 ...`. Factor `F^M`
//! is a series in `lambda = eps^M`. With `x = z1/z2` the factors are, for
//! `M = 2m`,
//!
//! `F^M = A(1/q, aa'x)/(1 - q^2 aa'x) ((1 - q^2 aa'x) H+ + (1 - aa'x) H- - a f1(x)f-1 - a' f0(x)f-0)`
//!
//! and for `M = 2m - 1`,
//!
//! `F^M = A(1/q, b^2 x)/(1 - q^2 b^2 x) ((1 - b^2 x) H+ + (1 - q^2 b^2 x) H- - b f1(x)f-0 - b f0(x)f-1)`,
//!
//! with `a = q^{uk} (eps^2 q^-k)^m`, `a' = q^{(1-u)k} (eps^2 q^-k)^m` and
//! `b = q^{k/2} (eps q^{-k/2})^{2m-1}`. At level `k = 0` this is a Hopf
//! twistor; for `k != 0` the Cartan factors `Q(M, r)` make it quasi-Hopf.

use crate::evrep::{q_phi_on, EvRepError, Rep};
use crate::fps::{SeriesMatrix, TruncatedSeries, VarTag};
use crate::linalg::{eye, flip, kron, max_abs, slot_permutation};
use crate::qspecial::{
    jacobi_from_reduced, normalizer_a_product, normalizer_a_series, quarter_period_and_modulus, theta, SpecialError,
    ThetaKind, ThetaParams,
};
use crate::rmatrix::{r_value, RError};
use crate::words::{solve_twistor_words, twistor_stack, UniversalTwistor, WordError};
use crate::{CMat, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TwistorError {
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("|{0}| >= 1: outside the convergence domain of the factor normalizer")]
    ConvergenceDomain(C64),
    #[error("infinite product does not converge: |eps_bar| = {0}")]
    ProductDivergence(f64),
    #[error(transparent)]
    Words(#[from] WordError),
    #[error(transparent)]
    Special(#[from] SpecialError),
    #[error(transparent)]
    R(#[from] RError),
    #[error(transparent)]
    Rep(#[from] EvRepError),
    #[error("theta convention mismatch: best deviation {best:.3e}")]
    ConventionMismatch { best: f64, table: Vec<(String, f64)> },
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `q^t` on the principal branch.
pub fn qpow(q: C64, t: C64) -> C64 {
    (q.ln() * t).exp()
}

/// The scalar dials of the model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub q: C64,
    pub eps: C64,
    /// Extension parameter splitting the level between the two slots.
    pub u: C64,
    /// Level of the highest-weight module.
    pub k: C64,
    /// Dual Coxeter number.
    pub g: f64,
    pub order_x: usize,
    pub order_eps: usize,
    pub tol: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            q: c(0.5),
            eps: c(0.2),
            u: c(0.5),
            k: c(0.0),
            g: 2.0,
            order_x: 32,
            order_eps: 4,
            tol: 1e-8,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), TwistorError> {
        if (self.q.norm() - 1.0).abs() < 1e-12 {
            return Err(TwistorError::BadParams(format!("|q| = 1 (q = {})", self.q)));
        }
        if self.eps.norm() >= 1.0 {
            return Err(TwistorError::BadParams(format!("|eps| >= 1 (eps = {})", self.eps)));
        }
        if !(self.tol > 0.0) {
            return Err(TwistorError::BadParams("tol must be positive".into()));
        }
        Ok(())
    }

    /// `eps_bar^2 = eps^2 q^-k`.
    pub fn eps_bar_sq(&self) -> C64 {
        self.eps * self.eps * qpow(self.q, -self.k)
    }

    /// `eps_bar = eps q^{-k/2}`, on the branch fixed by `eps` itself.
    pub fn eps_bar(&self) -> C64 {
        self.eps * qpow(self.q, -self.k / 2.0)
    }

    /// Same parameters at level zero.
    pub fn hopf(&self) -> Self {
        ModelParams { k: c(0.0), ..self.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Parity {
    Even,
    Odd,
}

/// Cartan factors `Q(2m, 1) = q^{(u-m)k}`, `Q(2m, 0) = q^{(1-u-m)k}`,
/// `Q(2m-1, r) = q^{(1-m)k}`, indexed `[Q(M,0), Q(M,1)]`.
pub fn cartan_q(p: &ModelParams, m_idx: usize) -> [C64; 2] {
    if m_idx % 2 == 0 {
        let m = c((m_idx / 2) as f64);
        [qpow(p.q, (c(1.0) - p.u - m) * p.k), qpow(p.q, (p.u - m) * p.k)]
    } else {
        let m = c(m_idx.div_ceil(2) as f64);
        let v = qpow(p.q, (c(1.0) - m) * p.k);
        [v, v]
    }
}

/// Coefficients of `lambda` in the scalars of factor `M`:
/// `(a / lambda, a' / lambda)` for even `M`, `(b / lambda, b / lambda)` for odd.
pub fn factor_scalars(p: &ModelParams, m_idx: usize) -> (C64, C64) {
    let k = p.k;
    if m_idx % 2 == 0 {
        let m = c((m_idx / 2) as f64);
        (qpow(p.q, p.u * k - k * m), qpow(p.q, (c(1.0) - p.u) * k - k * m))
    } else {
        let m = c(m_idx.div_ceil(2) as f64);
        let b = qpow(p.q, k * (c(1.0) - m));
        (b, b)
    }
}

fn hplus() -> CMat {
    crate::linalg::diag(&[c(1.0), c(0.0), c(0.0), c(1.0)])
}

fn hminus() -> CMat {
    crate::linalg::diag(&[c(0.0), c(1.0), c(1.0), c(0.0)])
}

/// The two off-diagonal word terms of factor `M` on `V(z1) (x) V(z2)`:
/// `(f1 (x) f-1, f0 (x) f-0)` for even `M`, `(f1 (x) f-0, f0 (x) f-1)` for odd.
fn off_diagonal_terms(q: C64, m_idx: usize, z1: C64, z2: C64) -> Result<(CMat, CMat), TwistorError> {
    let a = Rep::evaluation(q, z1)?;
    let b = Rep::evaluation(q, z2)?;
    Ok(if m_idx % 2 == 0 {
        (kron(&a.f(1), &b.fm(1)), kron(&a.f(0), &b.fm(0)))
    } else {
        (kron(&a.f(1), &b.fm(0)), kron(&a.f(0), &b.fm(1)))
    })
}

/// One twistor factor on `V(z1) (x) V(z2)` as a series in `lambda = eps^M`.
#[derive(Clone, Debug)]
pub struct TwistorFactor {
    pub m: usize,
    pub parity: Parity,
    pub lambda_series: SeriesMatrix,
    pub z: (C64, C64),
    pub cartan_q: [C64; 2],
}

impl TwistorFactor {
    pub fn eval(&self, eps: C64) -> CMat {
        self.lambda_series.eval(eps.powu(self.m as u32))
    }
}

/// Substitutes `s = coef * lambda^2` into a series in `s`.
fn in_lambda_squared(s: &TruncatedSeries, coef: C64, order: usize) -> TruncatedSeries {
    let mut v = vec![C64::new(0.0, 0.0); order + 1];
    let mut p = c(1.0);
    for n in 0..=order / 2 {
        if n > s.order() {
            break;
        }
        v[2 * n] = s.coeff(n) * p;
        p *= coef;
    }
    TruncatedSeries::new(v)
}

/// Closed-form factor `F^M` as a `lambda`-series to order `order`.
pub fn closed_form_factor(p: &ModelParams, m_idx: usize, z1: C64, z2: C64, order: usize) -> Result<TwistorFactor, TwistorError> {
    p.validate()?;
    let x = z1 / z2;
    let (a0, a1) = factor_scalars(p, m_idx);
    let sc = a0 * a1 * x; // s = sc lambda^2
    let q2 = p.q * p.q;
    let geo = in_lambda_squared(&TruncatedSeries::geometric(q2, order / 2 + 1), sc, order); // 1/(1 - q^2 s)
    let norm = in_lambda_squared(&normalizer_a_series(p.q.inv(), order / 2 + 1)?, sc, order);
    let (t1, t0) = off_diagonal_terms(p.q, m_idx, z1, z2)?;
    let even = m_idx % 2 == 0;
    // diagonal: H+ + (1-s)/(1-q^2 s) H- (even) or (1-s)/(1-q^2 s) H+ + H- (odd)
    let mut one_minus_s = vec![C64::new(0.0, 0.0); order + 1];
    one_minus_s[0] = c(1.0);
    if order >= 2 {
        one_minus_s[2] = -sc;
    }
    let ratio = geo.mul(&TruncatedSeries::new(one_minus_s));
    let mut coeffs = Vec::with_capacity(order + 1);
    for n in 0..=order {
        let mut mtx = if even {
            hminus() * ratio.coeff(n)
        } else {
            hplus() * ratio.coeff(n)
        };
        if n == 0 {
            mtx += if even { hplus() } else { hminus() };
        }
        if n >= 1 {
            let g = geo.coeff(n - 1);
            mtx -= (&t1 * a0 + &t0 * a1) * g;
        }
        coeffs.push(mtx);
    }
    let series = SeriesMatrix::from_coeffs(coeffs, VarTag::Other).mat_series_mul(&norm);
    Ok(TwistorFactor {
        m: m_idx,
        parity: if even { Parity::Even } else { Parity::Odd },
        lambda_series: series,
        z: (z1, z2),
        cartan_q: cartan_q(p, m_idx),
    })
}

/// Closed-form factor `F^M` evaluated at `p.eps`, with the normalizer in
/// product form.
pub fn closed_form_factor_value(p: &ModelParams, m_idx: usize, z1: C64, z2: C64) -> Result<CMat, TwistorError> {
    let x = z1 / z2;
    let (a0, a1) = factor_scalars(p, m_idx);
    let lam = p.eps.powu(m_idx as u32);
    let (a, a2) = (a0 * lam, a1 * lam);
    let s = a * a2 * x;
    if s.norm() >= 1.0 {
        return Err(TwistorError::ConvergenceDomain(s));
    }
    let q2 = p.q * p.q;
    let (t1, t0) = off_diagonal_terms(p.q, m_idx, z1, z2)?;
    let one = c(1.0);
    let diag_part = if m_idx % 2 == 0 {
        hplus() * (one - q2 * s) + hminus() * (one - s)
    } else {
        hplus() * (one - s) + hminus() * (one - q2 * s)
    };
    let mat = (diag_part - &t1 * a - &t0 * a2) / (one - q2 * s);
    Ok(mat * normalizer_a_product(p.q.inv(), s)?)
}

/// Solves the factor recursion on universal words and evaluates it on
/// `V(z1) (x) V(z2)`; the result is a `lambda`-series to order
/// `order_eps / M`.
pub fn solve_twistor_recursion(p: &ModelParams, m_idx: usize, order_eps: usize, z1: C64, z2: C64) -> Result<TwistorFactor, TwistorError> {
    let u = universal_factor(p, m_idx, order_eps / m_idx)?;
    let a = Rep::evaluation(p.q, z1)?;
    let b = Rep::evaluation(p.q, z2)?;
    let coeffs = u.evaluate(&a, &b);
    Ok(TwistorFactor {
        m: m_idx,
        parity: if m_idx % 2 == 0 { Parity::Even } else { Parity::Odd },
        lambda_series: SeriesMatrix::from_coeffs(coeffs, VarTag::Other),
        z: (z1, z2),
        cartan_q: cartan_q(p, m_idx),
    })
}

/// Seed of the random modules in the twistor stacks.
pub const STACK_SEED: u64 = 1;

pub fn universal_factor(p: &ModelParams, m_idx: usize, nmax: usize) -> Result<UniversalTwistor, TwistorError> {
    p.validate()?;
    let stack = twistor_stack(p.q, STACK_SEED);
    Ok(solve_twistor_words(m_idx, cartan_q(p, m_idx), nmax, &stack, 1e-8)?)
}

/// `prod_{M >= 1} A(1/q, q^k eps_bar^{2M} x)`: the normalizer of the full
/// product, one factor per twistor factor.
pub fn af_full(p: &ModelParams, x: C64) -> Result<C64, TwistorError> {
    let e2 = p.eps_bar_sq();
    let qk = qpow(p.q, p.k);
    let mut acc = c(1.0);
    let mut w = e2;
    for _ in 0..10_000 {
        if (w * qk * x).norm() < 1e-17 {
            break;
        }
        acc *= normalizer_a_product(p.q.inv(), qk * w * x)?;
        w *= e2;
    }
    Ok(acc)
}

/// The odd-only product `prod_{m >= 0} A(1/q, q^k eps_bar^{4m+2} x)`; it
/// misses the even factors' normalizers and is kept for comparison.
pub fn af_odd_only(p: &ModelParams, x: C64) -> Result<C64, TwistorError> {
    let e2 = p.eps_bar_sq();
    let qk = qpow(p.q, p.k);
    let mut acc = c(1.0);
    let mut w = e2;
    for _ in 0..10_000 {
        if (w * qk * x).norm() < 1e-17 {
            break;
        }
        acc *= normalizer_a_product(p.q.inv(), qk * w * x)?;
        w *= e2 * e2;
    }
    Ok(acc)
}

/// Number of factors kept in infinite products: factor `M` differs from
/// the identity at order `|eps_bar|^M`, so stop once that is below `1e-17`.
pub fn cutoff_m(p: &ModelParams) -> Result<usize, TwistorError> {
    let e2 = p.eps_bar_sq().norm();
    if e2 >= 1.0 {
        return Err(TwistorError::ProductDivergence(e2.sqrt()));
    }
    if e2 == 0.0 {
        return Ok(1);
    }
    Ok((2.0 * (1e-17f64).ln() / e2.ln()).ceil().max(1.0) as usize)
}

/// `F = F^1 F^2 ... F^M` on `V(z1) (x) V(z2)` at `p.eps`.
pub fn product_value(p: &ModelParams, z1: C64, z2: C64) -> Result<CMat, TwistorError> {
    let mut f = eye(4);
    for m in 1..=cutoff_m(p)? {
        f *= closed_form_factor_value(p, m, z1, z2)?;
    }
    Ok(f)
}

/// The closed product entries `a +- d`, `b +- c` and their normalizer.
#[derive(Clone, Debug)]
pub struct ClosedProduct {
    pub a: C64,
    pub d: C64,
    pub b: C64,
    pub c: C64,
    pub normalizer: C64,
}

/// `a +- d = prod (1 +- q^{-1+k/2} sqrt(x) eb^{2m-1}) / (1 +- q^{1+k/2} sqrt(x) eb^{2m-1})`
/// and `b +- c` likewise with `eb^{2m}`; `sqrt_x` fixes the branch.
pub fn closed_product(p: &ModelParams, x: C64, sqrt_x: C64) -> Result<ClosedProduct, TwistorError> {
    let eb = p.eps_bar();
    if eb.norm() >= 1.0 {
        return Err(TwistorError::ProductDivergence(eb.norm()));
    }
    let lo = qpow(p.q, c(-1.0) + p.k / 2.0) * sqrt_x;
    let hi = qpow(p.q, c(1.0) + p.k / 2.0) * sqrt_x;
    let one = c(1.0);
    let (mut apd, mut amd, mut bpc, mut bmc) = (one, one, one, one);
    let mut w = eb; // eb^{2m-1}
    for _ in 0..10_000 {
        if w.norm() < 1e-17 {
            break;
        }
        apd *= (one + lo * w) / (one + hi * w);
        amd *= (one - lo * w) / (one - hi * w);
        let w2 = w * eb;
        bpc *= (one + lo * w2) / (one + hi * w2);
        bmc *= (one - lo * w2) / (one - hi * w2);
        w = w2 * eb;
    }
    Ok(ClosedProduct {
        a: (apd + amd) / 2.0,
        d: (apd - amd) / 2.0,
        b: (bpc + bmc) / 2.0,
        c: (bpc - bmc) / 2.0,
        normalizer: af_full(p, x)?,
    })
}

/// Diagonal change of basis that makes the product symmetric:
/// `D = diag(sqrt(x) z2, q^{(1-2u)k/2} sqrt(x), 1, 1)`, applied as
/// `D F D^-1`; `sqrt_x` is the same branch used in [`closed_product`].
pub fn symmetric_gauge(p: &ModelParams, z2: C64, sqrt_x: C64) -> CMat {
    let g = qpow(p.q, (c(1.0) - p.u * 2.0) * p.k / 2.0) * sqrt_x;
    crate::linalg::diag(&[sqrt_x * z2, g, c(1.0), c(1.0)])
}

/// `A [[a, d], [d, a]] (+) A [[b, c], [c, b]]` on the index blocks {0,3}, {1,2}.
pub fn closed_product_matrix(cp: &ClosedProduct) -> CMat {
    let mut m = CMat::zeros(4, 4);
    m[(0, 0)] = cp.a;
    m[(3, 3)] = cp.a;
    m[(0, 3)] = cp.d;
    m[(3, 0)] = cp.d;
    m[(1, 1)] = cp.b;
    m[(2, 2)] = cp.b;
    m[(1, 2)] = cp.c;
    m[(2, 1)] = cp.c;
    m * cp.normalizer
}

#[derive(Clone, Debug)]
pub struct TwistorProduct {
    pub factors: usize,
    pub assembled: CMat,
    pub closed: ClosedProduct,
    /// `max |D F D^-1 - closed|`, relative to the largest entry.
    pub residual: f64,
}

/// Factor-by-factor product against the closed product formulas, compared
/// in the symmetric gauge on the principal branch of `sqrt(x)`.
pub fn assemble_product(p: &ModelParams, z1: C64, z2: C64) -> Result<TwistorProduct, TwistorError> {
    p.validate()?;
    let n = cutoff_m(p)?;
    let f = product_value(p, z1, z2)?;
    let x = z1 / z2;
    let sx = x.sqrt();
    let closed = closed_product(p, x, sx)?;
    let d = symmetric_gauge(p, z2, sx);
    let dinv = d.clone().try_inverse().expect("diagonal gauge is invertible");
    let sym = &d * &f * dinv;
    let want = closed_product_matrix(&closed);
    let residual = max_abs(&(&sym - &want)) / max_abs(&want).max(1.0);
    Ok(TwistorProduct { factors: n, assembled: f, closed, residual })
}

/// `R_eps(z1, z2) = (P F(z2, z1) P)^-1 R(z1, z2) F(z1, z2)`.
pub fn twisted_r(p: &ModelParams, z1: C64, z2: C64) -> Result<CMat, TwistorError> {
    let f = product_value(p, z1, z2)?;
    let pf = flip();
    let ft = &pf * product_value(p, z2, z1)? * &pf;
    let r = r_value(p.q, z1, z2)?;
    Ok(ft.try_inverse().expect("twistor is invertible") * r * f)
}

/// Largest entry outside the eight-vertex pattern, relative to the matrix.
pub fn eight_vertex_leak(r: &CMat) -> f64 {
    let mut leak: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let allowed = i == j || i + j == 3;
            if !allowed {
                leak = leak.max(r[(i, j)].norm());
            }
        }
    }
    leak / max_abs(r)
}

/// YBE residual of an R-matrix-valued function at three spectral parameters.
pub fn ybe_residual(rf: &dyn Fn(C64, C64) -> Result<CMat, TwistorError>, z: [C64; 3]) -> Result<f64, TwistorError> {
    use crate::linalg::embed3;
    let r12 = embed3(&rf(z[0], z[1])?, 0, 1);
    let r13 = embed3(&rf(z[0], z[2])?, 0, 2);
    let r23 = embed3(&rf(z[1], z[2])?, 1, 2);
    let d = &r12 * &r13 * &r23 - &r23 * &r13 * &r12;
    let scale = max_abs(&r12) * max_abs(&r13) * max_abs(&r23);
    Ok(max_abs(&d) / scale)
}

/// Point of comparison with the theta-function formulas: `q = e^{2 pi i rho}`,
/// `eps = e^{pi i tau}`, `x = z1/z2 = e^{4 pi i u}`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EllipticPoint {
    pub rho: C64,
    pub tau: C64,
    pub u: C64,
}

impl EllipticPoint {
    pub fn q(&self) -> C64 {
        (C64::new(0.0, 2.0 * PI) * self.rho).exp()
    }

    pub fn eps(&self) -> C64 {
        (C64::new(0.0, PI) * self.tau).exp()
    }

    pub fn x(&self) -> C64 {
        (C64::new(0.0, 4.0 * PI) * self.u).exp()
    }

    /// The point with the given `q`, `eps` (principal logarithms) and `u`.
    pub fn from_q_eps(q: C64, eps: C64, u: C64) -> Self {
        let rho = q.ln() / C64::new(0.0, 2.0 * PI);
        let tau = if eps.norm() == 0.0 { C64::new(0.0, f64::INFINITY) } else { eps.ln() / C64::new(0.0, PI) };
        EllipticPoint { rho, tau, u }
    }
}

/// `theta_n(u - rho) / theta_n(u + rho)`, with the `eps -> 0` limits.
pub fn theta_ratio(kind: ThetaKind, pt: &EllipticPoint) -> Result<C64, TwistorError> {
    if pt.tau.im.is_infinite() {
        let (a, b) = (C64::new(PI, 0.0) * (pt.u - pt.rho), C64::new(PI, 0.0) * (pt.u + pt.rho));
        return Ok(match kind {
            ThetaKind::One => a.sin() / b.sin(),
            ThetaKind::Two => a.cos() / b.cos(),
            _ => c(1.0),
        });
    }
    let t = |z| theta(ThetaParams { z, tau: pt.tau, kind });
    Ok(t(pt.u - pt.rho)? / t(pt.u + pt.rho)?)
}

/// The four combinations `(a + d, a - d, b + g, b - g)` of the twisted
/// R-matrix at `z1 = x, z2 = 1`, in the symmetric gauge.
pub fn twisted_combinations(p: &ModelParams, pt: &EllipticPoint) -> Result<[C64; 4], TwistorError> {
    let x = pt.x();
    let r = twisted_r(p, x, c(1.0))?;
    let sx = (C64::new(0.0, 2.0 * PI) * pt.u).exp(); // sqrt(z1 z2) = sqrt(z1/z2)
    let (al, be, de, ga) = (r[(0, 0)], r[(1, 1)], r[(0, 3)] * sx, r[(1, 2)] * sx);
    Ok([al + de, al - de, be + ga, be - ga])
}

/// Maximum relative deviation between two projective 4-vectors normalized
/// on their second entry.
pub fn projective_deviation(v: &[C64; 4], w: &[C64; 4]) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..4 {
        let a = v[i] / v[1];
        let b = w[i] / w[1];
        dev = dev.max((a - b).norm() / b.norm().max(1e-300));
    }
    dev
}

#[derive(Clone, Debug, Serialize)]
pub struct EllipticReport {
    pub combos: [C64; 4],
    /// Deviation from `theta3 : theta4 : theta2 : theta1` ratios.
    pub theta_deviation: f64,
    /// Deviation from `dn : 1 : cn : sn` ratios at `2K(u -+ rho)`.
    pub jacobi_deviation: f64,
    /// Deviation of `(a - d) / (theta4 ratio)` from `q^{1/2} A(q,1/x) AF(x)/AF(1/x)`.
    pub scalar_deviation: f64,
    /// Theta candidates for the four slots, with their deviations.
    pub table: Vec<(String, f64)>,
}

const KINDS: [ThetaKind; 4] = [ThetaKind::One, ThetaKind::Two, ThetaKind::Three, ThetaKind::Four];

fn kind_name(k: ThetaKind) -> &'static str {
    match k {
        ThetaKind::One => "theta1",
        ThetaKind::Two => "theta2",
        ThetaKind::Three => "theta3",
        ThetaKind::Four => "theta4",
    }
}

/// Projective comparison of the twisted R-matrix at level zero with the
/// theta and Jacobi-function formulas.
pub fn compare_elliptic(p: &ModelParams, pt: &EllipticPoint, tol: f64) -> Result<EllipticReport, TwistorError> {
    let p = ModelParams { q: pt.q(), eps: pt.eps(), k: c(0.0), ..p.clone() };
    p.validate()?;
    let combos = twisted_combinations(&p, pt)?;
    let mut ratio = [c(0.0); 4];
    for (i, k) in KINDS.iter().enumerate() {
        ratio[i] = theta_ratio(*k, pt)?;
    }
    let expected = [ratio[2], ratio[3], ratio[1], ratio[0]];
    let theta_deviation = projective_deviation(&combos, &expected);

    let jacobi_deviation = if p.eps.norm() == 0.0 {
        theta_deviation
    } else {
        let (sm, cm, dm) = jacobi_from_reduced(pt.u - pt.rho, p.eps)?;
        let (sp, cp, dp) = jacobi_from_reduced(pt.u + pt.rho, p.eps)?;
        let _ = quarter_period_and_modulus(p.eps)?;
        projective_deviation(&combos, &[dm / dp, c(1.0), cm / cp, sm / sp])
    };

    let x = p.x_from(pt);
    let scalar = p.q.sqrt() * normalizer_a_product(p.q, x.inv())? * af_full(&p, x)? / af_full(&p, x.inv())?;
    let scalar_deviation = (combos[1] / expected[1] - scalar).norm() / scalar.norm();

    let mut table = Vec::new();
    for a in 0..4 {
        for b in 0..4 {
            for cc in 0..4 {
                for d in 0..4 {
                    let idx = [a, b, cc, d];
                    let mut seen = [false; 4];
                    if idx.iter().any(|&i| std::mem::replace(&mut seen[i], true)) {
                        continue;
                    }
                    let w = [ratio[a], ratio[b], ratio[cc], ratio[d]];
                    let name = idx.iter().map(|&i| kind_name(KINDS[i])).collect::<Vec<_>>().join(":");
                    table.push((name, projective_deviation(&combos, &w)));
                }
            }
        }
    }
    if theta_deviation > tol {
        let best = table.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
        return Err(TwistorError::ConventionMismatch { best, table });
    }
    Ok(EllipticReport { combos, theta_deviation, jacobi_deviation, scalar_deviation, table })
}

impl ModelParams {
    fn x_from(&self, pt: &EllipticPoint) -> C64 {
        pt.x()
    }
}

/// Eight-vertex R-matrix built directly from theta ratios in the symmetric
/// gauge (`a +- d`, `b +- g` proportional to `theta3, theta4, theta2, theta1`
/// ratios). With `extra_q` the `a +- d` pair is multiplied by `q` relative
/// to `b +- g`; that variant violates YBE.
pub fn theta_r_matrix(rho: C64, tau: C64, z1: C64, z2: C64, extra_q: bool) -> Result<CMat, TwistorError> {
    let u = (z1 / z2).ln() / C64::new(0.0, 4.0 * PI);
    let pt = EllipticPoint { rho, tau, u };
    let f = if extra_q { pt.q() } else { c(1.0) };
    let t3 = theta_ratio(ThetaKind::Three, &pt)? * f;
    let t4 = theta_ratio(ThetaKind::Four, &pt)? * f;
    let t2 = theta_ratio(ThetaKind::Two, &pt)?;
    let t1 = theta_ratio(ThetaKind::One, &pt)?;
    let (a, d, b, g) = ((t3 + t4) / 2.0, (t3 - t4) / 2.0, (t2 + t1) / 2.0, (t2 - t1) / 2.0);
    let mut m = CMat::zeros(4, 4);
    m[(0, 0)] = a;
    m[(3, 3)] = a;
    m[(0, 3)] = d;
    m[(3, 0)] = d;
    m[(1, 1)] = b;
    m[(2, 2)] = b;
    m[(1, 2)] = g;
    m[(2, 1)] = g;
    Ok(m)
}

/// `F(eps)` on `A (x) B` as a polynomial in `eps` to `order`, from the
/// universal factors `F^1 ... F^order`.
pub fn universal_product(factors: &[UniversalTwistor], a: &Rep, b: &Rep, order: usize) -> Vec<CMat> {
    let d = a.dim() * b.dim();
    let mut acc: Vec<CMat> = vec![CMat::zeros(d, d); order + 1];
    acc[0] = eye(d);
    for f in factors {
        let g = f.evaluate(a, b);
        let mut fm = vec![CMat::zeros(d, d); order + 1];
        for (n, gn) in g.iter().enumerate() {
            if f.m * n <= order {
                fm[f.m * n] = gn.clone();
            }
        }
        acc = poly_mul(&acc, &fm);
    }
    acc
}

pub fn poly_mul(a: &[CMat], b: &[CMat]) -> Vec<CMat> {
    let n = a.len().min(b.len());
    (0..n)
        .map(|j| {
            let mut s = CMat::zeros(a[0].nrows(), a[0].ncols());
            for i in 0..=j {
                s += &a[i] * &b[j - i];
            }
            s
        })
        .collect()
}

fn place(poly: &[CMat], order: &[usize]) -> Vec<CMat> {
    let p = slot_permutation(order);
    poly.iter().map(|m| &p * m * p.transpose()).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct CocycleReport {
    /// Worst coefficient difference over all orders in `eps`.
    pub residual: f64,
    pub per_order: Vec<f64>,
    /// Whether the Hopf condition (level zero) held for these parameters.
    pub hopf_condition: bool,
}

/// `F_{3,12} F_21 - F_{23,1} F_32` on `V(z1) (x) V(z2) (x) V(z3)` as a
/// polynomial in `eps` to `order_eps`, where `F_{a,bc}` places the first
/// factor in slot `a` and the coproduct of the second in slots `b, c`.
///
/// The identity is the Hopf cocycle condition; it holds at level zero. At
/// nonzero level the same harness, which lacks the level-dependent
/// extension of the factors, measures the failure.
pub fn verify_cocycle(p: &ModelParams, order_eps: usize) -> Result<CocycleReport, TwistorError> {
    p.validate()?;
    let mut factors = Vec::new();
    for m in 1..=order_eps {
        factors.push(universal_factor(p, m, order_eps / m)?);
    }
    let v: Vec<Rep> = crate::words::STACK_Z.iter().map(|&(re, im)| Rep::evaluation(p.q, C64::new(re, im)).unwrap()).collect();
    let v12 = Rep::tensor(&v[0], &v[1]);
    let v23 = Rep::tensor(&v[1], &v[2]);
    let i2 = eye(2);
    let f3_12 = place(&universal_product(&factors, &v[2], &v12, order_eps), &[2, 0, 1]);
    let f23_1 = place(&universal_product(&factors, &v23, &v[0], order_eps), &[1, 2, 0]);
    let f21: Vec<CMat> = place(&universal_product(&factors, &v[1], &v[0], order_eps), &[1, 0]).iter().map(|m| kron(m, &i2)).collect();
    let f32: Vec<CMat> = place(&universal_product(&factors, &v[2], &v[1], order_eps), &[1, 0]).iter().map(|m| kron(&i2, m)).collect();
    let lhs = poly_mul(&f3_12, &f21);
    let rhs = poly_mul(&f23_1, &f32);
    let per_order: Vec<f64> = lhs.iter().zip(&rhs).map(|(l, r)| max_abs(&(l - r))).collect();
    let residual = per_order.iter().cloned().fold(0.0, f64::max);
    Ok(CocycleReport { residual, per_order, hopf_condition: p.k.norm() == 0.0 })
}

/// `q^phi` on two evaluation modules (for callers assembling R from words).
pub fn q_phi_evaluation(q: C64, z1: C64, z2: C64) -> Result<CMat, TwistorError> {
    Ok(q_phi_on(&Rep::evaluation(q, z1)?, &Rep::evaluation(q, z2)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(k: f64, u: f64, eps: f64) -> ModelParams {
        ModelParams { k: c(k), u: c(u), eps: c(eps), ..ModelParams::default() }
    }

    #[test]
    fn factors_at_eps_zero_are_identity() {
        let p = params(1.0, 0.3, 0.0);
        for m in 1..4 {
            let f = closed_form_factor_value(&p, m, c(0.3), c(1.0)).unwrap();
            assert!(max_abs(&(f - eye(4))) < 1e-15);
            let s = closed_form_factor(&p, m, c(0.3), c(1.0), 4).unwrap();
            assert!(max_abs(&(s.lambda_series.coeff(0) - eye(4))) < 1e-15);
        }
    }

    #[test]
    fn lambda_series_matches_point_value() {
        let p = params(1.0, 0.3, 0.2);
        for m in 1..4 {
            let s = closed_form_factor(&p, m, c(0.3), c(1.0), 40).unwrap();
            let v = closed_form_factor_value(&p, m, c(0.3), c(1.0)).unwrap();
            assert!(max_abs(&(s.eval(p.eps) - v)) < 1e-13, "M = {m}");
        }
    }

    #[test]
    fn first_order_term_is_minus_sum_of_generator_pairs() {
        let p = params(0.0, 0.5, 0.2);
        for m in [1usize, 2] {
            let s = closed_form_factor(&p, m, c(0.3), c(1.0), 2).unwrap();
            let (t1, t0) = off_diagonal_terms(p.q, m, c(0.3), c(1.0)).unwrap();
            assert!(max_abs(&(s.lambda_series.coeff(1) + t1 + t0)) < 1e-14);
        }
    }

    #[test]
    fn sparsity_by_parity() {
        let p = params(0.0, 0.5, 0.3);
        let even = closed_form_factor_value(&p, 2, c(0.3), c(1.0)).unwrap();
        let odd = closed_form_factor_value(&p, 1, c(0.3), c(1.0)).unwrap();
        // even factors stay six-vertex; odd ones fill the corners
        assert!(even[(0, 3)].norm() == 0.0 && even[(1, 2)].norm() > 0.0);
        assert!(odd[(0, 3)].norm() > 0.0 && odd[(1, 2)].norm() == 0.0);
    }

    #[test]
    fn recursion_matches_closed_form() {
        for k in [0.0, 1.0] {
            let p = params(k, 0.3, 0.2);
            let (z1, z2) = (C64::new(0.3, 0.1), c(1.0));
            for m in 1..=3 {
                let r = solve_twistor_recursion(&p, m, 4, z1, z2).unwrap();
                let cf = closed_form_factor(&p, m, z1, z2, 4 / m).unwrap();
                for n in 0..=4 / m {
                    let d = max_abs(&(r.lambda_series.coeff(n) - cf.lambda_series.coeff(n)));
                    assert!(d < 1e-10, "k={k} M={m} n={n}: {d:e}");
                }
            }
        }
    }

    #[test]
    fn product_matches_closed_product() {
        for k in [0.0, 1.0] {
            let p = params(k, 0.3, 0.2);
            let r = assemble_product(&p, C64::new(0.3, 0.1), C64::new(0.7, -0.2)).unwrap();
            assert!(r.residual < 1e-12, "k={k}: {:e}", r.residual);
        }
    }

    #[test]
    fn product_follows_the_sign_of_eps() {
        // the odd factors are odd in eps; eps_bar must not be re-derived from eps^2
        for e in [C64::new(-0.2, 0.0), C64::new(-0.1, -0.15)] {
            let p = ModelParams { eps: e, ..params(1.0, 0.3, 0.2) };
            let r = assemble_product(&p, C64::new(0.3, 0.1), C64::new(0.7, -0.2)).unwrap();
            assert!(r.residual < 1e-12, "eps={e}: {:e}", r.residual);
        }
    }

    #[test]
    fn product_is_single_valued_in_x() {
        // flipping the branch of sqrt(x) maps d -> -d, c -> -c; the gauge
        // factor sqrt(z1 z2) flips with it, so the matrix is unchanged
        let p = params(0.0, 0.5, 0.25);
        let (z1, z2) = (C64::new(-0.4, 0.1), c(1.0));
        let x = z1 / z2;
        let build = |sx: C64| {
            let cp = closed_product(&p, x, sx).unwrap();
            let d = symmetric_gauge(&p, z2, sx);
            let di = d.clone().try_inverse().unwrap();
            di * closed_product_matrix(&cp) * d
        };
        let (a, b) = (build(x.sqrt()), build(-x.sqrt()));
        assert!(max_abs(&(&a - &b)) < 1e-14);
        assert!(max_abs(&(a - product_value(&p, z1, z2).unwrap())) < 1e-13);
    }

    #[test]
    fn odd_only_normalizer_misses_even_factors() {
        let p = params(0.0, 0.5, 0.3);
        let x = c(0.1);
        let full = af_full(&p, x).unwrap();
        let odd = af_odd_only(&p, x).unwrap();
        assert!((full - odd).norm() > 1e-4);
    }

    #[test]
    fn cocycle_at_level_zero_and_its_failure_at_level_one() {
        let r0 = verify_cocycle(&params(0.0, 0.5, 0.2), 4).unwrap();
        assert!(r0.residual < 1e-9 && r0.hopf_condition);
        let r1 = verify_cocycle(&params(1.0, 0.5, 0.2), 4).unwrap();
        assert!(r1.residual > 1e-4 && !r1.hopf_condition);
    }

    #[test]
    fn twisted_r_is_eight_vertex_and_reduces_at_eps_zero() {
        let (z1, z2) = (C64::new(1.3, 0.2), c(1.0));
        let r0 = twisted_r(&params(0.0, 0.5, 0.0), z1, z2).unwrap();
        assert!(max_abs(&(r0 - r_value(c(0.5), z1, z2).unwrap())) < 1e-14);
        let r = twisted_r(&params(0.0, 0.5, 0.2), z1, z2).unwrap();
        assert!(eight_vertex_leak(&r) < 1e-12);
        assert!(r[(0, 3)].norm() > 1e-3);
    }

    #[test]
    fn twisted_ybe_holds_only_at_level_zero() {
        let z = [c(1.0), C64::new(0.37, 0.05), C64::new(0.13, -0.02)];
        let p0 = params(0.0, 0.5, 0.2);
        let p1 = params(1.0, 0.5, 0.2);
        assert!(ybe_residual(&|a, b| twisted_r(&p0, a, b), z).unwrap() < 1e-8);
        assert!(ybe_residual(&|a, b| twisted_r(&p1, a, b), z).unwrap() > 1e-4);
    }

    #[test]
    fn elliptic_ratios_match_thetas() {
        let pt = EllipticPoint { rho: C64::new(0.0, 0.07), tau: C64::new(0.0, 0.6), u: C64::new(0.13, 0.02) };
        let r = compare_elliptic(&ModelParams::default(), &pt, 1e-6).unwrap();
        assert!(r.theta_deviation < 1e-10 && r.jacobi_deviation < 1e-10 && r.scalar_deviation < 1e-10);
        // the documented assignment is the unique best candidate
        let best = r.table.iter().min_by(|a, b| a.1.partial_cmp(&b.1).unwrap()).unwrap();
        assert_eq!(best.0, "theta3:theta4:theta2:theta1");
    }

    #[test]
    fn elliptic_at_eps_zero_is_trigonometric() {
        let pt = EllipticPoint::from_q_eps(c(0.5), c(0.0), C64::new(0.13, 0.02));
        let r = compare_elliptic(&ModelParams::default(), &pt, 1e-10).unwrap();
        assert!(r.theta_deviation < 1e-12);
    }

    #[test]
    fn extra_q_factor_breaks_ybe() {
        let z = [c(1.0), C64::new(0.37, 0.05), C64::new(0.13, -0.02)];
        let (rho, tau) = (C64::new(0.0, 0.07), C64::new(0.0, 0.6));
        let ok = ybe_residual(&|a, b| theta_r_matrix(rho, tau, a, b, false), z).unwrap();
        let bad = ybe_residual(&|a, b| theta_r_matrix(rho, tau, a, b, true), z).unwrap();
        assert!(ok < 1e-12 && bad > 1e-2);
    }

    #[test]
    fn cutoff() {
        assert_eq!(cutoff_m(&params(0.0, 0.5, 0.1)).unwrap(), 18);
        assert!(cutoff_m(&params(0.0, 0.5, 0.999).hopf()).is_ok());
        let mut p = params(0.0, 0.5, 0.9);
        p.k = c(1.0);
        assert!(matches!(cutoff_m(&p), Err(TwistorError::ProductDivergence(_))));
    }
}

//! The standard trigonometric R-matrix on `V(z1) (x) V(z2)`, as a power
//! series in `y = z2/z1`:
//!
//! `R = A(q,y) q^phi T`, with
//! `T = H+ + (1-y)/(1-q^-2 y) H- + k^2/(1-q^-2 y) e21(x)e12 + k^2 y/(1-q^-2 y) e12(x)e21`.
//!
//! `T` is obtained both from the intertwining recursion and in closed form.

use crate::evrep::{build_rep, cartan_form, EvRepError};
use crate::fps::{mat_norm_residual, mat_weighted_residual, SeriesError, SeriesMatrix, TruncatedSeries, VarTag};
use crate::linalg::{embed3, eye, flip, kron, lstsq, max_abs, sylvester_map, unvec_rows, vec_rows};
use crate::qspecial::{normalizer_a_product, normalizer_a_series, SpecialError};
use crate::{CMat, C64};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RError {
    #[error(transparent)]
    Rep(#[from] EvRepError),
    #[error(transparent)]
    Special(#[from] SpecialError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("recursion constraints disagree at order {order} (residual {residual:.3e})")]
    RecursionInconsistent { order: usize, residual: f64 },
    #[error("recursion leaves a {kernel}-dimensional kernel at order {order}")]
    Underdetermined { order: usize, kernel: usize },
    #[error("ratios are inconsistent: x13 != x12 * x23")]
    InconsistentRatios,
    #[error("variable tag {0:?} cannot carry an R-matrix series")]
    TagMismatch(VarTag),
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Radius of convergence of the R-matrix series in `y`.
pub fn convergence_radius(q: C64) -> f64 {
    let a = q.norm_sqr();
    a.min(1.0 / a)
}

/// `q^phi T` split into its pieces, plus the assembled (optionally
/// normalized) series.
#[derive(Clone, Debug)]
pub struct RFactorization {
    pub q_phi: CMat,
    pub t: SeriesMatrix,
    pub a: TruncatedSeries,
    pub assembled: SeriesMatrix,
}

fn unit(i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(4, 4);
    m[(i, j)] = c(1.0);
    m
}

/// Closed-form `T(y)` expanded to `order`.
pub fn closed_form_t(q: C64, order: usize) -> SeriesMatrix {
    let k2 = q - q.inv();
    let g = TruncatedSeries::geometric(q.powi(-2), order); // 1/(1-q^-2 y)
    let mut one_minus_y = vec![C64::new(0.0, 0.0); order + 1];
    one_minus_y[0] = c(1.0);
    if order >= 1 {
        one_minus_y[1] = c(-1.0);
    }
    let hm = g.mul(&TruncatedSeries::new(one_minus_y));
    let mut coeffs = vec![CMat::zeros(4, 4); order + 1];
    coeffs[0] += unit(0, 0) + unit(3, 3);
    for n in 0..=order {
        coeffs[n] += (unit(1, 1) + unit(2, 2)) * hm.coeff(n);
        coeffs[n] += unit(2, 1) * (k2 * g.coeff(n));
        if n >= 1 {
            coeffs[n] += unit(1, 2) * (k2 * g.coeff(n - 1));
        }
    }
    SeriesMatrix::from_coeffs(coeffs, VarTag::Z2OverZ1)
}

/// The closed-form R-matrix. With `Z2OverZ1` this is `R(z1,z2)` in
/// `y = z2/z1`; with `Z1OverZ2` it is the slot-exchanged `P R(z2,z1) P`,
/// a series in `x = z1/z2`.
pub fn closed_form_r(q: C64, tag: VarTag, order: usize, normalized: bool) -> Result<RFactorization, RError> {
    build_rep(q)?;
    let q_phi = cartan_form(q).q_phi;
    let mut t = closed_form_t(q, order);
    let a = if normalized { normalizer_a_series(q, order)? } else { TruncatedSeries::one(order) };
    match tag {
        VarTag::Z2OverZ1 => {}
        VarTag::Z1OverZ2 => t = t.conjugate(&flip()).with_tag(VarTag::Z1OverZ2),
        VarTag::Other => return Err(RError::TagMismatch(tag)),
    }
    let assembled = t.left_mul_const(&q_phi).mat_series_mul(&a);
    Ok(RFactorization { q_phi, t, a, assembled })
}

/// `T` from the intertwining recursion.
///
/// With `E_g = e_g (x) 1`, `B_g = q^{s(g) H} (x) e_g`, `C_g = q^{-s(g) H} (x) e_g`
/// each coefficient satisfies `[E_g, T_d] = T_d' B_g - C_g T_d'`, and for the
/// lowering generators `[T_d, 1 (x) e_-g] = (e_-g (x) q^{s(g) H}) T_d' - T_d' (e_-g (x) q^{-s(g) H})`,
/// where `d' = d` for `g = 1` and `d' = d - 1` for `g = 0` (a spectral weight
/// moving between the slots costs one power of `y`). The solution is unique
/// once the two corner entries are pinned to `delta_{d0}`; any disagreement
/// or kernel is an error.
pub fn solve_t_recursion(q: C64, order: usize) -> Result<SeriesMatrix, RError> {
    let rep = build_rep(q)?;
    let i2 = eye(2);
    let e = [&rep.e0.mat, &rep.e1.mat];
    let em = [&rep.e_neg0.mat, &rep.e_neg1.mat];
    let sgn = [-1.0, 1.0];
    let zero = CMat::zeros(4, 4);
    let mut coeffs: Vec<CMat> = Vec::with_capacity(order + 1);
    for d in 0..=order {
        let mut a = CMat::zeros(66, 16);
        let mut b = vec![C64::new(0.0, 0.0); 66];
        let mut row = 0;
        let mut push = |lhs: CMat, rhs: CMat, a: &mut CMat, b: &mut Vec<C64>| {
            a.view_mut((row, 0), (16, 16)).copy_from(&lhs);
            for (k, v) in vec_rows(&rhs).into_iter().enumerate() {
                b[row + k] = v;
            }
            row += 16;
        };
        for g in 0..2 {
            let prev = if g == 1 {
                None
            } else if d == 0 {
                Some(zero.clone())
            } else {
                Some(coeffs[d - 1].clone())
            };
            let big_e = kron(e[g], &i2);
            let big_b = kron(&rep.q_h(sgn[g]), e[g]);
            let big_c = kron(&rep.q_h(-sgn[g]), e[g]);
            let y = kron(&i2, em[g]);
            let lp = kron(em[g], &rep.q_h(sgn[g]));
            let lm = kron(em[g], &rep.q_h(-sgn[g]));
            match prev {
                // same degree: (E + C) T - T (E + B) = 0 and (Y + Lp) T - T (Y + Lm) = 0
                None => {
                    push(sylvester_map(&(&big_e + &big_c), &(&big_e + &big_b)), zero.clone(), &mut a, &mut b);
                    push(sylvester_map(&(&y + &lp), &(&y + &lm)), zero.clone(), &mut a, &mut b);
                }
                Some(p) => {
                    push(sylvester_map(&big_e, &big_e), &p * &big_b - &big_c * &p, &mut a, &mut b);
                    push(sylvester_map(&y, &y), &p * &lm - &lp * &p, &mut a, &mut b);
                }
            }
        }
        a[(64, 0)] = c(1.0);
        a[(65, 15)] = c(1.0);
        let pin = if d == 0 { c(1.0) } else { C64::new(0.0, 0.0) };
        b[64] = pin;
        b[65] = pin;
        let sol = lstsq(&a, &b, 1e-12);
        if !sol.null_space.is_empty() {
            return Err(RError::Underdetermined { order: d, kernel: sol.null_space.len() });
        }
        if sol.residual > 1e-10 {
            return Err(RError::RecursionInconsistent { order: d, residual: sol.residual });
        }
        coeffs.push(unvec_rows(&sol.x, 4));
    }
    Ok(SeriesMatrix::from_coeffs(coeffs, VarTag::Z2OverZ1))
}

/// `T(y)` at a point, from its rational closed form.
pub fn t_value(q: C64, y: C64) -> CMat {
    let k2 = q - q.inv();
    let den = c(1.0) - y / (q * q);
    let mut m = unit(0, 0) + unit(3, 3);
    m += (unit(1, 1) + unit(2, 2)) * ((c(1.0) - y) / den);
    m += unit(2, 1) * (k2 / den);
    m += unit(1, 2) * (k2 * y / den);
    m
}

/// Normalized `R(z1, z2)` at a point, valid beyond the series disc (the
/// normalizer is taken in product form).
pub fn r_value(q: C64, z1: C64, z2: C64) -> Result<CMat, RError> {
    let y = z2 / z1;
    let a = normalizer_a_product(q, y)?;
    Ok(cartan_form(q).q_phi * t_value(q, y) * a)
}

#[derive(Clone, Debug)]
pub struct InverseSymmetryReport {
    /// `R(q,y) R(1/q,y) - 1` in the weighted sup norm.
    pub residual: f64,
    /// Same, plain absolute coefficients.
    pub plain_residual: f64,
    /// Same identity for the denominator-cleared R, which must fail.
    pub cleared_residual: f64,
}

pub fn verify_inverse_symmetry(q: C64, order: usize) -> Result<InverseSymmetryReport, RError> {
    let r = closed_form_r(q, VarTag::Z2OverZ1, order, true)?.assembled;
    let ri = closed_form_r(q.inv(), VarTag::Z2OverZ1, order, true)?.assembled;
    let id = SeriesMatrix::identity(4, order, VarTag::Z2OverZ1);
    let prod = r.mat_mul(&ri);
    let rho = convergence_radius(q);
    // clearing the common denominator 1 - q^-2 y (resp. 1 - q^2 y) destroys it
    let clear = |q: C64| {
        let mut v = vec![C64::new(0.0, 0.0); order + 1];
        v[0] = c(1.0);
        if order >= 1 {
            v[1] = -q.powi(-2);
        }
        TruncatedSeries::new(v)
    };
    let rc = closed_form_r(q, VarTag::Z2OverZ1, order, false)?.assembled.mat_series_mul(&clear(q));
    let rci = closed_form_r(q.inv(), VarTag::Z2OverZ1, order, false)?.assembled.mat_series_mul(&clear(q.inv()));
    Ok(InverseSymmetryReport {
        residual: mat_weighted_residual(&prod, &id, rho),
        plain_residual: mat_norm_residual(&prod, &id),
        cleared_residual: mat_weighted_residual(&rc.mat_mul(&rci), &id, rho),
    })
}

/// Embeds a two-slot series into three slots.
pub fn embed_series(s: &SeriesMatrix, i: usize, j: usize) -> SeriesMatrix {
    let c: Vec<CMat> = s.coeffs().iter().map(|m| embed3(m, i, j)).collect();
    SeriesMatrix::from_coeffs(c, s.tag())
}

#[derive(Clone, Debug)]
pub struct YbeReport {
    pub residual: f64,
    pub plain_residual: f64,
    pub rho: f64,
}

/// `R12 R13 R23 - R23 R13 R12` on `V (x) V (x) V`, as a series in
/// `t = y12 = z2/z1` with `y23 = z3/z2` held at a numeric value (so
/// `y13 = t y23`).
pub fn verify_ybe(q: C64, y23: C64, order: usize, normalized: bool) -> Result<YbeReport, RError> {
    let r = closed_form_r(q, VarTag::Z2OverZ1, order, normalized)?.assembled;
    let r12 = embed_series(&r, 0, 1);
    let r13 = embed_series(&r.mat_rescale_variable(y23), 0, 2);
    let r23v = if normalized {
        r_value(q, c(1.0), y23)?
    } else {
        cartan_form(q).q_phi * t_value(q, y23)
    };
    let r23 = SeriesMatrix::constant(embed3(&r23v, 1, 2), order, VarTag::Z2OverZ1);
    let lhs = r12.mat_mul(&r13).mat_mul(&r23);
    let rhs = r23.mat_mul(&r13).mat_mul(&r12);
    let rho = convergence_radius(q) * (1.0f64).min(1.0 / y23.norm());
    let scale = max_abs(r23.coeff(0)).max(1.0);
    Ok(YbeReport {
        residual: mat_weighted_residual(&lhs, &rhs, rho) / scale,
        plain_residual: mat_norm_residual(&lhs, &rhs),
        rho,
    })
}

/// YBE at a numeric point; the ratios `y_ij = z_j / z_i` must compose.
pub fn verify_ybe_numeric(q: C64, y12: C64, y13: C64, y23: C64) -> Result<f64, RError> {
    if (y13 - y12 * y23).norm() > 1e-12 * y13.norm().max(1.0) {
        return Err(RError::InconsistentRatios);
    }
    let z = [c(1.0), y12, y13];
    let r12 = embed3(&r_value(q, z[0], z[1])?, 0, 1);
    let r13 = embed3(&r_value(q, z[0], z[2])?, 0, 2);
    let r23 = embed3(&r_value(q, z[1], z[2])?, 1, 2);
    let d = &r12 * &r13 * &r23 - &r23 * &r13 * &r12;
    Ok(max_abs(&d) / max_abs(&r12).max(1.0).powi(3))
}

/// With `a = T00`, `b = T11` and `c` the coefficient of `e21 (x) e12`, the
/// entries obey `a q - b/q = c` and `q (a - b) = y c`. Returns the worst
/// coefficient-wise violation in the weighted norm.
pub fn abc_relation_residual(q: C64, t: &SeriesMatrix) -> f64 {
    let rho = convergence_radius(q);
    let mut worst: f64 = 0.0;
    let mut w = 1.0;
    for k in 0..=t.order() {
        let (a, b, cc) = (t.coeff(k)[(0, 0)], t.coeff(k)[(1, 1)], t.coeff(k)[(2, 1)]);
        worst = worst.max((a * q - b / q - cc).norm() * w);
        let prev = if k == 0 { C64::new(0.0, 0.0) } else { t.coeff(k - 1)[(2, 1)] };
        worst = worst.max((q * (a - b) - prev).norm() * w);
        w *= rho;
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recursion_order_zero_is_identity_and_first_order_is_kappa_squared() {
        let q = c(0.5);
        let t = solve_t_recursion(q, 1).unwrap();
        assert!(max_abs(&(t.coeff(0) - eye(4) - unit(2, 1) * (q - q.inv()))) < 1e-12);
        // first order: the e_-0 (x) e0 slot appears (entry (1,2)), with k^2
        let m = t.coeff(1);
        assert!((m[(1, 2)] - (q - q.inv())).norm() < 1e-12);
    }

    #[test]
    fn recursion_matches_closed_form() {
        for q in [c(0.5), c(0.3), c(2.0), C64::new(0.4, 0.3)] {
            let t = solve_t_recursion(q, 12).unwrap();
            let cf = closed_form_t(q, 12);
            assert!(mat_weighted_residual(&t, &cf, convergence_radius(q)) < 1e-12, "{q}");
            assert!(abc_relation_residual(q, &t) < 1e-12);
        }
    }

    #[test]
    fn closed_form_limits() {
        let q = c(0.5);
        let r = closed_form_r(q, VarTag::Z2OverZ1, 4, true).unwrap();
        assert!(max_abs(&(r.assembled.coeff(0) - &r.q_phi * r.t.coeff(0))) < 1e-15);
        // H+ and H- blocks are symmetric under the flip
        let t = r.t.coeff(2);
        assert!((t[(1, 1)] - t[(2, 2)]).norm() < 1e-15 && (t[(0, 0)] - t[(3, 3)]).norm() < 1e-15);
        assert!(closed_form_r(q, VarTag::Other, 4, true).is_err());
    }

    #[test]
    fn closed_form_matches_point_values() {
        let q = c(0.5);
        let (z1, z2) = (c(1.0), c(0.05));
        let r = closed_form_r(q, VarTag::Z2OverZ1, 60, true).unwrap();
        let v = r.assembled.eval(z2 / z1);
        assert!(max_abs(&(v - r_value(q, z1, z2).unwrap())) < 1e-12);
        // the x-tagged form is the slot-exchanged R(z2, z1)
        let rt = closed_form_r(q, VarTag::Z1OverZ2, 60, true).unwrap();
        let p = flip();
        let (w1, w2) = (c(0.05), c(1.0));
        let want = &p * r_value(q, w2, w1).unwrap() * &p;
        assert!(max_abs(&(rt.assembled.eval(w1 / w2) - want)) < 1e-12);
    }

    #[test]
    fn inverse_symmetry() {
        for q in [c(0.5), c(2.0)] {
            let rep = verify_inverse_symmetry(q, 32).unwrap();
            assert!(rep.residual < 1e-10, "{q}: {}", rep.residual);
            assert!(rep.cleared_residual > 1e-3);
        }
    }

    #[test]
    fn yang_baxter() {
        for q in [c(0.5), C64::new(0.4, 0.2)] {
            let rep = verify_ybe(q, C64::new(0.3, 0.1), 24, true).unwrap();
            assert!(rep.residual < 1e-10, "{}", rep.residual);
            let un = verify_ybe(q, C64::new(0.3, 0.1), 24, false).unwrap();
            assert!(un.residual < 1e-10);
        }
        assert!(verify_ybe_numeric(c(0.5), c(0.4), c(0.12), c(0.3)).unwrap() < 1e-12);
        assert!(matches!(verify_ybe_numeric(c(0.5), c(0.4), c(0.2), c(0.3)), Err(RError::InconsistentRatios)));
    }

    #[test]
    fn ratios_to_zero_leave_the_finite_r_matrix() {
        // T(0) = 1 + k^2 e21 (x) e12 is not diagonal; YBE still holds
        let q = c(0.5);
        let rep = verify_ybe(q, c(0.0), 0, true).unwrap();
        assert!(rep.residual < 1e-15);
    }
}

//! Classical and quantum Knizhnik-Zamolodchikov systems for two- and
//! three-point functions of evaluation modules.
//!
//! q-KZ conventions: the series variable is `x = z2/z1`, the step is
//! `p = q^{k+g}`, and shifting `z1 -> z1/p` maps `x -> p x`. The weight
//! operators are `A_i = c_A H_i` with `c_A = (m_source + m_sink)/2 + 1`.
//!
//! * g-type: `F(px) = q^{A1} R^-1(x) F(x)`, `F(x/p) = q^{-A} R(x/p) q^{A2} F(x)`
//! * f-type: `F(px) = R^-1(px) q^{A1} F(x)`, `F(x/p) = q^{-A} q^{A2} R(x) F(x)`
//!
//! with `A = A1 + A2` and `R = R(z1, z2)` as a series in `x`.

use crate::evrep::{cartan_form, e12, e21, h_matrix, Rep};
use crate::fps::{mat_weighted_residual, SeriesError, SeriesJson, SeriesMatrix, TruncatedSeries, VarTag};
use crate::linalg::{diag, embed3, eye, flip, kron, lstsq, max_abs};
use crate::rmatrix::{closed_form_r, convergence_radius, embed_series, r_value, RError};
use crate::twistor::{product_value, qpow, twisted_r, ModelParams, TwistorError};
use crate::words::{r_stack, solve_r_words, WordError};
use crate::{CMat, C64};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type CVec = DVector<C64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QkzError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    R(#[from] RError),
    #[error(transparent)]
    Twistor(#[from] TwistorError),
    #[error(transparent)]
    Words(#[from] WordError),
    #[error("resonant exponents: branch s = {s} meets eigenvalue {other} at order {n}")]
    ResonantIndices { s: C64, n: usize, other: C64 },
    #[error("operator mixes weight sectors (leak {0:.3e})")]
    WeightLeak(f64),
    #[error("invalid argument: {0}")]
    BadArgument(String),
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Highest weights of the source and sink modules, as `H` eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightConfig {
    pub m_source: f64,
    pub m_sink: f64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig { m_source: 1.0, m_sink: 0.0 }
    }
}

impl WeightConfig {
    pub fn c_a(&self) -> f64 {
        (self.m_source + self.m_sink) / 2.0 + 1.0
    }

    /// `q^{t A_slot}` on `nslots` fundamental evaluation slots.
    pub fn q_a(&self, q: C64, slot: usize, nslots: usize, t: f64) -> CMat {
        let mut v = Vec::with_capacity(1 << nslots);
        for idx in 0..(1usize << nslots) {
            let bit = (idx >> (nslots - 1 - slot)) & 1;
            let h = if bit == 0 { 1.0 } else { -1.0 };
            v.push(qpow(q, c(t * self.c_a() * h)));
        }
        diag(&v)
    }

    /// `q^{t (A_1 + ... + A_n)}`.
    pub fn q_a_total(&self, q: C64, nslots: usize, t: f64) -> CMat {
        (0..nslots).fold(eye(1 << nslots), |acc, s| acc * self.q_a(q, s, nslots, t))
    }
}

/// Total `H` weight of each basis vector of `nslots` fundamental slots.
pub fn basis_weights(nslots: usize) -> Vec<i32> {
    (0..(1usize << nslots)).map(|idx| (0..nslots).map(|s| if (idx >> s) & 1 == 0 { 1 } else { -1 }).sum()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Flavor {
    F,
    G,
}

/// The two-point difference system `F(px) = M1(x) F(x)`,
/// `F(x/p) = q^{-A} M2(x) F(x)`.
#[derive(Clone, Debug)]
pub struct TwoPointSystem {
    pub q: C64,
    pub p: C64,
    pub flavor: Flavor,
    pub weights: WeightConfig,
    pub m1: SeriesMatrix,
    pub m2: SeriesMatrix,
    /// `q^{A1 + A2}`.
    pub q_a: CMat,
    /// Radius on which residuals are weighed.
    pub rho: f64,
}

pub fn step(params: &ModelParams) -> C64 {
    qpow(params.q, params.k + params.g)
}

pub fn build_two_point_system(params: &ModelParams, weights: WeightConfig, flavor: Flavor) -> Result<TwoPointSystem, QkzError> {
    params.validate()?;
    let (q, order) = (params.q, params.order_x);
    let p = step(params);
    if (p.norm() - 1.0).abs() < 1e-12 {
        return Err(QkzError::BadArgument(format!("|q^(k+g)| = 1 (step {p})")));
    }
    let r = closed_form_r(q, VarTag::Z2OverZ1, order, true)?.assembled;
    let rinv = r.mat_inverse()?;
    let (qa1, qa2) = (weights.q_a(q, 0, 2, 1.0), weights.q_a(q, 1, 2, 1.0));
    let (m1, m2) = match flavor {
        Flavor::G => (rinv.left_mul_const(&qa1), r.mat_rescale_variable(p.inv()).right_mul_const(&qa2)),
        Flavor::F => (rinv.mat_rescale_variable(p).right_mul_const(&qa1), r.left_mul_const(&qa2)),
    };
    let pn = p.norm();
    let rho = convergence_radius(q) * pn.min(1.0 / pn);
    Ok(TwoPointSystem { q, p, flavor, weights, m1, m2, q_a: weights.q_a_total(q, 2, 1.0), rho })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyReport {
    /// `M2(px) M1(x) - q^A`.
    pub forward: f64,
    /// `M1(x/p) M2(x) - q^A`.
    pub reversed: f64,
    /// `[q^A, R]`.
    pub weight_commutator: f64,
}

/// Both compositions of the shift operators reduce to the constant `q^A`.
pub fn consistency(sys: &TwoPointSystem) -> Result<ConsistencyReport, QkzError> {
    let order = sys.m1.order();
    let target = SeriesMatrix::constant(sys.q_a.clone(), order, VarTag::Z2OverZ1);
    let fwd = sys.m2.mat_rescale_variable(sys.p).mat_mul(&sys.m1);
    let rev = sys.m1.mat_rescale_variable(sys.p.inv()).mat_mul(&sys.m2);
    let r = closed_form_r(sys.q, VarTag::Z2OverZ1, order, true)?.assembled;
    let comm = r.left_mul_const(&sys.q_a).mat_sub(&r.right_mul_const(&sys.q_a));
    let zero = SeriesMatrix::zero(4, order, VarTag::Z2OverZ1);
    let scale = max_abs(&sys.q_a);
    Ok(ConsistencyReport {
        forward: mat_weighted_residual(&fwd, &target, sys.rho) / scale,
        reversed: mat_weighted_residual(&rev, &target, sys.rho) / scale,
        weight_commutator: mat_weighted_residual(&comm, &zero, sys.rho) / scale,
    })
}

/// One solution `F(x) = x^s sum_n f_n x^n`, supported in one weight sector.
#[derive(Clone, Debug)]
pub struct Branch {
    pub s: C64,
    pub weight: i32,
    pub coeffs: Vec<CVec>,
    /// Weighted residual of the defining (`z1`) equation.
    pub residual_t1: f64,
    /// Weighted residual of the `z2` equation.
    pub residual_t2: f64,
}

impl Branch {
    /// `F(c x)` at `x`, with `(c x)^s = c^s x^s` so the branch cut of `x^s`
    /// is the same on both sides of a difference equation.
    pub fn eval_scaled(&self, x: C64, scale: C64) -> CVec {
        let xs = x.powc(self.s) * scale.powc(self.s);
        let cx = x * scale;
        let mut acc = CVec::zeros(self.coeffs[0].len());
        for f in self.coeffs.iter().rev() {
            acc = acc * cx + f;
        }
        acc * xs
    }

    pub fn eval(&self, x: C64) -> CVec {
        self.eval_scaled(x, c(1.0))
    }

    /// Component series in the shared JSON format.
    pub fn component_json(&self) -> Vec<SeriesJson> {
        (0..self.coeffs[0].len())
            .map(|i| {
                let v: Vec<C64> = self.coeffs.iter().map(|f| f[i]).collect();
                SeriesJson::from(&TruncatedSeries::with_leading_exponent(v, self.s))
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchJson {
    pub s: [f64; 2],
    pub weight: i32,
    pub coeffs: Vec<SeriesJson>,
    pub residuals: [f64; 2],
}

impl From<&Branch> for BranchJson {
    fn from(b: &Branch) -> Self {
        BranchJson {
            s: [b.s.re, b.s.im],
            weight: b.weight,
            coeffs: b.component_json(),
            residuals: [b.residual_t1, b.residual_t2],
        }
    }
}

fn sector_indices(weights: &[i32], w: i32) -> Vec<usize> {
    weights.iter().enumerate().filter(|(_, &x)| x == w).map(|(i, _)| i).collect()
}

fn submatrix(m: &CMat, idx: &[usize]) -> CMat {
    CMat::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

fn eigenvalues(m: &CMat) -> Vec<C64> {
    m.clone().schur().eigenvalues().expect("complex Schur form is triangular").iter().cloned().collect()
}

fn weight_leak(m: &CMat, weights: &[i32]) -> f64 {
    let mut leak: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if weights[i] != weights[j] {
                leak = leak.max(m[(i, j)].norm());
            }
        }
    }
    leak
}

/// Frobenius-type solution of `p^{s+n} f_n = sum_j m_j f_{n-j}`; one branch
/// per eigenvalue of `M1(0)` in each weight sector, with `p^s` equal to the
/// eigenvalue (principal logarithm). A later exponent `s + n` hitting
/// another eigenvalue of the same sector is reported as resonant.
pub fn solve_two_point(sys: &TwoPointSystem) -> Result<Vec<Branch>, QkzError> {
    let weights = basis_weights(2);
    for m in sys.m1.coeffs() {
        let leak = weight_leak(m, &weights);
        if leak > 1e-12 * max_abs(m).max(1.0) {
            return Err(QkzError::WeightLeak(leak));
        }
    }
    let mut sectors: Vec<i32> = weights.clone();
    sectors.sort_unstable_by(|a, b| b.cmp(a));
    sectors.dedup();
    let lp = sys.p.ln();
    let m0 = sys.m1.coeff(0);
    let order = sys.m1.order();
    let mut out = Vec::new();
    for w in sectors {
        let idx = sector_indices(&weights, w);
        let sub0 = submatrix(m0, &idx);
        let eig = eigenvalues(&sub0);
        for &mu in &eig {
            let s = mu.ln() / lp;
            let null = lstsq(&(&sub0 - CMat::identity(idx.len(), idx.len()) * mu), &vec![c(0.0); idx.len()], 1e-9).null_space;
            let v0 = CVec::from_vec(null.first().cloned().ok_or(QkzError::BadArgument("no eigenvector".into()))?);
            let mut fs: Vec<CVec> = vec![v0];
            for n in 1..=order {
                let pn = (lp * (s + c(n as f64))).exp();
                for &other in &eig {
                    if (pn - other).norm() < 1e-9 * other.norm().max(1.0) {
                        return Err(QkzError::ResonantIndices { s, n, other });
                    }
                }
                let mut rhs = CVec::zeros(idx.len());
                for j in 1..=n {
                    rhs += submatrix(sys.m1.coeff(j), &idx) * &fs[n - j];
                }
                let a = CMat::identity(idx.len(), idx.len()) * pn - &sub0;
                let f = a.lu().solve(&rhs).ok_or(QkzError::ResonantIndices { s, n, other: pn })?;
                fs.push(f);
            }
            let coeffs: Vec<CVec> = fs
                .iter()
                .map(|f| {
                    let mut full = CVec::zeros(4);
                    for (k, &i) in idx.iter().enumerate() {
                        full[i] = f[k];
                    }
                    full
                })
                .collect();
            let mut br = Branch { s, weight: w, coeffs, residual_t1: 0.0, residual_t2: 0.0 };
            let (r1, r2) = branch_residuals(sys, &br);
            br.residual_t1 = r1;
            br.residual_t2 = r2;
            out.push(br);
        }
    }
    Ok(out)
}

/// Weighted coefficient residuals of both difference equations.
pub fn branch_residuals(sys: &TwoPointSystem, br: &Branch) -> (f64, f64) {
    let lp = sys.p.ln();
    let qai = sys.q_a.clone().try_inverse().expect("diagonal");
    let n_max = br.coeffs.len() - 1;
    let mut scale: f64 = 0.0;
    let (mut r1, mut r2): (f64, f64) = (0.0, 0.0);
    let mut w = 1.0;
    for n in 0..=n_max {
        let pn = (lp * (br.s + c(n as f64))).exp();
        let mut a1 = CVec::zeros(4);
        let mut a2 = CVec::zeros(4);
        for j in 0..=n {
            a1 += sys.m1.coeff(j) * &br.coeffs[n - j];
            a2 += sys.m2.coeff(j) * &br.coeffs[n - j];
        }
        let lhs1 = &br.coeffs[n] * pn;
        let lhs2 = &br.coeffs[n] / pn;
        r1 = r1.max((lhs1 - a1).camax() * w);
        r2 = r2.max((lhs2 - &qai * a2).camax() * w);
        scale = scale.max(br.coeffs[n].camax() * w);
        w *= sys.rho;
    }
    (r1 / scale, r2 / scale)
}

/// Three evaluation slots with `z = (1, t, t c)`: a series in `t = z2/z1`
/// at fixed numeric `c = z3/z2`.
#[derive(Clone, Debug)]
pub struct ThreePoint {
    pub q: C64,
    pub c: C64,
    pub r12: SeriesMatrix,
    pub r13: SeriesMatrix,
    pub r23: SeriesMatrix,
    pub rho: f64,
}

pub fn three_point(params: &ModelParams, c23: C64) -> Result<ThreePoint, QkzError> {
    params.validate()?;
    let (q, order) = (params.q, params.order_x);
    let r = closed_form_r(q, VarTag::Z2OverZ1, order, true)?.assembled;
    let r23 = SeriesMatrix::constant(embed3(&r_value(q, c(1.0), c23)?, 1, 2), order, VarTag::Z2OverZ1);
    Ok(ThreePoint {
        q,
        c: c23,
        r12: embed_series(&r, 0, 1),
        r13: embed_series(&r.mat_rescale_variable(c23), 0, 2),
        r23,
        rho: convergence_radius(q) * 1.0f64.min(1.0 / c23.norm()),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ThreePointReport {
    /// f-type composite `R12^-1 R13^-1 q^A1 R23^-1 q^A2 R12 q^A3 R13 R23 - q^A`.
    pub f_composite: f64,
    /// g-type composite `q^A1 R_{1,23}^-1 R12 q^A2 R23^-1 R23 R13 q^A3 - q^A`
    /// with `R_{1,23} = R12 R13`.
    pub g_composite: f64,
    /// g-type composite with `R_{1,23}` from the universal R words.
    pub g_composite_universal: f64,
    /// `R_{1,23}` (universal words) against `R12 R13`.
    pub quasi_triangularity: f64,
    /// The same against the wrong order `R13 R12` (control, must be large).
    pub quasi_triangularity_control: f64,
    /// Grades compared in the universal checks.
    pub universal_grade: usize,
}

fn const_like(m: CMat, s: &SeriesMatrix) -> SeriesMatrix {
    SeriesMatrix::constant(m, s.order(), s.tag())
}

/// Operator closure of the three-point systems. The f-type composite
/// collapses to `q^A` exactly when R solves YBE; the g-type one when
/// `(id (x) Delta) R = R12 R13`.
pub fn check_three_point(params: &ModelParams, weights: WeightConfig, c23: C64, universal_grade: usize) -> Result<ThreePointReport, QkzError> {
    let tp = three_point(params, c23)?;
    let q = tp.q;
    let qa = |i| const_like(weights.q_a(q, i, 3, 1.0), &tp.r12);
    let total = const_like(weights.q_a_total(q, 3, 1.0), &tp.r12);
    let (r12i, r13i, r23i) = (tp.r12.mat_inverse()?, tp.r13.mat_inverse()?, tp.r23.mat_inverse()?);
    let f = [&r12i, &r13i, &qa(0), &r23i, &qa(1), &tp.r12, &qa(2), &tp.r13, &tp.r23]
        .iter()
        .skip(1)
        .fold(r12i.clone(), |acc, m| acc.mat_mul(m));
    let scale = max_abs(total.coeff(0));
    let f_composite = mat_weighted_residual(&f, &total, tp.rho) / scale;

    let g_with = |r1_23: &SeriesMatrix| -> Result<SeriesMatrix, QkzError> {
        Ok(qa(0)
            .mat_mul(&r1_23.mat_inverse()?)
            .mat_mul(&tp.r12)
            .mat_mul(&qa(1))
            .mat_mul(&r23i)
            .mat_mul(&tp.r23)
            .mat_mul(&tp.r13)
            .mat_mul(&qa(2)))
    };
    let r1_23 = tp.r12.mat_mul(&tp.r13);
    let g_composite = mat_weighted_residual(&g_with(&r1_23)?, &total, tp.rho) / scale;

    let u = universal_r_1_23(q, c23, universal_grade)?;
    let ju = universal_grade;
    let trunc = |s: &SeriesMatrix| s.truncate(ju);
    let g_u = mat_weighted_residual(&g_with(&u)?, &trunc(&total), tp.rho) / scale;
    let qt = mat_weighted_residual(&u, &trunc(&r1_23), tp.rho) / max_abs(r1_23.coeff(0));
    let ctrl = mat_weighted_residual(&u, &trunc(&tp.r13.mat_mul(&tp.r12)), tp.rho) / max_abs(r1_23.coeff(0));
    Ok(ThreePointReport {
        f_composite,
        g_composite,
        g_composite_universal: g_u,
        quasi_triangularity: qt,
        quasi_triangularity_control: ctrl,
        universal_grade,
    })
}

/// `R` of the universal words on `V(1) (x) (V(1) (x) V(c))`: grade `j`
/// is the coefficient of `t^j` when `z2 = t`, `z3 = t c`.
pub fn universal_r_1_23(q: C64, c23: C64, grade: usize) -> Result<SeriesMatrix, QkzError> {
    let u = solve_r_words(grade, &r_stack(q, 1), 1e-8)?;
    let v1 = Rep::evaluation(q, c(1.0)).map_err(|e| QkzError::R(RError::Rep(e)))?;
    let v2 = Rep::evaluation(q, c(1.0)).map_err(|e| QkzError::R(RError::Rep(e)))?;
    let v3 = Rep::evaluation(q, c23).map_err(|e| QkzError::R(RError::Rep(e)))?;
    let v23 = Rep::tensor(&v2, &v3);
    let qphi = crate::evrep::q_phi_on(&v1, &v23);
    let coeffs = u.evaluate(&v1, &v23).into_iter().map(|m| &qphi * m).collect();
    Ok(SeriesMatrix::from_coeffs(coeffs, VarTag::Z2OverZ1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TwistMode {
    Hopf,
    QuasiHopf,
}

#[derive(Clone, Debug, Serialize)]
pub struct TwistReport {
    pub x: [f64; 2],
    pub s: [f64; 2],
    /// `g_e(px) - F21^-1(px) q^A1 R^-1(x) F21(x) g_e(x)`, relative.
    pub correct_residual: f64,
    /// `g_e(px) - q^A1 R_e^-1 g_e(x)`, relative.
    pub naive_residual: f64,
    /// `|g_e - g|` relative to `|g|` at `x`.
    pub twist_size: f64,
}

/// `F21(z2, z1) = P F(z2, z1) P` at `z1 = 1/x`, `z2 = 1`.
pub fn f21(params: &ModelParams, x: C64) -> Result<CMat, QkzError> {
    let p = flip();
    Ok(&p * product_value(params, c(1.0), x.inv())? * &p)
}

/// Twisted g-type two-point function `g_e = F21^-1 g` and the residuals of
/// the conjugated equation it satisfies and of the naive equation with the
/// twisted R-matrix, at `z1 = 1/x`, `z2 = 1`.
pub fn twist_two_point(params: &ModelParams, weights: WeightConfig, mode: TwistMode, x: C64) -> Result<TwistReport, QkzError> {
    let params = match mode {
        TwistMode::Hopf => params.hopf(),
        TwistMode::QuasiHopf => params.clone(),
    };
    let sys = build_two_point_system(&params, weights, Flavor::G)?;
    let branches = solve_two_point(&sys)?;
    let br = branches.iter().find(|b| b.weight == 0).expect("weight-zero branch");
    let p = sys.p;
    let twisted = |y: C64, g: CVec| -> Result<CVec, QkzError> {
        let f = f21(&params, y)?;
        Ok(f.lu().solve(&g).expect("twistor is invertible"))
    };
    let g_x = br.eval(x);
    let g_px = br.eval_scaled(x, p);
    let ge_x = twisted(x, g_x.clone())?;
    let ge_px = twisted(p * x, g_px)?;
    let qa1 = weights.q_a(params.q, 0, 2, 1.0);
    let rinv = r_value(params.q, x.inv(), c(1.0))?.try_inverse().expect("R invertible");
    let correct = f21(&params, p * x)?.lu().solve(&(&qa1 * &rinv * f21(&params, x)? * &ge_x)).expect("invertible");
    let re = twisted_r(&params, x.inv(), c(1.0))?;
    let naive = &qa1 * re.try_inverse().expect("R_e invertible") * &ge_x;
    let norm = ge_px.camax();
    Ok(TwistReport {
        x: [x.re, x.im],
        s: [br.s.re, br.s.im],
        correct_residual: (&ge_px - correct).camax() / norm,
        naive_residual: (&ge_px - naive).camax() / norm,
        twist_size: (&ge_x - &g_x).camax() / g_x.camax(),
    })
}

/// Spin-`j` matrices `(E, F, H)` with `[E, F] = H`, basis `m = j, j-1, ..., -j`;
/// `two_j = 2j`.
pub fn spin_matrices(two_j: usize) -> (CMat, CMat, CMat) {
    let d = two_j + 1;
    let j = two_j as f64 / 2.0;
    let mut e = CMat::zeros(d, d);
    let mut h = CMat::zeros(d, d);
    for i in 0..d {
        let m = j - i as f64;
        h[(i, i)] = c(2.0 * m);
        if i > 0 {
            // E |m> = sqrt((j - m)(j + m + 1)) |m + 1>
            e[(i - 1, i)] = c(((j - m) * (j + m + 1.0)).sqrt());
        }
    }
    let f = e.transpose();
    (e, f, h)
}

/// `Omega = H (x) H / 2 + E (x) F + F (x) E`.
pub fn omega(a: &(CMat, CMat, CMat), b: &(CMat, CMat, CMat)) -> CMat {
    kron(&a.2, &b.2) * c(0.5) + kron(&a.0, &b.1) + kron(&a.1, &b.0)
}

/// `C(j) = 2 j (j + 1)`, the value of `H^2/2 + EF + FE` on spin `j`.
pub fn casimir(two_j: usize) -> f64 {
    let j = two_j as f64 / 2.0;
    2.0 * j * (j + 1.0)
}

/// Classical KZ for two fundamental slots at `z1, z2` and a spin-`j`
/// source at `0`: `kappa d_p f = A_p f` with
/// `A_1 = c12/(z1 - z2) + c13/z1`, `A_2 = c12/(z2 - z1) + c23/z2`.
#[derive(Clone, Debug)]
pub struct KzSystem {
    pub kappa: C64,
    pub two_j: usize,
    pub c12: CMat,
    pub c13: CMat,
    pub c23: CMat,
}

pub fn classical_kz_system(kappa: C64, two_j: usize) -> KzSystem {
    let half = spin_matrices(1);
    let sj = spin_matrices(two_j);
    let dj = two_j + 1;
    let i2 = eye(2);
    let ij = eye(dj);
    let c12 = kron(&omega(&half, &half), &ij);
    let c23 = kron(&i2, &omega(&half, &sj));
    // slots 1 and 3 are not adjacent: conjugate by the swap of slots 1, 2
    let sw = kron(&flip(), &ij);
    let c13 = &sw * &c23 * &sw;
    KzSystem { kappa, two_j, c12, c13, c23 }
}

impl KzSystem {
    pub fn connections(&self, z1: C64, z2: C64) -> (CMat, CMat) {
        let a1 = &self.c12 / (z1 - z2) + &self.c13 / z1;
        let a2 = &self.c12 / (z2 - z1) + &self.c23 / z2;
        (a1, a2)
    }

    /// `d_1 A_2 - d_2 A_1` (analytic) and `[A_1, A_2]`, relative to `|A|^2`.
    pub fn flatness(&self, z1: C64, z2: C64) -> (f64, f64) {
        let (a1, a2) = self.connections(z1, z2);
        let d1a2 = &self.c12 / ((z2 - z1) * (z2 - z1));
        let d2a1 = &self.c12 / ((z1 - z2) * (z1 - z2));
        let curv = max_abs(&(d1a2 - d2a1)) / max_abs(&self.c12) * (z1 - z2).norm_sqr();
        let comm = max_abs(&(&a1 * &a2 - &a2 * &a1)) / (max_abs(&a1) * max_abs(&a2));
        (curv, comm)
    }

    /// Total `c12 + c13 + c23`; its eigenvalue fixes the homogeneity.
    pub fn total(&self) -> CMat {
        &self.c12 + &self.c13 + &self.c23
    }
}

/// Multiplicative polarization on two fundamental slots:
/// `kappa z1 d_1 f = (A_1 + r(x)) f`, `kappa z2 d_2 f = (A_2 - r(x)) f`,
/// `x = z2/z1`, `r(x) = phi + 2 e21 (x) e12 + 2 x/(1 - x) Omega`.
/// The derivative terms cancel identically, so flatness is `[A_1 + A_2, r] = 0`.
pub fn polarized_r(x: C64) -> CMat {
    let half = spin_matrices(1);
    let phi = kron(&h_matrix(), &h_matrix()) * c(0.5);
    phi + kron(&e21(), &e12()) * c(2.0) + omega(&half, &half) * (x / (c(1.0) - x) * 2.0)
}

pub fn polarized_flatness(weights: WeightConfig, x: C64) -> f64 {
    let h = h_matrix() * c(weights.c_a());
    let a = kron(&h, &eye(2)) + kron(&eye(2), &h);
    let r = polarized_r(x);
    let b1 = kron(&h, &eye(2)) + &r;
    let b2 = kron(&eye(2), &h) - &r;
    // D1 B2 - D2 B1 with D1 x = -x, D2 x = x: both equal x r'(x)
    let comm = &b1 * &b2 - &b2 * &b1;
    let direct = &a * &r - &r * &a;
    max_abs(&comm).max(max_abs(&direct)) / (max_abs(&b1) * max_abs(&b2))
}

/// `f = z1^s h(x)`, `x = z2/z1`, reduces the system to
/// `kappa x h' = (c23 - c12 x/(1 - x)) h`. Each branch is
/// `h = x^sigma sum h_n x^n` with `kappa sigma` an eigenvalue of `c23`
/// and `h_0` a joint eigenvector of `c23` and the total Casimir, whose
/// eigenvalue gives `kappa s`.
#[derive(Clone, Debug)]
pub struct FrobeniusBranch {
    pub sigma: C64,
    pub s: C64,
    pub coeffs: Vec<CVec>,
    /// Residual of `(1 - x) kappa x h' - ((1 - x) c23 - x c12) h`, relative.
    pub residual: f64,
}

pub fn frobenius(kz: &KzSystem, order: usize) -> Result<Vec<FrobeniusBranch>, QkzError> {
    let d = kz.c23.nrows();
    let total = kz.total();
    let k = kz.kappa;
    // joint eigenvectors: diagonalize c23 on each eigenspace of the total
    let mut out = Vec::new();
    let mut seen: Vec<(C64, C64)> = Vec::new();
    for lt in eigenvalues(&total) {
        for l23 in eigenvalues(&kz.c23) {
            if seen.iter().any(|(a, b)| (a - lt).norm() < 1e-9 && (b - l23).norm() < 1e-9) {
                continue;
            }
            seen.push((lt, l23));
            let stacked = {
                let a = &total - CMat::identity(d, d) * lt;
                let b = &kz.c23 - CMat::identity(d, d) * l23;
                let mut m = CMat::zeros(2 * d, d);
                m.view_mut((0, 0), (d, d)).copy_from(&a);
                m.view_mut((d, 0), (d, d)).copy_from(&b);
                m
            };
            let null = lstsq(&stacked, &vec![c(0.0); 2 * d], 1e-9).null_space;
            for v in null {
                let sigma = l23 / k;
                let mut hs: Vec<CVec> = vec![CVec::from_vec(v)];
                let mut acc = CVec::zeros(d);
                for n in 1..=order {
                    acc += &hs[n - 1];
                    let a = CMat::identity(d, d) * (k * (sigma + c(n as f64))) - &kz.c23;
                    let rhs = -(&kz.c12 * &acc);
                    let h = a.lu().solve(&rhs).ok_or(QkzError::ResonantIndices { s: sigma, n, other: k * (sigma + c(n as f64)) })?;
                    hs.push(h);
                }
                let residual = frobenius_residual(kz, sigma, &hs);
                out.push(FrobeniusBranch { sigma, s: lt / k, coeffs: hs, residual });
            }
        }
    }
    Ok(out)
}

fn frobenius_residual(kz: &KzSystem, sigma: C64, hs: &[CVec]) -> f64 {
    let k = kz.kappa;
    let mut worst: f64 = 0.0;
    let scale = hs.iter().map(|h| h.camax()).fold(0.0, f64::max);
    for n in 0..hs.len() {
        let mut r = &hs[n] * (k * (sigma + c(n as f64))) - &kz.c23 * &hs[n];
        if n > 0 {
            r -= &hs[n - 1] * (k * (sigma + c(n as f64 - 1.0)));
            r += &kz.c23 * &hs[n - 1] + &kz.c12 * &hs[n - 1];
        }
        worst = worst.max(r.camax());
    }
    worst / scale
}

/// `q^phi` from the evaluation Cartan form (re-exported for examples).
pub fn q_phi(q: C64) -> CMat {
    cartan_form(q).q_phi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn weight_operators() {
        let w = WeightConfig::default();
        assert_eq!(w.c_a(), 1.5);
        let qa = w.q_a(c(0.5), 0, 2, 1.0);
        assert!((qa[(0, 0)] - c(0.5f64.powf(1.5))).norm() < 1e-15);
        assert!((qa[(3, 3)] - c(0.5f64.powf(-1.5))).norm() < 1e-12);
        assert_eq!(basis_weights(2), vec![2, 0, 0, -2]);
    }

    #[test]
    fn m1_at_zero_is_triangular() {
        // M1(0) = q^A1 q^-phi T(0)^-1 with T(0) = 1 + k^2 e21 (x) e12
        let sys = build_two_point_system(&p(), WeightConfig::default(), Flavor::G).unwrap();
        let m0 = sys.m1.coeff(0);
        for i in 0..4 {
            for j in (i + 1)..4 {
                assert!(m0[(i, j)].norm() < 1e-14);
            }
        }
    }

    #[test]
    fn consistency_both_flavors() {
        for fl in [Flavor::F, Flavor::G] {
            let sys = build_two_point_system(&p(), WeightConfig::default(), fl).unwrap();
            let r = consistency(&sys).unwrap();
            assert!(r.forward < 1e-10 && r.reversed < 1e-10 && r.weight_commutator < 1e-12, "{fl:?}: {r:?}");
        }
    }

    #[test]
    fn two_point_branches_solve_both_equations() {
        for fl in [Flavor::F, Flavor::G] {
            let sys = build_two_point_system(&p(), WeightConfig::default(), fl).unwrap();
            let bs = solve_two_point(&sys).unwrap();
            assert_eq!(bs.len(), 4);
            for b in &bs {
                assert!(b.residual_t1 < 1e-9 && b.residual_t2 < 1e-9, "{fl:?} s={} {} {}", b.s, b.residual_t1, b.residual_t2);
            }
        }
    }

    #[test]
    fn integer_exponent_gap_in_a_sector_is_resonant() {
        // c_A = 1 gives exponents differing by 1 inside the weight-zero sector
        let w = WeightConfig { m_source: 0.0, m_sink: 0.0 };
        let sys = build_two_point_system(&p(), w, Flavor::G).unwrap();
        assert!(matches!(solve_two_point(&sys), Err(QkzError::ResonantIndices { .. })));
    }

    #[test]
    fn three_point_composites_close() {
        let r = check_three_point(&p(), WeightConfig::default(), C64::new(0.3, 0.1), 2).unwrap();
        assert!(r.f_composite < 1e-10 && r.g_composite < 1e-10 && r.g_composite_universal < 1e-10);
        assert!(r.quasi_triangularity < 1e-10 && r.quasi_triangularity_control > 1e-2);
    }

    #[test]
    fn twist_covariance_fails_naively() {
        let w = WeightConfig { m_source: 0.5, m_sink: 0.0 };
        for (mode, k) in [(TwistMode::Hopf, 0.0), (TwistMode::QuasiHopf, 1.0)] {
            let pk = ModelParams { k: c(k), ..p() };
            let r = twist_two_point(&pk, w, mode, c(0.1)).unwrap();
            assert!(r.correct_residual < 1e-8 && r.naive_residual > 1e-3, "{mode:?}: {r:?}");
        }
        let r0 = twist_two_point(&ModelParams { eps: c(0.0), ..p() }, w, TwistMode::Hopf, c(0.1)).unwrap();
        assert_eq!(r0.twist_size, 0.0);
        assert!(r0.naive_residual < 1e-8);
    }

    #[test]
    fn kz_connections_are_flat() {
        let kz = classical_kz_system(c(2.5), 2);
        for (z1, z2) in [(C64::new(0.7, 0.2), C64::new(-0.3, 0.5)), (c(2.0), C64::new(0.1, -1.0))] {
            let (curv, comm) = kz.flatness(z1, z2);
            assert!(curv < 1e-12 && comm < 1e-12);
        }
        assert!(polarized_flatness(WeightConfig::default(), C64::new(0.3, 0.2)) < 1e-12);
    }

    #[test]
    fn frobenius_branches_span_the_space() {
        let kz = classical_kz_system(c(2.5), 2);
        let bs = frobenius(&kz, 32).unwrap();
        assert_eq!(bs.len(), 12);
        assert!(bs.iter().all(|b| b.residual < 1e-10));
    }

    #[test]
    fn spin_matrices_close() {
        for tj in 1..5 {
            let (e, f, h) = spin_matrices(tj);
            assert!(max_abs(&(&e * &f - &f * &e - &h)) < 1e-13);
            let cas = &h * &h * c(0.5) + &e * &f + &f * &e;
            assert!(max_abs(&(cas - eye(tj + 1) * c(casimir(tj)))) < 1e-12);
        }
    }

    #[test]
    fn single_point_exponent_is_casimir_difference() {
        // c13 on the spin-J component of V(1/2) (x) V(j) is (C(J) - C(1/2) - C(j))/2
        let tj = 2;
        let o = omega(&spin_matrices(1), &spin_matrices(tj));
        let mut ev: Vec<f64> = eigenvalues(&o).iter().map(|z| z.re).collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let lo = 0.5 * (casimir(tj - 1) - casimir(1) - casimir(tj));
        let hi = 0.5 * (casimir(tj + 1) - casimir(1) - casimir(tj));
        assert!((ev[0] - lo).abs() < 1e-12 && (ev[ev.len() - 1] - hi).abs() < 1e-12);
    }

    #[test]
    fn highest_weight_branch_is_binomial() {
        // top vector: c23 = j, c12 = 1/2, so h = x^{j/k} (1 - x)^{1/(2k)}
        let kappa = c(2.5);
        let kz = classical_kz_system(kappa, 2);
        let bs = frobenius(&kz, 20).unwrap();
        let top = bs.iter().find(|b| b.coeffs[0][0].norm() > 0.5 && (b.sigma - c(1.0) / kappa).norm() < 1e-12).unwrap();
        let expo = c(0.5) / kappa;
        let x = c(0.1);
        let want = (c(1.0) - x).powc(expo);
        let mut got = c(0.0);
        for (n, h) in top.coeffs.iter().enumerate() {
            got += h[0] / top.coeffs[0][0] * x.powu(n as u32);
        }
        assert!((got - want).norm() < 1e-14);
    }
}

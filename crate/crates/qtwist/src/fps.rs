//! Truncated formal power series with complex coefficients, and square
//! matrices of such series (stored as a list of coefficient matrices).

use crate::{CMat, C64};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("constant term {0:.3e} too small to invert")]
    ZeroConstantTerm(f64),
    #[error("constant term of matrix series is singular")]
    SingularConstantTerm,
    #[error("leading exponents {0} and {1} do not differ by an integer")]
    IncompatibleExponents(C64, C64),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

/// `x^s * (c_0 + c_1 x + ... + c_N x^N) + O(x^{N+1+s})`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<C64>,
    lead: C64,
}

impl TruncatedSeries {
    pub fn new(coeffs: Vec<C64>) -> Self {
        assert!(!coeffs.is_empty(), "a truncated series needs at least c_0");
        TruncatedSeries { coeffs, lead: C64::new(0.0, 0.0) }
    }

    pub fn with_leading_exponent(coeffs: Vec<C64>, lead: C64) -> Self {
        let mut s = Self::new(coeffs);
        s.lead = lead;
        s
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    pub fn zero(order: usize) -> Self {
        Self::new(vec![C64::new(0.0, 0.0); order + 1])
    }

    pub fn constant(c: C64, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c;
        s
    }

    pub fn one(order: usize) -> Self {
        Self::constant(C64::new(1.0, 0.0), order)
    }

    /// The series `x` (as `0 + 1 x`).
    pub fn var(order: usize) -> Self {
        let mut s = Self::zero(order);
        if order >= 1 {
            s.coeffs[1] = C64::new(1.0, 0.0);
        }
        s
    }

    /// `1/(1 - a x)` expanded to `order`.
    pub fn geometric(a: C64, order: usize) -> Self {
        let mut c = Vec::with_capacity(order + 1);
        let mut p = C64::new(1.0, 0.0);
        for _ in 0..=order {
            c.push(p);
            p *= a;
        }
        Self::new(c)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading_exponent(&self) -> C64 {
        self.lead
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize) -> C64 {
        self.coeffs.get(n).copied().unwrap_or_default()
    }

    pub fn truncate(&self, order: usize) -> Self {
        let n = order.min(self.order());
        TruncatedSeries { coeffs: self.coeffs[..=n].to_vec(), lead: self.lead }
    }

    pub fn add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.combine(other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.combine(other, C64::new(-1.0, 0.0))
    }

    // Aligns leading exponents that differ by a non-negative integer shift
    // by padding the higher one with zeros; the order is the smaller of
    // the two absolute truncation points.
    fn combine(&self, other: &Self, sign: C64) -> Result<Self, SeriesError> {
        let d = other.lead - self.lead;
        let shift = d.re.round();
        if (d.re - shift).abs() > 1e-12 || d.im.abs() > 1e-12 {
            return Err(SeriesError::IncompatibleExponents(self.lead, other.lead));
        }
        let (off_a, off_b, lead) = if shift >= 0.0 {
            (0, shift as usize, self.lead)
        } else {
            ((-shift) as usize, 0, other.lead)
        };
        let end = (self.order() + off_a).min(other.order() + off_b);
        let mut c = vec![C64::new(0.0, 0.0); end + 1];
        for (n, v) in c.iter_mut().enumerate() {
            if n >= off_a {
                *v += self.coeff(n - off_a);
            }
            if n >= off_b {
                *v += sign * other.coeff(n - off_b);
            }
        }
        Ok(TruncatedSeries { coeffs: c, lead })
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        let mut c = vec![C64::new(0.0, 0.0); n + 1];
        for (i, a) in self.coeffs.iter().take(n + 1).enumerate() {
            if *a == C64::new(0.0, 0.0) {
                continue;
            }
            for (j, b) in other.coeffs.iter().take(n + 1 - i).enumerate() {
                c[i + j] += a * b;
            }
        }
        TruncatedSeries { coeffs: c, lead: self.lead + other.lead }
    }

    pub fn scale(&self, k: C64) -> Self {
        TruncatedSeries { coeffs: self.coeffs.iter().map(|c| c * k).collect(), lead: self.lead }
    }

    pub fn invert(&self) -> Result<Self, SeriesError> {
        let c0 = self.coeffs[0];
        if c0.norm() < 1e-300 {
            return Err(SeriesError::ZeroConstantTerm(c0.norm()));
        }
        let n = self.order();
        let inv0 = c0.inv();
        let mut b = vec![C64::new(0.0, 0.0); n + 1];
        b[0] = inv0;
        for k in 1..=n {
            let mut s = C64::new(0.0, 0.0);
            for j in 1..=k {
                s += self.coeffs[j] * b[k - j];
            }
            b[k] = -s * inv0;
        }
        Ok(TruncatedSeries { coeffs: b, lead: -self.lead })
    }

    /// `exp(f)` for a series with zero constant term and zero leading exponent.
    pub fn exp(&self) -> Self {
        debug_assert!(self.coeffs[0].norm() < 1e-14 && self.lead.norm() == 0.0);
        let n = self.order();
        let mut e = vec![C64::new(0.0, 0.0); n + 1];
        e[0] = C64::new(1.0, 0.0);
        // e' = f' e  =>  k e_k = sum_{j=1..k} j f_j e_{k-j}
        for k in 1..=n {
            let mut s = C64::new(0.0, 0.0);
            for j in 1..=k {
                s += (j as f64) * self.coeffs[j] * e[k - j];
            }
            e[k] = s / k as f64;
        }
        TruncatedSeries::new(e)
    }

    /// `f(x) -> f(c x)`; a leading `x^s` picks up `c^s` (principal branch).
    pub fn rescale_variable(&self, c: C64) -> Self {
        let mut p = C64::new(1.0, 0.0);
        let mut out = Vec::with_capacity(self.coeffs.len());
        for a in &self.coeffs {
            out.push(a * p);
            p *= c;
        }
        let pref = if self.lead.norm() == 0.0 { C64::new(1.0, 0.0) } else { c.powc(self.lead) };
        TruncatedSeries { coeffs: out.iter().map(|v| v * pref).collect(), lead: self.lead }
    }

    /// Numeric value at `x`, principal branch for `x^s`.
    pub fn eval(&self, x: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        if self.lead.norm() == 0.0 {
            acc
        } else {
            acc * x.powc(self.lead)
        }
    }

    /// Max coefficient difference; leading exponents must agree.
    pub fn residual(&self, other: &Self) -> f64 {
        let n = self.order().min(other.order());
        (0..=n).map(|k| (self.coeffs[k] - other.coeffs[k]).norm()).fold(0.0, f64::max)
    }
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lead.norm() != 0.0 {
            write!(f, "x^({}) * (", self.lead)?;
        }
        for (n, c) in self.coeffs.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})x^{n}")?;
        }
        if self.lead.norm() != 0.0 {
            write!(f, ")")?;
        }
        write!(f, " + O(x^{})", self.order() + 1)
    }
}

/// JSON shape shared by the CLI and golden files.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct SeriesJson {
    pub order: usize,
    pub leading_exponent: [f64; 2],
    pub coeffs: Vec<[f64; 2]>,
}

impl From<&TruncatedSeries> for SeriesJson {
    fn from(s: &TruncatedSeries) -> Self {
        SeriesJson {
            order: s.order(),
            leading_exponent: [s.lead.re, s.lead.im],
            coeffs: s.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

impl From<SeriesJson> for TruncatedSeries {
    fn from(j: SeriesJson) -> Self {
        TruncatedSeries::with_leading_exponent(
            j.coeffs.iter().map(|c| C64::new(c[0], c[1])).collect(),
            C64::new(j.leading_exponent[0], j.leading_exponent[1]),
        )
    }
}

impl Serialize for TruncatedSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SeriesJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for TruncatedSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = SeriesJson::deserialize(d)?;
        if j.coeffs.len() != j.order + 1 {
            return Err(serde::de::Error::custom("coeffs length must be order+1"));
        }
        Ok(j.into())
    }
}

/// Which ratio of spectral parameters the series variable stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarTag {
    /// `y = z2/z1`, the natural variable of `R(z1,z2)`.
    Z2OverZ1,
    /// `x = z1/z2`, used by the twistor factors.
    Z1OverZ2,
    /// A variable that is not a spectral ratio (e.g. a grading parameter).
    Other,
}

/// `sum_n M_n x^n` with `d x d` complex coefficient matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesMatrix {
    dim: usize,
    coeffs: Vec<CMat>,
    tag: VarTag,
}

impl SeriesMatrix {
    pub fn from_coeffs(coeffs: Vec<CMat>, tag: VarTag) -> Self {
        assert!(!coeffs.is_empty());
        let dim = coeffs[0].nrows();
        assert!(coeffs.iter().all(|m| m.nrows() == dim && m.ncols() == dim));
        SeriesMatrix { dim, coeffs, tag }
    }

    pub fn zero(dim: usize, order: usize, tag: VarTag) -> Self {
        Self::from_coeffs(vec![CMat::zeros(dim, dim); order + 1], tag)
    }

    pub fn constant(m: CMat, order: usize, tag: VarTag) -> Self {
        let dim = m.nrows();
        let mut c = vec![CMat::zeros(dim, dim); order + 1];
        c[0] = m;
        Self::from_coeffs(c, tag)
    }

    pub fn identity(dim: usize, order: usize, tag: VarTag) -> Self {
        Self::constant(CMat::identity(dim, dim), order, tag)
    }

    /// Builds a matrix series from a grid of scalar series (all entries are
    /// truncated to the smallest order present).
    pub fn from_entries(entries: &[Vec<TruncatedSeries>], tag: VarTag) -> Self {
        let dim = entries.len();
        let order = entries.iter().flatten().map(|s| s.order()).min().unwrap_or(0);
        let mut c = vec![CMat::zeros(dim, dim); order + 1];
        for (i, row) in entries.iter().enumerate() {
            assert_eq!(row.len(), dim);
            for (j, s) in row.iter().enumerate() {
                for (n, m) in c.iter_mut().enumerate() {
                    m[(i, j)] = s.coeff(n);
                }
            }
        }
        Self::from_coeffs(c, tag)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn tag(&self) -> VarTag {
        self.tag
    }

    pub fn with_tag(mut self, tag: VarTag) -> Self {
        self.tag = tag;
        self
    }

    pub fn coeff(&self, n: usize) -> &CMat {
        &self.coeffs[n]
    }

    pub fn coeffs(&self) -> &[CMat] {
        &self.coeffs
    }

    pub fn entry(&self, i: usize, j: usize) -> TruncatedSeries {
        TruncatedSeries::new(self.coeffs.iter().map(|m| m[(i, j)]).collect())
    }

    pub fn truncate(&self, order: usize) -> Self {
        let n = order.min(self.order());
        SeriesMatrix { dim: self.dim, coeffs: self.coeffs[..=n].to_vec(), tag: self.tag }
    }

    pub fn mat_add(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        let c = (0..=n).map(|k| &self.coeffs[k] + &other.coeffs[k]).collect();
        SeriesMatrix { dim: self.dim, coeffs: c, tag: self.tag }
    }

    pub fn mat_sub(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        let c = (0..=n).map(|k| &self.coeffs[k] - &other.coeffs[k]).collect();
        SeriesMatrix { dim: self.dim, coeffs: c, tag: self.tag }
    }

    pub fn mat_mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let n = self.order().min(other.order());
        let mut c = vec![CMat::zeros(self.dim, self.dim); n + 1];
        for i in 0..=n {
            if self.coeffs[i].iter().all(|v| *v == C64::new(0.0, 0.0)) {
                continue;
            }
            for j in 0..=(n - i) {
                c[i + j] += &self.coeffs[i] * &other.coeffs[j];
            }
        }
        SeriesMatrix { dim: self.dim, coeffs: c, tag: self.tag }
    }

    /// Left multiplication by a constant matrix.
    pub fn left_mul_const(&self, m: &CMat) -> Self {
        SeriesMatrix { dim: self.dim, coeffs: self.coeffs.iter().map(|c| m * c).collect(), tag: self.tag }
    }

    pub fn right_mul_const(&self, m: &CMat) -> Self {
        SeriesMatrix { dim: self.dim, coeffs: self.coeffs.iter().map(|c| c * m).collect(), tag: self.tag }
    }

    pub fn mat_scalar_mul(&self, k: C64) -> Self {
        SeriesMatrix { dim: self.dim, coeffs: self.coeffs.iter().map(|c| c * k).collect(), tag: self.tag }
    }

    /// Multiplication by a scalar series (leading exponent must be zero).
    pub fn mat_series_mul(&self, s: &TruncatedSeries) -> Self {
        assert_eq!(s.leading_exponent().norm(), 0.0);
        let n = self.order().min(s.order());
        let mut c = vec![CMat::zeros(self.dim, self.dim); n + 1];
        for i in 0..=n {
            let a = s.coeff(i);
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..=(n - i) {
                c[i + j] += &self.coeffs[j] * a;
            }
        }
        SeriesMatrix { dim: self.dim, coeffs: c, tag: self.tag }
    }

    pub fn mat_inverse(&self) -> Result<Self, SeriesError> {
        let inv0 = self.coeffs[0].clone().try_inverse().ok_or(SeriesError::SingularConstantTerm)?;
        let n = self.order();
        let mut b: Vec<CMat> = Vec::with_capacity(n + 1);
        b.push(inv0.clone());
        for k in 1..=n {
            let mut s = CMat::zeros(self.dim, self.dim);
            for j in 1..=k {
                s += &self.coeffs[j] * &b[k - j];
            }
            b.push(-(&inv0 * s));
        }
        Ok(SeriesMatrix { dim: self.dim, coeffs: b, tag: self.tag })
    }

    pub fn mat_rescale_variable(&self, c: C64) -> Self {
        let mut p = C64::new(1.0, 0.0);
        let mut out = Vec::with_capacity(self.coeffs.len());
        for m in &self.coeffs {
            out.push(m * p);
            p *= c;
        }
        SeriesMatrix { dim: self.dim, coeffs: out, tag: self.tag }
    }

    pub fn kron(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        let d = self.dim * other.dim;
        let mut c = vec![CMat::zeros(d, d); n + 1];
        for i in 0..=n {
            for j in 0..=(n - i) {
                c[i + j] += self.coeffs[i].kronecker(&other.coeffs[j]);
            }
        }
        SeriesMatrix { dim: d, coeffs: c, tag: self.tag }
    }

    /// Numeric value at `x`.
    pub fn eval(&self, x: C64) -> CMat {
        let mut acc = CMat::zeros(self.dim, self.dim);
        for m in self.coeffs.iter().rev() {
            acc = acc * x + m;
        }
        acc
    }

    /// Conjugation by a constant permutation-like matrix: `P M P^T`.
    pub fn conjugate(&self, p: &CMat) -> Self {
        let pt = p.transpose();
        SeriesMatrix { dim: self.dim, coeffs: self.coeffs.iter().map(|m| p * m * &pt).collect(), tag: self.tag }
    }

    pub fn to_json(&self) -> SeriesMatrixJson {
        SeriesMatrixJson {
            dim: self.dim,
            variable: self.tag,
            entries: (0..self.dim)
                .map(|i| (0..self.dim).map(|j| SeriesJson::from(&self.entry(i, j))).collect())
                .collect(),
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct SeriesMatrixJson {
    pub dim: usize,
    pub variable: VarTag,
    pub entries: Vec<Vec<SeriesJson>>,
}

/// Max over entries and coefficient indices of the absolute difference.
pub fn mat_norm_residual(a: &SeriesMatrix, b: &SeriesMatrix) -> f64 {
    mat_weighted_residual(a, b, 1.0)
}

/// Like [`mat_norm_residual`] but coefficient `n` is weighted by `rho^n`.
///
/// For series whose coefficients grow like `rho^{-n}` (radius of
/// convergence `rho < 1`) this is the scale on which floating-point
/// agreement is meaningful: it is the sup norm after rescaling the
/// variable onto the disc of convergence.
pub fn mat_weighted_residual(a: &SeriesMatrix, b: &SeriesMatrix, rho: f64) -> f64 {
    let n = a.order().min(b.order());
    let mut w = 1.0;
    let mut r: f64 = 0.0;
    for k in 0..=n {
        let d = (&a.coeffs[k] - &b.coeffs[k]).iter().map(|v| v.norm()).fold(0.0, f64::max);
        r = r.max(d * w);
        w *= rho;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn add_cancels_and_mul_gives_difference_of_squares() {
        let a = TruncatedSeries::from_real(&[1.0, 1.0, 0.0]);
        let b = TruncatedSeries::from_real(&[1.0, -1.0, 0.0]);
        assert_eq!(a.add(&b).unwrap().coeffs(), &[c(2.0), c(0.0), c(0.0)]);
        assert_eq!(a.mul(&b).coeffs(), &[c(1.0), c(0.0), c(-1.0)]);
    }

    #[test]
    fn shifted_geometric_plus_one_is_geometric() {
        let n = 10;
        let g = TruncatedSeries::geometric(c(1.0), n);
        let xg = TruncatedSeries::var(n).mul(&g);
        let s = xg.add(&TruncatedSeries::one(n)).unwrap();
        assert!(s.residual(&g) == 0.0);
    }

    #[test]
    fn geometric_times_one_minus_x() {
        let n = 12;
        let g = TruncatedSeries::geometric(c(1.0), n);
        let p = g.mul(&TruncatedSeries::from_real(&[1.0, -1.0]).add(&TruncatedSeries::zero(n)).unwrap());
        // the two-term series has order 1, so the product is only good to O(x^2)
        assert_eq!(p.order(), 1);
        let one_minus_x = TruncatedSeries::new({
            let mut v = vec![c(0.0); n + 1];
            v[0] = c(1.0);
            v[1] = c(-1.0);
            v
        });
        assert!(g.mul(&one_minus_x).residual(&TruncatedSeries::one(n)) < 1e-15);
    }

    #[test]
    fn invert_examples() {
        let n = 8;
        let mut v = vec![c(0.0); n + 1];
        v[0] = c(1.0);
        v[1] = c(-1.0);
        let inv = TruncatedSeries::new(v).invert().unwrap();
        assert!(inv.residual(&TruncatedSeries::geometric(c(1.0), n)) < 1e-15);
        let two = TruncatedSeries::constant(c(2.0), 3).invert().unwrap();
        assert_eq!(two.coeff(0), c(0.5));
        assert!(matches!(TruncatedSeries::zero(3).invert(), Err(SeriesError::ZeroConstantTerm(_))));
    }

    #[test]
    fn exp_of_log_series() {
        // exp(-log(1-x)) = 1/(1-x)
        let n = 15;
        let l = TruncatedSeries::new((0..=n).map(|k| if k == 0 { c(0.0) } else { c(1.0 / k as f64) }).collect());
        assert!(l.exp().residual(&TruncatedSeries::geometric(c(1.0), n)) < 1e-14);
    }

    #[test]
    fn rescale_and_eval() {
        let q = C64::new(0.5, 0.1);
        let x = TruncatedSeries::var(3);
        let r = x.rescale_variable(q * q);
        assert_eq!(r.coeff(1), q * q);
        let g = TruncatedSeries::geometric(c(0.3), 40);
        assert!((g.eval(c(0.5)) - c(1.0 / 0.85)).norm() < 1e-15);
    }

    #[test]
    fn leading_exponent_alignment() {
        let a = TruncatedSeries::with_leading_exponent(vec![c(1.0), c(2.0), c(3.0)], c(0.5));
        let b = TruncatedSeries::with_leading_exponent(vec![c(1.0), c(1.0)], c(1.5));
        let s = a.add(&b).unwrap();
        // x^{1/2}(1 + 2x + 3x^2) + x^{3/2}(1 + x): order limited by b to x^{1/2} x^2
        assert_eq!(s.leading_exponent(), c(0.5));
        assert_eq!(s.coeffs(), &[c(1.0), c(3.0), c(4.0)]);
        let bad = TruncatedSeries::with_leading_exponent(vec![c(1.0)], c(0.25));
        assert!(a.add(&bad).is_err());
    }

    #[test]
    fn json_round_trip() {
        let a = TruncatedSeries::with_leading_exponent(vec![C64::new(1.0, -2.0), c(0.25)], C64::new(0.5, 0.1));
        let s = serde_json::to_string(&a).unwrap();
        assert!(s.contains("\"leading_exponent\""));
        let b: TruncatedSeries = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
        let bad = r#"{"order":3,"leading_exponent":[0,0],"coeffs":[[1,0]]}"#;
        assert!(serde_json::from_str::<TruncatedSeries>(bad).is_err());
    }

    #[test]
    fn matrix_identity_and_inverse() {
        let n = 6;
        let mut c1 = CMat::zeros(2, 2);
        c1[(0, 1)] = c(1.0);
        c1[(1, 0)] = c(0.3);
        let m = SeriesMatrix::from_coeffs(
            (0..=n).map(|k| if k == 0 { CMat::identity(2, 2) * c(2.0) } else { &c1 * c(1.0 / (k as f64)) }).collect(),
            VarTag::Other,
        );
        let id = SeriesMatrix::identity(2, n, VarTag::Other);
        assert_eq!(mat_norm_residual(&id.mat_mul(&m), &m), 0.0);
        let inv = m.mat_inverse().unwrap();
        assert!(mat_norm_residual(&m.mat_mul(&inv), &id) < 1e-14);
        let sing = SeriesMatrix::zero(2, 2, VarTag::Other);
        assert_eq!(sing.mat_inverse(), Err(SeriesError::SingularConstantTerm));
    }
}

//! Representation-independent ("universal") solutions of the R-matrix and
//! twistor recursions.
//!
//! An unknown element is expanded as `sum c_(w,w') X_w (x) Y_w'` over pairs
//! of generator words. The recursion is imposed simultaneously in a stack of
//! tensor-product modules, which pins the coefficients far better than the
//! 4-dim module alone (where the recursion has a kernel). A least-squares
//! solve returns the minimum-norm coefficients; whatever freedom remains is
//! checked to be invisible on the target modules.

use crate::evrep::{s, Rep};
use crate::linalg::{kron, lstsq, max_abs, vec_rows};
use crate::{CMat, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WordError {
    #[error("order {order}: the kernel is visible on a target module (ambiguity {ambiguity:.3e})")]
    UnderdeterminedSystem { order: usize, ambiguity: f64 },
    #[error("order {order}: least-squares residual {residual:.3e}")]
    Inconsistent { order: usize, residual: f64 },
}

/// Which generator family a tensor slot's words are built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gen {
    E,
    ENeg,
    F,
    FNeg,
}

impl Gen {
    pub fn mat(self, rep: &Rep, a: usize) -> CMat {
        match self {
            Gen::E => rep.e[a].clone(),
            Gen::ENeg => rep.em[a].clone(),
            Gen::F => rep.f(a),
            Gen::FNeg => rep.fm(a),
        }
    }
}

pub type Word = Vec<u8>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WordPair {
    pub first: Word,
    pub second: Word,
}

/// Coefficients of one homogeneous component.
#[derive(Clone, Debug)]
pub struct Component {
    pub coeffs: Vec<C64>,
    pub pairs: Vec<WordPair>,
}

impl Component {
    pub fn identity() -> Self {
        Component { coeffs: vec![C64::new(1.0, 0.0)], pairs: vec![WordPair { first: vec![], second: vec![] }] }
    }
}

/// Products of generator words in one module, memoised by prefix.
pub struct WordCache<'a> {
    rep: &'a Rep,
    gen: Gen,
    gens: [CMat; 2],
    cache: HashMap<Word, CMat>,
}

impl<'a> WordCache<'a> {
    pub fn new(rep: &'a Rep, gen: Gen) -> Self {
        WordCache { rep, gen, gens: [gen.mat(rep, 0), gen.mat(rep, 1)], cache: HashMap::new() }
    }

    pub fn word(&mut self, w: &[u8]) -> CMat {
        if let Some(m) = self.cache.get(w) {
            return m.clone();
        }
        let m = match w.split_last() {
            None => CMat::identity(self.rep.dim(), self.rep.dim()),
            Some((&last, head)) => self.word(head) * &self.gens[last as usize],
        };
        self.cache.insert(w.to_vec(), m.clone());
        m
    }

    pub fn gen(&self) -> Gen {
        self.gen
    }
}

/// All sequences over `{1, 0}` with the given letter counts, in a fixed order.
pub fn arrangements(ones: usize, zeros: usize) -> Vec<Word> {
    if ones == 0 && zeros == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    if ones > 0 {
        for mut w in arrangements(ones - 1, zeros) {
            w.insert(0, 1);
            out.push(w);
        }
    }
    if zeros > 0 {
        for mut w in arrangements(ones, zeros - 1) {
            w.insert(0, 0);
            out.push(w);
        }
    }
    out
}

/// Evaluates `sum c X_w (x) Y_w'` on `A (x) B`.
pub fn evaluate(comp: &Component, a: &mut WordCache, b: &mut WordCache) -> CMat {
    let d = a.rep.dim() * b.rep.dim();
    let mut out = CMat::zeros(d, d);
    for (c, p) in comp.coeffs.iter().zip(&comp.pairs) {
        if c.norm() > 0.0 {
            out += kron(&a.word(&p.first), &b.word(&p.second)) * *c;
        }
    }
    out
}

pub fn evaluate_on(comp: &Component, ga: Gen, gb: Gen, a: &Rep, b: &Rep) -> CMat {
    evaluate(comp, &mut WordCache::new(a, ga), &mut WordCache::new(b, gb))
}

/// Modules used to pin universal coefficients.
#[derive(Clone, Debug)]
pub struct RepStack {
    pub pairs: Vec<(Rep, Rep)>,
    pub targets: Vec<(Rep, Rep)>,
}

fn random_z(rng: &mut ChaCha8Rng) -> C64 {
    let r: f64 = rng.random_range(0.5..1.5);
    let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    C64::from_polar(r, t)
}

/// The spectral parameters of the three standard modules in the stacks.
pub const STACK_Z: [(f64, f64); 3] = [(1.0, 0.0), (0.37, 0.05), (0.13, -0.02)];

/// Stack for twistor words: pairs of one-, two- and three-factor modules,
/// plus larger second-slot modules (up to five factors in total) which are
/// needed to make the kernel invisible on the targets.
pub fn twistor_stack(q: C64, seed: u64) -> RepStack {
    let v: Vec<Rep> = STACK_Z.iter().map(|&(re, im)| Rep::evaluation(q, C64::new(re, im)).unwrap()).collect();
    let t = Rep::tensor;
    let v12 = t(&v[0], &v[1]);
    let v23 = t(&v[1], &v[2]);
    let mut pairs = vec![
        (v[0].clone(), v[1].clone()),
        (v[2].clone(), v12.clone()),
        (v23.clone(), v[0].clone()),
        (v[1].clone(), v[2].clone()),
        (v12.clone(), v23.clone()),
        (v[1].clone(), v[0].clone()),
        (v[2].clone(), v[1].clone()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ev = |rng: &mut ChaCha8Rng| Rep::evaluation(q, random_z(rng)).unwrap();
    for _ in 0..2 {
        let (a, b, c, d) = (ev(&mut rng), ev(&mut rng), ev(&mut rng), ev(&mut rng));
        let bc = t(&b, &c);
        pairs.push((a.clone(), t(&bc, &d)));
        pairs.push((t(&a, &b), t(&bc, &d)));
        pairs.push((t(&t(&a, &b), &c), t(&c, &d)));
    }
    let (a, b, c, d, e) = (ev(&mut rng), ev(&mut rng), ev(&mut rng), ev(&mut rng), ev(&mut rng));
    pairs.push((a, t(&t(&b, &c), &t(&d, &e))));
    let (x, y) = (ev(&mut rng), ev(&mut rng));
    let targets = vec![
        (v[2].clone(), v12),
        (v23, v[0].clone()),
        (v[1].clone(), v[0].clone()),
        (v[2].clone(), v[1].clone()),
        (x, y),
    ];
    RepStack { pairs, targets }
}

/// Stack for R-matrix words (first slot up to three factors).
pub fn r_stack(q: C64, seed: u64) -> RepStack {
    let v: Vec<Rep> =
        [(1.0, 0.0), (0.8, 0.3), (0.6, -0.2)].iter().map(|&(re, im)| Rep::evaluation(q, C64::new(re, im)).unwrap()).collect();
    let t = Rep::tensor;
    let v12 = t(&v[0], &v[1]);
    let v23 = t(&v[1], &v[2]);
    let mut pairs = vec![(v[0].clone(), v[2].clone()), (v12.clone(), v[2].clone()), (v[0].clone(), v23.clone())];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ev = |rng: &mut ChaCha8Rng| Rep::evaluation(q, random_z(rng)).unwrap();
    for _ in 0..2 {
        let (a, b, c, d) = (ev(&mut rng), ev(&mut rng), ev(&mut rng), ev(&mut rng));
        pairs.push((t(&t(&a, &b), &c), d.clone()));
        pairs.push((a.clone(), t(&t(&b, &c), &d)));
        pairs.push((t(&a, &b), t(&c, &d)));
    }
    let targets = pairs[..3].to_vec();
    RepStack { pairs, targets }
}

/// Per-order diagnostics of a stacked solve.
#[derive(Clone, Debug)]
pub struct SolveInfo {
    pub order: usize,
    pub unknowns: usize,
    pub rank: usize,
    pub residual: f64,
    pub kernel: usize,
    pub ambiguity: f64,
}

/// Shared tail of every solve: least squares, consistency and the check that
/// the kernel vanishes on the target modules.
fn finish(
    order: usize,
    m: &CMat,
    b: &[C64],
    pairs: Vec<WordPair>,
    targets: &[(Rep, Rep)],
    gens: (Gen, Gen),
    tol: f64,
) -> Result<(Component, SolveInfo), WordError> {
    let sol = lstsq(m, b, 1e-10);
    if sol.residual > tol {
        return Err(WordError::Inconsistent { order, residual: sol.residual });
    }
    let mut ambiguity: f64 = 0.0;
    for (ta, tb) in targets {
        let mut ca = WordCache::new(ta, gens.0);
        let mut cb = WordCache::new(tb, gens.1);
        for nv in &sol.null_space {
            let comp = Component { coeffs: nv.clone(), pairs: pairs.clone() };
            ambiguity = ambiguity.max(max_abs(&evaluate(&comp, &mut ca, &mut cb)));
        }
    }
    if ambiguity > tol {
        return Err(WordError::UnderdeterminedSystem { order, ambiguity });
    }
    let info =
        SolveInfo { order, unknowns: pairs.len(), rank: sol.rank, residual: sol.residual, kernel: sol.null_space.len(), ambiguity };
    Ok((Component { coeffs: sol.x, pairs }, info))
}

/// Stacks equation blocks: each block is (column matrices per unknown, rhs).
struct System {
    cols: Vec<Vec<C64>>,
    rhs: Vec<C64>,
}

impl System {
    fn new(unknowns: usize) -> Self {
        System { cols: vec![Vec::new(); unknowns], rhs: Vec::new() }
    }

    fn push(&mut self, col_mats: Vec<CMat>, rhs: &CMat) {
        for (c, m) in self.cols.iter_mut().zip(col_mats) {
            c.extend(vec_rows(&m));
        }
        self.rhs.extend(vec_rows(rhs));
    }

    fn matrix(&self) -> CMat {
        let rows = self.rhs.len();
        CMat::from_fn(rows, self.cols.len(), |i, j| self.cols[j][i])
    }
}

/// Universal twistor factor `F^M = sum_n lambda^n G_n` (`lambda = eps^M`),
/// with words `f_w (x) f_-w'`.
#[derive(Clone, Debug)]
pub struct UniversalTwistor {
    pub m: usize,
    pub grades: Vec<Component>,
    pub info: Vec<SolveInfo>,
}

impl UniversalTwistor {
    /// `G_0, G_1, ...` evaluated on `A (x) B`.
    pub fn evaluate(&self, a: &Rep, b: &Rep) -> Vec<CMat> {
        let mut ca = WordCache::new(a, Gen::F);
        let mut cb = WordCache::new(b, Gen::FNeg);
        self.grades.iter().map(|g| evaluate(g, &mut ca, &mut cb)).collect()
    }
}

/// `tau^M` on a root label: the identity for even `M`, the swap for odd.
pub fn tau_power(m: usize, a: u8) -> u8 {
    if m % 2 == 0 {
        a
    } else {
        1 - a
    }
}

/// Solves `[1 (x) f_r, G_n] = (G_{n-1} (f_{tau r} (x) q^{-s(r) H}) - (f_{tau r} (x) q^{s(r) H}) G_{n-1}) Q_r`
/// for `n = 1..=nmax` with `G_0 = 1`.
pub fn solve_twistor_words(
    m: usize,
    cartan_q: [C64; 2],
    nmax: usize,
    stack: &RepStack,
    tol: f64,
) -> Result<UniversalTwistor, WordError> {
    let mut grades = vec![Component::identity()];
    let mut info = Vec::new();
    for n in 1..=nmax {
        let mut pairs = Vec::new();
        for ones in (0..=n).rev() {
            for w in arrangements(ones, n - ones) {
                let tw: Word = w.iter().map(|&a| tau_power(m, a)).collect();
                let t1 = tw.iter().filter(|&&a| a == 1).count();
                for wp in arrangements(t1, n - t1) {
                    pairs.push(WordPair { first: w.clone(), second: wp });
                }
            }
        }
        let mut sys = System::new(pairs.len());
        for (a, b) in &stack.pairs {
            let mut ca = WordCache::new(a, Gen::F);
            let mut cb = WordCache::new(b, Gen::FNeg);
            let prev = evaluate(grades.last().unwrap(), &mut ca, &mut cb);
            for rho in 0..2usize {
                let fr = b.f(rho);
                let cols: Vec<CMat> = pairs
                    .iter()
                    .map(|p| {
                        let w2 = cb.word(&p.second);
                        kron(&ca.word(&p.first), &(&fr * &w2 - &w2 * &fr))
                    })
                    .collect();
                let fa = a.f(tau_power(m, rho as u8) as usize);
                let rhs = (&prev * kron(&fa, &b.q_h(-s(rho))) - kron(&fa, &b.q_h(s(rho))) * &prev) * cartan_q[rho];
                sys.push(cols, &rhs);
            }
        }
        let (comp, inf) = finish(n, &sys.matrix(), &sys.rhs, pairs, &stack.targets, (Gen::F, Gen::FNeg), tol)?;
        grades.push(comp);
        info.push(inf);
    }
    Ok(UniversalTwistor { m, grades, info })
}

/// Universal R tail `T = sum_j T^(j)`, graded by the number `j` of
/// affine (`0`) letters, with words `e_-w (x) e_w'`. On `V(z1) (x) V(z2)`
/// the grade-`j` part is proportional to `(z2/z1)^j`.
#[derive(Clone, Debug)]
pub struct UniversalR {
    pub max_grade: usize,
    pub components: HashMap<(usize, usize), Component>,
    pub info: Vec<SolveInfo>,
}

impl UniversalR {
    /// Grade-by-grade evaluation `[T^(0), T^(1), ...]` on `A (x) B`.
    pub fn evaluate(&self, a: &Rep, b: &Rep) -> Vec<CMat> {
        let mut ca = WordCache::new(a, Gen::ENeg);
        let mut cb = WordCache::new(b, Gen::E);
        let d = a.dim() * b.dim();
        let mut out = vec![CMat::zeros(d, d); self.max_grade + 1];
        let mut keys: Vec<_> = self.components.keys().cloned().collect();
        keys.sort();
        for (n, j) in keys {
            out[j] += evaluate(&self.components[&(n, j)], &mut ca, &mut cb);
        }
        out
    }
}

/// Solves both intertwining forms of the R recursion on word pairs of
/// length `n` and grade `j`, for `j <= max_grade` and
/// `n <= 2 j + (largest number of factors in a first-slot module)`.
pub fn solve_r_words(max_grade: usize, stack: &RepStack, tol: f64) -> Result<UniversalR, WordError> {
    let hmax = stack.pairs.iter().map(|(a, _)| a.factors).max().unwrap_or(1);
    let mut comps: HashMap<(usize, usize), Component> = HashMap::new();
    comps.insert((0, 0), Component::identity());
    let mut info = Vec::new();
    for j in 0..=max_grade {
        for n in j.max(1)..=2 * j + hmax {
            let mut pairs = Vec::new();
            for w in arrangements(n - j, j) {
                for wp in arrangements(n - j, j) {
                    pairs.push(WordPair { first: w.clone(), second: wp });
                }
            }
            let mut sys = System::new(pairs.len());
            for (a, b) in &stack.pairs {
                let mut ca = WordCache::new(a, Gen::ENeg);
                let mut cb = WordCache::new(b, Gen::E);
                let dim = a.dim() * b.dim();
                let mut prev_of = |jp: Option<usize>| -> Option<CMat> {
                    let jp = jp?;
                    comps.get(&(n - 1, jp)).map(|c| evaluate(c, &mut ca, &mut cb))
                };
                let prevs = [prev_of(j.checked_sub(1)), prev_of(Some(j))];
                for g in 0..2usize {
                    let sg = s(g);
                    let zero = CMat::zeros(dim, dim);
                    let prev = prevs[g].as_ref();
                    // [e_g (x) 1, T] = T (q^{sH} (x) e_g) - (q^{-sH} (x) e_g) T
                    let eg = &a.e[g];
                    let cols: Vec<CMat> = pairs
                        .iter()
                        .map(|p| {
                            let w1 = ca.word(&p.first);
                            kron(&(eg * &w1 - &w1 * eg), &cb.word(&p.second))
                        })
                        .collect();
                    let rhs = match prev {
                        Some(t) => t * kron(&a.q_h(sg), &b.e[g]) - kron(&a.q_h(-sg), &b.e[g]) * t,
                        None => zero.clone(),
                    };
                    sys.push(cols, &rhs);
                    // [T, 1 (x) e_-g] = (e_-g (x) q^{sH}) T - T (e_-g (x) q^{-sH})
                    let emg = &b.em[g];
                    let cols: Vec<CMat> = pairs
                        .iter()
                        .map(|p| {
                            let w2 = cb.word(&p.second);
                            kron(&ca.word(&p.first), &(&w2 * emg - emg * &w2))
                        })
                        .collect();
                    let rhs = match prev {
                        Some(t) => kron(&a.em[g], &b.q_h(sg)) * t - t * kron(&a.em[g], &b.q_h(-sg)),
                        None => zero,
                    };
                    sys.push(cols, &rhs);
                }
            }
            let (comp, inf) = finish(n, &sys.matrix(), &sys.rhs, pairs, &stack.targets, (Gen::ENeg, Gen::E), tol)?;
            comps.insert((n, j), comp);
            info.push(inf);
        }
    }
    Ok(UniversalR { max_grade, components: comps, info })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arrangement_counts() {
        assert_eq!(arrangements(2, 2).len(), 6);
        assert_eq!(arrangements(0, 0), vec![Vec::<u8>::new()]);
        assert_eq!(arrangements(1, 1), vec![vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn word_cache_multiplies_left_to_right() {
        let r = Rep::evaluation(C64::new(0.5, 0.0), C64::new(0.7, 0.1)).unwrap();
        let mut c = WordCache::new(&r, Gen::E);
        let w = c.word(&[1, 0]);
        assert!(max_abs(&(w - &r.e[1] * &r.e[0])) < 1e-15);
    }
}

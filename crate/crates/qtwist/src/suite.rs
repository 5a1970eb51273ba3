//! The acceptance suite: every identity the crate validates, at fixed
//! tolerances, keyed by a short identity name.
//!
//! | # | identity | checks |
//! |---|----------|--------|
//! | 1 | `normalizer-inversion` | `A(q,x) A(1/q,x) = 1`; sum and product forms agree |
//! | 2 | `r-matrix-uniqueness` | recursion solution equals the closed form |
//! | 3 | `yang-baxter` | YBE on `V (x) V (x) V` |
//! | 4 | `inverse-symmetry` | `R(q,x)^-1 = R(1/q,x)` |
//! | 5 | `twistor-factors` | recursion-solved factors equal the closed factors |
//! | 6 | `twistor-product` | factor product equals the closed product |
//! | 7 | `hopf-cocycle` | cocycle at level zero, fails at level one |
//! | 8 | `elliptic-match` | twisted R against theta and Jacobi ratios |
//! | 9 | `qkz-consistency` | shift operators compose to `q^A`; series solutions |
//! | 10 | `twist-covariance` | conjugated equation holds, naive one fails |
//! | 11 | `kz-flatness` | classical KZ flatness; Frobenius series |

use crate::config::RunConfig;
use crate::qkz::{
    build_two_point_system, check_three_point, classical_kz_system, consistency, frobenius, polarized_flatness, solve_two_point,
    twist_two_point, Flavor, TwistMode,
};
use crate::qspecial::{elliptic_k_agm, normalizer_a, normalizer_a_product, quarter_period_and_modulus};
use crate::rmatrix::{closed_form_t, convergence_radius, solve_t_recursion, verify_inverse_symmetry, verify_ybe};
use crate::twistor::{
    assemble_product, closed_form_factor, compare_elliptic, qpow, solve_twistor_recursion, verify_cocycle, EllipticPoint,
    ModelParams,
};
use crate::{c, C64};
use crate::fps::mat_weighted_residual;
use crate::linalg::max_abs;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    /// The value must stay below the bound.
    Below,
    /// The value must exceed the bound (negative controls).
    Above,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub kind: Bound,
    pub pass: bool,
}

impl Check {
    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, kind: Bound::Below, pass: value < bound }
    }

    pub fn above(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, kind: Bound::Above, pass: value > bound }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Criterion {
    pub id: usize,
    pub identity: &'static str,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub error: Option<String>,
    /// Wall time; kept out of serialized output so runs are reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

impl Criterion {
    /// The failing check with the worst value-to-bound ratio, else the
    /// tightest passing one.
    pub fn headline(&self) -> Option<&Check> {
        let ratio = |c: &Check| match c.kind {
            Bound::Below => c.value / c.bound,
            Bound::Above => c.bound / c.value.max(f64::MIN_POSITIVE),
        };
        self.checks.iter().max_by(|a, b| ratio(a).partial_cmp(&ratio(b)).unwrap_or(std::cmp::Ordering::Equal))
    }

    pub fn line(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        let detail = match (&self.error, self.headline()) {
            (Some(e), _) => format!("error: {e}"),
            (None, Some(h)) => {
                let op = if h.kind == Bound::Below { "<" } else { ">" };
                format!("{} = {:.3e} (needs {op} {:.0e})", h.name, h.value, h.bound)
            }
            (None, None) => String::new(),
        };
        format!("[{status}] {:>2} {:<22} {detail}  [{:.2}s]", self.id, self.identity, self.seconds)
    }
}

pub const IDENTITIES: [&str; 11] = [
    "normalizer-inversion",
    "r-matrix-uniqueness",
    "yang-baxter",
    "inverse-symmetry",
    "twistor-factors",
    "twistor-product",
    "hopf-cocycle",
    "elliptic-match",
    "qkz-consistency",
    "twist-covariance",
    "kz-flatness",
];

type Checks = Result<Vec<Check>, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn polar(rng: &mut ChaCha8Rng, r: std::ops::Range<f64>) -> C64 {
    let m = rng.random_range(r);
    let t = rng.random_range(0.0..std::f64::consts::TAU);
    C64::from_polar(m, t)
}

fn normalizer_inversion(seed: u64) -> Checks {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut inv, mut forms): (f64, f64) = (0.0, 0.0);
    for _ in 0..10 {
        let q = polar(&mut rng, 0.3..0.9);
        let x = polar(&mut rng, 0.0..0.5);
        let a = normalizer_a(q, x).map_err(err)?;
        let b = normalizer_a(q.inv(), x).map_err(err)?;
        inv = inv.max((a * b - c(1.0)).norm());
        forms = forms.max((a - normalizer_a_product(q, x).map_err(err)?).norm() / a.norm());
        forms = forms.max((b - normalizer_a_product(q.inv(), x).map_err(err)?).norm() / b.norm());
    }
    Ok(vec![Check::below("|A(q,x)A(1/q,x) - 1|", inv, 1e-12), Check::below("sum vs product", forms, 1e-12)])
}

fn r_uniqueness() -> Checks {
    let mut out = Vec::new();
    for q in [0.3, 0.5, 2.0] {
        let q = c(q);
        let rec = solve_t_recursion(q, 32).map_err(err)?;
        let cf = closed_form_t(q, 32);
        let d = mat_weighted_residual(&rec, &cf, convergence_radius(q));
        out.push(Check::below(format!("recursion - closed (q={})", q.re), d, 1e-12));
    }
    Ok(out)
}

fn yang_baxter() -> Checks {
    let mut out = Vec::new();
    for q in [0.3, 0.5, 2.0] {
        for y23 in [C64::new(0.3, 0.0), C64::new(0.5, 0.2), C64::new(-0.7, 0.1)] {
            let r = verify_ybe(c(q), y23, 32, true).map_err(err)?;
            out.push(Check::below(format!("YBE (q={q}, y23={y23})"), r.residual, 1e-10));
        }
    }
    Ok(out)
}

fn inverse_symmetry() -> Checks {
    let mut out = Vec::new();
    for q in [0.5, 2.0, 0.3] {
        let r = verify_inverse_symmetry(c(q), 32).map_err(err)?;
        out.push(Check::below(format!("R(q)R(1/q) - 1 (q={q})"), r.residual, 1e-10));
    }
    Ok(out)
}

fn twistor_factors(base: &ModelParams) -> Checks {
    let mut out = Vec::new();
    let (z1, z2) = (C64::new(0.3, 0.1), c(1.0));
    for k in [0.0, 1.0] {
        let p = ModelParams { k: c(k), u: c(0.3), ..base.clone() };
        for m in 1..=3 {
            let r = solve_twistor_recursion(&p, m, 4, z1, z2).map_err(err)?;
            let cf = closed_form_factor(&p, m, z1, z2, 4 / m).map_err(err)?;
            let d = (0..=4 / m).map(|n| max_abs(&(r.lambda_series.coeff(n) - cf.lambda_series.coeff(n)))).fold(0.0, f64::max);
            out.push(Check::below(format!("F^{m} recursion - closed (k={k})"), d, 1e-10));
        }
    }
    Ok(out)
}

fn twistor_product(seed: u64) -> Checks {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for i in 0..10 {
        let k = (i % 2) as f64;
        let q = c(rng.random_range(0.3..0.8));
        let eb = polar(&mut rng, 0.05..0.3);
        let p = ModelParams {
            q,
            eps: eb * qpow(q, c(k / 2.0)),
            u: c(rng.random_range(0.0..1.0)),
            k: c(k),
            ..ModelParams::default()
        };
        let (z1, z2) = (polar(&mut rng, 0.5..1.5), polar(&mut rng, 0.5..1.5));
        let r = assemble_product(&p, z1, z2).map_err(err)?;
        out.push(Check::below(format!("product - closed (point {i}, k={k})"), r.residual, 1e-8));
    }
    Ok(out)
}

fn hopf_cocycle(base: &ModelParams) -> Checks {
    let p0 = ModelParams { k: c(0.0), ..base.clone() };
    let p1 = ModelParams { k: c(1.0), ..base.clone() };
    let r0 = verify_cocycle(&p0, 4).map_err(err)?;
    let r1 = verify_cocycle(&p1, 4).map_err(err)?;
    Ok(vec![
        Check::below("cocycle residual (k=0)", r0.residual, 1e-9),
        Check::above("control: level-one factors (k=1)", r1.residual, 1e-4),
    ])
}

/// Parameter points of the elliptic comparison: `(rho, tau, u)`.
pub const ELLIPTIC_POINTS: [((f64, f64), (f64, f64), (f64, f64)); 5] = [
    ((0.0, 0.07), (0.0, 0.6), (0.13, 0.02)),
    ((0.0, 0.05), (0.0, 0.5), (0.21, -0.03)),
    ((0.0, 0.1), (0.0, 0.8), (0.37, 0.05)),
    ((0.01, 0.06), (0.1, 0.7), (0.05, 0.04)),
    ((0.0, 0.08), (0.0, 0.55), (-0.17, 0.01)),
];

fn elliptic_match(base: &ModelParams) -> Checks {
    let (mut th, mut jac, mut kk): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for ((r0, r1), (t0, t1), (u0, u1)) in ELLIPTIC_POINTS {
        let pt = EllipticPoint { rho: C64::new(r0, r1), tau: C64::new(t0, t1), u: C64::new(u0, u1) };
        let r = compare_elliptic(base, &pt, 1e-6).map_err(err)?;
        th = th.max(r.theta_deviation);
        jac = jac.max(r.jacobi_deviation);
        let (big_k, k) = quarter_period_and_modulus(pt.eps()).map_err(err)?;
        kk = kk.max((big_k - elliptic_k_agm(k)).norm() / big_k.norm());
    }
    Ok(vec![
        Check::below("theta-ratio deviation", th, 1e-6),
        Check::below("sn/cn/dn-ratio deviation", jac, 1e-6),
        Check::below("K products vs AGM", kk, 1e-9),
    ])
}

fn qkz_consistency(cfg: &RunConfig) -> Checks {
    let p = ModelParams { order_x: 32, ..cfg.model.clone() };
    let mut out = Vec::new();
    for fl in [Flavor::F, Flavor::G] {
        let sys = build_two_point_system(&p, cfg.weights, fl).map_err(err)?;
        let r = consistency(&sys).map_err(err)?;
        out.push(Check::below(format!("{fl:?}: M2(px)M1(x) - q^A"), r.forward, 1e-10));
        out.push(Check::below(format!("{fl:?}: M1(x/p)M2(x) - q^A"), r.reversed, 1e-10));
        let bs = solve_two_point(&sys).map_err(err)?;
        let t1 = bs.iter().map(|b| b.residual_t1).fold(0.0, f64::max);
        let t2 = bs.iter().map(|b| b.residual_t2).fold(0.0, f64::max);
        out.push(Check::below(format!("{fl:?}: solution, z1 equation"), t1, 1e-9));
        out.push(Check::below(format!("{fl:?}: solution, z2 equation"), t2, 1e-9));
    }
    let t = check_three_point(&p, cfg.weights, C64::new(0.3, 0.1), 2).map_err(err)?;
    out.push(Check::below("three-point f composite", t.f_composite, 1e-10));
    out.push(Check::below("three-point g composite", t.g_composite, 1e-10));
    out.push(Check::below("g composite, universal R_1,23", t.g_composite_universal, 1e-10));
    out.push(Check::below("R_1,23 = R12 R13", t.quasi_triangularity, 1e-10));
    out.push(Check::above("control: R_1,23 vs R13 R12", t.quasi_triangularity_control, 1e-4));
    Ok(out)
}

fn twist_covariance(cfg: &RunConfig) -> Checks {
    let p = ModelParams { eps: c(0.2), ..cfg.model.clone() };
    let r = twist_two_point(&p, cfg.weights, TwistMode::Hopf, c(0.1)).map_err(err)?;
    Ok(vec![
        Check::below("conjugated equation", r.correct_residual, 1e-8),
        Check::above("naive equation (eps = 0.2)", r.naive_residual, 1e-3),
    ])
}

fn kz_flatness(cfg: &RunConfig) -> Checks {
    let kappa = cfg.model.k + cfg.model.g;
    let kz = classical_kz_system(kappa, 2);
    let (mut curv, mut comm, mut pol): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for i in 0..5 {
        for j in 0..5 {
            let z1 = C64::from_polar(0.4 + 0.3 * i as f64, 0.7 * i as f64 + 0.1);
            let z2 = C64::from_polar(0.5 + 0.25 * j as f64, -1.1 * j as f64 + 2.0);
            let (a, b) = kz.flatness(z1, z2);
            curv = curv.max(a);
            comm = comm.max(b);
            pol = pol.max(polarized_flatness(cfg.weights, z2 / z1));
        }
    }
    let fr = frobenius(&kz, 32).map_err(err)?;
    let res = fr.iter().map(|b| b.residual).fold(0.0, f64::max);
    Ok(vec![
        Check::below("d1 A2 - d2 A1", curv, 1e-12),
        Check::below("[A1, A2]", comm, 1e-12),
        Check::below("[A1 + A2, r] (polarized)", pol, 1e-12),
        Check::below("Frobenius series", res, 1e-10),
    ])
}

/// Runs criterion `id` (1-based).
pub fn run_one(id: usize, cfg: &RunConfig) -> Criterion {
    let t0 = Instant::now();
    let base = &cfg.model;
    let res = match id {
        1 => normalizer_inversion(cfg.seed),
        2 => r_uniqueness(),
        3 => yang_baxter(),
        4 => inverse_symmetry(),
        5 => twistor_factors(base),
        6 => twistor_product(cfg.seed),
        7 => hopf_cocycle(base),
        8 => elliptic_match(base),
        9 => qkz_consistency(cfg),
        10 => twist_covariance(cfg),
        11 => kz_flatness(cfg),
        _ => Err(format!("no criterion {id}")),
    };
    let identity = IDENTITIES.get(id.wrapping_sub(1)).copied().unwrap_or("unknown");
    let seconds = t0.elapsed().as_secs_f64();
    match res {
        Ok(checks) => Criterion { id, identity, pass: checks.iter().all(|c| c.pass), checks, error: None, seconds },
        Err(e) => Criterion { id, identity, pass: false, checks: Vec::new(), error: Some(e), seconds },
    }
}

pub fn run_all(cfg: &RunConfig) -> Vec<Criterion> {
    (1..=IDENTITIES.len()).map(|id| run_one(id, cfg)).collect()
}

/// Looks up a criterion by identity name.
pub fn id_of(identity: &str) -> Option<usize> {
    IDENTITIES.iter().position(|&n| n == identity).map(|i| i + 1)
}

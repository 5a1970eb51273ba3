//! The scalar building blocks: the R-matrix normalizer, theta functions and
//! Jacobi elliptic functions.

use qtwist::qspecial::{
    elliptic_k_agm, jacobi_sn_cn_dn, normalizer_a, normalizer_a_product, normalizer_a_series, quarter_period_and_modulus, theta,
    ThetaKind, ThetaParams,
};
use qtwist::C64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q = C64::new(0.5, 0.0);
    let x = C64::new(0.3, 0.1);
    let a = normalizer_a(q, x)?;
    println!("A(q,x)          = {a:.15}");
    println!("product form    = {:.15}", normalizer_a_product(q, x)?);
    println!("A(q,x)A(1/q,x)  = {:.15}", a * normalizer_a(q.inv(), x)?);
    let s = normalizer_a_series(q, 4)?;
    println!("series in x     = {:?}", (0..=4).map(|n| s.coeff(n).re).collect::<Vec<_>>());

    let tau = C64::new(0.0, 0.6);
    for kind in [ThetaKind::One, ThetaKind::Two, ThetaKind::Three, ThetaKind::Four] {
        let v = theta(ThetaParams { z: C64::new(0.2, 0.05), tau, kind })?;
        println!("{kind:?}: {v:.12}");
    }

    let nome = C64::new(0.2, 0.0);
    let (big_k, k) = quarter_period_and_modulus(nome)?;
    println!("K = {big_k:.15} (AGM: {:.15}), k = {k:.15}", elliptic_k_agm(k));
    let (sn, cn, dn) = jacobi_sn_cn_dn(C64::new(0.7, 0.0), nome)?;
    println!("sn, cn, dn      = {sn:.12}, {cn:.12}, {dn:.12}");
    println!("sn^2 + cn^2 - 1 = {:.1e}", (sn * sn + cn * cn - 1.0).norm());
    Ok(())
}

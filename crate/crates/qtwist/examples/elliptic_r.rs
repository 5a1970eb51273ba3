//! Twisting the trigonometric R-matrix gives Baxter's eight-vertex
//! R-matrix; its weights are ratios of theta functions.

use qtwist::twistor::{compare_elliptic, eight_vertex_leak, twisted_r, EllipticPoint, ModelParams};
use qtwist::C64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = ModelParams::default();
    let r = twisted_r(&p, C64::new(0.4, 0.1), C64::new(1.0, 0.0))?;
    println!("twisted R (eight-vertex leak {:.1e}):\n{:.6}", eight_vertex_leak(&r), r.map(|z| z.norm()));

    let pt = EllipticPoint { rho: C64::new(0.0, 0.07), tau: C64::new(0.0, 0.6), u: C64::new(0.13, 0.02) };
    println!("q = {:.6}, eps = {:.6}", pt.q(), pt.eps());
    let rep = compare_elliptic(&p, &pt, 1e-6)?;
    println!("theta ratios: {:.2e}, sn/cn/dn: {:.2e}, scalar: {:.2e}", rep.theta_deviation, rep.jacobi_deviation, rep.scalar_deviation);
    let mut table = rep.table.clone();
    table.sort_by(|a, b| a.1.total_cmp(&b.1));
    println!("closest theta assignments:");
    for (name, dev) in table.iter().take(3) {
        println!("  {name:<28} {dev:.2e}");
    }
    Ok(())
}

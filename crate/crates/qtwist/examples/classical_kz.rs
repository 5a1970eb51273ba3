//! The classical KZ connection on three spin modules: flatness and
//! Frobenius series at the regular singular point.

use qtwist::qkz::{classical_kz_system, frobenius, polarized_flatness, WeightConfig};
use qtwist::C64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kz = classical_kz_system(C64::new(2.0, 0.0), 2);
    let (z1, z2) = (C64::new(0.7, 0.2), C64::new(-0.3, 1.1));
    let (curv, comm) = kz.flatness(z1, z2);
    println!("curvature {curv:.1e}, commutator {comm:.1e}");
    println!("polarized form: {:.1e}", polarized_flatness(WeightConfig::default(), z2 / z1));
    for b in frobenius(&kz, 24)? {
        println!("sigma = {:>6.3}  s = {:>6.3}  residual {:.1e}", b.sigma.re, b.s.re, b.residual);
    }
    Ok(())
}

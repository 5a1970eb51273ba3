//! Series solutions of the two-point q-KZ system, one branch per weight
//! sector and leading exponent.

use qtwist::qkz::{build_two_point_system, consistency, solve_two_point, Flavor, WeightConfig};
use qtwist::twistor::ModelParams;
use qtwist::C64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = ModelParams::default();
    for flavor in [Flavor::F, Flavor::G] {
        let sys = build_two_point_system(&p, WeightConfig::default(), flavor)?;
        let c = consistency(&sys)?;
        println!("{flavor:?}: p = {:.4}, shift consistency {:.1e} / {:.1e}", sys.p, c.forward, c.reversed);
        for b in solve_two_point(&sys)? {
            let x = C64::new(0.2, 0.05);
            println!(
                "  weight {:>2}  s = {:.4}  residuals {:.1e} {:.1e}  value at x: {:.6}",
                b.weight,
                b.s,
                b.residual_t1,
                b.residual_t2,
                b.eval(x).iter().map(|z| z.norm()).sum::<f64>()
            );
        }
    }
    Ok(())
}

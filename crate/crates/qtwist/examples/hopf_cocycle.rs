//! The cocycle condition `F_{12,3} F_{12} = F_{1,23} F_{23}` for the
//! universal twistor, which holds only at level zero.

use qtwist::twistor::{verify_cocycle, ModelParams};
use qtwist::C64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for k in [0.0, 1.0] {
        let p = ModelParams { k: C64::new(k, 0.0), ..ModelParams::default() };
        let r = verify_cocycle(&p, 4)?;
        println!("k = {k}: residual {:.2e}, per order {:?}", r.residual, r.per_order.iter().map(|v| format!("{v:.1e}")).collect::<Vec<_>>());
    }
    Ok(())
}

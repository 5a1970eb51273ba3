//! The infinite product of twistor factors against its closed form.

use qtwist::twistor::{assemble_product, cutoff_m, ModelParams};
use qtwist::C64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for k in [0.0, 1.0] {
        let p = ModelParams { k: C64::new(k, 0.0), eps: C64::new(0.1, 0.05), u: C64::new(0.3, 0.0), ..ModelParams::default() };
        let r = assemble_product(&p, C64::new(0.4, 0.2), C64::new(0.9, -0.1))?;
        let c = &r.closed;
        println!("k = {k}: {} factors (cutoff {}), residual {:.2e}", r.factors, cutoff_m(&p)?, r.residual);
        println!("   a = {:.10}, d = {:.10}, b = {:.10}, c = {:.10}", c.a, c.d, c.b, c.c);
    }
    let far = ModelParams { eps: C64::new(0.99, 0.0), q: C64::new(0.3, 0.0), k: C64::new(1.0, 0.0), ..ModelParams::default() };
    println!("eps_bar outside the unit disc: {}", assemble_product(&far, C64::new(0.4, 0.0), C64::new(1.0, 0.0)).unwrap_err());
    Ok(())
}

//! Three-point consistency of the q-KZ shift operators, including the
//! coproduct-level R-matrix built from universal words.

use qtwist::qkz::{check_three_point, WeightConfig};
use qtwist::twistor::ModelParams;
use qtwist::C64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r = check_three_point(&ModelParams::default(), WeightConfig::default(), C64::new(0.3, 0.1), 2)?;
    println!("f-type composite           {:.2e}", r.f_composite);
    println!("g-type composite           {:.2e}", r.g_composite);
    println!("g-type, universal R_1,23   {:.2e}", r.g_composite_universal);
    println!("R_1,23 vs R12 R13          {:.2e}", r.quasi_triangularity);
    println!("R_1,23 vs R13 R12          {:.2e}  (should not vanish)", r.quasi_triangularity_control);
    Ok(())
}

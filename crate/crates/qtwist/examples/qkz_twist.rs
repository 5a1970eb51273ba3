//! Twisting a q-KZ solution by the two-point twistor: only the conjugated
//! equation is satisfied.

use qtwist::qkz::{twist_two_point, TwistMode, WeightConfig};
use qtwist::twistor::ModelParams;
use qtwist::C64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let x = C64::new(0.1, 0.0);
    let cases = [
        (TwistMode::Hopf, ModelParams::default(), WeightConfig::default()),
        (TwistMode::QuasiHopf, ModelParams { k: C64::new(1.0, 0.0), ..ModelParams::default() }, WeightConfig { m_source: 0.5, m_sink: 0.0 }),
    ];
    for (mode, p, w) in cases {
        let r = twist_two_point(&p, w, mode, x)?;
        println!(
            "{mode:?}: conjugated {:.2e}, naive {:.2e}, twist moved the solution by {:.1}%",
            r.correct_residual,
            r.naive_residual,
            100.0 * r.twist_size
        );
    }
    Ok(())
}

//! Runs every acceptance criterion. Settings come from `$QTWIST_CONFIG`
//! if set, else the defaults.

use qtwist::config::{Layer, RunConfig};
use qtwist::suite;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = RunConfig::resolve(Layer::default(), None)?;
    let results = suite::run_all(&cfg);
    for c in &results {
        println!("{}", c.line());
    }
    let failed = results.iter().filter(|c| !c.pass).count();
    if failed > 0 {
        return Err(format!("{failed} criteria failed").into());
    }
    Ok(())
}

//! Runs every acceptance criterion at its fixed tolerance and prints one
//! line per criterion. Exits non-zero if any criterion fails.

use qtwist::config::RunConfig;
use qtwist::suite;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cfg = RunConfig::default();
    let results = suite::run_all(&cfg);
    let mut failed = 0;
    for c in &results {
        println!("{}", c.line());
        if !c.pass {
            failed += 1;
            for k in c.checks.iter().filter(|k| !k.pass) {
                println!("       {}: {:.3e} vs {:.0e}", k.name, k.value, k.bound);
            }
        }
    }
    println!("{} of {} criteria pass", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

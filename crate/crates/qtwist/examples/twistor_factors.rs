//! Twistor factors two ways: the closed form, and a solve for the universal
//! element as a combination of root-vector words, evaluated afterwards.

use qtwist::twistor::{closed_form_factor, solve_twistor_recursion, universal_factor, ModelParams};
use qtwist::linalg::max_abs;
use qtwist::C64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = ModelParams { k: C64::new(1.0, 0.0), u: C64::new(0.3, 0.0), ..ModelParams::default() };
    let (z1, z2) = (C64::new(0.3, 0.1), C64::new(1.0, 0.0));
    for m in 1..=3 {
        let order = 4 / m;
        let u = universal_factor(&p, m, order)?;
        let words: usize = u.grades.iter().map(|g| g.coeffs.len()).sum();
        let solved = solve_twistor_recursion(&p, m, 4, z1, z2)?;
        let closed = closed_form_factor(&p, m, z1, z2, order)?;
        let diff = (0..=order)
            .map(|n| max_abs(&(solved.lambda_series.coeff(n) - closed.lambda_series.coeff(n))))
            .fold(0.0, f64::max);
        println!("F^{m}: {words} words through lambda^{order}, Q = ({:.4}, {:.4}), |solved - closed| = {diff:.2e}", closed.cartan_q[0].re, closed.cartan_q[1].re);
    }
    Ok(())
}

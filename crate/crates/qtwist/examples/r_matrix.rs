//! The trigonometric R-matrix as a series in `y = z2/z1`: the closed form,
//! the intertwiner recursion, Yang-Baxter and unitarity.

use qtwist::fps::{mat_weighted_residual, VarTag};
use qtwist::rmatrix::{closed_form_r, closed_form_t, convergence_radius, solve_t_recursion, verify_inverse_symmetry, verify_ybe};
use qtwist::C64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q = C64::new(0.5, 0.0);
    let order = 16;
    let r = closed_form_r(q, VarTag::Z2OverZ1, order, true)?;
    println!("q^phi diagonal: {:?}", (0..4).map(|i| r.q_phi[(i, i)].re).collect::<Vec<_>>());
    println!("T(0) =\n{:.4}", r.t.coeff(0).map(|z| z.re));

    let rec = solve_t_recursion(q, order)?;
    let rho = convergence_radius(q);
    println!("recursion vs closed form: {:.2e} (weight rho = {rho})", mat_weighted_residual(&rec, &closed_form_t(q, order), rho));

    for y23 in [C64::new(0.3, 0.0), C64::new(-0.5, 0.2)] {
        let y = verify_ybe(q, y23, order, true)?;
        println!("YBE at y23 = {y23}: {:.2e}", y.residual);
    }
    let inv = verify_inverse_symmetry(q, order)?;
    println!("R(q) R(1/q) - 1: {:.2e}", inv.residual);
    Ok(())
}

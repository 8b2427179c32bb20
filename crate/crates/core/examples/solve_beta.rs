//! One solve of `det(g + phi_{j kbar}) = det g exp(beta (phi - v))` and its Newton log.

use std::f64::consts::PI;

use psh_envelope::newton::{solve_beta, NewtonOptions};
use psh_envelope::torus::{Grid, TorusGeometry};

fn main() -> psh_envelope::Result<()> {
    let grid = Grid::new(TorusGeometry::flat(1)?, 64)?;
    let v = grid.sample(|x| 0.3 * (2.0 * PI * x[0]).cos())?;
    let sol = solve_beta(&v, 64.0, None, &NewtonOptions::default())?;
    for r in &sol.log {
        println!(
            "iter {:>2}: residual {:.3e}, step {:.3}, margin {:+.3e}, krylov {}",
            r.iteration, r.residual, r.step, r.positivity_margin, r.krylov_iterations
        );
    }
    println!(
        "sup |u_beta| = {:.4e}, box [{:?}, {:.4e}]",
        sol.u_beta.sup_norm(),
        sol.bounds.lower,
        sol.bounds.upper
    );
    Ok(())
}

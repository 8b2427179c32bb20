//! Complex dimension two: a sweep with no oracle, measured against its last entry.

use std::f64::consts::PI;

use psh_envelope::newton::{continuation_sweep, doubling_schedule, NewtonOptions};
use psh_envelope::torus::{Grid, TorusGeometry};
use psh_envelope::verify::{rate_fit, RateReference};

fn main() -> psh_envelope::Result<()> {
    let grid = Grid::new(TorusGeometry::flat(2)?, 8)?;
    let v = grid.sample(|x| 0.3 * ((2.0 * PI * x[0]).cos() + (2.0 * PI * x[2]).cos()))?;
    let opts = NewtonOptions { tol: 1e-8, ..NewtonOptions::default() };
    let sweep = continuation_sweep(&v, &doubling_schedule(16.0, 512.0), &opts)?;
    for s in &sweep.solutions {
        println!(
            "beta {:>4}: {:>2} Newton steps, residual {:.2e}, margin {:+.2e}",
            s.beta, s.newton_iters, s.residual_sup, s.positivity_margin
        );
    }
    let fit = rate_fit(&sweep, RateReference::LastEntry)?;
    println!("successive distances {:?}", sweep.successive_distances);
    println!("c_beta growth {:.3}", fit.growth);
    Ok(())
}

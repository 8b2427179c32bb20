//! Continuation in beta with warm starts, archived to a directory with checksums.

use std::f64::consts::PI;

use psh_envelope::newton::{continuation_sweep, doubling_schedule, read_sweep_dir, write_sweep_dir, NewtonOptions};
use psh_envelope::torus::{Grid, TorusGeometry};

fn main() -> psh_envelope::Result<()> {
    let grid = Grid::new(TorusGeometry::flat(1)?, 64)?;
    let v = grid.sample(|x| 0.3 * (2.0 * PI * x[0]).cos())?;
    let sweep = continuation_sweep(&v, &doubling_schedule(16.0, 4096.0), &NewtonOptions::default())?;
    for (s, d) in sweep.solutions.iter().skip(1).zip(&sweep.successive_distances) {
        println!("beta {:>5}: {:>2} Newton steps, sup |u_beta - u_beta/2| = {d:.3e}", s.beta, s.newton_iters);
    }
    let dir = std::env::temp_dir().join("pshenv-sweep-example");
    write_sweep_dir(&sweep, &dir)?;
    let back = read_sweep_dir(&dir)?;
    println!("archived {} solutions in {}", back.solutions.len(), dir.display());
    Ok(())
}

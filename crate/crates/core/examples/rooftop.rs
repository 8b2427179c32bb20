//! Rooftop envelope of `min(0.3 cos 2 pi x, 0.3 cos 2 pi y)` by both paths.

use std::f64::consts::PI;

use psh_envelope::envelope::{rooftop, EnvelopeOptions, RooftopPath};
use psh_envelope::newton::doubling_schedule;
use psh_envelope::torus::{Grid, TorusGeometry};

fn main() -> psh_envelope::Result<()> {
    let grid = Grid::new(TorusGeometry::flat(1)?, 64)?;
    let v = grid.sample(|x| 0.3 * (2.0 * PI * x[0]).cos())?;
    let w = grid.sample(|x| 0.3 * (2.0 * PI * x[1]).cos())?;
    let opts = EnvelopeOptions {
        schedule: doubling_schedule(16.0, 4096.0),
        kappa: 0.816,
        ..EnvelopeOptions::default()
    };
    let psor = rooftop(&[v.clone(), w.clone()], RooftopPath::Psor, None, &opts)?;
    let beta = rooftop(&[v, w], RooftopPath::BetaLimit, None, &opts)?;
    println!("psor path: {} contact nodes, min {:.4}", psor.contact_count(), psor.envelope.min());
    println!(
        "beta path (eps = {:?}): {} contact nodes, sup distance to psor {:.3e}",
        beta.provenance.epsilon,
        beta.contact_count(),
        beta.envelope.sup_distance(&psor.envelope)?
    );
    Ok(())
}

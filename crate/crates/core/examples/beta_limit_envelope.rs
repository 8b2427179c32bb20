//! Envelope as the beta limit, with the contact constant calibrated against the oracle.

use std::f64::consts::PI;

use psh_envelope::envelope::{envelope_beta_limit, envelope_psor, PsorOptions};
use psh_envelope::newton::{continuation_sweep, doubling_schedule, NewtonOptions};
use psh_envelope::torus::{Grid, TorusGeometry};
use psh_envelope::verify::{rate_fit, RateReference};

fn main() -> psh_envelope::Result<()> {
    let grid = Grid::new(TorusGeometry::flat(1)?, 128)?;
    let v = grid.sample(|x| 0.3 * (2.0 * PI * x[0]).cos())?;
    let sweep = continuation_sweep(&v, &doubling_schedule(16.0, 4096.0), &NewtonOptions::default())?;
    let oracle = envelope_psor(&v, &PsorOptions::default())?;

    let fit = rate_fit(&sweep, RateReference::Envelope(&oracle))?;
    for (b, c) in fit.betas.iter().zip(&fit.constants) {
        println!("beta {b:>5}: beta e_beta / log beta = {c:.4}");
    }
    let kappa = fit.calibrated_kappa();
    let env = envelope_beta_limit(&sweep, kappa)?;
    println!(
        "kappa {kappa:.3}: sup |P_beta - P_psor| = {:.3e}, contact nodes {} vs {}",
        env.envelope.sup_distance(&oracle.envelope)?,
        env.contact_count(),
        oracle.contact_count()
    );
    println!("{}", env.contact_policy.describe());
    Ok(())
}

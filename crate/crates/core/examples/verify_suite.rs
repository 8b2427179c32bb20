//! The full check suite on a small reference case, written as JSON lines and CSV.

use std::f64::consts::PI;
use std::io::stdout;

use psh_envelope::envelope::{envelope_psor, PsorOptions};
use psh_envelope::newton::{continuation_sweep, doubling_schedule, NewtonOptions};
use psh_envelope::torus::{Grid, TorusGeometry};
use psh_envelope::verify::{run_suite, write_rate_csv, SuiteInputs, SuiteOptions};

fn main() -> psh_envelope::Result<()> {
    let grid = Grid::new(TorusGeometry::flat(1)?, 64)?;
    let v = grid.sample(|x| 0.3 * (2.0 * PI * x[0]).cos())?;
    let sweep = continuation_sweep(&v, &doubling_schedule(16.0, 4096.0), &NewtonOptions::default())?;
    let oracle = envelope_psor(&v, &PsorOptions::default())?;
    let opts = SuiteOptions { plateau_beta: Some(512.0), ..SuiteOptions::default() };
    let outcome = run_suite(&SuiteInputs { sweep: &sweep, oracle: Some(&oracle), envelope: &oracle }, &opts)?;
    outcome.report.write_jsonl(stdout())?;
    write_rate_csv(&outcome.rows, stdout())?;
    println!("all passed: {}", outcome.report.all_passed());
    Ok(())
}

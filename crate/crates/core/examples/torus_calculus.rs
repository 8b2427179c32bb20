//! Grids, fields and spectral calculus on a flat torus with a non-diagonal metric.

use std::f64::consts::PI;

use num_complex::Complex64;
use psh_envelope::envelope::psh_margin;
use psh_envelope::torus::{complex_hessian, integrate, mollify, Grid, TorusGeometry};

fn main() -> psh_envelope::Result<()> {
    let g = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.2, 0.1),
        Complex64::new(0.2, -0.1),
        Complex64::new(1.5, 0.0),
    ];
    let geometry = TorusGeometry::new(2, &g)?;
    let grid = Grid::new(geometry, 16)?;
    println!("grid: {grid}, volume {:.4}", grid.geometry().volume());

    // u = cos(2 pi x_1): u_{1 1bar} = (1/4) Laplacian_{x1,y1} u = -pi^2 cos(2 pi x_1).
    let u = grid.sample(|x| (2.0 * PI * x[0]).cos())?;
    let h = complex_hessian(&u);
    let node = 0;
    println!("u_(1 1bar) at the origin: {:.12} (exact {:.12})", h.at(node).get(0, 0).re, -PI * PI);
    println!("integral of u: {:.3e}", integrate(&u));

    // A small multiple is omega-psh; a large one is not.
    for a in [0.01, 0.2] {
        println!("psh margin of {a} u: {:.4}", psh_margin(&u.scale(a)));
    }

    let smooth = mollify(&u, 0.05)?;
    println!("mollified amplitude: {:.6} (exp(-2 pi^2 eps^2) = {:.6})", smooth.max(), (-2.0 * PI * PI * 0.0025f64).exp());
    Ok(())
}

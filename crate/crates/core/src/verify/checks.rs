use std::f64::consts::PI;

use nalgebra::SymmetricEigen;

use crate::envelope::EnvelopeResult;
use crate::error::{Error, Result};
use crate::torus::{complex_hessian, integrate, integrate_masked, Grid, GridField, RealHessian};

/// Width of the free-boundary collar, in grid cells.
pub const COLLAR_CELLS: usize = 2;

/// Nodes within `width` cells (max norm over axes) of a node with the opposite contact status.
pub fn collar_mask(grid: &Grid, contact: &[bool], width: usize) -> Vec<bool> {
    let near_off = dilate(grid, &contact.iter().map(|c| !c).collect::<Vec<_>>(), width);
    let near_on = dilate(grid, contact, width);
    contact
        .iter()
        .zip(near_off.iter().zip(&near_on))
        .map(|(&c, (&off, &on))| if c { off } else { on })
        .collect()
}

/// Box dilation, one axis at a time.
fn dilate(grid: &Grid, set: &[bool], width: usize) -> Vec<bool> {
    let mut cur = set.to_vec();
    for axis in 0..grid.real_dim() {
        let prev = cur.clone();
        for (i, slot) in cur.iter_mut().enumerate() {
            if *slot {
                continue;
            }
            *slot = (1..=width as isize)
                .any(|s| prev[grid.shift(i, axis, s)] || prev[grid.shift(i, axis, -s)]);
        }
    }
    cur
}

/// `det(g + i ddbar v) / det g`, the density of `theta^n` against `omega^n` (spectral).
pub fn theta_density(v: &GridField) -> GridField {
    GridField::new(v.grid().clone(), complex_hessian(v).relative_det_shifted())
        .expect("finite for a finite field")
}

/// Quadrature weights for the contact set of the multilinear interpolant of `u_theta`.
///
/// That set is the union of grid cells whose corners are all contact nodes. Each such cell
/// adds `1 / 2^(2n)` to every one of its corners (cellwise trapezoid rule), so interior
/// contact nodes get weight 1 and nodes on the discrete free boundary get less.
pub fn contact_cell_weights(grid: &Grid, contact: &[bool]) -> Vec<f64> {
    let d = grid.real_dim();
    let corners = 1usize << d;
    let share = 1.0 / corners as f64;
    let mut w = vec![0.0; grid.len()];
    let mut cell = Vec::with_capacity(corners);
    for base in 0..grid.len() {
        cell.clear();
        cell.push(base);
        for axis in 0..d {
            for k in 0..cell.len() {
                cell.push(grid.shift(cell[k], axis, 1));
            }
        }
        if cell.iter().all(|&c| contact[c]) {
            for &c in &cell {
                w[c] += share;
            }
        }
    }
    w
}

/// `|int_contact theta^n - int omega^n| / int omega^n`, the contact set measured by
/// [`contact_cell_weights`].
pub fn ma_mass_check(env: &EnvelopeResult) -> Result<f64> {
    if env.contact_count() == 0 {
        return Err(Error::EmptyContact);
    }
    let grid = env.obstacle.grid();
    let theta = theta_density(&env.obstacle);
    let weights = contact_cell_weights(grid, &env.contact_mask);
    let vol = grid.geometry().volume();
    let sum: f64 = theta.values().iter().zip(&weights).map(|(t, w)| t * w).sum();
    let mass = sum / grid.len() as f64 * vol;
    Ok((mass - vol).abs() / vol)
}

/// Fraction of the envelope's Monge-Ampere mass found off the contact set, outside the collar.
pub fn ma_concentration_check(env: &EnvelopeResult) -> Result<f64> {
    let grid = env.obstacle.grid();
    let collar = collar_mask(grid, &env.contact_mask, COLLAR_CELLS);
    let outside: Vec<bool> = env
        .contact_mask
        .iter()
        .zip(&collar)
        .map(|(&c, &k)| !c && !k)
        .collect();
    let abs = env.ma_density.map(f64::abs);
    let off = integrate_masked(&abs, &outside)?;
    let total = integrate(&env.ma_density);
    if !(total > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "envelope has nonpositive Monge-Ampere mass {total:.3e}"
        )));
    }
    Ok(off / total)
}

/// `sup |D^2 u_theta|` (spectral norm, central differences) over contact nodes outside the collar.
pub fn contact_hessian_check(env: &EnvelopeResult) -> Result<f64> {
    let grid = env.obstacle.grid();
    let collar = collar_mask(grid, &env.contact_mask, COLLAR_CELLS);
    let hess = RealHessian::central_difference(&env.u_theta);
    let mut worst = 0.0_f64;
    for i in 0..grid.len() {
        if env.contact_mask[i] && !collar[i] {
            let eig = SymmetricEigen::new(hess.matrix_at(i)).eigenvalues;
            worst = worst.max(eig.amax());
        }
    }
    Ok(worst)
}

/// Grid-order bound `10 (2 pi)^4 |v|_inf h^2` for [`contact_hessian_check`].
pub fn contact_hessian_tolerance(v: &GridField) -> f64 {
    let h = v.grid().spacing();
    10.0 * (2.0 * PI).powi(4) * v.sup_norm() * h * h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::{envelope_psor, PsorOptions};
    use crate::torus::TorusGeometry;

    #[test]
    fn collar_of_a_half_plane() {
        let g = Grid::new(TorusGeometry::flat(1).unwrap(), 16).unwrap();
        let mask: Vec<bool> = (0..g.len()).map(|i| g.axis_index(i, 0) < 8).collect();
        let collar = collar_mask(&g, &mask, 2);
        for i in 0..g.len() {
            let x = g.axis_index(i, 0);
            // Interfaces sit between 7|8 and 15|0.
            let expect = matches!(x, 6..=9 | 14 | 15 | 0 | 1);
            assert_eq!(collar[i], expect, "x = {x}");
        }
    }

    #[test]
    fn cell_weights_of_a_strip() {
        let g = Grid::new(TorusGeometry::flat(1).unwrap(), 8).unwrap();
        let mask: Vec<bool> = (0..g.len()).map(|i| (2..=5).contains(&g.axis_index(i, 0))).collect();
        let w = contact_cell_weights(&g, &mask);
        for i in 0..g.len() {
            let expect = match g.axis_index(i, 0) {
                2 | 5 => 0.5,
                3 | 4 => 1.0,
                _ => 0.0,
            };
            assert_eq!(w[i], expect);
        }
        let full = contact_cell_weights(&g, &vec![true; g.len()]);
        assert!(full.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn constant_and_subcritical_obstacles() {
        let g = Grid::new(TorusGeometry::flat(1).unwrap(), 32).unwrap();
        for v in [g.constant(0.4), g.sample(|x| 0.05 * (2.0 * PI * x[0]).cos()).unwrap()] {
            let env = envelope_psor(&v, &PsorOptions::default()).unwrap();
            assert!(ma_mass_check(&env).unwrap() <= 1e-10);
            assert_eq!(ma_concentration_check(&env).unwrap(), 0.0);
            assert!(contact_hessian_check(&env).unwrap() <= 1e-8);
        }
    }
}

//! Obstacle oracle for complex dimension one.
//!
//! With `n = 1` the psh condition `g + u_{z zbar} >= 0` is linear, so the envelope solves
//! the complementarity problem
//!
//! ```text
//! u <= v,   g + (1/4) Lap u >= 0,   (v - u) (g + (1/4) Lap u) = 0
//! ```
//!
//! discretized with the five-point Laplacian and solved by projected successive
//! over-relaxation in lexicographic node order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::GridField;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct PsorOptions {
    /// Bound on the natural residual `|min(v - u, h^2 (g + L u))|` at every node.
    pub tol: f64,
    pub omega: f64,
    pub max_sweeps: usize,
}

impl Default for PsorOptions {
    fn default() -> Self {
        PsorOptions {
            tol: 1e-11,
            omega: 1.8,
            max_sweeps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PsorSolution {
    pub u: GridField,
    /// Nodes pinned to the obstacle by the projection in the final sweep.
    pub active: Vec<bool>,
    pub sweeps: usize,
    pub residual: f64,
    /// `max (v - u)(g + L u)` at termination.
    pub complementarity: f64,
    /// `max (u - v)^+` at termination.
    pub obstacle_violation: f64,
}

/// Solve the complementarity problem for the obstacle `v` starting from `u = v`.
pub fn psor_solve(v: &GridField, opts: &PsorOptions) -> Result<PsorSolution> {
    let grid = v.grid();
    if grid.complex_dim() != 1 {
        return Err(Error::Unsupported(
            "the complementarity oracle needs complex dimension 1; for n = 2 the psh cone is not linear"
                .into(),
        ));
    }
    if !(opts.omega > 0.0 && opts.omega < 2.0) {
        return Err(Error::InvalidArgument(format!(
            "relaxation parameter must lie in (0, 2), got {}",
            opts.omega
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let res = grid.res();
    let h2 = grid.spacing() * grid.spacing();
    let g = grid.geometry().metric().scalar();
    let source = 4.0 * g * h2;
    let obstacle = v.values();
    let mut u = obstacle.to_vec();
    let mut active = vec![false; u.len()];
    let omega = opts.omega;

    let idx = |i: usize, j: usize| i * res + j;
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut max_change = 0.0_f64;
        for i in 0..res {
            let ip = (i + 1) % res;
            let im = (i + res - 1) % res;
            for j in 0..res {
                let jp = (j + 1) % res;
                let jm = (j + res - 1) % res;
                let k = idx(i, j);
                let s = u[idx(ip, j)] + u[idx(im, j)] + u[idx(i, jp)] + u[idx(i, jm)];
                let gs = 0.25 * (s + source);
                let cand = u[k] + omega * (gs - u[k]);
                let next = if cand >= obstacle[k] {
                    active[k] = true;
                    obstacle[k]
                } else {
                    active[k] = false;
                    cand
                };
                max_change = max_change.max((next - u[k]).abs());
                u[k] = next;
            }
        }
        if max_change <= opts.tol || sweeps >= opts.max_sweeps {
            let (residual, complementarity, violation) = residuals(&u, obstacle, res, source);
            if residual <= opts.tol {
                return Ok(PsorSolution {
                    u: GridField::new(grid.clone(), u)?,
                    active,
                    sweeps,
                    residual,
                    complementarity,
                    obstacle_violation: violation,
                });
            }
            if sweeps >= opts.max_sweeps {
                return Err(Error::PsorNonConvergence { sweeps, residual });
            }
        }
    }
}

/// Natural residual, complementarity product and obstacle violation, in units of `u`.
fn residuals(u: &[f64], v: &[f64], res: usize, source: f64) -> (f64, f64, f64) {
    let mut nat = 0.0_f64;
    let mut comp = 0.0_f64;
    let mut viol = 0.0_f64;
    for i in 0..res {
        let ip = (i + 1) % res;
        let im = (i + res - 1) % res;
        for j in 0..res {
            let jp = (j + 1) % res;
            let jm = (j + res - 1) % res;
            let k = i * res + j;
            let s = u[ip * res + j] + u[im * res + j] + u[i * res + jp] + u[i * res + jm];
            // h^2 (g + L u) with L = Lap / 4.
            let dual = 0.25 * (s - 4.0 * u[k] + source);
            let gap = v[k] - u[k];
            nat = nat.max(gap.min(dual).abs());
            comp = comp.max((gap * dual).abs());
            viol = viol.max(-gap);
        }
    }
    (nat, comp, viol.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::{Grid, TorusGeometry};
    use std::f64::consts::PI;

    #[test]
    fn constant_obstacle_is_fixed_in_one_sweep() {
        let g = Grid::new(TorusGeometry::flat(1).unwrap(), 16).unwrap();
        let v = g.constant(0.3);
        let s = psor_solve(&v, &PsorOptions::default()).unwrap();
        assert_eq!(s.sweeps, 1);
        assert_eq!(s.u, v);
        assert!(s.active.iter().all(|&a| a));
    }

    #[test]
    fn rejects_two_dimensional_geometry() {
        let g = Grid::new(TorusGeometry::flat(2).unwrap(), 4).unwrap();
        assert!(matches!(
            psor_solve(&g.constant(0.0), &PsorOptions::default()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn discrete_parabola_in_the_detachment_region() {
        // Away from contact the discrete solution satisfies g + (1/4) Lap_h u = 0 exactly.
        let g = Grid::new(TorusGeometry::flat(1).unwrap(), 32).unwrap();
        let v = g.sample(|x| 0.3 * (2.0 * PI * x[0]).cos()).unwrap();
        let s = psor_solve(&v, &PsorOptions::default()).unwrap();
        let h2 = g.spacing().powi(2);
        let u = s.u.values();
        for k in 0..g.len() {
            if s.active[k] {
                continue;
            }
            let sum: f64 = (0..2)
                .flat_map(|a| [g.shift(k, a, 1), g.shift(k, a, -1)])
                .map(|m| u[m])
                .sum();
            let dual = 1.0 + 0.25 * (sum - 4.0 * u[k]) / h2;
            assert!(dual.abs() * h2 < 1e-10);
        }
    }
}

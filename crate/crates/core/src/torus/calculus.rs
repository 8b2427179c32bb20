//! Pointwise differential quantities of grid fields.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::{Grid, GridField};
use super::hermitian::HermitianField;
use super::spectral::{hessian_pairs, Spectral};
use crate::error::{Error, Result};

/// How second derivatives are taken.
///
/// Smooth iterates use trigonometric collocation. Limits that are only `C^{1,1}` have
/// Hessians that jump across the free boundary, so they are differenced instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Differentiation {
    #[default]
    Spectral,
    CentralDifference,
}

/// Real Hessian components `u_{ab}`, `a <= b`.
#[derive(Debug, Clone)]
pub struct RealHessian {
    grid: Grid,
    comps: Vec<Vec<f64>>,
}

impl RealHessian {
    pub fn spectral(u: &GridField) -> Self {
        let sp = Spectral::new(u.grid());
        RealHessian {
            grid: u.grid().clone(),
            comps: sp.real_hessian(u.values()),
        }
    }

    pub fn central_difference(u: &GridField) -> Self {
        let grid = u.grid();
        let d = grid.real_dim();
        let h2 = grid.spacing() * grid.spacing();
        let v = u.values();
        let comps = hessian_pairs(d)
            .into_iter()
            .map(|(a, b)| {
                (0..grid.len())
                    .map(|i| {
                        if a == b {
                            let p = grid.shift(i, a, 1);
                            let m = grid.shift(i, a, -1);
                            (v[p] - 2.0 * v[i] + v[m]) / h2
                        } else {
                            let pp = grid.shift(grid.shift(i, a, 1), b, 1);
                            let pm = grid.shift(grid.shift(i, a, 1), b, -1);
                            let mp = grid.shift(grid.shift(i, a, -1), b, 1);
                            let mm = grid.shift(grid.shift(i, a, -1), b, -1);
                            (v[pp] - v[pm] - v[mp] + v[mm]) / (4.0 * h2)
                        }
                    })
                    .collect()
            })
            .collect();
        RealHessian {
            grid: grid.clone(),
            comps,
        }
    }

    pub fn compute(u: &GridField, how: Differentiation) -> Self {
        match how {
            Differentiation::Spectral => Self::spectral(u),
            Differentiation::CentralDifference => Self::central_difference(u),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Component `u_{ab}` at every node.
    pub fn component(&self, a: usize, b: usize) -> &[f64] {
        let d = self.grid.real_dim();
        &self.comps[flat_pair(d, a, b)]
    }

    pub fn matrix_at(&self, node: usize) -> DMatrix<f64> {
        let d = self.grid.real_dim();
        DMatrix::from_fn(d, d, |a, b| self.comps[flat_pair(d, a, b)][node])
    }

    /// Complex Hessian assembled from the real second derivatives.
    pub fn to_complex(&self) -> HermitianField {
        let n = self.grid.complex_dim();
        let len = self.grid.len();
        let diag = (0..n)
            .map(|j| {
                let xx = self.component(2 * j, 2 * j);
                let yy = self.component(2 * j + 1, 2 * j + 1);
                (0..len).map(|i| 0.25 * (xx[i] + yy[i])).collect()
            })
            .collect();
        let off = if n == 2 {
            let (x1x2, y1y2) = (self.component(0, 2), self.component(1, 3));
            let (x1y2, y1x2) = (self.component(0, 3), self.component(1, 2));
            (0..len)
                .map(|i| Complex64::new(0.25 * (x1x2[i] + y1y2[i]), 0.25 * (x1y2[i] - y1x2[i])))
                .collect()
        } else {
            Vec::new()
        };
        HermitianField::new(self.grid.clone(), diag, off)
    }

    /// Largest eigenvalue at each node, measured against the Riemannian metric of the torus.
    pub fn lambda1(&self) -> GridField {
        let d = self.grid.real_dim();
        let geom = self.grid.geometry();
        let whitening = if geom.is_identity() {
            None
        } else {
            let chol = geom
                .real_metric()
                .cholesky()
                .expect("metric validated positive definite");
            Some(chol.l().try_inverse().expect("cholesky factor is invertible"))
        };
        let values: Vec<f64> = (0..self.grid.len())
            .into_par_iter()
            .map(|i| {
                if d == 2 && whitening.is_none() {
                    let (p, q, r) = (self.comps[0][i], self.comps[2][i], self.comps[1][i]);
                    let mean = 0.5 * (p + q);
                    let rad = (0.25 * (p - q) * (p - q) + r * r).sqrt();
                    return mean + rad;
                }
                let mut m = self.matrix_at(i);
                if let Some(w) = &whitening {
                    m = w * m * w.transpose();
                }
                if d == 4 {
                    let m4 = Matrix4::from_iterator(m.iter().copied());
                    m4.symmetric_eigenvalues().max()
                } else {
                    m.symmetric_eigenvalues().max()
                }
            })
            .collect();
        GridField::from_parts_unchecked(self.grid.clone(), values)
    }
}

fn flat_pair(d: usize, a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    // Rows 0..a hold d + (d-1) + ... + (d-a+1) entries.
    a * d - a * a.saturating_sub(1) / 2 + (b - a)
}

/// `d^2 u / dz_j dzbar_k` at every node, by trigonometric collocation.
pub fn complex_hessian(u: &GridField) -> HermitianField {
    let grid = u.grid();
    let sp = Spectral::new(grid);
    let c = sp.forward(u.values());
    complex_hessian_from_coeffs(&sp, &c)
}

pub(crate) fn complex_hessian_from_coeffs(sp: &Spectral, c: &[Complex64]) -> HermitianField {
    let grid = sp.grid().clone();
    let zero = Complex64::new(0.0, 0.0);
    match grid.complex_dim() {
        1 => {
            let (h11, _) = sp.apply_pair(c, |i| sp.dzdzbar(i, 0, 0), |_| zero);
            HermitianField::new(grid, vec![h11], Vec::new())
        }
        _ => {
            let (h11, h22) = sp.apply_pair(c, |i| sp.dzdzbar(i, 0, 0), |i| sp.dzdzbar(i, 1, 1));
            let off_c: Vec<Complex64> = c
                .iter()
                .enumerate()
                .map(|(i, &z)| z * sp.dzdzbar(i, 0, 1))
                .collect();
            let off = sp.inverse(off_c);
            HermitianField::new(grid, vec![h11, h22], off)
        }
    }
}

/// Complex Hessian by the selected differentiation rule.
pub fn complex_hessian_with(u: &GridField, how: Differentiation) -> HermitianField {
    match how {
        Differentiation::Spectral => complex_hessian(u),
        Differentiation::CentralDifference => RealHessian::central_difference(u).to_complex(),
    }
}

/// Pointwise largest eigenvalue of the real `2n x 2n` Hessian (spectral).
pub fn real_hessian_lambda1(u: &GridField) -> GridField {
    RealHessian::spectral(u).lambda1()
}

/// `g^{j kbar} d_j u d_kbar u` at every node (spectral gradient).
pub fn gradient_norm_sq(u: &GridField) -> GridField {
    let grid = u.grid();
    let n = grid.complex_dim();
    let sp = Spectral::new(grid);
    let grad = sp.gradient(u.values());
    let ginv = grid.geometry().inverse_metric();
    let values = (0..grid.len())
        .map(|i| {
            let mut xi = [Complex64::new(0.0, 0.0); 2];
            for j in 0..n {
                xi[j] = 0.5 * Complex64::new(grad[2 * j][i], -grad[2 * j + 1][i]);
            }
            ginv.form(&xi[..n]).max(0.0)
        })
        .collect();
    GridField::from_parts_unchecked(grid.clone(), values)
}

/// `int_X f omega^n`: periodic trapezoidal rule over the unit cell times `det g`.
///
/// Summation runs in node order so the result is reproducible bit for bit.
pub fn integrate(density: &GridField) -> f64 {
    let grid = density.grid();
    let sum: f64 = density.values().iter().sum();
    sum / grid.len() as f64 * grid.geometry().volume()
}

/// Integral restricted to nodes where `mask` holds.
pub fn integrate_masked(density: &GridField, mask: &[bool]) -> Result<f64> {
    if mask.len() != density.len() {
        return Err(Error::InvalidArgument("mask length does not match grid".into()));
    }
    let grid = density.grid();
    let sum: f64 = density
        .values()
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(v, _)| v)
        .sum();
    Ok(sum / grid.len() as f64 * grid.geometry().volume())
}

/// Convolution with the periodized Gaussian of standard deviation `eps` per real axis,
/// i.e. the Fourier multiplier `exp(-2 pi^2 eps^2 |k|^2)`.
pub fn mollify(u: &GridField, eps: f64) -> Result<GridField> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!("mollifier width must be >= 0, got {eps}")));
    }
    if eps == 0.0 {
        return Ok(u.clone());
    }
    let sp = Spectral::new(u.grid());
    let s = 2.0 * PI * PI * eps * eps;
    let values = sp.apply_real(u.values(), |i| Complex64::new((-s * sp.wave_norm_sq(i)).exp(), 0.0));
    GridField::new(u.grid().clone(), values)
}

/// Mean distance from the origin of the mollifier, in units of `eps`
/// (the mean of a chi distribution with `2n` degrees of freedom).
pub fn kernel_first_moment(real_dim: usize) -> f64 {
    match real_dim {
        2 => (PI / 2.0).sqrt(),
        4 => 3.0 * (PI / 2.0).sqrt() / 2.0,
        d => {
            // m_{d+2} = m_d (d+1)/d, starting from m_1 or m_2.
            let (mut m, mut k) = if d % 2 == 0 {
                ((PI / 2.0).sqrt(), 2)
            } else {
                ((2.0 / PI).sqrt(), 1)
            };
            while k < d {
                m *= (k + 1) as f64 / k as f64;
                k += 2;
            }
            m
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::TorusGeometry;

    #[test]
    fn pair_layout() {
        for d in [2usize, 4] {
            let pairs = hessian_pairs(d);
            for (k, &(a, b)) in pairs.iter().enumerate() {
                assert_eq!(flat_pair(d, a, b), k, "d={d} a={a} b={b}");
                assert_eq!(flat_pair(d, b, a), k);
            }
        }
    }

    #[test]
    fn integrate_constant_and_mean_zero() {
        let g = Grid::new(TorusGeometry::flat(1).unwrap(), 16).unwrap();
        assert!((integrate(&g.constant(1.0)) - 1.0).abs() < 1e-15);
        let c = g.sample(|x| (2.0 * PI * x[0]).cos()).unwrap();
        assert!(integrate(&c).abs() < 1e-15);
    }
}

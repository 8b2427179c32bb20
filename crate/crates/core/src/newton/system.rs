//! Discrete Monge-Ampere operator `phi -> det(g + phi_{j kbar}) / det g` and its linearization.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::torus::{complex_hessian, Grid, GridField, Herm, Spectral, TorusGeometry};

/// Log-form residual `log det(g + phi_{j kbar}) - log det g - beta (phi - v)`.
///
/// Fails at the first node where `g + phi_{j kbar}` is not positive definite.
pub fn ma_residual(
    phi: &GridField,
    v: &GridField,
    beta: f64,
    geometry: &TorusGeometry,
) -> Result<GridField> {
    phi.grid().ensure_same(v.grid())?;
    if phi.grid().geometry() != geometry {
        return Err(Error::InvalidArgument(
            "geometry does not match the field's grid".into(),
        ));
    }
    let h = complex_hessian(phi);
    let g = geometry.metric();
    let log_dg = g.det().ln();
    let mut out = Vec::with_capacity(phi.len());
    for i in 0..phi.len() {
        let gt = g.add(&h.at(i));
        let lo = gt.min_eigenvalue();
        if !(lo > 0.0) {
            return Err(Error::NotKahler {
                node: i,
                eigenvalue: lo,
            });
        }
        out.push(gt.det().ln() - log_dg - beta * (phi.values()[i] - v.values()[i]));
    }
    GridField::new(phi.grid().clone(), out)
}

/// Density-form residual `D(g + phi_{j kbar}) - exp(beta (phi - v))` minimized by the solver.
///
/// `D` equals `det(g + phi_{j kbar}) / det g` wherever that matrix is positive semidefinite
/// (a penalty elsewhere keeps every zero psh). Agrees with the log form to first order
/// where the density is of order one, and stays representable where `exp(beta (phi - v))`
/// falls below the round-off floor of the Hessian.
pub fn density_residual(phi: &GridField, v: &GridField, beta: f64) -> Result<GridField> {
    phi.grid().ensure_same(v.grid())?;
    let sys = MaSystem::new(v, beta);
    let state = sys.evaluate(phi.values());
    Ok(GridField::from_parts_unchecked(
        phi.grid().clone(),
        state.residual,
    ))
}

/// Density term of the residual as a function of `M = g^{-1/2} g~ g^{-1/2}`, with its gradient.
///
/// With eigenvalues `l1 <= l2` of `M` the value is `l1 l2 = det(g~) / det g` when `l1 >= 0`,
/// `l1` when `l1 < 0 <= l2`, and `l1 + l2` when both are negative. The pieces agree on their
/// common boundaries, the gradient is positive semidefinite everywhere (so the linearization
/// stays degenerate elliptic), and the value is positive only on positive definite `M`. Every
/// zero of `D - E` with `E > 0` is therefore psh; plain `det` would also vanish against `E` on
/// the negative definite branch. For `n = 1` it is just `M`.
pub(crate) fn penalized_density(m: &Herm) -> (f64, Herm) {
    if m.order() == 1 {
        return (m.scalar(), Herm::identity(1));
    }
    let [l1, l2] = m.eigenvalues();
    if l1 >= 0.0 {
        (m.det(), m.adjugate())
    } else if l2 >= 0.0 {
        // Projector onto the l1 eigenspace: (l2 I - M) / (l2 - l1).
        let p = Herm::identity(2).scale(l2).add(&m.scale(-1.0)).scale(1.0 / (l2 - l1));
        (l1, p)
    } else {
        (l1 + l2, Herm::identity(2))
    }
}

/// Linearized state of the operator at one iterate.
#[derive(Debug, Clone)]
pub(crate) struct MaState {
    /// `D(g~) - E`.
    pub residual: Vec<f64>,
    /// `E = exp(beta (phi - v))`.
    pub density: Vec<f64>,
    /// Derivative of the density term with respect to `phi_{j kbar}`, per node; equal to
    /// `adj(g~) / det g` wherever `g~ = g + phi_{j kbar}` is positive semidefinite.
    pub adjugate: Vec<Herm>,
    /// Smallest eigenvalue of `g~` over all nodes.
    pub margin: f64,
    pub margin_node: usize,
    pub residual_sup: f64,
}

/// Precomputed symbols for one `(grid, v, beta)` problem.
pub(crate) struct MaSystem<'a> {
    grid: Grid,
    spectral: Spectral,
    v: &'a GridField,
    beta: f64,
    metric: Herm,
    /// `g^{-1/2}`.
    whiten: Herm,
    /// Symbols of `d_j dbar_k`: (0,0), (1,1), (0,1).
    s00: Vec<f64>,
    s11: Vec<f64>,
    s01: Vec<Complex64>,
}

impl<'a> MaSystem<'a> {
    pub fn new(v: &'a GridField, beta: f64) -> Self {
        let grid = v.grid().clone();
        let spectral = Spectral::new(&grid);
        let n = grid.complex_dim();
        let len = grid.len();
        let s00 = (0..len).map(|i| spectral.dzdzbar(i, 0, 0).re).collect();
        let (s11, s01) = if n == 2 {
            (
                (0..len).map(|i| spectral.dzdzbar(i, 1, 1).re).collect(),
                (0..len).map(|i| spectral.dzdzbar(i, 0, 1)).collect(),
            )
        } else {
            (Vec::new(), Vec::new())
        };
        let metric = grid.geometry().metric();
        MaSystem {
            whiten: metric.inv_sqrt().expect("validated metric is positive definite"),
            metric,
            grid,
            spectral,
            v,
            beta,
            s00,
            s11,
            s01,
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Complex Hessian entries of `values`: diagonal (one or two) and the (0,1) entry.
    fn hessian(&self, values: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<Complex64>) {
        let c = self.spectral.forward(values);
        let i = Complex64::new(0.0, 1.0);
        if self.grid.complex_dim() == 1 {
            let coeffs = c.iter().zip(&self.s00).map(|(z, s)| z * s).collect();
            (self.spectral.inverse_real(coeffs), Vec::new(), Vec::new())
        } else {
            let diag: Vec<Complex64> = c
                .iter()
                .zip(self.s00.iter().zip(&self.s11))
                .map(|(z, (a, b))| z * a + i * z * b)
                .collect();
            let d = self.spectral.inverse(diag);
            let off = c.iter().zip(&self.s01).map(|(z, s)| z * s).collect();
            let o = self.spectral.inverse(off);
            (
                d.iter().map(|z| z.re).collect(),
                d.iter().map(|z| z.im).collect(),
                o,
            )
        }
    }

    pub fn evaluate(&self, phi: &[f64]) -> MaState {
        let (h11, h22, h12) = self.hessian(phi);
        let n = self.grid.complex_dim();
        let v = self.v.values();
        let len = phi.len();
        let mut residual = Vec::with_capacity(len);
        let mut density = Vec::with_capacity(len);
        let mut adjugate = Vec::with_capacity(len);
        let mut margin = f64::INFINITY;
        let mut margin_node = 0;
        let mut sup = 0.0_f64;
        for k in 0..len {
            let h = if n == 1 {
                Herm::from_parts(&[h11[k]], Complex64::new(0.0, 0.0))
            } else {
                Herm::from_parts(&[h11[k], h22[k]], h12[k])
            };
            let gt = self.metric.add(&h);
            let lo = gt.min_eigenvalue();
            if lo < margin {
                margin = lo;
                margin_node = k;
            }
            let (value, grad) = penalized_density(&gt.sandwich(&self.whiten));
            let e = (self.beta * (phi[k] - v[k])).exp();
            let r = value - e;
            sup = sup.max(r.abs());
            residual.push(r);
            density.push(e);
            adjugate.push(grad.sandwich(&self.whiten));
        }
        if residual.iter().any(|r| !r.is_finite()) {
            sup = f64::INFINITY;
        }
        MaState {
            residual,
            density,
            adjugate,
            margin,
            margin_node,
            residual_sup: sup,
        }
    }

    /// `J d = Re tr(adj(g~) d_{j kbar}) / det g - beta E d`.
    pub fn apply_jacobian(&self, state: &MaState, d: &[f64], out: &mut [f64]) {
        let (h11, h22, h12) = self.hessian(d);
        let n = self.grid.complex_dim();
        for k in 0..d.len() {
            let a = &state.adjugate[k];
            let lin = if n == 1 {
                a.scalar() * h11[k]
            } else {
                a.trace_product(&Herm::from_parts(&[h11[k], h22[k]], h12[k]))
            };
            out[k] = lin - self.beta * state.density[k] * d[k];
        }
    }

    /// Right preconditioner `M^{-1} r = P^{-1}(r / s)`.
    ///
    /// `s_k = tr A_k` (floored) equilibrates the rows of the Jacobian, whose coefficients
    /// degenerate where the psh form does; `P` is the constant-coefficient operator built from
    /// the node means of `A_k / s_k` and `beta E_k / s_k`, inverted exactly in Fourier space.
    pub fn flat_preconditioner(&self, state: &MaState) -> FlatInverse<'_> {
        let n = self.grid.complex_dim();
        let len = state.adjugate.len();
        let traces: Vec<f64> = state.adjugate.iter().map(|a| a.trace().max(0.0)).collect();
        let mean_trace = traces.iter().sum::<f64>() / len as f64;
        let floor = (1e-4 * mean_trace).max(1e-300);
        let weights: Vec<f64> = traces.iter().map(|t| t.max(floor)).collect();
        let mut mean = Herm::zeros(n);
        let mut cbar = 0.0;
        for ((a, w), e) in state.adjugate.iter().zip(&weights).zip(&state.density) {
            mean = mean.add(&a.scale(1.0 / w));
            cbar += self.beta * e / w;
        }
        let mean = mean.scale(1.0 / len as f64);
        let cbar = cbar / len as f64;
        // Keep the principal symbol negative definite even if the mean is not.
        let scale = mean.trace().abs().max(1e-12);
        let mean = mean.clamp_eigenvalues(1e-3 * scale);
        let cbar = cbar.max(1e-8 * self.beta.max(1.0));
        let symbol = (0..len)
            .map(|i| {
                let principal = if n == 1 {
                    mean.scalar() * self.s00[i]
                } else {
                    let s = Herm::from_parts(&[self.s00[i], self.s11[i]], self.s01[i]);
                    mean.trace_product(&s)
                };
                1.0 / (principal - cbar)
            })
            .collect();
        let uniform = weights.iter().all(|&w| w == weights[0]);
        FlatInverse {
            spectral: &self.spectral,
            inv_symbol: symbol,
            row_scale: (!uniform).then(|| weights.iter().map(|w| 1.0 / w).collect()),
        }
    }
}

pub(crate) struct FlatInverse<'s> {
    spectral: &'s Spectral,
    inv_symbol: Vec<f64>,
    row_scale: Option<Vec<f64>>,
}

impl FlatInverse<'_> {
    pub fn apply(&self, r: &[f64], out: &mut [f64]) {
        let c = match &self.row_scale {
            Some(w) => {
                let scaled: Vec<f64> = r.iter().zip(w).map(|(x, w)| x * w).collect();
                self.spectral.forward(&scaled)
            }
            None => self.spectral.forward(r),
        };
        let c = c.into_iter().zip(&self.inv_symbol).map(|(z, s)| z * s).collect();
        let x = self.spectral.inverse_real(c);
        out.copy_from_slice(&x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize, res: usize) -> Grid {
        Grid::new(TorusGeometry::flat(n).unwrap(), res).unwrap()
    }

    #[test]
    fn log_residual_examples() {
        let g = grid(1, 16);
        let geom = g.geometry().clone();
        let c = g.constant(0.7);
        let r = ma_residual(&c, &c, 3.0, &geom).unwrap();
        assert_eq!(r.sup_norm(), 0.0);

        let r = ma_residual(&g.constant(0.4), &g.constant(0.0), 1.0, &geom).unwrap();
        assert!(r.values().iter().all(|x| (x + 0.4).abs() < 1e-15));

        let a = 0.05;
        let v = g.sample(|x| a * (2.0 * PI * x[0]).cos()).unwrap();
        let r = ma_residual(&g.constant(0.0), &v, 1.0, &geom).unwrap();
        assert!(r.sub(&v).unwrap().sup_norm() < 1e-15);
    }

    #[test]
    fn log_residual_rejects_non_kahler() {
        let g = grid(1, 16);
        let phi = g.sample(|x| 0.5 * (2.0 * PI * x[0]).cos()).unwrap();
        let err = ma_residual(&phi, &g.constant(0.0), 1.0, g.geometry()).unwrap_err();
        match err {
            Error::NotKahler { eigenvalue, .. } => {
                assert!((eigenvalue - (1.0 - 0.5 * PI * PI)).abs() < 1e-12)
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn jacobian_matches_finite_difference() {
        for n in [1usize, 2] {
            let g = grid(n, 8);
            let v = g
                .sample(|x| 0.05 * (2.0 * PI * x[0]).cos() + 0.03 * (2.0 * PI * (x[1] - x[x.len() - 1])).sin())
                .unwrap();
            let phi = g.sample(|x| 0.02 * (2.0 * PI * (x[0] + x[1])).sin()).unwrap();
            let dir = g.sample(|x| (2.0 * PI * x[x.len() - 1]).cos() + 0.3).unwrap();
            let sys = MaSystem::new(&v, 5.0);
            let st = sys.evaluate(phi.values());
            let mut jd = vec![0.0; g.len()];
            sys.apply_jacobian(&st, dir.values(), &mut jd);
            let eps = 1e-6;
            let plus: Vec<f64> = phi.values().iter().zip(dir.values()).map(|(p, d)| p + eps * d).collect();
            let minus: Vec<f64> = phi.values().iter().zip(dir.values()).map(|(p, d)| p - eps * d).collect();
            let rp = sys.evaluate(&plus).residual;
            let rm = sys.evaluate(&minus).residual;
            for k in 0..g.len() {
                let fd = (rp[k] - rm[k]) / (2.0 * eps);
                assert!((fd - jd[k]).abs() < 1e-6 * (1.0 + fd.abs()), "n={n} node {k}: {fd} vs {}", jd[k]);
            }
        }
    }
}

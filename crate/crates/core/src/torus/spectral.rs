//! Trigonometric collocation on the periodic grid.
//!
//! Transforms run one axis at a time over all lines of that axis. Line order and
//! normalization are fixed, so results are bitwise reproducible.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::{Grid, GridField};

type Plan = Arc<dyn Fft<f64>>;
type PlanCache = Mutex<(FftPlanner<f64>, HashMap<(usize, bool), Plan>)>;

fn plan(len: usize, inverse: bool) -> Plan {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    let (planner, plans) = &mut *guard;
    plans
        .entry((len, inverse))
        .or_insert_with(|| {
            if inverse {
                planner.plan_fft_inverse(len)
            } else {
                planner.plan_fft_forward(len)
            }
        })
        .clone()
}

/// Signed wavenumber of frequency index `j` on `res` points; the Nyquist index maps to `+res/2`.
pub fn wavenumber(j: usize, res: usize) -> i64 {
    if j <= res / 2 {
        j as i64
    } else {
        j as i64 - res as i64
    }
}

/// Spectral calculus bound to one grid.
#[derive(Debug, Clone)]
pub struct Spectral {
    grid: Grid,
}

impl Spectral {
    pub fn new(grid: &Grid) -> Self {
        Spectral { grid: grid.clone() }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let res = self.grid.res();
        let fft = plan(res, inverse);
        let d = self.grid.real_dim();
        let total = data.len();
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let mut lines = vec![Complex64::new(0.0, 0.0); total];
        for axis in 0..d {
            let stride = self.grid.stride(axis);
            if stride == 1 {
                fft.process_with_scratch(data, &mut scratch);
                continue;
            }
            let block = res * stride;
            let mut l = 0;
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    let line = &mut lines[l * res..(l + 1) * res];
                    for (k, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + k * stride];
                    }
                    l += 1;
                }
            }
            fft.process_with_scratch(&mut lines, &mut scratch);
            let mut l = 0;
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    let line = &lines[l * res..(l + 1) * res];
                    for (k, &val) in line.iter().enumerate() {
                        data[base + k * stride] = val;
                    }
                    l += 1;
                }
            }
        }
        if inverse {
            let norm = 1.0 / total as f64;
            for z in data.iter_mut() {
                *z *= norm;
            }
        }
    }

    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.grid.len());
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, false);
        data
    }

    pub fn forward_complex(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut data = values.to_vec();
        self.transform(&mut data, false);
        data
    }

    pub fn inverse(&self, mut coeffs: Vec<Complex64>) -> Vec<Complex64> {
        self.transform(&mut coeffs, true);
        coeffs
    }

    pub fn inverse_real(&self, coeffs: Vec<Complex64>) -> Vec<f64> {
        self.inverse(coeffs).into_iter().map(|z| z.re).collect()
    }

    /// Signed wavenumber of spectral index `idx` along `axis`.
    pub fn wave(&self, idx: usize, axis: usize) -> i64 {
        wavenumber(self.grid.axis_index(idx, axis), self.grid.res())
    }

    fn is_nyquist(&self, idx: usize, axis: usize) -> bool {
        self.grid.axis_index(idx, axis) == self.grid.res() / 2
    }

    /// Symbol of `d/dx_axis`; zero on the Nyquist index so real fields stay real.
    pub fn d1(&self, idx: usize, axis: usize) -> Complex64 {
        if self.is_nyquist(idx, axis) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, 2.0 * PI * self.wave(idx, axis) as f64)
        }
    }

    /// Symbol of `d^2/dx_a dx_b`.
    pub fn d2(&self, idx: usize, a: usize, b: usize) -> Complex64 {
        if a == b {
            let k = 2.0 * PI * self.wave(idx, a) as f64;
            Complex64::new(-k * k, 0.0)
        } else {
            self.d1(idx, a) * self.d1(idx, b)
        }
    }

    /// Symbol of `d^2/dz_j dzbar_k`.
    pub fn dzdzbar(&self, idx: usize, j: usize, k: usize) -> Complex64 {
        let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
        if j == k {
            0.25 * (self.d2(idx, xj, xj) + self.d2(idx, yj, yj))
        } else {
            let i = Complex64::new(0.0, 1.0);
            0.25 * (self.d1(idx, xj) - i * self.d1(idx, yj)) * (self.d1(idx, xk) + i * self.d1(idx, yk))
        }
    }

    /// Apply a Fourier multiplier to a real field, keeping the real part.
    pub fn apply_real(&self, values: &[f64], symbol: impl Fn(usize) -> Complex64) -> Vec<f64> {
        let mut c = self.forward(values);
        for (idx, z) in c.iter_mut().enumerate() {
            *z *= symbol(idx);
        }
        self.inverse_real(c)
    }

    /// Apply two real-output multipliers with one inverse transform (real and imaginary slots).
    pub fn apply_pair(
        &self,
        coeffs: &[Complex64],
        first: impl Fn(usize) -> Complex64,
        second: impl Fn(usize) -> Complex64,
    ) -> (Vec<f64>, Vec<f64>) {
        let i = Complex64::new(0.0, 1.0);
        let c: Vec<Complex64> = coeffs
            .iter()
            .enumerate()
            .map(|(idx, &z)| z * first(idx) + i * z * second(idx))
            .collect();
        let out = self.inverse(c);
        (
            out.iter().map(|z| z.re).collect(),
            out.iter().map(|z| z.im).collect(),
        )
    }

    /// First derivatives along every real axis.
    pub fn gradient(&self, values: &[f64]) -> Vec<Vec<f64>> {
        let c = self.forward(values);
        let d = self.grid.real_dim();
        let mut out = Vec::with_capacity(d);
        let mut axis = 0;
        while axis < d {
            let (a, b) = self.apply_pair(&c, |i| self.d1(i, axis), |i| self.d1(i, axis + 1));
            out.push(a);
            out.push(b);
            axis += 2;
        }
        out
    }

    /// Real Hessian components `u_{ab}` for `a <= b`, in the order of [`hessian_pairs`].
    pub fn real_hessian(&self, values: &[f64]) -> Vec<Vec<f64>> {
        let c = self.forward(values);
        let pairs = hessian_pairs(self.grid.real_dim());
        let mut out = Vec::with_capacity(pairs.len());
        for chunk in pairs.chunks(2) {
            let (a0, b0) = chunk[0];
            if chunk.len() == 2 {
                let (a1, b1) = chunk[1];
                let (p, q) = self.apply_pair(&c, |i| self.d2(i, a0, b0), |i| self.d2(i, a1, b1));
                out.push(p);
                out.push(q);
            } else {
                let (p, _) = self.apply_pair(&c, |i| self.d2(i, a0, b0), |_| Complex64::new(0.0, 0.0));
                out.push(p);
            }
        }
        out
    }

    /// All third derivatives `u_{abc}` for `a <= b <= c`, with their multiplicities.
    pub fn third_derivatives(&self, values: &[f64]) -> Vec<(usize, Vec<f64>)> {
        let c = self.forward(values);
        let d = self.grid.real_dim();
        let mut triples = Vec::new();
        for a in 0..d {
            for b in a..d {
                for e in b..d {
                    triples.push((a, b, e));
                }
            }
        }
        let mut out = Vec::with_capacity(triples.len());
        for (a, b, e) in triples {
            let mult = match (a == b, b == e) {
                (true, true) => 1,
                (true, false) | (false, true) => 3,
                _ => 6,
            };
            let vals = self.apply_real_coeffs(&c, |i| self.d3(i, a, b, e));
            out.push((mult, vals));
        }
        out
    }

    fn d3(&self, idx: usize, a: usize, b: usize, e: usize) -> Complex64 {
        // Odd order: drop Nyquist content on every axis involved.
        if self.is_nyquist(idx, a) || self.is_nyquist(idx, b) || self.is_nyquist(idx, e) {
            return Complex64::new(0.0, 0.0);
        }
        let f = |ax: usize| Complex64::new(0.0, 2.0 * PI * self.wave(idx, ax) as f64);
        f(a) * f(b) * f(e)
    }

    fn apply_real_coeffs(&self, coeffs: &[Complex64], symbol: impl Fn(usize) -> Complex64) -> Vec<f64> {
        let c = coeffs
            .iter()
            .enumerate()
            .map(|(idx, &z)| z * symbol(idx))
            .collect();
        self.inverse_real(c)
    }

    /// Flat real Laplacian `sum_a u_{aa}`.
    pub fn laplacian(&self, values: &[f64]) -> Vec<f64> {
        let d = self.grid.real_dim();
        self.apply_real(values, |i| (0..d).map(|a| self.d2(i, a, a)).sum())
    }

    /// `|k|^2` (integer wavevector, Nyquist counted as `+N/2`).
    pub fn wave_norm_sq(&self, idx: usize) -> f64 {
        (0..self.grid.real_dim())
            .map(|a| {
                let k = self.wave(idx, a) as f64;
                k * k
            })
            .sum()
    }

    /// Evaluate the trigonometric interpolant on a grid refined by `factor` (zero padding).
    pub fn upsample(&self, field: &GridField, factor: usize) -> crate::Result<GridField> {
        let fine = Grid::new(self.grid.geometry().clone(), self.grid.res() * factor)?;
        let coarse = self.forward(field.values());
        let d = self.grid.real_dim();
        let res = self.grid.res();
        let mut c = vec![Complex64::new(0.0, 0.0); fine.len()];
        for (idx, &z) in coarse.iter().enumerate() {
            let mut target = 0;
            let mut weight = 1.0;
            for axis in 0..d {
                let j = self.grid.axis_index(idx, axis);
                let k = wavenumber(j, res);
                if j == res / 2 {
                    // Split the Nyquist coefficient symmetrically between +N/2 and -N/2.
                    weight *= 0.5;
                }
                let fj = k.rem_euclid(fine.res() as i64) as usize;
                target += fj * fine.stride(axis);
            }
            if weight == 1.0 {
                c[target] += z;
            } else {
                // Distribute over every sign combination of the Nyquist axes.
                let nyq_axes: Vec<usize> = (0..d)
                    .filter(|&a| self.grid.axis_index(idx, a) == res / 2)
                    .collect();
                for mask in 0..(1usize << nyq_axes.len()) {
                    let mut t = target;
                    for (bit, &axis) in nyq_axes.iter().enumerate() {
                        if mask & (1 << bit) != 0 {
                            let plus = (res / 2) * fine.stride(axis);
                            let minus = (fine.res() - res / 2) * fine.stride(axis);
                            t = t - plus + minus;
                        }
                    }
                    c[t] += z * weight;
                }
            }
        }
        let scale = fine.len() as f64 / self.grid.len() as f64;
        let fs = Spectral::new(&fine);
        let values = fs.inverse_real(c.into_iter().map(|z| z * scale).collect());
        GridField::new(fine, values)
    }
}

/// Index pairs `(a, b)` with `a <= b` over `d` real axes.
pub fn hessian_pairs(d: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(d * (d + 1) / 2);
    for a in 0..d {
        for b in a..d {
            pairs.push((a, b));
        }
    }
    pairs
}

//! Small Hermitian matrices (n <= 2) and per-node Hermitian fields.

use num_complex::Complex64;

use super::field::Grid;

/// Hermitian matrix of order 1 or 2, stored densely. Unused entries are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Herm {
    n: usize,
    a: [[Complex64; 2]; 2],
}

impl Herm {
    pub fn identity(n: usize) -> Self {
        let mut h = Herm::zeros(n);
        for j in 0..n {
            h.a[j][j] = Complex64::new(1.0, 0.0);
        }
        h
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n == 1 || n == 2, "order must be 1 or 2");
        Herm {
            n,
            a: [[Complex64::new(0.0, 0.0); 2]; 2],
        }
    }

    /// Build from the upper triangle: diagonal entries are real, `off` is entry (0,1).
    pub fn from_parts(diag: &[f64], off: Complex64) -> Self {
        let mut h = Herm::zeros(diag.len());
        for (j, &d) in diag.iter().enumerate() {
            h.a[j][j] = Complex64::new(d, 0.0);
        }
        if h.n == 2 {
            h.a[0][1] = off;
            h.a[1][0] = off.conj();
        }
        h
    }

    /// Build from a full row-major matrix without checking the Hermitian property.
    pub fn from_rows_unchecked(n: usize, rows: &[Complex64]) -> Self {
        let mut h = Herm::zeros(n);
        for j in 0..n {
            for k in 0..n {
                h.a[j][k] = rows[j * n + k];
            }
        }
        h
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.a[j][k]
    }

    pub fn scalar(&self) -> f64 {
        self.a[0][0].re
    }

    /// Largest deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> (usize, usize, f64) {
        let mut worst = (0, 0, 0.0);
        for j in 0..self.n {
            for k in 0..self.n {
                let d = (self.a[j][k] - self.a[k][j].conj()).norm();
                if d > worst.2 {
                    worst = (j, k, d);
                }
            }
        }
        worst
    }

    pub fn det(&self) -> f64 {
        match self.n {
            1 => self.a[0][0].re,
            _ => self.a[0][0].re * self.a[1][1].re - self.a[0][1].norm_sqr(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|j| self.a[j][j].re).sum()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        match self.n {
            1 => [self.a[0][0].re, self.a[0][0].re],
            _ => {
                let p = self.a[0][0].re;
                let q = self.a[1][1].re;
                let mean = 0.5 * (p + q);
                let rad = (0.25 * (p - q) * (p - q) + self.a[0][1].norm_sqr()).sqrt();
                [mean - rad, mean + rad]
            }
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Adjugate, so that `adj(A) A = det(A) I`.
    pub fn adjugate(&self) -> Self {
        match self.n {
            1 => Herm::identity(1),
            _ => Herm::from_parts(&[self.a[1][1].re, self.a[0][0].re], -self.a[0][1]),
        }
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(self.adjugate().scale(1.0 / d))
    }

    pub fn transpose(&self) -> Self {
        let mut t = *self;
        if self.n == 2 {
            t.a[0][1] = self.a[1][0];
            t.a[1][0] = self.a[0][1];
        }
        t
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        for row in out.a.iter_mut() {
            for x in row.iter_mut() {
                *x *= s;
            }
        }
        out
    }

    pub fn add(&self, other: &Herm) -> Self {
        debug_assert_eq!(self.n, other.n);
        let mut out = *self;
        for j in 0..2 {
            for k in 0..2 {
                out.a[j][k] += other.a[j][k];
            }
        }
        out
    }

    /// Re tr(A B), the pairing used by the linearized determinant.
    pub fn trace_product(&self, other: &Herm) -> f64 {
        let mut s = Complex64::new(0.0, 0.0);
        for j in 0..self.n {
            for k in 0..self.n {
                s += self.a[j][k] * other.a[k][j];
            }
        }
        s.re
    }

    /// Hermitian form sum_{jk} A_{jk} xi_j conj(xi_k).
    pub fn form(&self, xi: &[Complex64]) -> f64 {
        let mut s = Complex64::new(0.0, 0.0);
        for j in 0..self.n {
            for k in 0..self.n {
                s += self.a[j][k] * xi[j] * xi[k].conj();
            }
        }
        s.re
    }

    /// `W A W` for Hermitian `W`.
    pub fn sandwich(&self, w: &Herm) -> Self {
        let mut t = [[Complex64::new(0.0, 0.0); 2]; 2];
        for j in 0..self.n {
            for k in 0..self.n {
                for l in 0..self.n {
                    for m in 0..self.n {
                        t[j][m] += w.a[j][k] * self.a[k][l] * w.a[l][m];
                    }
                }
            }
        }
        let mut out = *self;
        out.a = t;
        // Restore exact symmetry lost to round-off.
        for j in 0..self.n {
            out.a[j][j].im = 0.0;
        }
        if self.n == 2 {
            out.a[1][0] = out.a[0][1].conj();
        }
        out
    }

    /// Inverse square root of a positive definite matrix.
    pub fn inv_sqrt(&self) -> Option<Self> {
        let d = self.det();
        if !(self.min_eigenvalue() > 0.0) {
            return None;
        }
        let root = match self.n {
            1 => Herm::from_parts(&[self.a[0][0].re.sqrt()], Complex64::new(0.0, 0.0)),
            // sqrt(A) = (A + sqrt(det A) I) / sqrt(tr A + 2 sqrt(det A)).
            _ => {
                let s = d.sqrt();
                self.add(&Herm::identity(2).scale(s))
                    .scale(1.0 / (self.trace() + 2.0 * s).sqrt())
            }
        };
        root.inverse()
    }

    /// Clamp eigenvalues from below, keeping eigenvectors.
    pub fn clamp_eigenvalues(&self, floor: f64) -> Self {
        match self.n {
            1 => Herm::from_parts(&[self.a[0][0].re.max(floor)], Complex64::new(0.0, 0.0)),
            _ => {
                let [lo, hi] = self.eigenvalues();
                if lo >= floor {
                    return *self;
                }
                let hi_c = hi.max(floor);
                let lo_c = lo.max(floor);
                // A = lo P_lo + hi P_hi with P_hi = (A - lo I)/(hi - lo).
                if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
                    return Herm::identity(2).scale(hi_c);
                }
                let p_hi = self.add(&Herm::identity(2).scale(-lo)).scale(1.0 / (hi - lo));
                let p_lo = Herm::identity(2).add(&p_hi.scale(-1.0));
                p_lo.scale(lo_c).add(&p_hi.scale(hi_c))
            }
        }
    }
}

/// Per-node Hermitian matrices, e.g. the complex Hessian `u_{j kbar}` of a field.
///
/// Entries use `d/dz_j = (d/dx_j - i d/dy_j)/2` and `d/dzbar_k = (d/dx_k + i d/dy_k)/2`.
#[derive(Debug, Clone)]
pub struct HermitianField {
    grid: Grid,
    /// Real diagonal entries, one vector per `j`.
    diag: Vec<Vec<f64>>,
    /// Entry (0, 1) for `n = 2`; empty otherwise.
    off: Vec<Complex64>,
}

impl HermitianField {
    pub(crate) fn new(grid: Grid, diag: Vec<Vec<f64>>, off: Vec<Complex64>) -> Self {
        debug_assert_eq!(diag.len(), grid.complex_dim());
        HermitianField { grid, diag, off }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn at(&self, node: usize) -> Herm {
        let n = self.grid.complex_dim();
        if n == 1 {
            Herm::from_parts(&[self.diag[0][node]], Complex64::new(0.0, 0.0))
        } else {
            Herm::from_parts(&[self.diag[0][node], self.diag[1][node]], self.off[node])
        }
    }

    /// Diagonal entry `(j, j)` at every node.
    pub fn diagonal(&self, j: usize) -> &[f64] {
        &self.diag[j]
    }

    /// Off-diagonal entry `(0, 1)` at every node (`n = 2` only).
    pub fn off_diagonal(&self) -> &[Complex64] {
        &self.off
    }

    pub fn trace(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.diag.iter().map(|d| d[i]).sum())
            .collect()
    }

    /// Pointwise `det(g + H) / det(g)`.
    pub fn relative_det_shifted(&self) -> Vec<f64> {
        let g = self.grid.geometry().metric();
        let dg = g.det();
        (0..self.len())
            .map(|i| g.add(&self.at(i)).det() / dg)
            .collect()
    }

    /// Pointwise smallest eigenvalue of `g + H`.
    pub fn min_eigenvalue_shifted(&self) -> Vec<f64> {
        let g = self.grid.geometry().metric();
        (0..self.len())
            .map(|i| g.add(&self.at(i)).min_eigenvalue())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_square_root_whitens() {
        let g = Herm::from_parts(&[2.0, 1.5], Complex64::new(0.3, -0.7));
        let w = g.inv_sqrt().unwrap();
        let i = g.sandwich(&w);
        assert!(i.add(&Herm::identity(2).scale(-1.0)).eigenvalues().iter().all(|e| e.abs() < 1e-14));
        assert!(Herm::from_parts(&[1.0, -1.0], Complex64::new(0.0, 0.0)).inv_sqrt().is_none());
    }

    #[test]
    fn det_and_eigenvalues_agree() {
        let h = Herm::from_parts(&[2.0, 3.0], Complex64::new(0.5, -1.0));
        let [lo, hi] = h.eigenvalues();
        assert!((lo * hi - h.det()).abs() < 1e-12);
        assert!((lo + hi - h.trace()).abs() < 1e-12);
        let adj = h.adjugate();
        // adj(A) A = det(A) I
        for j in 0..2 {
            for k in 0..2 {
                let mut s = Complex64::new(0.0, 0.0);
                for l in 0..2 {
                    s += adj.get(j, l) * h.get(l, k);
                }
                let expect = if j == k { h.det() } else { 0.0 };
                assert!((s - Complex64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn clamp_keeps_psd_matrices() {
        let h = Herm::from_parts(&[2.0, 3.0], Complex64::new(0.5, -1.0));
        assert_eq!(h.clamp_eigenvalues(0.1), h);
        let bad = Herm::from_parts(&[1.0, -1.0], Complex64::new(0.0, 0.0));
        let c = bad.clamp_eigenvalues(0.25);
        assert!((c.min_eigenvalue() - 0.25).abs() < 1e-14);
        assert!((c.eigenvalues()[1] - 1.0).abs() < 1e-14);
    }
}

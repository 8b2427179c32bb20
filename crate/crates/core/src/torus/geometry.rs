use nalgebra::DMatrix;
use num_complex::Complex64;

use super::hermitian::Herm;
use crate::error::{Error, Result};

/// Flat complex torus `C^n / Z^{2n}` with a constant Hermitian metric `g_{j kbar}`.
///
/// Real coordinates are ordered `(x_1, y_1, ..., x_n, y_n)` with `z_j = x_j + i y_j`,
/// each in `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusGeometry {
    complex_dim: usize,
    metric: Herm,
    volume: f64,
}

impl TorusGeometry {
    /// Identity metric in complex dimension `n`.
    pub fn flat(n: usize) -> Result<Self> {
        if !(n == 1 || n == 2) {
            return Err(Error::InvalidGeometry(format!(
                "complex dimension must be 1 or 2, got {n}"
            )));
        }
        Ok(Self::from_herm(Herm::identity(n)))
    }

    /// `metric` is the full row-major `n x n` matrix.
    pub fn new(n: usize, metric: &[Complex64]) -> Result<Self> {
        if !(n == 1 || n == 2) {
            return Err(Error::InvalidGeometry(format!(
                "complex dimension must be 1 or 2, got {n}"
            )));
        }
        if metric.len() != n * n {
            return Err(Error::InvalidGeometry(format!(
                "metric needs {} entries, got {}",
                n * n,
                metric.len()
            )));
        }
        if metric.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidGeometry("metric has non-finite entries".into()));
        }
        let h = Herm::from_rows_unchecked(n, metric);
        let (row, col, defect) = h.hermitian_defect();
        if defect > 1e-12 {
            return Err(Error::MetricNotHermitian { row, col, defect });
        }
        // Re-symmetrize so round-off in the input does not leak.
        let h = match n {
            1 => Herm::from_parts(&[metric[0].re], Complex64::new(0.0, 0.0)),
            _ => Herm::from_parts(
                &[metric[0].re, metric[3].re],
                0.5 * (metric[1] + metric[2].conj()),
            ),
        };
        let lo = h.min_eigenvalue();
        if lo <= 0.0 {
            return Err(Error::MetricNotPositive { eigenvalue: lo });
        }
        Ok(Self::from_herm(h))
    }

    /// Real symmetric metric `diag`-style convenience for tests and configs.
    pub fn with_real_metric(n: usize, rows: &[f64]) -> Result<Self> {
        let m: Vec<Complex64> = rows.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        Self::new(n, &m)
    }

    fn from_herm(metric: Herm) -> Self {
        let volume = metric.det();
        TorusGeometry {
            complex_dim: metric.order(),
            metric,
            volume,
        }
    }

    pub fn complex_dim(&self) -> usize {
        self.complex_dim
    }

    pub fn real_dim(&self) -> usize {
        2 * self.complex_dim
    }

    pub fn metric(&self) -> Herm {
        self.metric
    }

    /// `int_X omega^n`, normalized so that the identity metric gives 1.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Inverse metric `g^{j kbar}` arranged so that `|d u|^2_g = inverse.form(d u)`.
    pub fn inverse_metric(&self) -> Herm {
        self.metric
            .transpose()
            .inverse()
            .expect("metric was validated positive definite")
    }

    /// Riemannian metric in real coordinates `(x_1, y_1, ..., x_n, y_n)`.
    pub fn real_metric(&self) -> DMatrix<f64> {
        let n = self.complex_dim;
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            for k in 0..n {
                let g = self.metric.get(j, k);
                m[(2 * j, 2 * k)] = g.re;
                m[(2 * j + 1, 2 * k + 1)] = g.re;
                m[(2 * j, 2 * k + 1)] = g.im;
                m[(2 * j + 1, 2 * k)] = -g.im;
            }
        }
        m
    }

    pub fn is_identity(&self) -> bool {
        self.metric == Herm::identity(self.complex_dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_volumes() {
        assert_eq!(TorusGeometry::flat(1).unwrap().volume(), 1.0);
        assert_eq!(TorusGeometry::flat(2).unwrap().volume(), 1.0);
    }

    #[test]
    fn scaled_metric_volume() {
        let g = TorusGeometry::with_real_metric(1, &[2.0]).unwrap();
        assert_eq!(g.volume(), 2.0);
    }

    #[test]
    fn rejects_indefinite_metric_with_eigenvalue() {
        let err = TorusGeometry::with_real_metric(2, &[1.0, 2.0, 2.0, 1.0]).unwrap_err();
        match err {
            Error::MetricNotPositive { eigenvalue } => assert!((eigenvalue + 1.0).abs() < 1e-12),
            other => panic!("unexpected {other}"),
        }
        assert!(err_text(TorusGeometry::with_real_metric(1, &[-3.0])).contains("-3.000e0"));
    }

    #[test]
    fn rejects_non_hermitian_and_bad_dimension() {
        let m = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.1, 0.2),
            Complex64::new(0.1, 0.2),
            Complex64::new(1.0, 0.0),
        ];
        assert!(matches!(
            TorusGeometry::new(2, &m),
            Err(Error::MetricNotHermitian { .. })
        ));
        assert!(TorusGeometry::flat(3).is_err());
    }

    #[test]
    fn real_metric_is_symmetric() {
        let m = [
            Complex64::new(2.0, 0.0),
            Complex64::new(0.3, 0.4),
            Complex64::new(0.3, -0.4),
            Complex64::new(1.5, 0.0),
        ];
        let g = TorusGeometry::new(2, &m).unwrap();
        let r = g.real_metric();
        assert!((r.clone() - r.transpose()).amax() < 1e-15);
        assert!(r.symmetric_eigenvalues().min() > 0.0);
    }

    fn err_text<T: std::fmt::Debug>(r: Result<T>) -> String {
        r.unwrap_err().to_string()
    }
}

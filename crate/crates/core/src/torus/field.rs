use std::fmt;
use std::sync::Arc;

use super::geometry::TorusGeometry;
use crate::error::{Error, Result};

#[derive(Debug, PartialEq)]
struct GridInner {
    geometry: TorusGeometry,
    res: usize,
}

/// Uniform periodic grid with `res` nodes per real axis on a torus geometry.
///
/// Node `(i_1, ..., i_{2n})` sits at `(i_1/res, ..., i_{2n}/res)`; the flattened index is
/// row-major in the axis order `(x_1, y_1, x_2, y_2)`, so the last axis varies fastest.
#[derive(Clone)]
pub struct Grid(Arc<GridInner>);

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Grid(n={}, N={})", self.complex_dim(), self.res())
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={}, N={}", self.complex_dim(), self.res())
    }
}

impl Grid {
    pub fn new(geometry: TorusGeometry, res: usize) -> Result<Self> {
        if res < 4 || !res.is_power_of_two() {
            return Err(Error::InvalidGeometry(format!(
                "resolution must be a power of two >= 4, got {res}"
            )));
        }
        Ok(Grid(Arc::new(GridInner { geometry, res })))
    }

    pub fn geometry(&self) -> &TorusGeometry {
        &self.0.geometry
    }

    pub fn complex_dim(&self) -> usize {
        self.0.geometry.complex_dim()
    }

    pub fn real_dim(&self) -> usize {
        self.0.geometry.real_dim()
    }

    /// Nodes per real axis.
    pub fn res(&self) -> usize {
        self.0.res
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.0.res as f64
    }

    pub fn len(&self) -> usize {
        self.0.res.pow(self.real_dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flattened stride of real axis `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.0.res.pow((self.real_dim() - 1 - axis) as u32)
    }

    /// Integer index of `node` along `axis`.
    pub fn axis_index(&self, node: usize, axis: usize) -> usize {
        (node / self.stride(axis)) % self.0.res
    }

    /// Neighbor of `node` shifted by `step` cells along `axis`, periodically.
    pub fn shift(&self, node: usize, axis: usize, step: isize) -> usize {
        let n = self.0.res as isize;
        let i = self.axis_index(node, axis) as isize;
        let j = (i + step).rem_euclid(n);
        (node as isize + (j - i) * self.stride(axis) as isize) as usize
    }

    /// Real coordinates of `node`.
    pub fn coords(&self, node: usize) -> [f64; 4] {
        let mut c = [0.0; 4];
        let h = self.spacing();
        for (axis, slot) in c.iter_mut().enumerate().take(self.real_dim()) {
            *slot = self.axis_index(node, axis) as f64 * h;
        }
        c
    }

    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Result<GridField> {
        let d = self.real_dim();
        let values = (0..self.len())
            .map(|i| {
                let c = self.coords(i);
                f(&c[..d])
            })
            .collect();
        GridField::new(self.clone(), values)
    }

    pub fn constant(&self, c: f64) -> GridField {
        GridField {
            grid: self.clone(),
            values: vec![c; self.len()],
        }
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: self.to_string(),
                right: other.to_string(),
            })
        }
    }
}

/// Real scalar field sampled at the nodes of a periodic grid.
///
/// A field is identified with its trigonometric interpolant. Arithmetic between fields
/// requires identical grids; nothing is ever resampled implicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: Grid,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "grid {} has {} nodes, got {} values",
                grid,
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite value {} at node {i}",
                values[i]
            )));
        }
        Ok(GridField { grid, values })
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        GridField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// `sup |self - other|` over nodes.
    pub fn sup_distance(&self, other: &GridField) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        GridField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &GridField, f: impl Fn(f64, f64) -> f64) -> Result<GridField> {
        self.grid.ensure_same(&other.grid)?;
        Ok(GridField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &GridField) -> Result<GridField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridField) -> Result<GridField> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> GridField {
        self.map(|v| s * v)
    }

    pub fn add_scalar(&self, c: f64) -> GridField {
        self.map(|v| v + c)
    }

    pub fn pointwise_min(&self, other: &GridField) -> Result<GridField> {
        self.zip_with(other, f64::min)
    }

    /// Translate by whole cells: `out(x) = self(x - shift * h)`.
    pub fn translate(&self, shift: &[isize]) -> Result<GridField> {
        if shift.len() != self.grid.real_dim() {
            return Err(Error::InvalidArgument(format!(
                "translation needs {} components",
                self.grid.real_dim()
            )));
        }
        let mut values = vec![0.0; self.len()];
        for (i, &v) in self.values.iter().enumerate() {
            let mut j = i;
            for (axis, &s) in shift.iter().enumerate() {
                j = self.grid.shift(j, axis, s);
            }
            values[j] = v;
        }
        Ok(GridField {
            grid: self.grid.clone(),
            values,
        })
    }

    /// Exchange two real axes (e.g. `x_1 <-> y_1`).
    pub fn swap_axes(&self, a: usize, b: usize) -> Result<GridField> {
        let d = self.grid.real_dim();
        if a >= d || b >= d {
            return Err(Error::InvalidArgument(format!("axis out of range for {d} axes")));
        }
        let mut values = vec![0.0; self.len()];
        let (sa, sb) = (self.grid.stride(a), self.grid.stride(b));
        for (i, &v) in self.values.iter().enumerate() {
            let ia = self.grid.axis_index(i, a);
            let ib = self.grid.axis_index(i, b);
            let j = i - ia * sa - ib * sb + ib * sa + ia * sb;
            values[j] = v;
        }
        Ok(GridField {
            grid: self.grid.clone(),
            values,
        })
    }
}

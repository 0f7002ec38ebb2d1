use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Smallest number of points accepted per axis.
pub const MIN_POINTS: usize = 64;

/// One periodic axis: `n_points` samples starting at `min`, spacing
/// `(max - min) / n_points`. The point at `max` is the periodic image of
/// the one at `min` and is not stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub n_points: usize,
    pub min: f64,
    pub max: f64,
}

impl Axis {
    pub fn new(n_points: usize, min: f64, max: f64) -> Result<Self> {
        let axis = Axis { n_points, min, max };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < MIN_POINTS {
            return Err(Error::invalid(format!(
                "axis needs at least {MIN_POINTS} points, got {}",
                self.n_points
            )));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.max > self.min) {
            return Err(Error::invalid(format!(
                "axis bounds must satisfy min < max, got [{}, {})",
                self.min, self.max
            )));
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.max - self.min
    }

    pub fn spacing(&self) -> f64 {
        self.length() / self.n_points as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.min + i as f64 * self.spacing()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.coord(i)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.min && x < self.max
    }

    /// FFT-ordered angular wavenumbers of the lattice modes.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points as i64;
        let dk = 2.0 * PI / self.length();
        (0..n)
            .map(|j| if j < (n + 1) / 2 { j } else { j - n })
            .map(|j| j as f64 * dk)
            .collect()
    }

    /// Cell index and fractional offset of `x`, or `None` outside `[min, max)`.
    pub fn locate(&self, x: f64) -> Option<(usize, f64)> {
        if !self.contains(x) {
            return None;
        }
        let s = (x - self.min) / self.spacing();
        let i = (s.floor() as usize).min(self.n_points - 1);
        Some((i, s - i as f64))
    }
}

/// A rectilinear periodic grid in one or two dimensions.
///
/// Values are stored row-major: for a plane grid with axes `(a0, a1)` the
/// flat index of `(i0, i1)` is `i0 * a1.n_points + i1`. Two-dimensional
/// grids are read as the `(y, z)` plane, with `z` the last axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    axes: Vec<Axis>,
}

impl SpatialGrid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::invalid(format!("grids have one or two axes, got {}", axes.len())));
        }
        for a in &axes {
            a.validate()?;
        }
        Ok(SpatialGrid { axes })
    }

    pub fn line(n_points: usize, min: f64, max: f64) -> Result<Self> {
        Self::new(vec![Axis::new(n_points, min, max)?])
    }

    pub fn plane(a0: Axis, a1: Axis) -> Result<Self> {
        Self::new(vec![a0, a1])
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    /// The last axis, which carries the spin-dependent force.
    pub fn z_axis(&self) -> &Axis {
        self.axes.last().expect("grid has at least one axis")
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n_points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).product()
    }

    /// Coordinates of the point with flat index `idx`.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        match self.axes.as_slice() {
            [a] => [a.coord(idx), 0.0],
            [a0, a1] => [a0.coord(idx / a1.n_points), a1.coord(idx % a1.n_points)],
            _ => unreachable!(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dims() && self.axes.iter().zip(x).all(|(a, &v)| a.contains(v))
    }

    /// Linear (1D) or bilinear (2D) interpolation stencil for `x`: flat
    /// indices and weights, with periodic wrap on the upper neighbour.
    pub fn stencil(&self, x: &[f64]) -> Option<Stencil> {
        if x.len() != self.dims() {
            return None;
        }
        match self.axes.as_slice() {
            [a] => {
                let (i, f) = a.locate(x[0])?;
                let j = (i + 1) % a.n_points;
                Some(Stencil {
                    len: 2,
                    idx: [i, j, 0, 0],
                    w: [1.0 - f, f, 0.0, 0.0],
                })
            }
            [a0, a1] => {
                let (i0, f0) = a0.locate(x[0])?;
                let (i1, f1) = a1.locate(x[1])?;
                let j0 = (i0 + 1) % a0.n_points;
                let j1 = (i1 + 1) % a1.n_points;
                let n1 = a1.n_points;
                Some(Stencil {
                    len: 4,
                    idx: [i0 * n1 + i1, i0 * n1 + j1, j0 * n1 + i1, j0 * n1 + j1],
                    w: [(1.0 - f0) * (1.0 - f1), (1.0 - f0) * f1, f0 * (1.0 - f1), f0 * f1],
                })
            }
            _ => unreachable!(),
        }
    }

    pub(crate) fn ensure_same(&self, other: &SpatialGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    len: usize,
    idx: [usize; 4],
    w: [f64; 4],
}

impl Stencil {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.idx[..self.len].iter().copied().zip(self.w[..self.len].iter().copied())
    }

    pub fn apply(&self, values: &[f64]) -> f64 {
        self.iter().map(|(i, w)| w * values[i]).sum()
    }
}

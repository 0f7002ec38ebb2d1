use super::grid::Axis;
use crate::error::{Error, Result};

/// CDF of a density sampled on a periodic axis. Each cell `[x_j, x_j + dx)`
/// carries the trapezoid mass of its two endpoint samples and the CDF is
/// linear inside the cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearCdf {
    min: f64,
    dx: f64,
    /// Cumulative mass at cell edges, normalized to end at 1.
    edges: Vec<f64>,
}

impl PiecewiseLinearCdf {
    pub fn new(axis: &Axis, density: &[f64]) -> Result<Self> {
        let n = axis.n_points;
        if density.len() != n {
            return Err(Error::invalid(format!("density has {} values for an axis of {n}", density.len())));
        }
        if density.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::invalid("density must be finite and nonnegative"));
        }
        let mut edges = Vec::with_capacity(n + 1);
        edges.push(0.0);
        let mut acc = 0.0;
        for j in 0..n {
            acc += 0.5 * (density[j] + density[(j + 1) % n]);
            edges.push(acc);
        }
        if acc <= 0.0 {
            return Err(Error::invalid("density integrates to zero"));
        }
        for e in &mut edges {
            *e /= acc;
        }
        Ok(PiecewiseLinearCdf {
            min: axis.min,
            dx: axis.spacing(),
            edges,
        })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let s = (x - self.min) / self.dx;
        if s <= 0.0 {
            return 0.0;
        }
        let n = self.edges.len() - 1;
        if s >= n as f64 {
            return 1.0;
        }
        let j = s.floor() as usize;
        let f = s - j as f64;
        self.edges[j] + f * (self.edges[j + 1] - self.edges[j])
    }

    /// Smallest x with cdf(x) = u, for u in [0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        // first edge strictly above u
        let k = self.edges.partition_point(|&e| e <= u).clamp(1, self.edges.len() - 1);
        let j = k - 1;
        let mass = self.edges[k] - self.edges[j];
        let f = if mass > 0.0 { (u - self.edges[j]) / mass } else { 0.0 };
        self.min + (j as f64 + f.clamp(0.0, 1.0)) * self.dx
    }
}

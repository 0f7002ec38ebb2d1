use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{ComplexField, UnitsConfig};
use super::grid::SpatialGrid;
use crate::error::{Error, Result};

/// A Gaussian wave packet
/// ψ(x) ∝ exp(−(x−c)²/(4σ²)) · exp(i k·(x−c) + i·phase).
///
/// `sigma` is the standard deviation of |ψ|² (not of ψ) along each axis.
/// With this convention two equal-width packets centered at ±a have
/// |⟨ψ₊|ψ₋⟩| = exp(−a²/(2σ²)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPacketSpec {
    pub center: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Mean wavevector per axis.
    pub momentum: Vec<f64>,
    #[serde(default)]
    pub phase: f64,
}

impl GaussianPacketSpec {
    pub fn new_1d(center: f64, sigma: f64, k: f64) -> Self {
        GaussianPacketSpec {
            center: vec![center],
            sigma: vec![sigma],
            momentum: vec![k],
            phase: 0.0,
        }
    }

    pub fn validate(&self, grid: &SpatialGrid) -> Result<()> {
        let d = grid.dims();
        if self.center.len() != d || self.sigma.len() != d || self.momentum.len() != d {
            return Err(Error::invalid(format!("packet spec must have {d} components per field")));
        }
        for (axis, ((&c, &s), &k)) in grid.axes().iter().zip(self.center.iter().zip(&self.sigma).zip(&self.momentum)) {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::invalid(format!("packet sigma must be positive, got {s}")));
            }
            if !(c.is_finite() && k.is_finite()) {
                return Err(Error::invalid("packet center and momentum must be finite"));
            }
            if c - 5.0 * s < axis.min || c + 5.0 * s > axis.max {
                return Err(Error::invalid(format!(
                    "packet support [{}, {}] (center ± 5σ) leaves the domain [{}, {})",
                    c - 5.0 * s,
                    c + 5.0 * s,
                    axis.min,
                    axis.max
                )));
            }
        }
        Ok(())
    }

    fn amplitude(&self, x: &[f64]) -> Complex64 {
        let mut log_mod = 0.0;
        let mut arg = self.phase;
        for (i, &xi) in x.iter().enumerate() {
            let d = xi - self.center[i];
            log_mod -= d * d / (4.0 * self.sigma[i] * self.sigma[i]);
            arg += self.momentum[i] * d;
        }
        Complex64::from_polar(log_mod.exp(), arg)
    }
}

/// Builds the packet on `grid`, normalized so that Σ|ψ|²·dV = 1.
pub fn make_gaussian(grid: &SpatialGrid, spec: &GaussianPacketSpec) -> Result<ComplexField> {
    spec.validate(grid)?;
    let mut field = ComplexField::from_fn(grid, |x| spec.amplitude(x))?;
    field.normalize()?;
    Ok(field)
}

/// Width of a freely spreading Gaussian: σ(t) = σ₀·sqrt(1 + (ħt/(2mσ₀²))²).
pub fn free_width(sigma0: f64, t: f64, units: &UnitsConfig) -> f64 {
    let r = units.hbar * t / (2.0 * units.mass * sigma0 * sigma0);
    sigma0 * (1.0 + r * r).sqrt()
}

/// Rate of change of [`free_width`].
pub fn free_width_rate(sigma0: f64, t: f64, units: &UnitsConfig) -> f64 {
    let c = units.hbar / (2.0 * units.mass * sigma0 * sigma0);
    sigma0 * c * c * t / (1.0 + (c * t).powi(2)).sqrt()
}

/// Marginal density along `axis` (integrated over the other axis), one
/// value per grid point of that axis.
pub fn marginal(grid: &SpatialGrid, density: &[f64], axis: usize) -> Vec<f64> {
    match grid.dims() {
        1 => density.to_vec(),
        2 => {
            let n0 = grid.axis(0).n_points;
            let n1 = grid.axis(1).n_points;
            let (d0, d1) = (grid.axis(0).spacing(), grid.axis(1).spacing());
            if axis == 0 {
                (0..n0).map(|i| density[i * n1..(i + 1) * n1].iter().sum::<f64>() * d1).collect()
            } else {
                (0..n1).map(|j| (0..n0).map(|i| density[i * n1 + j]).sum::<f64>() * d0).collect()
            }
        }
        _ => unreachable!(),
    }
}

/// Mean and variance of position along `axis` under `density`.
pub fn moments(grid: &SpatialGrid, density: &[f64], axis: usize) -> (f64, f64) {
    let m = marginal(grid, density, axis);
    let a = grid.axis(axis);
    let total: f64 = m.iter().sum();
    let mean = m.iter().enumerate().map(|(i, w)| w * a.coord(i)).sum::<f64>() / total;
    let var = m.iter().enumerate().map(|(i, w)| w * (a.coord(i) - mean).powi(2)).sum::<f64>() / total;
    (mean, var)
}

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ComplexField, Evolvable, SpatialGrid, Spectral, SpinorField, UnitsConfig};

/// Densities below `NODE_EPSILON × peak` are treated as nodes.
pub const NODE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityModel {
    /// v = (ħ/m)·Im(∇ψ/ψ)
    ScalarGuidance,
    /// v = (ħ/m)·Im(Ψ†∇Ψ)/(Ψ†Ψ)
    SpinorConvective,
    /// Convective velocity plus the in-plane Gordon (spin-curl) term.
    SpinorWithGordon,
}

/// Result of evaluating a velocity field at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityEval {
    pub velocity: Vec<f64>,
    /// The point sits at a node; `velocity` is zero and should be replaced
    /// by the caller's last finite value.
    pub at_node: bool,
}

/// Velocity field of one wavefunction snapshot, sampled on the grid.
///
/// The wavefunction is differentiated spectrally once; per-point velocities
/// are then linearly (1D) or bilinearly (2D) interpolated. Grid points whose
/// density is below the node threshold carry no velocity and are skipped by
/// the interpolation.
#[derive(Debug, Clone)]
pub struct VelocityFrame {
    time: f64,
    grid: SpatialGrid,
    density: Vec<f64>,
    threshold: f64,
    convective: Vec<Vec<f64>>,
    gordon: Option<Vec<Vec<f64>>>,
}

/// Wavefunctions that can drive Bohmian trajectories.
pub trait GuidingField: Evolvable {
    fn velocity_frame(&self, model: VelocityModel, units: &UnitsConfig, time: f64) -> Result<VelocityFrame>;
}

impl GuidingField for ComplexField {
    fn velocity_frame(&self, model: VelocityModel, units: &UnitsConfig, time: f64) -> Result<VelocityFrame> {
        match model {
            VelocityModel::ScalarGuidance => VelocityFrame::build(self.grid(), &[self.values()], false, units, time),
            _ => Err(Error::Unsupported(format!("{model:?} needs a spinor field"))),
        }
    }
}

impl GuidingField for SpinorField {
    fn velocity_frame(&self, model: VelocityModel, units: &UnitsConfig, time: f64) -> Result<VelocityFrame> {
        let comps = [self.up().values(), self.down().values()];
        match model {
            VelocityModel::ScalarGuidance => Err(Error::Unsupported("scalar guidance on a spinor field".into())),
            VelocityModel::SpinorConvective => VelocityFrame::build(self.grid(), &comps, false, units, time),
            VelocityModel::SpinorWithGordon => VelocityFrame::build(self.grid(), &comps, true, units, time),
        }
    }
}

impl VelocityFrame {
    fn build(grid: &SpatialGrid, comps: &[&[Complex64]], gordon: bool, units: &UnitsConfig, time: f64) -> Result<Self> {
        units.validate()?;
        let dims = grid.dims();
        if gordon && (dims != 2 || comps.len() != 2) {
            return Err(Error::Unsupported(
                "the Gordon term needs a spinor on a two-dimensional (y, z) grid".into(),
            ));
        }
        let spectral = Spectral::new(grid);
        let hm = units.hbar_over_mass();
        let n = grid.len();
        let mut density = vec![0.0; n];
        for c in comps {
            for (d, v) in density.iter_mut().zip(c.iter()) {
                *d += v.norm_sqr();
            }
        }
        let peak = density.iter().cloned().fold(0.0, f64::max);
        let threshold = NODE_EPSILON * peak;
        let live = |i: usize| density[i] >= threshold && density[i] > 0.0;

        // derivatives[c][axis]
        let derivatives: Vec<Vec<Vec<Complex64>>> = comps
            .iter()
            .map(|c| (0..dims).map(|a| spectral.derivative(c, a)).collect())
            .collect();

        let convective: Vec<Vec<f64>> = (0..dims)
            .map(|a| {
                (0..n)
                    .map(|i| {
                        if !live(i) {
                            return 0.0;
                        }
                        let j: f64 = comps.iter().zip(&derivatives).map(|(c, d)| (c[i].conj() * d[a][i]).im).sum();
                        hm * j / density[i]
                    })
                    .collect()
            })
            .collect();

        let gordon = gordon.then(|| {
            // s_x = 2 Re(ψ↑* ψ↓); ∂s_x = 2 Re(∂ψ↑* ψ↓ + ψ↑* ∂ψ↓)
            let (up, down) = (comps[0], comps[1]);
            let ds = |a: usize, i: usize| 2.0 * (derivatives[0][a][i].conj() * down[i] + up[i].conj() * derivatives[1][a][i]).re;
            let vy: Vec<f64> = (0..n)
                .map(|i| if live(i) { 0.5 * hm * ds(1, i) / density[i] } else { 0.0 })
                .collect();
            let vz: Vec<f64> = (0..n)
                .map(|i| if live(i) { -0.5 * hm * ds(0, i) / density[i] } else { 0.0 })
                .collect();
            vec![vy, vz]
        });

        Ok(VelocityFrame {
            time,
            grid: grid.clone(),
            density,
            threshold,
            convective,
            gordon,
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    /// The same frame with the Gordon term dropped.
    pub fn convective_only(&self) -> VelocityFrame {
        VelocityFrame {
            gordon: None,
            ..self.clone()
        }
    }

    pub fn has_gordon(&self) -> bool {
        self.gordon.is_some()
    }

    /// Per-point convective velocity along `axis` (zero at nodes).
    pub fn convective_on_grid(&self, axis: usize) -> &[f64] {
        &self.convective[axis]
    }

    /// Per-point Gordon velocity along `axis`, if this frame carries it.
    pub fn gordon_on_grid(&self, axis: usize) -> Option<&[f64]> {
        self.gordon.as_ref().map(|g| g[axis].as_slice())
    }

    fn interpolate(&self, field: &[Vec<f64>], x: &[f64], out: &mut [f64]) -> Result<bool> {
        let stencil = self
            .grid
            .stencil(x)
            .ok_or_else(|| Error::invalid(format!("point {x:?} outside the grid domain")))?;
        let rho = stencil.apply(&self.density);
        if !(rho >= self.threshold && rho > 0.0) {
            out.iter_mut().for_each(|v| *v = 0.0);
            return Ok(true);
        }
        let mut wsum = 0.0;
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, w) in stencil.iter() {
            if w == 0.0 || self.density[i] < self.threshold || self.density[i] == 0.0 {
                continue;
            }
            wsum += w;
            for (o, f) in out.iter_mut().zip(field) {
                *o += w * f[i];
            }
        }
        if wsum == 0.0 {
            return Ok(true);
        }
        out.iter_mut().for_each(|v| *v /= wsum);
        Ok(false)
    }

    /// Writes the model velocity at `x` into `out`; returns `true` at a node.
    pub fn velocity_into(&self, x: &[f64], out: &mut [f64]) -> Result<bool> {
        let node = self.interpolate(&self.convective, x, out)?;
        if let Some(g) = &self.gordon {
            let mut extra = [0.0; 2];
            self.interpolate(g, x, &mut extra[..out.len()])?;
            for (o, e) in out.iter_mut().zip(extra) {
                *o += e;
            }
        }
        Ok(node)
    }

    pub fn convective_at(&self, x: &[f64]) -> Result<VelocityEval> {
        let mut v = vec![0.0; self.grid.dims()];
        let at_node = self.interpolate(&self.convective, x, &mut v)?;
        Ok(VelocityEval { velocity: v, at_node })
    }

    pub fn gordon_at(&self, x: &[f64]) -> Result<VelocityEval> {
        let g = self
            .gordon
            .as_ref()
            .ok_or_else(|| Error::Unsupported("frame was built without the Gordon term".into()))?;
        let mut v = vec![0.0; self.grid.dims()];
        let at_node = self.interpolate(g, x, &mut v)?;
        Ok(VelocityEval { velocity: v, at_node })
    }

    pub fn velocity_at(&self, x: &[f64]) -> Result<VelocityEval> {
        let mut v = vec![0.0; self.grid.dims()];
        let at_node = self.velocity_into(x, &mut v)?;
        Ok(VelocityEval { velocity: v, at_node })
    }

    /// Interpolated total density at `x` (zero outside the domain).
    pub fn density_at(&self, x: &[f64]) -> f64 {
        self.grid.stencil(x).map_or(0.0, |s| s.apply(&self.density))
    }
}

/// Guidance velocity (ħ/m)·Im(∇ψ/ψ) of a scalar field at `x`.
pub fn velocity_scalar(field: &ComplexField, x: &[f64], units: &UnitsConfig) -> Result<VelocityEval> {
    field.velocity_frame(VelocityModel::ScalarGuidance, units, 0.0)?.velocity_at(x)
}

/// Convective spinor velocity ħ·Im(Ψ†∇Ψ)/(m·Ψ†Ψ) at `x`.
pub fn velocity_spinor(spinor: &SpinorField, x: &[f64], units: &UnitsConfig) -> Result<VelocityEval> {
    spinor.velocity_frame(VelocityModel::SpinorConvective, units, 0.0)?.convective_at(x)
}

/// In-plane Gordon velocity (ħ/(2mρ))·(∂_z s_x, −∂_y s_x) on a (y, z) grid,
/// where s = Ψ†σΨ and x is the out-of-plane axis. The out-of-plane
/// component (∂_y s_z − ∂_z s_y) is not used by planar trajectories and is
/// discarded.
pub fn gordon_velocity(spinor: &SpinorField, x: &[f64], units: &UnitsConfig) -> Result<VelocityEval> {
    spinor.velocity_frame(VelocityModel::SpinorWithGordon, units, 0.0)?.gordon_at(x)
}

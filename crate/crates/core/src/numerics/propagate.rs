use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{ComplexField, SpinorField, UnitsConfig};
use super::grid::SpatialGrid;
use super::spectral::Spectral;
use crate::error::{Error, Result};

/// Relative density allowed in the boundary band before a run is aborted.
pub const SUPPORT_GUARD_RATIO: f64 = 1e-8;
/// Width of the boundary band, in grid cells.
pub const SUPPORT_GUARD_CELLS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialSpec {
    Free,
    /// V±(z) = ∓(ħ/2)(B0 + b·z) on the spin-up/down components, with z the
    /// last grid axis and the gyromagnetic factor absorbed into b and B0.
    /// Reversing the sign of `gradient` inverts the field gradient.
    LinearSpinDependent {
        gradient: f64,
        offset: f64,
    },
    /// Arbitrary real potential, one value per grid point, applied to every
    /// component.
    Sampled(Vec<f64>),
}

/// Step size, step count and frame stride for one propagation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationPlan {
    /// Nonzero; negative values run the evolution backwards in time.
    pub dt: f64,
    pub n_steps: usize,
    /// Keep the state every `frame_stride` steps (step 0 included).
    pub frame_stride: Option<usize>,
    /// Abort when density reaches the boundary band. Only extended states
    /// such as lattice plane waves should turn this off.
    pub support_guard: bool,
}

impl PropagationPlan {
    pub fn new(dt: f64, n_steps: usize) -> Self {
        PropagationPlan {
            dt,
            n_steps,
            frame_stride: None,
            support_guard: true,
        }
    }

    pub fn with_frames(mut self, stride: usize) -> Self {
        self.frame_stride = Some(stride);
        self
    }

    pub fn without_support_guard(mut self) -> Self {
        self.support_guard = false;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt != 0.0) {
            return Err(Error::invalid(format!("time step must be finite and nonzero, got {}", self.dt)));
        }
        if self.frame_stride == Some(0) {
            return Err(Error::invalid("frame stride must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Frame<S> {
    pub step: usize,
    pub time: f64,
    pub state: S,
}

#[derive(Debug, Clone)]
pub struct Propagated<S> {
    pub state: S,
    pub frames: Vec<Frame<S>>,
}

/// States the split-operator stepper can advance.
pub trait Evolvable: Clone + Send + Sync {
    fn grid(&self) -> &SpatialGrid;
    fn component_count(&self) -> usize;
    fn component_mut(&mut self, i: usize) -> &mut ComplexField;
    fn component(&self, i: usize) -> &ComplexField;

    fn total_density(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.grid().len()];
        for c in 0..self.component_count() {
            for (acc, v) in d.iter_mut().zip(self.component(c).values()) {
                *acc += v.norm_sqr();
            }
        }
        d
    }

    fn norm_sqr(&self) -> f64 {
        (0..self.component_count()).map(|c| self.component(c).norm_sqr()).sum()
    }
}

impl Evolvable for ComplexField {
    fn grid(&self) -> &SpatialGrid {
        ComplexField::grid(self)
    }
    fn component_count(&self) -> usize {
        1
    }
    fn component_mut(&mut self, _: usize) -> &mut ComplexField {
        self
    }
    fn component(&self, _: usize) -> &ComplexField {
        self
    }
}

impl Evolvable for SpinorField {
    fn grid(&self) -> &SpatialGrid {
        SpinorField::grid(self)
    }
    fn component_count(&self) -> usize {
        2
    }
    fn component_mut(&mut self, i: usize) -> &mut ComplexField {
        let (up, down) = self.components_mut();
        if i == 0 {
            up
        } else {
            down
        }
    }
    fn component(&self, i: usize) -> &ComplexField {
        if i == 0 {
            self.up()
        } else {
            self.down()
        }
    }
}

/// Second-order (Strang) split-operator stepper: half potential kick,
/// full kinetic step in Fourier space, half potential kick.
pub struct Propagator {
    spectral: Spectral,
    kinetic: Vec<Complex64>,
    /// Half-step potential phases per component; `None` for free motion.
    half_kick: Vec<Option<Vec<Complex64>>>,
    dt: f64,
}

impl std::fmt::Debug for Propagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Propagator").field("dt", &self.dt).finish()
    }
}

impl Propagator {
    pub fn new(grid: &SpatialGrid, components: usize, potential: &PotentialSpec, dt: f64, units: &UnitsConfig) -> Result<Self> {
        units.validate()?;
        let spectral = Spectral::new(grid);
        let kin = units.hbar * dt / (2.0 * units.mass);
        let kinetic = spectral
            .k_squared()
            .iter()
            .map(|k2| Complex64::from_polar(1.0, -kin * k2))
            .collect();
        let kick = |v: &[f64]| -> Vec<Complex64> {
            v.iter()
                .map(|&e| Complex64::from_polar(1.0, -e * dt / (2.0 * units.hbar)))
                .collect()
        };
        let half_kick = match potential {
            PotentialSpec::Free => vec![None; components],
            PotentialSpec::Sampled(values) => {
                if values.len() != grid.len() {
                    return Err(Error::invalid(format!(
                        "sampled potential has {} values for {} grid points",
                        values.len(),
                        grid.len()
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("sampled potential contains non-finite values"));
                }
                vec![Some(kick(values)); components]
            }
            PotentialSpec::LinearSpinDependent { gradient, offset } => {
                if components != 2 {
                    return Err(Error::Unsupported(
                        "the spin-dependent linear potential acts on spinor fields only".into(),
                    ));
                }
                let dims = grid.dims();
                let up: Vec<f64> = (0..grid.len())
                    .map(|i| {
                        let z = grid.point(i)[dims - 1];
                        -0.5 * units.hbar * (offset + gradient * z)
                    })
                    .collect();
                let down: Vec<f64> = up.iter().map(|v| -v).collect();
                vec![Some(kick(&up)), Some(kick(&down))]
            }
        };
        Ok(Propagator {
            spectral,
            kinetic,
            half_kick,
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step<S: Evolvable>(&self, state: &mut S) {
        for c in 0..state.component_count() {
            let field = state.component_mut(c);
            let values = field.values_mut();
            if let Some(kick) = &self.half_kick[c] {
                values.iter_mut().zip(kick).for_each(|(v, k)| *v *= k);
            }
            self.spectral.forward(values);
            values.iter_mut().zip(&self.kinetic).for_each(|(v, k)| *v *= k);
            self.spectral.inverse(values);
            if let Some(kick) = &self.half_kick[c] {
                values.iter_mut().zip(kick).for_each(|(v, k)| *v *= k);
            }
        }
    }
}

/// Largest boundary-band density relative to the peak, or `None` if any
/// amplitude is non-finite.
pub fn boundary_ratio(grid: &SpatialGrid, density: &[f64]) -> Option<f64> {
    let mut peak = 0.0f64;
    for &d in density {
        if !d.is_finite() {
            return None;
        }
        peak = peak.max(d);
    }
    if peak == 0.0 {
        return Some(0.0);
    }
    let band = |i: usize, n: usize| i < SUPPORT_GUARD_CELLS || i + SUPPORT_GUARD_CELLS >= n;
    let mut edge = 0.0f64;
    match grid.axes() {
        [a] => {
            for (i, &d) in density.iter().enumerate() {
                if band(i, a.n_points) {
                    edge = edge.max(d);
                }
            }
        }
        [a0, a1] => {
            let n1 = a1.n_points;
            for (idx, &d) in density.iter().enumerate() {
                if band(idx / n1, a0.n_points) || band(idx % n1, n1) {
                    edge = edge.max(d);
                }
            }
        }
        _ => unreachable!(),
    }
    Some(edge / peak)
}

fn check_state<S: Evolvable>(state: &S, step: usize, time: f64, guard: bool) -> Result<()> {
    match boundary_ratio(state.grid(), &state.total_density()) {
        None => Err(Error::NonFinite { step }),
        Some(ratio) if guard && ratio >= SUPPORT_GUARD_RATIO => Err(Error::SupportGuard { step, time, ratio }),
        Some(_) => Ok(()),
    }
}

/// Propagates `state` under `potential`, calling `observe(step, time, state)`
/// at step 0 and every `frame_stride` steps. The support guard and the
/// finiteness check run after every step.
pub fn propagate_observed<S: Evolvable>(
    state: &S,
    potential: &PotentialSpec,
    plan: &PropagationPlan,
    units: &UnitsConfig,
    mut observe: impl FnMut(usize, f64, &S) -> Result<()>,
) -> Result<S> {
    plan.validate()?;
    let propagator = Propagator::new(state.grid(), state.component_count(), potential, plan.dt, units)?;
    let mut current = state.clone();
    check_state(&current, 0, 0.0, plan.support_guard)?;
    let stride = plan.frame_stride;
    if stride.is_some() {
        observe(0, 0.0, &current)?;
    }
    for step in 1..=plan.n_steps {
        propagator.step(&mut current);
        let t = step as f64 * plan.dt;
        check_state(&current, step, t, plan.support_guard)?;
        if let Some(s) = stride {
            if step % s == 0 {
                observe(step, t, &current)?;
            }
        }
    }
    Ok(current)
}

/// Propagates and keeps the requested frames.
pub fn propagate<S: Evolvable>(state: &S, potential: &PotentialSpec, plan: &PropagationPlan, units: &UnitsConfig) -> Result<Propagated<S>> {
    let mut frames = Vec::new();
    let final_state = propagate_observed(state, potential, plan, units, |step, time, s| {
        frames.push(Frame {
            step,
            time,
            state: s.clone(),
        });
        Ok(())
    })?;
    Ok(Propagated {
        state: final_state,
        frames,
    })
}

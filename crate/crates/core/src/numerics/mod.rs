//! Grids, wavefunctions and split-operator propagation.

pub mod cdf;
pub mod field;
pub mod gaussian;
pub mod grid;
pub mod propagate;
pub mod spectral;

pub use cdf::PiecewiseLinearCdf;
pub use field::{ComplexField, SpinorField, UnitsConfig};
pub use gaussian::{free_width, make_gaussian, marginal, moments, GaussianPacketSpec};
pub use grid::{Axis, SpatialGrid};
pub use propagate::{propagate, propagate_observed, Evolvable, Frame, PotentialSpec, Propagated, PropagationPlan, Propagator};
pub use spectral::Spectral;

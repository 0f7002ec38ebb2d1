//! Bohmian velocity fields, equilibrium sampling and trajectory integration.

pub mod sampling;
pub mod trajectory;
pub mod velocity;

pub use sampling::{sample_equilibrium, stream_rng, EquilibriumSample, GridSampler, SamplingMethod};
pub use trajectory::{integrate_trajectories, propagate_with_trajectories, write_trajectories_csv, EnsembleIntegrator, Trajectory};
pub use velocity::{
    gordon_velocity, velocity_scalar, velocity_spinor, GuidingField, VelocityEval, VelocityFrame, VelocityModel, NODE_EPSILON,
};

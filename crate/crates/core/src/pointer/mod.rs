//! Analytic branched-Gaussian pointer model over a system coordinate and
//! blocks of apparatus coordinates.

pub mod ensemble;
pub mod model;
pub mod schedule;

pub use ensemble::{integrate_pointer, PointerRunOptions, PointerTrajectory};
pub use model::{ApparatusBlock, Branch, PointerModel, DEFAULT_RATIO_THRESHOLD, EMPTY_WAVE_RATIO};
pub use schedule::Schedule;

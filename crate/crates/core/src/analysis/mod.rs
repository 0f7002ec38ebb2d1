//! Statistical verdicts over completed runs.

pub mod accuracy;
pub mod attribution;
pub mod crossing;
pub mod ks;

pub use accuracy::{predictor_accuracy, Accuracy, WILSON_Z};
pub use attribution::{attribute, AttributionThresholds, AttributionVerdict, Determinant};
pub use crossing::crossing_audit;
pub use ks::{born_rule_ks, MixtureComponent, ReferenceCdf, MIN_KS_SAMPLES};

use serde::{Deserialize, Serialize};

use crate::outcome::Outcome;

/// Two-sided 95% normal quantile used for Wilson intervals.
pub const WILSON_Z: f64 = 1.959963984540054;

/// Fraction of resolved runs on which a predictor matched the outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub correct: usize,
    pub resolved: usize,
    pub fraction: f64,
    /// Wilson interval half-width.
    pub radius: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Accuracy {
    pub fn from_counts(correct: usize, resolved: usize) -> Option<Self> {
        if resolved == 0 || correct > resolved {
            return None;
        }
        let n = resolved as f64;
        let p = correct as f64 / n;
        let z2 = WILSON_Z * WILSON_Z;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let radius = WILSON_Z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        Some(Accuracy {
            correct,
            resolved,
            fraction: p,
            radius,
            lower: (center - radius).max(0.0),
            upper: (center + radius).min(1.0),
        })
    }
}

/// Accuracy of `(outcome, prediction)` pairs over runs with a resolved
/// outcome. A tied prediction counts as wrong. `None` when no run resolved.
pub fn predictor_accuracy(pairs: impl IntoIterator<Item = (Outcome, Outcome)>) -> Option<Accuracy> {
    let (mut correct, mut resolved) = (0, 0);
    for (outcome, predicted) in pairs {
        if outcome.is_resolved() {
            resolved += 1;
            if predicted == outcome {
                correct += 1;
            }
        }
    }
    Accuracy::from_counts(correct, resolved)
}

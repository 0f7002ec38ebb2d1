use std::fmt;

use serde::{Deserialize, Serialize};

use crate::analysis::accuracy::Accuracy;

/// Accuracy thresholds for the determinant verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttributionThresholds {
    /// Accuracy a predictor needs to be called decisive.
    pub high: f64,
    /// Accuracy at or below which a predictor is called uninformative.
    pub low: f64,
}

impl Default for AttributionThresholds {
    fn default() -> Self {
        crate::scenarios::config::defaults::ATTRIBUTION
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Determinant {
    #[serde(rename = "S_determined")]
    SDetermined,
    #[serde(rename = "M_determined")]
    MDetermined,
    #[serde(rename = "mixed")]
    Mixed,
    #[serde(rename = "indeterminate")]
    Indeterminate,
}

impl fmt::Display for Determinant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Determinant::SDetermined => "S_determined",
            Determinant::MDetermined => "M_determined",
            Determinant::Mixed => "mixed",
            Determinant::Indeterminate => "indeterminate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionVerdict {
    pub label: Determinant,
    pub system: Option<Accuracy>,
    /// Best of the measuring-side predictors.
    pub measuring: Option<Accuracy>,
    /// Name of the measuring-side predictor used.
    pub measuring_predictor: String,
    pub thresholds: AttributionThresholds,
}

/// Verdict from the system accuracy and the measuring-side accuracy.
pub fn attribute(
    system: Option<Accuracy>,
    measuring: Option<Accuracy>,
    measuring_predictor: &str,
    thresholds: AttributionThresholds,
) -> AttributionVerdict {
    let AttributionThresholds { high, low } = thresholds;
    let label = match (system, measuring) {
        (Some(s), Some(m)) => {
            let (s, m) = (s.fraction, m.fraction);
            let between = |a: f64| a > low && a < high;
            if s >= high && m <= low {
                Determinant::SDetermined
            } else if m >= high && s <= low {
                Determinant::MDetermined
            } else if between(s) && between(m) {
                Determinant::Mixed
            } else {
                Determinant::Indeterminate
            }
        }
        _ => Determinant::Indeterminate,
    };
    AttributionVerdict {
        label,
        system,
        measuring,
        measuring_predictor: measuring_predictor.to_string(),
        thresholds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn acc(f: f64) -> Option<Accuracy> {
        Accuracy::from_counts((f * 1000.0).round() as usize, 1000)
    }

    fn t() -> AttributionThresholds {
        AttributionThresholds { high: 0.99, low: 0.6 }
    }

    #[test]
    fn labels_follow_the_rule() {
        assert_eq!(attribute(acc(1.0), acc(0.5), "apparatus", t()).label, Determinant::SDetermined);
        assert_eq!(attribute(acc(0.52), acc(0.995), "apparatus", t()).label, Determinant::MDetermined);
        assert_eq!(attribute(acc(0.8), acc(0.75), "apparatus", t()).label, Determinant::Mixed);
        assert_eq!(attribute(acc(0.95), acc(0.5), "apparatus", t()).label, Determinant::Indeterminate);
        assert_eq!(attribute(None, acc(1.0), "apparatus", t()).label, Determinant::Indeterminate);
    }

    proptest! {
        #[test]
        fn raising_the_high_threshold_never_creates_s_determined(s in 0.0f64..=1.0, m in 0.0f64..=1.0, h1 in 0.61f64..1.0, dh in 0.0f64..0.3) {
            let h2 = (h1 + dh).min(1.0);
            let a = attribute(acc(s), acc(m), "m", AttributionThresholds { high: h1, low: 0.6 });
            let b = attribute(acc(s), acc(m), "m", AttributionThresholds { high: h2, low: 0.6 });
            prop_assert!(!(b.label == Determinant::SDetermined && a.label != Determinant::SDetermined));
            // pure function
            prop_assert_eq!(a.clone(), attribute(acc(s), acc(m), "m", AttributionThresholds { high: h1, low: 0.6 }));
        }
    }
}

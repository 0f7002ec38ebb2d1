use serde::{Deserialize, Serialize};
use std::fmt;

/// Label of a two-branch measurement: which branch holds the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Plus,
    Minus,
    Unresolved,
}

impl Outcome {
    pub fn is_resolved(self) -> bool {
        self != Outcome::Unresolved
    }

    pub fn flipped(self) -> Outcome {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
            Outcome::Unresolved => Outcome::Unresolved,
        }
    }

    /// `Plus` for positive values, `Minus` for negative, `Unresolved` for 0 or NaN.
    pub fn from_sign(v: f64) -> Outcome {
        if v > 0.0 {
            Outcome::Plus
        } else if v < 0.0 {
            Outcome::Minus
        } else {
            Outcome::Unresolved
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Plus => "plus",
            Outcome::Minus => "minus",
            Outcome::Unresolved => "unresolved",
        })
    }
}

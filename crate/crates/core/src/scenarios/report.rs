//! Report types produced by the scenario drivers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::{predictor_accuracy, Accuracy, AttributionVerdict};
use crate::guidance::Trajectory;
use crate::outcome::Outcome;
use crate::scenarios::config::ScenarioKind;

/// Unresolved fraction above which a report is marked degraded.
pub const DEGRADED_UNRESOLVED_FRACTION: f64 = 0.1;

/// One run of an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub id: usize,
    /// Initial system position (one coordinate per grid axis).
    pub system_initial: Vec<f64>,
    /// Initial sum of the ancilla coordinates, when there are any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ancilla_sum: Option<f64>,
    /// Initial sum of the apparatus coordinates, when there are any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub apparatus_sum: Option<f64>,
    pub outcome: Outcome,
    pub predictions: BTreeMap<String, Outcome>,
    /// Final system position.
    pub system_final: Vec<f64>,
    pub regularizations: usize,
}

/// Overlap time series of the two branches.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OverlapSeries {
    pub t: Vec<f64>,
    pub system: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ancilla: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub apparatus: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quality {
    Ok,
    Degraded,
}

/// Aggregated results of one ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub label: String,
    pub parameters: BTreeMap<String, f64>,
    pub n: usize,
    pub n_resolved: usize,
    pub n_unresolved: usize,
    pub unresolved_fraction: f64,
    /// Outcome frequencies over resolved runs.
    pub frequencies: BTreeMap<String, f64>,
    /// Predictor accuracies over resolved runs; `null` when none resolved.
    pub accuracies: BTreeMap<String, Option<Accuracy>>,
    pub regularized_runs: usize,
    pub regularization_events: usize,
    pub quality: Quality,
    pub overlaps: OverlapSeries,
    /// Invariant checks and diagnostics specific to the scenario.
    pub audits: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<AttributionVerdict>,
    pub runs: Vec<RunRecord>,
}

impl EnsembleReport {
    /// Fills in the aggregates from the run records.
    pub fn from_runs(label: impl Into<String>, runs: Vec<RunRecord>, overlaps: OverlapSeries) -> Self {
        let n = runs.len();
        let n_resolved = runs.iter().filter(|r| r.outcome.is_resolved()).count();
        let n_unresolved = n - n_resolved;
        let mut frequencies = BTreeMap::new();
        for label in [Outcome::Plus, Outcome::Minus] {
            let c = runs.iter().filter(|r| r.outcome == label).count();
            let f = if n_resolved == 0 { 0.0 } else { c as f64 / n_resolved as f64 };
            frequencies.insert(label.to_string(), f);
        }
        let names: std::collections::BTreeSet<&String> = runs.iter().flat_map(|r| r.predictions.keys()).collect();
        let accuracies = names
            .into_iter()
            .map(|name| {
                let acc = predictor_accuracy(runs.iter().map(|r| (r.outcome, r.predictions[name])));
                (name.clone(), acc)
            })
            .collect();
        let unresolved_fraction = if n == 0 { 0.0 } else { n_unresolved as f64 / n as f64 };
        EnsembleReport {
            label: label.into(),
            parameters: BTreeMap::new(),
            n,
            n_resolved,
            n_unresolved,
            unresolved_fraction,
            frequencies,
            accuracies,
            regularized_runs: runs.iter().filter(|r| r.regularizations > 0).count(),
            regularization_events: runs.iter().map(|r| r.regularizations).sum(),
            quality: if unresolved_fraction > DEGRADED_UNRESOLVED_FRACTION {
                Quality::Degraded
            } else {
                Quality::Ok
            },
            overlaps,
            audits: BTreeMap::new(),
            verdict: None,
            runs,
        }
    }

    pub fn accuracy(&self, predictor: &str) -> Option<Accuracy> {
        self.accuracies.get(predictor).copied().flatten()
    }

    pub fn frequency(&self, outcome: Outcome) -> f64 {
        self.frequencies.get(&outcome.to_string()).copied().unwrap_or(0.0)
    }

    pub fn with_parameter(mut self, name: &str, value: f64) -> Self {
        self.parameters.insert(name.to_string(), value);
        self
    }

    pub fn audit(&mut self, name: &str, value: impl Into<Value>) {
        self.audits.insert(name.to_string(), value.into());
    }
}

/// One cell of the ancilla-chain regime table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeCell {
    pub n_prime: usize,
    /// Initial S-branch separation in units of the system width.
    pub separation: f64,
    pub stage1_speed: f64,
    pub system_accuracy: Option<f64>,
    pub ancilla_accuracy: Option<f64>,
    pub apparatus_accuracy: Option<f64>,
    pub verdict: String,
    /// Predictor that decided the measuring-side accuracy.
    pub determinant: String,
}

/// Everything a scenario run produces, in deterministic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: ScenarioKind,
    pub seed: u64,
    /// Ensembles in run order; `primary` indexes the one whose
    /// trajectories and overlaps are exported.
    pub ensembles: Vec<EnsembleReport>,
    pub primary: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regime_table: Option<Vec<RegimeCell>>,
    pub audits: BTreeMap<String, Value>,
}

impl ScenarioReport {
    pub fn primary(&self) -> &EnsembleReport {
        &self.ensembles[self.primary]
    }

    pub fn ensemble(&self, label: &str) -> Option<&EnsembleReport> {
        self.ensembles.iter().find(|e| e.label == label)
    }

    /// Deterministic pretty JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize to JSON")
    }
}

/// Trajectories of the primary ensemble, ready for CSV export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryTable {
    pub coord_names: Vec<String>,
    pub trajectories: Vec<Trajectory>,
}

/// Report plus exportable trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub report: ScenarioReport,
    pub trajectories: TrajectoryTable,
}

//! Equivariance diagnostics: endpoint distributions against |ψ(T)|² for
//! each scenario, without the measurement bookkeeping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenarios::config::{ScenarioConfig, ScenarioKind};
use crate::scenarios::{run_ancilla_chain, run_beam_splitter, run_optical_sg, run_stern_gerlach};

/// Largest KS statistic accepted as agreement with the quantum density.
pub const KS_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BornCheckEntry {
    pub scenario: ScenarioKind,
    pub n: usize,
    pub ks: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BornCheckReport {
    pub seed: u64,
    pub threshold: f64,
    pub entries: Vec<BornCheckEntry>,
}

impl BornCheckReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize to JSON")
    }
}

/// Config reduced to the single primary ensemble of `kind` with `n` runs.
fn reduced(config: &ScenarioConfig, kind: ScenarioKind, n: usize) -> ScenarioConfig {
    let mut c = config.clone();
    c.scenario = Some(kind);
    match kind {
        ScenarioKind::BeamSplitter => c.beam_splitter.n = n,
        ScenarioKind::SternGerlach => {
            c.stern_gerlach.n = n;
            c.stern_gerlach.twin = false;
            c.stern_gerlach.gordon = false;
        }
        ScenarioKind::OpticalSg => {
            let o = &mut c.optical_sg;
            o.n = n;
            o.n_values = vec![*o.n_values.iter().max().unwrap_or(&1)];
            o.control_separation = 0.0;
        }
        ScenarioKind::AncillaChain => {
            let a = &mut c.ancilla_chain;
            a.n = n;
            a.n_prime_values = vec![*a.n_prime_values.iter().max().unwrap_or(&1)];
            a.separations = vec![a.separations.iter().copied().fold(f64::INFINITY, f64::min)];
        }
    }
    c
}

pub fn run_born_check(config: &ScenarioConfig) -> Result<BornCheckReport> {
    config.validate()?;
    let b = &config.born_check;
    let mut entries = Vec::with_capacity(b.scenarios.len());
    for &kind in &b.scenarios {
        let c = reduced(config, kind, b.n);
        let out = match kind {
            ScenarioKind::BeamSplitter => run_beam_splitter(&c),
            ScenarioKind::SternGerlach => run_stern_gerlach(&c),
            ScenarioKind::OpticalSg => run_optical_sg(&c),
            ScenarioKind::AncillaChain => run_ancilla_chain(&c),
        }?;
        let ks = out
            .report
            .primary()
            .audits
            .get("ks_endpoints")
            .and_then(|v| v.as_f64())
            .ok_or_else(|| Error::invalid(format!("{} produced no endpoint KS statistic", kind.as_str())))?;
        entries.push(BornCheckEntry {
            scenario: kind,
            n: b.n,
            ks,
            pass: ks < KS_THRESHOLD,
        });
    }
    Ok(BornCheckReport {
        seed: config.seed,
        threshold: KS_THRESHOLD,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pointer_scenarios_pass_at_moderate_size() {
        let mut c = ScenarioConfig::default();
        c.born_check.n = 300;
        c.born_check.scenarios = vec![ScenarioKind::OpticalSg];
        c.optical_sg.n_values = vec![4];
        let r = run_born_check(&c).unwrap();
        assert_eq!(r.entries.len(), 1);
        assert!(r.entries[0].ks < 0.1, "ks {}", r.entries[0].ks);
    }

    #[test]
    fn too_few_runs_is_reported() {
        let mut c = ScenarioConfig::default();
        c.born_check.n = 20;
        c.born_check.scenarios = vec![ScenarioKind::OpticalSg];
        assert!(run_born_check(&c).is_err());
    }
}

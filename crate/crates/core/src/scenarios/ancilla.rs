//! Ancilla chain: the system is copied onto an N′-particle ancilla during
//! [0, t1], and the ancilla onto an N-particle apparatus during [t1, t2].

use std::collections::BTreeMap;

use serde_json::json;

use crate::analysis::attribute;
use crate::error::Result;
use crate::pointer::{ApparatusBlock, PointerTrajectory, Schedule};
use crate::scenarios::config::{AncillaChainConfig, ScenarioConfig, ScenarioKind};
use crate::scenarios::optical_sg::{build_model, pointer_ensemble, SystemSpec};
use crate::scenarios::pointer_table;
use crate::scenarios::report::{EnsembleReport, RegimeCell, ScenarioOutput, ScenarioReport};

const BLOCKS: [&str; 2] = ["ancilla", "apparatus"];

fn blocks(c: &AncillaChainConfig, n_prime: usize) -> Result<Vec<ApparatusBlock>> {
    Ok(vec![
        ApparatusBlock {
            name: BLOCKS[0].into(),
            count: n_prime,
            sigma: c.ancilla_sigma,
            ramp: Schedule::ramp(0.0, c.stage1_end, c.ancilla_displacement)?,
        },
        ApparatusBlock {
            name: BLOCKS[1].into(),
            count: c.n_apparatus,
            sigma: c.apparatus_sigma,
            ramp: Schedule::ramp(c.stage1_end, c.stage2_end, c.apparatus_displacement)?,
        },
    ])
}

fn cell_label(n_prime: usize, separation: f64) -> String {
    format!("N'={n_prime},d0={separation}")
}

/// Runs one (N′, separation) cell.
fn run_cell(config: &ScenarioConfig, n_prime: usize, separation: f64) -> Result<(EnsembleReport, Vec<PointerTrajectory>, RegimeCell)> {
    let c = &config.ancilla_chain;
    let system = SystemSpec {
        amplitudes: c.amplitudes,
        sigma: c.system_sigma,
        separation: separation * c.system_sigma,
        speed: c.system_speed,
    };
    let model = build_model(&system, blocks(c, n_prime)?, c.stage2_end, c.spreading, &config.units)?;
    let (ens, trajs) = pointer_ensemble(
        &cell_label(n_prime, separation),
        &model,
        c.n,
        config.seed,
        &c.steps,
        config.ratio_threshold,
    )?;
    let stage1_speed = c.ancilla_displacement / c.stage1_end;
    let mut ens = ens
        .with_parameter("n_prime", n_prime as f64)
        .with_parameter("separation", separation)
        .with_parameter("stage1_speed", stage1_speed);

    let (anc, app) = (ens.accuracy(BLOCKS[0]), ens.accuracy(BLOCKS[1]));
    let fraction = |a: Option<crate::analysis::Accuracy>| a.map_or(f64::NEG_INFINITY, |a| a.fraction);
    let (best_name, best) = if fraction(app) > fraction(anc) {
        (BLOCKS[1], app)
    } else {
        (BLOCKS[0], anc)
    };
    let verdict = attribute(ens.accuracy("system"), best, best_name, config.attribution);
    let cell = RegimeCell {
        n_prime,
        separation,
        stage1_speed,
        system_accuracy: ens.accuracy("system").map(|a| a.fraction),
        ancilla_accuracy: anc.map(|a| a.fraction),
        apparatus_accuracy: app.map(|a| a.fraction),
        verdict: verdict.label.to_string(),
        determinant: best_name.to_string(),
    };
    ens.verdict = Some(verdict);
    Ok((ens, trajs, cell))
}

pub fn run_ancilla_chain(config: &ScenarioConfig) -> Result<ScenarioOutput> {
    config.validate()?;
    let c = &config.ancilla_chain;
    let mut ensembles = Vec::new();
    let mut table = Vec::new();
    let mut primary = 0;
    let mut primary_trajs = Vec::new();
    let max_prime = *c.n_prime_values.iter().max().expect("validated non-empty");
    let min_sep = c.separations.iter().copied().fold(f64::INFINITY, f64::min);
    for &n_prime in &c.n_prime_values {
        for &separation in &c.separations {
            let (ens, trajs, cell) = run_cell(config, n_prime, separation)?;
            if n_prime == max_prime && separation == min_sep && primary_trajs.is_empty() {
                primary = ensembles.len();
                primary_trajs = trajs;
            }
            ensembles.push(ens);
            table.push(cell);
        }
    }

    let mut audits = BTreeMap::new();
    let mut seen: Vec<&str> = table.iter().map(|c| c.verdict.as_str()).collect();
    seen.sort_unstable();
    seen.dedup();
    audits.insert("verdicts_present".into(), json!(seen));

    let names: Vec<String> = BLOCKS.iter().map(|s| s.to_string()).collect();
    let report = ScenarioReport {
        scenario: ScenarioKind::AncillaChain,
        seed: config.seed,
        ensembles,
        primary,
        regime_table: Some(table),
        audits,
    };
    Ok(ScenarioOutput {
        report,
        trajectories: pointer_table(&primary_trajs, &names),
    })
}

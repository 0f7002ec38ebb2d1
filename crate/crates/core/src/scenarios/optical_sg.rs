//! Optical Stern-Gerlach: co-located system branches read out by an
//! N-coordinate pointer, swept over N.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde_json::json;

use crate::analysis::{attribute, born_rule_ks, MixtureComponent, ReferenceCdf, MIN_KS_SAMPLES};
use crate::error::Result;
use crate::numerics::UnitsConfig;
use crate::outcome::Outcome;
use crate::pointer::{integrate_pointer, ApparatusBlock, Branch, PointerModel, PointerRunOptions, PointerTrajectory, Schedule};
use crate::scenarios::config::{complex, Amplitude, PointerStepConfig, ScenarioConfig, ScenarioKind};
use crate::scenarios::pointer_table;
use crate::scenarios::report::{EnsembleReport, OverlapSeries, RunRecord, ScenarioOutput, ScenarioReport};

/// System part shared by the pointer scenarios.
pub(crate) struct SystemSpec {
    pub amplitudes: [Amplitude; 2],
    pub sigma: f64,
    /// Distance between the two system centres at t = 0.
    pub separation: f64,
    /// Each branch drifts at ±speed over the whole run.
    pub speed: f64,
}

pub(crate) fn build_model(
    system: &SystemSpec,
    blocks: Vec<ApparatusBlock>,
    duration: f64,
    spreading: bool,
    units: &UnitsConfig,
) -> Result<PointerModel> {
    let norm = (complex(system.amplitudes[0]).norm_sqr() + complex(system.amplitudes[1]).norm_sqr()).sqrt();
    let amp = |a: Amplitude| complex(a) / Complex64::new(norm, 0.0);
    let half = 0.5 * system.separation;
    PointerModel::new(
        [
            Branch {
                label: Outcome::Plus,
                amplitude: amp(system.amplitudes[0]),
                system_center: Schedule::drift(half, system.speed, duration)?,
                apparatus_sign: 1.0,
            },
            Branch {
                label: Outcome::Minus,
                amplitude: amp(system.amplitudes[1]),
                system_center: Schedule::drift(-half, -system.speed, duration)?,
                apparatus_sign: -1.0,
            },
        ],
        system.sigma,
        blocks,
        duration,
        spreading,
        *units,
    )
}

/// Samples, integrates and records one pointer ensemble.
pub(crate) fn pointer_ensemble(
    label: &str,
    model: &PointerModel,
    n: usize,
    seed: u64,
    steps: &PointerStepConfig,
    ratio_threshold: f64,
) -> Result<(EnsembleReport, Vec<PointerTrajectory>)> {
    let initial: Vec<Vec<f64>> = (0..n as u64).map(|i| model.sample_initial(seed, i)).collect();
    let opts = PointerRunOptions {
        n_records: steps.n_records,
        max_step: steps.max_step,
        ratio_threshold,
    };
    let trajs = integrate_pointer(model, &initial, &opts)?;
    let names: Vec<String> = model.blocks().iter().map(|b| b.name.clone()).collect();
    let runs = trajs
        .iter()
        .map(|t| {
            let mut predictions = BTreeMap::new();
            predictions.insert("system".to_string(), model.predictor_system(t.initial[0]));
            let mut sums = BTreeMap::new();
            for (k, name) in names.iter().enumerate() {
                let y0 = &t.initial[model.block_range(k)];
                predictions.insert(name.clone(), model.predictor_block(k, y0));
                sums.insert(name.as_str(), y0.iter().sum::<f64>());
            }
            RunRecord {
                id: t.id,
                system_initial: vec![t.initial[0]],
                ancilla_sum: sums.get("ancilla").copied(),
                apparatus_sum: sums.get("apparatus").copied(),
                outcome: t.outcome,
                predictions,
                system_final: vec![t.last[0]],
                regularizations: t.regularizations,
            }
        })
        .collect();

    let times = trajs.first().map(|t| t.times.clone()).unwrap_or_default();
    let block_series = |name: &str| {
        names
            .iter()
            .position(|n| n == name)
            .map(|k| times.iter().map(|&t| model.block_overlap(k, t)).collect::<Vec<f64>>())
    };
    let overlaps = OverlapSeries {
        system: times.iter().map(|&t| model.system_overlap(t)).collect(),
        ancilla: block_series("ancilla"),
        apparatus: block_series("apparatus"),
        t: times.clone(),
    };
    let mut ens = EnsembleReport::from_runs(label, runs, overlaps);

    // log O = N log ω, checked on the stored series
    let law = (0..model.blocks().len())
        .flat_map(|k| {
            let count = model.blocks()[k].count as f64;
            times.iter().map(move |&t| (k, t, count))
        })
        .map(|(k, t, count)| {
            let logged = model.block_overlap(k, t).ln();
            let expect = count * model.single_overlap(k, t).ln();
            if logged.is_finite() && expect.is_finite() {
                (logged - expect).abs() / expect.abs().max(1.0)
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    ens.audit("overlap_exponent_law_max_rel_error", law);

    let endpoints: Vec<f64> = trajs.iter().map(|t| t.last[0]).collect();
    let t_end = model.duration();
    let mixture = model
        .branches()
        .iter()
        .filter(|b| b.amplitude.norm_sqr() > 0.0)
        .map(|b| MixtureComponent {
            weight: b.amplitude.norm_sqr(),
            mean: b.system_center.value(t_end),
            sigma: model.system_width(t_end),
        })
        .collect();
    let ks = if endpoints.len() >= MIN_KS_SAMPLES {
        Some(born_rule_ks(&endpoints, &ReferenceCdf::Mixture(mixture))?)
    } else {
        None
    };
    ens.audit("ks_endpoints", json!(ks));
    Ok((ens, trajs))
}

pub fn run_optical_sg(config: &ScenarioConfig) -> Result<ScenarioOutput> {
    config.validate()?;
    let o = &config.optical_sg;
    let make = |n_app: usize, separation: f64| {
        build_model(
            &SystemSpec {
                amplitudes: o.amplitudes,
                sigma: o.system_sigma,
                separation,
                speed: o.system_speed,
            },
            vec![ApparatusBlock {
                name: "apparatus".into(),
                count: n_app,
                sigma: o.apparatus_sigma,
                ramp: Schedule::ramp(0.0, o.ramp_time, o.displacement)?,
            }],
            o.duration,
            o.spreading,
            &config.units,
        )
    };
    let mut ensembles = Vec::new();
    let mut primary_trajs = Vec::new();
    let largest = *o.n_values.iter().max().expect("validated non-empty");
    for &n_app in &o.n_values {
        let model = make(n_app, o.initial_separation)?;
        let (mut ens, trajs) = pointer_ensemble(&format!("N={n_app}"), &model, o.n, config.seed, &o.steps, config.ratio_threshold)?;
        ens = ens
            .with_parameter("N", n_app as f64)
            .with_parameter("initial_separation", o.initial_separation);
        ens.verdict = Some(attribute(
            ens.accuracy("system"),
            ens.accuracy("apparatus"),
            "apparatus",
            config.attribution,
        ));
        if n_app == largest && primary_trajs.is_empty() {
            primary_trajs = trajs;
        }
        ensembles.push(ens);
    }
    let primary = o.n_values.iter().position(|&n| n == largest).expect("largest is listed");

    let mut audits = BTreeMap::new();
    let app: Vec<f64> = ensembles
        .iter()
        .map(|e| e.accuracy("apparatus").map_or(f64::NAN, |a| a.fraction))
        .collect();
    let mut order: Vec<usize> = (0..o.n_values.len()).collect();
    order.sort_by_key(|&i| o.n_values[i]);
    let monotone = order.windows(2).all(|w| app[w[1]] >= app[w[0]]);
    audits.insert("apparatus_accuracy_non_decreasing".into(), json!(monotone));

    if o.control_separation > 0.0 {
        let sep = o.control_separation * o.system_sigma;
        let model = make(largest, sep)?;
        let (mut ens, _) = pointer_ensemble("control_preseparated", &model, o.n, config.seed, &o.steps, config.ratio_threshold)?;
        ens = ens.with_parameter("N", largest as f64).with_parameter("initial_separation", sep);
        ens.verdict = Some(attribute(
            ens.accuracy("system"),
            ens.accuracy("apparatus"),
            "apparatus",
            config.attribution,
        ));
        ensembles.push(ens);
    }

    let report = ScenarioReport {
        scenario: ScenarioKind::OpticalSg,
        seed: config.seed,
        ensembles,
        primary,
        regime_table: None,
        audits,
    };
    Ok(ScenarioOutput {
        report,
        trajectories: pointer_table(&primary_trajs, &["apparatus".to_string()]),
    })
}

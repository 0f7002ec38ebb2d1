//! Beam splitter followed by two detectors.
//!
//! The splitter output is prepared directly as a Gaussian times
//! c₁e^{ikx} + c₂e^{−ikx}. The two packets are propagated freely until
//! their overlap falls below the separation threshold; the branch holding
//! the particle at that moment then drives a pointer-model detector (D1 for
//! the right-moving packet, D2 for the left-moving one).

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde_json::json;

use crate::analysis::{attribute, born_rule_ks, crossing_audit, ReferenceCdf};
use crate::error::{Error, Result};
use crate::guidance::{propagate_with_trajectories, sample_equilibrium, VelocityModel};
use crate::numerics::{
    free_width, make_gaussian, ComplexField, GaussianPacketSpec, PiecewiseLinearCdf, PotentialSpec, PropagationPlan, Propagator,
    SpatialGrid,
};
use crate::outcome::Outcome;
use crate::pointer::{integrate_pointer, ApparatusBlock, Branch, PointerModel, PointerRunOptions, Schedule};
use crate::scenarios::config::{complex, ScenarioConfig, ScenarioKind};
use crate::scenarios::report::{EnsembleReport, OverlapSeries, RunRecord, ScenarioOutput, ScenarioReport, TrajectoryTable};
use crate::scenarios::{dominant_branch, exit_count};

/// Stream offset separating detector samples from system samples.
const DETECTOR_SEED_OFFSET: u64 = 0x5851_F42D_4C95_7F2D;

pub fn run_beam_splitter(config: &ScenarioConfig) -> Result<ScenarioOutput> {
    config.validate()?;
    let bs = &config.beam_splitter;
    let units = &config.units;
    let grid = SpatialGrid::new(vec![bs.grid.axis()?])?;
    let packet = |k: f64| make_gaussian(&grid, &GaussianPacketSpec::new_1d(bs.center, bs.sigma, k));
    let (right, left) = (packet(bs.wavenumber)?, packet(-bs.wavenumber)?);
    let (c1, c2) = (complex(bs.amplitudes[0]), complex(bs.amplitudes[1]));
    let mut psi0 = right.combine(c1, &left, c2)?;
    psi0.normalize()?;

    let sample = sample_equilibrium(&psi0, bs.n, config.seed)?;
    let initial = sample.positions.clone();

    // threshold separating the initial density into the D2 (left) mass and the D1 mass
    let mass_left = c2.norm_sqr() / (c1.norm_sqr() + c2.norm_sqr());
    let cdf0 = PiecewiseLinearCdf::new(grid.axis(0), &psi0.density())?;
    let split = cdf0.quantile(mass_left);

    let steps = bs.steps;
    let plan = PropagationPlan::new(steps.dt, steps.n_steps()).with_frames(steps.frame_stride);
    let component_stepper = Propagator::new(&grid, 1, &PotentialSpec::Free, steps.dt, units)?;
    let (mut r, mut l) = (right.clone(), left.clone());
    let mut overlaps = OverlapSeries::default();
    let mut separation: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let (final_state, trajectories) = propagate_with_trajectories(
        &psi0,
        &PotentialSpec::Free,
        &plan,
        units,
        VelocityModel::ScalarGuidance,
        &initial,
        steps.dt_traj,
        |step, t, _| {
            if step > 0 {
                for _ in 0..steps.frame_stride {
                    component_stepper.step(&mut r);
                    component_stepper.step(&mut l);
                }
            }
            let ov = r.modulus_overlap(&l)?;
            overlaps.t.push(t);
            overlaps.system.push(ov);
            if separation.is_none() && ov < bs.separation_overlap {
                let weighted = |f: &ComplexField, c: Complex64| f.density().iter().map(|d| d * c.norm_sqr()).collect::<Vec<f64>>();
                separation = Some((t, weighted(&r, c1), weighted(&l, c2)));
            }
            Ok(())
        },
    )?;
    let Some((t_sep, dens_right, dens_left)) = separation else {
        return Err(Error::Separation(format!(
            "beam-splitter packets still overlap above {} at t = {}",
            bs.separation_overlap, steps.duration
        )));
    };

    // detector stage: one pointer model per run, started at t_sep
    let det = &bs.detector;
    let hm = units.hbar_over_mass();
    let v = hm * bs.wavenumber;
    let width = free_width(bs.sigma, t_sep, units);
    let centre = |sign: f64| Schedule::drift(bs.center + sign * v * t_sep, sign * v, det.ramp_time);
    let amp = |c: Complex64| Complex64::new(c.norm() / (c1.norm_sqr() + c2.norm_sqr()).sqrt(), 0.0);
    let detector = PointerModel::new(
        [
            Branch {
                label: Outcome::Plus,
                amplitude: amp(c1),
                system_center: centre(1.0)?,
                apparatus_sign: 1.0,
            },
            Branch {
                label: Outcome::Minus,
                amplitude: amp(c2),
                system_center: centre(-1.0)?,
                apparatus_sign: -1.0,
            },
        ],
        width,
        vec![ApparatusBlock {
            name: "detector".into(),
            count: det.count,
            sigma: det.sigma,
            ramp: Schedule::ramp(0.0, det.ramp_time, det.displacement)?,
        }],
        det.ramp_time,
        false,
        *units,
    )?;
    let det_initial: Vec<Vec<f64>> = trajectories
        .iter()
        .enumerate()
        .map(|(i, tr)| {
            let mut q = detector.sample_initial(config.seed ^ DETECTOR_SEED_OFFSET, i as u64);
            q[0] = tr.position_at(t_sep).map_or(f64::NAN, |p| p[0]);
            q
        })
        .collect();
    if det_initial.iter().any(|q| !q[0].is_finite()) {
        return Err(Error::Separation(
            "a trajectory left the domain before the packets separated".into(),
        ));
    }
    let det_runs = integrate_pointer(
        &detector,
        &det_initial,
        &PointerRunOptions {
            n_records: steps.n_steps() / steps.frame_stride,
            max_step: steps.dt_traj,
            ratio_threshold: config.ratio_threshold,
        },
    )?;

    let mut runs = Vec::with_capacity(bs.n);
    let mut branch_mismatch = 0usize;
    let mut jumps = 0usize;
    for ((tr, x0), d) in trajectories.iter().zip(&initial).zip(&det_runs) {
        let x_sep = tr.position_at(t_sep).expect("checked above");
        let branch = dominant_branch(&grid, &dens_right, &dens_left, &x_sep, config.ratio_threshold);
        // the detector that fires must be the one attached to the branch
        let outcome = if branch.is_resolved() && d.outcome == branch {
            branch
        } else {
            Outcome::Unresolved
        };
        if branch.is_resolved() && d.outcome != branch {
            branch_mismatch += 1;
        }
        let side = |x: f64| (x - bs.center).signum();
        let s0 = side(x_sep[0]);
        if tr.times.iter().zip(&tr.points).any(|(&t, &x)| t >= t_sep && side(x) != s0) {
            jumps += 1;
        }
        let mut predictions = BTreeMap::new();
        predictions.insert("system".to_string(), Outcome::from_sign(x0[0] - split));
        predictions.insert(
            "apparatus".to_string(),
            detector.predictor_block(0, &d.initial[detector.block_range(0)]),
        );
        runs.push(RunRecord {
            id: tr.id,
            system_initial: x0.clone(),
            ancilla_sum: None,
            apparatus_sum: Some(d.initial[detector.block_range(0)].iter().sum()),
            outcome,
            predictions,
            system_final: tr.last().to_vec(),
            regularizations: tr.regularizations + d.regularizations,
        });
    }

    let mut ens = EnsembleReport::from_runs("beam_splitter", runs, overlaps)
        .with_parameter("t_sep", t_sep)
        .with_parameter("wavenumber", bs.wavenumber)
        .with_parameter("sigma", bs.sigma)
        .with_parameter("split_point", split);
    let endpoints: Vec<f64> = trajectories.iter().map(|t| t.last()[0]).collect();
    let ks = if endpoints.len() >= crate::analysis::MIN_KS_SAMPLES {
        Some(born_rule_ks(
            &endpoints,
            &ReferenceCdf::grid(grid.axis(0), &final_state.density())?,
        )?)
    } else {
        None
    };
    ens.audit("ks_endpoints", json!(ks));
    ens.audit("crossing_violations", crossing_audit(&trajectories)?);
    ens.audit("branch_jumps_after_separation", jumps);
    ens.audit("detector_branch_mismatches", branch_mismatch);
    ens.audit("exited_domain", exit_count(&trajectories));
    ens.audit("separation_in_widths", 2.0 * v * t_sep / width);
    ens.verdict = Some(attribute(
        ens.accuracy("system"),
        ens.accuracy("apparatus"),
        "apparatus",
        config.attribution,
    ));

    let report = ScenarioReport {
        scenario: ScenarioKind::BeamSplitter,
        seed: config.seed,
        ensembles: vec![ens],
        primary: 0,
        regime_table: None,
        audits: BTreeMap::new(),
    };
    Ok(ScenarioOutput {
        report,
        trajectories: TrajectoryTable {
            coord_names: vec!["x".into()],
            trajectories,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(amplitudes: [[f64; 2]; 2]) -> ScenarioConfig {
        let mut c = ScenarioConfig::default();
        c.beam_splitter.n = 120;
        c.beam_splitter.amplitudes = amplitudes;
        c
    }

    #[test]
    fn single_packet_always_fires_d1() {
        let out = run_beam_splitter(&small([[1.0, 0.0], [0.0, 0.0]])).unwrap();
        let e = out.report.primary();
        assert_eq!(e.frequency(Outcome::Plus), 1.0);
        assert_eq!(e.n_unresolved, 0);
    }

    #[test]
    fn balanced_splitter_is_system_determined() {
        let out = run_beam_splitter(&small(ScenarioConfig::default().beam_splitter.amplitudes)).unwrap();
        let e = out.report.primary();
        assert_eq!(e.accuracy("system").unwrap().fraction, 1.0);
        assert_eq!(e.audits["crossing_violations"], 0);
        assert_eq!(e.audits["branch_jumps_after_separation"], 0);
        assert_eq!(out.trajectories.trajectories.len(), 120);
    }

    #[test]
    fn packets_that_never_separate_are_reported() {
        let mut c = small(ScenarioConfig::default().beam_splitter.amplitudes);
        c.beam_splitter.steps.duration = 0.5;
        c.beam_splitter.steps.frame_stride = 1;
        assert!(matches!(run_beam_splitter(&c), Err(Error::Separation(_))));
    }
}

//! Stern-Gerlach deflection of a spin-½ packet, with the field-inverted
//! twin and an optional (y, z) run that adds the Gordon term.

use std::collections::BTreeMap;

use serde_json::json;

use crate::analysis::{born_rule_ks, crossing_audit, ReferenceCdf, MIN_KS_SAMPLES};
use crate::error::{Error, Result};
use crate::guidance::{
    propagate_with_trajectories, sample_equilibrium, EnsembleIntegrator, GuidingField, Trajectory, VelocityFrame, VelocityModel,
};
use crate::numerics::{
    make_gaussian, marginal, propagate_observed, Axis, GaussianPacketSpec, PiecewiseLinearCdf, PotentialSpec, PropagationPlan, SpatialGrid,
    SpinorField,
};
use crate::outcome::Outcome;
use crate::scenarios::config::{complex, ScenarioConfig, ScenarioKind, SternGerlachConfig};
use crate::scenarios::report::{EnsembleReport, OverlapSeries, RunRecord, ScenarioOutput, ScenarioReport, TrajectoryTable};
use crate::scenarios::{dominant_branch, exit_count};

/// Result of one propagation + ensemble pass.
struct Pass {
    trajectories: Vec<Trajectory>,
    final_state: SpinorField,
    overlaps: OverlapSeries,
}

fn spatial_overlap(s: &SpinorField) -> Result<f64> {
    let (nu, nd) = (s.up().norm(), s.down().norm());
    if nu == 0.0 || nd == 0.0 {
        return Ok(0.0);
    }
    Ok(s.up().modulus_overlap(s.down())? / (nu * nd))
}

fn initial_spinor(sg: &SternGerlachConfig, grid: &SpatialGrid) -> Result<SpinorField> {
    let spec = if grid.dims() == 1 {
        GaussianPacketSpec::new_1d(sg.center, sg.sigma, 0.0)
    } else {
        GaussianPacketSpec {
            center: vec![0.0, sg.center],
            sigma: vec![sg.transverse.sigma, sg.sigma],
            momentum: vec![0.0, 0.0],
            phase: 0.0,
        }
    };
    let spatial = make_gaussian(grid, &spec)?;
    Ok(SpinorField::product(complex(sg.amplitudes[0]), complex(sg.amplitudes[1]), &spatial))
}

fn plan(sg: &SternGerlachConfig) -> PropagationPlan {
    PropagationPlan::new(sg.steps.dt, sg.steps.n_steps()).with_frames(sg.steps.frame_stride)
}

fn run_pass(config: &ScenarioConfig, grid: &SpatialGrid, gradient: f64, initial: &[Vec<f64>]) -> Result<Pass> {
    let sg = &config.stern_gerlach;
    let psi0 = initial_spinor(sg, grid)?;
    let potential = PotentialSpec::LinearSpinDependent {
        gradient,
        offset: sg.offset,
    };
    let mut overlaps = OverlapSeries::default();
    let (final_state, trajectories) = propagate_with_trajectories(
        &psi0,
        &potential,
        &plan(sg),
        &config.units,
        VelocityModel::SpinorConvective,
        initial,
        sg.steps.dt_traj,
        |_, t, s| {
            overlaps.t.push(t);
            overlaps.system.push(spatial_overlap(s)?);
            Ok(())
        },
    )?;
    Ok(Pass {
        trajectories,
        final_state,
        overlaps,
    })
}

/// Outcome from the spin component dominating at the final position.
fn classify(state: &SpinorField, x: &[f64], threshold: f64) -> Outcome {
    dominant_branch(state.grid(), &state.up().density(), &state.down().density(), x, threshold)
}

/// Label of the spin component deflected towards +z.
fn upward(gradient: f64) -> Outcome {
    if gradient > 0.0 {
        Outcome::Plus
    } else {
        Outcome::Minus
    }
}

fn ensemble(label: &str, config: &ScenarioConfig, gradient: f64, pass: &Pass, initial: &[Vec<f64>], split: f64) -> Result<EnsembleReport> {
    let z_axis = pass.final_state.grid().dims() - 1;
    let up = upward(gradient);
    let mut iff_violations = 0usize;
    let runs: Vec<RunRecord> = pass
        .trajectories
        .iter()
        .zip(initial)
        .map(|(tr, x0)| {
            let outcome = if tr.exited() {
                Outcome::Unresolved
            } else {
                classify(&pass.final_state, tr.last(), config.ratio_threshold)
            };
            let z0 = x0[z_axis];
            // outcome is the upward-deflected spin iff z0 > 0
            if outcome.is_resolved() && (outcome == up) != (z0 > 0.0) {
                iff_violations += 1;
            }
            let side = Outcome::from_sign(z0 - split);
            let predicted = match side {
                Outcome::Plus => up,
                Outcome::Minus => up.flipped(),
                Outcome::Unresolved => Outcome::Unresolved,
            };
            let mut predictions = BTreeMap::new();
            predictions.insert("system".to_string(), predicted);
            RunRecord {
                id: tr.id,
                system_initial: x0.clone(),
                ancilla_sum: None,
                apparatus_sum: None,
                outcome,
                predictions,
                system_final: tr.last().to_vec(),
                regularizations: tr.regularizations,
            }
        })
        .collect();
    let mut ens = EnsembleReport::from_runs(label, runs, pass.overlaps.clone())
        .with_parameter("gradient", gradient)
        .with_parameter("split_point", split);
    let grid = pass.final_state.grid();
    let endpoints: Vec<f64> = pass.trajectories.iter().map(|t| t.last()[z_axis]).collect();
    let ks = if endpoints.len() >= MIN_KS_SAMPLES {
        let dens = marginal(grid, &pass.final_state.density(), z_axis);
        Some(born_rule_ks(&endpoints, &ReferenceCdf::grid(grid.axis(z_axis), &dens)?)?)
    } else {
        None
    };
    ens.audit("ks_endpoints", json!(ks));
    ens.audit("upward_iff_z0_positive_violations", iff_violations);
    ens.audit("exited_domain", exit_count(&pass.trajectories));
    if grid.dims() == 1 {
        ens.audit("crossing_violations", crossing_audit(&pass.trajectories)?);
    }
    Ok(ens)
}

/// Counts pairs of runs (same samples) that break the twin relation:
/// spin labels swapped, deflection side unchanged.
fn twin_audit(a: &EnsembleReport, b: &EnsembleReport, z_axis: usize) -> (usize, usize, usize) {
    let (mut checked, mut label_breaks, mut side_breaks) = (0, 0, 0);
    for (ra, rb) in a.runs.iter().zip(&b.runs) {
        if !(ra.outcome.is_resolved() && rb.outcome.is_resolved()) {
            continue;
        }
        checked += 1;
        if rb.outcome != ra.outcome.flipped() {
            label_breaks += 1;
        }
        if ra.system_final[z_axis].signum() != rb.system_final[z_axis].signum() {
            side_breaks += 1;
        }
    }
    (checked, label_breaks, side_breaks)
}

/// Threshold on z0 that splits the initial density into the downward and
/// upward deflected masses.
fn split_point(psi0: &SpinorField, gradient: f64) -> Result<f64> {
    let grid = psi0.grid();
    let z_axis = grid.dims() - 1;
    let down_mass = if gradient > 0.0 {
        psi0.down().norm_sqr()
    } else {
        psi0.up().norm_sqr()
    };
    let dens = marginal(grid, &psi0.density(), z_axis);
    Ok(PiecewiseLinearCdf::new(grid.axis(z_axis), &dens)?.quantile(down_mass / psi0.norm_sqr()))
}

/// The (y, z) run: one propagation with Gordon frames, two ensembles on the
/// same samples (with and without the Gordon term).
fn gordon_runs(config: &ScenarioConfig) -> Result<(EnsembleReport, EnsembleReport, Vec<Trajectory>)> {
    let sg = &config.stern_gerlach;
    let half = sg.transverse.half_width * sg.transverse.sigma;
    let grid = SpatialGrid::plane(Axis::new(sg.transverse.n_points, -half, half)?, sg.grid.axis()?)?;
    let psi0 = initial_spinor(sg, &grid)?;
    let sample = sample_equilibrium(&psi0, sg.n, config.seed)?;
    let split = split_point(&psi0, sg.gradient)?;
    let potential = PotentialSpec::LinearSpinDependent {
        gradient: sg.gradient,
        offset: sg.offset,
    };
    let mut with = EnsembleIntegrator::new(&sample.positions, 0.0, sg.steps.dt_traj)?;
    let mut without = EnsembleIntegrator::new(&sample.positions, 0.0, sg.steps.dt_traj)?;
    let mut previous: Option<VelocityFrame> = None;
    let mut overlaps = OverlapSeries::default();
    let final_state = propagate_observed(&psi0, &potential, &plan(sg), &config.units, |_, t, s| {
        let frame = s.velocity_frame(VelocityModel::SpinorWithGordon, &config.units, t)?;
        if let Some(prev) = &previous {
            with.advance(prev, &frame)?;
            without.advance(&prev.convective_only(), &frame.convective_only())?;
        }
        previous = Some(frame);
        overlaps.t.push(t);
        overlaps.system.push(spatial_overlap(s)?);
        Ok(())
    })?;
    let (gordon, convective) = (with.finish(), without.finish());
    let pass_g = Pass {
        trajectories: gordon,
        final_state: final_state.clone(),
        overlaps: overlaps.clone(),
    };
    let pass_c = Pass {
        trajectories: convective,
        final_state,
        overlaps,
    };
    let mut eg = ensemble("gordon_plane", config, sg.gradient, &pass_g, &sample.positions, split)?;
    let ec = ensemble("convective_plane", config, sg.gradient, &pass_c, &sample.positions, split)?;
    let (mut checked, mut flips, mut side_flips) = (0, 0, 0);
    for (a, b) in eg.runs.iter().zip(&ec.runs) {
        if a.outcome.is_resolved() && b.outcome.is_resolved() {
            checked += 1;
            flips += usize::from(a.outcome != b.outcome);
            side_flips += usize::from(a.system_final[1].signum() != b.system_final[1].signum());
        }
    }
    eg.audit("compared_with_convective", checked);
    eg.audit("outcome_flips_vs_convective", flips);
    eg.audit("side_flips_vs_convective", side_flips);
    let max_shift = pass_g
        .trajectories
        .iter()
        .zip(&pass_c.trajectories)
        .map(|(a, b)| (a.last()[1] - b.last()[1]).abs())
        .fold(0.0, f64::max);
    eg.audit("max_final_z_shift", max_shift);
    Ok((eg, ec, pass_g.trajectories))
}

pub fn run_stern_gerlach(config: &ScenarioConfig) -> Result<ScenarioOutput> {
    config.validate()?;
    let sg = &config.stern_gerlach;
    let grid = SpatialGrid::new(vec![sg.grid.axis()?])?;
    let psi0 = initial_spinor(sg, &grid)?;
    let sample = sample_equilibrium(&psi0, sg.n, config.seed)?;
    let pass = run_pass(config, &grid, sg.gradient, &sample.positions)?;
    let main = ensemble(
        "field",
        config,
        sg.gradient,
        &pass,
        &sample.positions,
        split_point(&psi0, sg.gradient)?,
    )?;
    if main.n_resolved == 0 {
        return Err(Error::Separation("no Stern-Gerlach run ended inside a single spin branch".into()));
    }
    let mut ensembles = vec![main];
    let mut audits = BTreeMap::new();
    let mut table = TrajectoryTable {
        coord_names: vec!["z".into()],
        trajectories: pass.trajectories,
    };

    if sg.twin {
        let twin_pass = run_pass(config, &grid, -sg.gradient, &sample.positions)?;
        let twin = ensemble(
            "inverted",
            config,
            -sg.gradient,
            &twin_pass,
            &sample.positions,
            split_point(&psi0, -sg.gradient)?,
        )?;
        let (checked, label_breaks, side_breaks) = twin_audit(&ensembles[0], &twin, 0);
        audits.insert("twin_pairs_checked".into(), json!(checked));
        audits.insert("twin_label_not_swapped".into(), json!(label_breaks));
        audits.insert("twin_side_changed".into(), json!(side_breaks));
        ensembles.push(twin);
    }
    let mut primary = 0;
    if sg.gordon {
        let (eg, ec, trajs) = gordon_runs(config)?;
        audits.insert("gordon_outcome_flips".into(), eg.audits["outcome_flips_vs_convective"].clone());
        primary = ensembles.len();
        ensembles.push(eg);
        ensembles.push(ec);
        table = TrajectoryTable {
            coord_names: vec!["y".into(), "z".into()],
            trajectories: trajs,
        };
    }
    let report = ScenarioReport {
        scenario: ScenarioKind::SternGerlach,
        seed: config.seed,
        ensembles,
        primary,
        regime_table: None,
        audits,
    };
    Ok(ScenarioOutput {
        report,
        trajectories: table,
    })
}

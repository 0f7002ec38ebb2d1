//! End-to-end experiment drivers.

pub mod ancilla;
pub mod beam_splitter;
pub mod born_check;
pub mod config;
pub mod optical_sg;
pub mod report;
pub mod stern_gerlach;

pub use ancilla::run_ancilla_chain;
pub use beam_splitter::run_beam_splitter;
pub use born_check::{run_born_check, BornCheckEntry, BornCheckReport};
pub use config::{ScenarioConfig, ScenarioKind};
pub use optical_sg::run_optical_sg;
pub use report::{EnsembleReport, OverlapSeries, RegimeCell, RunRecord, ScenarioOutput, ScenarioReport, TrajectoryTable};
pub use stern_gerlach::run_stern_gerlach;

use crate::error::Result;
use crate::guidance::Trajectory;
use crate::numerics::SpatialGrid;
use crate::outcome::Outcome;
use crate::pointer::PointerTrajectory;

/// Runs the scenario selected by `kind`.
pub fn run_scenario(kind: ScenarioKind, config: &ScenarioConfig) -> Result<ScenarioOutput> {
    config.expect_scenario(kind)?;
    match kind {
        ScenarioKind::BeamSplitter => run_beam_splitter(config),
        ScenarioKind::SternGerlach => run_stern_gerlach(config),
        ScenarioKind::OpticalSg => run_optical_sg(config),
        ScenarioKind::AncillaChain => run_ancilla_chain(config),
    }
}

/// Label of the branch whose density dominates at `x` by at least
/// `threshold`; `Plus` for `plus`.
pub(crate) fn dominant_branch(grid: &SpatialGrid, plus: &[f64], minus: &[f64], x: &[f64], threshold: f64) -> Outcome {
    let Some(st) = grid.stencil(x) else { return Outcome::Unresolved };
    let (a, b) = (st.apply(plus), st.apply(minus));
    if a > 0.0 && a >= threshold * b {
        Outcome::Plus
    } else if b > 0.0 && b >= threshold * a {
        Outcome::Minus
    } else {
        Outcome::Unresolved
    }
}

/// Converts pointer trajectories to generic ones over (x, block means).
pub(crate) fn pointer_table(trajs: &[PointerTrajectory], block_names: &[String]) -> TrajectoryTable {
    let mut coord_names = vec!["x".to_string()];
    coord_names.extend(block_names.iter().map(|n| format!("{n}_mean")));
    let dims = coord_names.len();
    let trajectories = trajs
        .iter()
        .map(|t| {
            let mut points = Vec::with_capacity(t.times.len() * dims);
            for (x, means) in t.system.iter().zip(&t.block_means) {
                points.push(*x);
                points.extend_from_slice(means);
            }
            Trajectory {
                id: t.id,
                dims,
                times: t.times.clone(),
                points,
                regularized: vec![t.regularizations > 0; t.times.len()],
                regularizations: t.regularizations,
                exit_time: None,
                outcome: t.outcome,
            }
        })
        .collect();
    TrajectoryTable { coord_names, trajectories }
}

/// Summary statistics of grid trajectories that left the domain.
pub(crate) fn exit_count(trajs: &[Trajectory]) -> usize {
    trajs.iter().filter(|t| t.exited()).count()
}

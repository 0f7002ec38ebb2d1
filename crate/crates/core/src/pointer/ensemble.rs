use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::outcome::Outcome;
use crate::pointer::model::PointerModel;

/// Step control for pointer-model ensembles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointerRunOptions {
    /// Number of equal recording intervals over [0, T].
    pub n_records: usize,
    /// Longest RK4 step.
    pub max_step: f64,
    pub ratio_threshold: f64,
}

/// Trajectory of one pointer-model run. Only the system coordinate and the
/// mean of each apparatus block are recorded over time; the full initial and
/// final configurations are kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointerTrajectory {
    pub id: usize,
    pub times: Vec<f64>,
    pub system: Vec<f64>,
    /// `block_means[i][k]`: mean of block `k` at `times[i]`.
    pub block_means: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
    pub last: Vec<f64>,
    pub regularizations: usize,
    pub outcome: Outcome,
}

/// Integration breakpoints: the recording times plus every schedule kink,
/// each flagged with whether it is recorded.
fn breakpoints(model: &PointerModel, n_records: usize) -> Vec<(f64, bool)> {
    let t_end = model.duration();
    let mut pts: Vec<(f64, bool)> = (0..=n_records).map(|i| (t_end * i as f64 / n_records as f64, true)).collect();
    pts.extend(model.knot_times().into_iter().filter(|&t| t > 0.0 && t < t_end).map(|t| (t, false)));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    pts.dedup_by(|b, a| (a.0 - b.0).abs() <= 1e-12 * t_end);
    pts
}

fn block_means(model: &PointerModel, q: &[f64]) -> Vec<f64> {
    (0..model.blocks().len())
        .map(|k| {
            let r = model.block_range(k);
            let n = r.len();
            if n == 0 {
                0.0
            } else {
                q[r].iter().sum::<f64>() / n as f64
            }
        })
        .collect()
}

fn integrate_one(model: &PointerModel, id: usize, q0: &[f64], pts: &[(f64, bool)], opts: &PointerRunOptions) -> PointerTrajectory {
    let d = q0.len();
    let mut q = q0.to_vec();
    let mut last_v = vec![0.0; d];
    let mut scratch = vec![0.0; d];
    let mut k = [vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]];
    let mut probe = vec![0.0; d];
    let mut tr = PointerTrajectory {
        id,
        times: vec![0.0],
        system: vec![q[0]],
        block_means: vec![block_means(model, &q)],
        initial: q0.to_vec(),
        last: Vec::new(),
        regularizations: 0,
        outcome: Outcome::Unresolved,
    };
    for w in pts.windows(2) {
        let ((ta, _), (tb, record)) = (w[0], w[1]);
        let n_sub = ((tb - ta) / opts.max_step).ceil().max(1.0) as usize;
        let h = (tb - ta) / n_sub as f64;
        // every stage of this interval lies in one schedule segment
        let rate_time = 0.5 * (ta + tb);
        for s in 0..n_sub {
            let t = ta + s as f64 * h;
            let stages = [(0.0, 0.0), (0.5, 0.5), (0.5, 0.5), (1.0, 1.0)];
            for (i, &(dt_frac, shift)) in stages.iter().enumerate() {
                if i == 0 {
                    probe.copy_from_slice(&q);
                } else {
                    for c in 0..d {
                        probe[c] = q[c] + shift * h * k[i - 1][c];
                    }
                }
                let node = model.velocity_into(&probe, t + dt_frac * h, rate_time, &mut k[i], &mut scratch);
                if node {
                    let fallback = if i == 0 { last_v.clone() } else { k[i - 1].clone() };
                    k[i].copy_from_slice(&fallback);
                    tr.regularizations += 1;
                }
            }
            for c in 0..d {
                q[c] += h / 6.0 * (k[0][c] + 2.0 * k[1][c] + 2.0 * k[2][c] + k[3][c]);
            }
            last_v.copy_from_slice(&k[3]);
        }
        if record {
            tr.times.push(tb);
            tr.system.push(q[0]);
            tr.block_means.push(block_means(model, &q));
        }
    }
    tr.outcome = model.classify_log_weights(
        model.log_weights(&q, model.duration()).expect("dimension checked"),
        opts.ratio_threshold,
    );
    tr.last = q;
    tr
}

/// Integrates every initial configuration from t = 0 to T with RK4.
/// Steps never straddle a schedule kink, so the piecewise-linear schedules
/// are followed exactly.
pub fn integrate_pointer(model: &PointerModel, initial: &[Vec<f64>], opts: &PointerRunOptions) -> Result<Vec<PointerTrajectory>> {
    if opts.n_records == 0 || !(opts.max_step > 0.0 && opts.max_step.is_finite()) {
        return Err(Error::invalid("pointer runs need n_records >= 1 and a positive max_step"));
    }
    if !(opts.ratio_threshold > 1.0) {
        return Err(Error::invalid("ratio threshold must exceed 1"));
    }
    if initial.iter().any(|q| q.len() != model.dims()) {
        return Err(Error::invalid("initial configuration does not match the model dimension"));
    }
    let pts = breakpoints(model, opts.n_records);
    let out: Vec<PointerTrajectory> = initial
        .par_iter()
        .enumerate()
        .map(|(id, q0)| integrate_one(model, id, q0, &pts, opts))
        .collect();
    if out.iter().any(|t| t.last.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite { step: opts.n_records });
    }
    Ok(out)
}

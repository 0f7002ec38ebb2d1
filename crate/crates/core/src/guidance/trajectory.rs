use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::guidance::velocity::{GuidingField, VelocityFrame, VelocityModel};
use crate::numerics::{propagate_observed, PotentialSpec, PropagationPlan, UnitsConfig};
use crate::outcome::Outcome;

/// One Bohmian trajectory recorded at frame times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub id: usize,
    pub dims: usize,
    pub times: Vec<f64>,
    /// Flattened positions, `dims` values per recorded time.
    pub points: Vec<f64>,
    /// Whether node regularization was applied in the interval ending at
    /// each recorded time.
    pub regularized: Vec<bool>,
    pub regularizations: usize,
    /// Time at which the particle left the domain, if it did.
    pub exit_time: Option<f64>,
    pub outcome: Outcome,
}

impl Trajectory {
    fn start(id: usize, time: f64, x0: &[f64]) -> Self {
        Trajectory {
            id,
            dims: x0.len(),
            times: vec![time],
            points: x0.to_vec(),
            regularized: vec![false],
            regularizations: 0,
            exit_time: None,
            outcome: Outcome::Unresolved,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dims..(i + 1) * self.dims]
    }

    pub fn initial(&self) -> &[f64] {
        self.point(0)
    }

    pub fn last(&self) -> &[f64] {
        self.point(self.len() - 1)
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("trajectories hold at least one point")
    }

    pub fn exited(&self) -> bool {
        self.exit_time.is_some()
    }

    /// Position at time `t`, linearly interpolated between recorded points.
    /// `None` outside the recorded time span.
    pub fn position_at(&self, t: f64) -> Option<Vec<f64>> {
        let n = self.len();
        let (t0, t1) = (self.times[0], self.times[n - 1]);
        let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        if !(lo..=hi).contains(&t) {
            return None;
        }
        if n == 1 {
            return Some(self.point(0).to_vec());
        }
        let forward = t1 >= t0;
        let k = self.times.partition_point(|&s| if forward { s < t } else { s > t });
        if k == 0 {
            return Some(self.point(0).to_vec());
        }
        let k = k.min(n - 1);
        let (ta, tb) = (self.times[k - 1], self.times[k]);
        let w = if tb == ta { 1.0 } else { (t - ta) / (tb - ta) };
        Some(self.point(k - 1).iter().zip(self.point(k)).map(|(a, b)| a + w * (b - a)).collect())
    }

    fn push(&mut self, t: f64, x: &[f64], regularized: bool) {
        self.times.push(t);
        self.points.extend_from_slice(x);
        self.regularized.push(regularized);
    }
}

#[derive(Debug, Clone)]
struct Particle {
    x: Vec<f64>,
    last_v: Vec<f64>,
    traj: Trajectory,
}

/// Advances an ensemble of trajectories through a sequence of velocity
/// frames, one pair of consecutive frames at a time, so the frames never
/// have to be stored together.
///
/// Between two frames the velocity is interpolated linearly in time and the
/// positions are advanced with RK4 using sub-steps no longer than `dt_traj`.
#[derive(Debug, Clone)]
pub struct EnsembleIntegrator {
    dt_traj: f64,
    particles: Vec<Particle>,
    time: f64,
}

impl EnsembleIntegrator {
    pub fn new(initial: &[Vec<f64>], start_time: f64, dt_traj: f64) -> Result<Self> {
        if !(dt_traj.is_finite() && dt_traj > 0.0) {
            return Err(Error::invalid("trajectory step must be positive and finite"));
        }
        let dims = initial.first().map_or(1, Vec::len);
        if initial.iter().any(|x| x.len() != dims || x.iter().any(|c| !c.is_finite())) {
            return Err(Error::invalid("initial positions must share one dimension and be finite"));
        }
        let particles = initial
            .iter()
            .enumerate()
            .map(|(id, x)| Particle {
                x: x.clone(),
                last_v: vec![0.0; dims],
                traj: Trajectory::start(id, start_time, x),
            })
            .collect();
        Ok(EnsembleIntegrator {
            dt_traj,
            particles,
            time: start_time,
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = &[f64]> {
        self.particles.iter().map(|p| p.x.as_slice())
    }

    /// Advances every live particle from `from.time()` to `to.time()`.
    pub fn advance(&mut self, from: &VelocityFrame, to: &VelocityFrame) -> Result<()> {
        if (from.time() - self.time).abs() > 1e-9 * (1.0 + self.time.abs()) {
            return Err(Error::invalid("velocity frame does not start at the integrator time"));
        }
        let span = to.time() - from.time();
        let n_sub = ((span.abs() / self.dt_traj).ceil() as usize).max(1);
        let h = span / n_sub as f64;
        let (t0, t1) = (from.time(), to.time());
        self.particles.par_iter_mut().for_each(|p| {
            if p.traj.exit_time.is_none() {
                let reg = advance_particle(p, from, to, t0, h, n_sub);
                let x = p.x.clone();
                p.traj.push(t1, &x, reg);
            }
        });
        self.time = t1;
        Ok(())
    }

    pub fn finish(self) -> Vec<Trajectory> {
        self.particles.into_iter().map(|p| p.traj).collect()
    }
}

/// Velocity at (t, x) from two bracketing frames. Returns `None` outside the
/// domain; the flag reports a node.
fn blended(from: &VelocityFrame, to: &VelocityFrame, w: f64, x: &[f64], out: &mut [f64]) -> Option<bool> {
    let mut b = [0.0; 2];
    let na = from.velocity_into(x, out).ok()?;
    let nb = to.velocity_into(x, &mut b[..out.len()]).ok()?;
    for (o, v) in out.iter_mut().zip(b) {
        *o = (1.0 - w) * *o + w * v;
    }
    Some(na || nb)
}

/// Largest displacement of one RK4 stage, in grid cells, and largest
/// disagreement between stages. Steps near nodes are halved until both hold.
const MAX_CELL_FRACTION: f64 = 0.25;
const MAX_STAGE_SPREAD: f64 = 0.001;
const MAX_HALVINGS: u32 = 20;

fn advance_particle(p: &mut Particle, from: &VelocityFrame, to: &VelocityFrame, t0: f64, h: f64, n_sub: usize) -> bool {
    let d = p.x.len();
    let span = h * n_sub as f64;
    let cell = from.grid().axes().iter().map(|a| a.spacing()).fold(f64::INFINITY, f64::min);
    // velocity at (x, t) plus node flag; at a node the fallback is reused
    let eval = |x: &[f64], t: f64, fallback: &[f64; 2]| -> Option<([f64; 2], bool)> {
        let w = if span == 0.0 { 0.0 } else { (t - t0) / span };
        let mut v = [0.0; 2];
        if blended(from, to, w, x, &mut v[..d])? {
            return Some((*fallback, true));
        }
        Some((v, false))
    };
    let mut regularized = false;
    let mut last = [0.0; 2];
    last[..d].copy_from_slice(&p.last_v);
    let mut ts = t0;
    let end = t0 + span;
    let mut remaining = n_sub as f64 * h;
    'outer: while remaining.abs() > 1e-12 * h.abs() {
        let x = p.x.clone();
        let mut hh = if remaining.abs() < h.abs() { remaining } else { h };
        let mut halvings = 0;
        let (ks, nodes) = loop {
            let shifted = |k: &[f64; 2], f: f64| -> Vec<f64> { (0..d).map(|c| x[c] + f * hh * k[c]).collect() };
            let stages = (|| {
                let (k1, n1) = eval(&x, ts, &last)?;
                let (k2, n2) = eval(&shifted(&k1, 0.5), ts + 0.5 * hh, &k1)?;
                let (k3, n3) = eval(&shifted(&k2, 0.5), ts + 0.5 * hh, &k2)?;
                let (k4, n4) = eval(&shifted(&k3, 1.0), ts + hh, &k3)?;
                Some(([k1, k2, k3, k4], [n1, n2, n3, n4].iter().filter(|&&n| n).count()))
            })();
            let Some((ks, nodes)) = stages else {
                p.traj.exit_time = Some(ts);
                break 'outer;
            };
            let reach = ks.iter().flat_map(|k| k[..d].iter()).fold(0.0f64, |m, v| m.max((v * hh).abs()));
            let spread = ks[1..]
                .iter()
                .flat_map(|k| (0..d).map(move |c| ((k[c] - ks[0][c]) * hh).abs()))
                .fold(0.0f64, f64::max);
            let fine = reach <= MAX_CELL_FRACTION * cell && spread <= MAX_STAGE_SPREAD * cell;
            if fine || halvings == MAX_HALVINGS {
                break (ks, nodes);
            }
            hh *= 0.5;
            halvings += 1;
        };
        if nodes > 0 {
            regularized = true;
            p.traj.regularizations += nodes;
        }
        let [k1, k2, k3, k4] = ks;
        for c in 0..d {
            p.x[c] += hh / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        remaining -= hh;
        ts = if remaining.abs() > 1e-12 * h.abs() { ts + hh } else { end };
        if !from.grid().contains(&p.x) {
            p.traj.exit_time = Some(ts);
            break;
        }
        last = k4;
    }
    p.last_v.copy_from_slice(&last[..d]);
    regularized
}

/// Integrates trajectories through stored frames (consecutive pairs).
pub fn integrate_trajectories(frames: &[VelocityFrame], initial: &[Vec<f64>], dt_traj: f64) -> Result<Vec<Trajectory>> {
    let first = frames
        .first()
        .ok_or_else(|| Error::invalid("at least one velocity frame is required"))?;
    let mut integrator = EnsembleIntegrator::new(initial, first.time(), dt_traj)?;
    for pair in frames.windows(2) {
        integrator.advance(&pair[0], &pair[1])?;
    }
    Ok(integrator.finish())
}

/// Propagates `state` and carries trajectories along in the same pass,
/// building a velocity frame at every recorded step of `plan`. `observe`
/// sees every recorded state, as with [`propagate_observed`].
#[allow(clippy::too_many_arguments)]
pub fn propagate_with_trajectories<S: GuidingField>(
    state: &S,
    potential: &PotentialSpec,
    plan: &PropagationPlan,
    units: &UnitsConfig,
    model: VelocityModel,
    initial: &[Vec<f64>],
    dt_traj: f64,
    mut observe: impl FnMut(usize, f64, &S) -> Result<()>,
) -> Result<(S, Vec<Trajectory>)> {
    let plan = if plan.frame_stride.is_none() { plan.with_frames(1) } else { *plan };
    let mut integrator = EnsembleIntegrator::new(initial, 0.0, dt_traj)?;
    let mut previous: Option<VelocityFrame> = None;
    let last = propagate_observed(state, potential, &plan, units, |step, t, s| {
        let frame = s.velocity_frame(model, units, t)?;
        if let Some(prev) = &previous {
            integrator.advance(prev, &frame)?;
        }
        previous = Some(frame);
        observe(step, t, s)
    })?;
    Ok((last, integrator.finish()))
}

/// Writes `trajectory_id,t,<coords>,regularized_flag` rows.
pub fn write_trajectories_csv(out: &mut impl Write, trajectories: &[Trajectory], coord_names: &[&str]) -> std::io::Result<()> {
    write!(out, "trajectory_id,t")?;
    for name in coord_names {
        write!(out, ",{name}")?;
    }
    writeln!(out, ",regularized_flag")?;
    for tr in trajectories {
        for i in 0..tr.len() {
            write!(out, "{},{:.12e}", tr.id, tr.times[i])?;
            for c in tr.point(i) {
                write!(out, ",{c:.12e}")?;
            }
            writeln!(out, ",{}", u8::from(tr.regularized[i]))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::guidance::sampling::sample_equilibrium;
    use crate::numerics::{free_width, make_gaussian, ComplexField, GaussianPacketSpec, SpatialGrid};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn u() -> UnitsConfig {
        UnitsConfig::default()
    }

    fn frames_of(psi: &ComplexField, dt: f64, steps: usize, guard: bool) -> Vec<VelocityFrame> {
        let mut plan = PropagationPlan::new(dt, steps).with_frames(1);
        if !guard {
            plan = plan.without_support_guard();
        }
        let mut frames = Vec::new();
        propagate_observed(psi, &PotentialSpec::Free, &plan, &u(), |_, t, s| {
            frames.push(s.velocity_frame(VelocityModel::ScalarGuidance, &u(), t)?);
            Ok(())
        })
        .unwrap();
        frames
    }

    #[test]
    fn plane_wave_particles_move_uniformly() {
        let half = 20.0 * PI / 3.0;
        let g = SpatialGrid::line(256, -half, half).unwrap();
        let psi = ComplexField::from_fn(&g, |x| Complex64::from_polar(1.0, 1.5 * x[0])).unwrap();
        let frames = frames_of(&psi, 0.05, 20, false);
        let trajs = integrate_trajectories(&frames, &[vec![-3.0], vec![0.7]], 0.01).unwrap();
        for (tr, x0) in trajs.iter().zip([-3.0, 0.7]) {
            assert!((tr.last()[0] - (x0 + 1.5)).abs() < 1e-10);
            assert_eq!(tr.len(), 21);
            assert_eq!(tr.regularizations, 0);
        }
    }

    #[test]
    fn free_gaussian_trajectories_scale_with_the_width() {
        let g = SpatialGrid::line(512, -20.0, 20.0).unwrap();
        let psi = make_gaussian(&g, &GaussianPacketSpec::new_1d(0.0, 1.0, 0.0)).unwrap();
        let frames = frames_of(&psi, 0.01, 100, true);
        let starts = vec![vec![0.0], vec![0.5], vec![-1.3]];
        let trajs = integrate_trajectories(&frames, &starts, 0.005).unwrap();
        let ratio = free_width(1.0, 1.0, &u());
        assert!(trajs[0].last()[0].abs() < 1e-12);
        for (tr, x0) in trajs.iter().zip(&starts) {
            assert!((tr.last()[0] - x0[0] * ratio).abs() < 1e-4, "{} vs {}", tr.last()[0], x0[0] * ratio);
        }
    }

    #[test]
    fn streaming_matches_stored_frames() {
        let g = SpatialGrid::line(256, -20.0, 20.0).unwrap();
        let psi = make_gaussian(&g, &GaussianPacketSpec::new_1d(-1.0, 1.0, 1.0)).unwrap();
        let frames = frames_of(&psi, 0.02, 50, true);
        let starts = vec![vec![-1.5], vec![0.2]];
        let stored = integrate_trajectories(&frames, &starts, 0.01).unwrap();
        let plan = PropagationPlan::new(0.02, 50).with_frames(1);
        let (_, streamed) = propagate_with_trajectories(
            &psi,
            &PotentialSpec::Free,
            &plan,
            &u(),
            VelocityModel::ScalarGuidance,
            &starts,
            0.01,
            |_, _, _| Ok(()),
        )
        .unwrap();
        assert_eq!(stored, streamed);
    }

    #[test]
    fn halving_the_trajectory_step_changes_little() {
        let g = SpatialGrid::line(512, -20.0, 20.0).unwrap();
        let psi = make_gaussian(&g, &GaussianPacketSpec::new_1d(0.0, 1.0, 0.5)).unwrap();
        let frames = frames_of(&psi, 0.02, 100, true);
        let starts: Vec<Vec<f64>> = (-4..=4).map(|i| vec![i as f64 * 0.4]).collect();
        let a = integrate_trajectories(&frames, &starts, 0.02).unwrap();
        let b = integrate_trajectories(&frames, &starts, 0.01).unwrap();
        for (ta, tb) in a.iter().zip(&b) {
            assert!((ta.last()[0] - tb.last()[0]).abs() < 1e-8);
        }
    }

    #[test]
    fn ensemble_stays_ordered_and_distributed() {
        let g = SpatialGrid::line(512, -25.0, 25.0).unwrap();
        let a = make_gaussian(&g, &GaussianPacketSpec::new_1d(0.0, 1.0, 3.0)).unwrap();
        let b = make_gaussian(&g, &GaussianPacketSpec::new_1d(0.0, 1.0, -3.0)).unwrap();
        let mut psi = a.combine(Complex64::new(1.0, 0.0), &b, Complex64::new(1.0, 0.0)).unwrap();
        psi.normalize().unwrap();
        let sample = sample_equilibrium(&psi, 300, 3).unwrap();
        let frames = frames_of(&psi, 0.02, 100, true);
        let trajs = integrate_trajectories(&frames, &sample.positions, 0.01).unwrap();
        let mut order: Vec<usize> = (0..trajs.len()).collect();
        order.sort_by(|&i, &j| trajs[i].initial()[0].total_cmp(&trajs[j].initial()[0]));
        for w in order.windows(2) {
            assert!(trajs[w[0]].last()[0] <= trajs[w[1]].last()[0]);
        }
        // mirror symmetry of a symmetric state
        let mirrored: Vec<Vec<f64>> = sample.positions.iter().map(|x| vec![-x[0]]).collect();
        let back = integrate_trajectories(&frames, &mirrored, 0.01).unwrap();
        for (t, m) in trajs.iter().zip(&back) {
            assert!((t.last()[0] + m.last()[0]).abs() < 1e-6);
        }
    }

    #[test]
    fn leaving_the_domain_is_recorded() {
        let half = 10.0 * PI / 3.0;
        let g = SpatialGrid::line(128, -half, half).unwrap();
        let psi = ComplexField::from_fn(&g, |x| Complex64::from_polar(1.0, 3.0 * x[0])).unwrap();
        let frames = frames_of(&psi, 0.05, 20, false);
        let trajs = integrate_trajectories(&frames, &[vec![half - 0.5]], 0.01).unwrap();
        let exit = trajs[0].exit_time.unwrap();
        assert!(exit > 0.1 && exit < 0.2, "{exit}");
        assert!(trajs[0].len() < 21);
    }

    #[test]
    fn position_at_interpolates_between_frames() {
        let mut tr = Trajectory::start(0, 0.0, &[1.0]);
        tr.push(1.0, &[3.0], false);
        assert_eq!(tr.position_at(0.25).unwrap(), vec![1.5]);
        assert!(tr.position_at(1.5).is_none());
    }

    #[test]
    fn csv_has_header_and_one_row_per_point() {
        let mut tr = Trajectory::start(4, 0.0, &[1.0, 2.0]);
        tr.push(0.5, &[1.5, 2.5], true);
        let mut buf = Vec::new();
        write_trajectories_csv(&mut buf, &[tr], &["y", "z"]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "trajectory_id,t,y,z,regularized_flag");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("4,5.000000000000e-1,") && lines[2].ends_with(",1"));
    }
}

use std::ops::Range;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::guidance::{stream_rng, VelocityEval};
use crate::numerics::UnitsConfig;
use crate::outcome::Outcome;
use crate::pointer::schedule::Schedule;

/// Weight ratio at which a branch is taken to be the only active one.
pub const EMPTY_WAVE_RATIO: f64 = 1e12;
/// Default weight ratio for assigning an outcome.
pub const DEFAULT_RATIO_THRESHOLD: f64 = 1e6;

/// One term of the branched wavefunction: a system Gaussian centred on
/// `system_center(t)` times, for every apparatus block, Gaussians centred on
/// `apparatus_sign · ramp(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub label: Outcome,
    pub amplitude: Complex64,
    pub system_center: Schedule,
    pub apparatus_sign: f64,
}

/// `count` identical apparatus coordinates displaced together by `ramp`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApparatusBlock {
    pub name: String,
    pub count: usize,
    pub sigma: f64,
    pub ramp: Schedule,
}

/// Analytic two-branch Gaussian-product wavefunction over one system
/// coordinate and one or more blocks of apparatus coordinates.
///
/// Each factor carries the local phase exp(i·m·ċ·(q − c)/ħ), so a lone
/// branch moves every coordinate rigidly with its centre. The branch labels
/// are treated as orthogonal internal states: the density is Σ_b |c_b Φ_b|²
/// and the velocity is the density-weighted mean of the branch velocities.
/// All weights are handled as logarithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointerModel {
    branches: [Branch; 2],
    system_sigma: f64,
    blocks: Vec<ApparatusBlock>,
    duration: f64,
    spreading: bool,
    units: UnitsConfig,
}

/// Position of a single Gaussian factor at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Factor {
    center: f64,
    rate: f64,
    sigma: f64,
    /// σ̇/σ
    stretch: f64,
    /// coefficient of (q − c)² in the phase
    chirp: f64,
}

impl Factor {
    fn log_density(&self, q: f64) -> f64 {
        let d = q - self.center;
        -d * d / (2.0 * self.sigma * self.sigma) - 0.5 * (2.0 * std::f64::consts::PI * self.sigma * self.sigma).ln()
    }

    fn velocity(&self, q: f64) -> f64 {
        self.rate + (q - self.center) * self.stretch
    }
}

/// Overlap ⟨a|b⟩ of two normalized Gaussians of equal width and chirp with
/// centres `ca`, `cb` and wavevectors `ka`, `kb`.
pub(crate) fn gaussian_overlap(sigma: f64, chirp: f64, ca: f64, ka: f64, cb: f64, kb: f64) -> Complex64 {
    let i = Complex64::i();
    let p = 1.0 / (2.0 * sigma * sigma);
    let a = Complex64::new(1.0 / (4.0 * sigma * sigma), -chirp);
    let l = 2.0 * a.conj() * ca + 2.0 * a * cb + i * (kb - ka);
    let c = -a.conj() * ca * ca - a * cb * cb + i * ka * ca - i * kb * cb;
    (l * l / (4.0 * p) + c).exp()
}

impl PointerModel {
    pub fn new(
        branches: [Branch; 2],
        system_sigma: f64,
        blocks: Vec<ApparatusBlock>,
        duration: f64,
        spreading: bool,
        units: UnitsConfig,
    ) -> Result<Self> {
        let m = PointerModel {
            branches,
            system_sigma,
            blocks,
            duration,
            spreading,
            units,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        self.units.validate()?;
        let [a, b] = &self.branches;
        let labels_ok = matches!(
            (a.label, b.label),
            (Outcome::Plus, Outcome::Minus) | (Outcome::Minus, Outcome::Plus)
        );
        if !labels_ok {
            return Err(Error::invalid("the two branches must be labelled plus and minus"));
        }
        let norm = a.amplitude.norm_sqr() + b.amplitude.norm_sqr();
        if !((norm - 1.0).abs() <= 1e-9) {
            return Err(Error::invalid(format!(
                "branch amplitudes must satisfy |c+|² + |c-|² = 1 (got {norm})"
            )));
        }
        for br in &self.branches {
            if br.apparatus_sign.abs() != 1.0 {
                return Err(Error::invalid("apparatus signs must be +1 or -1"));
            }
            br.system_center.validate()?;
        }
        if !(self.system_sigma > 0.0 && self.system_sigma.is_finite()) {
            return Err(Error::invalid("system sigma must be positive"));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::invalid("duration must be positive"));
        }
        for blk in &self.blocks {
            blk.ramp.validate()?;
            if !(blk.sigma > 0.0 && blk.sigma.is_finite()) {
                return Err(Error::invalid(format!("block '{}' needs a positive sigma", blk.name)));
            }
            if blk.ramp.value(0.0) != 0.0 {
                return Err(Error::invalid(format!("block '{}' ramp must start at zero displacement", blk.name)));
            }
        }
        Ok(())
    }

    pub fn branches(&self) -> &[Branch; 2] {
        &self.branches
    }

    pub fn blocks(&self) -> &[ApparatusBlock] {
        &self.blocks
    }

    pub fn system_sigma(&self) -> f64 {
        self.system_sigma
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn units(&self) -> &UnitsConfig {
        &self.units
    }

    /// Width of the system factor at time `t`.
    pub fn system_width(&self, t: f64) -> f64 {
        self.width(self.system_sigma, t).0
    }

    /// 1 + total number of apparatus coordinates.
    pub fn dims(&self) -> usize {
        1 + self.blocks.iter().map(|b| b.count).sum::<usize>()
    }

    /// Indices of block `k` inside a flat configuration vector.
    pub fn block_range(&self, k: usize) -> Range<usize> {
        let start = 1 + self.blocks[..k].iter().map(|b| b.count).sum::<usize>();
        start..start + self.blocks[k].count
    }

    /// Times at which any schedule has a kink.
    pub fn knot_times(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self
            .branches
            .iter()
            .flat_map(|b| b.system_center.knot_times())
            .chain(self.blocks.iter().flat_map(|b| b.ramp.knot_times()))
            .collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }

    fn width(&self, sigma0: f64, t: f64) -> (f64, f64, f64) {
        if !self.spreading {
            return (sigma0, 0.0, 0.0);
        }
        let tau = self.units.hbar_over_mass() * t / (2.0 * sigma0 * sigma0);
        let sigma = sigma0 * (1.0 + tau * tau).sqrt();
        let stretch = self.units.hbar_over_mass() * tau / (2.0 * sigma * sigma);
        (sigma, stretch, tau / (4.0 * sigma * sigma))
    }

    /// System factor of branch `b`; schedule slopes are taken at `rate_time`.
    fn system_factor(&self, b: usize, t: f64, rate_time: f64) -> Factor {
        let (sigma, stretch, chirp) = self.width(self.system_sigma, t);
        let s = &self.branches[b].system_center;
        Factor {
            center: s.value(t),
            rate: s.rate(rate_time),
            sigma,
            stretch,
            chirp,
        }
    }

    fn block_factor(&self, b: usize, k: usize, t: f64, rate_time: f64) -> Factor {
        let blk = &self.blocks[k];
        let (sigma, stretch, chirp) = self.width(blk.sigma, t);
        let e = self.branches[b].apparatus_sign;
        Factor {
            center: e * blk.ramp.value(t),
            rate: e * blk.ramp.rate(rate_time),
            sigma,
            stretch,
            chirp,
        }
    }

    fn check_point(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.dims() {
            return Err(Error::invalid(format!(
                "configuration has {} coordinates, model needs {}",
                q.len(),
                self.dims()
            )));
        }
        Ok(())
    }

    /// ln w_b = ln|c_b|² + ln|φ_b(x)|² + Σ ln|g_b(y_j)|² for both branches.
    pub fn log_weights(&self, q: &[f64], t: f64) -> Result<[f64; 2]> {
        self.check_point(q)?;
        Ok(self.log_weights_unchecked(q, t))
    }

    fn log_weights_unchecked(&self, q: &[f64], t: f64) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (b, o) in out.iter_mut().enumerate() {
            let c2 = self.branches[b].amplitude.norm_sqr();
            if c2 == 0.0 {
                *o = f64::NEG_INFINITY;
                continue;
            }
            let mut lw = c2.ln() + self.system_factor(b, t, t).log_density(q[0]);
            for k in 0..self.blocks.len() {
                let f = self.block_factor(b, k, t, t);
                lw += q[self.block_range(k)].iter().map(|&y| f.log_density(y)).sum::<f64>();
            }
            *o = lw;
        }
        out
    }

    /// Branch-local weights w_b (may underflow to zero for large N; the
    /// logarithms from [`PointerModel::log_weights`] do not).
    pub fn branch_local_weight(&self, q: &[f64], t: f64) -> Result<[f64; 2]> {
        Ok(self.log_weights(q, t)?.map(f64::exp))
    }

    /// Velocity of every coordinate if only branch `b` were present.
    pub fn branch_velocity(&self, b: usize, q: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check_point(q)?;
        let mut out = vec![0.0; q.len()];
        self.branch_velocity_into(b, q, t, t, &mut out);
        Ok(out)
    }

    fn branch_velocity_into(&self, b: usize, q: &[f64], t: f64, rate_time: f64, out: &mut [f64]) {
        out[0] = self.system_factor(b, t, rate_time).velocity(q[0]);
        for k in 0..self.blocks.len() {
            let f = self.block_factor(b, k, t, rate_time);
            let r = self.block_range(k);
            for (o, &y) in out[r.clone()].iter_mut().zip(&q[r]) {
                *o = f.velocity(y);
            }
        }
    }

    /// Writes the guidance velocity into `out`; returns `true` when no branch
    /// has support (node). Schedule slopes are read at `rate_time`, which
    /// lets an integrator keep a whole step inside one schedule segment.
    pub(crate) fn velocity_into(&self, q: &[f64], t: f64, rate_time: f64, out: &mut [f64], scratch: &mut [f64]) -> bool {
        let lw = self.log_weights_unchecked(q, t);
        let top = lw[0].max(lw[1]);
        if top == f64::NEG_INFINITY {
            out.iter_mut().for_each(|v| *v = 0.0);
            return true;
        }
        let p: Vec<f64> = lw.iter().map(|l| (l - top).exp()).collect();
        let total = p[0] + p[1];
        out.iter_mut().for_each(|v| *v = 0.0);
        for b in 0..2 {
            if p[b] == 0.0 {
                continue;
            }
            self.branch_velocity_into(b, q, t, rate_time, scratch);
            let w = p[b] / total;
            for (o, s) in out.iter_mut().zip(scratch.iter()) {
                *o += w * s;
            }
        }
        false
    }

    pub fn pointer_velocity(&self, q: &[f64], t: f64) -> Result<VelocityEval> {
        self.check_point(q)?;
        let mut v = vec![0.0; q.len()];
        let mut scratch = vec![0.0; q.len()];
        let at_node = self.velocity_into(q, t, t, &mut v, &mut scratch);
        Ok(VelocityEval { velocity: v, at_node })
    }

    /// Factors as the state stands at `t`, with the schedule slopes of the
    /// segment ending at `t`; before any motion starts the branches carry
    /// no momentum difference.
    fn system_factor_before(&self, b: usize, t: f64) -> Factor {
        let mut f = self.system_factor(b, t, t);
        f.rate = self.branches[b].system_center.rate_before(t);
        f
    }

    fn block_factor_before(&self, b: usize, k: usize, t: f64) -> Factor {
        let mut f = self.block_factor(b, k, t, t);
        f.rate = self.branches[b].apparatus_sign * self.blocks[k].ramp.rate_before(t);
        f
    }

    /// |⟨φ₊|φ₋⟩| for the system factors.
    pub fn system_overlap(&self, t: f64) -> f64 {
        let hm = self.units.hbar_over_mass();
        let (a, b) = (self.system_factor_before(0, t), self.system_factor_before(1, t));
        gaussian_overlap(a.sigma, a.chirp, a.center, a.rate / hm, b.center, b.rate / hm)
            .norm()
            .min(1.0)
    }

    /// ω_k(t): overlap modulus of one apparatus coordinate of block `k`.
    pub fn single_overlap(&self, k: usize, t: f64) -> f64 {
        let hm = self.units.hbar_over_mass();
        let (a, b) = (self.block_factor_before(0, k, t), self.block_factor_before(1, k, t));
        gaussian_overlap(a.sigma, a.chirp, a.center, a.rate / hm, b.center, b.rate / hm)
            .norm()
            .min(1.0)
    }

    /// N_k·ln ω_k(t).
    pub fn block_log_overlap(&self, k: usize, t: f64) -> f64 {
        let n = self.blocks[k].count;
        if n == 0 {
            return 0.0;
        }
        n as f64 * self.single_overlap(k, t).ln()
    }

    /// ω_k(t)^{N_k}.
    pub fn block_overlap(&self, k: usize, t: f64) -> f64 {
        self.block_log_overlap(k, t).exp()
    }

    /// Product of all block overlaps.
    pub fn apparatus_overlap(&self, t: f64) -> f64 {
        (0..self.blocks.len()).map(|k| self.block_log_overlap(k, t)).sum::<f64>().exp()
    }

    /// Label of the dominant branch when its weight exceeds the other's by
    /// at least `ratio_threshold`, otherwise unresolved.
    pub fn classify_outcome(&self, q: &[f64], t: f64, ratio_threshold: f64) -> Result<Outcome> {
        let lw = self.log_weights(q, t)?;
        Ok(self.classify_log_weights(lw, ratio_threshold))
    }

    pub(crate) fn classify_log_weights(&self, lw: [f64; 2], ratio_threshold: f64) -> Outcome {
        let (hi, lo) = if lw[0] >= lw[1] { (0, 1) } else { (1, 0) };
        if lw[hi] == f64::NEG_INFINITY {
            return Outcome::Unresolved;
        }
        if lw[hi] - lw[lo] >= ratio_threshold.ln() {
            self.branches[hi].label
        } else {
            Outcome::Unresolved
        }
    }

    /// Branch whose system centre lies on the positive side of the other:
    /// compared at t = 0, or at the end if the centres start together.
    fn system_right_branch(&self) -> Option<usize> {
        let gap = |t: f64| self.branches[0].system_center.value(t) - self.branches[1].system_center.value(t);
        let scale = self.system_sigma * 1e-12;
        [0.0, self.duration]
            .into_iter()
            .map(gap)
            .find(|g| g.abs() > scale)
            .map(|g| if g > 0.0 { 0 } else { 1 })
    }

    /// Initial midpoint of the two system centres.
    pub fn system_midpoint(&self) -> f64 {
        0.5 * (self.branches[0].system_center.value(0.0) + self.branches[1].system_center.value(0.0))
    }

    /// Outcome predicted from the side of the midpoint on which x0 lies.
    pub fn predictor_system(&self, x0: f64) -> Outcome {
        let Some(right) = self.system_right_branch() else {
            return Outcome::Unresolved;
        };
        let d = x0 - self.system_midpoint();
        if d > 0.0 {
            self.branches[right].label
        } else if d < 0.0 {
            self.branches[1 - right].label
        } else {
            Outcome::Unresolved
        }
    }

    /// Outcome predicted from the sign of Σ_j y_{j,0} over block `k`.
    pub fn predictor_block(&self, k: usize, y0: &[f64]) -> Outcome {
        let a_end = self.blocks[k].ramp.value(self.duration);
        if a_end == 0.0 {
            return Outcome::Unresolved;
        }
        let up = if self.branches[0].apparatus_sign * a_end > 0.0 { 0 } else { 1 };
        let s: f64 = y0.iter().sum();
        if s > 0.0 {
            self.branches[up].label
        } else if s < 0.0 {
            self.branches[1 - up].label
        } else {
            Outcome::Unresolved
        }
    }

    /// Equilibrium initial configuration for trajectory `index`.
    ///
    /// Draws the branch, then x, then per block a collective normal η and
    /// N individual normals z_j, setting y_j = c + σ(η/√N + z_j − z̄). The
    /// y_j are i.i.d. normal, Σ_j y_j depends on η alone, and the same
    /// seed gives the same system position and collective coordinate for
    /// every block size.
    pub fn sample_initial(&self, seed: u64, index: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, index);
        let u: f64 = rng.random();
        let b = if u < self.branches[0].amplitude.norm_sqr() { 0 } else { 1 };
        let mut q = Vec::with_capacity(self.dims());
        let xi: f64 = rng.sample(StandardNormal);
        let sys = self.system_factor(b, 0.0, 0.0);
        q.push(sys.center + sys.sigma * xi);
        for k in 0..self.blocks.len() {
            let n = self.blocks[k].count;
            let f = self.block_factor(b, k, 0.0, 0.0);
            let eta: f64 = rng.sample(StandardNormal);
            let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let zbar = z.iter().sum::<f64>() / n.max(1) as f64;
            let shared = eta / (n.max(1) as f64).sqrt();
            q.extend(z.iter().map(|zj| f.center + f.sigma * (shared + zj - zbar)));
        }
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u() -> UnitsConfig {
        UnitsConfig::default()
    }

    fn branch(label: Outcome, c: f64, center: Schedule, sign: f64) -> Branch {
        Branch {
            label,
            amplitude: Complex64::new(c, 0.0),
            system_center: center,
            apparatus_sign: sign,
        }
    }

    /// Co-located system branches drifting apart at ±v, one block of n
    /// coordinates ramped to ±a_max over [0, 1].
    fn model(n: usize, v: f64, a_max: f64, cp: f64) -> PointerModel {
        let cm = (1.0 - cp * cp).sqrt();
        PointerModel::new(
            [
                branch(Outcome::Plus, cp, Schedule::drift(0.0, v, 1.0).unwrap(), 1.0),
                branch(Outcome::Minus, cm, Schedule::drift(0.0, -v, 1.0).unwrap(), -1.0),
            ],
            1.0,
            vec![ApparatusBlock {
                name: "apparatus".into(),
                count: n,
                sigma: 1.0,
                ramp: Schedule::ramp(0.0, 1.0, a_max).unwrap(),
            }],
            1.0,
            false,
            u(),
        )
        .unwrap()
    }

    fn h() -> f64 {
        0.5f64.sqrt()
    }

    #[test]
    fn symmetric_branches_have_equal_weight_at_the_origin() {
        let m = model(4, 0.5, 3.0, h());
        let w = m.branch_local_weight(&[0.0; 5], 0.0).unwrap();
        assert_eq!(w[0], w[1]);
        let v = m.pointer_velocity(&[0.0; 5], 0.0).unwrap();
        assert!(v.velocity.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn absent_branch_has_zero_weight_and_single_branch_moves_rigidly() {
        let m = model(3, 0.5, 3.0, 1.0);
        let q = [0.3, -1.0, 2.0, 0.1];
        for t in [0.0, 0.4, 0.99] {
            assert_eq!(m.branch_local_weight(&q, t).unwrap()[1], 0.0);
            let v = m.pointer_velocity(&q, t).unwrap().velocity;
            assert_eq!(v, vec![0.5, 3.0, 3.0, 3.0]);
        }
    }

    #[test]
    fn separated_branch_dominates_by_the_product_formula() {
        // at t = 1 the + centres are x = 0.5, y = 3; evaluate there
        let n = 8;
        let m = model(n, 0.5, 3.0, h());
        let mut q = vec![0.5];
        q.extend(std::iter::repeat(3.0).take(n));
        let lw = m.log_weights(&q, 1.0).unwrap();
        // direct Gaussian product: each y_j contributes (6)²/2 to the log ratio,
        // the system factor (1)²/2
        let expect = n as f64 * 36.0 / 2.0 + 0.5;
        assert!((lw[0] - lw[1] - expect).abs() < 1e-9);
        assert!(lw[0] - lw[1] >= n as f64 * 9.0 - 0.5);
    }

    #[test]
    fn empty_wave_does_not_change_the_velocity() {
        let m = model(8, 0.5, 3.0, h());
        let lone = model(8, 0.5, 3.0, 1.0);
        let mut q = vec![0.4];
        q.extend([2.7, 3.1, 3.3, 2.2, 3.0, 3.5, 2.9, 3.05]);
        let lw = m.log_weights(&q, 0.9).unwrap();
        assert!(lw[0] - lw[1] > EMPTY_WAVE_RATIO.ln());
        let a = m.pointer_velocity(&q, 0.9).unwrap().velocity;
        let b = lone.pointer_velocity(&q, 0.9).unwrap().velocity;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-6 * y.abs().max(1e-300));
        }
    }

    /// Branch wavefunction evaluated directly, with its phases.
    fn branch_psi(m: &PointerModel, b: usize, q: &[f64], t: f64) -> Complex64 {
        let br = &m.branches()[b];
        let factor = |q: f64, c: f64, cdot: f64, s: f64| {
            Complex64::new(-(q - c) * (q - c) / (4.0 * s * s), cdot * (q - c)).exp() / (2.0 * std::f64::consts::PI * s * s).powf(0.25)
        };
        let mut psi = br.amplitude * factor(q[0], br.system_center.value(t), br.system_center.rate(t), m.system_sigma());
        let blk = &m.blocks()[0];
        for &y in &q[1..] {
            psi *= factor(
                y,
                br.apparatus_sign * blk.ramp.value(t),
                br.apparatus_sign * blk.ramp.rate(t),
                blk.sigma,
            );
        }
        psi
    }

    #[test]
    fn velocity_matches_finite_difference_current() {
        let m = model(3, 0.5, 3.0, h());
        let q = [0.2, 0.7, -0.3, 1.1];
        let t = 0.6;
        let v = m.pointer_velocity(&q, t).unwrap().velocity;
        let step = 1e-5;
        for c in 0..q.len() {
            let (mut num, mut den) = (0.0, 0.0);
            for b in 0..2 {
                let mut qp = q;
                let mut qm = q;
                qp[c] += step;
                qm[c] -= step;
                let d = (branch_psi(&m, b, &qp, t) - branch_psi(&m, b, &qm, t)) / (2.0 * step);
                let psi = branch_psi(&m, b, &q, t);
                num += (psi.conj() * d).im;
                den += psi.norm_sqr();
            }
            assert!(
                (v[c] - num / den).abs() < 1e-6 * (1.0 + v[c].abs()),
                "coord {c}: {} vs {}",
                v[c],
                num / den
            );
        }
    }

    #[test]
    fn overlaps_start_at_one_and_follow_the_exponent_law() {
        for n in [1, 2, 8, 64] {
            let m = model(n, 0.5, 3.0, h());
            assert_eq!(m.apparatus_overlap(0.0), 1.0);
            assert_eq!(m.system_overlap(0.0), 1.0);
            for t in [0.2, 0.5, 1.0] {
                let omega = m.single_overlap(0, t);
                assert!((0.0..=1.0).contains(&omega));
                assert_eq!(m.block_log_overlap(0, t), n as f64 * omega.ln());
                if n == 1 {
                    assert_eq!(m.apparatus_overlap(t), omega);
                }
            }
        }
    }

    #[test]
    fn overlap_matches_quadrature_of_the_product_integral() {
        // a = σ_M at t = 0.5 with both the displacement and the k-phases
        let m = model(8, 0.5, 2.0, h());
        let t = 0.5;
        let blk = &m.blocks()[0];
        let (a, adot) = (blk.ramp.value(t), blk.ramp.rate(t));
        assert_eq!(a, 1.0);
        let g =
            |y: f64, c: f64, k: f64| Complex64::new(-(y - c) * (y - c) / 4.0, k * (y - c)).exp() / (2.0 * std::f64::consts::PI).powf(0.25);
        // the 8-fold integral factorizes into the 8th power of a 1D one
        let (lo, hi, n) = (-20.0, 20.0, 40_000);
        let dy = (hi - lo) / n as f64;
        let one: Complex64 = (0..n)
            .map(|i| {
                let y = lo + (i as f64 + 0.5) * dy;
                g(y, a, adot).conj() * g(y, -a, -adot) * dy
            })
            .sum();
        let quad = one.norm().powi(8);
        assert!((m.apparatus_overlap(t) - quad).abs() < 1e-8, "{} vs {quad}", m.apparatus_overlap(t));
    }

    #[test]
    fn spreading_overlap_matches_quadrature() {
        let m = PointerModel::new(
            [
                branch(Outcome::Plus, h(), Schedule::drift(-1.0, 0.8, 2.0).unwrap(), 1.0),
                branch(Outcome::Minus, h(), Schedule::drift(1.5, -0.3, 2.0).unwrap(), -1.0),
            ],
            0.7,
            vec![],
            2.0,
            true,
            u(),
        )
        .unwrap();
        let t = 1.3;
        let s0: f64 = 0.7;
        let psi = |x: f64, c0: f64, v: f64| {
            // free packet moving at v: exp(-(x - c)² / (4 s0² (1 + iτ))) with τ = t/(2 s0²)
            let tau = t / (2.0 * s0 * s0);
            let c = c0 + v * t;
            let z = Complex64::new(1.0, tau);
            let env = (-(x - c) * (x - c) / (4.0 * s0 * s0 * z)).exp();
            env * Complex64::new(0.0, v * (x - c)).exp()
        };
        let (lo, hi, n) = (-30.0, 30.0, 60_000);
        let dx = (hi - lo) / n as f64;
        let (mut ab, mut aa, mut bb) = (Complex64::new(0.0, 0.0), 0.0, 0.0);
        for i in 0..n {
            let x = lo + (i as f64 + 0.5) * dx;
            let (a, b) = (psi(x, -1.0, 0.8), psi(x, 1.5, -0.3));
            ab += a.conj() * b * dx;
            aa += a.norm_sqr() * dx;
            bb += b.norm_sqr() * dx;
        }
        let quad = ab.norm() / (aa * bb).sqrt();
        assert!((m.system_overlap(t) - quad).abs() < 1e-8, "{} vs {quad}", m.system_overlap(t));
    }

    #[test]
    fn classification_and_predictors() {
        let m = model(2, 0.5, 3.0, h());
        assert_eq!(
            m.classify_outcome(&[0.0, 0.0, 0.0], 1.0, DEFAULT_RATIO_THRESHOLD).unwrap(),
            Outcome::Unresolved
        );
        assert_eq!(
            m.classify_outcome(&[0.5, 3.0, 3.0], 1.0, DEFAULT_RATIO_THRESHOLD).unwrap(),
            Outcome::Plus
        );
        assert_eq!(
            m.classify_outcome(&[-0.5, -3.0, -3.0], 1.0, DEFAULT_RATIO_THRESHOLD).unwrap(),
            Outcome::Minus
        );
        assert_eq!(m.predictor_block(0, &[0.1, 0.2]), Outcome::Plus);
        assert_eq!(m.predictor_block(0, &[0.1, -0.1]), Outcome::Unresolved);
        assert_eq!(m.predictor_system(0.0), Outcome::Unresolved);
        assert_eq!(m.predictor_system(0.01), Outcome::Plus);
        assert_eq!(m.predictor_system(-0.01), Outcome::Minus);
    }

    #[test]
    fn sampling_shares_the_collective_coordinate_across_sizes() {
        let small = model(1, 0.5, 3.0, h());
        let big = model(64, 0.5, 3.0, h());
        for i in 0..20 {
            let a = small.sample_initial(9, i);
            let b = big.sample_initial(9, i);
            assert_eq!(a[0], b[0]);
            let sb: f64 = b[1..].iter().sum();
            // Σy = σ√N·η for N = 64 and y = σ·η for N = 1
            assert!((sb - 8.0 * a[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_models_are_rejected() {
        let ok = model(1, 0.5, 3.0, h());
        let mut bad = ok.branches().clone();
        bad[0].amplitude = Complex64::new(1.0, 0.0);
        assert!(PointerModel::new(bad, 1.0, ok.blocks().to_vec(), 1.0, false, u()).is_err());
        let mut same = ok.branches().clone();
        same[1].label = Outcome::Plus;
        assert!(PointerModel::new(same, 1.0, ok.blocks().to_vec(), 1.0, false, u()).is_err());
        let mut blocks = ok.blocks().to_vec();
        blocks[0].ramp = Schedule::constant(1.0);
        assert!(PointerModel::new(ok.branches().clone(), 1.0, blocks, 1.0, false, u()).is_err());
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Evolvable, PiecewiseLinearCdf, SpatialGrid};

/// Normalization tolerance accepted by [`sample_equilibrium`].
pub const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMethod {
    /// 1D inverse CDF with linear interpolation inside grid cells.
    InverseCdf,
    /// 2D: first-axis marginal, then the conditional along the second axis.
    MarginalConditional,
    /// Analytic branch mixture (pointer models).
    BranchMixture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSample {
    pub positions: Vec<Vec<f64>>,
    pub seed: u64,
    pub method: SamplingMethod,
}

/// Independent random stream for trajectory `index` under `seed`, so that
/// ensemble results do not depend on execution order.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws positions from a density sampled on a grid.
#[derive(Debug, Clone)]
pub struct GridSampler {
    grid: SpatialGrid,
    density: Vec<f64>,
    first: PiecewiseLinearCdf,
}

impl GridSampler {
    pub fn new(grid: &SpatialGrid, density: &[f64]) -> Result<Self> {
        if density.len() != grid.len() {
            return Err(Error::invalid("density does not match the grid"));
        }
        let first = match grid.dims() {
            1 => PiecewiseLinearCdf::new(grid.axis(0), density)?,
            _ => {
                let n1 = grid.axis(1).n_points;
                let rows: Vec<f64> = (0..grid.axis(0).n_points)
                    .map(|i| {
                        let row = &density[i * n1..(i + 1) * n1];
                        (0..n1).map(|j| 0.5 * (row[j] + row[(j + 1) % n1])).sum()
                    })
                    .collect();
                PiecewiseLinearCdf::new(grid.axis(0), &rows)?
            }
        };
        Ok(GridSampler {
            grid: grid.clone(),
            density: density.to_vec(),
            first,
        })
    }

    pub fn method(&self) -> SamplingMethod {
        if self.grid.dims() == 1 {
            SamplingMethod::InverseCdf
        } else {
            SamplingMethod::MarginalConditional
        }
    }

    fn clamp_inside(&self, axis: usize, x: f64) -> f64 {
        let a = self.grid.axis(axis);
        x.clamp(a.min, a.max - 1e-9 * a.spacing())
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        let first = self.clamp_inside(0, self.first.quantile(rng.random::<f64>()));
        if self.grid.dims() == 1 {
            return vec![first];
        }
        let a0 = self.grid.axis(0);
        let n0 = a0.n_points;
        let n1 = self.grid.axis(1).n_points;
        let (i, f) = a0.locate(first).expect("quantile lies inside the axis");
        let j = (i + 1) % n0;
        let row: Vec<f64> = (0..n1)
            .map(|k| (1.0 - f) * self.density[i * n1 + k] + f * self.density[j * n1 + k])
            .collect();
        let second = match PiecewiseLinearCdf::new(self.grid.axis(1), &row) {
            Ok(c) => c.quantile(rng.random::<f64>()),
            // empty interpolated row: fall back to the nearer populated one
            Err(_) => {
                let near = if f < 0.5 { i } else { j };
                let row = &self.density[near * n1..(near + 1) * n1];
                PiecewiseLinearCdf::new(self.grid.axis(1), row)
                    .map(|c| c.quantile(rng.random::<f64>()))
                    .unwrap_or(self.grid.axis(1).coord(n1 / 2))
            }
        };
        vec![first, self.clamp_inside(1, second)]
    }
}

/// Samples `n` positions i.i.d. from |ψ|² (or Ψ†Ψ). Trajectory `i` uses
/// stream `i` of `seed`.
pub fn sample_equilibrium<S: Evolvable>(source: &S, n: usize, seed: u64) -> Result<EquilibriumSample> {
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    let norm = source.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::invalid(format!("density source is not normalized (norm² = {norm})")));
    }
    let sampler = GridSampler::new(source.grid(), &source.total_density())?;
    let positions = (0..n).map(|i| sampler.sample(&mut stream_rng(seed, i as u64))).collect();
    Ok(EquilibriumSample {
        positions,
        seed,
        method: sampler.method(),
    })
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Axis, PiecewiseLinearCdf};

/// Fewest endpoints accepted by [`born_rule_ks`].
pub const MIN_KS_SAMPLES: usize = 100;

/// One normal component of an analytic mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub sigma: f64,
}

/// Reference distribution for a 1D marginal.
#[derive(Debug, Clone)]
pub enum ReferenceCdf {
    /// Density sampled on a grid axis, linearly interpolated within cells.
    Grid(PiecewiseLinearCdf),
    /// Normal mixture; weights are normalized on use.
    Mixture(Vec<MixtureComponent>),
    /// Another sample (two-sample statistic).
    Empirical(Vec<f64>),
}

impl ReferenceCdf {
    pub fn grid(axis: &Axis, density: &[f64]) -> Result<Self> {
        Ok(ReferenceCdf::Grid(PiecewiseLinearCdf::new(axis, density)?))
    }

    pub fn normal(mean: f64, sigma: f64) -> Self {
        ReferenceCdf::Mixture(vec![MixtureComponent { weight: 1.0, mean, sigma }])
    }

    fn continuous_cdf(&self, x: f64) -> f64 {
        match self {
            ReferenceCdf::Grid(c) => c.cdf(x),
            ReferenceCdf::Mixture(parts) => {
                let total: f64 = parts.iter().map(|p| p.weight).sum();
                parts
                    .iter()
                    .map(|p| p.weight * 0.5 * (1.0 + libm::erf((x - p.mean) / (p.sigma * std::f64::consts::SQRT_2))))
                    .sum::<f64>()
                    / total
            }
            ReferenceCdf::Empirical(_) => unreachable!("empirical references use the two-sample statistic"),
        }
    }
}

fn sorted(values: &[f64]) -> Result<Vec<f64>> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("KS input contains non-finite values"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Kolmogorov-Smirnov distance between the empirical distribution of
/// `endpoints` and `reference`.
pub fn born_rule_ks(endpoints: &[f64], reference: &ReferenceCdf) -> Result<f64> {
    if endpoints.len() < MIN_KS_SAMPLES {
        return Err(Error::invalid(format!(
            "KS needs at least {MIN_KS_SAMPLES} endpoints (got {})",
            endpoints.len()
        )));
    }
    let xs = sorted(endpoints)?;
    let n = xs.len() as f64;
    if let ReferenceCdf::Empirical(other) = reference {
        return two_sample(&xs, &sorted(other)?);
    }
    Ok(xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = reference.continuous_cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
        .clamp(0.0, 1.0))
}

fn two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if b.is_empty() {
        return Err(Error::invalid("empirical reference is empty"));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::guidance::stream_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, 0);
        (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
    }

    #[test]
    fn direct_samples_pass() {
        let passes = (0..20)
            .filter(|&s| born_rule_ks(&normals(2000, s), &ReferenceCdf::normal(0.0, 1.0)).unwrap() < 0.05)
            .count();
        assert_eq!(passes, 20);
    }

    #[test]
    fn degenerate_sample_is_far() {
        let d = born_rule_ks(&vec![-5.0; 200], &ReferenceCdf::normal(0.0, 1.0)).unwrap();
        assert!(d > 0.99 && d <= 1.0);
    }

    #[test]
    fn identical_empirical_reference_is_close() {
        let x = normals(500, 2);
        assert!(born_rule_ks(&x, &ReferenceCdf::Empirical(x.clone())).unwrap() <= 1.0 / 500.0);
    }

    #[test]
    fn too_few_samples_are_rejected() {
        assert!(born_rule_ks(&normals(99, 1), &ReferenceCdf::normal(0.0, 1.0)).is_err());
    }

    #[test]
    fn grid_reference_agrees_with_the_analytic_one() {
        let axis = Axis::new(1024, -10.0, 10.0).unwrap();
        let dens: Vec<f64> = axis.coords().iter().map(|x| (-x * x / 2.0).exp()).collect();
        let x = normals(2000, 7);
        let a = born_rule_ks(&x, &ReferenceCdf::grid(&axis, &dens).unwrap()).unwrap();
        let b = born_rule_ks(&x, &ReferenceCdf::normal(0.0, 1.0)).unwrap();
        assert!((a - b).abs() < 1e-3);
    }

    #[test]
    fn mixture_cdf_is_a_weighted_sum() {
        let m = ReferenceCdf::Mixture(vec![
            MixtureComponent {
                weight: 1.0,
                mean: -3.0,
                sigma: 1.0,
            },
            MixtureComponent {
                weight: 3.0,
                mean: 3.0,
                sigma: 1.0,
            },
        ]);
        assert!((m.continuous_cdf(0.0) - 0.25).abs() < 1e-2);
    }
}

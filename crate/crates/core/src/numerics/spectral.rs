use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use super::grid::SpatialGrid;

struct AxisPlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
}

/// FFT plans and lattice wavenumbers for one grid.
pub struct Spectral {
    grid: SpatialGrid,
    plans: Vec<AxisPlan>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: &SpatialGrid) -> Self {
        let mut planner = FftPlanner::new();
        let plans = grid
            .axes()
            .iter()
            .map(|a| AxisPlan {
                forward: planner.plan_fft_forward(a.n_points),
                inverse: planner.plan_fft_inverse(a.n_points),
                k: a.wavenumbers(),
            })
            .collect();
        Spectral { grid: grid.clone(), plans }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.plans[axis].k
    }

    /// |k|² at every point of the (FFT-ordered) spectral lattice.
    pub fn k_squared(&self) -> Vec<f64> {
        match self.plans.as_slice() {
            [p] => p.k.iter().map(|k| k * k).collect(),
            [p0, p1] => p0.k.iter().flat_map(|k0| p1.k.iter().map(move |k1| k0 * k0 + k1 * k1)).collect(),
            _ => unreachable!(),
        }
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let pick = |p: &AxisPlan| if inverse { p.inverse.clone() } else { p.forward.clone() };
        match self.plans.as_slice() {
            [p] => pick(p).process(data),
            [p0, p1] => {
                let n0 = self.grid.axis(0).n_points;
                let n1 = self.grid.axis(1).n_points;
                // rows are contiguous
                pick(p1).process(data);
                let fft0 = pick(p0);
                let mut column = vec![Complex64::new(0.0, 0.0); n0];
                for j in 0..n1 {
                    for i in 0..n0 {
                        column[i] = data[i * n1 + j];
                    }
                    fft0.process(&mut column);
                    for i in 0..n0 {
                        data[i * n1 + j] = column[i];
                    }
                }
            }
            _ => unreachable!(),
        }
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    /// Inverse transform in place, including the 1/N normalization.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, true);
        let scale = 1.0 / data.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Spectral partial derivative along `axis`. The Nyquist mode is zeroed.
    pub fn derivative(&self, values: &[Complex64], axis: usize) -> Vec<Complex64> {
        let mut spec = values.to_vec();
        self.forward(&mut spec);
        let n_axis = self.grid.axis(axis).n_points;
        let nyquist = if n_axis % 2 == 0 { Some(n_axis / 2) } else { None };
        let k = &self.plans[axis].k;
        let stride = match (self.grid.dims(), axis) {
            (2, 0) => self.grid.axis(1).n_points,
            _ => 1,
        };
        for (idx, v) in spec.iter_mut().enumerate() {
            let j = (idx / stride) % n_axis;
            if Some(j) == nyquist {
                *v = Complex64::new(0.0, 0.0);
            } else {
                *v *= Complex64::new(0.0, k[j]);
            }
        }
        self.inverse(&mut spec);
        spec
    }

    /// Spectral gradient of a real field (imaginary parts discarded).
    pub fn real_derivative(&self, values: &[f64], axis: usize) -> Vec<f64> {
        let c: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.derivative(&c, axis).into_iter().map(|v| v.re).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::grid::Axis;
    use std::f64::consts::PI;

    #[test]
    fn derivative_of_lattice_mode_is_exact() {
        let g = SpatialGrid::line(128, 0.0, 2.0 * PI).unwrap();
        let s = Spectral::new(&g);
        let vals: Vec<Complex64> = g.axis(0).coords().iter().map(|&x| Complex64::from_polar(1.0, 5.0 * x)).collect();
        let d = s.derivative(&vals, 0);
        for (v, dv) in vals.iter().zip(&d) {
            assert!((dv - Complex64::new(0.0, 5.0) * v).norm() < 1e-11);
        }
    }

    #[test]
    fn plane_derivative_along_each_axis() {
        let g = SpatialGrid::plane(Axis::new(64, 0.0, 2.0 * PI).unwrap(), Axis::new(128, 0.0, 4.0 * PI).unwrap()).unwrap();
        let s = Spectral::new(&g);
        let vals: Vec<Complex64> = (0..g.len())
            .map(|i| {
                let [y, z] = g.point(i);
                Complex64::from_polar(1.0, 3.0 * y - 2.5 * z)
            })
            .collect();
        let dy = s.derivative(&vals, 0);
        let dz = s.derivative(&vals, 1);
        for i in 0..g.len() {
            assert!((dy[i] - Complex64::new(0.0, 3.0) * vals[i]).norm() < 1e-10);
            assert!((dz[i] - Complex64::new(0.0, -2.5) * vals[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn forward_inverse_roundtrip() {
        let g = SpatialGrid::line(64, -1.0, 1.0).unwrap();
        let s = Spectral::new(&g);
        let orig: Vec<Complex64> = (0..64).map(|i| Complex64::new(i as f64, -(i as f64).sqrt())).collect();
        let mut v = orig.clone();
        s.forward(&mut v);
        s.inverse(&mut v);
        for (a, b) in v.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-10);
        }
    }
}

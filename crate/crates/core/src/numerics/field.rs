use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use super::grid::SpatialGrid;
use crate::error::{Error, Result};

/// Action and mass scales. Both default to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnitsConfig {
    pub hbar: f64,
    pub mass: f64,
}

impl Default for UnitsConfig {
    fn default() -> Self {
        UnitsConfig { hbar: 1.0, mass: 1.0 }
    }
}

impl UnitsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0 && self.hbar.is_finite() && self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::invalid(format!(
                "hbar and mass must be positive, got hbar={}, mass={}",
                self.hbar, self.mass
            )));
        }
        Ok(())
    }

    /// ħ/m, the prefactor of every guidance law.
    pub fn hbar_over_mass(&self) -> f64 {
        self.hbar / self.mass
    }
}

/// A complex scalar wavefunction sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: SpatialGrid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: SpatialGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "field has {} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("field contains non-finite values"));
        }
        Ok(ComplexField { grid, values })
    }

    pub fn zeros(grid: &SpatialGrid) -> Self {
        ComplexField {
            grid: grid.clone(),
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: &SpatialGrid, f: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        let dims = grid.dims();
        let values = (0..grid.len()).map(|i| f(&grid.point(i)[..dims])).collect();
        Self::new(grid.clone(), values)
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// ⟨self|other⟩ = Σ conj(self)·other·dV.
    pub fn overlap(&self, other: &ComplexField) -> Result<Complex64> {
        self.grid.ensure_same(&other.grid)?;
        let s: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum();
        Ok(s * self.grid.cell_volume())
    }

    /// Σ |self|·|other|·dV, the overlap of the moduli. Unlike the inner
    /// product it is not conserved by unitary evolution and falls to zero
    /// as the supports separate.
    pub fn modulus_overlap(&self, other: &ComplexField) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a.norm() * b.norm()).sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn scale(&mut self, factor: Complex64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::invalid("cannot normalize a zero field"));
        }
        self.scale(Complex64::new(1.0 / n, 0.0));
        Ok(())
    }

    /// a·self + b·other on a shared grid.
    pub fn combine(&self, a: Complex64, other: &ComplexField, b: Complex64) -> Result<ComplexField> {
        self.grid.ensure_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(ComplexField {
            grid: self.grid.clone(),
            values,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Writes the debugging text format (see [`write_text`]).
    pub fn to_text(&self) -> String {
        write_text(&self.grid, &[&self.values])
    }
}

/// Two-component spinor; components along the quantization axis z.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    up: ComplexField,
    down: ComplexField,
}

impl SpinorField {
    pub fn new(up: ComplexField, down: ComplexField) -> Result<Self> {
        up.grid.ensure_same(&down.grid)?;
        Ok(SpinorField { up, down })
    }

    /// (α·ψ, β·ψ) for a shared spatial profile.
    pub fn product(alpha: Complex64, beta: Complex64, spatial: &ComplexField) -> Self {
        let mut up = spatial.clone();
        up.scale(alpha);
        let mut down = spatial.clone();
        down.scale(beta);
        SpinorField { up, down }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.up.grid
    }

    pub fn up(&self) -> &ComplexField {
        &self.up
    }

    pub fn down(&self) -> &ComplexField {
        &self.down
    }

    pub(crate) fn components_mut(&mut self) -> (&mut ComplexField, &mut ComplexField) {
        (&mut self.up, &mut self.down)
    }

    pub fn into_components(self) -> (ComplexField, ComplexField) {
        (self.up, self.down)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.up.norm_sqr() + self.down.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Σ Ψ†Φ·dV.
    pub fn overlap(&self, other: &SpinorField) -> Result<Complex64> {
        Ok(self.up.overlap(&other.up)? + self.down.overlap(&other.down)?)
    }

    pub fn density(&self) -> Vec<f64> {
        self.up
            .values
            .iter()
            .zip(&self.down.values)
            .map(|(u, d)| u.norm_sqr() + d.norm_sqr())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.up.is_finite() && self.down.is_finite()
    }

    pub fn to_text(&self) -> String {
        write_text(self.grid(), &[&self.up.values, &self.down.values])
    }
}

/// Text dump: a `#` header naming the grid, then one line per grid point
/// holding the coordinates followed by `re im` for each component.
fn write_text(grid: &SpatialGrid, components: &[&[Complex64]]) -> String {
    let mut out = String::new();
    let axes: Vec<String> = grid
        .axes()
        .iter()
        .map(|a| format!("{}:{:.17e}:{:.17e}", a.n_points, a.min, a.max))
        .collect();
    let _ = writeln!(out, "# grid {} components {}", axes.join(" "), components.len());
    let dims = grid.dims();
    for i in 0..grid.len() {
        let p = grid.point(i);
        let mut cols: Vec<String> = p[..dims].iter().map(|c| format!("{c:.17e}")).collect();
        for c in components {
            cols.push(format!("{:.17e}", c[i].re));
            cols.push(format!("{:.17e}", c[i].im));
        }
        let _ = writeln!(out, "{}", cols.join(" "));
    }
    out
}

/// Parses the text dump back into a grid and component value arrays.
pub fn read_text(text: &str) -> Result<(SpatialGrid, Vec<Vec<Complex64>>)> {
    use super::grid::Axis;
    let bad = |m: &str| Error::invalid(format!("field text: {m}"));
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty input"))?;
    let words: Vec<&str> = header.split_whitespace().collect();
    if words.first() != Some(&"#") || words.get(1) != Some(&"grid") {
        return Err(bad("missing header"));
    }
    let comp_pos = words
        .iter()
        .position(|w| *w == "components")
        .ok_or_else(|| bad("missing component count"))?;
    let mut axes = Vec::new();
    for w in &words[2..comp_pos] {
        let parts: Vec<&str> = w.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("malformed axis"));
        }
        let n = parts[0].parse().map_err(|_| bad("axis size"))?;
        let lo = parts[1].parse().map_err(|_| bad("axis min"))?;
        let hi = parts[2].parse().map_err(|_| bad("axis max"))?;
        axes.push(Axis::new(n, lo, hi)?);
    }
    let grid = SpatialGrid::new(axes)?;
    let n_comp: usize = words
        .get(comp_pos + 1)
        .and_then(|w| w.parse().ok())
        .ok_or_else(|| bad("component count"))?;
    let mut comps = vec![Vec::with_capacity(grid.len()); n_comp];
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad("number"))?;
        if nums.len() != grid.dims() + 2 * n_comp {
            return Err(bad("wrong column count"));
        }
        for (c, comp) in comps.iter_mut().enumerate() {
            let o = grid.dims() + 2 * c;
            comp.push(Complex64::new(nums[o], nums[o + 1]));
        }
    }
    if comps.iter().any(|c| c.len() != grid.len()) {
        return Err(bad("row count does not match grid"));
    }
    Ok((grid, comps))
}

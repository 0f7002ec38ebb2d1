//! Declarative experiment configuration.
//!
//! Every physics default lives in the `Default` impls of this file; no
//! driver inlines a parameter value. Configs are read from TOML; every
//! field is optional and falls back to the defaults below.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::AttributionThresholds;
use crate::error::{Error, Result};
use crate::numerics::{Axis, UnitsConfig};
use crate::pointer::DEFAULT_RATIO_THRESHOLD;

/// Default values that are shared by several blocks.
pub mod defaults {
    use crate::analysis::AttributionThresholds;

    pub const SEED: u64 = 7;
    pub const ATTRIBUTION: AttributionThresholds = AttributionThresholds { high: 0.99, low: 0.6 };
    /// Inter-packet overlap below which grid branches count as disjoint.
    pub const SEPARATION_OVERLAP: f64 = 1e-6;
    /// Equal-weight two-branch amplitude.
    pub const HALF: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, 0.0];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    BeamSplitter,
    SternGerlach,
    OpticalSg,
    AncillaChain,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::BeamSplitter,
        ScenarioKind::SternGerlach,
        ScenarioKind::OpticalSg,
        ScenarioKind::AncillaChain,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::BeamSplitter => "beam_splitter",
            ScenarioKind::SternGerlach => "stern_gerlach",
            ScenarioKind::OpticalSg => "optical_sg",
            ScenarioKind::AncillaChain => "ancilla_chain",
        }
    }

    /// Whether the scenario solves the Schrödinger equation on a grid.
    pub fn is_grid(self) -> bool {
        matches!(self, ScenarioKind::BeamSplitter | ScenarioKind::SternGerlach)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A grid axis as written in a config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AxisConfig {
    pub n_points: usize,
    pub min: f64,
    pub max: f64,
}

impl Default for AxisConfig {
    fn default() -> Self {
        AxisConfig {
            n_points: 1024,
            min: -32.0,
            max: 32.0,
        }
    }
}

impl AxisConfig {
    pub fn axis(&self) -> Result<Axis> {
        Axis::new(self.n_points, self.min, self.max)
    }
}

/// Complex amplitude written as `[re, im]`.
pub type Amplitude = [f64; 2];

pub fn complex(a: Amplitude) -> Complex64 {
    Complex64::new(a[0], a[1])
}

fn check_pair(name: &str, pair: [Amplitude; 2]) -> Result<()> {
    let norm = complex(pair[0]).norm_sqr() + complex(pair[1]).norm_sqr();
    if !((norm - 1.0).abs() <= 1e-9) {
        return Err(Error::Config(format!("{name}: amplitudes must have |a|² + |b|² = 1 (got {norm})")));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Config(format!("{name} must be positive and finite (got {v})")));
    }
    Ok(())
}

fn check_count(name: &str, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Config(format!("{name} must be at least 1")));
    }
    Ok(())
}

/// Time stepping for grid scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepConfig {
    pub dt: f64,
    pub duration: f64,
    /// Steps between stored velocity frames.
    pub frame_stride: usize,
    /// Longest trajectory RK4 step.
    pub dt_traj: f64,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            dt: 0.005,
            duration: 3.0,
            frame_stride: 2,
            dt_traj: 0.005,
        }
    }
}

impl StepConfig {
    pub fn n_steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    fn validate(&self, name: &str) -> Result<()> {
        check_positive(&format!("{name}.dt"), self.dt)?;
        check_positive(&format!("{name}.duration"), self.duration)?;
        check_positive(&format!("{name}.dt_traj"), self.dt_traj)?;
        check_count(&format!("{name}.frame_stride"), self.frame_stride)?;
        if ((self.duration / self.dt) - self.n_steps() as f64).abs() > 1e-6 {
            return Err(Error::Config(format!("{name}: duration must be a whole number of steps")));
        }
        if self.n_steps() % self.frame_stride != 0 {
            return Err(Error::Config(format!("{name}: the step count must be a multiple of frame_stride")));
        }
        if self.dt_traj > self.dt * self.frame_stride as f64 + 1e-15 {
            return Err(Error::Config(format!("{name}: dt_traj must not exceed the frame spacing")));
        }
        Ok(())
    }
}

/// Pointer-model detector attached to each separated beam-splitter packet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub count: usize,
    pub sigma: f64,
    pub displacement: f64,
    pub ramp_time: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            count: 16,
            sigma: 1.0,
            displacement: 4.0,
            ramp_time: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamSplitterConfig {
    pub n: usize,
    pub grid: AxisConfig,
    pub center: f64,
    pub sigma: f64,
    /// Wavenumber of the transmitted (+k, detector D1) packet.
    pub wavenumber: f64,
    /// Amplitudes of the +k (D1, right) and −k (D2, left) packets.
    pub amplitudes: [Amplitude; 2],
    pub steps: StepConfig,
    pub separation_overlap: f64,
    pub detector: DetectorConfig,
}

impl Default for BeamSplitterConfig {
    fn default() -> Self {
        BeamSplitterConfig {
            n: 1000,
            grid: AxisConfig::default(),
            center: 0.0,
            sigma: 1.0,
            wavenumber: 5.0,
            amplitudes: [defaults::HALF, defaults::HALF],
            steps: StepConfig::default(),
            separation_overlap: defaults::SEPARATION_OVERLAP,
            detector: DetectorConfig::default(),
        }
    }
}

impl BeamSplitterConfig {
    pub fn validate(&self) -> Result<()> {
        check_count("beam_splitter.n", self.n)?;
        self.grid.axis()?;
        check_positive("beam_splitter.sigma", self.sigma)?;
        check_pair("beam_splitter", self.amplitudes)?;
        self.steps.validate("beam_splitter.steps")?;
        check_positive("beam_splitter.separation_overlap", self.separation_overlap)?;
        check_count("beam_splitter.detector.count", self.detector.count)?;
        check_positive("beam_splitter.detector.sigma", self.detector.sigma)?;
        check_positive("beam_splitter.detector.ramp_time", self.detector.ramp_time)?;
        Ok(())
    }
}

/// Transverse axis used when the Gordon term is switched on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransverseConfig {
    pub sigma: f64,
    pub n_points: usize,
    /// Half-width of the y domain in units of `sigma`.
    pub half_width: f64,
}

impl Default for TransverseConfig {
    fn default() -> Self {
        TransverseConfig {
            sigma: 400.0,
            n_points: 64,
            half_width: 12.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SternGerlachConfig {
    pub n: usize,
    pub grid: AxisConfig,
    pub center: f64,
    pub sigma: f64,
    /// Spin amplitudes (α, β) along +z and −z.
    pub amplitudes: [Amplitude; 2],
    /// Field gradient b; its sign sets the orientation.
    pub gradient: f64,
    /// Field offset B0.
    pub offset: f64,
    pub steps: StepConfig,
    /// Also run the field-inverted twin with the same samples.
    pub twin: bool,
    /// Run on a (y, z) plane with the Gordon term and compare with the
    /// convective velocity on the same samples.
    pub gordon: bool,
    pub transverse: TransverseConfig,
}

impl Default for SternGerlachConfig {
    fn default() -> Self {
        SternGerlachConfig {
            n: 1000,
            grid: AxisConfig::default(),
            center: 0.0,
            sigma: 1.0,
            amplitudes: [defaults::HALF, defaults::HALF],
            gradient: 6.0,
            offset: 0.0,
            steps: StepConfig::default(),
            twin: true,
            gordon: false,
            transverse: TransverseConfig::default(),
        }
    }
}

impl SternGerlachConfig {
    pub fn validate(&self) -> Result<()> {
        check_count("stern_gerlach.n", self.n)?;
        self.grid.axis()?;
        check_positive("stern_gerlach.sigma", self.sigma)?;
        check_pair("stern_gerlach", self.amplitudes)?;
        if !(self.gradient.is_finite() && self.gradient != 0.0) {
            return Err(Error::Config("stern_gerlach.gradient must be finite and non-zero".into()));
        }
        if !self.offset.is_finite() {
            return Err(Error::Config("stern_gerlach.offset must be finite".into()));
        }
        self.steps.validate("stern_gerlach.steps")?;
        check_positive("stern_gerlach.transverse.sigma", self.transverse.sigma)?;
        check_positive("stern_gerlach.transverse.half_width", self.transverse.half_width)?;
        Ok(())
    }
}

/// Integration and classification controls for pointer-model runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PointerStepConfig {
    pub n_records: usize,
    pub max_step: f64,
}

impl Default for PointerStepConfig {
    fn default() -> Self {
        PointerStepConfig {
            n_records: 200,
            max_step: 0.005,
        }
    }
}

impl PointerStepConfig {
    fn validate(&self, name: &str) -> Result<()> {
        check_count(&format!("{name}.n_records"), self.n_records)?;
        check_positive(&format!("{name}.max_step"), self.max_step)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpticalSgConfig {
    pub n: usize,
    /// Apparatus sizes swept.
    pub n_values: Vec<usize>,
    pub amplitudes: [Amplitude; 2],
    pub system_sigma: f64,
    pub apparatus_sigma: f64,
    /// Each system branch moves at ±system_speed over [0, duration].
    pub system_speed: f64,
    /// Initial distance between the system centres.
    pub initial_separation: f64,
    /// Apparatus displacement a_max reached at `ramp_time`.
    pub displacement: f64,
    pub ramp_time: f64,
    pub duration: f64,
    pub spreading: bool,
    pub steps: PointerStepConfig,
    /// Initial separation (in units of the system width) of the
    /// pre-separated control run at the largest N; 0 disables it.
    pub control_separation: f64,
}

impl Default for OpticalSgConfig {
    fn default() -> Self {
        OpticalSgConfig {
            n: 1000,
            n_values: vec![1, 4, 16, 64],
            amplitudes: [defaults::HALF, defaults::HALF],
            system_sigma: 1.0,
            apparatus_sigma: 1.0,
            system_speed: 0.5,
            initial_separation: 0.0,
            displacement: 6.0,
            ramp_time: 1.0,
            duration: 1.0,
            spreading: false,
            steps: PointerStepConfig::default(),
            control_separation: 8.0,
        }
    }
}

impl OpticalSgConfig {
    pub fn validate(&self) -> Result<()> {
        check_count("optical_sg.n", self.n)?;
        if self.n_values.is_empty() {
            return Err(Error::Config("optical_sg.n_values must list at least one apparatus size".into()));
        }
        check_pair("optical_sg", self.amplitudes)?;
        check_positive("optical_sg.system_sigma", self.system_sigma)?;
        check_positive("optical_sg.apparatus_sigma", self.apparatus_sigma)?;
        check_positive("optical_sg.ramp_time", self.ramp_time)?;
        check_positive("optical_sg.duration", self.duration)?;
        if !(self.initial_separation >= 0.0 && self.control_separation >= 0.0) {
            return Err(Error::Config("optical_sg separations must be non-negative".into()));
        }
        self.steps.validate("optical_sg.steps")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AncillaChainConfig {
    pub n: usize,
    /// Ancilla sizes N′ swept.
    pub n_prime_values: Vec<usize>,
    /// Initial S-branch separations swept, in units of the system width.
    pub separations: Vec<f64>,
    /// Final apparatus size N.
    pub n_apparatus: usize,
    pub amplitudes: [Amplitude; 2],
    pub system_sigma: f64,
    pub ancilla_sigma: f64,
    pub apparatus_sigma: f64,
    pub system_speed: f64,
    /// End of stage 1 (ancilla ramp over [0, t1]).
    pub stage1_end: f64,
    /// End of stage 2 (apparatus ramp over [t1, t2]).
    pub stage2_end: f64,
    pub ancilla_displacement: f64,
    pub apparatus_displacement: f64,
    pub spreading: bool,
    pub steps: PointerStepConfig,
}

impl Default for AncillaChainConfig {
    fn default() -> Self {
        AncillaChainConfig {
            n: 1000,
            n_prime_values: vec![1, 4, 16, 64],
            separations: vec![0.0, 0.5, 1.0, 2.0, 4.0, 8.0],
            n_apparatus: 64,
            amplitudes: [defaults::HALF, defaults::HALF],
            system_sigma: 1.0,
            ancilla_sigma: 1.0,
            apparatus_sigma: 1.0,
            system_speed: 0.5,
            stage1_end: 1.0,
            stage2_end: 2.0,
            ancilla_displacement: 4.0,
            apparatus_displacement: 6.0,
            spreading: false,
            steps: PointerStepConfig::default(),
        }
    }
}

impl AncillaChainConfig {
    pub fn validate(&self) -> Result<()> {
        check_count("ancilla_chain.n", self.n)?;
        check_count("ancilla_chain.n_apparatus", self.n_apparatus)?;
        if self.n_prime_values.is_empty() || self.n_prime_values.contains(&0) {
            return Err(Error::Config("ancilla_chain.n_prime_values must be non-empty and >= 1".into()));
        }
        if self.separations.is_empty() || self.separations.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::Config("ancilla_chain.separations must be non-empty and non-negative".into()));
        }
        check_pair("ancilla_chain", self.amplitudes)?;
        check_positive("ancilla_chain.system_sigma", self.system_sigma)?;
        check_positive("ancilla_chain.ancilla_sigma", self.ancilla_sigma)?;
        check_positive("ancilla_chain.apparatus_sigma", self.apparatus_sigma)?;
        if !(self.stage1_end > 0.0 && self.stage2_end > self.stage1_end) {
            return Err(Error::Config("ancilla_chain needs 0 < stage1_end < stage2_end".into()));
        }
        self.steps.validate("ancilla_chain.steps")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BornCheckConfig {
    pub n: usize,
    pub scenarios: Vec<ScenarioKind>,
}

impl Default for BornCheckConfig {
    fn default() -> Self {
        BornCheckConfig {
            n: 2000,
            scenarios: ScenarioKind::ALL.to_vec(),
        }
    }
}

/// Full description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Scenario this file is meant for; when present the CLI subcommand must match.
    pub scenario: Option<ScenarioKind>,
    pub seed: u64,
    pub units: UnitsConfig,
    /// Weight ratio needed to assign an outcome.
    pub ratio_threshold: f64,
    pub attribution: AttributionThresholds,
    pub beam_splitter: BeamSplitterConfig,
    pub stern_gerlach: SternGerlachConfig,
    pub optical_sg: OpticalSgConfig,
    pub ancilla_chain: AncillaChainConfig,
    pub born_check: BornCheckConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scenario: None,
            seed: defaults::SEED,
            units: UnitsConfig::default(),
            ratio_threshold: DEFAULT_RATIO_THRESHOLD,
            attribution: defaults::ATTRIBUTION,
            beam_splitter: BeamSplitterConfig::default(),
            stern_gerlach: SternGerlachConfig::default(),
            optical_sg: OpticalSgConfig::default(),
            ancilla_chain: AncillaChainConfig::default(),
            born_check: BornCheckConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// TOML text with every default written out.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config types serialize to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.units.validate().map_err(|e| Error::Config(e.to_string()))?;
        if !(self.ratio_threshold > 1.0 && self.ratio_threshold.is_finite()) {
            return Err(Error::Config("ratio_threshold must be finite and greater than 1".into()));
        }
        let AttributionThresholds { high, low } = self.attribution;
        if !(0.0 <= low && low < high && high <= 1.0) {
            return Err(Error::Config("attribution thresholds need 0 <= low < high <= 1".into()));
        }
        self.beam_splitter.validate()?;
        self.stern_gerlach.validate()?;
        self.optical_sg.validate()?;
        self.ancilla_chain.validate()?;
        check_count("born_check.n", self.born_check.n)?;
        Ok(())
    }

    /// Checks that a config written for one scenario is not run as another.
    pub fn expect_scenario(&self, kind: ScenarioKind) -> Result<()> {
        match self.scenario {
            Some(k) if k != kind => Err(Error::Config(format!("config is for scenario '{k}', not '{kind}'"))),
            _ => Ok(()),
        }
    }
}

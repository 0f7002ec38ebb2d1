use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bohmctx_core::scenarios::{ScenarioConfig, ScenarioKind};

#[derive(Debug, Parser)]
#[command(name = "bohmctx", version, about = "Pilot-wave measurement scenarios")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Two-packet beam splitter followed by detectors.
    BeamSplitter(Common),
    /// Spin-1/2 packet in an inhomogeneous field, with the inverted-field twin run.
    SternGerlach(Common),
    /// Co-located branches read out by an N-particle pointer, swept over N.
    OpticalSg(Common),
    /// System, ancilla and apparatus chain, swept over ancilla size and branch separation.
    Ancilla(Common),
    /// Endpoint distributions against |ψ(T)|² for the listed scenarios.
    BornCheck(Common),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML config; missing fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, created if needed.
    #[arg(long, default_value = "bohmctx-out")]
    pub out: PathBuf,
    /// Format of the trajectory and overlap tables.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Also write SVG plots of overlaps and predictor accuracies.
    #[arg(long)]
    pub plot: bool,
    /// Ensemble size override.
    #[arg(long, value_name = "N")]
    pub trajectories: Option<usize>,
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::BeamSplitter(c) | Command::SternGerlach(c) | Command::OpticalSg(c) | Command::Ancilla(c) | Command::BornCheck(c) => c,
        }
    }

    pub fn kind(&self) -> Option<ScenarioKind> {
        match self {
            Command::BeamSplitter(_) => Some(ScenarioKind::BeamSplitter),
            Command::SternGerlach(_) => Some(ScenarioKind::SternGerlach),
            Command::OpticalSg(_) => Some(ScenarioKind::OpticalSg),
            Command::Ancilla(_) => Some(ScenarioKind::AncillaChain),
            Command::BornCheck(_) => None,
        }
    }

    /// Loads the config and applies the command-line overrides.
    pub fn config(&self) -> bohmctx_core::Result<ScenarioConfig> {
        let common = self.common();
        let mut config = match &common.config {
            Some(path) => ScenarioConfig::from_path(path)?,
            None => ScenarioConfig::default(),
        };
        if let Some(kind) = self.kind() {
            config.expect_scenario(kind)?;
            config.scenario = Some(kind);
        }
        if let Some(seed) = common.seed {
            config.seed = seed;
        }
        if let Some(n) = common.trajectories {
            match self.kind() {
                Some(ScenarioKind::BeamSplitter) => config.beam_splitter.n = n,
                Some(ScenarioKind::SternGerlach) => config.stern_gerlach.n = n,
                Some(ScenarioKind::OpticalSg) => config.optical_sg.n = n,
                Some(ScenarioKind::AncillaChain) => config.ancilla_chain.n = n,
                None => config.born_check.n = n,
            }
        }
        config.validate()?;
        Ok(config)
    }
}

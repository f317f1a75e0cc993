use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use smrgrid::datacenter::{AmbientConditions, ChillerParams, ItPowerParams};
use smrgrid::dynamics::SimConfig;
use smrgrid::powerflow::PowerFlowOptions;
use smrgrid::scenario::{ConfigKind, Configuration, ContingencySpec, SettlingBands, SnapshotSelection};

use crate::CliError;

/// Where the demand profile comes from, in order of precedence: a prebuilt
/// profile CSV, task and machine-event traces, or the seeded synthetic week.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSection {
    pub prebuilt: Option<PathBuf>,
    pub tasks: Option<PathBuf>,
    pub machine_events: Option<PathBuf>,
    pub t0_s: f64,
    pub t1_s: f64,
    pub synthetic_machines: usize,
    pub it: ItPowerParams,
    pub chiller: ChillerParams,
    pub ambient: AmbientConditions,
    /// Rescale the IT rating so the total demand peaks here, MW.
    pub peak_total_mw: Option<f64>,
}

impl Default for ProfileSection {
    fn default() -> Self {
        ProfileSection {
            prebuilt: None,
            tasks: None,
            machine_events: None,
            t0_s: 0.0,
            t1_s: 7.0 * 86400.0,
            synthetic_machines: 400,
            it: ItPowerParams::default(),
            chiller: ChillerParams::default(),
            ambient: AmbientConditions::default(),
            peak_total_mw: Some(60.0),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomContingencies {
    pub count: usize,
    pub hops: usize,
}

impl Default for RandomContingencies {
    fn default() -> Self {
        RandomContingencies { count: 10, hops: 3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransientSection {
    /// Profile bin; defaults to the peak-load bin.
    pub snapshot: Option<usize>,
    pub config: ConfigKind,
    pub contingency: Option<ContingencySpec>,
    pub dt_halving: bool,
}

impl Default for TransientSection {
    fn default() -> Self {
        TransientSection { snapshot: None, config: ConfigKind::WithIes, contingency: None, dt_halving: false }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    /// Explicit contingencies; when empty a random batch is drawn.
    pub contingencies: Vec<ContingencySpec>,
    pub random: RandomContingencies,
    pub snapshots: SnapshotSelection,
    pub bands: SettlingBands,
    pub write_series: bool,
}

impl Default for CompareSection {
    fn default() -> Self {
        CompareSection {
            contingencies: Vec::new(),
            random: RandomContingencies::default(),
            snapshots: SnapshotSelection::default(),
            bands: SettlingBands::default(),
            write_series: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub case: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub profile: Option<ProfileSection>,
    pub configuration: Configuration,
    pub powerflow: PowerFlowOptions,
    pub sim: SimConfig,
    pub transient: TransientSection,
    pub compare: CompareSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let configuration = Configuration::with_ies(25, Default::default());
        RunConfig {
            case: PathBuf::from("data/ieee118.json"),
            out: PathBuf::from("out"),
            seed: 42,
            profile: Some(ProfileSection::default()),
            configuration,
            powerflow: PowerFlowOptions::default(),
            sim: SimConfig::default(),
            transient: TransientSection::default(),
            compare: CompareSection::default(),
        }
    }
}

impl RunConfig {
    /// Read a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        fix(&mut cfg.case);
        fix(&mut cfg.out);
        if let Some(p) = &mut cfg.profile {
            for f in [&mut p.prebuilt, &mut p.tasks, &mut p.machine_events].into_iter().flatten() {
                fix(f);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !self.case.exists() {
            return Err(CliError::Config(format!("case file {} does not exist", self.case.display())));
        }
        if let Some(p) = &self.profile {
            for f in [&p.prebuilt, &p.tasks, &p.machine_events].into_iter().flatten() {
                if !f.exists() {
                    return Err(CliError::Config(format!("trace file {} does not exist", f.display())));
                }
            }
            if p.tasks.is_some() != p.machine_events.is_some() {
                return Err(CliError::Config("tasks and machine_events must be given together".into()));
            }
        }
        self.configuration.validate()?;
        self.sim.validate()?;
        self.powerflow.validate()?;
        Ok(())
    }
}

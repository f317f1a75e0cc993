use serde::{Deserialize, Serialize};

use crate::datacenter::LoadProfile;
use crate::dynamics::{BessParams, MachineLibrary, MachineParams, SmrParams};
use crate::error::{Error, Result};
use crate::grid::NetworkCase;
use crate::powerflow::{apply_snapshot, LocalDispatch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConfigKind {
    GridOnly,
    WithIes,
}

impl ConfigKind {
    pub fn label(self) -> &'static str {
        match self {
            ConfigKind::GridOnly => "grid_only",
            ConfigKind::WithIes => "with_ies",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IesConfig {
    pub smr: SmrParams,
    pub smr_machine: MachineParams,
    pub bess: BessParams,
    /// Declared total, MW; must equal SMR plus BESS ratings.
    pub capacity_mw: f64,
    /// Fraction of SMR rating held back from steady dispatch for governor
    /// response.
    pub smr_headroom: f64,
    /// Multiplies the datacenter cooling demand to give the SMR's thermal
    /// extraction.
    pub thermal_extraction_factor: f64,
}

impl Default for IesConfig {
    fn default() -> Self {
        IesConfig {
            smr: SmrParams::default(),
            smr_machine: MachineParams { h: 5.0, d: 2.0, xd_p: 0.25, mva_base: 60.0 },
            bess: BessParams::default(),
            capacity_mw: 60.0,
            smr_headroom: 0.1,
            thermal_extraction_factor: 1.0,
        }
    }
}

impl IesConfig {
    pub fn validate(&self) -> Result<()> {
        self.smr.validate()?;
        self.smr_machine.validate()?;
        self.bess.validate()?;
        if (self.smr.p_max + self.bess.p_rating - self.capacity_mw).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "SMR {} MW + BESS {} MW does not equal declared IES capacity {} MW",
                self.smr.p_max, self.bess.p_rating, self.capacity_mw
            )));
        }
        if !(0.0..1.0).contains(&self.smr_headroom) || !(self.thermal_extraction_factor >= 0.0) {
            return Err(Error::invalid("smr_headroom in [0, 1) and thermal_extraction_factor >= 0 required"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Configuration {
    pub kind: ConfigKind,
    pub dc_bus: u32,
    pub ies: Option<IesConfig>,
    pub dc_power_factor: f64,
    pub machines: MachineLibrary,
}

impl Default for Configuration {
    fn default() -> Self {
        Configuration {
            kind: ConfigKind::GridOnly,
            dc_bus: 25,
            ies: None,
            dc_power_factor: 0.95,
            machines: MachineLibrary::default(),
        }
    }
}

impl Configuration {
    pub fn grid_only(dc_bus: u32) -> Self {
        Configuration { dc_bus, ..Default::default() }
    }

    pub fn with_ies(dc_bus: u32, ies: IesConfig) -> Self {
        Configuration { kind: ConfigKind::WithIes, dc_bus, ies: Some(ies), ..Default::default() }
    }

    /// Same settings, other configuration kind.
    pub fn as_kind(&self, kind: ConfigKind) -> Self {
        Configuration { kind, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dc_power_factor > 0.0 && self.dc_power_factor <= 1.0) {
            return Err(Error::invalid("dc_power_factor must be in (0, 1]"));
        }
        match (&self.kind, &self.ies) {
            (ConfigKind::WithIes, None) => Err(Error::invalid("WithIes configuration requires an ies section")),
            (_, Some(ies)) => ies.validate(),
            _ => Ok(()),
        }
    }

    fn ies(&self) -> Option<&IesConfig> {
        match self.kind {
            ConfigKind::WithIes => self.ies.as_ref(),
            ConfigKind::GridOnly => None,
        }
    }

    pub(crate) fn active_ies(&self) -> Option<&IesConfig> {
        self.ies()
    }

    /// Local dispatch for a datacenter demand of `p_mw`: the SMR carries the
    /// load up to its rating less headroom, the BESS idles.
    pub fn dispatch(&self, p_mw: f64) -> Option<LocalDispatch> {
        self.ies().map(|ies| LocalDispatch {
            smr_mw: p_mw.clamp(0.0, (1.0 - ies.smr_headroom) * ies.smr.p_max),
            smr_rating_mw: ies.smr.p_max,
            smr_mva_base: ies.smr_machine.mva_base,
            bess_mw: 0.0,
            bess_rating_mw: ies.bess.p_rating,
        })
    }

    pub fn reactive_for(&self, p_mw: f64) -> f64 {
        p_mw * self.dc_power_factor.acos().tan()
    }
}

/// Datacenter demand at one profile bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub index: usize,
    pub timestamp_s: f64,
    pub p_mw: f64,
    pub q_cool_mwth: f64,
}

impl Snapshot {
    pub fn from_profile(profile: &LoadProfile, index: usize) -> Result<Self> {
        if index >= profile.len() {
            return Err(Error::invalid(format!("snapshot {index} outside profile of {} bins", profile.len())));
        }
        Ok(Snapshot {
            index,
            timestamp_s: profile.timestamps[index],
            p_mw: profile.p_total(index),
            q_cool_mwth: profile.q_cool[index],
        })
    }

    /// Network case for this snapshot under `cfg`.
    pub fn case(&self, base: &NetworkCase, cfg: &Configuration) -> Result<NetworkCase> {
        apply_snapshot(base, cfg.dc_bus, self.p_mw, cfg.reactive_for(self.p_mw), cfg.dispatch(self.p_mw).as_ref())
    }
}

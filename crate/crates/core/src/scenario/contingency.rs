use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Event, EventKind};
use crate::error::{Error, Result};
use crate::grid::NetworkCase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ContingencyKind {
    BusFault,
    LineTrip,
    GenTrip,
    LoadStep,
}

/// Which element a contingency hits. `Explicit` ids are bus ids for bus
/// faults and load steps, branch indices for line trips and generator
/// indices for generator trips.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Target {
    Explicit {
        id: usize,
    },
    /// Random element within `k` hops of the datacenter bus.
    Near {
        k: usize,
    },
    Anywhere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContingencySpec {
    pub kind: ContingencyKind,
    #[serde(default = "default_target")]
    pub target: Target,
    #[serde(default = "default_t_apply")]
    pub t_apply: f64,
    /// Fault duration, s.
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default)]
    pub rng_seed: u64,
    /// Load step size, MW and MVAr.
    #[serde(default)]
    pub dp_mw: f64,
    #[serde(default)]
    pub dq_mvar: f64,
    /// Fault shunt susceptance, pu.
    #[serde(default = "default_fault_b")]
    pub fault_b: f64,
}

fn default_target() -> Target {
    Target::Near { k: 3 }
}
fn default_t_apply() -> f64 {
    3.0
}
fn default_duration() -> f64 {
    0.1
}
fn default_fault_b() -> f64 {
    -1e4
}

impl ContingencySpec {
    pub fn new(kind: ContingencyKind, target: Target, rng_seed: u64) -> Self {
        ContingencySpec {
            kind,
            target,
            t_apply: default_t_apply(),
            duration: default_duration(),
            rng_seed,
            dp_mw: 0.0,
            dq_mvar: 0.0,
            fault_b: default_fault_b(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_apply > 0.0) {
            return Err(Error::invalid("t_apply must be > 0"));
        }
        if self.kind == ContingencyKind::BusFault && !(self.duration > 0.0) {
            return Err(Error::invalid("fault duration must be > 0"));
        }
        Ok(())
    }

    /// Candidate elements for this kind, sorted.
    fn candidates(&self, case: &NetworkCase, dc_bus: u32) -> Result<Vec<usize>> {
        let dist = case.hop_distances(dc_bus)?;
        let within = |bus: u32, lo: usize| match self.target {
            Target::Near { k } => dist.get(&bus).is_some_and(|&d| d >= lo && d <= k),
            _ => true,
        };
        let mut out: Vec<usize> = match self.kind {
            // faults and load steps at the POI itself are excluded so the
            // disturbance is external to the datacenter
            ContingencyKind::BusFault | ContingencyKind::LoadStep => {
                case.buses().iter().filter(|b| b.id != dc_bus && within(b.id, 1)).map(|b| b.id as usize).collect()
            }
            ContingencyKind::LineTrip => case
                .branches()
                .iter()
                .enumerate()
                .filter(|(k, br)| {
                    br.status
                        && match self.target {
                            Target::Near { k: hops } => {
                                let d = |b: u32| dist.get(&b).copied().unwrap_or(usize::MAX);
                                d(br.from_bus).min(d(br.to_bus)) < hops
                            }
                            _ => true,
                        }
                        && case.islands(Some(*k)) == 1
                })
                .map(|(k, _)| k)
                .collect(),
            ContingencyKind::GenTrip => case
                .generators()
                .iter()
                .enumerate()
                .filter(|(_, g)| g.status && g.p_set > 0.0 && within(g.bus, 0))
                .map(|(k, _)| k)
                .collect(),
        };
        out.sort_unstable();
        Ok(out)
    }

    /// Event list for this contingency on `case`, deterministic in
    /// `rng_seed`.
    pub fn resolve(&self, case: &NetworkCase, dc_bus: u32) -> Result<Vec<Event>> {
        self.validate()?;
        let id = match self.target {
            Target::Explicit { id } => id,
            _ => {
                let c = self.candidates(case, dc_bus)?;
                if c.is_empty() {
                    return Err(Error::invalid(format!("no {:?} candidates for target {:?}", self.kind, self.target)));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
                c[rng.random_range(0..c.len())]
            }
        };
        let t = self.t_apply;
        let bus = || -> Result<u32> {
            let b = u32::try_from(id).map_err(|_| Error::invalid(format!("bus id {id} out of range")))?;
            case.bus_index(b).map(|_| b).ok_or_else(|| Error::DanglingReference(format!("bus {b} not in case")))
        };
        Ok(match self.kind {
            ContingencyKind::BusFault => vec![
                Event { t, kind: EventKind::BusFault3ph { bus: bus()?, g: 0.0, b: self.fault_b } },
                Event { t: t + self.duration, kind: EventKind::ClearFault },
            ],
            ContingencyKind::LineTrip => {
                if id >= case.branches().len() {
                    return Err(Error::DanglingReference(format!("branch {id} not in case")));
                }
                vec![Event { t, kind: EventKind::LineTrip { branch: id } }]
            }
            ContingencyKind::GenTrip => {
                if id >= case.generators().len() {
                    return Err(Error::DanglingReference(format!("generator {id} not in case")));
                }
                vec![Event { t, kind: EventKind::GenTrip { generator: id } }]
            }
            ContingencyKind::LoadStep => {
                vec![Event { t, kind: EventKind::LoadStep { bus: bus()?, dp_mw: self.dp_mw, dq_mvar: self.dq_mvar } }]
            }
        })
    }
}

/// `n` contingencies of randomly chosen kind among bus faults, line trips
/// and generator trips, each within `k` hops of the datacenter bus.
pub fn random_contingencies(n: usize, seed: u64, k: usize) -> Vec<ContingencySpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kinds = [ContingencyKind::BusFault, ContingencyKind::LineTrip, ContingencyKind::GenTrip];
    (0..n)
        .map(|_| {
            let kind = kinds[rng.random_range(0..kinds.len())];
            ContingencySpec::new(kind, Target::Near { k }, rng.random())
        })
        .collect()
}

//! Paired grid-only versus IES studies: snapshot sweeps, contingency runs,
//! stability metrics and comparison reports.

mod compare;
mod config;
mod contingency;
mod metrics;

use log::debug;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use compare::{
    compare, compare_with_runs, select_snapshots, CompareOptions, CompareSummary, ComparisonReport, MetricDeltas,
    PairRecord, RunOutput, SnapshotSelection, Wins,
};
pub use config::{ConfigKind, Configuration, IesConfig, Snapshot};
pub use contingency::{random_contingencies, ContingencyKind, ContingencySpec, Target};
pub use metrics::{extract_metrics, metrics_from_series, SettlingBands, StabilityMetrics};

use crate::datacenter::LoadProfile;
use crate::dynamics::{run_transient, DeviceSet, Event, SimConfig, TransientResult};
use crate::error::{Error, Result};
use crate::grid::{build_ybus, NetworkCase};
use crate::powerflow::{solve, solve_from, PowerFlowOptions, PowerFlowSolution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub index: usize,
    pub timestamp_s: f64,
    pub p_mw: f64,
    pub converged: bool,
    pub iterations: usize,
    pub poi_v_mag: f64,
    pub poi_v_ang_deg: f64,
    pub slack_p_mw: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub kind: ConfigKind,
    pub dc_bus: u32,
    pub n_bins: usize,
    pub n_converged: usize,
    pub n_failed: usize,
    pub records: Vec<SweepRecord>,
}

impl SweepSummary {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::invalid(format!("csv write: {e}"));
        wtr.write_record([
            "index",
            "timestamp_s",
            "p_mw",
            "converged",
            "iterations",
            "poi_v_mag",
            "poi_v_ang_deg",
            "slack_p_mw",
        ])
        .map_err(err)?;
        for r in &self.records {
            wtr.write_record([
                r.index.to_string(),
                format!("{}", r.timestamp_s),
                format!("{:.6}", r.p_mw),
                r.converged.to_string(),
                r.iterations.to_string(),
                format!("{:.8}", r.poi_v_mag),
                format!("{:.6}", r.poi_v_ang_deg),
                format!("{:.6}", r.slack_p_mw),
            ])
            .map_err(err)?;
        }
        wtr.flush().map_err(|e| Error::io("<csv>", e))
    }
}

/// Solve one snapshot, warm-started from `v0` when given.
pub fn solve_snapshot(
    base: &NetworkCase,
    snap: &Snapshot,
    cfg: &Configuration,
    opts: &PowerFlowOptions,
    v0: Option<&[Complex64]>,
) -> Result<(NetworkCase, PowerFlowSolution)> {
    let case = snap.case(base, cfg)?;
    let sol = solve_from(&case, &build_ybus(&case), opts, v0)?;
    Ok((case, sol))
}

/// One power-flow solve per profile bin. Failed bins are recorded, not
/// fatal.
pub fn snapshot_sweep(
    base: &NetworkCase,
    profile: &LoadProfile,
    cfg: &Configuration,
    opts: &PowerFlowOptions,
) -> Result<SweepSummary> {
    cfg.validate()?;
    opts.validate()?;
    if profile.is_empty() {
        return Err(Error::invalid("load profile is empty"));
    }
    let poi = base
        .bus_index(cfg.dc_bus)
        .ok_or_else(|| Error::DanglingReference(format!("datacenter bus {} not in case", cfg.dc_bus)))?;
    let warm = solve(base, &build_ybus(base), opts).ok().filter(|s| s.converged);
    let records: Vec<SweepRecord> = (0..profile.len())
        .into_par_iter()
        .map(|k| {
            let snap = Snapshot::from_profile(profile, k).expect("index in range");
            let mut rec = SweepRecord {
                index: k,
                timestamp_s: snap.timestamp_s,
                p_mw: snap.p_mw,
                converged: false,
                iterations: 0,
                poi_v_mag: f64::NAN,
                poi_v_ang_deg: f64::NAN,
                slack_p_mw: f64::NAN,
                error: None,
            };
            match solve_snapshot(base, &snap, cfg, opts, warm.as_ref().map(|w| w.v.as_slice())) {
                Ok((case, sol)) => {
                    rec.converged = sol.converged;
                    rec.iterations = sol.iterations;
                    rec.poi_v_mag = sol.v_mag(poi);
                    rec.poi_v_ang_deg = sol.v_ang(poi).to_degrees();
                    rec.slack_p_mw = sol.slack_p * case.system_mva_base;
                }
                Err(e) => {
                    debug!("snapshot {k} failed: {e}");
                    rec.error = Some(e.to_string());
                }
            }
            rec
        })
        .collect();
    let n_converged = records.iter().filter(|r| r.converged).count();
    Ok(SweepSummary {
        kind: cfg.kind,
        dc_bus: cfg.dc_bus,
        n_bins: records.len(),
        n_converged,
        n_failed: records.len() - n_converged,
        records,
    })
}

/// Dynamic devices for a snapshot case under `cfg`.
pub fn devices_for(case: &NetworkCase, snap: &Snapshot, cfg: &Configuration) -> Result<DeviceSet> {
    match cfg.active_ies() {
        Some(ies) => {
            let q_dot = (snap.q_cool_mwth * ies.thermal_extraction_factor).clamp(0.0, ies.smr.q_dot_max);
            DeviceSet::from_library(
                case,
                &cfg.machines,
                Some((ies.smr, ies.smr_machine, q_dot)),
                Some((cfg.dc_bus, ies.bess)),
            )
        }
        None => DeviceSet::from_library(case, &cfg.machines, None, None),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRun {
    pub kind: ConfigKind,
    pub snapshot: Snapshot,
    pub events: Vec<Event>,
    pub result: TransientResult,
}

/// Transient run of one configuration with a pre-resolved event list,
/// monitoring the datacenter bus.
pub fn run_events(
    base: &NetworkCase,
    snap: &Snapshot,
    cfg: &Configuration,
    events: &[Event],
    sim: &SimConfig,
    opts: &PowerFlowOptions,
) -> Result<ScenarioRun> {
    cfg.validate()?;
    let (case, sol) = solve_snapshot(base, snap, cfg, opts, None)?;
    if !sol.converged {
        return Err(Error::invalid(format!("snapshot {} power flow did not converge", snap.index)));
    }
    let devices = devices_for(&case, snap, cfg)?;
    let result = run_transient(&case, &sol, &devices, events, sim, &[cfg.dc_bus])?;
    Ok(ScenarioRun { kind: cfg.kind, snapshot: *snap, events: events.to_vec(), result })
}

/// Resolve `spec` against the base case and run it.
pub fn run_contingency(
    base: &NetworkCase,
    snap: &Snapshot,
    cfg: &Configuration,
    spec: &ContingencySpec,
    sim: &SimConfig,
    opts: &PowerFlowOptions,
) -> Result<ScenarioRun> {
    let events = spec.resolve(base, cfg.dc_bus)?;
    run_events(base, snap, cfg, &events, sim, opts)
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ConfigKind, Configuration, Snapshot};
use super::contingency::ContingencySpec;
use super::metrics::{extract_metrics, SettlingBands, StabilityMetrics};
use super::run_events;
use crate::datacenter::LoadProfile;
use crate::dynamics::{Event, SimConfig, TransientResult};
use crate::error::{Error, Result};
use crate::grid::NetworkCase;
use crate::powerflow::PowerFlowOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnapshotSelection {
    /// Include the minimum, median and maximum total-load bins.
    pub min_median_max: bool,
    pub explicit: Vec<usize>,
}

impl Default for SnapshotSelection {
    fn default() -> Self {
        SnapshotSelection { min_median_max: true, explicit: Vec::new() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareOptions {
    pub snapshots: SnapshotSelection,
    pub bands: SettlingBands,
    pub powerflow: PowerFlowOptions,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricDeltas {
    /// |nadir| with IES minus |nadir| grid-only, Hz.
    pub f_nadir_abs_hz: f64,
    pub v_min_pu: f64,
    /// `None` when either run did not settle.
    pub t_settle_f_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wins {
    pub f_nadir: bool,
    pub v_min: bool,
    pub t_settle_f_no_worse: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub scenario_id: String,
    pub spec_index: usize,
    pub spec: ContingencySpec,
    pub snapshot: Snapshot,
    pub events: Vec<Event>,
    pub grid_only: Option<StabilityMetrics>,
    pub with_ies: Option<StabilityMetrics>,
    pub deltas: Option<MetricDeltas>,
    pub wins: Option<Wins>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub n_pairs: usize,
    pub n_valid: usize,
    pub n_failed: usize,
    pub f_nadir_wins: usize,
    pub v_min_wins: usize,
    pub t_settle_f_no_worse: usize,
    pub f_nadir_win_rate: f64,
    pub v_min_win_rate: f64,
    pub t_settle_f_no_worse_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub dc_bus: u32,
    pub snapshots: Vec<usize>,
    pub sim: SimConfig,
    pub bands: SettlingBands,
    pub pairs: Vec<PairRecord>,
    pub summary: CompareSummary,
}

impl ComparisonReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Plain-text table, one row per pair.
    pub fn summary_table(&self) -> String {
        let mut s = format!(
            "{:<14} {:>5} {:<10} {:>10} {:>10} {:>8} {:>8} {:>9} {:>9}\n",
            "scenario", "bin", "kind", "nadir_go", "nadir_ies", "vmin_go", "vmin_ies", "tsf_go", "tsf_ies"
        );
        let fmt_t = |t: Option<f64>| t.map_or("-".to_string(), |t| format!("{t:.3}"));
        for p in &self.pairs {
            let kind = format!("{:?}", p.spec.kind);
            match (&p.grid_only, &p.with_ies) {
                (Some(a), Some(b)) => s.push_str(&format!(
                    "{:<14} {:>5} {:<10} {:>10.4} {:>10.4} {:>8.4} {:>8.4} {:>9} {:>9}\n",
                    p.scenario_id,
                    p.snapshot.index,
                    kind,
                    a.f_nadir_hz,
                    b.f_nadir_hz,
                    a.v_min_pu,
                    b.v_min_pu,
                    fmt_t(a.t_settle_f),
                    fmt_t(b.t_settle_f)
                )),
                _ => s.push_str(&format!(
                    "{:<14} {:>5} {:<10} failed: {}\n",
                    p.scenario_id,
                    p.snapshot.index,
                    kind,
                    p.error.as_deref().unwrap_or("")
                )),
            }
        }
        let m = &self.summary;
        s.push_str(&format!(
            "\npairs {} valid {} | |f_nadir| smaller with IES {}/{} | v_min higher {}/{} | f settling no worse {}/{}\n",
            m.n_pairs, m.n_valid, m.f_nadir_wins, m.n_valid, m.v_min_wins, m.n_valid, m.t_settle_f_no_worse, m.n_valid
        ));
        s
    }
}

/// Transient series from both configurations of every pair, keyed by
/// `<scenario_id>_<config>`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub name: String,
    pub result: TransientResult,
}

/// Bins to simulate: optionally the min, median and max total-load bins,
/// plus explicit indices; sorted and deduplicated.
pub fn select_snapshots(profile: &LoadProfile, sel: &SnapshotSelection) -> Result<Vec<usize>> {
    if profile.is_empty() {
        return Err(Error::invalid("load profile is empty"));
    }
    let mut out = Vec::new();
    if sel.min_median_max {
        let totals = profile.totals();
        let mut order: Vec<usize> = (0..totals.len()).collect();
        order.sort_by(|&a, &b| totals[a].total_cmp(&totals[b]).then(a.cmp(&b)));
        out.extend([order[0], order[order.len() / 2], order[order.len() - 1]]);
    }
    for &k in &sel.explicit {
        if k >= profile.len() {
            return Err(Error::invalid(format!("snapshot {k} outside profile of {} bins", profile.len())));
        }
        out.push(k);
    }
    out.sort_unstable();
    out.dedup();
    if out.is_empty() {
        return Err(Error::invalid("no snapshots selected"));
    }
    Ok(out)
}

fn evaluate_pair(
    base: &NetworkCase,
    cfg: &Configuration,
    snap: &Snapshot,
    events: &[Event],
    t_apply: f64,
    sim: &SimConfig,
    opts: &CompareOptions,
) -> Result<[(StabilityMetrics, TransientResult); 2]> {
    let run = |kind| -> Result<(StabilityMetrics, TransientResult)> {
        let r = run_events(base, snap, &cfg.as_kind(kind), events, sim, &opts.powerflow)?;
        let m = extract_metrics(&r.result, cfg.dc_bus, t_apply, &opts.bands)?;
        Ok((m, r.result))
    };
    let go = run(ConfigKind::GridOnly)?;
    let ies = run(ConfigKind::WithIes)?;
    if go.1.event_log != ies.1.event_log {
        return Err(Error::invalid("paired runs applied different event sequences"));
    }
    Ok([go, ies])
}

fn judge(go: &StabilityMetrics, ies: &StabilityMetrics) -> (MetricDeltas, Wins) {
    let settle = |t: Option<f64>| t.unwrap_or(f64::INFINITY);
    let d = MetricDeltas {
        f_nadir_abs_hz: ies.f_nadir_hz.abs() - go.f_nadir_hz.abs(),
        v_min_pu: ies.v_min_pu - go.v_min_pu,
        t_settle_f_s: go.t_settle_f.zip(ies.t_settle_f).map(|(a, b)| b - a),
    };
    let w = Wins {
        f_nadir: ies.f_nadir_hz.abs() < go.f_nadir_hz.abs(),
        v_min: ies.v_min_pu > go.v_min_pu,
        t_settle_f_no_worse: settle(ies.t_settle_f) <= settle(go.t_settle_f),
    };
    (d, w)
}

/// Run every (contingency, snapshot) pair in both configurations with
/// identical events and collect the paired metrics and the raw series.
pub fn compare_with_runs(
    base: &NetworkCase,
    profile: &LoadProfile,
    cfg: &Configuration,
    specs: &[ContingencySpec],
    sim: &SimConfig,
    opts: &CompareOptions,
) -> Result<(ComparisonReport, Vec<RunOutput>)> {
    if specs.is_empty() {
        return Err(Error::invalid("no contingencies given"));
    }
    cfg.as_kind(ConfigKind::WithIes).validate()?;
    sim.validate()?;
    let bins = select_snapshots(profile, &opts.snapshots)?;

    let mut jobs = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let events = spec.resolve(base, cfg.dc_bus);
        for &b in &bins {
            jobs.push((i, spec, b, events.as_ref().map(|e| e.clone()).map_err(|e| e.to_string())));
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let results: Vec<_> = pool.install(|| {
        jobs.par_iter()
            .map(|(i, spec, b, events)| {
                let snap = Snapshot::from_profile(profile, *b)?;
                let out = match events {
                    Ok(ev) => evaluate_pair(base, cfg, &snap, ev, spec.t_apply, sim, opts).map_err(|e| e.to_string()),
                    Err(e) => Err(e.clone()),
                };
                Ok::<_, Error>((*i, (*spec).clone(), snap, events.clone().unwrap_or_default(), out))
            })
            .collect()
    });

    let mut pairs = Vec::with_capacity(results.len());
    let mut runs = Vec::new();
    for r in results {
        let (i, spec, snap, events, out) = r?;
        let scenario_id = format!("s{i:03}_b{:04}", snap.index);
        let mut rec = PairRecord {
            scenario_id: scenario_id.clone(),
            spec_index: i,
            spec,
            snapshot: snap,
            events,
            grid_only: None,
            with_ies: None,
            deltas: None,
            wins: None,
            error: None,
        };
        match out {
            Ok([go, ies]) => {
                let (d, w) = judge(&go.0, &ies.0);
                rec.grid_only = Some(go.0);
                rec.with_ies = Some(ies.0);
                rec.deltas = Some(d);
                rec.wins = Some(w);
                runs.push(RunOutput { name: format!("{scenario_id}_{}", ConfigKind::GridOnly.label()), result: go.1 });
                runs.push(RunOutput { name: format!("{scenario_id}_{}", ConfigKind::WithIes.label()), result: ies.1 });
            }
            Err(e) => rec.error = Some(e),
        }
        pairs.push(rec);
    }

    let valid: Vec<&Wins> = pairs.iter().filter_map(|p| p.wins.as_ref()).collect();
    let n_valid = valid.len();
    let count = |f: fn(&Wins) -> bool| valid.iter().filter(|w| f(w)).count();
    let rate = |n: usize| if n_valid == 0 { 0.0 } else { n as f64 / n_valid as f64 };
    let (fw, vw, sw) = (count(|w| w.f_nadir), count(|w| w.v_min), count(|w| w.t_settle_f_no_worse));
    let summary = CompareSummary {
        n_pairs: pairs.len(),
        n_valid,
        n_failed: pairs.len() - n_valid,
        f_nadir_wins: fw,
        v_min_wins: vw,
        t_settle_f_no_worse: sw,
        f_nadir_win_rate: rate(fw),
        v_min_win_rate: rate(vw),
        t_settle_f_no_worse_rate: rate(sw),
    };
    Ok((ComparisonReport { dc_bus: cfg.dc_bus, snapshots: bins, sim: *sim, bands: opts.bands, pairs, summary }, runs))
}

pub fn compare(
    base: &NetworkCase,
    profile: &LoadProfile,
    cfg: &Configuration,
    specs: &[ContingencySpec],
    sim: &SimConfig,
    opts: &CompareOptions,
) -> Result<ComparisonReport> {
    compare_with_runs(base, profile, cfg, specs, sim, opts).map(|(r, _)| r)
}

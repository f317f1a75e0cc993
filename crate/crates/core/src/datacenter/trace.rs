//! Workload trace ingestion and 5-minute aggregation.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BIN_SECONDS: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    #[serde(rename = "start_s")]
    pub start: f64,
    #[serde(rename = "end_s")]
    pub end: f64,
    pub cpu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MachineEventKind {
    Add,
    Remove,
    Update,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineEvent {
    #[serde(rename = "t_s")]
    pub t: f64,
    pub kind: MachineEventKind,
    pub machine_id: String,
    #[serde(default)]
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilizationTrace {
    pub start_s: f64,
    pub bin_seconds: f64,
    pub u: Vec<f64>,
}

fn read_csv<T, R>(rdr: R, path: &str, check: impl Fn(&T) -> std::result::Result<(), String>) -> Result<Vec<T>>
where
    T: for<'de> Deserialize<'de>,
    R: Read,
{
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(rdr);
    let mut out = Vec::new();
    for rec in rdr.deserialize::<T>() {
        let rec = rec.map_err(|e| Error::Csv {
            path: path.to_string(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        // header is line 1
        let line = out.len() as u64 + 2;
        check(&rec).map_err(|message| Error::Csv { path: path.to_string(), line, message })?;
        out.push(rec);
    }
    Ok(out)
}

fn check_task(t: &TaskRecord) -> std::result::Result<(), String> {
    if !(t.end > t.start) {
        return Err(format!("end_s {} must exceed start_s {}", t.end, t.start));
    }
    if !(t.cpu >= 0.0) {
        return Err(format!("cpu {} must be >= 0", t.cpu));
    }
    Ok(())
}

fn check_event(e: &MachineEvent) -> std::result::Result<(), String> {
    if !e.t.is_finite() {
        return Err("t_s must be finite".into());
    }
    if e.kind != MachineEventKind::Remove && !(e.capacity >= 0.0) {
        return Err(format!("capacity {} must be >= 0", e.capacity));
    }
    Ok(())
}

/// Task CSV with header `start_s,end_s,cpu`.
pub fn read_tasks<R: Read>(rdr: R, source: &str) -> Result<Vec<TaskRecord>> {
    read_csv(rdr, source, check_task)
}

/// Machine-event CSV with header `t_s,kind,machine_id,capacity`.
pub fn read_machine_events<R: Read>(rdr: R, source: &str) -> Result<Vec<MachineEvent>> {
    read_csv(rdr, source, check_event)
}

pub fn load_tasks(path: &Path) -> Result<Vec<TaskRecord>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_tasks(f, &path.display().to_string())
}

pub fn load_machine_events(path: &Path) -> Result<Vec<MachineEvent>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_machine_events(f, &path.display().to_string())
}

fn n_bins(t0: f64, t1: f64) -> Result<usize> {
    if !(t1 > t0) {
        return Err(Error::invalid("t1 must exceed t0"));
    }
    Ok(((t1 - t0) / BIN_SECONDS).ceil() as usize)
}

/// Per-bin CPU totals: each task contributes `cpu · overlap / 300` to every
/// bin it overlaps. Tasks are clipped to `[t0, t1)`; bins are
/// `[t0 + 300·b, t0 + 300·(b+1))`.
pub fn bin_tasks(tasks: &[TaskRecord], t0: f64, t1: f64) -> Result<Vec<f64>> {
    let n = n_bins(t0, t1)?;
    let mut bins = vec![0.0; n];
    for task in tasks {
        let (a, b) = (task.start.max(t0), task.end.min(t1));
        if b <= a {
            continue;
        }
        let first = ((a - t0) / BIN_SECONDS).floor() as usize;
        let last = (((b - t0) / BIN_SECONDS).ceil() as usize).min(n);
        for (k, bin) in bins.iter_mut().enumerate().take(last).skip(first) {
            let lo = t0 + k as f64 * BIN_SECONDS;
            let overlap = b.min(lo + BIN_SECONDS) - a.max(lo);
            if overlap > 0.0 {
                *bin += task.cpu * overlap / BIN_SECONDS;
            }
        }
    }
    Ok(bins)
}

/// Time-weighted average of the installed capacity over each bin.
///
/// Events are applied in time order (stable for ties). Removing or updating
/// an unknown machine is ignored with a warning; adding a known machine
/// replaces its capacity.
pub fn estimate_capacity(events: &[MachineEvent], t0: f64, t1: f64) -> Result<Vec<f64>> {
    let n = n_bins(t0, t1)?;
    let mut sorted: Vec<&MachineEvent> = events.iter().collect();
    sorted.sort_by(|a, b| a.t.total_cmp(&b.t));

    let mut fleet: HashMap<String, f64> = HashMap::new();
    let mut total = 0.0;
    let mut apply = |e: &MachineEvent, total: &mut f64| {
        let id = e.machine_id.as_str();
        match e.kind {
            MachineEventKind::Add => {
                if let Some(old) = fleet.insert(id.to_string(), e.capacity) {
                    warn!("machine {id} added twice at t={}; capacity replaced", e.t);
                    *total -= old;
                }
                *total += e.capacity;
            }
            MachineEventKind::Remove => match fleet.remove(id) {
                Some(old) => *total -= old,
                None => warn!("remove of unknown machine {id} at t={} ignored", e.t),
            },
            MachineEventKind::Update => match fleet.get_mut(id) {
                Some(c) => {
                    *total += e.capacity - *c;
                    *c = e.capacity;
                }
                None => warn!("update of unknown machine {id} at t={} ignored", e.t),
            },
        }
    };

    let mut it = sorted.into_iter().peekable();
    while let Some(e) = it.next_if(|e| e.t <= t0) {
        apply(e, &mut total);
    }
    let mut bins = Vec::with_capacity(n);
    for k in 0..n {
        let lo = t0 + k as f64 * BIN_SECONDS;
        let hi = lo + BIN_SECONDS;
        let mut cursor = lo;
        let mut area = 0.0;
        while let Some(e) = it.next_if(|e| e.t < hi) {
            area += total * (e.t - cursor);
            cursor = e.t;
            apply(e, &mut total);
        }
        area += total * (hi - cursor);
        bins.push(area / BIN_SECONDS);
    }
    Ok(bins)
}

/// `u = usage / capacity` clamped to `[0, 1]`; zero-capacity bins read 0.
pub fn normalize(usage: &[f64], capacity: &[f64], start_s: f64) -> Result<UtilizationTrace> {
    if usage.len() != capacity.len() {
        return Err(Error::invalid(format!("usage has {} bins, capacity has {}", usage.len(), capacity.len())));
    }
    let u = usage
        .iter()
        .zip(capacity)
        .enumerate()
        .map(|(k, (&x, &c))| {
            if c > 0.0 {
                (x / c).clamp(0.0, 1.0)
            } else {
                warn!("bin {k} has zero capacity; utilisation set to 0");
                0.0
            }
        })
        .collect();
    Ok(UtilizationTrace { start_s, bin_seconds: BIN_SECONDS, u })
}

/// Convenience: bin, estimate and normalise in one go.
pub fn utilization(tasks: &[TaskRecord], events: &[MachineEvent], t0: f64, t1: f64) -> Result<UtilizationTrace> {
    let usage = bin_tasks(tasks, t0, t1)?;
    let cap = estimate_capacity(events, t0, t1)?;
    normalize(&usage, &cap, t0)
}

pub fn write_tasks<W: std::io::Write>(w: W, tasks: &[TaskRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for t in tasks {
        wtr.serialize(t).map_err(|e| Error::invalid(format!("csv write: {e}")))?;
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn write_machine_events<W: std::io::Write>(w: W, events: &[MachineEvent]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for e in events {
        wtr.serialize(e).map_err(|e| Error::invalid(format!("csv write: {e}")))?;
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))
}

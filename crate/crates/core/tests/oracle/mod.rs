//! Per-second brute-force references for the trace pipeline.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use smrgrid::datacenter::{MachineEvent, MachineEventKind, TaskRecord};

/// Per-second accumulation with integer-second boundaries.
pub fn brute_bins(tasks: &[TaskRecord], t0: i64, t1: i64) -> Vec<f64> {
    let n = ((t1 - t0) as f64 / 300.0).ceil() as usize;
    let mut bins = vec![0.0; n];
    for s in t0..t1 {
        let mid = s as f64 + 0.5;
        let active: f64 = tasks.iter().filter(|t| t.start <= mid && mid < t.end).map(|t| t.cpu).sum();
        bins[((s - t0) / 300) as usize] += active / 300.0;
    }
    bins
}

pub fn brute_capacity(events: &[MachineEvent], t0: i64, t1: i64) -> Vec<f64> {
    let n = ((t1 - t0) as f64 / 300.0).ceil() as usize;
    let mut sorted = events.to_vec();
    sorted.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mut bins = vec![0.0; n];
    for s in t0..(t0 + 300 * n as i64) {
        let mid = s as f64 + 0.5;
        let mut fleet = std::collections::BTreeMap::new();
        for e in sorted.iter().filter(|e| e.t <= mid) {
            match e.kind {
                MachineEventKind::Add => {
                    fleet.insert(e.machine_id.clone(), e.capacity);
                }
                MachineEventKind::Remove => {
                    fleet.remove(&e.machine_id);
                }
                MachineEventKind::Update => {
                    if let Some(c) = fleet.get_mut(&e.machine_id) {
                        *c = e.capacity;
                    }
                }
            }
        }
        bins[((s - t0) / 300) as usize] += fleet.values().sum::<f64>() / 300.0;
    }
    bins
}

pub fn random_tasks(rng: &mut ChaCha8Rng, n: usize, span: i64) -> Vec<TaskRecord> {
    (0..n)
        .map(|_| {
            let a = rng.random_range(-600..span + 600);
            let d = rng.random_range(1..2000);
            TaskRecord { start: a as f64, end: (a + d) as f64, cpu: rng.random_range(0.0..4.0) }
        })
        .collect()
}

pub fn random_events(rng: &mut ChaCha8Rng, n: usize, span: i64) -> Vec<MachineEvent> {
    (0..n)
        .map(|_| {
            let kind = match rng.random_range(0..3) {
                0 => MachineEventKind::Add,
                1 => MachineEventKind::Remove,
                _ => MachineEventKind::Update,
            };
            MachineEvent {
                t: rng.random_range(-300..span) as f64,
                kind,
                machine_id: format!("m{}", rng.random_range(0..12)),
                capacity: rng.random_range(0.0..8.0),
            }
        })
        .collect()
}

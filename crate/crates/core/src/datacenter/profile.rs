//! Weekly demand profile assembly.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::power::{it_power, staging_and_thermal, AmbientConditions, ChillerParams, ItPowerParams};
use super::trace::{MachineEvent, MachineEventKind, TaskRecord, UtilizationTrace, BIN_SECONDS};
use crate::error::{Error, Result};

pub const BINS_PER_WEEK: usize = 7 * 288;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadProfile {
    pub timestamps: Vec<f64>,
    pub u: Vec<f64>,
    /// MW
    pub p_it: Vec<f64>,
    /// MW-thermal
    pub q_cool: Vec<f64>,
    pub n_ch: Vec<u32>,
    /// Electrical draw of the chiller bank, MW.
    pub p_thermal: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ProfileRow {
    timestamp_s: f64,
    u: f64,
    p_it_mw: f64,
    q_cool_mwth: f64,
    n_ch: u32,
    p_thermal_mw: f64,
    p_total_mw: f64,
}

impl LoadProfile {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn p_total(&self, k: usize) -> f64 {
        self.p_it[k] + self.p_thermal[k]
    }

    pub fn totals(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.p_total(k)).collect()
    }

    pub fn peak_total(&self) -> f64 {
        self.totals().into_iter().fold(0.0, f64::max)
    }

    /// Constant demand profile of `n` bins.
    pub fn flat(n: usize, p_it: f64, p_thermal: f64) -> Self {
        LoadProfile {
            timestamps: (0..n).map(|k| k as f64 * BIN_SECONDS).collect(),
            u: vec![0.0; n],
            p_it: vec![p_it; n],
            q_cool: vec![p_it; n],
            n_ch: vec![0; n],
            p_thermal: vec![p_thermal; n],
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for k in 0..self.len() {
            wtr.serialize(ProfileRow {
                timestamp_s: self.timestamps[k],
                u: self.u[k],
                p_it_mw: self.p_it[k],
                q_cool_mwth: self.q_cool[k],
                n_ch: self.n_ch[k],
                p_thermal_mw: self.p_thermal[k],
                p_total_mw: self.p_total(k),
            })
            .map_err(|e| Error::invalid(format!("csv write: {e}")))?;
        }
        wtr.flush().map_err(|e| Error::io("<csv>", e))
    }

    pub fn read_csv<R: Read>(rdr: R, source: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(rdr);
        let mut p = LoadProfile {
            timestamps: vec![],
            u: vec![],
            p_it: vec![],
            q_cool: vec![],
            n_ch: vec![],
            p_thermal: vec![],
        };
        for row in rdr.deserialize::<ProfileRow>() {
            let row = row.map_err(|e| Error::Csv {
                path: source.to_string(),
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            if !(row.p_it_mw >= 0.0 && row.p_thermal_mw >= 0.0) {
                return Err(Error::Csv {
                    path: source.to_string(),
                    line: p.len() as u64 + 2,
                    message: "negative power".into(),
                });
            }
            p.timestamps.push(row.timestamp_s);
            p.u.push(row.u);
            p.p_it.push(row.p_it_mw);
            p.q_cool.push(row.q_cool_mwth);
            p.n_ch.push(row.n_ch);
            p.p_thermal.push(row.p_thermal_mw);
        }
        Ok(p)
    }
}

/// IT power per bin, cooling demand equal to IT power, chillers staged
/// for that demand. `ambient` holds one entry (used for every bin) or one
/// per bin.
pub fn build_profile(
    trace: &UtilizationTrace,
    it: &ItPowerParams,
    ch: &ChillerParams,
    ambient: &[AmbientConditions],
) -> Result<LoadProfile> {
    it.validate()?;
    ch.validate()?;
    let n = trace.u.len();
    if ambient.len() != 1 && ambient.len() != n {
        return Err(Error::invalid(format!("ambient series has {} entries for {n} bins", ambient.len())));
    }
    let mut p = LoadProfile {
        timestamps: Vec::with_capacity(n),
        u: trace.u.clone(),
        p_it: Vec::with_capacity(n),
        q_cool: Vec::with_capacity(n),
        n_ch: Vec::with_capacity(n),
        p_thermal: Vec::with_capacity(n),
    };
    for (k, &u) in trace.u.iter().enumerate() {
        let cond = &ambient[if ambient.len() == 1 { 0 } else { k }];
        let p_it = it_power(u, it)?;
        let (n_ch, p_th) = staging_and_thermal(p_it, cond, ch)?;
        p.timestamps.push(trace.start_s + k as f64 * trace.bin_seconds);
        p.p_it.push(p_it);
        p.q_cool.push(p_it);
        p.n_ch.push(n_ch);
        p.p_thermal.push(p_th);
    }
    Ok(p)
}

/// Choose the IT peak rating so that the profile's peak total demand
/// (IT plus chillers) equals `target_mw`. Total demand is nondecreasing in
/// the rating, so bisection applies; chiller staging steps can make the
/// target unreachable exactly, in which case the peak lands just below it.
pub fn build_profile_for_peak(
    trace: &UtilizationTrace,
    it: &ItPowerParams,
    ch: &ChillerParams,
    ambient: &[AmbientConditions],
    target_mw: f64,
) -> Result<(ItPowerParams, LoadProfile)> {
    if !(target_mw > 0.0) {
        return Err(Error::invalid("target peak must be > 0"));
    }
    let u_max = trace.u.iter().copied().fold(0.0, f64::max);
    let shape = it.idle_fraction + (1.0 - it.idle_fraction) * u_max;
    if !(shape > 0.0) {
        return Err(Error::invalid("utilisation trace produces zero IT power"));
    }
    let with = |p_max: f64| ItPowerParams { p_max, ..*it };
    let (mut lo, mut hi) = (0.0, target_mw / shape);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if build_profile(trace, &with(mid), ch, ambient)?.peak_total() <= target_mw {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let params = with(lo);
    Ok((params, build_profile(trace, &params, ch, ambient)?))
}

/// Synthetic week-long cluster trace: a fixed fleet with occasional
/// maintenance removals and diurnally modulated task arrivals.
pub fn synthetic_week_trace(seed: u64, n_machines: usize) -> (Vec<TaskRecord>, Vec<MachineEvent>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_end = BINS_PER_WEEK as f64 * BIN_SECONDS;
    let capacity = 1.0;

    let mut events: Vec<MachineEvent> = (0..n_machines)
        .map(|m| MachineEvent { t: -1.0, kind: MachineEventKind::Add, machine_id: format!("m{m:04}"), capacity })
        .collect();
    for _ in 0..n_machines / 20 {
        let id = format!("m{:04}", rng.random_range(0..n_machines));
        let t = rng.random_range(0.0..t_end - 7200.0).floor();
        let back = t + rng.random_range(1800.0..7200.0f64).floor();
        events.push(MachineEvent { t, kind: MachineEventKind::Remove, machine_id: id.clone(), capacity: 0.0 });
        events.push(MachineEvent { t: back, kind: MachineEventKind::Add, machine_id: id, capacity });
    }
    events.sort_by(|a, b| a.t.total_cmp(&b.t));

    let (mean_cpu, mean_dur) = (0.3, 1800.0);
    let load = |t: f64| {
        let day = (t / 86400.0).floor() as usize;
        let weekday = if day % 7 >= 5 { 0.85 } else { 1.0 };
        weekday * (0.55 + 0.3 * (2.0 * PI * (t / 86400.0 - 0.375)).sin())
    };
    let rate = |t: f64| load(t) * n_machines as f64 * capacity / (mean_cpu * mean_dur);
    let rate_max = 0.85 * n_machines as f64 * capacity / (mean_cpu * mean_dur);

    let mut tasks = Vec::new();
    // warm-up so the fleet is busy at t = 0
    let mut t = -4.0 * mean_dur;
    loop {
        t += -(1.0 - rng.random::<f64>()).ln() / rate_max;
        if t >= t_end {
            break;
        }
        if rng.random::<f64>() * rate_max > rate(t.max(0.0)) {
            continue;
        }
        let dur = (-(1.0 - rng.random::<f64>()).ln() * mean_dur).max(1.0);
        tasks.push(TaskRecord {
            start: t.floor(),
            end: (t + dur).ceil(),
            cpu: rng.random_range(0.05..2.0 * mean_cpu - 0.05),
        });
    }
    (tasks, events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datacenter::trace::utilization;

    #[test]
    fn constant_full_week() {
        let trace = UtilizationTrace { start_s: 0.0, bin_seconds: 300.0, u: vec![1.0; BINS_PER_WEEK] };
        let p = build_profile(
            &trace,
            &ItPowerParams::default(),
            &ChillerParams::default(),
            &[AmbientConditions::default()],
        )
        .unwrap();
        assert_eq!(p.len(), 2016);
        assert!(p.p_it.iter().all(|&x| x == 60.0));
        assert!(p.p_thermal.iter().all(|&x| x == p.p_thermal[0] && x > 0.0));
    }

    #[test]
    fn square_wave_between_idle_and_peak() {
        let u: Vec<f64> = (0..100).map(|k| if (k / 10) % 2 == 0 { 0.0 } else { 1.0 }).collect();
        let trace = UtilizationTrace { start_s: 0.0, bin_seconds: 300.0, u: u.clone() };
        let p = build_profile(
            &trace,
            &ItPowerParams::default(),
            &ChillerParams::default(),
            &[AmbientConditions::default()],
        )
        .unwrap();
        for (k, x) in p.p_it.iter().enumerate() {
            assert_eq!(*x, 30.0 + 30.0 * u[k]);
        }
    }

    #[test]
    fn peak_fit_hits_target() {
        let (tasks, events) = synthetic_week_trace(7, 100);
        let trace = utilization(&tasks, &events, 0.0, BINS_PER_WEEK as f64 * 300.0).unwrap();
        let (it, p) = build_profile_for_peak(
            &trace,
            &ItPowerParams::default(),
            &ChillerParams::default(),
            &[AmbientConditions::default()],
            60.0,
        )
        .unwrap();
        assert!(it.p_max < 60.0);
        assert!((p.peak_total() - 60.0).abs() < 0.05, "{}", p.peak_total());
    }

    #[test]
    fn csv_round_trip() {
        let trace = UtilizationTrace { start_s: 0.0, bin_seconds: 300.0, u: vec![0.2, 0.9, 0.4] };
        let p = build_profile(
            &trace,
            &ItPowerParams::default(),
            &ChillerParams::default(),
            &[AmbientConditions::default()],
        )
        .unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let q = LoadProfile::read_csv(buf.as_slice(), "mem").unwrap();
        assert_eq!(p, q);
    }
}

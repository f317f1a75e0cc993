use serde::{Deserialize, Serialize};

use crate::dynamics::TransientResult;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SettlingBands {
    /// Hz around nominal.
    pub freq_hz: f64,
    /// pu around the final voltage.
    pub volt_pu: f64,
}

impl Default for SettlingBands {
    fn default() -> Self {
        SettlingBands { freq_hz: 0.02, volt_pu: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityMetrics {
    pub f_nadir_hz: f64,
    pub f_peak_hz: f64,
    pub v_pre_pu: f64,
    pub v_min_pu: f64,
    pub v_max_pu: f64,
    /// `None` when the series ends outside the band.
    pub t_settle_f: Option<f64>,
    pub t_settle_v: Option<f64>,
    pub rocof_max_hz_per_s: f64,
}

/// Time after which `inside` holds for every remaining sample: `t_apply`
/// if it always held, `None` if the last sample is outside.
fn settle_time(time: &[f64], k0: usize, t_apply: f64, inside: impl Fn(usize) -> bool) -> Option<f64> {
    match (k0..time.len()).rev().find(|&k| !inside(k)) {
        None => Some(t_apply),
        Some(k) if k + 1 == time.len() => None,
        Some(k) => Some(time[k + 1]),
    }
}

/// Metrics from a frequency and voltage series sampled on `time`.
pub fn metrics_from_series(
    time: &[f64],
    freq_hz: &[f64],
    v_mag: &[f64],
    t_apply: f64,
    bands: &SettlingBands,
) -> Result<StabilityMetrics> {
    let n = time.len();
    if n == 0 || freq_hz.len() != n || v_mag.len() != n {
        return Err(Error::invalid("metric series must be nonempty and of equal length"));
    }
    let k0 = time
        .iter()
        .position(|&t| t >= t_apply - 1e-9)
        .ok_or_else(|| Error::invalid("series ends before the disturbance"))?;
    let v_pre = v_mag[k0.saturating_sub(1)];
    let f = &freq_hz[k0..];
    let v = &v_mag[k0..];
    let v_final = v_mag[n - 1];

    let mut rocof: f64 = 0.0;
    for k in k0.max(1)..n.saturating_sub(1) {
        rocof = rocof.max(((freq_hz[k + 1] - freq_hz[k - 1]) / (time[k + 1] - time[k - 1])).abs());
    }

    Ok(StabilityMetrics {
        f_nadir_hz: f.iter().copied().fold(0.0, f64::min),
        f_peak_hz: f.iter().copied().fold(0.0, f64::max),
        v_pre_pu: v_pre,
        v_min_pu: v.iter().copied().fold(v_pre, f64::min),
        v_max_pu: v.iter().copied().fold(v_pre, f64::max),
        t_settle_f: settle_time(time, k0, t_apply, |k| freq_hz[k].abs() <= bands.freq_hz),
        t_settle_v: settle_time(time, k0, t_apply, |k| (v_mag[k] - v_final).abs() <= bands.volt_pu),
        rocof_max_hz_per_s: rocof,
    })
}

/// Metrics at monitored bus `bus` of a transient run.
pub fn extract_metrics(
    result: &TransientResult,
    bus: u32,
    t_apply: f64,
    bands: &SettlingBands,
) -> Result<StabilityMetrics> {
    let trace = result.bus(bus).ok_or_else(|| Error::invalid(format!("bus {bus} was not monitored")))?;
    metrics_from_series(&result.time, &trace.freq_dev_hz, &trace.v_mag, t_apply, bands)
}

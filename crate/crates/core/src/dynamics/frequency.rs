//! Bus frequency from the voltage angle: washout-filtered derivative
//! `s / (1 + s·T)`, discretised exactly for an input that is linear between
//! samples.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyEstimator {
    tc: f64,
    decay: f64,
    lagged: f64,
    theta: f64,
}

impl FrequencyEstimator {
    /// Start at rest on angle `theta0` (radians).
    pub fn new(theta0: f64, tc: f64, dt: f64) -> Self {
        FrequencyEstimator { tc, decay: (-dt / tc).exp(), lagged: theta0, theta: theta0 }
    }

    /// Feed the next angle sample (radians, unwrapped); returns the
    /// frequency deviation in Hz.
    pub fn update(&mut self, theta: f64, dt: f64) -> f64 {
        let slope = (theta - self.theta) / dt;
        self.lagged = theta - slope * self.tc + (self.lagged - self.theta + slope * self.tc) * self.decay;
        self.theta = theta;
        self.deviation_hz()
    }

    pub fn deviation_hz(&self) -> f64 {
        (self.theta - self.lagged) / self.tc / (2.0 * PI)
    }
}

/// Frequency deviation (Hz) for a uniformly sampled angle series.
pub fn bus_frequency_estimate(theta: &[f64], freq_filter_tc: f64, dt: f64) -> Result<Vec<f64>> {
    if theta.len() < 2 {
        return Err(Error::invalid("frequency estimate needs at least two samples"));
    }
    if !(freq_filter_tc > 0.0 && dt > 0.0) {
        return Err(Error::invalid("filter time constant and dt must be > 0"));
    }
    let mut est = FrequencyEstimator::new(theta[0], freq_filter_tc, dt);
    let mut out = Vec::with_capacity(theta.len());
    out.push(0.0);
    out.extend(theta[1..].iter().map(|&th| est.update(th, dt)));
    Ok(out)
}

/// Shift `next` by whole turns so it lies within π of `prev`.
pub fn unwrap_angle(prev: f64, next: f64) -> f64 {
    let d = (next - prev + PI).rem_euclid(2.0 * PI) - PI;
    prev + d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_angle_reads_zero() {
        let f = bus_frequency_estimate(&[0.3; 100], 0.05, 0.005).unwrap();
        assert!(f.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn ramp_settles_to_slope() {
        let dt = 0.005;
        let th: Vec<f64> = (0..2000).map(|k| 2.0 * PI * 0.1 * k as f64 * dt).collect();
        let f = bus_frequency_estimate(&th, 0.05, dt).unwrap();
        assert!((f.last().unwrap() - 0.1).abs() < 1e-9);
    }

    #[test]
    fn step_decays_like_first_order_filter() {
        let (dt, tc, jump) = (0.005, 0.05, 0.2);
        let th: Vec<f64> = (0..200).map(|k| if k >= 10 { jump } else { 0.0 }).collect();
        let f = bus_frequency_estimate(&th, tc, dt).unwrap();
        // the jump is a ramp of slope jump/dt over one sample; s/(1+sT) of
        // that ramp peaks at jump/dt·(1−e^{−dt/T}) and then decays with T
        for (k, fk) in f.iter().enumerate().skip(10) {
            let t_after = (k - 10) as f64 * dt;
            let omega = jump / dt * (1.0 - (-dt / tc).exp()) * (-(t_after) / tc).exp();
            assert!((fk - omega / (2.0 * PI)).abs() < 1e-9, "k={k}");
        }
        assert!(f[..10].iter().all(|x| *x == 0.0));
    }

    #[test]
    fn unwrap_crosses_pi() {
        let a = unwrap_angle(3.1, -3.1);
        assert!((a - (2.0 * PI - 3.1)).abs() < 1e-12);
        assert!((unwrap_angle(10.0, 10.1 - 2.0 * PI) - 10.1).abs() < 1e-12);
    }

    #[test]
    fn single_sample_rejected() {
        assert!(bus_frequency_estimate(&[0.0], 0.05, 0.005).is_err());
    }
}

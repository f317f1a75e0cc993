//! PI frequency controller for the battery converter.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BessParams {
    /// Proportional gain, pu power per pu frequency error.
    pub k_p: f64,
    /// Integral gain, pu power per (pu · s).
    pub k_i: f64,
    /// MW
    pub p_rating: f64,
    /// Anti-windup clamp on the integrator, pu · s.
    pub integrator_limit: f64,
    /// Converter current limit, pu of rating.
    pub current_limit: f64,
}

impl Default for BessParams {
    fn default() -> Self {
        BessParams { k_p: 20.0, k_i: 5.0, p_rating: 10.0, integrator_limit: 0.2, current_limit: 1.2 }
    }
}

impl BessParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_rating > 0.0) {
            return Err(Error::invalid("BESS p_rating must be > 0"));
        }
        if !(self.k_p >= 0.0 && self.k_i >= 0.0) {
            return Err(Error::invalid("BESS gains must be >= 0"));
        }
        if !(self.integrator_limit >= 0.0) || !(self.current_limit > 0.0) {
            return Err(Error::invalid("BESS integrator_limit >= 0 and current_limit > 0 required"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BessState {
    pub integrator: f64,
    /// pu of rating
    pub p_out: f64,
    /// Error sample from the previous step, for the trapezoidal rule.
    pub prev_error: f64,
}

/// One controller step. `delta_f` is `(f_nominal − f)/f_nominal`, so
/// under-frequency discharges the battery (positive output).
///
/// The integrator advances by the trapezoidal rule and is held whenever the
/// output saturates at ±1 pu.
pub fn bess_power(delta_f: f64, state: &BessState, params: &BessParams, dt: f64) -> (f64, BessState) {
    debug_assert!(dt > 0.0);
    let lim = params.integrator_limit;
    let trial = (state.integrator + 0.5 * dt * (state.prev_error + delta_f)).clamp(-lim, lim);
    let raw = params.k_p * delta_f + params.k_i * trial;
    let (p_out, integrator) = if raw.abs() > 1.0 { (raw.signum(), state.integrator) } else { (raw, trial) };
    (p_out, BessState { integrator, p_out, prev_error: delta_f })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn idle_without_error() {
        let p = BessParams::default();
        let mut s = BessState::default();
        for _ in 0..1000 {
            let (out, next) = bess_power(0.0, &s, &p, 0.005);
            assert_eq!(out, 0.0);
            s = next;
        }
    }

    #[test]
    fn pure_proportional() {
        let p = BessParams { k_p: 20.0, k_i: 0.0, ..Default::default() };
        let (out, _) = bess_power(0.01, &BessState::default(), &p, 0.005);
        assert!((out - 0.2).abs() < 1e-15);
    }

    #[test]
    fn pure_integral_matches_closed_form() {
        let p = BessParams { k_p: 0.0, k_i: 5.0, ..Default::default() };
        let dt: f64 = 0.005;
        let mut s = BessState::default();
        let mut out = 0.0;
        for _ in 0..(1.0 / dt).round() as usize {
            (out, s) = bess_power(0.01, &s, &p, dt);
        }
        // k_i * Δf * t, less the half-step lost on the first trapezoid
        assert!((out - 0.05).abs() <= 5.0 * 0.01 * dt);
    }

    proptest! {
        #[test]
        fn saturation_and_anti_windup(signal in proptest::collection::vec(-0.2..0.2f64, 1..400)) {
            let p = BessParams::default();
            let mut s = BessState::default();
            for df in signal {
                let (out, next) = bess_power(df, &s, &p, 0.005);
                prop_assert!(out.abs() <= 1.0);
                prop_assert!(next.integrator.abs() <= p.integrator_limit + 1e-15);
                if out.abs() == 1.0 {
                    prop_assert!(next.integrator.abs() <= s.integrator.abs());
                }
                s = next;
            }
        }
    }
}

//! Reduced modified-GGOV1 governor for the SMR turbine: deadband, load
//! dependent droop, first-order valve actuator, ramp-rate load limiter and
//! the two-stage steam turbine power map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmrParams {
    /// Turbine efficiency, (0, 1].
    pub eta_t: f64,
    /// High-pressure stage enthalpy drop, kJ/kg.
    pub dh_hp: f64,
    /// Low-pressure stage enthalpy drop, kJ/kg.
    pub dh_lp: f64,
    pub m_min: f64,
    pub m_max: f64,
    /// Electrical rating, MW.
    pub p_max: f64,
    /// Largest thermal extraction, MW-thermal.
    pub q_dot_max: f64,
    /// Largest |dP_mech/dt|, pu of rating per second.
    pub ramp_limit: f64,
    /// Valve actuator time constant, s.
    pub t_actuator: f64,
    /// Frequency deadband, pu.
    pub freq_deadband: f64,
    /// Share of commanded power produced by the HP stage.
    pub hp_fraction: f64,
}

impl Default for SmrParams {
    fn default() -> Self {
        SmrParams {
            eta_t: 0.9,
            dh_hp: 400.0,
            dh_lp: 600.0,
            m_min: 0.04,
            m_max: 0.08,
            p_max: 50.0,
            q_dot_max: 60.0,
            ramp_limit: 0.02,
            t_actuator: 0.2,
            freq_deadband: 0.0,
            hp_fraction: 0.7,
        }
    }
}

impl SmrParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta_t > 0.0 && self.eta_t <= 1.0) {
            return Err(Error::invalid("eta_t must be in (0, 1]"));
        }
        if !(self.dh_hp > 0.0 && self.dh_lp > 0.0) {
            return Err(Error::invalid("stage enthalpy drops must be > 0"));
        }
        if !(self.m_min > 0.0 && self.m_min <= self.m_max) {
            return Err(Error::invalid("droop bounds must satisfy 0 < m_min <= m_max"));
        }
        if !(self.p_max > 0.0) || !(self.q_dot_max >= 0.0) || !(self.ramp_limit > 0.0) {
            return Err(Error::invalid("p_max > 0, q_dot_max >= 0 and ramp_limit > 0 required"));
        }
        if !(self.t_actuator >= 0.0) || !(self.freq_deadband >= 0.0) {
            return Err(Error::invalid("t_actuator and freq_deadband must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.hp_fraction) {
            return Err(Error::invalid("hp_fraction must be in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmrState {
    /// Controlled-steam mass flows, kg/s.
    pub m_dot_hp: f64,
    pub m_dot_lp: f64,
    /// Actuator output, pu of rating.
    pub valve_cmd: f64,
    /// Limiter output, pu of rating.
    pub p_mech_cmd: f64,
    /// Thermal extraction currently served, MW-thermal.
    pub q_dot: f64,
    pub droop_now: f64,
}

/// Turbine shaft power in MW from stage flows (kJ/kg · kg/s = kW).
pub fn turbine_mechanical_power(eta_t: f64, dh_hp: f64, dh_lp: f64, m_dot_hp: f64, m_dot_lp: f64) -> Result<f64> {
    if m_dot_hp < 0.0 || m_dot_lp < 0.0 {
        return Err(Error::invalid("steam mass flow must be >= 0"));
    }
    if !(eta_t > 0.0 && eta_t <= 1.0) || dh_hp < 0.0 || dh_lp < 0.0 {
        return Err(Error::invalid("turbine efficiency must be in (0, 1] and enthalpy drops >= 0"));
    }
    Ok(eta_t * (dh_hp * m_dot_hp + dh_lp * m_dot_lp) / 1000.0)
}

/// Inverse of [`turbine_mechanical_power`] under the declared HP/LP split.
pub fn steam_flows_for_power(p_mw: f64, params: &SmrParams) -> Result<(f64, f64)> {
    if p_mw < 0.0 {
        return Err(Error::invalid("mechanical power must be >= 0"));
    }
    let gross_kw = p_mw * 1000.0 / params.eta_t;
    Ok((params.hp_fraction * gross_kw / params.dh_hp, (1.0 - params.hp_fraction) * gross_kw / params.dh_lp))
}

/// Droop coefficient rising linearly with combined electrical and thermal
/// loading, clamped to `[m_min, m_max]`.
pub fn compute_droop(p_e: f64, q_dot: f64, params: &SmrParams) -> Result<f64> {
    if p_e < 0.0 || q_dot < 0.0 {
        return Err(Error::invalid("droop inputs must be >= 0"));
    }
    let loading = (p_e + q_dot) / (params.p_max + params.q_dot_max);
    let m = params.m_min + loading * (params.m_max - params.m_min);
    Ok(m.clamp(params.m_min, params.m_max))
}

/// Power command correction `−Δf/m`, zero inside the deadband. `delta_f` is
/// `(f − f_nominal)/f_nominal`, so under-frequency raises power.
pub fn governor_power_correction(delta_f: f64, droop: f64, deadband: f64) -> Result<f64> {
    if !(droop > 0.0) {
        return Err(Error::invalid("droop must be > 0"));
    }
    if delta_f.abs() <= deadband {
        return Ok(0.0);
    }
    Ok(-delta_f / droop)
}

/// Rate-limit the move from `p_prev` towards `p_cmd` and keep the result in
/// `[0, 1]` of rating.
pub fn apply_load_limiter(p_cmd: f64, p_prev: f64, ramp_limit: f64, dt: f64) -> f64 {
    debug_assert!(dt > 0.0);
    let band = ramp_limit * dt;
    (p_prev + (p_cmd - p_prev).clamp(-band, band)).clamp(0.0, 1.0)
}

/// SMR governor with its setpoint; advanced once per simulation step.
#[derive(Debug, Clone, PartialEq)]
pub struct SmrGovernor {
    pub params: SmrParams,
    /// Power setpoint, pu of rating.
    pub p_set: f64,
    pub state: SmrState,
}

impl SmrGovernor {
    /// Steady state producing `p_mw` with thermal extraction `q_dot`.
    pub fn at_operating_point(params: SmrParams, p_mw: f64, q_dot: f64) -> Result<Self> {
        params.validate()?;
        let (m_dot_hp, m_dot_lp) = steam_flows_for_power(p_mw, &params)?;
        let q_dot = q_dot.clamp(0.0, params.q_dot_max);
        let p_pu = p_mw / params.p_max;
        Ok(SmrGovernor {
            params,
            p_set: p_pu,
            state: SmrState {
                m_dot_hp,
                m_dot_lp,
                valve_cmd: p_pu,
                p_mech_cmd: p_pu,
                q_dot,
                droop_now: compute_droop(p_mw.clamp(0.0, params.p_max), q_dot, &params)?,
            },
        })
    }

    /// Advance by `dt` given the shaft speed deviation (pu) and present
    /// electrical output (MW). Returns the new mechanical power in MW.
    pub fn step(&mut self, speed_dev: f64, p_e_mw: f64, dt: f64) -> Result<f64> {
        let p = &self.params;
        let s = &mut self.state;
        s.droop_now = compute_droop(p_e_mw.clamp(0.0, p.p_max), s.q_dot, p)?;
        let p_ref = self.p_set + governor_power_correction(speed_dev, s.droop_now, p.freq_deadband)?;
        if p.t_actuator > 0.0 {
            s.valve_cmd += (1.0 - (-dt / p.t_actuator).exp()) * (p_ref - s.valve_cmd);
        } else {
            s.valve_cmd = p_ref;
        }
        s.p_mech_cmd = apply_load_limiter(s.valve_cmd, s.p_mech_cmd, p.ramp_limit, dt);
        let (hp, lp) = steam_flows_for_power(s.p_mech_cmd * p.p_max, p)?;
        s.m_dot_hp = hp;
        s.m_dot_lp = lp;
        turbine_mechanical_power(p.eta_t, p.dh_hp, p.dh_lp, hp, lp)
    }

    pub fn p_mech_mw(&self) -> Result<f64> {
        let p = &self.params;
        turbine_mechanical_power(p.eta_t, p.dh_hp, p.dh_lp, self.state.m_dot_hp, self.state.m_dot_lp)
    }
}

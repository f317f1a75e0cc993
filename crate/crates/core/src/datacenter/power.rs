//! IT and cooling power models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ItPowerParams {
    /// MW at full utilisation.
    pub p_max: f64,
    pub idle_fraction: f64,
}

impl Default for ItPowerParams {
    fn default() -> Self {
        ItPowerParams { p_max: 60.0, idle_fraction: 0.5 }
    }
}

impl ItPowerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_max > 0.0) || !(0.0..=1.0).contains(&self.idle_fraction) {
            return Err(Error::invalid("IT params need p_max > 0 and idle_fraction in [0, 1]"));
        }
        Ok(())
    }

    pub fn p_idle(&self) -> f64 {
        self.idle_fraction * self.p_max
    }
}

/// Affine server power, MW.
pub fn it_power(u: f64, params: &ItPowerParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::invalid(format!("utilisation {u} outside [0, 1]")));
    }
    let idle = params.p_idle();
    Ok(idle + (params.p_max - idle) * u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmbientConditions {
    /// °C
    pub t_amb: f64,
    /// relative humidity, 0..1
    pub phi_amb: f64,
    /// return chilled water, °C
    pub t_rw: f64,
}

impl Default for AmbientConditions {
    fn default() -> Self {
        AmbientConditions { t_amb: 30.0, phi_amb: 0.6, t_rw: 12.0 }
    }
}

impl AmbientConditions {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.phi_amb) || !self.t_amb.is_finite() || !self.t_rw.is_finite() {
            return Err(Error::invalid("ambient conditions need finite temperatures and phi_amb in [0, 1]"));
        }
        Ok(())
    }
}

/// Mass flows through one chiller, kg/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChillerFlows {
    pub tower_fan: f64,
    pub condenser: f64,
    pub evaporator: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChillerParams {
    /// Tower fan, `[c1, c2, c3, c0]` in kW.
    pub alpha: [f64; 4],
    /// Condenser pump.
    pub beta: [f64; 4],
    /// Evaporator pump.
    pub gamma: [f64; 4],
    /// Compressor surrogate `[q0..q5]`, see [`compressor_power`].
    pub compressor_coeffs: [f64; 6],
    /// MW-thermal per chiller.
    pub q_rated: f64,
    pub n_total: u32,
    pub flow_min: ChillerFlows,
    pub flow_rated: ChillerFlows,
}

impl Default for ChillerParams {
    /// Illustrative coefficients (roughly COP 4 at the rated point), not
    /// fitted to any plant.
    fn default() -> Self {
        ChillerParams {
            alpha: [0.02, 0.0, 6.4e-7, 5.0],
            beta: [0.03, 0.0, 5.0e-7, 3.0],
            gamma: [0.03, 0.0, 5.0e-7, 3.0],
            compressor_coeffs: [0.0, -5.0, 2.0, 20.0, 1.0, 0.2],
            q_rated: 10.0,
            n_total: 8,
            flow_min: ChillerFlows { tower_fan: 200.0, condenser: 191.2, evaporator: 191.2 },
            flow_rated: ChillerFlows { tower_fan: 500.0, condenser: 478.0, evaporator: 478.0 },
        }
    }
}

impl ChillerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.q_rated > 0.0) || self.n_total == 0 {
            return Err(Error::invalid("chiller params need q_rated > 0 and n_total >= 1"));
        }
        let (lo, hi) = (self.flow_min, self.flow_rated);
        for (a, b) in [(lo.tower_fan, hi.tower_fan), (lo.condenser, hi.condenser), (lo.evaporator, hi.evaporator)] {
            if !(a >= 0.0 && a <= b) {
                return Err(Error::invalid("chiller flows need 0 <= min <= rated"));
            }
        }
        Ok(())
    }

    pub fn capacity(&self) -> f64 {
        self.q_rated * self.n_total as f64
    }

    /// Flows at a per-chiller load fraction, affine between min and rated.
    pub fn flows_at(&self, load_fraction: f64) -> ChillerFlows {
        let lerp = |a: f64, b: f64| a + (b - a) * load_fraction;
        ChillerFlows {
            tower_fan: lerp(self.flow_min.tower_fan, self.flow_rated.tower_fan),
            condenser: lerp(self.flow_min.condenser, self.flow_rated.condenser),
            evaporator: lerp(self.flow_min.evaporator, self.flow_rated.evaporator),
        }
    }
}

/// Cubic fan or pump law `c1·ṁ + c2·ṁ² + c3·ṁ³ + c0`, kW, floored at 0.
pub fn subsystem_power(m_dot: f64, coeffs: &[f64; 4]) -> Result<f64> {
    if !(m_dot >= 0.0) {
        return Err(Error::invalid(format!("mass flow {m_dot} must be >= 0")));
    }
    let [c1, c2, c3, c0] = *coeffs;
    Ok((m_dot * (c1 + m_dot * (c2 + m_dot * c3)) + c0).max(0.0))
}

/// Compressor surrogate, kW:
/// `q0 + q1·T_rw + q2·T_amb + q3·φ + q4·ṁ_ev + q5·ṁ_ev·(T_amb − T_rw)`,
/// floored at 0.
pub fn compressor_power(cond: &AmbientConditions, flows: &ChillerFlows, q: &[f64; 6]) -> Result<f64> {
    cond.validate()?;
    if !(flows.tower_fan >= 0.0 && flows.condenser >= 0.0 && flows.evaporator >= 0.0) {
        return Err(Error::invalid("mass flows must be >= 0"));
    }
    let m = flows.evaporator;
    let p = q[0]
        + q[1] * cond.t_rw
        + q[2] * cond.t_amb
        + q[3] * cond.phi_amb
        + q[4] * m
        + q[5] * m * (cond.t_amb - cond.t_rw);
    Ok(p.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChillerPower {
    pub tower_fan: f64,
    pub condenser_pump: f64,
    pub evaporator_pump: f64,
    pub compressor: f64,
}

impl ChillerPower {
    /// kW
    pub fn total(&self) -> f64 {
        self.tower_fan + self.condenser_pump + self.evaporator_pump + self.compressor
    }
}

pub fn chiller_unit_power(
    cond: &AmbientConditions,
    flows: &ChillerFlows,
    params: &ChillerParams,
) -> Result<ChillerPower> {
    Ok(ChillerPower {
        tower_fan: subsystem_power(flows.tower_fan, &params.alpha)?,
        condenser_pump: subsystem_power(flows.condenser, &params.beta)?,
        evaporator_pump: subsystem_power(flows.evaporator, &params.gamma)?,
        compressor: compressor_power(cond, flows, &params.compressor_coeffs)?,
    })
}

/// Stage chillers for `q_cool` MW-thermal with an even split; returns the
/// active count and the bank's electrical draw in MW.
pub fn staging_and_thermal(q_cool: f64, cond: &AmbientConditions, params: &ChillerParams) -> Result<(u32, f64)> {
    if !(q_cool >= 0.0) {
        return Err(Error::invalid(format!("cooling demand {q_cool} must be >= 0")));
    }
    let capacity = params.capacity();
    if q_cool > capacity {
        return Err(Error::CoolingCapacityExceeded { demand_mw: q_cool, capacity_mw: capacity });
    }
    if q_cool == 0.0 {
        return Ok((0, 0.0));
    }
    let n = ((q_cool / params.q_rated).ceil() as u32).clamp(1, params.n_total);
    let fraction = (q_cool / n as f64 / params.q_rated).min(1.0);
    let unit = chiller_unit_power(cond, &params.flows_at(fraction), params)?;
    Ok((n, n as f64 * unit.total() / 1000.0))
}

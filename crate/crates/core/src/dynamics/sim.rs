//! Fixed-step transient simulator.
//!
//! Machines are classical (constant EMF behind transient reactance, second
//! order swing dynamics) integrated with RK4; the network is solved
//! algebraically at every stage. The SMR governor and the BESS controller
//! are discrete-time and update once per step, holding their outputs over
//! the step.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::bess::{bess_power, BessParams, BessState};
use super::frequency::{unwrap_angle, FrequencyEstimator};
use super::governor::{SmrGovernor, SmrParams, SmrState};
use super::integrate::rk4_step;
use super::network::AugmentedNetwork;
use crate::error::{Error, Result};
use crate::grid::{Generator, NetworkCase};
use crate::powerflow::{generator_outputs, total_losses, PowerFlowSolution, SMR_MODEL};

pub const NOMINAL_HZ: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineParams {
    /// Inertia constant, s on machine base.
    pub h: f64,
    /// Damping, pu power per pu speed on machine base.
    pub d: f64,
    /// Transient reactance, pu on machine base.
    pub xd_p: f64,
    pub mva_base: f64,
}

impl MachineParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.xd_p > 0.0 && self.mva_base > 0.0 && self.d >= 0.0) {
            return Err(Error::invalid("machine requires h > 0, xd_p > 0, mva_base > 0, d >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MachineState {
    /// Rotor angle, radians, synchronous frame.
    pub delta: f64,
    /// Speed deviation, pu.
    pub omega_dev: f64,
    /// EMF behind transient reactance, pu.
    pub e_p: f64,
    /// Mechanical power, pu on the system base.
    pub p_mech: f64,
}

/// Default classical-machine data for grid units plus named overrides
/// referenced from `Generator::dynamic_model`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MachineLibrary {
    pub h: f64,
    pub d: f64,
    pub xd_p: f64,
    pub models: BTreeMap<String, MachineParams>,
}

impl Default for MachineLibrary {
    fn default() -> Self {
        MachineLibrary { h: 5.0, d: 2.0, xd_p: 0.25, models: BTreeMap::new() }
    }
}

impl MachineLibrary {
    pub fn params_for(&self, gen: &Generator) -> MachineParams {
        gen.dynamic_model.as_ref().and_then(|m| self.models.get(m)).copied().unwrap_or(MachineParams {
            h: self.h,
            d: self.d,
            xd_p: self.xd_p,
            mva_base: gen.mva_base,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmrDevice {
    /// Generator index of the SMR unit in the case.
    pub generator: usize,
    pub params: SmrParams,
    pub machine: MachineParams,
    /// Thermal extraction served, MW-thermal.
    pub q_dot: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BessDevice {
    pub bus: u32,
    pub params: BessParams,
}

/// Dynamic models attached to a case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSet {
    /// One entry per case generator; `None` for units without a dynamic model.
    pub machines: Vec<Option<MachineParams>>,
    pub smr: Option<SmrDevice>,
    pub bess: Option<BessDevice>,
}

impl DeviceSet {
    /// Classical machines for every in-service generator; the generator
    /// tagged as the SMR takes its machine data from `smr`.
    pub fn from_library(
        case: &NetworkCase,
        library: &MachineLibrary,
        smr: Option<(SmrParams, MachineParams, f64)>,
        bess: Option<(u32, BessParams)>,
    ) -> Result<Self> {
        let smr_gen = case.generators().iter().position(|g| g.status && g.dynamic_model.as_deref() == Some(SMR_MODEL));
        let smr = match (smr, smr_gen) {
            (Some((params, machine, q_dot)), Some(generator)) => Some(SmrDevice { generator, params, machine, q_dot }),
            (Some(_), None) => return Err(Error::invalid("SMR parameters given but the case has no SMR generator")),
            (None, _) => None,
        };
        let machines = case
            .generators()
            .iter()
            .enumerate()
            .map(|(k, g)| {
                g.status.then(|| match &smr {
                    Some(s) if s.generator == k => s.machine,
                    _ => library.params_for(g),
                })
            })
            .collect();
        Ok(DeviceSet { machines, smr, bess: bess.map(|(bus, params)| BessDevice { bus, params }) })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceStates {
    pub machines: Vec<Option<MachineState>>,
    pub smr: Option<SmrState>,
    pub bess: Option<BessState>,
}

impl DeviceStates {
    /// Largest absolute change over every state variable.
    pub fn max_abs_difference(&self, other: &DeviceStates) -> f64 {
        let mut d = 0.0f64;
        for (a, b) in self.machines.iter().zip(&other.machines) {
            if let (Some(a), Some(b)) = (a, b) {
                d = d
                    .max((a.delta - b.delta).abs())
                    .max((a.omega_dev - b.omega_dev).abs())
                    .max((a.e_p - b.e_p).abs())
                    .max((a.p_mech - b.p_mech).abs());
            }
        }
        if let (Some(a), Some(b)) = (&self.smr, &other.smr) {
            for (x, y) in [
                (a.m_dot_hp, b.m_dot_hp),
                (a.m_dot_lp, b.m_dot_lp),
                (a.valve_cmd, b.valve_cmd),
                (a.p_mech_cmd, b.p_mech_cmd),
                (a.q_dot, b.q_dot),
                (a.droop_now, b.droop_now),
            ] {
                d = d.max((x - y).abs());
            }
        }
        if let (Some(a), Some(b)) = (&self.bess, &other.bess) {
            d = d.max((a.integrator - b.integrator).abs()).max((a.p_out - b.p_out).abs());
        }
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub freq_filter_tc: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { dt: 0.005, t_end: 15.0, freq_filter_tc: 0.05 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= 0.02) {
            return Err(Error::invalid("dt must be in (0, 0.02] s"));
        }
        if !(self.t_end > 0.0) || !(self.freq_filter_tc > 0.0) {
            return Err(Error::invalid("t_end and freq_filter_tc must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum EventKind {
    /// Three-phase bus fault as a shunt admittance `g + jb` (pu).
    BusFault3ph {
        bus: u32,
        g: f64,
        b: f64,
    },
    /// Removes every applied fault shunt.
    ClearFault,
    LineTrip {
        branch: usize,
    },
    GenTrip {
        generator: usize,
    },
    /// Constant-impedance load change, MW/MVAr at the pre-fault voltage.
    LoadStep {
        bus: u32,
        dp_mw: f64,
        dq_mvar: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl Event {
    pub fn bus_fault(t: f64, bus: u32) -> Self {
        Event { t, kind: EventKind::BusFault3ph { bus, g: 0.0, b: -1e4 } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppliedEvent {
    /// Scheduled time.
    pub t: f64,
    /// Simulation time at which it took effect.
    pub applied_at: f64,
    pub event: Event,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusTrace {
    pub bus: u32,
    pub v_mag: Vec<f64>,
    pub freq_dev_hz: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransientResult {
    pub time: Vec<f64>,
    pub buses: Vec<BusTrace>,
    pub smr_pmech_mw: Option<Vec<f64>>,
    pub bess_p_mw: Option<Vec<f64>>,
    pub event_log: Vec<AppliedEvent>,
    pub initial_states: DeviceStates,
    pub final_states: DeviceStates,
}

impl TransientResult {
    pub fn bus(&self, id: u32) -> Option<&BusTrace> {
        self.buses.iter().find(|b| b.bus == id)
    }

    /// Columns `t_s, bus_<id>_vmag_pu, bus_<id>_fdev_hz, …, smr_pmech_mw,
    /// bess_p_mw`; absent devices are written as zero.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::invalid(format!("csv write: {e}"));
        let mut header = vec!["t_s".to_string()];
        for b in &self.buses {
            header.push(format!("bus_{}_vmag_pu", b.bus));
            header.push(format!("bus_{}_fdev_hz", b.bus));
        }
        header.push("smr_pmech_mw".into());
        header.push("bess_p_mw".into());
        wtr.write_record(&header).map_err(err)?;
        for (k, t) in self.time.iter().enumerate() {
            let mut row = vec![format!("{t:.6}")];
            for b in &self.buses {
                row.push(format!("{:.9}", b.v_mag[k]));
                row.push(format!("{:.9}", b.freq_dev_hz[k]));
            }
            let dev = |s: &Option<Vec<f64>>| format!("{:.9}", s.as_ref().map_or(0.0, |s| s[k]));
            row.push(dev(&self.smr_pmech_mw));
            row.push(dev(&self.bess_p_mw));
            wtr.write_record(&row).map_err(err)?;
        }
        wtr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Machine EMFs and angles from terminal conditions, with `p_mech` equal to
/// the electrical output at t = 0, the SMR governor at its operating point
/// and the BESS at rest.
pub fn initialize_devices(
    case: &NetworkCase,
    solution: &PowerFlowSolution,
    devices: &DeviceSet,
) -> Result<DeviceStates> {
    Ok(Simulator::new(case, solution, devices, &[], SimConfig::default())?.initial_states)
}

#[derive(Debug, Clone)]
struct Slot {
    generator: usize,
    bus: usize,
    /// transient reactance, system base
    x: f64,
    /// 2H, system base
    m: f64,
    /// damping, system base
    d: f64,
    online: bool,
    state: MachineState,
}

struct Tracked {
    bus: usize,
    theta: f64,
    est: FrequencyEstimator,
}

/// Stateful transient run; [`run_transient`] drives it to completion.
pub struct Simulator {
    case: NetworkCase,
    cfg: SimConfig,
    base: f64,
    slots: Vec<Slot>,
    smr: Option<(usize, SmrGovernor)>,
    bess: Option<(usize, BessParams, BessState)>,
    v0: Vec<Complex64>,
    load_shunt: Vec<Complex64>,
    fault_shunt: Vec<Complex64>,
    net: AugmentedNetwork,
    v: Vec<Complex64>,
    tracked: Vec<Tracked>,
    monitored: Vec<usize>,
    bess_track: Option<usize>,
    t: f64,
    initial_states: DeviceStates,
}

impl Simulator {
    pub fn new(
        case: &NetworkCase,
        solution: &PowerFlowSolution,
        devices: &DeviceSet,
        monitor: &[u32],
        cfg: SimConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if !solution.converged {
            return Err(Error::invalid("transient run needs a converged power flow solution"));
        }
        if solution.v.len() != case.n_bus() || devices.machines.len() != case.generators().len() {
            return Err(Error::invalid("solution or device set does not match the case"));
        }
        let base = case.system_mva_base;
        let v0 = solution.v.clone();
        let outputs = generator_outputs(case, solution);

        let mut slots = Vec::new();
        for (k, params) in devices.machines.iter().enumerate() {
            let Some(params) = params else { continue };
            params.validate()?;
            let g = &case.generators()[k];
            if !g.status {
                continue;
            }
            let (p, q) = outputs[k];
            if let Some(p_max) = g.p_max {
                if p * base > p_max * (1.0 + 1e-6) + 1e-6 {
                    return Err(Error::OutsideRating {
                        index: k,
                        bus: g.bus,
                        detail: format!("{:.3} MW > p_max {:.3} MW", p * base, p_max),
                    });
                }
            }
            let bus = case.idx(g.bus);
            let x = params.xd_p * base / params.mva_base;
            let i_g = (Complex64::new(p, q) / v0[bus]).conj();
            let e = v0[bus] + Complex64::new(0.0, x) * i_g;
            slots.push(Slot {
                generator: k,
                bus,
                x,
                m: 2.0 * params.h * params.mva_base / base,
                d: params.d * params.mva_base / base,
                online: true,
                state: MachineState { delta: e.arg(), omega_dev: 0.0, e_p: e.norm(), p_mech: p },
            });
        }

        let mut load_shunt = vec![Complex64::default(); case.n_bus()];
        for (i, b) in case.buses().iter().enumerate() {
            let s = Complex64::new(b.p_load, b.q_load) / base;
            load_shunt[i] = s.conj() / v0[i].norm_sqr();
        }

        let bess = match &devices.bess {
            Some(dev) => {
                dev.params.validate()?;
                let pos = case
                    .bus_index(dev.bus)
                    .ok_or_else(|| Error::DanglingReference(format!("BESS bus {} not in case", dev.bus)))?;
                Some((pos, dev.params, BessState::default()))
            }
            None => None,
        };

        let fault_shunt = vec![Complex64::default(); case.n_bus()];
        let mut sim = Simulator {
            net: AugmentedNetwork::factor(case, &Self::shunts_of(&load_shunt, &fault_shunt, &slots), 0.0)?,
            case: case.clone(),
            cfg,
            base,
            slots,
            smr: None,
            bess,
            v0,
            load_shunt,
            fault_shunt,
            v: Vec::new(),
            tracked: Vec::new(),
            monitored: Vec::new(),
            bess_track: None,
            t: 0.0,
            initial_states: DeviceStates { machines: Vec::new(), smr: None, bess: None },
        };
        sim.v = sim.solve_network(&sim.angles(), 0.0)?;
        // mechanical power balances the electrical output seen by the
        // augmented network, so the initial point is an exact equilibrium
        for s in 0..sim.slots.len() {
            let pe = sim.electrical_power(s, &sim.v, sim.slots[s].state.delta);
            sim.slots[s].state.p_mech = pe;
        }

        if let Some(dev) = &devices.smr {
            let slot = sim
                .slots
                .iter()
                .position(|s| s.generator == dev.generator)
                .ok_or_else(|| Error::invalid("SMR generator has no machine model"))?;
            let p_mw = sim.slots[slot].state.p_mech * base;
            if p_mw < -1e-6 || p_mw > dev.params.p_max * (1.0 + 1e-9) {
                let g = &case.generators()[dev.generator];
                return Err(Error::OutsideRating {
                    index: dev.generator,
                    bus: g.bus,
                    detail: format!("SMR output {p_mw:.3} MW outside [0, {}] MW", dev.params.p_max),
                });
            }
            let gov = SmrGovernor::at_operating_point(dev.params, p_mw.max(0.0), dev.q_dot)?;
            sim.slots[slot].state.p_mech = gov.p_mech_mw()? / base;
            sim.smr = Some((slot, gov));
        }

        for &id in monitor {
            let pos = case
                .bus_index(id)
                .ok_or_else(|| Error::DanglingReference(format!("monitored bus {id} not in case")))?;
            let k = sim.track(pos);
            sim.monitored.push(k);
        }
        if let Some((pos, _, _)) = sim.bess {
            sim.bess_track = Some(sim.track(pos));
        }
        sim.initial_states = sim.states();
        Ok(sim)
    }

    fn track(&mut self, bus: usize) -> usize {
        if let Some(k) = self.tracked.iter().position(|t| t.bus == bus) {
            return k;
        }
        let theta = self.v[bus].arg();
        self.tracked.push(Tracked {
            bus,
            theta,
            est: FrequencyEstimator::new(theta, self.cfg.freq_filter_tc, self.cfg.dt),
        });
        self.tracked.len() - 1
    }

    fn shunts_of(load: &[Complex64], fault: &[Complex64], slots: &[Slot]) -> Vec<Complex64> {
        let mut sh: Vec<Complex64> = load.iter().zip(fault).map(|(a, b)| a + b).collect();
        for s in slots.iter().filter(|s| s.online) {
            sh[s.bus] += Complex64::new(0.0, -1.0 / s.x);
        }
        sh
    }

    fn refactor(&mut self) -> Result<()> {
        let sh = Self::shunts_of(&self.load_shunt, &self.fault_shunt, &self.slots);
        self.net = AugmentedNetwork::factor(&self.case, &sh, self.t)?;
        Ok(())
    }

    fn angles(&self) -> Vec<f64> {
        self.slots.iter().map(|s| s.state.delta).collect()
    }

    fn emf(&self, s: usize, delta: f64) -> Complex64 {
        Complex64::from_polar(self.slots[s].state.e_p, delta)
    }

    fn electrical_power(&self, s: usize, v: &[Complex64], delta: f64) -> f64 {
        let slot = &self.slots[s];
        if !slot.online {
            return 0.0;
        }
        let e = self.emf(s, delta);
        let i = (e - v[slot.bus]) / Complex64::new(0.0, slot.x);
        (e * i.conj()).re
    }

    fn bess_current(&self, v: Complex64) -> Complex64 {
        let Some((_, params, state)) = &self.bess else {
            return Complex64::default();
        };
        let p = state.p_out * params.p_rating / self.base;
        if p == 0.0 {
            return Complex64::default();
        }
        let i_max = params.current_limit * params.p_rating / self.base;
        let vm = v.norm();
        let mag = if vm > 0.0 { (p / vm).clamp(-i_max, i_max) } else { p.signum() * i_max };
        Complex64::from_polar(mag, v.arg())
    }

    /// Network voltages for the given rotor angles (one per slot).
    fn solve_network(&self, deltas: &[f64], t: f64) -> Result<Vec<Complex64>> {
        let mut inj = vec![Complex64::default(); self.case.n_bus()];
        for (s, slot) in self.slots.iter().enumerate() {
            if slot.online {
                inj[slot.bus] += self.emf(s, deltas[s]) / Complex64::new(0.0, slot.x);
            }
        }
        let mut v = self.net.solve(&inj, t)?;
        if let Some((pos, _, state)) = &self.bess {
            if state.p_out != 0.0 {
                for _ in 0..3 {
                    let mut rhs = inj.clone();
                    rhs[*pos] += self.bess_current(v[*pos]);
                    v = self.net.solve(&rhs, t)?;
                }
            }
        }
        Ok(v)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn voltages(&self) -> &[Complex64] {
        &self.v
    }

    pub fn states(&self) -> DeviceStates {
        let mut machines = vec![None; self.case.generators().len()];
        for s in &self.slots {
            machines[s.generator] = Some(s.state);
        }
        DeviceStates {
            machines,
            smr: self.smr.as_ref().map(|(_, g)| g.state),
            bess: self.bess.as_ref().map(|(_, _, s)| *s),
        }
    }

    /// Electrical output of machines and BESS versus consumption in loads,
    /// fault shunts and the network, both per-unit.
    pub fn power_balance(&self) -> (f64, f64) {
        let v = &self.v;
        let mut produced: f64 =
            (0..self.slots.len()).map(|s| self.electrical_power(s, v, self.slots[s].state.delta)).sum();
        if let Some((pos, _, _)) = &self.bess {
            produced += (v[*pos] * self.bess_current(v[*pos]).conj()).re;
        }
        let shunt: f64 = v
            .iter()
            .zip(self.load_shunt.iter().zip(&self.fault_shunt))
            .map(|(v, (l, f))| v.norm_sqr() * (l + f).re)
            .sum();
        (produced, shunt + total_losses(&self.case, v).re)
    }

    fn apply(&mut self, ev: &Event) -> Result<()> {
        let base = self.base;
        match &ev.kind {
            EventKind::BusFault3ph { bus, g, b } => {
                let i = self.bus_pos(*bus)?;
                self.fault_shunt[i] += Complex64::new(*g, *b);
            }
            EventKind::ClearFault => {
                self.fault_shunt.iter_mut().for_each(|y| *y = Complex64::default());
            }
            EventKind::LineTrip { branch } => {
                self.case = self.case.without_branch(*branch)?;
            }
            EventKind::GenTrip { generator } => {
                let slot = self
                    .slots
                    .iter_mut()
                    .find(|s| s.generator == *generator)
                    .ok_or_else(|| Error::DanglingReference(format!("generator {generator} has no machine")))?;
                slot.online = false;
                slot.state.omega_dev = 0.0;
            }
            EventKind::LoadStep { bus, dp_mw, dq_mvar } => {
                let i = self.bus_pos(*bus)?;
                let s = Complex64::new(*dp_mw, *dq_mvar) / base;
                self.load_shunt[i] += s.conj() / self.v0[i].norm_sqr();
            }
        }
        self.refactor()
    }

    fn bus_pos(&self, id: u32) -> Result<usize> {
        self.case.bus_index(id).ok_or_else(|| Error::DanglingReference(format!("bus {id} not in case")))
    }

    fn validate_events(&self, events: &[Event]) -> Result<()> {
        let mut last = 0.0;
        for ev in events {
            if !(ev.t >= 0.0) {
                return Err(Error::invalid("event times must be >= 0"));
            }
            if ev.t < last {
                return Err(Error::invalid("events must be sorted by time"));
            }
            last = ev.t;
            match &ev.kind {
                EventKind::BusFault3ph { bus, .. } | EventKind::LoadStep { bus, .. } => {
                    self.bus_pos(*bus)?;
                }
                EventKind::LineTrip { branch } if *branch >= self.case.branches().len() => {
                    return Err(Error::DanglingReference(format!("branch {branch} not in case")));
                }
                EventKind::GenTrip { generator } if !self.slots.iter().any(|s| s.generator == *generator) => {
                    return Err(Error::DanglingReference(format!("generator {generator} has no machine")));
                }
                _ => {}
            }
        }
        if last >= self.cfg.t_end && !events.is_empty() {
            return Err(Error::invalid("t_end must exceed the last event time"));
        }
        Ok(())
    }

    fn update_estimators(&mut self) -> Vec<f64> {
        let dt = self.cfg.dt;
        self.tracked
            .iter_mut()
            .map(|tr| {
                tr.theta = unwrap_angle(tr.theta, self.v[tr.bus].arg());
                tr.est.update(tr.theta, dt)
            })
            .collect()
    }

    /// Discrete controller updates at the present time; outputs are held
    /// over the next step.
    fn update_controls(&mut self, freq_hz: &[f64]) -> Result<()> {
        let dt = self.cfg.dt;
        if let Some((slot, gov)) = &mut self.smr {
            let s = *slot;
            if self.slots[s].online {
                let delta = self.slots[s].state.delta;
                let e = Complex64::from_polar(self.slots[s].state.e_p, delta);
                let i = (e - self.v[self.slots[s].bus]) / Complex64::new(0.0, self.slots[s].x);
                let pe_mw = (e * i.conj()).re * self.base;
                let pm = gov.step(self.slots[s].state.omega_dev, pe_mw, dt)?;
                self.slots[s].state.p_mech = pm / self.base;
            }
        }
        if let (Some((_, params, state)), Some(k)) = (&mut self.bess, self.bess_track) {
            let df = -freq_hz[k] / NOMINAL_HZ;
            let (_, next) = bess_power(df, state, params, dt);
            *state = next;
        }
        Ok(())
    }

    fn integrate(&mut self) -> Result<()> {
        let dt = self.cfg.dt;
        let t = self.t;
        let online: Vec<usize> = (0..self.slots.len()).filter(|&s| self.slots[s].online).collect();
        let m = online.len();
        let mut x = Vec::with_capacity(2 * m);
        x.extend(online.iter().map(|&s| self.slots[s].state.delta));
        x.extend(online.iter().map(|&s| self.slots[s].state.omega_dev));
        let omega_s = 2.0 * PI * NOMINAL_HZ;
        let this = &*self;
        let next = rk4_step(t, &x, dt, |tt, x, dx| {
            let mut deltas = this.angles();
            for (j, &s) in online.iter().enumerate() {
                deltas[s] = x[j];
            }
            let v = this.solve_network(&deltas, tt)?;
            for (j, &s) in online.iter().enumerate() {
                let slot = &this.slots[s];
                let pe = this.electrical_power(s, &v, deltas[s]);
                let w = x[m + j];
                dx[j] = omega_s * w;
                dx[m + j] = (slot.state.p_mech - pe - slot.d * w) / slot.m;
            }
            Ok(())
        })?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t: t + dt, what: "machine state".into() });
        }
        for (j, &s) in online.iter().enumerate() {
            self.slots[s].state.delta = next[j];
            self.slots[s].state.omega_dev = next[m + j];
        }
        Ok(())
    }

    /// Run to `t_end`, applying `events` at their timestamps.
    pub fn run(&mut self, events: &[Event]) -> Result<TransientResult> {
        self.validate_events(events)?;
        let dt = self.cfg.dt;
        let n_steps = (self.cfg.t_end / dt).round() as usize;
        let mut pending = events.iter().peekable();
        let mut log = Vec::new();

        let mut time = Vec::with_capacity(n_steps + 1);
        let mut v_mag = vec![Vec::with_capacity(n_steps + 1); self.monitored.len()];
        let mut fdev = vec![Vec::with_capacity(n_steps + 1); self.monitored.len()];
        let mut smr_p = self.smr.as_ref().map(|_| Vec::with_capacity(n_steps + 1));
        let mut bess_p = self.bess.as_ref().map(|_| Vec::with_capacity(n_steps + 1));

        for k in 0..=n_steps {
            self.t = k as f64 * dt;
            let mut changed = false;
            while let Some(ev) = pending.next_if(|e| e.t <= self.t + 1e-9) {
                self.apply(ev)?;
                log.push(AppliedEvent { t: ev.t, applied_at: self.t, event: ev.clone() });
                changed = true;
            }
            if changed || k > 0 {
                self.v = self.solve_network(&self.angles(), self.t)?;
            }
            let freq = self.update_estimators();
            if let Some(bad) = self.v.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::NonFinite { t: self.t, what: format!("voltage at bus position {bad}") });
            }

            time.push(self.t);
            for (j, &tr) in self.monitored.iter().enumerate() {
                v_mag[j].push(self.v[self.tracked[tr].bus].norm());
                fdev[j].push(freq[tr]);
            }
            if k == n_steps {
                break;
            }
            self.update_controls(&freq)?;
            if let (Some(series), Some((slot, _))) = (&mut smr_p, &self.smr) {
                series.push(self.slots[*slot].state.p_mech * self.base);
            }
            if let (Some(series), Some((_, params, state))) = (&mut bess_p, &self.bess) {
                series.push(state.p_out * params.p_rating);
            }
            self.integrate()?;
        }
        // device outputs are held over each step; the last sample repeats
        if let Some(s) = &mut smr_p {
            s.push(*s.last().unwrap_or(&0.0));
        }
        if let Some(s) = &mut bess_p {
            s.push(*s.last().unwrap_or(&0.0));
        }

        let buses = self
            .monitored
            .iter()
            .zip(v_mag.into_iter().zip(fdev))
            .map(|(&tr, (v_mag, freq_dev_hz))| BusTrace {
                bus: self.case.buses()[self.tracked[tr].bus].id,
                v_mag,
                freq_dev_hz,
            })
            .collect();
        Ok(TransientResult {
            time,
            buses,
            smr_pmech_mw: smr_p,
            bess_p_mw: bess_p,
            event_log: log,
            final_states: self.states(),
            initial_states: self.initial_states.clone(),
        })
    }
}

/// Simulate from a converged snapshot, monitoring the listed buses.
pub fn run_transient(
    case: &NetworkCase,
    solution: &PowerFlowSolution,
    devices: &DeviceSet,
    events: &[Event],
    cfg: &SimConfig,
    monitor: &[u32],
) -> Result<TransientResult> {
    Simulator::new(case, solution, devices, monitor, *cfg)?.run(events)
}

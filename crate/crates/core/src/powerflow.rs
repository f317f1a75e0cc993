//! Polar Newton–Raphson AC power flow.
//!
//! Mismatches are `scheduled − computed` injections, ordered as ΔP over the
//! PV and PQ buses followed by ΔQ over the PQ buses (bus order within each
//! block). The Jacobian returned by [`compute_jacobian`] is the derivative of
//! the *computed* injections, i.e. the negative of the mismatch derivative.

use std::io::Write;

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AdmittanceMatrix, BusKind, Generator, NetworkCase};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerFlowOptions {
    /// Largest allowed |mismatch|, per-unit.
    pub tol: f64,
    pub max_iter: usize,
    pub flat_start: bool,
    pub enforce_q_limits: bool,
}

impl Default for PowerFlowOptions {
    fn default() -> Self {
        PowerFlowOptions { tol: 1e-6, max_iter: 20, flat_start: false, enforce_q_limits: true }
    }
}

impl PowerFlowOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::invalid("power flow tol must be > 0"));
        }
        if self.max_iter < 1 {
            return Err(Error::invalid("power flow max_iter must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFlowSolution {
    pub bus_ids: Vec<u32>,
    /// Complex per-unit bus voltages in bus order.
    pub v: Vec<Complex64>,
    /// Net per-unit injections (generation − load).
    pub p_inj: Vec<f64>,
    pub q_inj: Vec<f64>,
    /// Generation at the slack bus, per-unit.
    pub slack_p: f64,
    pub slack_q: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Buses whose generators ended at a reactive limit (solved as PQ).
    pub q_limited: Vec<bool>,
    /// Max |mismatch| at the start of every iteration plus the final one.
    pub mismatch_history: Vec<f64>,
}

impl PowerFlowSolution {
    pub fn v_mag(&self, bus_pos: usize) -> f64 {
        self.v[bus_pos].norm()
    }

    pub fn v_ang(&self, bus_pos: usize) -> f64 {
        self.v[bus_pos].arg()
    }

    /// Pre-fault frequency deviation. Steady-state power flow has no
    /// frequency state, so this is nominal by construction.
    pub fn frequency_deviation_hz(&self) -> f64 {
        0.0
    }
}

/// Bus classification and scheduled injections used by one solve.
#[derive(Debug, Clone)]
struct Schedule {
    kind: Vec<BusKind>,
    p: Vec<f64>,
    q: Vec<f64>,
    v_set: Vec<f64>,
    q_min: Vec<f64>,
    q_max: Vec<f64>,
    q_load: Vec<f64>,
}

impl Schedule {
    fn from_case(case: &NetworkCase) -> Self {
        let n = case.n_bus();
        let base = case.system_mva_base;
        let mut s = Schedule {
            kind: Vec::with_capacity(n),
            p: vec![0.0; n],
            q: vec![0.0; n],
            v_set: vec![0.0; n],
            q_min: vec![0.0; n],
            q_max: vec![0.0; n],
            q_load: vec![0.0; n],
        };
        for (i, b) in case.buses().iter().enumerate() {
            let gens = case.generators_at(i);
            let gen_p: f64 = gens.iter().map(|&k| case.generators()[k].p_set).sum();
            s.p[i] = (gen_p - b.p_load) / base;
            s.q[i] = -b.q_load / base;
            s.q_load[i] = b.q_load / base;
            s.q_min[i] = gens.iter().map(|&k| case.generators()[k].q_min).sum::<f64>() / base;
            s.q_max[i] = gens.iter().map(|&k| case.generators()[k].q_max).sum::<f64>() / base;
            s.v_set[i] = gens.first().map(|&k| case.generators()[k].v_set).unwrap_or(b.v_mag);
            let kind = match b.kind {
                BusKind::PV if gens.is_empty() => BusKind::PQ,
                k => k,
            };
            s.kind.push(kind);
        }
        s
    }

    fn layout(&self) -> Layout {
        let pvpq: Vec<usize> = (0..self.kind.len()).filter(|&i| self.kind[i] != BusKind::Slack).collect();
        let pq: Vec<usize> = (0..self.kind.len()).filter(|&i| self.kind[i] == BusKind::PQ).collect();
        Layout::new(self.kind.len(), pvpq, pq)
    }
}

/// Which buses own the ΔP and ΔQ rows (and θ, |V| columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub p_buses: Vec<usize>,
    pub q_buses: Vec<usize>,
    theta_pos: Vec<Option<usize>>,
    vm_pos: Vec<Option<usize>>,
}

impl Layout {
    fn new(n: usize, p_buses: Vec<usize>, q_buses: Vec<usize>) -> Self {
        let mut theta_pos = vec![None; n];
        let mut vm_pos = vec![None; n];
        for (k, &i) in p_buses.iter().enumerate() {
            theta_pos[i] = Some(k);
        }
        for (k, &i) in q_buses.iter().enumerate() {
            vm_pos[i] = Some(p_buses.len() + k);
        }
        Layout { p_buses, q_buses, theta_pos, vm_pos }
    }

    pub fn len(&self) -> usize {
        self.p_buses.len() + self.q_buses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Mismatch ordering implied by the case's bus kinds.
pub fn layout(case: &NetworkCase) -> Layout {
    Schedule::from_case(case).layout()
}

fn injections(ybus: &AdmittanceMatrix, v: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let i = ybus.mul_vec(v);
    let s = v.iter().zip(&i).map(|(v, i)| v * i.conj()).collect();
    (i, s)
}

fn mismatch_with(sched: &Schedule, lay: &Layout, s: &[Complex64]) -> Vec<f64> {
    lay.p_buses.iter().map(|&i| sched.p[i] - s[i].re).chain(lay.q_buses.iter().map(|&i| sched.q[i] - s[i].im)).collect()
}

/// ΔP for PV+PQ buses, then ΔQ for PQ buses, per-unit.
pub fn compute_mismatch(case: &NetworkCase, ybus: &AdmittanceMatrix, v: &[Complex64]) -> Vec<f64> {
    let sched = Schedule::from_case(case);
    let (_, s) = injections(ybus, v);
    mismatch_with(&sched, &sched.layout(), &s)
}

/// Sparse real Jacobian of computed injections with respect to
/// `[θ(PV+PQ), |V|(PQ)]`.
#[derive(Debug, Clone)]
pub struct Jacobian {
    matrix: SparseColMat<usize, f64>,
}

impl Jacobian {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn nnz(&self) -> usize {
        self.matrix.compute_nnz()
    }

    pub fn matrix(&self) -> &SparseColMat<usize, f64> {
        &self.matrix
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut out = vec![vec![0.0; n]; n];
        for t in self.triplets() {
            out[t.0][t.1] += t.2;
        }
        out
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let m = self.matrix.as_ref();
        let mut out = Vec::with_capacity(self.nnz());
        for c in 0..m.ncols() {
            for (r, v) in m.row_idx_of_col(c).zip(m.val_of_col(c)) {
                out.push((r, c, *v));
            }
        }
        out
    }
}

fn jacobian_with(ybus: &AdmittanceMatrix, v: &[Complex64], lay: &Layout) -> Result<Jacobian> {
    let n = lay.len();
    let ibus = ybus.mul_vec(v);
    let vnorm: Vec<Complex64> = v.iter().map(|x| x / x.norm()).collect();
    let j = Complex64::new(0.0, 1.0);
    let mut trip: Vec<Triplet<usize, usize, f64>> = Vec::with_capacity(4 * ybus.nnz());
    for i in 0..ybus.dim() {
        let (rp, rq) = (lay.theta_pos[i], lay.vm_pos[i]);
        if rp.is_none() && rq.is_none() {
            continue;
        }
        for (k, y) in ybus.row(i) {
            let mut ds_dth = j * v[i] * (-y * v[k]).conj();
            let mut ds_dvm = v[i] * (y * vnorm[k]).conj();
            if i == k {
                ds_dth += j * v[i] * ibus[i].conj();
                ds_dvm += ibus[i].conj() * vnorm[i];
            }
            let (cth, cvm) = (lay.theta_pos[k], lay.vm_pos[k]);
            for (row, part) in [(rp, 0), (rq, 1)] {
                let Some(row) = row else { continue };
                let pick = |z: Complex64| if part == 0 { z.re } else { z.im };
                if let Some(c) = cth {
                    trip.push(Triplet::new(row, c, pick(ds_dth)));
                }
                if let Some(c) = cvm {
                    trip.push(Triplet::new(row, c, pick(ds_dvm)));
                }
            }
        }
    }
    let matrix = SparseColMat::try_new_from_triplets(n, n, &trip)
        .map_err(|e| Error::invalid(format!("jacobian assembly: {e:?}")))?;
    Ok(Jacobian { matrix })
}

/// Polar-form Jacobian `[∂P/∂θ, ∂P/∂|V|; ∂Q/∂θ, ∂Q/∂|V|]` at `v`.
pub fn compute_jacobian(case: &NetworkCase, ybus: &AdmittanceMatrix, v: &[Complex64]) -> Result<Jacobian> {
    jacobian_with(ybus, v, &layout(case))
}

fn initial_voltage(case: &NetworkCase, sched: &Schedule, flat: bool) -> Vec<Complex64> {
    case.buses()
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let vm = match sched.kind[i] {
                BusKind::PQ if flat => 1.0,
                BusKind::PQ => b.v_mag,
                _ => sched.v_set[i],
            };
            let va = if flat && sched.kind[i] != BusKind::Slack { 0.0 } else { b.v_ang };
            Complex64::from_polar(vm, va)
        })
        .collect()
}

pub fn solve(case: &NetworkCase, ybus: &AdmittanceMatrix, opts: &PowerFlowOptions) -> Result<PowerFlowSolution> {
    solve_from(case, ybus, opts, None)
}

/// As [`solve`], starting from explicit voltages (magnitudes at PV and slack
/// buses are reset to their setpoints).
pub fn solve_from(
    case: &NetworkCase,
    ybus: &AdmittanceMatrix,
    opts: &PowerFlowOptions,
    v0: Option<&[Complex64]>,
) -> Result<PowerFlowSolution> {
    opts.validate()?;
    if ybus.dim() != case.n_bus() {
        return Err(Error::invalid("admittance matrix dimension differs from bus count"));
    }
    let n = case.n_bus();
    let mut sched = Schedule::from_case(case);
    let mut v = match v0 {
        Some(v0) if v0.len() == n => v0
            .iter()
            .enumerate()
            .map(|(i, x)| match sched.kind[i] {
                BusKind::PQ => *x,
                _ => Complex64::from_polar(sched.v_set[i], x.arg()),
            })
            .collect(),
        Some(_) => return Err(Error::invalid("initial voltage length differs from bus count")),
        None => initial_voltage(case, &sched, opts.flat_start),
    };
    let mut lay = sched.layout();
    let mut to_pq = vec![0u8; n];
    let mut back_to_pv = vec![0u8; n];
    let mut q_limited = vec![false; n];
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    loop {
        let (_, s) = injections(ybus, &v);
        let f = mismatch_with(&sched, &lay, &s);
        let norm = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !norm.is_finite() {
            break;
        }
        history.push(norm);
        if norm <= opts.tol {
            if opts.enforce_q_limits
                && switch_q_limits(&mut sched, &s, &mut v, &mut to_pq, &mut back_to_pv, &mut q_limited)
            {
                lay = sched.layout();
                continue;
            }
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;
        let jac = jacobian_with(ybus, &v, &lay)?;
        let dx = sparse_solve(&jac.matrix, &f).ok_or(Error::SingularJacobian { iteration: iterations })?;
        for (k, &i) in lay.p_buses.iter().enumerate() {
            let (vm, va) = (v[i].norm(), v[i].arg());
            v[i] = Complex64::from_polar(vm, va + dx[k]);
        }
        for (k, &i) in lay.q_buses.iter().enumerate() {
            let (vm, va) = (v[i].norm(), v[i].arg());
            v[i] = Complex64::from_polar(vm + dx[lay.p_buses.len() + k], va);
        }
    }

    let (_, s) = injections(ybus, &v);
    let sl = case.slack_index();
    let base = case.system_mva_base;
    let slack_bus = &case.buses()[sl];
    Ok(PowerFlowSolution {
        bus_ids: case.buses().iter().map(|b| b.id).collect(),
        p_inj: s.iter().map(|x| x.re).collect(),
        q_inj: s.iter().map(|x| x.im).collect(),
        slack_p: s[sl].re + slack_bus.p_load / base,
        slack_q: s[sl].im + slack_bus.q_load / base,
        v,
        iterations,
        converged,
        q_limited,
        mismatch_history: history,
    })
}

/// PV→PQ switching at reactive limits, with one PQ→PV return per bus.
/// Returns true when the bus classification changed.
fn switch_q_limits(
    sched: &mut Schedule,
    s: &[Complex64],
    v: &mut [Complex64],
    to_pq: &mut [u8],
    back_to_pv: &mut [u8],
    q_limited: &mut [bool],
) -> bool {
    const EPS: f64 = 1e-9;
    let mut changed = false;
    for i in 0..sched.kind.len() {
        let q_gen = s[i].im + sched.q_load[i];
        match sched.kind[i] {
            BusKind::PV if to_pq[i] < 2 => {
                let lim = if q_gen > sched.q_max[i] + EPS {
                    Some(sched.q_max[i])
                } else if q_gen < sched.q_min[i] - EPS {
                    Some(sched.q_min[i])
                } else {
                    None
                };
                if let Some(lim) = lim {
                    sched.kind[i] = BusKind::PQ;
                    sched.q[i] = lim - sched.q_load[i];
                    to_pq[i] += 1;
                    q_limited[i] = true;
                    changed = true;
                }
            }
            BusKind::PQ if q_limited[i] && back_to_pv[i] == 0 => {
                let vm = v[i].norm();
                let at_max = (sched.q[i] + sched.q_load[i] - sched.q_max[i]).abs() < EPS;
                let wants_pv = if at_max { vm > sched.v_set[i] + EPS } else { vm < sched.v_set[i] - EPS };
                if wants_pv {
                    sched.kind[i] = BusKind::PV;
                    v[i] = Complex64::from_polar(sched.v_set[i], v[i].arg());
                    back_to_pv[i] += 1;
                    q_limited[i] = false;
                    changed = true;
                }
            }
            _ => {}
        }
    }
    changed
}

pub(crate) fn sparse_solve(a: &SparseColMat<usize, f64>, rhs: &[f64]) -> Option<Vec<f64>> {
    if rhs.is_empty() {
        return Some(Vec::new());
    }
    let lu = a.sp_lu().ok()?;
    let mut b = Mat::<f64>::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    lu.solve_in_place(b.as_mut());
    let x: Vec<f64> = (0..rhs.len()).map(|i| b[(i, 0)]).collect();
    x.iter().all(|x| x.is_finite()).then_some(x)
}

/// Per-unit complex power entering each branch at its from and to ends.
pub fn branch_flows(case: &NetworkCase, v: &[Complex64]) -> Vec<(Complex64, Complex64)> {
    (0..case.branches().len())
        .map(|k| {
            if !case.branches()[k].status {
                return (Complex64::default(), Complex64::default());
            }
            let st = crate::grid::branch_stamp(case, k);
            let (f, t) = (st[0].0, st[3].0);
            let i_f = st[0].2 * v[f] + st[1].2 * v[t];
            let i_t = st[2].2 * v[f] + st[3].2 * v[t];
            (v[f] * i_f.conj(), v[t] * i_t.conj())
        })
        .collect()
}

/// Series/charging losses plus power drawn by bus shunts, per-unit.
pub fn total_losses(case: &NetworkCase, v: &[Complex64]) -> Complex64 {
    let branch: Complex64 = branch_flows(case, v).iter().map(|(a, b)| a + b).sum();
    let shunt: Complex64 = case
        .buses()
        .iter()
        .zip(v)
        .map(|(b, v)| {
            let y = Complex64::new(b.g_shunt, b.b_shunt) / case.system_mva_base;
            v.norm_sqr() * y.conj()
        })
        .sum();
    branch + shunt
}

/// Per-generator (P, Q) output in per-unit, splitting each bus total by
/// scheduled P and by MVA base respectively.
pub fn generator_outputs(case: &NetworkCase, sol: &PowerFlowSolution) -> Vec<(f64, f64)> {
    let base = case.system_mva_base;
    let mut out = vec![(0.0, 0.0); case.generators().len()];
    for (i, b) in case.buses().iter().enumerate() {
        let gens = case.generators_at(i);
        if gens.is_empty() {
            continue;
        }
        let p_bus = sol.p_inj[i] + b.p_load / base;
        let q_bus = sol.q_inj[i] + b.q_load / base;
        let gp = |k: usize| case.generators()[k].p_set;
        let gm = |k: usize| case.generators()[k].mva_base;
        let p_tot: f64 = gens.iter().map(|&k| gp(k)).sum();
        let m_tot: f64 = gens.iter().map(|&k| gm(k)).sum();
        for &k in &gens {
            let p_share = if p_tot.abs() > 1e-12 { gp(k) / p_tot } else { gm(k) / m_tot };
            out[k] = (p_bus * p_share, q_bus * gm(k) / m_tot);
        }
    }
    out
}

/// Local generation committed at the datacenter bus for one snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalDispatch {
    pub smr_mw: f64,
    pub smr_rating_mw: f64,
    pub smr_mva_base: f64,
    /// Steady BESS output, netted against the bus load at unity power factor.
    pub bess_mw: f64,
    pub bess_rating_mw: f64,
}

/// Name under which the SMR unit is registered as a generator.
pub const SMR_MODEL: &str = "smr";

/// Copy of `case` with the datacenter load added at `dc_bus` and, when
/// `local` is given, the SMR as an extra generator at that bus plus the BESS
/// dispatch netted against the load.
pub fn apply_snapshot(
    case: &NetworkCase,
    dc_bus: u32,
    p_mw: f64,
    q_mvar: f64,
    local: Option<&LocalDispatch>,
) -> Result<NetworkCase> {
    let pos = case
        .bus_index(dc_bus)
        .ok_or_else(|| Error::DanglingReference(format!("datacenter bus {dc_bus} not in case")))?;
    if !p_mw.is_finite() || !q_mvar.is_finite() {
        return Err(Error::invalid("snapshot load must be finite"));
    }
    let bess_mw = local.map_or(0.0, |d| d.bess_mw);
    let mut out = case.with_bus(dc_bus, |b| {
        b.p_load += p_mw - bess_mw;
        b.q_load += q_mvar;
    })?;
    if let Some(d) = local {
        if d.smr_mw < 0.0 || d.smr_mw > d.smr_rating_mw + 1e-9 {
            return Err(Error::DispatchExceedsRating(format!(
                "SMR dispatch {} MW outside [0, {}] MW",
                d.smr_mw, d.smr_rating_mw
            )));
        }
        if d.bess_mw.abs() > d.bess_rating_mw + 1e-9 {
            return Err(Error::DispatchExceedsRating(format!(
                "BESS dispatch {} MW exceeds {} MW rating",
                d.bess_mw, d.bess_rating_mw
            )));
        }
        let v_set =
            case.generators_at(pos).first().map(|&k| case.generators()[k].v_set).unwrap_or(case.buses()[pos].v_mag);
        out = out.with_generator(Generator {
            bus: dc_bus,
            p_set: d.smr_mw,
            q_min: -0.6 * d.smr_rating_mw,
            q_max: 0.6 * d.smr_rating_mw,
            mva_base: d.smr_mva_base,
            v_set,
            p_max: Some(d.smr_rating_mw),
            dynamic_model: Some(SMR_MODEL.to_string()),
            status: true,
        })?;
    }
    Ok(out)
}

/// One `(timestamp, bus)` row per bus for each snapshot.
pub fn write_snapshot_csv<'a, W: Write>(
    w: W,
    rows: impl IntoIterator<Item = (f64, &'a PowerFlowSolution)>,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let csv_err = |e: csv::Error| Error::invalid(format!("csv write: {e}"));
    wtr.write_record(["timestamp_s", "bus", "v_mag", "v_ang_deg"]).map_err(csv_err)?;
    for (t, sol) in rows {
        for (id, v) in sol.bus_ids.iter().zip(&sol.v) {
            wtr.write_record([
                format!("{t}"),
                id.to_string(),
                format!("{:.8}", v.norm()),
                format!("{:.6}", v.arg().to_degrees()),
            ])
            .map_err(csv_err)?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_ybus, Branch, Bus};

    pub(crate) fn two_bus(p: f64, q: f64) -> NetworkCase {
        let bus = |id, kind, p_load, q_load| Bus {
            id,
            kind,
            v_mag: 1.0,
            v_ang: 0.0,
            base_kv: 138.0,
            p_load,
            q_load,
            g_shunt: 0.0,
            b_shunt: 0.0,
        };
        NetworkCase::new(
            100.0,
            vec![bus(1, BusKind::Slack, 0.0, 0.0), bus(2, BusKind::PQ, p, q)],
            vec![Branch { from_bus: 1, to_bus: 2, r: 0.0, x: 0.1, b_shunt: 0.0, tap: 1.0, status: true }],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn flat_start_mismatch_is_scheduled_load() {
        let case = two_bus(50.0, 20.0);
        let y = build_ybus(&case);
        let v = vec![Complex64::new(1.0, 0.0); 2];
        let f = compute_mismatch(&case, &y, &v);
        assert_eq!(f.len(), 2);
        assert!((f[0] + 0.5).abs() < 1e-15);
        assert!((f[1] + 0.2).abs() < 1e-15);
    }

    #[test]
    fn zero_load_flat_start_has_no_mismatch() {
        let case = two_bus(0.0, 0.0);
        let y = build_ybus(&case);
        let f = compute_mismatch(&case, &y, &[Complex64::new(1.0, 0.0); 2]);
        assert!(f.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn single_bus_converges_immediately() {
        let case = NetworkCase::new(
            100.0,
            vec![Bus {
                id: 1,
                kind: BusKind::Slack,
                v_mag: 1.0,
                v_ang: 0.0,
                base_kv: 20.0,
                p_load: 0.0,
                q_load: 0.0,
                g_shunt: 0.0,
                b_shunt: 0.0,
            }],
            vec![],
            vec![],
        )
        .unwrap();
        let sol = solve(&case, &build_ybus(&case), &PowerFlowOptions::default()).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.iterations, 0);
        assert_eq!(sol.slack_p, 0.0);
    }

    #[test]
    fn lossless_line_has_no_p_v_coupling_at_flat_start() {
        let case = two_bus(50.0, 20.0);
        let y = build_ybus(&case);
        let j = compute_jacobian(&case, &y, &[Complex64::new(1.0, 0.0); 2]).unwrap().to_dense();
        // rows: P2, Q2; cols: θ2, |V2|
        assert!(j[0][1].abs() < 1e-12);
        assert!(j[1][0].abs() < 1e-12);
        assert!((j[0][0] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_options() {
        let case = two_bus(0.0, 0.0);
        let y = build_ybus(&case);
        let opts = PowerFlowOptions { tol: 0.0, ..Default::default() };
        assert!(solve(&case, &y, &opts).is_err());
        let opts = PowerFlowOptions { max_iter: 0, ..Default::default() };
        assert!(solve(&case, &y, &opts).is_err());
    }

    #[test]
    fn impossible_load_reports_non_convergence() {
        let case = two_bus(1000.0, 0.0);
        let sol = solve(&case, &build_ybus(&case), &PowerFlowOptions::default());
        match sol {
            Ok(s) => assert!(!s.converged),
            Err(Error::SingularJacobian { .. }) => {}
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn snapshot_without_load_leaves_case_unchanged() {
        let case = two_bus(50.0, 20.0);
        assert_eq!(apply_snapshot(&case, 2, 0.0, 0.0, None).unwrap(), case);
        assert!(apply_snapshot(&case, 9, 1.0, 0.0, None).is_err());
    }

    #[test]
    fn snapshot_rejects_over_dispatch() {
        let case = two_bus(0.0, 0.0);
        let d =
            LocalDispatch { smr_mw: 55.0, smr_rating_mw: 50.0, smr_mva_base: 60.0, bess_mw: 0.0, bess_rating_mw: 10.0 };
        assert!(matches!(apply_snapshot(&case, 2, 60.0, 0.0, Some(&d)), Err(Error::DispatchExceedsRating(_))));
    }
}

mod common;

use smrgrid::dynamics::*;
use smrgrid::grid::{build_ybus, NetworkCase};
use smrgrid::powerflow::*;

fn smr_case() -> (NetworkCase, PowerFlowSolution, DeviceSet) {
    let base = common::three_bus();
    let local =
        LocalDispatch { smr_mw: 30.0, smr_rating_mw: 50.0, smr_mva_base: 60.0, bess_mw: 0.0, bess_rating_mw: 10.0 };
    let case = apply_snapshot(&base, 3, 40.0, 13.0, Some(&local)).unwrap();
    let sol = solve(&case, &build_ybus(&case), &PowerFlowOptions { tol: 1e-10, ..Default::default() }).unwrap();
    let machine = MachineParams { h: 5.0, d: 2.0, xd_p: 0.25, mva_base: 60.0 };
    let dev = DeviceSet::from_library(
        &case,
        &MachineLibrary::default(),
        Some((SmrParams::default(), machine, 20.0)),
        Some((3, BessParams::default())),
    )
    .unwrap();
    (case, sol, dev)
}

fn ramp_ok(r: &TransientResult, dt: f64, ramp_pu_s: f64, p_max: f64) -> bool {
    r.smr_pmech_mw
        .as_ref()
        .map(|p| p.windows(2).all(|w| ((w[1] - w[0]) / p_max).abs() / dt <= ramp_pu_s + 1e-9))
        .unwrap_or(true)
}

#[test]
fn equilibrium_holds_without_events() {
    let (case, sol, dev) = smr_case();
    let cfg = SimConfig::default();
    let r = run_transient(&case, &sol, &dev, &[], &cfg, &[1, 2, 3]).unwrap();
    assert_eq!(r.time.len(), 3001);
    assert!(r.initial_states.max_abs_difference(&r.final_states) <= 1e-6);
    for b in &r.buses {
        let v0 = b.v_mag[0];
        assert!(b.v_mag.iter().all(|v| (v - v0).abs() <= 1e-6));
        assert!(b.freq_dev_hz.iter().all(|f| f.abs() <= 1e-6));
    }
    assert!(ramp_ok(&r, cfg.dt, 0.02, 50.0));
}

#[test]
fn initial_state_matches_power_flow() {
    let (case, sol, dev) = smr_case();
    let states = initialize_devices(&case, &sol, &dev).unwrap();
    let smr = states.smr.unwrap();
    let p = SmrParams::default();
    let expect_hp = 0.7 * (30.0 * 1000.0 / p.eta_t) / p.dh_hp;
    assert!((smr.m_dot_hp - expect_hp).abs() / expect_hp < 1e-6);
    assert_eq!(states.bess.unwrap(), BessState::default());
    for m in states.machines.iter().flatten() {
        assert!(m.e_p > 0.0);
        assert_eq!(m.omega_dev, 0.0);
    }
}

#[test]
fn step_halving_converges() {
    let (case, sol, dev) = smr_case();
    let events = [Event::bus_fault(1.0, 2), Event { t: 1.1, kind: EventKind::ClearFault }];
    let coarse = SimConfig { dt: 0.005, t_end: 5.0, ..Default::default() };
    let fine = SimConfig { dt: 0.0025, ..coarse };
    let a = run_transient(&case, &sol, &dev, &events, &coarse, &[3]).unwrap();
    let b = run_transient(&case, &sol, &dev, &events, &fine, &[3]).unwrap();
    let (va, vb) = (&a.bus(3).unwrap().v_mag, &b.bus(3).unwrap().v_mag);
    let worst = va.iter().enumerate().map(|(k, v)| (v - vb[2 * k]).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-4, "{worst}");
    assert!(ramp_ok(&a, coarse.dt, 0.02, 50.0) && ramp_ok(&b, fine.dt, 0.02, 50.0));
}

#[test]
fn under_frequency_raises_smr_and_discharges_bess() {
    let (case, sol, dev) = smr_case();
    // generator 1 is the 80 MW unit at bus 2
    let events = [Event { t: 1.0, kind: EventKind::GenTrip { generator: 1 } }];
    let cfg = SimConfig { t_end: 4.0, ..Default::default() };
    let r = run_transient(&case, &sol, &dev, &events, &cfg, &[3]).unwrap();
    let k0 = r.time.iter().position(|&t| t >= 1.0).unwrap();
    let k1 = r.time.iter().position(|&t| t >= 2.0).unwrap();
    let p = r.smr_pmech_mw.as_ref().unwrap();
    let b = r.bess_p_mw.as_ref().unwrap();
    assert!(r.bus(3).unwrap().freq_dev_hz[k1] < 0.0);
    for k in k0..k1 {
        assert!(p[k] - p[0] >= -1e-12, "t={} dp={}", r.time[k], p[k] - p[0]);
        assert!(b[k] >= 0.0);
    }
    assert!(p[k1] > p[0] && b[k1] > 0.0);
    assert!(ramp_ok(&r, cfg.dt, 0.02, 50.0));
}

#[test]
fn post_fault_power_balance() {
    let (case, sol, dev) = smr_case();
    let events = [Event::bus_fault(1.0, 2), Event { t: 1.1, kind: EventKind::ClearFault }];
    let mut sim = Simulator::new(&case, &sol, &dev, &[3], SimConfig { t_end: 8.0, ..Default::default() }).unwrap();
    let r = sim.run(&events).unwrap();
    let (produced, consumed) = sim.power_balance();
    assert!((produced - consumed).abs() <= 1e-4, "{produced} vs {consumed}");
    assert_eq!(r.event_log.len(), 2);
    assert!((r.event_log[1].applied_at - 1.1).abs() < 1e-9);
}

#[test]
fn fault_dips_voltage_then_recovers() {
    let (case, sol, dev) = smr_case();
    let events = [Event::bus_fault(1.0, 2), Event { t: 1.1, kind: EventKind::ClearFault }];
    let r = run_transient(&case, &sol, &dev, &events, &SimConfig { t_end: 6.0, ..Default::default() }, &[3]).unwrap();
    let v = &r.bus(3).unwrap().v_mag;
    let k = r.time.iter().position(|&t| t >= 1.05).unwrap();
    assert!(v[k] < 0.7 * v[0]);
    assert!((v.last().unwrap() - v[0]).abs() < 0.05);
}

#[test]
fn bad_inputs_rejected() {
    let (case, sol, dev) = smr_case();
    let cfg = SimConfig::default();
    let late = [Event { t: 20.0, kind: EventKind::ClearFault }];
    assert!(run_transient(&case, &sol, &dev, &late, &cfg, &[3]).is_err());
    let unsorted = [Event { t: 2.0, kind: EventKind::ClearFault }, Event { t: 1.0, kind: EventKind::ClearFault }];
    assert!(run_transient(&case, &sol, &dev, &unsorted, &cfg, &[3]).is_err());
    let dangling = [Event::bus_fault(1.0, 99)];
    assert!(run_transient(&case, &sol, &dev, &dangling, &cfg, &[3]).is_err());
    assert!(run_transient(&case, &sol, &dev, &[], &SimConfig { dt: 0.05, ..cfg }, &[3]).is_err());
    let mut unconverged = sol.clone();
    unconverged.converged = false;
    assert!(run_transient(&case, &unconverged, &dev, &[], &cfg, &[3]).is_err());
}

#[test]
fn time_series_csv_layout() {
    let (case, sol, dev) = smr_case();
    let r = run_transient(&case, &sol, &dev, &[], &SimConfig { t_end: 0.1, ..Default::default() }, &[3, 1]).unwrap();
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header, "t_s,bus_3_vmag_pu,bus_3_fdev_hz,bus_1_vmag_pu,bus_1_fdev_hz,smr_pmech_mw,bess_p_mw");
    assert_eq!(text.lines().count(), 1 + r.time.len());
}

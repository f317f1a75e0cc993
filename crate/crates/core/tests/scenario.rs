mod common;

use std::f64::consts::PI;

use smrgrid::datacenter::LoadProfile;
use smrgrid::dynamics::{EventKind, SimConfig};
use smrgrid::grid::build_ybus;
use smrgrid::powerflow::{solve, PowerFlowOptions};
use smrgrid::scenario::*;

fn peak_profile() -> LoadProfile {
    let mut p = LoadProfile::flat(5, 45.0, 12.0);
    p.p_it = vec![30.0, 40.0, 45.0, 48.0, 36.0];
    p.q_cool = p.p_it.clone();
    p.p_thermal = vec![7.0, 9.5, 11.0, 12.0, 8.5];
    p
}

#[test]
fn damped_sinusoid_nadir_matches_dense_scan() {
    let dt = 0.005;
    let t_apply = 3.0;
    let time: Vec<f64> = (0..3001).map(|k| k as f64 * dt).collect();
    let wave = |t: f64| if t < t_apply { 0.0 } else { 0.5 * (-(t - t_apply)).exp() * (2.0 * PI * (t - t_apply)).sin() };
    let f: Vec<f64> = time.iter().map(|&t| wave(t)).collect();
    let m = metrics_from_series(&time, &f, &vec![1.0; time.len()], t_apply, &SettlingBands::default()).unwrap();
    let dense = (0..5_000_000).map(|k| wave(t_apply + k as f64 * 1e-6)).fold(0.0, f64::min);
    assert!((dense + 0.23918).abs() < 1e-4);
    // sampled minimum can only be shallower, by at most the curvature over dt/2
    assert!(m.f_nadir_hz >= dense - 1e-12 && m.f_nadir_hz - dense < 1e-3, "{} vs {dense}", m.f_nadir_hz);
    assert!(m.f_nadir_hz <= 0.0 && m.f_peak_hz >= 0.0);
}

#[test]
fn zero_load_sweep_equals_base_case() {
    let case = common::ieee118();
    let base = solve(&case, &build_ybus(&case), &PowerFlowOptions::default()).unwrap();
    let profile = LoadProfile::flat(4, 0.0, 0.0);
    let s = snapshot_sweep(&case, &profile, &Configuration::grid_only(25), &PowerFlowOptions::default()).unwrap();
    assert_eq!(s.n_converged, 4);
    let poi = case.bus_index(25).unwrap();
    for r in &s.records {
        assert!((r.poi_v_mag - base.v_mag(poi)).abs() < 1e-8);
        assert!((r.slack_p_mw - base.slack_p * 100.0).abs() < 1e-5);
    }
}

#[test]
fn two_bus_voltage_falls_across_sweep() {
    let case = common::two_bus(0.01, 0.08, 0.0, 0.0);
    let mut profile = LoadProfile::flat(20, 0.0, 0.0);
    profile.p_it = (0..20).map(|k| 5.0 * k as f64).collect();
    let s = snapshot_sweep(&case, &profile, &Configuration::grid_only(2), &PowerFlowOptions::default()).unwrap();
    assert!(s.records.windows(2).all(|w| w[1].poi_v_mag < w[0].poi_v_mag));
}

#[test]
fn ies_keeps_poi_voltage_near_base_at_peak() {
    let case = common::ieee118();
    let profile = peak_profile();
    let opts = PowerFlowOptions::default();
    let base = snapshot_sweep(&case, &LoadProfile::flat(1, 0.0, 0.0), &Configuration::grid_only(25), &opts).unwrap();
    let cfg = Configuration::with_ies(25, IesConfig::default());
    let go = snapshot_sweep(&case, &profile, &cfg.as_kind(ConfigKind::GridOnly), &opts).unwrap();
    let ies = snapshot_sweep(&case, &profile, &cfg, &opts).unwrap();
    let v0 = base.records[0].poi_v_mag;
    let peak = 3;
    // the SMR takes on most of the load, so the grid imports less
    assert!(ies.records[peak].slack_p_mw < go.records[peak].slack_p_mw);
    assert!(
        (ies.records[peak].poi_v_ang_deg - base.records[0].poi_v_ang_deg).abs()
            < (go.records[peak].poi_v_ang_deg - base.records[0].poi_v_ang_deg).abs()
    );
    assert!((ies.records[peak].poi_v_mag - v0).abs() <= (go.records[peak].poi_v_mag - v0).abs() + 1e-9);
}

#[test]
fn zero_load_step_is_a_no_op() {
    let case = common::ieee118();
    let profile = peak_profile();
    let cfg = Configuration::with_ies(25, IesConfig::default());
    let spec = ContingencySpec::new(ContingencyKind::LoadStep, Target::Explicit { id: 26 }, 0);
    let opts = CompareOptions {
        snapshots: SnapshotSelection { min_median_max: false, explicit: vec![3] },
        ..Default::default()
    };
    let sim = SimConfig { t_end: 5.0, ..Default::default() };
    let rep = compare(&case, &profile, &cfg, &[spec], &sim, &opts).unwrap();
    let d = rep.pairs[0].deltas.unwrap();
    assert!(d.f_nadir_abs_hz.abs() < 1e-9 && d.v_min_pu.abs() < 1e-6);
    assert_eq!(d.t_settle_f_s, Some(0.0));
}

#[test]
fn bus_fault_targets_stay_near_poi() {
    let case = common::ieee118();
    let hops = case.hop_distances(25).unwrap();
    for seed in 0..50 {
        let spec = ContingencySpec::new(ContingencyKind::BusFault, Target::Near { k: 3 }, seed);
        let ev = spec.resolve(&case, 25).unwrap();
        assert_eq!(ev.len(), 2);
        let EventKind::BusFault3ph { bus, .. } = ev[0].kind else { panic!() };
        assert!(bus != 25 && hops[&bus] <= 3);
        assert_eq!(ev[0].t, 3.0);
        assert!((ev[1].t - 3.1).abs() < 1e-12);
    }
}

#[test]
fn line_trips_never_island() {
    let case = common::ieee118();
    for seed in 0..50 {
        let spec = ContingencySpec::new(ContingencyKind::LineTrip, Target::Anywhere, seed);
        let ev = spec.resolve(&case, 25).unwrap();
        let EventKind::LineTrip { branch } = ev[0].kind else { panic!() };
        assert_eq!(case.islands(Some(branch)), 1);
    }
}

#[test]
fn same_seed_same_events() {
    let case = common::ieee118();
    for spec in random_contingencies(20, 99, 3) {
        assert_eq!(spec.resolve(&case, 25).unwrap(), spec.resolve(&case, 25).unwrap());
    }
    assert_eq!(random_contingencies(5, 1, 3), random_contingencies(5, 1, 3));
}

#[test]
fn configuration_errors() {
    let mut cfg = Configuration::grid_only(25);
    cfg.kind = ConfigKind::WithIes;
    assert!(cfg.validate().is_err());
    let mut ies = IesConfig::default();
    ies.capacity_mw = 70.0;
    assert!(Configuration::with_ies(25, ies).validate().is_err());
    assert!(Configuration::with_ies(25, IesConfig::default()).validate().is_ok());
    let bad = ContingencySpec { duration: 0.0, ..ContingencySpec::new(ContingencyKind::BusFault, Target::Anywhere, 0) };
    assert!(bad.validate().is_err());
}

#[test]
fn snapshot_selection() {
    let p = peak_profile();
    let sel = select_snapshots(&p, &SnapshotSelection::default()).unwrap();
    // totals: 37, 49.5, 56, 60, 44.5 -> min 0, median 1, max 3
    assert_eq!(sel, vec![0, 1, 3]);
    let sel = select_snapshots(&p, &SnapshotSelection { min_median_max: false, explicit: vec![4, 2, 4] }).unwrap();
    assert_eq!(sel, vec![2, 4]);
    assert!(select_snapshots(&p, &SnapshotSelection { min_median_max: false, explicit: vec![9] }).is_err());
}

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smrgrid::datacenter::*;

mod oracle;
use oracle::{brute_bins, brute_capacity, random_events, random_tasks};

#[test]
fn binning_matches_per_second_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let span = 300 * rng.random_range(1..12);
        let n = rng.random_range(0..60);
        let tasks = random_tasks(&mut rng, n, span);
        let fast = bin_tasks(&tasks, 0.0, span as f64).unwrap();
        let slow = brute_bins(&tasks, 0, span);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
    }
}

#[test]
fn thousand_tasks_match_per_second_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let tasks = random_tasks(&mut rng, 1000, 3600);
    let fast = bin_tasks(&tasks, 0.0, 3600.0).unwrap();
    let slow = brute_bins(&tasks, 0, 3600);
    for (a, b) in fast.iter().zip(&slow) {
        assert!((a - b).abs() <= 1e-9);
    }
}

#[test]
fn capacity_matches_per_second_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let span = 300 * rng.random_range(1..8);
        let n = rng.random_range(0..40);
        let events = random_events(&mut rng, n, span);
        let fast = estimate_capacity(&events, 0.0, span as f64).unwrap();
        let slow = brute_capacity(&events, 0, span);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
    }
}

#[test]
fn binning_conserves_cpu_seconds() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let span = 300 * 20;
        let tasks: Vec<TaskRecord> = (0..50)
            .map(|_| {
                let a = rng.random_range(0.0..(span as f64 - 10.0));
                let end = rng.random_range(a + 0.5..span as f64);
                TaskRecord { start: a, end, cpu: rng.random_range(0.0..3.0) }
            })
            .collect();
        let bins = bin_tasks(&tasks, 0.0, span as f64).unwrap();
        let binned: f64 = bins.iter().sum::<f64>() * 300.0;
        let direct: f64 = tasks.iter().map(|t| t.cpu * (t.end - t.start)).sum();
        assert!((binned - direct).abs() <= 1e-6 * direct.max(1.0));
    }
}

#[test]
fn chiller_power_is_sum_of_terms() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let mut p = ChillerParams::default();
        for arr in [&mut p.alpha, &mut p.beta, &mut p.gamma] {
            for v in arr.iter_mut() {
                *v = rng.random_range(0.0..1e-2);
            }
        }
        for v in p.compressor_coeffs.iter_mut() {
            *v = rng.random_range(0.0..2.0);
        }
        let cond = AmbientConditions {
            t_amb: rng.random_range(10.0..40.0),
            phi_amb: rng.random_range(0.0..1.0),
            t_rw: rng.random_range(8.0..16.0),
        };
        let f = ChillerFlows {
            tower_fan: rng.random_range(0.0..600.0),
            condenser: rng.random_range(0.0..600.0),
            evaporator: rng.random_range(0.0..600.0),
        };
        let cubic = |k: &[f64; 4], m: f64| k[0] * m + k[1] * m * m + k[2] * m * m * m + k[3];
        let q = p.compressor_coeffs;
        let cmp = q[0]
            + q[1] * cond.t_rw
            + q[2] * cond.t_amb
            + q[3] * cond.phi_amb
            + q[4] * f.evaporator
            + q[5] * f.evaporator * (cond.t_amb - cond.t_rw);
        let expect =
            cubic(&p.alpha, f.tower_fan) + cubic(&p.beta, f.condenser) + cubic(&p.gamma, f.evaporator) + cmp.max(0.0);
        let got = chiller_unit_power(&cond, &f, &p).unwrap().total();
        assert!((got - expect).abs() <= 1e-9 * expect.abs().max(1.0));
    }
}

#[test]
fn weekly_profile_respects_bounds() {
    let (tasks, events) = synthetic_week_trace(11, 200);
    let trace = utilization(&tasks, &events, 0.0, BINS_PER_WEEK as f64 * 300.0).unwrap();
    assert_eq!(trace.u.len(), 2016);
    let it = ItPowerParams::default();
    let ch = ChillerParams::default();
    let p = build_profile(&trace, &it, &ch, &[AmbientConditions::default()]).unwrap();
    for k in 0..p.len() {
        assert!(p.p_it[k] >= it.p_idle() && p.p_it[k] <= it.p_max);
        assert!(p.n_ch[k] <= ch.n_total);
        assert!(p.p_thermal[k] >= 0.0);
    }
}

#[test]
fn empty_task_file_gives_idle_profile() {
    let tasks = read_tasks("start_s,end_s,cpu\n".as_bytes(), "empty.csv").unwrap();
    let events = vec![MachineEvent { t: 0.0, kind: MachineEventKind::Add, machine_id: "a".into(), capacity: 4.0 }];
    let trace = utilization(&tasks, &events, 0.0, 3000.0).unwrap();
    let p =
        build_profile(&trace, &ItPowerParams::default(), &ChillerParams::default(), &[AmbientConditions::default()])
            .unwrap();
    assert!(p.p_it.iter().all(|&x| x == 30.0));
}

#[test]
fn idle_and_full_power_points() {
    let it = ItPowerParams { p_max: 60.0, idle_fraction: 0.5 };
    assert_eq!(it_power(0.0, &it).unwrap(), 0.5 * 60.0);
    assert_eq!(it_power(1.0, &it).unwrap(), 60.0);
}

proptest! {
    #[test]
    fn it_power_strictly_increasing(a in 0.0..1.0f64, b in 0.0..1.0f64, p_max in 0.1..500.0f64, idle in 0.0..0.99f64) {
        prop_assume!(a != b);
        let it = ItPowerParams { p_max, idle_fraction: idle };
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(it_power(lo, &it).unwrap() < it_power(hi, &it).unwrap());
    }

    #[test]
    fn staging_is_pure_and_bounded(q in 0.0..80.0f64) {
        let p = ChillerParams::default();
        let c = AmbientConditions::default();
        let a = staging_and_thermal(q, &c, &p).unwrap();
        let b = staging_and_thermal(q, &c, &p).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(a.0 <= p.n_total);
        prop_assert_eq!(a.0 == 0, q == 0.0);
    }
}

#![allow(dead_code)]

use std::path::PathBuf;

use smrgrid::grid::{parse_case, CaseFormat, NetworkCase};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn ieee118() -> NetworkCase {
    parse_case(data_dir().join("ieee118.json"), CaseFormat::Json).unwrap()
}

pub fn two_bus(r: f64, x: f64, p_mw: f64, q_mvar: f64) -> NetworkCase {
    NetworkCase::from_json_str(&format!(
        r#"{{
        "system_mva_base": 100.0,
        "buses": [
            {{"id": 1, "kind": "Slack", "v_mag": 1.0, "v_ang": 0.0, "base_kv": 138.0, "p_load": 0.0, "q_load": 0.0}},
            {{"id": 2, "kind": "PQ", "v_mag": 1.0, "v_ang": 0.0, "base_kv": 138.0, "p_load": {p_mw}, "q_load": {q_mvar}}}
        ],
        "branches": [{{"from_bus": 1, "to_bus": 2, "r": {r}, "x": {x}}}],
        "generators": [{{"bus": 1, "p_set": 0.0, "q_min": -500.0, "q_max": 500.0, "mva_base": 200.0, "v_set": 1.0, "status": true}}]
    }}"#
    ))
    .unwrap()
}

/// Three buses, two generators, one load; small enough for hand checks.
pub fn three_bus() -> NetworkCase {
    NetworkCase::from_json_str(
        r#"{
        "system_mva_base": 100.0,
        "buses": [
            {"id": 1, "kind": "Slack", "v_mag": 1.04, "v_ang": 0.0, "base_kv": 230.0, "p_load": 0.0, "q_load": 0.0},
            {"id": 2, "kind": "PV", "v_mag": 1.02, "v_ang": 0.0, "base_kv": 230.0, "p_load": 0.0, "q_load": 0.0},
            {"id": 3, "kind": "PQ", "v_mag": 1.0, "v_ang": 0.0, "base_kv": 230.0, "p_load": 150.0, "q_load": 50.0}
        ],
        "branches": [
            {"from_bus": 1, "to_bus": 2, "r": 0.01, "x": 0.08, "b_shunt": 0.04},
            {"from_bus": 1, "to_bus": 3, "r": 0.02, "x": 0.12, "b_shunt": 0.03},
            {"from_bus": 2, "to_bus": 3, "r": 0.015, "x": 0.10, "b_shunt": 0.03}
        ],
        "generators": [
            {"bus": 1, "p_set": 0.0, "q_min": -200.0, "q_max": 200.0, "mva_base": 200.0, "v_set": 1.04, "status": true},
            {"bus": 2, "p_set": 80.0, "q_min": -100.0, "q_max": 100.0, "mva_base": 120.0, "v_set": 1.02, "status": true}
        ]
    }"#,
    )
    .unwrap()
}

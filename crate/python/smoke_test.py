"""Smoke test for the smrgrid Python module.

Build and install first:
    maturin build --release -m crates/py/Cargo.toml -o dist && pip install dist/smrgrid-*.whl
"""

import json
import math
import pathlib

import smrgrid

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main():
    case = smrgrid.Case.load(str(ROOT / "data" / "ieee118.json"))
    assert case.n_bus == 118, case

    pf = smrgrid.solve_powerflow(case)
    assert pf.converged and pf.iterations < 10
    assert all(0.9 < v < 1.1 for v in pf.v_mag)
    assert pf.losses_mw > 0

    assert math.isclose(smrgrid.it_power(0.0), 30.0)
    assert math.isclose(smrgrid.it_power(1.0), 60.0)

    profile = smrgrid.Profile.synthetic(seed=7)
    assert len(profile) == 2016
    assert abs(profile.peak_total_mw - 60.0) < 1e-6

    spec = json.dumps({"kind": "BusFault", "target": {"mode": "explicit", "id": 26}})
    out = smrgrid.simulate(case, profile, 100, contingency=spec, t_end=5.0)
    m = out["metrics"]
    assert m["v_min_pu"] < m["v_pre_pu"], m
    assert len(out["result"]["time"]) == len(out["result"]["buses"][0]["v_mag"])

    report = smrgrid.compare_configs(case, profile, n_random=2, seed=3, snapshots=[100], t_end=5.0)
    assert report["summary"]["n_pairs"] == 2, report["summary"]
    print("smoke test ok:", report["summary"])


if __name__ == "__main__":
    main()

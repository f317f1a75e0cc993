"""Reference AC power flow for a smrgrid JSON case, solved with pandapower.

    pip install pandapower
    python3 scripts/pf_oracle.py data/ieee118.json crates/core/tests/data/ieee118_reference.json

Writes bus voltage magnitudes/angles (degrees) with and without generator
reactive-limit enforcement. The result is frozen into the test suite.
"""
import json
import sys
import warnings

import numpy as np

warnings.filterwarnings("ignore")
import pandapower as pp  # noqa: E402
from pandapower.converter.pypower import from_ppc  # noqa: E402

KIND = {"PQ": 1, "PV": 2, "Slack": 3}


def to_ppc(case):
    ids = [b["id"] for b in case["buses"]]
    bus = []
    for b in case["buses"]:
        bus.append([b["id"], KIND[b["kind"]], b["p_load"], b["q_load"],
                    b.get("g_shunt", 0.0), b.get("b_shunt", 0.0), 1,
                    b["v_mag"], b["v_ang"], b["base_kv"], 1, 1.1, 0.9])
    branch = []
    for br in case["branches"]:
        tap = br["tap"]
        branch.append([br["from_bus"], br["to_bus"], br["r"], br["x"], br["b_shunt"],
                       9900, 0, 0, 0.0 if tap == 1.0 else tap, 0, 1 if br["status"] else 0,
                       -360, 360])
    gen = []
    for g in case["generators"]:
        gen.append([g["bus"], g["p_set"], 0, g["q_max"], g["q_min"], g["v_set"],
                    g["mva_base"], 1 if g["status"] else 0, g.get("p_max") or 9999, 0]
                   + [0] * 11)
    return ids, {
        "version": "2",
        "baseMVA": case["system_mva_base"],
        "bus": np.array(bus, dtype=float),
        "branch": np.array(branch, dtype=float),
        "gen": np.array(gen, dtype=float),
    }


def main(case_path, out_path):
    with open(case_path) as f:
        case = json.load(f)
    ids, ppc = to_ppc(case)
    out = {"case": case.get("name", case_path), "solver": f"pandapower {pp.__version__}"}
    for key, qlim in (("no_q_limits", False), ("q_limits", True)):
        net = from_ppc(ppc, f_hz=60, validate_conversion=False)
        pp.runpp(net, enforce_q_lims=qlim, tolerance_mva=1e-10, init="flat",
                 calculate_voltage_angles=True, trafo_model="pi")
        out[key] = {
            "bus_ids": ids,
            "v_mag": [float(x) for x in net.res_bus.vm_pu.values],
            "v_ang_deg": [float(x) for x in net.res_bus.va_degree.values],
            "slack_p_mw": float(net.res_ext_grid.p_mw.sum()),
        }
    with open(out_path, "w") as f:
        json.dump(out, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])

"""Convert the public IEEE 118-bus case (MATPOWER layout, as shipped by PYPOWER)
into the JSON case schema read by smrgrid.

    pip install pypower
    python3 scripts/make_case118.py data/ieee118.json

Conversion rules:
  * bus type 3/2/1 -> Slack/PV/PQ; Gs/Bs (MW/MVAr at 1 pu) -> g_shunt/b_shunt
  * branch tap 0 -> 1.0; all branches in service; no phase shifters in this case
  * generator mva_base raised to max(100, 1.1 * Pmax) so that classical machine
    reactances are on a realistic machine base
"""
import json
import math
import sys

from pypower.api import case118

KIND = {1: "PQ", 2: "PV", 3: "Slack"}


def main(out):
    c = case118()
    buses = []
    for b in c["bus"]:
        buses.append({
            "id": int(b[0]),
            "kind": KIND[int(b[1])],
            "v_mag": float(b[7]),
            "v_ang": float(b[8]),
            "base_kv": float(b[9]),
            "p_load": float(b[2]),
            "q_load": float(b[3]),
            "g_shunt": float(b[4]),
            "b_shunt": float(b[5]),
        })
    branches = []
    for br in c["branch"]:
        branches.append({
            "from_bus": int(br[0]),
            "to_bus": int(br[1]),
            "r": float(br[2]),
            "x": float(br[3]),
            "b_shunt": float(br[4]),
            "tap": float(br[8]) if br[8] != 0 else 1.0,
            "status": bool(br[10] > 0),
        })
    generators = []
    for g in c["gen"]:
        pmax = float(g[8])
        generators.append({
            "bus": int(g[0]),
            "p_set": float(g[1]),
            "q_min": float(g[4]),
            "q_max": float(g[3]),
            "mva_base": float(max(100.0, math.ceil(1.1 * pmax))),
            "v_set": float(g[5]),
            "p_max": pmax,
            "dynamic_model": None,
            "status": bool(g[7] > 0),
        })
    case = {
        "name": "ieee118",
        "system_mva_base": float(c["baseMVA"]),
        "buses": buses,
        "branches": branches,
        "generators": generators,
    }
    with open(out, "w") as f:
        json.dump(case, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/ieee118.json")

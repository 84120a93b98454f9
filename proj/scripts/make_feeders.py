#!/usr/bin/env python3
"""Writes the feeder files under data/.

ieee13_reconstructed.json is the IEEE 13-node test feeder with every bus
made three-phase, 15 PV blocks of five 60 kVA inverters at seven buses (45%
penetration) and symmetric load flexibility sized so that the available
aggregate flexibility is +-1.64 MW.
"""

import argparse
import json
import math
from pathlib import Path

MILE_FT = 5280.0

# ohm/mile, phase order a, b, c
CONFIGS = {
    "601": [[(0.3465, 1.0179), (0.1560, 0.5017), (0.1580, 0.4236)],
            [(0.1560, 0.5017), (0.3375, 1.0478), (0.1535, 0.3849)],
            [(0.1580, 0.4236), (0.1535, 0.3849), (0.3414, 1.0348)]],
    "602": [[(0.7526, 1.1814), (0.1580, 0.4236), (0.1560, 0.5017)],
            [(0.1580, 0.4236), (0.7475, 1.1983), (0.1535, 0.3849)],
            [(0.1560, 0.5017), (0.1535, 0.3849), (0.7436, 1.2112)]],
    "606": [[(0.7982, 0.4463), (0.3192, 0.0328), (0.2849, -0.0143)],
            [(0.3192, 0.0328), (0.7891, 0.4041), (0.3192, 0.0328)],
            [(0.2849, -0.0143), (0.3192, 0.0328), (0.7982, 0.4463)]],
}
# Single- and two-phase laterals become three-phase with a generic overhead matrix.
LATERAL = [[(1.33, 1.35) if r == c else (0.2066, 0.4591) for c in range(3)] for r in range(3)]

SEGMENTS = [  # from, to, length ft, config
    ("650", "632", 2000, "601"),
    ("632", "633", 500, "602"),
    ("633", "634", None, "xfm"),
    ("632", "645", 500, "lateral"),
    ("645", "646", 300, "lateral"),
    ("632", "671", 2000, "601"),
    ("671", "680", 1000, "601"),
    ("671", "684", 300, "lateral"),
    ("684", "611", 300, "lateral"),
    ("684", "652", 800, "lateral"),
    ("671", "692", 10, "601"),  # closed switch
    ("692", "675", 500, "606"),
]

# kW per phase; the distributed 632-671 load is lumped at 671.
LOADS = {
    ("634", "a"): 160, ("634", "b"): 120, ("634", "c"): 120,
    ("645", "b"): 170,
    ("646", "b"): 230,
    ("652", "a"): 128,
    ("671", "a"): 385 + 17, ("671", "b"): 385 + 66, ("671", "c"): 385 + 117,
    ("675", "a"): 485, ("675", "b"): 68, ("675", "c"): 290,
    ("692", "c"): 170,
    ("611", "c"): 170,
}

PV_BLOCKS = [("634", p) for p in "abc"] + [("671", p) for p in "abc"] + \
            [("675", p) for p in "abc"] + [("680", p) for p in "abc"] + \
            [("652", "a"), ("611", "c"), ("646", "b")]


def scaled(matrix, length_ft):
    f = length_ft / MILE_FT
    return [[[re * f, im * f] for re, im in row] for row in matrix]


def transformer():
    # 500 kVA, 4.16/0.48 kV, 1.1 + j2 % on its own base, referred to the primary
    zb = 4.16 ** 2 / 0.5
    return [[[0.011 * zb, 0.02 * zb] if r == c else [0.0, 0.0] for c in range(3)] for r in range(3)]


def flat(matrix):
    return [entry for row in matrix for entry in row]


def ieee13(taps, dp_bar_kw=1640.0, penetration=0.45, block_kva=300.0, load_pf=0.95):
    buses = ["650", "632", "633", "634", "645", "646", "671", "680", "684", "611", "652", "692", "675"]
    segments = []
    for frm, to, length, cfg in SEGMENTS:
        if cfg == "xfm":
            z = transformer()
        else:
            z = scaled(LATERAL if cfg == "lateral" else CONFIGS[cfg], length)
        segments.append({"from": frm, "to": to, "z": flat(z)})

    total_load = sum(LOADS.values())
    pv_each = penetration * total_load / len(PV_BLOCKS)
    pv_flex = 0.5 * pv_each
    load_frac = (dp_bar_kw - len(PV_BLOCKS) * pv_flex) / total_load

    loads = [{"bus": b, "phase": p, "p_kw": kw, "p_min": kw * (1 - load_frac),
              "p_max": kw * (1 + load_frac), "pf": load_pf}
             for (b, p), kw in LOADS.items()]
    inverters = [{"bus": b, "phase": p, "p_kw": pv_each, "p_min": pv_each - pv_flex,
                  "p_max": pv_each + pv_flex, "s_kva": block_kva, "mode": "constant-pf",
                  "mode_params": {"pf": 0.9, "gamma": 0.48}, "q_kvar": 0.0}
                 for b, p in PV_BLOCKS]
    return {
        "name": "ieee13-reconstructed",
        "buses": [{"id": b, "phases": "abc"} for b in buses],
        "segments": segments,
        "regulators": [{"segment": 0, "taps": list(taps)}],
        "slack": "650",
        "base_kva": 1000.0,
        "base_kv": 4.16 / math.sqrt(3),
        "loads": loads,
        "inverters": inverters,
    }


def two_bus():
    z = scaled(CONFIGS["601"], 2000)
    return {
        "name": "two-bus",
        "buses": [{"id": "s", "phases": "abc"}, {"id": "1", "phases": "abc"}],
        "segments": [{"from": "s", "to": "1", "z": flat(z)}],
        "slack": "s",
        "base_kva": 1000.0,
        "base_kv": 4.16 / math.sqrt(3),
        "loads": [{"bus": "1", "phase": p, "p_kw": 300.0, "p_min": 200.0, "p_max": 400.0, "pf": 0.95}
                  for p in "abc"],
        "inverters": [{"bus": "1", "phase": "a", "p_kw": 150.0, "p_min": 50.0, "p_max": 250.0,
                       "s_kva": 300.0, "mode_params": {"pf": 0.9, "gamma": 0.48}}],
    }


def four_bus():
    z1 = scaled(CONFIGS["601"], 2000)
    z2 = scaled(CONFIGS["602"], 2500)
    z3 = scaled(CONFIGS["606"], 1500)
    return {
        "name": "four-bus",
        "buses": [{"id": b, "phases": "abc"} for b in ("s", "1", "2", "3")],
        "segments": [{"from": "s", "to": "1", "z": flat(z1)},
                     {"from": "1", "to": "2", "z": flat(z2)},
                     {"from": "1", "to": "3", "z": flat(z3)}],
        "regulators": [{"segment": 0, "taps": [1.025, 1.025, 1.025]}],
        "slack": "s",
        "base_kva": 1000.0,
        "base_kv": 4.16 / math.sqrt(3),
        "loads": [{"bus": "2", "phase": "a", "p_kw": 250.0, "p_min": 150.0, "p_max": 350.0, "pf": 0.95},
                  {"bus": "2", "phase": "b", "p_kw": 180.0, "p_min": 100.0, "p_max": 260.0, "pf": 0.95},
                  {"bus": "3", "phase": "c", "p_kw": 220.0, "p_min": 120.0, "p_max": 320.0, "pf": 0.95}],
        "inverters": [{"bus": "2", "phase": "a", "p_kw": 120.0, "p_min": 40.0, "p_max": 200.0,
                       "s_kva": 250.0, "mode_params": {"pf": 0.9, "gamma": 0.48}},
                      {"bus": "3", "phase": "c", "p_kw": 100.0, "p_min": 30.0, "p_max": 170.0,
                       "s_kva": 200.0, "mode_params": {"pf": 0.9, "gamma": 0.48}}],
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data")
    ap.add_argument("--taps", type=float, nargs=3, default=[1.0625, 1.05, 1.06875])
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name, doc in (("ieee13_reconstructed", ieee13(args.taps)),
                      ("two_bus", two_bus()), ("four_bus", four_bus())):
        (args.out / f"{name}.json").write_text(json.dumps(doc, indent=1) + "\n")


if __name__ == "__main__":
    main()

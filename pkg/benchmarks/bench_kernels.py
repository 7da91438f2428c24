"""Time the numeric kernels with and without numba.

Each mode runs in its own interpreter because the switch is read at import.
Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--json]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
import numpy as np
from schedwidth import _accel
from schedwidth.kernels import branch_and_bound, gf2_rank_words, machine_dp_tables, pack_rows

repeat = int(sys.argv[1])
rng = np.random.default_rng(12345)
P_dp = rng.integers(1, 20, size=(4, 14)).astype(np.int64)
P_bb = rng.integers(1, 20, size=(3, 11)).astype(np.int64)
same = np.zeros(11, dtype=np.bool_)
upper = np.int64(int(P_bb.min(axis=0).sum()) + 1)
rows = pack_rows([int(rng.integers(0, 2**62)) << 34 | int(rng.integers(0, 2**34)) for _ in range(96)], 96)

cases = {
    "machine_dp_tables[4x14]": lambda: machine_dp_tables(P_dp),
    "branch_and_bound[3x11]": lambda: branch_and_bound(P_bb, same, upper),
    "gf2_rank_words[96x96]": lambda: gf2_rank_words(rows),
}
out = {"numba": _accel.use_numba(), "cases": {}}
for name, fn in cases.items():
    t0 = time.perf_counter()
    fn()
    first = time.perf_counter() - t0
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    out["cases"][name] = {"first_call": first, "best": min(times), "median": sorted(times)[len(times) // 2]}
print(json.dumps(out))
"""


def run(disable, repeat):
    env = dict(os.environ)
    if disable:
        env["SCHEDWIDTH_DISABLE_NUMBA"] = "1"
    else:
        env.pop("SCHEDWIDTH_DISABLE_NUMBA", None)
    res = subprocess.run(
        [sys.executable, "-c", CHILD, str(repeat)], env=env, capture_output=True, text=True, check=True
    )
    return json.loads(res.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", action="store_true", help="print raw results")
    args = ap.parse_args()
    jit = run(False, args.repeat)
    plain = run(True, args.repeat)
    if args.json:
        print(json.dumps({"jit": jit, "fallback": plain}, indent=1))
        return
    if not jit["numba"]:
        print("numba unavailable: both runs used the fallback")
    print(f"{'kernel':28s} {'numba best':>12s} {'fallback best':>14s} {'speedup':>8s}")
    for name, a in jit["cases"].items():
        b = plain["cases"][name]
        print(f"{name:28s} {a['best']:12.5f} {b['best']:14.5f} {b['best'] / max(a['best'], 1e-9):8.1f}x")


if __name__ == "__main__":
    main()

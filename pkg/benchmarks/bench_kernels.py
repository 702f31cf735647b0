"""Time the collision-scan kernels: numba @njit versus the numpy fallback.

The backend is fixed at import time by CQREL_BACKEND, so each backend runs
in its own subprocess.  Reported per case: best-of-repeats wall time for the
exhaustive max-collision scan over the full Toeplitz family, plus the scan
result so the two backends can be checked for agreement.

Usage: python3 benchmarks/bench_kernels.py [--cases small|full] [--repeats N]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

CASES = {
    "small": [(2, 9, 4), (3, 6, 3), (5, 4, 2)],
    "full": [(2, 9, 4), (2, 11, 5), (3, 7, 3), (5, 5, 2), (7, 4, 2), (13, 3, 1)],
}

_WORKER = r"""
import json, sys, time
import numpy as np
from cqrel._kernels import BACKEND, enumerate_vectors, max_collision_count

cases = json.loads(sys.argv[1])
repeats = int(sys.argv[2])
rows = []
for q, n, k in cases:
    t_enum = enumerate_vectors(q, n - 1)
    max_collision_count(t_enum[:1], q, n, k)  # warm-up (jit compile)
    best = float("inf")
    worst_count = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        worst_count = max_collision_count(t_enum, q, n, k)
        best = min(best, time.perf_counter() - t0)
    rows.append({"q": q, "n": n, "k": k, "family": int(t_enum.shape[0]),
                 "worst_count": int(worst_count), "seconds": best})
print(json.dumps({"backend": BACKEND, "rows": rows}))
"""


def run_backend(backend: str, cases, repeats: int) -> dict:
    env = dict(os.environ, CQREL_BACKEND=backend)
    out = subprocess.run(
        [sys.executable, "-c", _WORKER, json.dumps(cases), str(repeats)],
        capture_output=True, text=True, env=env, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--cases", choices=sorted(CASES), default="small")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()
    cases = CASES[args.cases]

    results = {b: run_backend(b, cases, args.repeats)
               for b in ("numpy", "numba")}
    print(f"{'q':>3} {'n':>3} {'k':>3} {'family':>8} "
          f"{'numpy [s]':>12} {'numba [s]':>12} {'speedup':>9}")
    agree = True
    for i, (q, n, k) in enumerate(cases):
        r_np = results["numpy"]["rows"][i]
        r_nb = results["numba"]["rows"][i]
        if r_np["worst_count"] != r_nb["worst_count"]:
            agree = False
        ratio = r_np["seconds"] / r_nb["seconds"] if r_nb["seconds"] > 0 else float("inf")
        print(f"{q:>3} {n:>3} {k:>3} {r_np['family']:>8} "
              f"{r_np['seconds']:>12.4f} {r_nb['seconds']:>12.4f} {ratio:>8.1f}x")
    print("backend agreement:", "ok" if agree else "MISMATCH")
    return 0 if agree else 1


if __name__ == "__main__":
    sys.exit(main())

"""Compare the numba and pure-numpy kernel backends.

The backend is fixed at import time, so each one runs in its own
subprocess. Usage: ``python3 benchmarks/bench_kernels.py [--repeat N]``.
"""

import argparse
import json
import os
import subprocess
import sys
import time

WORKLOADS = ("prufer_shoot", "jost_fplus")


def _child(repeat):
    from tcres import BACKEND, prufer, radial
    from tcres.core import ProblemParams

    p = ProblemParams.from_sum_difference(2.0, 1.0, 0.1)
    jobs = {
        "prufer_shoot": lambda: prufer.shooting_eigenvalue(p, 2.0, 10),
        "jost_fplus": lambda: radial.jost_fplus(p, 1.5 - 0.2j, 1.0 + 0.1j),
    }
    out = {"backend": BACKEND}
    for name in WORKLOADS:
        t0 = time.perf_counter()
        jobs[name]()
        warm = time.perf_counter() - t0
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            val = jobs[name]()
            best = min(best, time.perf_counter() - t0)
        mu = getattr(val, "mu", val)
        out[name] = {"first": warm, "best": best, "value": [complex(mu).real, complex(mu).imag]}
    print(json.dumps(out))


def _run(backend, repeat):
    env = dict(os.environ, TCRES_BACKEND=backend)
    env.pop("TCRES_NO_NUMBA", None)
    res = subprocess.run(
        [sys.executable, __file__, "--child", "--repeat", str(repeat)],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(res.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.child:
        _child(args.repeat)
        return

    fast = _run("numba", args.repeat)
    slow = _run("numpy", max(1, args.repeat // 3))
    print(f"{'workload':<14}{'numba best':>12}{'numpy best':>12}{'speedup':>9}{'max |diff|':>12}")
    for name in WORKLOADS:
        a, b = fast[name], slow[name]
        diff = abs(complex(*a["value"]) - complex(*b["value"]))
        print(f"{name:<14}{a['best']:>11.4f}s{b['best']:>11.4f}s{b['best'] / a['best']:>8.1f}x{diff:>12.2e}")
    print(f"numba first call (includes compile or cache load): "
          + ", ".join(f"{n} {fast[n]['first']:.2f}s" for n in WORKLOADS))


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Compare the numba and pure-numpy kernel backends.

The backend is chosen at import time via RESILIENT_SWARM_NO_NUMBA, so this
script re-executes itself in a subprocess per backend and prints a small
table. Each worker times the two hot kernels (RK4 step, critical-zone
displacement) and one full case-1 nominal simulation.
"""

import json
import os
import subprocess
import sys
import time

N_RK4 = 200_000
N_ZONE = 50_000


def _bench_worker():
    from resilient_swarm import _kernels, engine
    from resilient_swarm.scenario import parse_scenario
    from resilient_swarm.scenario_suite import generate_case1

    # warm up (numba JIT compile)
    _kernels.rk4_step(1, 0.1, 0.0, 0.0, 0.2, 0.05, -0.02, 0.05)
    _kernels.zone_displacement(1, 0.1, 0.2, 0.05, -0.02, 1.0, 0.05)

    t0 = time.perf_counter()
    x = y = 0.0
    phi = 0.2
    for _ in range(N_RK4):
        x, y, phi = _kernels.rk4_step(1, 0.1, x, y, phi, 0.05, -0.02, 0.05)
    t_rk4 = time.perf_counter() - t0

    t0 = time.perf_counter()
    for _ in range(N_ZONE):
        _kernels.zone_displacement(1, 0.1, 0.2, 0.05, -0.02, 1.0, 0.05)
    t_zone = time.perf_counter() - t0

    sc = parse_scenario(generate_case1("nominal"))
    t0 = time.perf_counter()
    engine.run(sc, detect=True)
    t_run = time.perf_counter() - t0

    print(json.dumps({"backend": _kernels.backend_name(), "rk4_s": t_rk4,
                      "zone_s": t_zone, "case1_s": t_run}))


def main():
    results = []
    for no_numba in ("1", "0"):
        env = dict(os.environ, RESILIENT_SWARM_NO_NUMBA=no_numba)
        out = subprocess.run([sys.executable, __file__, "--worker"],
                             env=env, capture_output=True, text=True)
        if out.returncode != 0:
            sys.stderr.write(out.stderr)
            return 1
        results.append(json.loads(out.stdout.strip().splitlines()[-1]))

    print(f"{'backend':<8} {'rk4 step':>12} {'zone disp':>12} {'case1 run':>12}")
    for r in results:
        print(f"{r['backend']:<8} "
              f"{N_RK4 / r['rk4_s']:>9.0f}/s "
              f"{N_ZONE / r['zone_s']:>9.0f}/s "
              f"{r['case1_s']:>11.2f}s")
    base, fast = results
    print(f"speedup vs numpy: rk4 x{base['rk4_s'] / fast['rk4_s']:.1f}, "
          f"zone x{base['zone_s'] / fast['zone_s']:.1f}, "
          f"case1 x{base['case1_s'] / fast['case1_s']:.2f}")
    return 0


if __name__ == "__main__":
    if "--worker" in sys.argv:
        _bench_worker()
    else:
        sys.exit(main())

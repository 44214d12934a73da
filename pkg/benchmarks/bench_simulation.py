"""Wall time of a whole benchmark run with and without numba.

    python benchmarks/bench_simulation.py [--preset smooth_2d] [--t-end 0.1]

Each backend runs in a fresh interpreter because the flag is read at import.
The first numba run includes JIT compilation unless the on-disk cache is warm,
so the script runs each backend twice and reports the second run.
"""

import argparse
import json
import os
import subprocess
import sys

SCRIPT = """
import json, time
from porohyst import backend_name, config
from porohyst.solver import Simulation
cfg = config.from_preset({preset!r}, solver__t_end={t_end!r})
t0 = time.perf_counter()
sim = Simulation(cfg.params, cfg.solver)
res = sim.run(data=cfg.initial_data())
print(json.dumps({{"backend": backend_name(), "seconds": time.perf_counter() - t0,
                  "sup_p": res.summary()["sup_p"]}}))
"""


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--preset", default="smooth_2d")
    ap.add_argument("--t-end", type=float, default=0.1)
    args = ap.parse_args()
    code = SCRIPT.format(preset=args.preset, t_end=args.t_end)
    results = {}
    for flag in ("1", "0"):
        env = dict(os.environ, POROHYST_DISABLE_NUMBA=flag)
        for _ in range(2):
            out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        r = json.loads(out.stdout)
        results[r["backend"]] = r
    print(f"preset={args.preset} t_end={args.t_end}")
    for name, r in results.items():
        print(f"{name:<6} {r['seconds']:8.2f} s   sup|p| = {r['sup_p']:.12f}")
    if len(results) == 2:
        print(f"speedup {results['numpy']['seconds'] / results['numba']['seconds']:.2f}x")


if __name__ == "__main__":
    main()

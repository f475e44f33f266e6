"""Time the hot kernels under numba and under the pure-numpy fallback.

Each backend runs in its own interpreter because the switch is read at import:

    python benchmarks/bench_kernels.py            # both backends, side by side
    python benchmarks/bench_kernels.py --repeat 5
"""

import argparse
import json
import os
import subprocess
import sys
import time

WORKER = r"""
import json, sys, time
import numpy as np
from seqvar import _accel, limit as L, posterior as P
from seqvar.model import ModelParams, generate_dataset, suff_stats
from seqvar.priors import Hyperprior, MeanPrior

repeat = int(sys.argv[1])


def _timed(fn):
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


d = generate_dataset(ModelParams.constant_mean(0.5, 1000, 1.0, 0.5), 1, 0)
st = suff_stats(d)
grid = P.default_sigma_grid(st)
s_iid = np.geomspace(0.5, 2.0, 81)
rng = np.random.default_rng(0)
yb = 1 + 0.05 * rng.standard_normal(2000)
zb = yb + 0.25 + 0.05 * rng.standard_normal(2000)
cases = {
    "mixture posterior (4096-point grid)": lambda: P.log_posterior_mixture(grid, st, Hyperprior.exponential(1.0)),
    "iid marginal, cauchy (n=1000, 81 points)": lambda: P.log_marginal_lik_iid(s_iid, d, MeanPrior.cauchy(1.0)),
    "limit MAP (2000 rows)": lambda: L.limit_map_batch(yb, zb, 500, 500, 1.0, 0.25),
    "limit mean (2000 rows)": lambda: L.limit_mean_batch(yb, zb, 500, 500, 1.0, 0.25),
}
out = {"backend": _accel.backend_name(), "cases": {}}
for name, fn in cases.items():
    t0 = time.perf_counter()
    fn()
    first = time.perf_counter() - t0
    best = min(_timed(fn) for _ in range(repeat)) if repeat else first
    out["cases"][name] = {"first": first, "best": best}
print(json.dumps(out))
"""

def run_backend(disable, repeat):
    env = dict(os.environ, SEQVAR_DISABLE_NUMBA="1" if disable else "0")
    r = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True)
    if r.returncode:
        sys.exit(f"benchmark worker failed:\n{r.stderr}")
    return json.loads(r.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3, help="timed repetitions after the warm-up call")
    args = ap.parse_args(argv)
    nb = run_backend(False, args.repeat)
    npy = run_backend(True, args.repeat)
    print(f"{'kernel':<44}{'numba':>12}{'numpy':>12}{'speedup':>10}{'numba 1st call':>16}")
    for name in nb["cases"]:
        a, b = nb["cases"][name]["best"], npy["cases"][name]["best"]
        print(f"{name:<44}{a * 1e3:>10.1f}ms{b * 1e3:>10.1f}ms{b / a:>9.1f}x{nb['cases'][name]['first']:>15.2f}s")
    if nb["backend"] != "numba":
        print("note: numba is not importable here, both columns ran the numpy path")


if __name__ == "__main__":
    main()

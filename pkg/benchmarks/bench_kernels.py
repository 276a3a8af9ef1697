"""Compiled vs pure-Python kernels: per-kernel timings and a full training step.

Run with ``python benchmarks/bench_kernels.py``. The training-step figure
is measured in a subprocess per backend, because the backend is chosen at
import time.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from ddigraph import _pykernels

try:
    from ddigraph import _ckernels
except ImportError:
    _ckernels = None

STEP_SCRIPT = """
import json, timeit
import numpy as np
from ddigraph import kernels
from ddigraph.toy import motif_pairs
from ddigraph.train import FeatureCache, batch_step
from ddigraph.model import ModelConfig, init_params
data = list(motif_pairs(16, seed=0))
params = init_params(ModelConfig(), np.random.default_rng(0))
cache = FeatureCache()
batch_step(data, params, cache)
t = min(timeit.repeat(lambda: batch_step(data, params, cache), number=1, repeat={repeat}))
print(json.dumps({{"backend": kernels.BACKEND, "seconds": t}}))
"""


def kernel_inputs(rng, n=65, d=50):
    reps = rng.normal(size=(n, d))
    nbrs = np.full((n, 5), -1, dtype=np.int64)
    for v in range(1, 40):
        u = int(rng.integers(0, v))
        for a, b in ((v, u), (u, v)):
            slot = int(np.argmax(nbrs[a] < 0))
            if nbrs[a, slot] < 0:
                nbrs[a, slot] = b
    mat = rng.normal(size=(n, n))
    mask = np.zeros(n)
    mask[:40] = 1.0
    return reps, nbrs, mat, mask


def time_kernel(fn, *args, repeat=5, number=2000):
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def step_time(pure: bool, repeat: int) -> dict:
    env = dict(os.environ)
    env.pop("DDIGRAPH_PURE_PYTHON", None)
    if pure:
        env["DDIGRAPH_PURE_PYTHON"] = "1"
    out = subprocess.run(
        [sys.executable, "-c", STEP_SCRIPT.format(repeat=repeat)], env=env, capture_output=True, text=True, check=True
    )
    return json.loads(out.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    reps, nbrs, mat, mask = kernel_inputs(rng)
    rows = [("neighbor_sum", (reps, nbrs)), ("masked_rowmax", (mat, mask, mask))]
    print(f"{'kernel':<16}{'python us':>12}{'cython us':>12}{'speedup':>10}")
    for name, inputs in rows:
        py = time_kernel(getattr(_pykernels, name), *inputs, repeat=args.repeat)
        if _ckernels is None:
            print(f"{name:<16}{py * 1e6:>12.2f}{'n/a':>12}{'':>10}")
            continue
        cy = time_kernel(getattr(_ckernels, name), *inputs, repeat=args.repeat)
        print(f"{name:<16}{py * 1e6:>12.2f}{cy * 1e6:>12.2f}{py / cy:>9.1f}x")

    print()
    print("batch_step (16 pairs, default architecture, forward + backward):")
    results = [step_time(True, args.repeat)]
    if _ckernels is not None:
        results.append(step_time(False, args.repeat))
    for r in results:
        print(f"  {r['backend']:<8}{r['seconds'] * 1e3:>9.1f} ms")


if __name__ == "__main__":
    main()

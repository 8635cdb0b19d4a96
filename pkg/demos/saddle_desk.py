"""Compare the constant-step subgradient method with the bundle saddle solver.

A 20 x 20 regularized matrix game at tolerance 1e-2: CS-SPP takes hundreds
of thousands of cheap steps, while PB-SPP needs a few thousand outer steps,
each made of two cutting-plane cycles.  On this instance every cycle stops
after one iteration, so the bundle schemes coincide.
"""

import math
import time

import numpy as np

from pdbundle.matrix_game import generate_instance, to_saddle_instance
from pdbundle.saddle import cs_spp_run, pb_spp_run

eps = 1e-2
inst = to_saddle_instance(generate_instance(20, 20, 0.2, 0.05, 0.05, seed=0))
x0 = y0 = np.full(20, 1.0 / 20)
print(f"M = {inst.M:.3f}, D = {inst.D}")

t = time.perf_counter()
lam = eps / (32 * inst.M ** 2)
budget = math.ceil(128 * inst.M ** 2 * inst.D ** 2 / eps ** 2)
res = cs_spp_run(inst, x0, y0, lam, budget, eps_target=eps)
print(f"{'cs-spp':>22}: gap {res.gap:.2e} after {res.outer_iters} steps "
      f"({time.perf_counter() - t:.1f}s)")

for scheme, cuts in (("one-cut", 10), ("two-cuts", 10), ("multi-cuts", 10), ("multi-cuts", 20)):
    t = time.perf_counter()
    res = pb_spp_run(inst, x0, y0, eps, scheme=scheme, max_cuts=cuts)
    label = f"pb-spp {scheme}" + (f"({cuts})" if scheme == "multi-cuts" else "")
    print(f"{label:>22}: gap {res.gap:.2e} after {res.outer_iters} outer / "
          f"{res.total_inner_iters} inner iterations ({time.perf_counter() - t:.1f}s)")

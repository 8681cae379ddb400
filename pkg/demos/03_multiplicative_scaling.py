"""Cost of one fit as the dimension grows.

Each iteration projects the data on a single direction, so the work is
linear in N, d and n and independent of D(m, d).  We fit the
multiplicative dataset at a few dimensions with the same number of
iterations and report wall time and projected QQ errors.

    python3 demos/03_multiplicative_scaling.py [iterations] [d ...]
"""

import sys
import time

import numpy as np

from thorinfit import count_coefficients, fit, sample
from thorinfit.datasets import simulate_multiplicative
from thorinfit.gof import median_relative_quantile_error, projected_quantiles

iters = int(sys.argv[1]) if len(sys.argv) > 1 else 100_000
dims = [int(v) for v in sys.argv[2:]] or [10, 25, 50]

print("   d  D(20, d)            seconds  atoms  QQ error")
for d in dims:
    X, alpha = simulate_multiplicative(1500, d, 7)
    start = time.perf_counter()
    report = fit(X, n_atoms=100, m=20, max_iters=iters, seed=7, decay_offset=2000.0, eps_weight=1e-5, eps_scale=1e-5)
    elapsed = time.perf_counter() - start
    rng = np.random.default_rng(8)
    qd, qm = projected_quantiles(X, sample(report.measure, 20_000, rng), rng.random((50, d)), np.linspace(0.1, 0.9, 9))
    print(f"{d:4d}  {count_coefficients(20, d):<18d} {elapsed:8.1f} {report.measure.n:6d} {median_relative_quantile_error(qd, qm):9.3f}")

# the multivariate moment count explodes while the projected loss always
# matches m + 1 = 21 coefficients per step

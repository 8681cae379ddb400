"""Fit a univariate Gamma convolution and look at what comes back.

The truth is X = G1 + 2 G2 with G1 ~ Gamma(2), G2 ~ Gamma(1), i.e. the
Thorin measure 2 delta_1 + delta_2.  We fit ten atoms from a sample of
10^4 points and compare Thorin moments, the Laguerre density and
resampled KS p-values.

    python3 demos/01_univariate_fit.py [iterations]
"""

import sys

import numpy as np

from thorinfit import ThorinMeasure, build_a_matrix, fit, mu_from_tau, sample
from thorinfit.cumulants import shifted_moments, tau_from_mu_1d
from thorinfit.gof import run_gof
from thorinfit.laguerre import density_series
from thorinfit.thorin import tau_univariate

iters = int(sys.argv[1]) if len(sys.argv) > 1 else 20_000

# %% data
truth = ThorinMeasure([2.0, 1.0], [[1.0], [2.0]])
x = sample(truth, 10_000, np.random.default_rng(5))[:, 0]
print(f"sample mean {x.mean():.3f} (model {truth.mean()[0]:.3f}), variance {x.var():.3f} (model {truth.covariance()[0, 0]:.3f})")

# %% fit
report = fit(x, n_atoms=10, m=20, max_iters=iters, seed=1)
nu = report.measure.sorted()
print(f"\n{report.iterations} iterations in {report.wall_time:.1f}s, smoothed loss {report.loss_trace[-1]:.3g}")
print("fitted atoms (weight, scale):")
for a, s in zip(nu.alpha, nu.scales[:, 0]):
    if a > 1e-3:
        print(f"  {a:8.4f}  {s:8.4f}")

# mass sitting near each true atom; the optimizer tends to split atoms
for target in (1.0, 2.0):
    near = np.abs(nu.scales[:, 0] - target) < 0.5
    print(f"mass within 0.5 of scale {target}: {nu.alpha[near].sum():.3f}")

# %% Thorin moments: data, fit, truth
tau_data = tau_from_mu_1d(shifted_moments(x, 5))
tau_fit = tau_univariate(nu.alpha, nu.scales[:, 0], 5)
tau_true = tau_univariate(truth.alpha, truth.scales[:, 0], 5)
print("\n  k      data       fit     truth")
for k in range(6):
    print(f"{k:3d} {tau_data[k]:9.4f} {tau_fit[k]:9.4f} {tau_true[k]:9.4f}")

# %% density through the Laguerre series of the fitted measure
m = 40
grid = np.array([0.5, 1.0, 2.0, 4.0, 8.0])
dens_fit = density_series(build_a_matrix(m) @ mu_from_tau(tau_univariate(nu.alpha, nu.scales[:, 0], m)), grid)
dens_true = density_series(build_a_matrix(m) @ mu_from_tau(tau_univariate(truth.alpha, truth.scales[:, 0], m)), grid)
hist, edges = np.histogram(x, bins=np.arange(0, 20.5, 0.5), density=True)
centers = (edges[:-1] + edges[1:]) / 2
print("\n    x   series(fit) series(truth)  histogram")
for g, f, t in zip(grid, dens_fit, dens_true):
    print(f"{g:5.1f} {f:12.4f} {t:13.4f} {np.interp(g, centers, hist):10.4f}")

# %% goodness of fit
gof = run_gof(lambda n, r: sample(truth, n, r), lambda n, r: sample(nu, n, r), N=500, M=200, repeats=100, seed=2)
doc = gof.to_dict()
print(f"\nKS p < 0.05 in {doc['ks_reject_rate']:.2f} of 100 resamples, histogram {doc['ks_hist']}")
print(f"CvM p < 0.05 in {doc['cvm_reject_rate']:.2f}, histogram {doc['cvm_hist']}")

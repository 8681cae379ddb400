"""Shifted moments, Thorin moments and the bijection between them.

Shifted moments are ``mu_k = E[X^k exp(-|X|)]``, the Taylor coefficients (up
to ``k!``) of the moment generating function around ``-1``.  Thorin moments
are the scaled cumulants ``tau_k = K^{(k)}(-1) / (|k| - 1)!`` (``tau_0 =
K(-1)``).  ``mu = B(tau)`` is computed by differentiating ``M = exp(K)``
once along the first nonzero coordinate and applying Leibniz' rule::

    mu_k = sum_{l <= p} C(p, l) (|k - l| - 1)! mu_l tau_{k - l},   p = k - e_{i0}

which also gives the Jacobian of ``B`` by the chain rule.  In one dimension
the inverse map has a cheap recursion (:func:`tau_from_mu_1d`).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .laguerre import DomainError
from .multiindex import IndexSet, enumerate_index_set


class EmptyDataError(ValueError):
    pass


def _as_index_set(index_set, d: int = 1) -> IndexSet:
    if isinstance(index_set, IndexSet):
        return index_set
    return enumerate_index_set(int(index_set), d)


def _as_data(data) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    if data.shape[0] == 0:
        raise EmptyDataError("no observations")
    if np.any(data < 0):
        raise DomainError("observations must be nonnegative")
    return data


def shifted_moments(data, index_set) -> np.ndarray:
    """Monte-Carlo estimate ``mean_i X_i^k exp(-|X_i|)`` for every ``k``.

    ``data`` is ``(N, d)`` (or a 1-d array for ``d = 1``); ``index_set`` is an
    :class:`IndexSet` or, for univariate data, the precision ``m``.
    """
    data = _as_data(data)
    N, d = data.shape
    iset = _as_index_set(index_set, d)
    if iset.d != d:
        raise ValueError(f"index set of dimension {iset.d} for {d}-variate data")
    if d == 1:
        return _shifted_moments_1d(data[:, 0], iset.m)
    w = np.exp(-data.sum(axis=1))
    K = iset.array
    prod = np.ones((N, len(iset)))
    for j in range(d):
        # 0**0 == 1 in numpy, as required
        powers = np.vander(data[:, j], iset.m + 1, increasing=True)
        prod *= powers[:, K[:, j]]
    return (w @ prod) / N


def _shifted_moments_1d(x: np.ndarray, m: int) -> np.ndarray:
    # running products beat np.vander by ~7x on long vectors
    out = np.empty(m + 1)
    v = np.exp(-x)
    for k in range(m + 1):
        out[k] = v.sum()
        v *= x
    return out / len(x)


@dataclass(frozen=True)
class _Plan:
    # for each nonzero index k (by position): positions of l <= p, of k - l,
    # and the coefficients C(p, l) (|k - l| - 1)!
    rows: tuple[tuple[int, np.ndarray, np.ndarray, np.ndarray], ...]


@lru_cache(maxsize=64)
def _plan(m: int, d: int) -> _Plan:
    iset = enumerate_index_set(m, d)
    pos = iset.position
    fact = np.cumprod(np.r_[1.0, np.arange(1, m + 1, dtype=float)])
    rows = []
    for kpos, k in enumerate(iset.indices):
        if kpos == 0:
            continue
        p = iset.predecessor(k)
        ls = [l for l in _below(p)]
        lpos = np.array([pos[l] for l in ls], dtype=np.intp)
        klpos = np.array([pos[tuple(a - b for a, b in zip(k, l))] for l in ls], dtype=np.intp)
        coef = np.array(
            [
                np.prod([comb(pi, li) for pi, li in zip(p, l)]) * fact[sum(k) - sum(l) - 1]
                for l in ls
            ],
            dtype=float,
        )
        rows.append((kpos, lpos, klpos, coef))
    return _Plan(rows=tuple(rows))


def _below(p):
    # all l with 0 <= l <= p componentwise
    if not p:
        yield ()
        return
    for first in range(p[0] + 1):
        for rest in _below(p[1:]):
            yield (first, *rest)


def _check_tau(tau, index_set) -> tuple[np.ndarray, IndexSet]:
    tau = np.asarray(tau, dtype=float)
    iset = _as_index_set(index_set if index_set is not None else len(tau) - 1)
    if tau.shape != (len(iset),):
        raise ValueError(f"tau has shape {tau.shape}, expected ({len(iset)},)")
    return tau, iset


def mu_from_tau(tau, index_set=None) -> np.ndarray:
    """Shifted moments ``mu = B(tau)``.

    ``index_set`` defaults to the univariate set matching ``len(tau)``.
    Overflow shows up as non-finite entries.
    """
    tau, iset = _check_tau(tau, index_set)
    plan = _plan(iset.m, iset.d)
    mu = np.zeros_like(tau)
    mu[0] = np.exp(tau[0])
    for kpos, lpos, klpos, coef in plan.rows:
        w = coef * tau[klpos]
        mu[kpos] = w @ mu[lpos]
    return mu


def jacobian_b(tau, index_set=None) -> tuple[np.ndarray, np.ndarray]:
    """Jacobian ``J[k, l] = d mu_k / d tau_l`` of ``B`` at ``tau``.

    Returns ``(J, mu)``; ``mu`` is the same array :func:`mu_from_tau` gives.
    """
    tau, iset = _check_tau(tau, index_set)
    plan = _plan(iset.m, iset.d)
    D = len(tau)
    mu = np.zeros(D)
    J = np.zeros((D, D))
    mu[0] = np.exp(tau[0])
    J[0, 0] = mu[0]
    for kpos, lpos, klpos, coef in plan.rows:
        w = coef * tau[klpos]
        J[kpos] = w @ J[lpos]
        J[kpos, klpos] += coef * mu[lpos]
        mu[kpos] = w @ mu[lpos]
    return J, mu


def tau_from_mu_1d(mu) -> np.ndarray:
    """Univariate inverse ``tau = B^{-1}(mu)``.

    With ``eta_k = mu_k / (k! mu_0)``::

        tau_0 = log mu_0,   tau_k = k eta_k - sum_{j=1}^{k-1} tau_j eta_{k-j}
    """
    mu = np.asarray(mu, dtype=float)
    if mu[0] <= 0 or not np.isfinite(mu[0]):
        raise DomainError(f"mu_0 must be positive, got {mu[0]!r}")
    m = len(mu) - 1
    fact = np.cumprod(np.r_[1.0, np.arange(1, m + 1, dtype=float)])
    eta = mu / (fact * mu[0])
    tau = np.empty(m + 1)
    tau[0] = np.log(mu[0])
    for k in range(1, m + 1):
        # tau[1:k] . eta[k-1:0:-1]
        tau[k] = k * eta[k] - tau[1:k] @ eta[k - 1 : 0 : -1]
    return tau


def gamma_shifted_moments(shape: float, scale: float, m: int) -> np.ndarray:
    """Closed-form shifted moments of a Gamma(shape, scale) variable.

    ``mu_k = scale^k Gamma(shape + k) / (Gamma(shape) (1 + scale)^(shape + k))``.
    """
    k = np.arange(m + 1)
    # Gamma(shape + k) / Gamma(shape) as a running product
    rising = np.cumprod(np.r_[1.0, shape + np.arange(m)])
    return rising * scale**k / (1.0 + scale) ** (shape + k)

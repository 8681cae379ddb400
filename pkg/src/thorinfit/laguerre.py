"""Laguerre functions on the positive orthant and the moment-to-coefficient map.

The univariate functions are ``phi_k(x) = sqrt(2) * L_k(2x) * exp(-x)`` with
``L_k`` the Laguerre polynomials; they form an orthonormal basis of
``L^2(R_+)``.  Multivariate functions are tensor products.

Laguerre coefficients ``a`` and shifted moments ``mu`` (see
:mod:`thorinfit.cumulants`) are linked by a data-independent, lower
triangular matrix: ``a = A @ mu``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .multiindex import IndexSet, enumerate_index_set

SQRT2 = np.sqrt(2.0)


class DomainError(ValueError):
    """Raised when an argument lies outside the positive orthant."""


def phi_table(kmax: int, x) -> np.ndarray:
    """Values ``phi_k(x)`` for ``k = 0..kmax``, shape ``(kmax + 1, *x.shape)``.

    Uses the three-term recurrence of the Laguerre polynomials; the explicit
    alternating binomial sum loses all precision past ``k ~ 20``.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("Laguerre functions are defined on x >= 0 only")
    y = 2.0 * x
    out = np.empty((kmax + 1,) + x.shape)
    out[0] = 1.0
    if kmax >= 1:
        out[1] = 1.0 - y
    for k in range(1, kmax):
        out[k + 1] = ((2 * k + 1 - y) * out[k] - k * out[k - 1]) / (k + 1)
    out *= SQRT2 * np.exp(-x)
    return out


def laguerre_phi(k, x) -> float | np.ndarray:
    """Evaluate ``phi_k`` at ``x``.

    ``k`` is an int (univariate) or a multi-index; for a multi-index of
    length ``d``, ``x`` has trailing dimension ``d`` and the product
    ``prod_i phi_{k_i}(x_i)`` is returned.
    """
    if np.isscalar(k):
        return phi_table(int(k), x)[int(k)]
    k = tuple(int(v) for v in k)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != len(k):
        raise ValueError(f"point dimension {x.shape[-1]} does not match index {k}")
    out = np.ones(x.shape[:-1])
    for i, ki in enumerate(k):
        out = out * phi_table(ki, x[..., i])[ki]
    return out


@lru_cache(maxsize=64)
def _univariate_a(m: int) -> np.ndarray:
    # T[k, j] = C(k, j) (-2)^j / j!, built with running products
    T = np.zeros((m + 1, m + 1))
    for k in range(m + 1):
        T[k, 0] = 1.0
        for j in range(1, k + 1):
            T[k, j] = T[k, j - 1] * (-2.0) * (k - j + 1) / (j * j)
    T.setflags(write=False)
    return T


def build_a_matrix(index_set: IndexSet | int) -> np.ndarray:
    """Matrix ``A`` with ``a = A @ mu`` over ``index_set``.

    An int ``m`` is shorthand for the univariate set ``{0, ..., m}``.
    """
    if isinstance(index_set, (int, np.integer)):
        return SQRT2 * _univariate_a(int(index_set))
    T = _univariate_a(index_set.m)
    K = index_set.array
    d = index_set.d
    # entry (k, j) = sqrt(2)^d prod_i T[k_i, j_i], zero unless j <= k
    A = np.full((len(K), len(K)), SQRT2**d)
    for i in range(d):
        A *= T[K[:, i][:, None], K[:, i][None, :]]
    return A


def density_series(a, x, index_set: IndexSet | None = None) -> np.ndarray:
    """Truncated Laguerre series ``sum_k a_k phi_k(x)``.

    Truncation can produce negative values; they are returned as is.  ``x``
    is a point or a stack of points with trailing dimension ``d``; in the
    univariate case a plain array of abscissas is accepted.
    """
    a = np.asarray(a, dtype=float)
    if index_set is None:
        index_set = enumerate_index_set(len(a) - 1, 1)
    if len(a) != len(index_set):
        raise ValueError(f"{len(a)} coefficients for an index set of size {len(index_set)}")
    x = np.asarray(x, dtype=float)
    d = index_set.d
    if d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != d:
        raise ValueError(f"points of dimension {x.shape[-1]} for a {d}-variate series")
    if np.any(x < 0):
        raise DomainError("Laguerre series are defined on the positive orthant only")
    K = index_set.array
    tables = [phi_table(index_set.m, x[..., i]) for i in range(d)]
    out = np.zeros(x.shape[:-1])
    for row, coef in zip(K, a):
        if coef == 0.0:
            continue
        term = tables[0][row[0]]
        for i in range(1, d):
            term = term * tables[i][row[i]]
        out = out + coef * term
    return out

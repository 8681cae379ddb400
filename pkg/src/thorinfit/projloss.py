"""Per-direction loss on projected data and its gradient in conic parameters.

For a direction ``c``, the data is projected to ``<c, X_i>``; its empirical
Thorin moments ``tau_hat`` are compared to those of the projected candidate
measure in the quadratic norm ``||r||^2 = r' G r`` with ``G = N' N`` and
``N = A @ dB(tau_hat)``, the Jacobian of ``tau -> A B(tau)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cumulants import _as_data, _shifted_moments_1d, jacobian_b, tau_from_mu_1d
from .laguerre import DomainError, build_a_matrix
from .thorin import ConicParams


class DegenerateProjectionError(ArithmeticError):
    """All projected observations are so large that ``exp(-x)`` underflows."""


class NumericError(ArithmeticError):
    def __init__(self, message: str, atom: int | None = None):
        super().__init__(message)
        self.atom = atom


@dataclass(frozen=True)
class DirectionContext:
    c: np.ndarray
    tau_hat: np.ndarray
    nabla: np.ndarray
    gram: np.ndarray

    @property
    def m(self) -> int:
        return len(self.tau_hat) - 1


@dataclass
class LossGradient:
    value: float
    grad_p: np.ndarray
    grad_q: np.ndarray


def build_context(data, c, m: int, a_matrix: np.ndarray | None = None, check: bool = True) -> DirectionContext:
    """Project ``data`` on ``c`` and assemble the weighted norm for that direction.

    ``a_matrix`` may be passed to reuse ``build_a_matrix(m)`` across calls;
    ``check=False`` skips input validation on the hot path.
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    if check:
        data = _as_data(data)
        if data.shape[1] != c.shape[0]:
            raise ValueError(f"direction of length {c.shape[0]} for {data.shape[1]}-variate data")
        if np.any(c < 0) or np.any(c > 1):
            raise DomainError("direction must lie in [0, 1]^d")
    x = data @ c
    mu = _shifted_moments_1d(x, m)
    if not mu[0] > 0:
        raise DegenerateProjectionError("projected data too large: exp(-x) underflows for every observation")
    tau_hat = tau_from_mu_1d(mu)
    J, _ = jacobian_b(tau_hat)
    A = build_a_matrix(m) if a_matrix is None else a_matrix
    nabla = A @ J
    return DirectionContext(c=c, tau_hat=tau_hat, nabla=nabla, gram=nabla.T @ nabla)


def loss_and_gradient(ctx: DirectionContext, params: ConicParams, lam: float = 0.0, euclidean: bool = False) -> LossGradient:
    """Loss ``r' G r + lam * sum p_i^2`` and its gradient in ``(p, q)``.

    The spatial gradient omits the ``p_i^2`` factor carried by the Euclidean
    gradient (conic metric: vertical and spatial moves are decoupled).  Pass
    ``euclidean=True`` to get the plain Euclidean gradient instead.
    """
    p, q, c = params.p, params.q, ctx.c
    m = ctx.m
    alpha = p * p
    u = (q * q) @ c
    ratio = u / (1.0 + u)
    log1pu = np.log1p(u)

    # R[i, k] = ratio_i^k, k = 0..m
    R = np.empty((len(p), m + 1))
    R[:, 0] = 1.0
    for k in range(1, m + 1):
        R[:, k] = R[:, k - 1] * ratio

    tau = alpha @ R
    tau[0] = -alpha @ log1pu
    r = ctx.tau_hat - tau
    Gr = ctx.gram @ r
    value = float(r @ Gr) + lam * float(alpha.sum())
    g = -2.0 * Gr  # dL / dtau_model

    # vertical: dtau_0/dp = -2p log(1+u), dtau_k/dp = 2p ratio^k
    dp = g[1:] @ R[:, 1:].T - g[0] * log1pu
    grad_p = 2.0 * p * dp + 2.0 * lam * p
    # spatial, without p^2: dtau_0/du = -1/(1+u), dtau_k/du = k ratio^(k-1) / (1+u)^2
    ks = np.arange(1, m + 1)
    inv = 1.0 / (1.0 + u)
    du = (R[:, :-1] @ (ks * g[1:])) * inv * inv - g[0] * inv
    if euclidean:
        du = du * alpha
    grad_q = 2.0 * q * c[None, :] * du[:, None]

    if not (np.isfinite(value) and np.all(np.isfinite(grad_p)) and np.all(np.isfinite(grad_q))):
        bad = np.flatnonzero(~(np.isfinite(grad_p) & np.all(np.isfinite(grad_q), axis=1)))
        atom = int(bad[0]) if len(bad) else None
        raise NumericError(f"non-finite loss or gradient (atom {atom})", atom=atom)
    return LossGradient(value=value, grad_p=grad_p, grad_q=grad_q)

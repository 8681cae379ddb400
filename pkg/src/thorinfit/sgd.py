"""Stochastic conic particle descent over random projection directions.

Each step draws ``c ~ U([0, 1]^d)``, evaluates the per-direction loss on the
standardized data and moves the conic parameters with Adam.  At the end the
atoms are scaled back to the original units and small weights and scale
entries are thresholded away.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .cumulants import _as_data
from .laguerre import build_a_matrix
from .projloss import DegenerateProjectionError, NumericError, build_context, loss_and_gradient
from .thorin import ConicParams, ThorinMeasure, conic_to_measure, threshold

logger = logging.getLogger(__name__)

MAX_REDRAWS = 8
MAX_ROLLBACKS = 5


class DegenerateColumnError(ValueError):
    pass


@dataclass
class FitConfig:
    n_atoms: int = 100
    m: int = 20
    max_iters: int = 10_000
    lr: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    lam: float = 0.0
    tol: float = 1e-16
    eps_weight: float = 0.0
    eps_scale: float = 0.0
    batch_size: int = 1
    # when set, the step is lr * sqrt(decay_offset / (decay_offset + t))
    decay_offset: float | None = None
    trace_every: int = 100
    smoothing: float = 0.99

    def __post_init__(self):
        if self.n_atoms < 1 or self.m < 0 or self.max_iters < 0 or self.batch_size < 1:
            raise ValueError("n_atoms and batch_size must be positive, m and max_iters nonnegative")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")
        if self.lr <= 0 or self.adam_eps <= 0 or self.lam < 0 or self.tol < 0:
            raise ValueError("lr and adam_eps must be positive, lam and tol nonnegative")
        if self.eps_weight < 0 or self.eps_scale < 0:
            raise ValueError("thresholds must be nonnegative")


@dataclass
class FitReport:
    measure: ThorinMeasure
    loss_trace: list[float]
    iterations: int
    termination: str
    seed: int
    config: dict
    wall_time: float
    sigma: np.ndarray
    rollbacks: int = 0
    raw_measure: ThorinMeasure | None = field(default=None, repr=False)

    def to_dict(self, include_wall_time: bool = True) -> dict:
        doc = {
            "measure": self.measure.to_dict(),
            "loss_trace": [float(v) for v in self.loss_trace],
            "iterations": self.iterations,
            "termination": self.termination,
            "seed": self.seed,
            "config": self.config,
            "sigma": [float(s) for s in self.sigma],
            "rollbacks": self.rollbacks,
        }
        if include_wall_time:
            doc["wall_time"] = self.wall_time
        return doc

    def to_json(self, include_wall_time: bool = True) -> str:
        return json.dumps(self.to_dict(include_wall_time), indent=1, sort_keys=True) + "\n"

    def save(self, path, include_wall_time: bool = True) -> None:
        Path(path).write_text(self.to_json(include_wall_time), encoding="utf-8")


class Adam:
    """Adam on a flat parameter vector."""

    def __init__(self, size: int, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def state(self):
        return self.m.copy(), self.v.copy(), self.t

    def restore(self, state) -> None:
        self.m, self.v, self.t = state[0].copy(), state[1].copy(), state[2]

    def step(self, theta: np.ndarray, grad: np.ndarray, lr: float) -> None:
        self.t += 1
        self.m *= self.beta1
        self.m += (1.0 - self.beta1) * grad
        self.v *= self.beta2
        self.v += (1.0 - self.beta2) * (grad * grad)
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        theta -= (lr / bc1) * self.m / (np.sqrt(self.v / bc2) + self.eps)


def standardize(data) -> tuple[np.ndarray, np.ndarray]:
    """Divide each column by its sample standard deviation (divisor ``N - 1``)."""
    data = _as_data(data)
    if data.shape[0] < 2:
        raise DegenerateColumnError("at least two observations are needed to standardize")
    sigma = data.std(axis=0, ddof=1)
    bad = np.flatnonzero(~(sigma > 0))
    if len(bad):
        raise DegenerateColumnError(f"column {int(bad[0])} is constant")
    return data / sigma, sigma


def init_params(n: int, d: int, rng) -> ConicParams:
    """Gaussian ``p`` and ``q``: weights and scales start as chi-squared(1) draws."""
    rng = np.random.default_rng(rng)
    p = rng.standard_normal(n)
    q = rng.standard_normal((n, d))
    return ConicParams(p, q)


def _direction_context(X, m, A, rng):
    for _ in range(MAX_REDRAWS):
        try:
            return build_context(X, rng.random(X.shape[1]), m, a_matrix=A, check=False)
        except DegenerateProjectionError:
            continue
    raise DegenerateProjectionError(
        f"{MAX_REDRAWS} random directions gave degenerate projections; rescale the data"
    )


def fit(data, config: FitConfig | None = None, **overrides) -> FitReport:
    """Fit an ``n_atoms``-atomic Thorin measure to ``data``.

    Keyword overrides are applied on top of ``config``.  The run is
    deterministic given the seed and the batch size.
    """
    config = FitConfig(**{**asdict(config or FitConfig()), **overrides})
    start = time.perf_counter()
    X, sigma = standardize(data)
    N, d = X.shape
    init_seq, dir_seq = np.random.SeedSequence(config.seed).spawn(2)
    dir_rng = np.random.default_rng(dir_seq)
    params = init_params(config.n_atoms, d, np.random.default_rng(init_seq))
    n = config.n_atoms
    A = build_a_matrix(config.m)

    theta = np.concatenate([params.p, params.q.ravel()])
    view = ConicParams(theta[:n], theta[n:].reshape(n, d))
    opt = Adam(theta.size, config.beta1, config.beta2, config.adam_eps)
    lr = config.lr

    trace: list[float] = []
    loss_ema = None
    gnorm_ema = None
    rollbacks = 0
    termination = "max_iters"
    t = 0
    s = config.smoothing
    while t < config.max_iters:
        # batch members are reduced in draw order, so batching stays deterministic
        contexts = [_direction_context(X, config.m, A, dir_rng) for _ in range(config.batch_size)]
        try:
            results = [loss_and_gradient(ctx, view, config.lam) for ctx in contexts]
        except NumericError as exc:
            rollbacks, lr = _rollback(rollbacks, lr, t, exc)
            t += 1
            continue
        if len(results) == 1:
            value = results[0].value
            grad = np.concatenate([results[0].grad_p, results[0].grad_q.ravel()])
        else:
            value = sum(r.value for r in results) / len(results)
            grad = np.concatenate([np.mean([r.grad_p for r in results], axis=0), np.mean([r.grad_q for r in results], axis=0).ravel()])

        backup = theta.copy(), opt.state()
        step = lr if config.decay_offset is None else lr * np.sqrt(config.decay_offset / (config.decay_offset + t))
        opt.step(theta, grad, step)
        if not np.all(np.isfinite(theta)):
            theta[:] = backup[0]
            opt.restore(backup[1])
            rollbacks, lr = _rollback(rollbacks, lr, t, NumericError("non-finite parameters"))
            t += 1
            continue

        gnorm = float(np.sqrt(grad @ grad))
        loss_ema = value if loss_ema is None else s * loss_ema + (1 - s) * value
        gnorm_ema = gnorm if gnorm_ema is None else s * gnorm_ema + (1 - s) * gnorm
        t += 1
        if t % config.trace_every == 0:
            trace.append(loss_ema)
        if gnorm_ema < config.tol:
            termination = "converged"
            break

    raw = conic_to_measure(view)
    final = threshold(raw.rescale(sigma), config.eps_weight, config.eps_scale)
    final = ThorinMeasure(final.alpha, final.scales, {"seed": config.seed, "n_start": n, "m": config.m})
    wall = time.perf_counter() - start
    logger.info("fit: %d iterations (%s), %d atoms kept, %.2fs", t, termination, final.n, wall)
    return FitReport(
        measure=final,
        loss_trace=trace,
        iterations=t,
        termination=termination,
        seed=config.seed,
        config=asdict(config),
        wall_time=wall,
        sigma=sigma,
        rollbacks=rollbacks,
        raw_measure=raw.rescale(sigma),
    )


def _rollback(rollbacks: int, lr: float, t: int, exc: Exception) -> tuple[int, float]:
    rollbacks += 1
    if rollbacks > MAX_ROLLBACKS:
        raise NumericError(f"iteration {t}: {exc}; giving up after {MAX_ROLLBACKS} rollbacks") from exc
    logger.warning("iteration %d: %s; rolling back and halving the step", t, exc)
    return rollbacks, lr / 2.0

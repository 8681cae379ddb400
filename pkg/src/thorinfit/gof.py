"""Resampled Kolmogorov-Smirnov and Cramer-von Mises tests in several dimensions.

Multivariate KS/CvM statistics are not distribution free, so their null
distribution is approximated by simulation: draw many pairs of samples from
the reference distribution and record the statistics.  A candidate model is
then scored by the fraction of benchmark statistics at least as large as the
one observed between a truth sample and a model sample.

Every statistic compares two ``(N, d)`` samples at the points of the first,
which costs ``O(N^2 d)``.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

Sampler = Callable[[int, np.random.Generator], np.ndarray]

MAX_PAIRS = 10**8
MAX_DIM = 6
_CHUNK = 2**22


class CostGuardError(RuntimeError):
    """The requested sample size or dimension exceeds the configured guard."""


class ShapeError(ValueError):
    pass


def _as_points(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    return a


def ecdf_at(dataset, points) -> np.ndarray:
    """Empirical CDF of ``dataset`` evaluated at each row of ``points``."""
    D = _as_points(dataset)
    P = _as_points(points)
    if D.shape[1] != P.shape[1]:
        raise ShapeError(f"dataset of dimension {D.shape[1]}, points of dimension {P.shape[1]}")
    N = len(D)
    if N == 0:
        raise ShapeError("empty dataset")
    if D.shape[1] == 1:
        return np.searchsorted(np.sort(D[:, 0]), P[:, 0], side="right") / N
    out = np.empty(len(P))
    step = max(1, _CHUNK // (N * D.shape[1]))
    for lo in range(0, len(P), step):
        block = P[lo : lo + step]
        out[lo : lo + step] = np.all(D[None, :, :] <= block[:, None, :], axis=2).sum(axis=1)
    return out / N


def empirical_cdf(dataset, x) -> float:
    """``(1/N) #{rows <= x componentwise}`` for a single point ``x``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(ecdf_at(dataset, x[None, :])[0])


def two_sample_statistics(D1, D2) -> tuple[float, float]:
    """KS and CvM statistics between two samples, evaluated at the points of ``D1``."""
    D1, D2 = _as_points(D1), _as_points(D2)
    gap = ecdf_at(D1, D1) - ecdf_at(D2, D1)
    return float(np.max(np.abs(gap))), float(np.mean(gap * gap))


def _guard(N: int, d: int, force: bool) -> None:
    if force:
        return
    if N * N > MAX_PAIRS:
        raise CostGuardError(f"N = {N} needs N^2 = {N * N:.3g} comparisons per statistic (limit {MAX_PAIRS:.0e}); pass force=True (--force)")
    if d > MAX_DIM:
        raise CostGuardError(f"dimension {d} exceeds {MAX_DIM}; resampled tests are meant for low dimensions")


def _draw(sampler: Sampler, N: int, rng) -> np.ndarray:
    out = _as_points(sampler(N, rng))
    if out.shape[0] != N:
        raise ShapeError(f"sampler returned {out.shape[0]} rows, {N} requested")
    return out


@dataclass
class StatBenchmark:
    ks: np.ndarray
    cvm: np.ndarray
    N: int
    d: int
    seed: int

    @property
    def M(self) -> int:
        return len(self.ks)

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "d": self.d,
            "seed": self.seed,
            "M": self.M,
            "ks": self.ks.tolist(),
            "cvm": self.cvm.tolist(),
        }


def benchmark(sampler: Sampler, M: int, N: int, seed: int = 0, force: bool = False, threads: int = 1) -> StatBenchmark:
    """Approximate the null distribution of both statistics from ``M`` sample pairs.

    Repetition ``i`` uses its own seeded stream, so the result does not
    depend on ``threads``.
    """
    if M < 1 or N < 1:
        raise ValueError("M and N must be positive")
    streams = np.random.SeedSequence(seed).spawn(M)
    probe = _draw(sampler, 1, np.random.default_rng(streams[0]))
    _guard(N, probe.shape[1], force)

    def one(ss):
        rng = np.random.default_rng(ss)
        D1 = _draw(sampler, N, rng)
        D2 = _draw(sampler, N, rng)
        return two_sample_statistics(D1, D2)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            stats = list(pool.map(one, streams))
    else:
        stats = [one(ss) for ss in streams]
    arr = np.array(stats)
    return StatBenchmark(ks=arr[:, 0], cvm=arr[:, 1], N=N, d=probe.shape[1], seed=seed)


def p_values_from_statistics(bench: StatBenchmark, ks: float, cvm: float) -> tuple[float, float]:
    """Fractions of benchmark statistics ``>=`` the observed ones."""
    return float(np.mean(bench.ks >= ks)), float(np.mean(bench.cvm >= cvm))


def p_values(truth_sampler: Sampler, model_sampler: Sampler, bench: StatBenchmark, N: int, seed: int = 0) -> tuple[float, float]:
    """Approximate KS and CvM p-values of ``model_sampler`` against ``truth_sampler``."""
    if N != bench.N:
        raise ShapeError(f"benchmark built with N = {bench.N}, got N = {N}")
    rng = np.random.default_rng(seed)
    D1 = _draw(truth_sampler, N, rng)
    D2 = _draw(model_sampler, N, rng)
    if D1.shape[1] != bench.d or D2.shape[1] != bench.d:
        raise ShapeError(f"benchmark dimension {bench.d}, samples of dimension {D1.shape[1]} and {D2.shape[1]}")
    return p_values_from_statistics(bench, *two_sample_statistics(D1, D2))


def resampled_p_values(truth_sampler: Sampler, model_sampler: Sampler, bench: StatBenchmark, repeats: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """``repeats`` independent draws of both p-values against a fixed benchmark."""
    streams = np.random.SeedSequence(seed).spawn(repeats)
    out = np.array([p_values(truth_sampler, model_sampler, bench, bench.N, seed=ss) for ss in streams])
    return out[:, 0], out[:, 1]


def uniform_sup_distance(pvals) -> float:
    """Sup distance between the empirical CDF of ``pvals`` and the uniform CDF."""
    p = np.sort(np.asarray(pvals, dtype=float))
    n = len(p)
    upper = np.arange(1, n + 1) / n - p
    lower = p - np.arange(n) / n
    return float(max(upper.max(), lower.max()))


@dataclass
class GofReport:
    bench: StatBenchmark
    ks_p: np.ndarray
    cvm_p: np.ndarray
    bins: int = 10

    def histogram(self, pvals) -> list[int]:
        counts, _ = np.histogram(pvals, bins=self.bins, range=(0.0, 1.0))
        return counts.tolist()

    def to_dict(self) -> dict:
        return {
            "benchmark": self.bench.to_dict(),
            "ks_p": self.ks_p.tolist(),
            "cvm_p": self.cvm_p.tolist(),
            "bins": self.bins,
            "ks_hist": self.histogram(self.ks_p),
            "cvm_hist": self.histogram(self.cvm_p),
            "ks_reject_rate": float(np.mean(self.ks_p < 0.05)),
            "cvm_reject_rate": float(np.mean(self.cvm_p < 0.05)),
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n", encoding="utf-8")


def run_gof(truth_sampler: Sampler, model_sampler: Sampler, N: int, M: int, repeats: int, seed: int = 0,
            bins: int = 10, force: bool = False, threads: int = 1) -> GofReport:
    """Benchmark the truth, then resample p-values of the model ``repeats`` times."""
    bench_seed, p_seed = np.random.SeedSequence(seed).generate_state(2)
    bench = benchmark(truth_sampler, M, N, seed=int(bench_seed), force=force, threads=threads)
    ks_p, cvm_p = resampled_p_values(truth_sampler, model_sampler, bench, repeats, seed=int(p_seed))
    return GofReport(bench, ks_p, cvm_p, bins)


def projected_quantiles(data, model_samples, dirs, levels) -> tuple[np.ndarray, np.ndarray]:
    """Quantiles of ``<c, X>`` for data and model, one row per direction in ``dirs``."""
    data, model_samples = _as_points(data), _as_points(model_samples)
    dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
    if not (data.shape[1] == model_samples.shape[1] == dirs.shape[1]):
        raise ShapeError(
            f"data of dimension {data.shape[1]}, model of dimension {model_samples.shape[1]}, directions of dimension {dirs.shape[1]}"
        )
    levels = np.asarray(levels, dtype=float)
    qd = np.quantile(data @ dirs.T, levels, axis=0).T
    qm = np.quantile(model_samples @ dirs.T, levels, axis=0).T
    return qd, qm


def median_relative_quantile_error(qd, qm) -> float:
    """Median of ``|qm - qd| / qd`` over all directions and levels."""
    qd, qm = np.asarray(qd, dtype=float), np.asarray(qm, dtype=float)
    return float(np.median(np.abs(qm - qd) / qd))

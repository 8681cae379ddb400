"""Seeded simulators for the synthetic experiments, and CSV input/output."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


class DataFormatError(ValueError):
    """A CSV file is ragged, non-numeric, negative or empty."""


def simulate_functional(N: int, seed=None) -> np.ndarray:
    """Four positive columns built from lognormal ``Y`` and uniform ``U``.

    Rows are ``(Y1, Y2 + U1 Y1^2, Y3 + U3 Y1, Y4 + Y1^(1 + U3/3))``.  ``U2``
    is drawn (so the random stream matches the three-uniform layout) but not
    used, and ``U3`` enters twice.
    """
    if N < 1:
        raise ValueError("N must be positive")
    rng = np.random.default_rng(seed)
    U = rng.random((N, 3))
    Y = np.exp(rng.standard_normal((N, 4)))
    u1, u3 = U[:, 0], U[:, 2]
    y1 = Y[:, 0]
    return np.column_stack([
        y1,
        Y[:, 1] + u1 * y1**2,
        Y[:, 2] + u3 * y1,
        Y[:, 3] + y1 ** (1.0 + u3 / 3.0),
    ])


def multiplicative_exponents(d: int, seed=None) -> np.ndarray:
    """The per-column exponents ``alpha ~ U(0, 1)`` that :func:`simulate_multiplicative` uses for ``seed``."""
    alpha_seq, _ = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(alpha_seq).random(d)


def sample_multiplicative(N: int, alpha, rng=None) -> np.ndarray:
    """``X_i = G exp(Z_i) H^(1 + 2 alpha_i)`` with shared ``G ~ Gamma(1, 1)`` and ``H ~ Gamma(2, scale 1/2)``."""
    rng = np.random.default_rng(rng)
    alpha = np.asarray(alpha, dtype=float)
    G = rng.standard_gamma(1.0, size=N)
    H = 0.5 * rng.standard_gamma(2.0, size=N)
    Z = rng.standard_normal((N, len(alpha)))
    return (G[:, None] * np.exp(Z)) * H[:, None] ** (1.0 + 2.0 * alpha)[None, :]


def simulate_multiplicative(N: int, d: int, seed=None) -> tuple[np.ndarray, np.ndarray]:
    """Strongly dependent ``d``-variate data with two shared Gamma factors.

    Returns ``(X, alpha)``; ``alpha`` is drawn once per dataset from its own
    substream, so it depends on ``seed`` and ``d`` only.
    """
    if N < 1 or d < 1:
        raise ValueError("N and d must be positive")
    _, row_seq = np.random.SeedSequence(seed).spawn(2)
    alpha = multiplicative_exponents(d, seed)
    return sample_multiplicative(N, alpha, np.random.default_rng(row_seq)), alpha


def functional_sampler(n: int, rng) -> np.ndarray:
    """Sampler form of :func:`simulate_functional` for the goodness-of-fit tests."""
    return simulate_functional(n, rng)


def multiplicative_sampler(alpha):
    """Sampler with the exponents held fixed."""
    alpha = np.asarray(alpha, dtype=float)

    def draw(n: int, rng) -> np.ndarray:
        return sample_multiplicative(n, alpha, rng)

    return draw


def load_csv(path, has_header: bool = False) -> np.ndarray:
    """Read a rectangular, numeric, nonnegative CSV file into an ``(N, d)`` array."""
    path = Path(path)
    rows: list[list[float]] = []
    width = None
    with path.open(newline="", encoding="utf-8") as fh:
        for lineno, record in enumerate(csv.reader(fh), start=1):
            if lineno == 1 and has_header:
                continue
            if not record or all(not cell.strip() for cell in record):
                continue
            if width is None:
                width = len(record)
            elif len(record) != width:
                raise DataFormatError(f"{path}:{lineno}: {len(record)} fields, expected {width}")
            row = []
            for col, cell in enumerate(record, start=1):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataFormatError(f"{path}:{lineno}: column {col}: not a number: {cell.strip()!r}") from None
                if not np.isfinite(v):
                    raise DataFormatError(f"{path}:{lineno}: column {col}: non-finite value")
                if v < 0:
                    raise DataFormatError(f"{path}:{lineno}: column {col}: negative value {v:g}")
                row.append(v)
            rows.append(row)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return np.array(rows)


def save_csv(path, data, header: list[str] | None = None) -> None:
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if header is not None:
            w.writerow(header)
        w.writerows([repr(float(v)) for v in row] for row in data)

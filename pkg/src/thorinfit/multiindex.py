"""Increasing multi-index sets ``I_m = {k in N^d : |k| <= m}``.

Indices are ordered by total degree, ties broken lexicographically, so that
every ``j <= k`` (componentwise) appears before ``k``.  The recursions in
:mod:`thorinfit.cumulants` rely on that order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import comb

import numpy as np

INT64_MAX = 2**63 - 1
MAX_ENUMERATED = 5_000_000


class InvalidDimensionError(ValueError):
    """Raised for a dimension ``d < 1`` or a negative precision."""


def _check(m: int, d: int) -> None:
    if int(d) != d or d < 1:
        raise InvalidDimensionError(f"dimension must be a positive integer, got {d!r}")
    if int(m) != m or m < 0:
        raise InvalidDimensionError(f"precision must be a nonnegative integer, got {m!r}")


def count_coefficients(m: int, d: int) -> int:
    """Number ``D(m, d)`` of multi-indices of total degree at most ``m``.

    Exact integer arithmetic; results that do not fit a signed 64-bit
    integer raise :class:`OverflowError`.

    >>> count_coefficients(10, 3)
    286
    """
    _check(m, d)
    total = sum(comb(i + d - 1, d - 1) for i in range(m + 1))
    if total > INT64_MAX:
        raise OverflowError(f"D({m}, {d}) = {total} exceeds the int64 range")
    return total


def _compositions(total: int, parts: int):
    # lexicographically increasing tuples of `parts` nonnegative ints summing to `total`
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first, *rest)


@dataclass(frozen=True)
class IndexSet:
    """Ordered increasing index set ``I_m`` in dimension ``d``."""

    m: int
    d: int
    indices: tuple[tuple[int, ...], ...] = field(repr=False)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __getitem__(self, i):
        return self.indices[i]

    @cached_property
    def array(self) -> np.ndarray:
        """Indices as an ``(D, d)`` integer array."""
        return np.array(self.indices, dtype=np.int64).reshape(len(self), self.d)

    @cached_property
    def degrees(self) -> np.ndarray:
        return self.array.sum(axis=1)

    @cached_property
    def position(self) -> dict[tuple[int, ...], int]:
        return {k: i for i, k in enumerate(self.indices)}

    def predecessor(self, k: tuple[int, ...]) -> tuple[int, ...]:
        """``k - e_{i0}`` with ``i0`` the first nonzero coordinate of ``k``."""
        i0 = next(i for i, v in enumerate(k) if v)
        return k[:i0] + (k[i0] - 1,) + k[i0 + 1 :]


def enumerate_index_set(m: int, d: int) -> IndexSet:
    """Build ``I_m`` in (total degree, lexicographic) order."""
    size = count_coefficients(m, d)
    if size > MAX_ENUMERATED:
        raise MemoryError(f"refusing to enumerate D({m}, {d}) = {size} indices")
    indices = tuple(k for deg in range(m + 1) for k in _compositions(deg, d))
    return IndexSet(m=m, d=d, indices=indices)

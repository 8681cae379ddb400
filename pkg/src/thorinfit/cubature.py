"""Recovering multivariate moments from univariate projections.

For directions ``c_1..c_D`` with ``D = D(m, d)``, the matrix

    P[i, k] = m! / (k! (m - |k|)!) * c_i^k,    |k| <= m

maps the raw moments of a measure to ``int (1 + <c_i, x>)^m nu(dx)``.  When
``P`` is invertible, the moments over ``I_m`` are determined by projected
moments; i.i.d. uniform directions make it invertible almost surely.  The
same module checks the hypothesis ``H_1`` (every ``d`` directions form a
basis) and the resulting atom-wise distance bound between two measures that
agree on all projections.

Nothing here is on the fitting path; it makes the projection theory
executable for diagnostics and tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb, factorial

import numpy as np

from .multiindex import count_coefficients, enumerate_index_set
from .thorin import ThorinMeasure

COND_CAP = 1e12


class ConditioningError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class DirectionSet:
    """``D(m, d)`` directions in the unit cube, one per row."""

    dirs: np.ndarray
    m: int

    def __post_init__(self):
        dirs = np.array(self.dirs, dtype=float)
        if dirs.ndim != 2:
            raise ValueError("directions must be a 2-d array")
        expected = count_coefficients(self.m, dirs.shape[1])
        if dirs.shape[0] != expected:
            raise ValueError(f"{dirs.shape[0]} directions, D({self.m}, {dirs.shape[1]}) = {expected} needed")
        if np.any(dirs < 0) or np.any(dirs > 1):
            raise ValueError("directions must lie in [0, 1]^d")
        object.__setattr__(self, "dirs", dirs)

    @property
    def d(self) -> int:
        return self.dirs.shape[1]

    @classmethod
    def random(cls, m: int, d: int, rng=None) -> "DirectionSet":
        rng = np.random.default_rng(rng)
        return cls(rng.random((count_coefficients(m, d), d)), m)


def _multinomials(m: int, K: np.ndarray) -> np.ndarray:
    # m! / (k! (m - |k|)!)
    out = np.empty(len(K))
    for i, k in enumerate(K):
        denom = factorial(m - int(k.sum()))
        for v in k:
            denom *= factorial(int(v))
        out[i] = factorial(m) // denom
    return out


def _monomials(dirs: np.ndarray, K: np.ndarray) -> np.ndarray:
    V = np.ones((len(dirs), len(K)))
    for j in range(dirs.shape[1]):
        V *= dirs[:, j][:, None] ** K[:, j][None, :]
    return V


def build_p_matrix(dirs, m: int | None = None) -> np.ndarray:
    """Square matrix ``P`` over ``I_m``, columns in index-set order.

    ``dirs`` is a :class:`DirectionSet` or an array of directions (for which
    ``m`` is required); plain arrays are not restricted to the unit cube.
    """
    if isinstance(dirs, DirectionSet):
        m, dirs = dirs.m, dirs.dirs
    dirs = np.asarray(dirs, dtype=float)
    K = enumerate_index_set(m, dirs.shape[1]).array
    return _monomials(dirs, K) * _multinomials(m, K)[None, :]


def measure_moments(measure: ThorinMeasure, m: int) -> np.ndarray:
    """Raw moments ``sum_i alpha_i s_i^k`` over ``I_m``."""
    K = enumerate_index_set(m, measure.d).array
    return measure.alpha @ _monomials(measure.scales, K)


def projected_moments(measure: ThorinMeasure, dirs, m: int) -> np.ndarray:
    """Raw moments ``sum_i alpha_i <c, s_i>^j`` for each direction, shape ``(n_dirs, m + 1)``."""
    if isinstance(dirs, DirectionSet):
        dirs = dirs.dirs
    u = measure.scales @ np.asarray(dirs, dtype=float).T  # (n_atoms, n_dirs)
    return np.stack([measure.alpha @ u**j for j in range(m + 1)], axis=1)


def reconstruct_moments(dirs: DirectionSet, projected, cond_cap: float = COND_CAP) -> np.ndarray:
    """Multivariate raw moments over ``I_m`` from projected raw moments.

    ``projected[i, j]`` is the ``j``-th raw moment of the measure projected on
    direction ``i``.  Each degree ``j`` is solved separately from
    ``proj_j(c) = sum_{|k| = j} j! / k! c^k nu^(k)`` (least squares over all
    directions, exact for consistent inputs).
    """
    P = build_p_matrix(dirs)
    cond = np.linalg.cond(P)
    if not cond < cond_cap:
        raise ConditioningError(f"cond(P) = {cond:.3g} exceeds {cond_cap:.0e}; redraw the directions")
    projected = np.asarray(projected, dtype=float)
    m = dirs.m
    if projected.shape != (len(dirs.dirs), m + 1):
        raise ValueError(f"projected moments of shape {projected.shape}, expected {(len(dirs.dirs), m + 1)}")
    iset = enumerate_index_set(m, dirs.d)
    K = iset.array
    out = np.empty(len(iset))
    for j in range(m + 1):
        cols = np.flatnonzero(iset.degrees == j)
        H = _monomials(dirs.dirs, K[cols]) * _multinomials(j, K[cols])[None, :]
        out[cols] = np.linalg.lstsq(H, projected[:, j], rcond=None)[0]
    return out


def reconstruct_moments_single(dirs: DirectionSet, projected) -> np.ndarray:
    """Same reconstruction through the single square system ``P nu = sum_j C(m, j) proj_j``."""
    projected = np.asarray(projected, dtype=float)
    m = dirs.m
    rhs = projected @ np.array([comb(m, j) for j in range(m + 1)], dtype=float)
    return np.linalg.solve(build_p_matrix(dirs), rhs)


@dataclass
class HypothesisCheck:
    holds: bool
    checked: int
    total: int

    @property
    def coverage(self) -> float:
        return self.checked / self.total if self.total else 1.0

    def __bool__(self) -> bool:
        return self.holds


def check_hypothesis_h(dirs, k: int = 1, tol: float = 1e-10, max_exhaustive: int = 100_000, rng=None) -> HypothesisCheck:
    """Whether every ``d`` of the direction vectors are linearly independent.

    Exhaustive up to ``max_exhaustive`` subsets; beyond that a random sample
    of that many subsets is inspected and ``coverage`` reports the fraction.
    """
    if k != 1:
        raise NotImplementedError("only univariate projections (k = 1) are supported")
    if isinstance(dirs, DirectionSet):
        dirs = dirs.dirs
    dirs = np.asarray(dirs, dtype=float)
    n, d = dirs.shape
    if n < d:
        return HypothesisCheck(True, 0, 0)
    norms = np.linalg.norm(dirs, axis=1, keepdims=True)
    if np.any(norms == 0):
        return HypothesisCheck(False, 0, comb(n, d))
    U = dirs / norms
    total = comb(n, d)
    if total <= max_exhaustive:
        subsets = np.array(list(combinations(range(n), d)), dtype=np.intp)
    else:
        rng = np.random.default_rng(rng)
        subsets = np.array([np.sort(rng.choice(n, d, replace=False)) for _ in range(max_exhaustive)])
    dets = np.abs(np.linalg.det(U[subsets]))
    return HypothesisCheck(bool(np.all(dets > tol)), len(subsets), total)


@dataclass
class DistanceBound:
    bound: float
    max_observed: float
    premises_hold: bool
    reason: str = ""

    @property
    def holds(self) -> bool:
        return self.max_observed <= self.bound * (1 + 1e-12)


def _point_masses(atoms: np.ndarray, weights: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    # merge atoms closer than tol
    pts: list[np.ndarray] = []
    mass: list[float] = []
    for a, w in zip(atoms, weights):
        for i, p in enumerate(pts):
            if np.max(np.abs(p - a)) <= tol:
                mass[i] += w
                break
        else:
            pts.append(np.array(a, dtype=float))
            mass.append(float(w))
    return np.array(pts).reshape(len(pts), atoms.shape[1]), np.array(mass)


def _projections_agree(nu1: ThorinMeasure, nu2: ThorinMeasure, c: np.ndarray, tol: float) -> bool:
    x1, w1 = _point_masses((nu1.scales @ c)[:, None], nu1.alpha, tol)
    x2, w2 = _point_masses((nu2.scales @ c)[:, None], nu2.alpha, tol)
    pts, _ = _point_masses(np.vstack([x1, x2]), np.zeros(len(x1) + len(x2)), tol)
    for p in pts:
        a = w1[np.abs(x1[:, 0] - p[0]) <= tol].sum()
        b = w2[np.abs(x2[:, 0] - p[0]) <= tol].sum()
        if abs(a - b) > tol * max(1.0, abs(a), abs(b)):
            return False
    return True


def atom_distance_bound(nu1: ThorinMeasure, nu2: ThorinMeasure, dirs, k: int = 1, tol: float = 1e-9) -> DistanceBound:
    """Bound ``(d - k) / n * max(|nu1|, |nu2|)`` on the atom-wise difference of two measures.

    The bound is valid when every projection agrees and ``H_k`` holds; when a
    premise fails the result says so instead of raising.
    """
    if k != 1:
        raise NotImplementedError("only univariate projections (k = 1) are supported")
    if isinstance(dirs, DirectionSet):
        dirs = dirs.dirs
    dirs = np.asarray(dirs, dtype=float)
    n_dirs, d = dirs.shape
    bound = (d - k) / n_dirs * max(nu1.mass, nu2.mass)

    atoms = np.vstack([nu1.scales, nu2.scales])
    pts, _ = _point_masses(atoms, np.zeros(len(atoms)), tol)
    diffs = [
        abs(
            nu1.alpha[np.max(np.abs(nu1.scales - p), axis=1) <= tol].sum()
            - nu2.alpha[np.max(np.abs(nu2.scales - p), axis=1) <= tol].sum()
        )
        for p in pts
    ]
    max_observed = float(max(diffs, default=0.0))

    reasons = []
    if not check_hypothesis_h(dirs, k):
        reasons.append("hypothesis H_1 fails")
    bad = [i for i, c in enumerate(dirs) if not _projections_agree(nu1, nu2, c, tol)]
    if bad:
        reasons.append(f"projections differ along directions {bad}")
    return DistanceBound(bound, max_observed, not reasons, "; ".join(reasons))

"""Finitely atomic Thorin measures and the Gamma convolutions they define.

A measure ``nu = sum_i alpha_i delta_{s_i}`` on ``R_+^d`` defines the random
vector ``X = sum_i s_i G_i`` with independent ``G_i ~ Gamma(alpha_i, 1)``.
Its Thorin moments are linear in ``nu``; for one atom,
``tau_0 = -log(1 + |s|)`` and ``tau_k = (s / (1 + |s|))^k``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from pathlib import Path

import numpy as np

from .laguerre import DomainError
from .multiindex import IndexSet


class MeasureFormatError(ValueError):
    """Raised when a measure document cannot be parsed."""


class EmptyMeasureWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class ThorinMeasure:
    """Atomic Thorin measure: weights ``alpha`` (n,) and atoms ``scales`` (n, d)."""

    alpha: np.ndarray
    scales: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=float).reshape(-1)
        scales = np.array(self.scales, dtype=float)
        if scales.ndim == 1:
            scales = scales.reshape(len(alpha), -1) if len(alpha) else scales.reshape(0, max(len(scales), 1))
        if scales.ndim != 2 or scales.shape[0] != alpha.shape[0]:
            raise ValueError(f"{alpha.shape[0]} weights but scales of shape {scales.shape}")
        if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(scales))):
            raise ValueError("weights and scales must be finite")
        if np.any(alpha < 0) or np.any(scales < 0):
            raise ValueError("weights and scales must be nonnegative")
        alpha.setflags(write=False)
        scales.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "scales", scales)

    @classmethod
    def empty(cls, d: int) -> "ThorinMeasure":
        return cls(np.zeros(0), np.zeros((0, d)))

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    @property
    def d(self) -> int:
        return self.scales.shape[1]

    @property
    def mass(self) -> float:
        return float(self.alpha.sum())

    def __repr__(self) -> str:
        return f"ThorinMeasure(n={self.n}, d={self.d}, mass={self.mass:.6g})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, ThorinMeasure):
            return NotImplemented
        return np.array_equal(self.alpha, other.alpha) and np.array_equal(self.scales, other.scales)

    def __add__(self, other: "ThorinMeasure") -> "ThorinMeasure":
        """Sum of measures as concatenation of atom lists."""
        if self.d != other.d:
            raise ValueError("measures live in different dimensions")
        return ThorinMeasure(np.r_[self.alpha, other.alpha], np.vstack([self.scales, other.scales]))

    def mean(self) -> np.ndarray:
        """``E X = s^T alpha``."""
        return self.scales.T @ self.alpha

    def covariance(self) -> np.ndarray:
        """``V X = s^T diag(alpha) s``."""
        return (self.scales * self.alpha[:, None]).T @ self.scales

    def rescale(self, sigma) -> "ThorinMeasure":
        """Multiply column ``j`` of the atoms by ``sigma[j]``."""
        return ThorinMeasure(self.alpha, self.scales * np.asarray(sigma, dtype=float)[None, :], dict(self.meta))

    def sorted(self) -> "ThorinMeasure":
        """Atoms by decreasing weight (stable)."""
        order = np.argsort(-self.alpha, kind="stable")
        return ThorinMeasure(self.alpha[order], self.scales[order], dict(self.meta))

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        m = self.sorted()
        return {
            "d": self.d,
            "n": self.n,
            "alpha": [float(a) for a in m.alpha],
            "scales": [[float(v) for v in row] for row in m.scales],
            "meta": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ThorinMeasure":
        try:
            d, n = int(doc["d"]), int(doc["n"])
            alpha = np.array(doc["alpha"], dtype=float).reshape(-1)
            scales = np.array(doc["scales"], dtype=float).reshape(len(alpha), d)
        except (KeyError, TypeError, ValueError) as exc:
            raise MeasureFormatError(f"malformed measure document: {exc}") from exc
        if len(alpha) != n:
            raise MeasureFormatError(f"header says n={n} but {len(alpha)} weights given")
        try:
            return cls(alpha, scales, dict(doc.get("meta", {})))
        except ValueError as exc:
            raise MeasureFormatError(str(exc)) from exc

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "ThorinMeasure":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise MeasureFormatError(f"{path}: not a JSON document ({exc})") from exc
        if not isinstance(doc, dict):
            raise MeasureFormatError(f"{path}: expected a JSON object")
        if "measure" in doc and "alpha" not in doc:
            doc = doc["measure"]  # a fit report embeds the measure
        return cls.from_dict(doc)


@dataclass
class ConicParams:
    """Unconstrained parameters ``(p, q)`` of ``sum_i p_i^2 delta_{q_i^2}``."""

    p: np.ndarray
    q: np.ndarray

    def copy(self) -> "ConicParams":
        return ConicParams(self.p.copy(), self.q.copy())

    def to_measure(self) -> ThorinMeasure:
        return conic_to_measure(self)


def conic_to_measure(params: ConicParams) -> ThorinMeasure:
    return ThorinMeasure(np.square(params.p), np.square(params.q))


def tau_univariate(alpha, u, m: int) -> np.ndarray:
    """Thorin moments ``tau_0..tau_m`` of ``sum_i alpha_i delta_{u_i}`` on ``R_+``."""
    alpha = np.asarray(alpha, dtype=float)
    u = np.asarray(u, dtype=float)
    tau = np.empty(m + 1)
    tau[0] = -alpha @ np.log1p(u)
    r = u / (1.0 + u)
    v = alpha.copy()
    for k in range(1, m + 1):
        v *= r
        tau[k] = v.sum()
    return tau


def tau_of_projected_measure(measure: ThorinMeasure, c, m: int, check: bool = True) -> np.ndarray:
    """Thorin moments of the projection of ``measure`` on direction ``c``.

    The projection of ``delta_s`` is ``delta_{<c, s>}``.  With ``check`` the
    direction must lie in the unit cube; ``check=False`` accepts any
    ``c >= 0``.
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    if c.shape[0] != measure.d:
        raise ValueError(f"direction of length {c.shape[0]} for a {measure.d}-variate measure")
    if np.any(c < 0) or (check and np.any(c > 1)):
        raise DomainError("direction must lie in [0, 1]^d")
    return tau_univariate(measure.alpha, measure.scales @ c, m)


def tau_of_measure(measure: ThorinMeasure, index_set: IndexSet) -> np.ndarray:
    """Multivariate Thorin moments ``int (s / (1 + |s|))^k nu(ds)``, ``tau_0 = -int log(1 + |s|)``."""
    s = measure.scales
    tot = s.sum(axis=1)
    x = s / (1.0 + tot)[:, None]
    K = index_set.array
    vals = np.ones((measure.n, len(index_set)))
    for j in range(measure.d):
        vals *= x[:, j][:, None] ** K[:, j][None, :]
    tau = measure.alpha @ vals
    tau[0] = -measure.alpha @ np.log1p(tot)
    return tau


def threshold(measure: ThorinMeasure, eps_weight: float = 0.0, eps_scale: float = 0.0) -> ThorinMeasure:
    """Drop atoms with weight below ``eps_weight`` and zero scale entries below ``eps_scale``."""
    keep = measure.alpha >= eps_weight
    scales = measure.scales[keep].copy()
    scales[scales < eps_scale] = 0.0
    return ThorinMeasure(measure.alpha[keep], scales, dict(measure.meta))


def sample(measure: ThorinMeasure, count: int, rng=None) -> np.ndarray:
    """Draw ``count`` rows of ``X = sum_i s_i G_i``, ``G_i ~ Gamma(alpha_i, 1)``."""
    rng = np.random.default_rng(rng)
    if measure.n == 0 or measure.mass == 0.0:
        warnings.warn("sampling from a zero measure gives the point mass at 0", EmptyMeasureWarning)
        return np.zeros((count, measure.d))
    live = measure.alpha > 0
    G = rng.standard_gamma(measure.alpha[live], size=(count, int(live.sum())))
    return G @ measure.scales[live]


@dataclass
class WellBehavedReport:
    """Outcome of :func:`check_well_behaved`; ``status`` is None when undecided."""

    status: bool | None
    mass: float
    failing_rays: tuple[int, ...] = ()
    reason: str = ""

    def __bool__(self) -> bool:
        return bool(self.status)


def _group_rays(scales: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    # returns a ray label per atom and one unit direction per ray; label -1 = the origin
    labels = np.full(len(scales), -1)
    dirs: list[np.ndarray] = []
    norms = np.linalg.norm(scales, axis=1)
    for i, (s, nrm) in enumerate(zip(scales, norms)):
        if nrm <= tol:
            continue
        u = s / nrm
        for r, v in enumerate(dirs):
            if np.linalg.norm(u - v) <= tol:
                labels[i] = r
                break
        else:
            labels[i] = len(dirs)
            dirs.append(u)
    return labels, np.array(dirs).reshape(len(dirs), scales.shape[1])


def check_well_behaved(measure: ThorinMeasure, tol: float = 1e-10, max_spans: int = 100_000) -> WellBehavedReport:
    """Check the identifiability condition on an atomic Thorin measure.

    Requires ``|nu| >= 1`` and, for every set of atoms whose rays carry more
    mass than the remaining rays, that those atoms span ``R^d``.  Since the
    majority condition is monotone, it suffices to test, for every span of at
    most ``d - 1`` rays, the largest set of rays inside that span.  Returns an
    undecided report when more than ``max_spans`` spans would be needed.
    """
    mass = measure.mass
    if mass < 1.0:
        return WellBehavedReport(False, mass, reason=f"total mass {mass:.6g} < 1")
    d = measure.d
    labels, dirs = _group_rays(measure.scales, tol)
    R = len(dirs)
    ray_mass = np.array([measure.alpha[labels == r].sum() for r in range(R)])
    origin_mass = measure.alpha[labels == -1].sum()
    n_spans = sum(comb(R, j) for j in range(min(d - 1, R) + 1))
    if n_spans > max_spans:
        return WellBehavedReport(None, mass, reason=f"{n_spans} spans to inspect, limit {max_spans}")
    for j in range(min(d - 1, R) + 1):
        for gen in combinations(range(R), j):
            if j == 0:
                inside = np.zeros(R, dtype=bool)
            else:
                basis = dirs[list(gen)]
                if np.linalg.matrix_rank(basis, tol=tol) < j:
                    continue  # covered by a smaller generating set
                Q, _ = np.linalg.qr(basis.T)
                resid = dirs - (dirs @ Q) @ Q.T
                inside = np.linalg.norm(resid, axis=1) <= np.sqrt(tol)
            # atoms at the origin sit on every ray; count them on both sides
            m_in = ray_mass[inside].sum() + origin_mass
            m_out = ray_mass[~inside].sum() + origin_mass
            if m_in > m_out:
                return WellBehavedReport(
                    False,
                    mass,
                    failing_rays=tuple(int(r) for r in np.flatnonzero(inside)),
                    reason=f"rays {np.flatnonzero(inside).tolist()} carry mass {m_in:.6g} but span less than R^{d}",
                )
    return WellBehavedReport(True, mass)

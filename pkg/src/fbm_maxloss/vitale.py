"""Numerical lower bounds on E(M_1) from Gaussian comparison families.

The discrete increments X_p = B_{i delta} - B_{(i-j) delta} of a grid over
[0, 1] have a computable pairwise distance matrix ``E[(X_p - X_q)^2]``. Any
centered Gaussian family whose pairwise distances are dominated by it has a
smaller expected maximum, and max_p X_p is itself below the maximum loss.
Two such families are optimized here:

* comonotone (one driving normal, W_p = a_p Z), whose expected maximum is
  ``(max a - min a) / sqrt(2 pi)``;
* independent (Y_p ~ N(0, sigma_p^2)), evaluated by one-dimensional quadrature.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .bounds import BoundEntry
from .core import HurstLike, HurstParameter, TimeGrid, abs_pow, as_hurst
from .errors import RegimeError, SizeError, ValidationError
from .quadrature import adaptive_simpson

__all__ = [
    "MAX_N",
    "IncrementFamily",
    "ComonotoneFamily",
    "IndependentFamily",
    "VitaleResult",
    "build_increment_family",
    "metric_closure",
    "expected_max_comonotone",
    "maximize_pddd",
    "expected_max_independent",
    "maximize_idd",
    "vitale_lower_bound",
]

log = logging.getLogger(__name__)

MAX_N = 200
SQRT_2PI = math.sqrt(2.0 * math.pi)
_INV_SQRT2 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class IncrementFamily:
    """Grid increments with their pairwise squared distances.

    Member 0 is the zero increment (all ``j = 0`` members collapsed); member
    ``(i, j)`` with ``j >= 1`` stands for ``B_{i delta} - B_{(i-j) delta}``.
    """

    grid: TimeGrid
    h: HurstParameter
    members: list[tuple[int, int]] = field(repr=False)
    variances: np.ndarray = field(repr=False)
    dist_sq: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.members)

    def scaled(self, c: float) -> "IncrementFamily":
        """Same members with all distances multiplied by ``c**2``."""
        return IncrementFamily(
            self.grid, self.h, self.members, self.variances * c**2, self.dist_sq * c**2
        )


@dataclass(frozen=True)
class ComonotoneFamily:
    coefficients: np.ndarray

    def feasibility_residual(self, family: IncrementFamily) -> float:
        a = self.coefficients
        return float(np.max((a[:, None] - a[None, :]) ** 2 - family.dist_sq))


@dataclass(frozen=True)
class IndependentFamily:
    std_devs: np.ndarray

    def feasibility_residual(self, family: IncrementFamily) -> float:
        s2 = self.std_devs**2
        excess = s2[:, None] + s2[None, :] - family.dist_sq
        np.fill_diagonal(excess, -np.inf)
        return float(np.max(excess)) if family.size > 1 else -math.inf


@dataclass(frozen=True)
class VitaleResult:
    n: int
    h: HurstParameter
    idd: IndependentFamily
    idd_bound: float
    idd_sweeps: int
    pddd: ComonotoneFamily
    pddd_bound: float
    idd_residual: float
    pddd_residual: float

    def entries(self) -> list[BoundEntry]:
        return [
            BoundEntry(f"IDD({self.n})", "lower", "E(M)", self.idd_bound, "Vitale comparison, independent"),
            BoundEntry(f"PDDD({self.n})", "lower", "E(M)", self.pddd_bound, "Vitale comparison, comonotone"),
        ]


def build_increment_family(n: int, h: HurstLike, horizon: float = 1.0) -> IncrementFamily:
    """All increments of the ``n``-step grid over [0, horizon] and their distances."""
    hp = as_hurst(h)
    if int(n) != n or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n!r}")
    if n > MAX_N:
        raise SizeError(f"n={n} exceeds the supported maximum {MAX_N}")
    grid = TimeGrid(horizon, int(n))
    d = grid.step
    a = 2.0 * hp.h
    members = [(0, 0)] + [(i, j) for i in range(1, n + 1) for j in range(1, i + 1)]
    idx = np.array(members[1:], dtype=float)
    i, j = idx[:, 0], idx[:, 1]
    end, start = i * d, (i - j) * d  # X_p = B(end) - B(start)

    var = abs_pow(j * d, a)
    e1, s1 = end[:, None], start[:, None]
    e2, s2 = end[None, :], start[None, :]
    cov = 0.5 * (abs_pow(e1 - s2, a) + abs_pow(s1 - e2, a) - abs_pow(e1 - e2, a) - abs_pow(s1 - s2, a))
    inner = var[:, None] + var[None, :] - 2.0 * cov
    inner = np.triu(inner, 1)
    inner = inner + inner.T

    m = len(members)
    dist_sq = np.zeros((m, m))
    dist_sq[1:, 1:] = inner
    dist_sq[0, 1:] = var
    dist_sq[1:, 0] = var
    return IncrementFamily(
        grid=grid, h=hp, members=members, variances=np.concatenate(([0.0], var)), dist_sq=dist_sq
    )


def metric_closure(weights: np.ndarray) -> np.ndarray:
    """All-pairs shortest path lengths (Floyd-Warshall) for a dense weight matrix."""
    dist = np.array(weights, dtype=float, copy=True)
    np.fill_diagonal(dist, 0.0)
    for k in range(dist.shape[0]):
        np.minimum(dist, dist[:, k : k + 1] + dist[k : k + 1, :], out=dist)
    return dist


def expected_max_comonotone(a, method: str = "closed") -> float:
    """E[max_p a_p Z] for a single standard normal Z.

    ``method="closed"`` uses ``(max a - min a) / sqrt(2 pi)``; ``"quadrature"``
    integrates ``h(z) phi(z)`` with ``h(z) = max_p a_p z`` directly.
    """
    a = np.asarray(a, dtype=float)
    if a.size == 0 or not np.isfinite(a).all():
        raise ValidationError("coefficients must be a non-empty finite vector")
    if method == "closed":
        return float((a.max() - a.min()) / SQRT_2PI)
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")

    def integrand(z):
        return np.max(np.outer(z, a), axis=1) * np.exp(-0.5 * z * z) / SQRT_2PI

    return adaptive_simpson(integrand, -10.0, 0.0, 1e-11) + adaptive_simpson(integrand, 0.0, 10.0, 1e-11)


def maximize_pddd(family: IncrementFamily) -> tuple[ComonotoneFamily, float]:
    """Best comonotone lower bound: diameter of the shortest-path metric / sqrt(2 pi)."""
    closure = metric_closure(np.sqrt(np.maximum(family.dist_sq, 0.0)))
    p, q = np.unravel_index(np.argmax(closure), closure.shape)
    a = closure[p] - closure[p, 0]  # member 0 (zero increment) sits at 0
    diameter = float(closure[p, q])
    return ComonotoneFamily(coefficients=a), diameter / SQRT_2PI


def _normal_cdf(x):
    return 0.5 * erfc(-x * _INV_SQRT2)


def expected_max_independent(sigma, tol: float = 1e-8) -> float:
    """E[max_p Y_p] for independent Y_p ~ N(0, sigma_p^2).

    Evaluates ``int_0^inf (1 - prod P(Y <= y) - prod P(Y <= -y)) dy`` on
    [0, 8 max sigma]. Degenerate members contribute step functions, taken
    right-continuous at the origin.
    """
    s = np.asarray(sigma, dtype=float).ravel()
    if s.size == 0 or np.any(s < 0) or not np.isfinite(s).all():
        raise ValidationError("std devs must be a non-empty vector of finite non-negative values")
    pos = s[s > 0]
    if pos.size == 0:
        return 0.0
    has_zero = pos.size < s.size

    def integrand(y):
        with np.errstate(over="ignore"):  # y / tiny sigma -> inf, CDF -> 1
            x = y[:, None] / pos[None, :]
        upper = np.prod(_normal_cdf(x), axis=1)
        lower = 0.0 if has_zero else np.prod(_normal_cdf(-x), axis=1)
        return 1.0 - upper - lower

    return adaptive_simpson(integrand, 0.0, 8.0 * float(pos.max()), tol)


def maximize_idd(
    family: IncrementFamily, max_sweeps: int = 100, rel_tol: float = 1e-9
) -> tuple[IndependentFamily, float, int]:
    """Coordinate ascent over ``{sigma >= 0 : sigma_p^2 + sigma_q^2 <= dist_sq(p, q)}``.

    Returns the family, its expected maximum and the number of sweeps. The
    objective is nondecreasing in every coordinate, so each coordinate is
    raised to its largest feasible value. The zero member stays at 0.
    """
    m = family.size
    if m == 1:
        return IndependentFamily(np.zeros(1)), 0.0, 0
    d = family.dist_sq.copy()
    np.fill_diagonal(d, np.inf)
    s2 = 0.5 * d.min(axis=1)
    s2[0] = 0.0
    objective = expected_max_independent(np.sqrt(s2))
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        for p in range(1, m):
            cand = float(np.min(d[p] - s2))
            if cand > s2[p]:
                s2[p] = cand
        new = expected_max_independent(np.sqrt(s2))
        change = abs(new - objective) / max(abs(new), 1e-300)
        objective = new
        if change < rel_tol:
            break
    log.debug("IDD n=%d H=%g: %.6g after %d sweeps", family.grid.n_steps, family.h.h, objective, sweeps)
    return IndependentFamily(std_devs=np.sqrt(s2)), objective, sweeps


def vitale_lower_bound(n: int, h: HurstLike) -> VitaleResult:
    """Both comparison lower bounds on E(M_1) from the ``n``-step discretization."""
    hp = as_hurst(h)
    if not hp.in_long_memory_regime():
        raise RegimeError(f"comparison bounds are computed for 1/2 <= H < 1, got H={hp.h}")
    family = build_increment_family(n, hp)
    idd, idd_bound, sweeps = maximize_idd(family)
    pddd, pddd_bound = maximize_pddd(family)
    return VitaleResult(
        n=int(n),
        h=hp,
        idd=idd,
        idd_bound=idd_bound,
        idd_sweeps=sweeps,
        pddd=pddd,
        pddd_bound=pddd_bound,
        idd_residual=idd.feasibility_residual(family),
        pddd_residual=pddd.feasibility_residual(family),
    )

"""Closed-form fractional Brownian motion quantities.

Covariance of the process, autocovariance of equally spaced increments,
self-similarity rescaling and the geometric (Black-Scholes style) transform.
All functions are pure and work in double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import DomainError, ValidationError

__all__ = [
    "HurstParameter",
    "TimeGrid",
    "FbmPath",
    "abs_pow",
    "covariance",
    "increment_autocovariance",
    "long_range_ratio",
    "rescale_expected_max_loss",
    "asset_price_transform",
]


@dataclass(frozen=True)
class HurstParameter:
    """Hurst exponent ``h`` in the open interval (0, 1)."""

    h: float

    def __post_init__(self):
        h = float(self.h)
        if not (0.0 < h < 1.0) or math.isnan(h):
            raise DomainError(f"Hurst parameter must lie in (0, 1), got {self.h!r}")
        object.__setattr__(self, "h", h)

    def in_long_memory_regime(self) -> bool:
        """True for 1/2 <= h < 1, the long-memory range the bounds address."""
        return 0.5 <= self.h < 1.0

    def __float__(self) -> float:
        return self.h


HurstLike = Union[HurstParameter, float]


def as_hurst(h: HurstLike) -> HurstParameter:
    return h if isinstance(h, HurstParameter) else HurstParameter(h)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid 0, delta, ..., n_steps * delta = horizon."""

    horizon: float
    n_steps: int

    def __post_init__(self):
        if not (self.horizon > 0) or not math.isfinite(self.horizon):
            raise DomainError(f"horizon must be positive, got {self.horizon!r}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise DomainError(f"n_steps must be a positive integer, got {self.n_steps!r}")
        object.__setattr__(self, "horizon", float(self.horizon))
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @property
    def step(self) -> float:
        return self.horizon / self.n_steps

    def points(self) -> np.ndarray:
        """All ``n_steps + 1`` grid points; the last one equals ``horizon`` exactly."""
        return self.horizon * (np.arange(self.n_steps + 1) / self.n_steps)


@dataclass(frozen=True)
class FbmPath:
    """Values of a path on ``grid``; ``values[0]`` is the starting point 0."""

    grid: TimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size != self.grid.n_steps + 1:
            raise ValidationError(
                f"path needs {self.grid.n_steps + 1} values, got shape {values.shape}"
            )
        if values[0] != 0.0:
            raise ValidationError("path must start at 0")
        object.__setattr__(self, "values", values)


def abs_pow(x, two_h: float):
    """``|x| ** two_h`` evaluated as ``exp(two_h * log|x|)`` with an explicit zero branch.

    Only an exact zero maps to 0: for small H, ``|x| ** 2H`` is far from 0
    even at tiny ``|x|``, so no magnitude cut-off is safe.
    """
    ax = np.abs(np.asarray(x, dtype=float))
    zero = ax == 0.0
    with np.errstate(divide="ignore"):
        out = np.exp(two_h * np.log(np.where(zero, 1.0, ax)))
    out = np.where(zero, 0.0, out)
    return out if out.ndim else float(out)


def covariance(s, t, h: HurstLike):
    """E[B_s B_t] = (t^{2H} + s^{2H} - |t - s|^{2H}) / 2.

    Accepts scalars or broadcastable arrays of non-negative times.
    """
    two_h = 2.0 * as_hurst(h).h
    s_arr = np.asarray(s, dtype=float)
    t_arr = np.asarray(t, dtype=float)
    if np.any(s_arr < 0) or np.any(t_arr < 0):
        raise DomainError("times must be non-negative")
    out = 0.5 * (abs_pow(t_arr, two_h) + abs_pow(s_arr, two_h) - abs_pow(t_arr - s_arr, two_h))
    return out if np.ndim(out) else float(out)


def increment_autocovariance(n_lag: int, h_step: float, h: HurstLike) -> float:
    """Covariance of two increments of length ``h_step`` that are ``n_lag`` steps apart.

    ``n_lag = 0`` gives the increment variance ``h_step ** 2H``.
    """
    hp = as_hurst(h)
    if int(n_lag) != n_lag or n_lag < 0:
        raise DomainError(f"n_lag must be a non-negative integer, got {n_lag!r}")
    if not h_step > 0:
        raise DomainError(f"h_step must be positive, got {h_step!r}")
    a = 2.0 * hp.h
    scale = h_step**a
    n = int(n_lag)
    if n == 0:
        return scale
    if n == 1:
        # (n - 1)^{2H} is exactly 0 here
        return 0.5 * scale * (2.0**a - 2.0)
    # n^{2H} [(1 + 1/n)^{2H} + (1 - 1/n)^{2H} - 2] without cancellation
    x = 1.0 / n
    second_diff = math.expm1(a * math.log1p(x)) + math.expm1(a * math.log1p(-x))
    return 0.5 * scale * n**a * second_diff


def long_range_ratio(n_lag: int, h: HurstLike) -> float:
    """rho_H(n) / (H (2H - 1) n^{2H-2}) at unit step; tends to 1 for H != 1/2."""
    hp = as_hurst(h)
    if hp.h == 0.5:
        raise DomainError("asymptotic constant vanishes at H = 1/2")
    return increment_autocovariance(n_lag, 1.0, hp) / (
        hp.h * (2 * hp.h - 1) * float(n_lag) ** (2 * hp.h - 2)
    )


def rescale_expected_max_loss(estimate_at_t: float, t: float, h: HurstLike) -> float:
    """Convert an expected maximum loss at horizon ``t`` to horizon 1 (divide by t^H)."""
    if not t > 0:
        raise DomainError(f"horizon must be positive, got {t!r}")
    return estimate_at_t / t ** as_hurst(h).h


def asset_price_transform(
    path: FbmPath, y0: float, r: float, mu: float, sigma: float
) -> np.ndarray:
    """Geometric fBm ``y0 * exp((r + mu) t + sigma B_t)`` on the path's grid."""
    if not y0 > 0:
        raise DomainError(f"initial value must be positive, got {y0!r}")
    if sigma < 0:
        raise DomainError(f"sigma must be non-negative, got {sigma!r}")
    t = path.grid.points()
    return y0 * np.exp((r + mu) * t + sigma * path.values)

"""Functionals of discretely observed paths: sup, inf, range and maximum loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FbmPath
from .errors import ValidationError

__all__ = ["PathFunctionals", "maximum_loss", "maximum_loss_batch", "functionals"]


@dataclass(frozen=True)
class PathFunctionals:
    supremum: float
    infimum: float
    range: float
    max_loss: float


def _values(path) -> np.ndarray:
    values = path.values if isinstance(path, FbmPath) else np.asarray(path, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ValidationError("path must be a non-empty 1-d sequence")
    if np.isnan(values).any():
        raise ValidationError("path contains NaN")
    return values


def maximum_loss(path) -> float:
    """Largest drop ``values[u] - values[v]`` over grid indices ``u <= v``.

    Computed in one pass from the running maximum; the result is never
    negative since ``u = v`` is allowed.
    """
    values = _values(path)
    running_max = np.maximum.accumulate(values)
    return float(np.max(running_max - values))


def maximum_loss_batch(values: np.ndarray) -> np.ndarray:
    """Row-wise :func:`maximum_loss` for a ``(n_paths, n_points)`` array."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise ValidationError("expected a 2-d array of paths")
    if np.isnan(values).any():
        raise ValidationError("paths contain NaN")
    return np.max(np.maximum.accumulate(values, axis=1) - values, axis=1)


def functionals(path) -> PathFunctionals:
    values = _values(path)
    running_max = np.maximum.accumulate(values)
    sup = float(running_max[-1])
    inf = float(np.min(values))
    return PathFunctionals(
        supremum=sup,
        infimum=inf,
        range=sup - inf,
        max_loss=float(np.max(running_max - values)),
    )

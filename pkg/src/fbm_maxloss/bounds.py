"""Closed-form bounds on expected supremum, infimum, range and maximum loss."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import HurstLike, HurstParameter, abs_pow, as_hurst
from .errors import DomainError, RegimeError

__all__ = [
    "BoundEntry",
    "BoundReport",
    "max_loss_bounds",
    "prior_bounds",
    "markov_tail_bound",
    "comparison_distance",
    "bound_report",
    "SOURCE_NEW",
    "SOURCE_PRIOR",
]

SQRT_PI = math.sqrt(math.pi)
SQRT2 = math.sqrt(2.0)

SOURCE_NEW = "drawdown comparison (new)"
SOURCE_PRIOR = "sup/inf combination (prior)"
_SOURCE_SUP_UPPER = "supremum bound (prior)"
_SOURCE_SF = "supremum comparison (prior)"


@dataclass(frozen=True)
class BoundEntry:
    label: str
    kind: str  # "lower" | "upper"
    target: str  # "E(S)" | "E(I)" | "E(R)" | "E(M)" | "P(M>x)"
    value: float
    source: str
    raw_value: float | None = None
    valid: bool = True


@dataclass
class BoundReport:
    h: HurstParameter
    t: float
    entries: list[BoundEntry] = field(default_factory=list)

    def by_target(self, target: str) -> list[BoundEntry]:
        return [e for e in self.entries if e.target == target]

    def ordering_violations(self) -> list[tuple[BoundEntry, BoundEntry]]:
        """Pairs (lower, upper) on the same target with lower > upper."""
        bad = []
        for target in {e.target for e in self.entries}:
            entries = [e for e in self.by_target(target) if e.valid]
            for lo in (e for e in entries if e.kind == "lower"):
                for up in (e for e in entries if e.kind == "upper"):
                    if lo.value > up.value:
                        bad.append((lo, up))
        return bad


def _check_t(t: float) -> float:
    if not t > 0:
        raise DomainError(f"time horizon must be positive, got {t!r}")
    return float(t)


def _check_regime(hp: HurstParameter) -> None:
    if not hp.in_long_memory_regime():
        raise RegimeError(f"bound only established for 1/2 <= H < 1, got H={hp.h}")


def max_loss_bounds(h: HurstLike, t: float) -> tuple[float, float]:
    """(t^H / sqrt(pi), 2 t^H / sqrt(pi)) for the expected maximum loss up to ``t``."""
    hp = as_hurst(h)
    _check_regime(hp)
    scale = _check_t(t) ** hp.h
    return scale / SQRT_PI, 2.0 * scale / SQRT_PI


def prior_bounds(h: HurstLike, t: float) -> list[BoundEntry]:
    """Earlier bounds on E(S), E(I), E(R) and E(M), all proportional to t^H."""
    hp = as_hurst(h)
    s = _check_t(t) ** hp.h
    c = SQRT2 / SQRT_PI
    return [
        BoundEntry("E(S) upper", "upper", "E(S)", c * s, _SOURCE_SUP_UPPER),
        BoundEntry("E(I) lower", "lower", "E(I)", -c * s, SOURCE_PRIOR),
        BoundEntry("E(R) upper", "upper", "E(R)", 2 * c * s, SOURCE_PRIOR),
        BoundEntry("E(S) lower (SF)", "lower", "E(S)", c * s / 2, _SOURCE_SF),
        BoundEntry("E(S) upper (SF)", "upper", "E(S)", c * s, _SOURCE_SF),
        BoundEntry("E(M) lower", "lower", "E(M)", c * s / 2, SOURCE_PRIOR),
        BoundEntry("E(M) upper", "upper", "E(M)", 2 * c * s, SOURCE_PRIOR),
    ]


def markov_tail_bound(x: float, h: HurstLike, t: float, clamp: bool = True) -> float:
    """Bound on P(M_t > x) from Markov's inequality and the upper expectation bound."""
    if not x > 0:
        raise DomainError(f"x must be positive, got {x!r}")
    _, upper = max_loss_bounds(h, t)
    raw = upper / x
    return min(1.0, raw) if clamp else raw


def comparison_distance(u, v, u2, v2, h: HurstLike):
    """E[((B_u - B_v) - (B_u2 - B_v2))^2] via the six-term expansion.

    Vectorized over array arguments; all times must lie in [0, 1].
    """
    hp = as_hurst(h)
    args = [np.asarray(a, dtype=float) for a in (u, v, u2, v2)]
    if any(np.any((a < 0) | (a > 1)) for a in args):
        raise DomainError("times must lie in [0, 1]")
    u, v, u2, v2 = args
    a = 2.0 * hp.h
    out = (
        abs_pow(u - v, a)
        + abs_pow(u2 - v2, a)
        + abs_pow(u - u2, a)
        - abs_pow(u - v2, a)
        - abs_pow(v - u2, a)
        + abs_pow(v - v2, a)
    )
    return out if np.ndim(out) else float(out)


def bound_report(h: HurstLike, t: float, tail_x: float | None = None) -> BoundReport:
    """All closed-form bounds at (h, t).

    Outside 1/2 <= H < 1 the new bounds are still listed but flagged invalid.
    """
    hp = as_hurst(h)
    t = _check_t(t)
    report = BoundReport(h=hp, t=t, entries=prior_bounds(hp, t))
    valid = hp.in_long_memory_regime()
    scale = t**hp.h
    lower, upper = scale / SQRT_PI, 2 * scale / SQRT_PI
    report.entries += [
        BoundEntry("E(M) lower (new)", "lower", "E(M)", lower, SOURCE_NEW, valid=valid),
        BoundEntry("E(M) upper (new)", "upper", "E(M)", upper, SOURCE_NEW, valid=valid),
    ]
    if tail_x is not None:
        if not tail_x > 0:
            raise DomainError(f"x must be positive, got {tail_x!r}")
        raw = upper / tail_x
        report.entries.append(
            BoundEntry(
                f"P(M>{tail_x:g}) upper", "upper", "P(M>x)", min(1.0, raw), SOURCE_NEW,
                raw_value=raw, valid=valid,
            )
        )
    return report

"""Exact fBm path simulation by Cholesky factorization of the grid covariance.

The factor is computed once per (H, grid) and reused for every path. Each path
draws its Gaussian vector from its own counter-based stream (Philox keyed by
master seed, stream id and path index), so results do not depend on how many
worker threads are used.
"""

from __future__ import annotations

import logging
import os
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import lapack
from scipy.special import ndtri

from .core import FbmPath, HurstLike, HurstParameter, TimeGrid, as_hurst, covariance
from .errors import DomainError, NotPositiveDefiniteError, ValidationError
from .pathstats import maximum_loss_batch

__all__ = [
    "CovarianceMatrix",
    "CholeskyFactor",
    "SeedManifest",
    "McEstimate",
    "build_covariance_matrix",
    "cholesky_factorize",
    "factorization_count",
    "path_normals",
    "sample_path",
    "sample_paths",
    "monte_carlo_max_loss",
    "dump_factor",
    "load_factor",
    "default_workers",
]

log = logging.getLogger(__name__)

ALGORITHM_LABEL = "philox4x64-10/seedseq(master,stream,path)/ndtri"
CHUNK_PATHS = 256
FACTOR_MAGIC = b"FBMCHOL1"

_factorizations = 0


def factorization_count() -> int:
    """Number of Cholesky factorizations performed in this process."""
    return _factorizations


def default_workers() -> int:
    env = os.environ.get("FBM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError(f"FBM_THREADS must be an integer, got {env!r}") from None
    return max(1, min(8, os.cpu_count() or 1))


@dataclass(frozen=True)
class CovarianceMatrix:
    """Covariance of (B_delta, ..., B_{n delta}); the deterministic B_0 is left out."""

    grid: TimeGrid
    h: HurstParameter
    entries: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class CholeskyFactor:
    lower: np.ndarray = field(repr=False)
    h: HurstParameter | None = None
    grid: TimeGrid | None = None

    @property
    def size(self) -> int:
        return self.lower.shape[0]


@dataclass(frozen=True)
class SeedManifest:
    master_seed: int
    stream_id: int = 0
    algorithm_label: str = ALGORITHM_LABEL

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValidationError(f"master_seed must fit in 64 unsigned bits: {self.master_seed}")
        if int(self.stream_id) < 0:
            raise ValidationError(f"stream_id must be non-negative: {self.stream_id}")


@dataclass(frozen=True)
class McEstimate:
    h: HurstParameter
    grid: TimeGrid
    n_paths: int
    mean: float
    std_error: float
    manifest: SeedManifest
    runtime_s: float = field(default=0.0, compare=False)


def build_covariance_matrix(grid: TimeGrid, h: HurstLike) -> CovarianceMatrix:
    hp = as_hurst(h)
    t = grid.points()[1:]
    entries = covariance(t[:, None], t[None, :], hp)
    # exact symmetry regardless of rounding in the broadcasted formula
    entries = np.triu(entries) + np.triu(entries, 1).T
    return CovarianceMatrix(grid=grid, h=hp, entries=entries)


def cholesky_factorize(cov) -> CholeskyFactor:
    """Lower-triangular L with L @ L.T == cov.

    Raises
    ------
    NotPositiveDefiniteError
        When a pivot is not positive; ``.pivot`` holds the 0-based index.
    """
    global _factorizations
    if isinstance(cov, CovarianceMatrix):
        a, h, grid = cov.entries, cov.h, cov.grid
    else:
        a, h, grid = np.asarray(cov, dtype=float), None, None
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"covariance must be square, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValidationError("covariance contains non-finite entries")
    _factorizations += 1
    c, info = lapack.dpotrf(a, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        pivot = info - 1
        raise NotPositiveDefiniteError(
            pivot, f"matrix not positive definite: pivot {pivot} is not positive"
        )
    if info < 0:  # pragma: no cover - argument error inside LAPACK
        raise RuntimeError(f"dpotrf argument {-info} invalid")
    return CholeskyFactor(lower=np.ascontiguousarray(c), h=h, grid=grid)


def _factor_for(h: HurstParameter, grid: TimeGrid) -> CholeskyFactor:
    return cholesky_factorize(build_covariance_matrix(grid, h))


def path_normals(seed: SeedManifest, path_index: int, size: int) -> np.ndarray:
    """Standard normals for one path, by inverse CDF of open-interval uniforms."""
    ss = np.random.SeedSequence(
        entropy=int(seed.master_seed), spawn_key=(int(seed.stream_id), int(path_index))
    )
    raw = np.random.Philox(ss).random_raw(size)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u)


def _to_path(factor: CholeskyFactor, increments_free: np.ndarray) -> FbmPath:
    grid = factor.grid or TimeGrid(1.0, factor.size)
    return FbmPath(grid=grid, values=np.concatenate(([0.0], increments_free)))


def sample_path(
    factor: CholeskyFactor,
    seed: SeedManifest,
    path_index: int = 0,
    normals: np.ndarray | None = None,
) -> FbmPath:
    """One exact path ``[0, L z]``; ``normals`` overrides the seeded draw."""
    z = path_normals(seed, path_index, factor.size) if normals is None else np.asarray(normals, float)
    if z.shape != (factor.size,):
        raise ValidationError(f"need {factor.size} normals, got shape {z.shape}")
    return _to_path(factor, factor.lower @ z)


def _chunk_values(factor: CholeskyFactor, seed: SeedManifest, start: int, stop: int) -> np.ndarray:
    z = np.empty((stop - start, factor.size))
    for row, k in enumerate(range(start, stop)):
        z[row] = path_normals(seed, k, factor.size)
    values = np.zeros((stop - start, factor.size + 1))
    values[:, 1:] = z @ factor.lower.T
    return values


def sample_paths(
    factor: CholeskyFactor,
    seed: SeedManifest,
    n_paths: int,
    workers: int | None = None,
    start: int = 0,
) -> np.ndarray:
    """Paths ``start .. start + n_paths - 1`` as rows of an ``(n_paths, n + 1)`` array.

    Work is split in fixed chunks of ``CHUNK_PATHS`` paths, so the output is
    identical for any ``workers``.
    """
    workers = default_workers() if workers is None else max(1, int(workers))
    bounds = [
        (a, min(a + CHUNK_PATHS, start + n_paths)) for a in range(start, start + n_paths, CHUNK_PATHS)
    ]
    out = np.empty((n_paths, factor.size + 1))

    def run(b):
        a, z = b
        out[a - start : z - start] = _chunk_values(factor, seed, a, z)

    if workers == 1 or len(bounds) == 1:
        for b in bounds:
            run(b)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, bounds))
    return out


def monte_carlo_max_loss(
    h: HurstLike,
    grid: TimeGrid,
    n_paths: int,
    seed: SeedManifest,
    *,
    factor: CholeskyFactor | None = None,
    workers: int | None = None,
    normals: np.ndarray | None = None,
) -> McEstimate:
    """Monte Carlo estimate of E(M_t) on ``grid`` with its standard error.

    ``factor`` lets callers reuse a factor across calls; otherwise exactly one
    factorization is done. ``normals`` (shape ``(n_paths, n_steps)``) replaces
    the seeded Gaussian draws.
    """
    hp = as_hurst(h)
    if int(n_paths) != n_paths or n_paths < 2:
        raise DomainError(f"n_paths must be an integer >= 2, got {n_paths!r}")
    t0 = time.perf_counter()
    if factor is None:
        factor = _factor_for(hp, grid)
    elif factor.size != grid.n_steps:
        raise ValidationError(f"factor size {factor.size} does not match grid ({grid.n_steps} steps)")
    if normals is not None:
        z = np.asarray(normals, dtype=float)
        if z.shape != (n_paths, grid.n_steps):
            raise ValidationError(f"normals must have shape {(n_paths, grid.n_steps)}")
        values = np.zeros((n_paths, grid.n_steps + 1))
        values[:, 1:] = z @ factor.lower.T
    else:
        values = sample_paths(factor, seed, n_paths, workers=workers)
    losses = maximum_loss_batch(values)
    mean = float(np.mean(losses))
    se = float(np.std(losses, ddof=1) / np.sqrt(n_paths))
    runtime = time.perf_counter() - t0
    log.info("H=%.3g n=%d paths=%d mean=%.6g se=%.3g (%.2fs)", hp.h, grid.n_steps, n_paths, mean, se, runtime)
    return McEstimate(
        h=hp, grid=grid, n_paths=int(n_paths), mean=mean, std_error=se, manifest=seed, runtime_s=runtime
    )


def dump_factor(factor: CholeskyFactor, path) -> None:
    """Write ``factor`` as: magic, H (f8), n (i8), row-major lower triangle (f8), little-endian."""
    if factor.h is None:
        raise ValidationError("factor without Hurst provenance cannot be cached")
    n = factor.size
    rows, cols = np.tril_indices(n)
    with open(path, "wb") as fh:
        fh.write(FACTOR_MAGIC)
        fh.write(struct.pack("<dq", factor.h.h, n))
        fh.write(factor.lower[rows, cols].astype("<f8").tobytes())


def load_factor(path, horizon: float = 1.0) -> CholeskyFactor:
    data = Path(path).read_bytes()
    if data[:8] != FACTOR_MAGIC:
        raise ValidationError(f"{path}: not a factor file (bad magic)")
    h, n = struct.unpack("<dq", data[8:24])
    body = np.frombuffer(data, dtype="<f8", offset=24)
    if n < 1 or body.size != n * (n + 1) // 2:
        raise ValidationError(f"{path}: truncated or corrupt factor file")
    lower = np.zeros((n, n))
    lower[np.tril_indices(n)] = body
    return CholeskyFactor(lower=lower, h=HurstParameter(h), grid=TimeGrid(horizon, n))


def cached_factor(h: HurstLike, grid: TimeGrid, cache_dir=None) -> CholeskyFactor:
    """Factor for (h, grid), read from / written to ``cache_dir`` when given."""
    hp = as_hurst(h)
    if cache_dir is None:
        return _factor_for(hp, grid)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    fname = cache_dir / f"fbmchol_h{hp.h!r}_n{grid.n_steps}_t{grid.horizon!r}.bin"
    if fname.exists():
        factor = load_factor(fname, horizon=grid.horizon)
        if factor.h == hp and factor.size == grid.n_steps:
            return factor
        log.warning("ignoring mismatched factor cache %s", fname)
    factor = _factor_for(hp, grid)
    dump_factor(factor, fname)
    return factor

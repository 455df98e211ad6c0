"""Chaos-game sampling of the invariant measure.

The orbit ``x <- A_k x + b_k`` with ``k`` drawn by weight equidistributes
with respect to the invariant measure, so its streaming statistics give a
Monte Carlo check on the exact moments. Everything is seeded and
bit-reproducible.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from . import linalg
from .exceptions import DimensionUnsupported, InvalidArgument
from .rng import MASK64, seed_state, xoshiro_random

DEFAULT_BURN_IN = 100


@dataclass(frozen=True, eq=False)
class EmpiricalStats:
    n: int
    mean: np.ndarray
    cov: np.ndarray
    mean_stderr: np.ndarray
    seed: int
    burn_in: int
    shards: int = 1

    def to_dict(self):
        return {
            "n": self.n,
            "mean": self.mean.tolist(),
            "cov": self.cov.tolist(),
            "mean_stderr": self.mean_stderr.tolist(),
            "seed": self.seed,
            "burn_in": self.burn_in,
            "shards": self.shards,
        }


def _cumulative_weights(weights):
    cum = np.array([math.fsum(weights[: k + 1]) for k in range(len(weights))])
    # everything from the last positive weight on absorbs round-off in the total
    last = max(k for k, w in enumerate(weights) if w > 0)
    cum[last:] = np.inf
    return cum


@njit(inline="always")
def _step(a, b, cum, state, x, tmp):
    u = xoshiro_random(state)
    k = 0
    while not u < cum[k]:
        k += 1
    d = x.shape[0]
    for i in range(d):
        acc = b[k, i]
        for j in range(d):
            acc += a[k, i, j] * x[j]
        tmp[i] = acc
    for i in range(d):
        x[i] = tmp[i]


@njit(nogil=True)
def _welford_kernel(a, b, cum, state, x0, burn_in, n):
    d = x0.shape[0]
    x = x0.copy()
    tmp = np.empty(d)
    for _ in range(burn_in):
        _step(a, b, cum, state, x, tmp)
    mean = np.zeros(d)
    m2 = np.zeros((d, d))
    delta = np.empty(d)
    for t in range(1, n + 1):
        _step(a, b, cum, state, x, tmp)
        for i in range(d):
            delta[i] = x[i] - mean[i]
            mean[i] += delta[i] / t
        for i in range(d):
            for j in range(d):
                m2[i, j] += delta[i] * (x[j] - mean[j])
    return mean, m2


@njit(nogil=True)
def _raster_kernel(a, b, cum, state, x0, burn_in, n, lo, hi, width, height):
    x = x0.copy()
    tmp = np.empty(2)
    counts = np.zeros((height, width), dtype=np.int64)
    dropped = 0
    for _ in range(burn_in):
        _step(a, b, cum, state, x, tmp)
    sx = width / (hi[0] - lo[0])
    sy = height / (hi[1] - lo[1])
    for _ in range(n):
        _step(a, b, cum, state, x, tmp)
        if not (lo[0] <= x[0] <= hi[0] and lo[1] <= x[1] <= hi[1]):
            dropped += 1
            continue
        col = min(int((x[0] - lo[0]) * sx), width - 1)
        row = min(int((hi[1] - x[1]) * sy), height - 1)
        counts[row, col] += 1
    return counts, dropped


def _kernel_args(m):
    return (
        np.ascontiguousarray(m.linears),
        np.ascontiguousarray(m.offsets),
        _cumulative_weights(m.weights),
    )


def _start(m):
    return m.offsets.mean(axis=0)


def _check_seed(seed):
    if not 0 <= seed <= MASK64:
        raise InvalidArgument("seed must be an unsigned 64-bit integer")


def _merge(parts):
    """Pool (n, mean, m2) triples pairwise, in order."""
    n, mean, m2 = parts[0]
    for nb, mb, m2b in parts[1:]:
        total = n + nb
        delta = mb - mean
        mean = mean + delta * (nb / total)
        m2 = m2 + m2b + np.outer(delta, delta) * (n * nb / total)
        n = total
    return n, mean, m2


def sample(m, n, burn_in=DEFAULT_BURN_IN, seed=42, shards=1):
    """Run the chaos game and return streaming mean/covariance of ``n`` points.

    With ``shards > 1`` the points are split across independent streams
    seeded ``seed, seed + 1, ...``; each stream gets its own burn-in and the
    shard statistics are pooled exactly. ``shards=1`` is the reference.
    """
    if n < 2:
        raise InvalidArgument("need at least 2 samples")
    if burn_in < 0:
        raise InvalidArgument("burn_in must be non-negative")
    if shards < 1 or shards > n:
        raise InvalidArgument("shards must be between 1 and n")
    _check_seed(seed)
    a, b, cum = _kernel_args(m)
    x0 = _start(m)
    sizes = [n // shards + (1 if i < n % shards else 0) for i in range(shards)]

    def run(i):
        state = seed_state((seed + i) & MASK64)
        mean, m2 = _welford_kernel(a, b, cum, state, x0, burn_in, sizes[i])
        return sizes[i], mean, m2

    if shards == 1:
        parts = [run(0)]
    else:
        with ThreadPoolExecutor(max_workers=shards) as pool:
            parts = list(pool.map(run, range(shards)))
    total, mean, m2 = _merge(parts)
    cov = m2 / (total - 1)
    cov = 0.5 * (cov + cov.T)
    return EmpiricalStats(
        n=total,
        mean=mean,
        cov=cov,
        mean_stderr=np.sqrt(np.clip(np.diag(cov), 0.0, None) / total),
        seed=seed,
        burn_in=burn_in,
        shards=shards,
    )


@dataclass(frozen=True, eq=False)
class RasterImage:
    width: int
    height: int
    bbox: tuple
    counts: np.ndarray
    dropped: int = 0

    @property
    def total(self):
        return int(self.counts.sum())

    def to_pgm(self):
        """Binary PGM (P5) with log-scaled intensities, row 0 at the top."""
        c_max = int(self.counts.max())
        if c_max == 0:
            pixels = np.zeros(self.counts.shape, dtype=np.uint8)
        else:
            scaled = 255.0 * np.log1p(self.counts) / math.log1p(c_max)
            pixels = np.round(scaled).astype(np.uint8)
        header = f"P5\n{self.width} {self.height}\n255\n".encode("ascii")
        return header + pixels.tobytes()

    def write_pgm(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_pgm())


def default_bbox(m, pad=0.05):
    """Bounding box of the maps' fixed points, grown by ``pad`` of its extent per side."""
    eye = np.eye(m.dim)
    fixed = np.array([linalg.solve(eye - amap.linear, amap.offset) for amap in m.maps])
    lo, hi = fixed.min(axis=0), fixed.max(axis=0)
    extent = hi - lo
    margin = np.where(extent > 0, pad * extent, pad * np.maximum(np.abs(lo), 1.0))
    return lo - margin, hi + margin


def raster(m, n, burn_in=DEFAULT_BURN_IN, seed=42, width=256, height=256, bbox: Optional[tuple] = None):
    """Bin ``n`` chaos-game points of a planar IFS into a ``height x width`` grid.

    Points outside ``bbox`` are dropped and counted in ``dropped``.
    """
    if m.dim != 2:
        raise DimensionUnsupported(f"raster needs a 2-D model, got dimension {m.dim}")
    if width < 1 or height < 1:
        raise InvalidArgument("width and height must be positive")
    if n < 0 or burn_in < 0:
        raise InvalidArgument("n and burn_in must be non-negative")
    _check_seed(seed)
    lo, hi = default_bbox(m) if bbox is None else bbox
    lo = linalg.as_vector(lo, "bbox min", dim=2)
    hi = linalg.as_vector(hi, "bbox max", dim=2)
    if not np.all(hi > lo):
        raise InvalidArgument("bbox max must exceed bbox min")
    a, b, cum = _kernel_args(m)
    counts, dropped = _raster_kernel(
        a, b, cum, seed_state(seed), _start(m), burn_in, n, lo, hi, width, height
    )
    return RasterImage(width, height, (lo, hi), counts, int(dropped))


def zscores(exact_mean, stats):
    """Standardized gap between an exact mean and an empirical one.

    The standard error is floored at ``1e-12 * (1 + |exact|)`` so a point
    mass, whose empirical spread is pure round-off, does not divide by ~0.
    """
    exact_mean = np.asarray(exact_mean, dtype=float)
    floor = 1e-12 * (1.0 + np.abs(exact_mean))
    return (stats.mean - exact_mean) / np.maximum(stats.mean_stderr, floor)

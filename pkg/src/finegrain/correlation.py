"""k-point correlation sums and nearest-neighbour gap statistics on R/Z.

For points ``theta_1..theta_N`` in ``[0, 1)`` and an ordered tuple of distinct
indices ``x_1..x_k`` the rescaled consecutive differences are
``N * (theta_{x_i} - theta_{x_{i+1}} - m_i)`` with the integer shift ``m_i``
chosen so the value lies in ``[-N/2, N/2)``. The correlation sum counts (or
weights) tuples whose rescaled difference vector lands in a test region and
divides by ``N``.

Box membership is closed and uses an absolute slack of ``BOUNDARY_SLACK`` in
rescaled units: stored points carry ~1e-16 absolute error, so differences that
sit on a face to within rounding (lattices, repeated values) are counted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "BOUNDARY_SLACK",
    "AmbiguousRepresentativeError",
    "BoxRegion",
    "CorrResult",
    "GapHistogram",
    "ck_factor",
    "rescaled_difference",
    "correlate_box_bruteforce",
    "correlate_box",
    "correlate_triangle",
    "gap_distribution",
    "poisson_gap_cdf",
]

BOUNDARY_SLACK = 1e-9

# candidate windows are widened by this much beyond the slack before the exact test
_WINDOW_MARGIN = 1e-6
# rough cap on simultaneously materialised partial chains
_CHAIN_BUDGET = 1 << 21


class AmbiguousRepresentativeError(ValueError):
    """A box is too wide for a unique integer shift per coordinate."""


@dataclass(frozen=True)
class BoxRegion:
    """Axis-parallel box ``prod [a_i, b_i]`` in R^(k-1)."""

    intervals: tuple

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        if not ivs:
            raise ValueError("a box needs at least one interval (k >= 2)")
        for a, b in ivs:
            if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
                raise ValueError(f"invalid interval [{a}, {b}]")
        object.__setattr__(self, "intervals", ivs)

    @classmethod
    def parse(cls, text: str) -> "BoxRegion":
        """Parse ``a:b[,a:b...]``."""
        try:
            pairs = [part.split(":") for part in text.split(",")]
            return cls(tuple((float(a), float(b)) for a, b in pairs))
        except (TypeError, ValueError) as exc:
            raise ValueError(f"bad box syntax {text!r}, expected a:b[,a:b...]") from exc

    @classmethod
    def symmetric(cls, s: float, k: int = 2) -> "BoxRegion":
        return cls(tuple((-s, s) for _ in range(k - 1)))

    @property
    def k(self) -> int:
        return len(self.intervals) + 1

    @property
    def volume(self) -> float:
        return math.prod(b - a for a, b in self.intervals)

    @property
    def radius(self) -> float:
        return max(max(abs(a), abs(b)) for a, b in self.intervals)

    def __str__(self):
        return ",".join(f"{a:.17g}:{b:.17g}" for a, b in self.intervals)


@dataclass(frozen=True)
class CorrResult:
    raw_count: int
    N: int
    k: int
    poisson_reference: float

    @property
    def value(self) -> float:
        return self.raw_count / self.N


@dataclass(frozen=True)
class GapHistogram:
    s_grid: np.ndarray
    G_values: np.ndarray
    N: int

    def sup_deviation(self, cdf=None) -> float:
        """``max |G(s) - F(s)|`` over the grid, ``F`` defaulting to ``1 - exp(-s)``."""
        ref = poisson_gap_cdf(self.s_grid) if cdf is None else cdf(self.s_grid)
        return float(np.max(np.abs(self.G_values - ref)))


def ck_factor(k: int, N: int) -> float:
    """``#B_k / N**k = (1 - 1/N)(1 - 2/N)...(1 - (k-1)/N)``."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > N:
        raise ValueError(f"k={k} exceeds N={N}: no tuples of distinct indices")
    return math.prod(1.0 - j / N for j in range(1, k))


def rescaled_difference(x, y, N: int):
    """``N * (x - y - m)`` with the integer ``m`` placing it in ``[-N/2, N/2)``."""
    d = np.subtract(x, y, dtype=np.float64)
    d = d - np.floor(d + 0.5)
    return N * d


def _as_points(points) -> np.ndarray:
    th = np.asarray(getattr(points, "values", points), dtype=np.float64)
    if th.ndim != 1:
        raise ValueError("points must be one-dimensional")
    if th.size < 2:
        raise ValueError("need at least two points")
    if not np.all(np.isfinite(th)) or th.min() < 0.0 or th.max() >= 1.0:
        raise ValueError("points must lie in [0, 1)")
    return th


def _check_radius(box: BoxRegion, N: int, limit: float) -> None:
    if box.radius > limit:
        raise AmbiguousRepresentativeError(
            f"ambiguous representative: box reaches {box.radius:g} but N={N} allows at most {limit:g}"
        )


# ---------------------------------------------------------------------------
# brute force
# ---------------------------------------------------------------------------


def correlate_box_bruteforce(points, box: BoxRegion, *, slack: float = BOUNDARY_SLACK) -> CorrResult:
    """Count all ordered distinct k-tuples directly; O(N**k), k <= 4, N <= 2000."""
    th = _as_points(points)
    N, k = th.size, box.k
    if k > 4:
        raise ValueError("brute force supports k <= 4")
    if N > 2000:
        raise ValueError("brute force supports N <= 2000")
    if k > N:
        return CorrResult(0, N, k, box.volume)
    _check_radius(box, N, N / 2)

    D = rescaled_difference(th[:, None], th[None, :], N)
    hits = [(D >= a - slack) & (D <= b + slack) for a, b in box.intervals]
    idx = np.arange(N)
    count = 0
    for x1 in range(N):
        # tensor over (x_2, ..., x_k); axis j holds x_{j+2}
        t = hits[0][x1].copy()
        for i in range(1, k - 1):
            t = t[..., None] & hits[i].reshape((1,) * (i - 1) + (N, N))
        # distinctness of every index pair
        for p in range(k - 1):
            sel = [slice(None)] * (k - 1)
            sel[p] = x1
            t[tuple(sel)] = False
            for q in range(p + 1, k - 1):
                sel = [slice(None)] * (k - 1)
                sel[p] = idx
                sel[q] = idx
                t[tuple(sel)] = False
        count += int(np.count_nonzero(t))
    return CorrResult(count, N, k, box.volume)


# ---------------------------------------------------------------------------
# windowed counter
# ---------------------------------------------------------------------------


def _expand_ranges(lo: np.ndarray, hi: np.ndarray):
    counts = hi - lo
    total = int(counts.sum())
    owner = np.repeat(np.arange(lo.size), counts)
    starts = np.repeat(lo - (np.cumsum(counts) - counts), counts)
    return owner, starts + np.arange(total)


def _edges(th_sorted: np.ndarray, a: float, b: float, slack: float):
    """CSR neighbour lists ``x -> y`` (sorted order) with ``N(th_x - th_y - m)`` in ``[a, b]``."""
    N = th_sorted.size
    ext = np.concatenate((th_sorted - 1.0, th_sorted, th_sorted + 1.0))
    widen = slack + _WINDOW_MARGIN
    lo = np.searchsorted(ext, th_sorted - (b + widen) / N, side="left")
    hi = np.searchsorted(ext, th_sorted - (a - widen) / N, side="right")
    src, pos = _expand_ranges(lo, hi)
    dst = pos % N
    D = rescaled_difference(th_sorted[src], th_sorted[dst], N)
    keep = (D >= a - slack) & (D <= b + slack) & (src != dst)
    src, dst, D = src[keep], dst[keep], D[keep]
    indptr = np.zeros(N + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=N), out=indptr[1:])
    return indptr, dst, D


def _chain_sum(th: np.ndarray, intervals, slack: float, weight=None):
    """Count (or weight) chains ``x_1 -> ... -> x_k`` of distinct indices.

    Returns ``(count, weights)`` where ``weights`` is a list of per-chain weight
    arrays when ``weight(D, i)`` is given.
    """
    N = th.size
    th_sorted = np.sort(th, kind="stable")
    edges = [_edges(th_sorted, a, b, slack) for a, b in intervals]
    degree = max(1.0, edges[0][1].size / N)
    if len(edges) > 1:
        degree = max(degree, *(e[1].size / N for e in edges[1:]))
    chunk = max(1, int(_CHAIN_BUDGET / degree ** len(edges)))

    count = 0
    weights = []
    indptr0, dst0, D0 = edges[0]
    for start in range(0, N, chunk):
        stop = min(N, start + chunk)
        lo, hi = indptr0[start], indptr0[stop]
        first = np.repeat(np.arange(start, stop), np.diff(indptr0[start : stop + 1]))
        path = [first, dst0[lo:hi]]
        w = weight(D0[lo:hi], 0) if weight else None
        for i in range(1, len(edges)):
            indptr, dst, D = edges[i]
            last = path[-1]
            owner, pos = _expand_ranges(indptr[last], indptr[last + 1])
            new = dst[pos]
            path = [p[owner] for p in path]
            # explicit used-index check against all but the previous node
            keep = np.ones(new.size, dtype=bool)
            for p in path[:-1]:
                keep &= new != p
            path = [p[keep] for p in path] + [new[keep]]
            if weight:
                w = w[owner][keep] * weight(D[pos][keep], i)
        count += path[0].size
        if weight:
            weights.append(w)
    return count, weights


def correlate_box(points, box: BoxRegion, *, slack: float = BOUNDARY_SLACK) -> CorrResult:
    """Box correlation sum by sorted neighbour windows; same count as brute force.

    Cost is O(N log N + N w**(k-1)) with ``w`` the window width in mean gaps.
    Box coordinates are limited to ``N/4`` in absolute value.
    """
    th = _as_points(points)
    N, k = th.size, box.k
    if k > N:
        return CorrResult(0, N, k, box.volume)
    _check_radius(box, N, N / 4)
    count, _ = _chain_sum(th, box.intervals, slack)
    return CorrResult(int(count), N, k, box.volume)


def correlate_triangle(points, s, k: int = 2, *, slack: float = BOUNDARY_SLACK) -> float:
    """``(1/N) sum f(N(Delta - m))`` for ``f(x) = prod (1 - |x_i|/s_i)_+``.

    ``s`` is a scalar (same width on every axis) or a length ``k-1`` vector;
    the integral of ``f`` is ``prod s_i``. Summation is exactly rounded
    (``math.fsum``), so results do not depend on traversal order.
    """
    th = _as_points(points)
    N = th.size
    widths = np.broadcast_to(np.asarray(s, dtype=np.float64), (k - 1,)).copy()
    if k < 2 or np.any(widths <= 0):
        raise ValueError("need k >= 2 and positive widths")
    if k > N:
        return 0.0
    box = BoxRegion(tuple((-w, w) for w in widths))
    _check_radius(box, N, N / 4)

    def tent(D, i):
        return np.maximum(0.0, 1.0 - np.abs(D) / widths[i])

    _, weights = _chain_sum(th, box.intervals, slack, weight=tent)
    return math.fsum(math.fsum(w) for w in weights) / N


# ---------------------------------------------------------------------------
# gaps
# ---------------------------------------------------------------------------


def poisson_gap_cdf(s):
    """Exponential waiting-time law ``1 - exp(-s)``."""
    out = -np.expm1(-np.asarray(s, dtype=np.float64))
    return float(out) if np.ndim(out) == 0 else out


def gap_distribution(points, s_grid: Sequence[float]) -> GapHistogram:
    """Empirical distribution of normalised nearest-neighbour gaps.

    ``points`` holds the first ``N+1`` values; the ``N`` gaps between
    consecutive sorted values (no wrap-around gap) are multiplied by ``N``.
    """
    th = np.asarray(getattr(points, "values", points), dtype=np.float64)
    if th.ndim != 1 or th.size < 2:
        raise ValueError("need at least two points")
    grid = np.asarray(s_grid, dtype=np.float64)
    if grid.ndim != 1 or np.any(grid < 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("s_grid must be increasing and nonnegative")
    N = th.size - 1
    gaps = np.sort(np.diff(np.sort(th, kind="stable")) * N)
    G = np.searchsorted(gaps, grid, side="right") / N
    return GapHistogram(grid, G, N)

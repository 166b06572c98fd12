"""Exponential-sum phases, their derivatives and oscillatory integrals.

The phase attached to integer coefficients ``u`` and increasing indices ``t``
is ``phi(alpha) = sum_i u_i exp(alpha a_{t_i})``. Its derivatives are
``phi^(j)(alpha) = sum_i u_i a_{t_i}**j exp(alpha a_{t_i})``, i.e. the vector of
the first ``l`` derivatives is ``M w`` with ``M[j, i] = a_{t_i}**j`` and
``w_i = u_i exp(alpha a_{t_i})``. Inverting ``M`` in closed form therefore
turns a lower bound on ``|w|`` into a lower bound on the largest derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import gmpy2
import numpy as np
from gmpy2 import mpfr, mpq

from .sequences import ASequence, Linear, Sqrt, alpha_to_mpfr, parse_alpha

__all__ = [
    "MAX_TERMS",
    "FREQUENCY_CEILING",
    "FrequencyCeilingError",
    "PhaseSpec",
    "IntervalJ",
    "VanEnvelope",
    "VandermondeInverse",
    "ZeroCount",
    "OscillatoryIntegral",
    "h_map",
    "phase_value",
    "phase_deriv",
    "van_ell",
    "min_van_over_J",
    "vandermonde_inverse",
    "vandermonde_bound_ratio",
    "repulsion_lower_bounds",
    "count_zeros",
    "count_exp_sum_zeros",
    "scan_sign_changes",
    "oscillatory_integral",
    "delta_identity_residual",
]

MAX_TERMS = 8
FREQUENCY_CEILING = 1e7
_GAUSS_ORDER = 8
_NODE_BLOCK = 1 << 20


class FrequencyCeilingError(RuntimeError):
    def __init__(self, frequency: float, ceiling: float = FREQUENCY_CEILING):
        super().__init__(f"phase frequency bound F={frequency:.6g} exceeds the quadrature ceiling {ceiling:.6g}")
        self.frequency = frequency
        self.ceiling = ceiling


@dataclass(frozen=True)
class PhaseSpec:
    """Coefficients ``u``, strictly increasing indices ``t`` and the sequence ``a``.

    ``repulsion=True`` (the default) requires every coefficient to be nonzero.
    """

    u: tuple
    t: tuple
    a: ASequence = field(default_factory=Sqrt)
    repulsion: bool = True
    max_terms: int = MAX_TERMS

    def __post_init__(self):
        u = tuple(int(v) for v in self.u)
        t = tuple(int(v) for v in self.t)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "t", t)
        if not 1 <= len(u) <= self.max_terms:
            raise ValueError(f"need 1..{self.max_terms} terms, got {len(u)}")
        if len(t) != len(u):
            raise ValueError("u and t must have equal length")
        if t[0] < 1 or any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError("t must be strictly increasing positive integers")
        if self.repulsion and any(v == 0 for v in u):
            raise ValueError("repulsion mode needs nonzero coefficients")

    @property
    def ell(self) -> int:
        return len(self.u)

    def nodes(self) -> np.ndarray:
        """``a_{t_i}`` in double precision."""
        return np.array([self.a.value_float(t) for t in self.t])


@dataclass(frozen=True)
class IntervalJ:
    """The unit interval ``[A, A+1]``, ``A > 0``."""

    A: float

    def __post_init__(self):
        if not self.A > 0:
            raise ValueError("A must be positive")

    @property
    def bounds(self) -> tuple:
        return (float(self.A), float(self.A) + 1.0)


def h_map(n) -> np.ndarray:
    """Map ``n in Z^(k-1)`` to ``(n_1, n_2 - n_1, ..., n_{k-1} - n_{k-2}, -n_{k-1})``.

    Works row-wise on 2-D input. The image sums to zero and its sup-norm is at
    most twice that of ``n``.
    """
    arr = np.asarray(n, dtype=np.int64)
    if arr.ndim == 0 or arr.shape[-1] == 0:
        raise ValueError("h_map needs a nonempty vector")
    zero = np.zeros(arr.shape[:-1] + (1,), dtype=np.int64)
    return np.concatenate((arr, zero), axis=-1) - np.concatenate((zero, arr), axis=-1)


# ---------------------------------------------------------------------------
# high-precision phase evaluation
# ---------------------------------------------------------------------------


def _working_bits(spec: PhaseSpec, alpha: float, j: int = 0) -> int:
    x_max = spec.a.value_float(spec.t[-1])
    mag = abs(alpha) * x_max * math.log2(math.e)
    mag += j * max(0.0, math.log2(max(x_max, 1e-300)))
    mag += math.log2(sum(abs(v) for v in spec.u))
    return int(math.ceil(max(mag, 0.0))) + 53 + 64


def _phase_terms(spec: PhaseSpec, alpha):
    """``(a_{t_i}, u_i exp(alpha a_{t_i}))`` as mpfr in the current context."""
    al = alpha_to_mpfr(parse_alpha(alpha))
    xs = [spec.a.value(t) for t in spec.t]
    return xs, [u * gmpy2.exp(al * x) for u, x in zip(spec.u, xs)]


def phase_value(spec: PhaseSpec, alpha) -> float:
    return phase_deriv(spec, alpha, 0)


def phase_deriv(spec: PhaseSpec, alpha, j: int) -> float:
    """``d^j/dalpha^j phi(u, t, alpha)``, summed in high precision then rounded."""
    if j < 0:
        raise ValueError("derivative order must be >= 0")
    with gmpy2.context(gmpy2.get_context(), precision=_working_bits(spec, float(parse_alpha(alpha)), j)):
        xs, ws = _phase_terms(spec, alpha)
        return float(gmpy2.fsum([w * x**j for x, w in zip(xs, ws)]))


def _van_mpfr(spec: PhaseSpec, alpha, ell: int):
    xs, ws = _phase_terms(spec, alpha)
    best = mpfr(0)
    powers = list(ws)
    for _ in range(ell):
        powers = [p * x for p, x in zip(powers, xs)]
        best = max(best, abs(gmpy2.fsum(powers)))
    return best


def van_ell(spec: PhaseSpec, alpha, ell: int | None = None) -> float:
    """``max_{1 <= i <= ell} |phi^(i)(alpha)|``."""
    ell = spec.ell if ell is None else int(ell)
    if ell < 1:
        raise ValueError("ell must be >= 1")
    with gmpy2.context(gmpy2.get_context(), precision=_working_bits(spec, float(parse_alpha(alpha)), ell)):
        return float(_van_mpfr(spec, alpha, ell))


@dataclass(frozen=True)
class VanEnvelope:
    """Grid minimum of ``Van_l phi`` over ``J``; a lower-envelope estimate, not certified."""

    value: float
    argmin: float
    spacing: float
    grid_points: int


def min_van_over_J(spec: PhaseSpec, J: IntervalJ, grid_points: int = 10_000, ell: int | None = None) -> VanEnvelope:
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    ell = spec.ell if ell is None else int(ell)
    lo, hi = J.bounds
    grid = np.linspace(lo, hi, grid_points)
    best, where = None, lo
    with gmpy2.context(gmpy2.get_context(), precision=_working_bits(spec, hi, ell)):
        xs = [spec.a.value(t) for t in spec.t]
        for alpha in grid:
            al = mpfr(float(alpha))
            powers = [u * gmpy2.exp(al * x) for u, x in zip(spec.u, xs)]
            v = mpfr(0)
            for _ in range(ell):
                powers = [p * x for p, x in zip(powers, xs)]
                v = max(v, abs(gmpy2.fsum(powers)))
            if best is None or v < best:
                best, where = v, float(alpha)
    return VanEnvelope(float(best), where, (hi - lo) / (grid_points - 1), grid_points)


# ---------------------------------------------------------------------------
# Vandermonde-type matrix M[j, i] = x_i ** j, j = 1..l
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VandermondeInverse:
    """Closed-form inverse of ``M[j, i] = x_i**j`` (rows ``j = 1..l``).

    ``exact`` holds the inverse as exact rationals (inputs are read exactly
    from their binary values); ``inverse`` is its rounding to doubles.
    ``residual`` is ``max |M M^-1 - I|`` evaluated with the exact inverse.
    """

    inverse: np.ndarray
    norm: float
    residual: float
    exact: tuple = field(repr=False, default=())


def _elementary_symmetric(values) -> list:
    """``[e_0, e_1, ..., e_n]`` of ``values``."""
    e = [mpq(1)]
    for v in values:
        e = [e[0]] + [e[r] + v * e[r - 1] for r in range(1, len(e))] + [v * e[-1]]
    return e


def vandermonde_inverse(x: Sequence[float]) -> VandermondeInverse:
    """Inverse of ``M(x)`` via elementary symmetric polynomials.

    ``m_ij = (-1)**(j-1) e_{l-j}(x without x_i) / (x_i prod_{m != i} (x_m - x_i))``.
    """
    xs = [mpq(v) for v in x]
    ell = len(xs)
    if ell == 0:
        raise ValueError("empty node vector")
    if xs[0] <= 0 or any(b <= a for a, b in zip(xs, xs[1:])):
        raise ValueError("nodes must be positive and strictly increasing")

    inv = []
    for i, xi in enumerate(xs):
        others = xs[:i] + xs[i + 1 :]
        e = _elementary_symmetric(others)
        denom = xi
        for xm in others:
            denom *= xm - xi
        inv.append([(-1) ** (j - 1) * e[ell - j] / denom for j in range(1, ell + 1)])

    norm = max(sum(abs(v) for v in row) for row in inv)
    residual = mpq(0)
    for r in range(ell):  # row r of M holds x**(r+1)
        for c in range(ell):
            acc = sum(xs[m] ** (r + 1) * inv[m][c] for m in range(ell))
            residual = max(residual, abs(acc - (1 if r == c else 0)))
    arr = np.array([[float(v) for v in row] for row in inv])
    return VandermondeInverse(arr, float(norm), float(residual), tuple(tuple(row) for row in inv))


def vandermonde_bound_ratio(x: Sequence[float], vi: VandermondeInverse | None = None) -> float:
    """``||M^-1||_inf / (max(1, x_l)**(l-1) / (x_1 gamma**(l-1)))``, gamma the minimum spacing.

    For nodes with spacing ``>= gamma`` this ratio never exceeds ``2**(l-1)``.
    """
    vi = vandermonde_inverse(x) if vi is None else vi
    x = [float(v) for v in x]
    ell = len(x)
    if ell == 1:
        return vi.norm * x[0]
    gamma = min(b - a for a, b in zip(x, x[1:]))
    scale = max(1.0, x[-1]) ** (ell - 1) / (x[0] * gamma ** (ell - 1))
    return vi.norm / scale


def repulsion_lower_bounds(spec: PhaseSpec, J: IntervalJ) -> dict:
    """Explicit lower bounds for ``min_J Van_l phi`` from ``|w|_inf <= ||M^-1|| Van_l``.

    ``inverse_norm``: ``|u_l| exp(A a_{t_l}) / ||M^-1||_inf`` with the exact inverse norm.
    ``spacing``: the same with ``||M^-1||`` replaced by its a-priori bound
    ``2**(l-1) max(1, a_{t_l})**(l-1) / (a_{t_1} gamma**(l-1))``.
    """
    x = spec.nodes()
    ell = spec.ell
    vi = vandermonde_inverse(x)
    A = J.bounds[0]
    w_min = abs(spec.u[-1]) * math.exp(A * x[-1])
    out = {"inverse_norm": w_min / vi.norm, "norm": vi.norm}
    if ell == 1:
        out["spacing"] = w_min * x[0]
    else:
        gamma = float(np.min(np.diff(x)))
        bound = 2 ** (ell - 1) * max(1.0, x[-1]) ** (ell - 1) / (x[0] * gamma ** (ell - 1))
        out["spacing"] = w_min / bound
    return out


# ---------------------------------------------------------------------------
# zeros of exponential sums
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ZeroCount:
    count: int
    zeros: tuple
    resolved: bool
    bound: int
    reason: str = ""


class _Unresolved(Exception):
    pass


_ZERO_NOISE = 1e-12
_BISECT_WIDTH = 1e-9
_MAX_DEPTH = 200


def _normalized_eval(u, x, alpha):
    """``(value, scale)`` of ``sum u_i exp(alpha x_i)`` divided by ``exp(max_i alpha x_i)``."""
    e = alpha * x
    e = np.exp(e - e.max())
    terms = u * e
    return float(terms.sum()), float(np.abs(terms).sum())


def _zeros(u: np.ndarray, x: np.ndarray, lo: float, hi: float, top: bool = True) -> list:
    if u.size == 1:
        return []
    # psi = u_l e^{alpha x_l} (1 + sum ut_i e^{alpha xt_i}); the bracket's derivative has l-1 terms
    ut = u[:-1] / u[-1]
    xt = x[:-1] - x[-1]
    crit = _zeros(ut * xt, xt, lo, hi, top=False)
    points = [lo] + [c for c in crit if lo < c < hi] + [hi]
    values = []
    for i, p in enumerate(points):
        v, scale = _normalized_eval(u, x, p)
        if abs(v) <= _ZERO_NOISE * scale:
            # below the top level a doubtful zero only adds a split point, which
            # keeps the pieces monotone; at the top it changes the count
            if top and 0 < i < len(points) - 1:
                raise _Unresolved(f"stationary value indistinguishable from zero at alpha={p:.12g}")
            v = 0.0
        values.append(v)

    roots = []
    for i, (p, v) in enumerate(zip(points, values)):
        if v == 0.0:
            if not roots or roots[-1] != p:
                roots.append(p)
            continue
        if i + 1 < len(points):
            q, w = points[i + 1], values[i + 1]
            if w != 0.0 and (v > 0) != (w > 0):
                roots.append(_bisect(u, x, p, q, v > 0))
    return roots


def _bisect(u, x, a, b, positive_at_a):
    for _ in range(_MAX_DEPTH):
        if b - a <= _BISECT_WIDTH:
            return 0.5 * (a + b)
        m = 0.5 * (a + b)
        v, _ = _normalized_eval(u, x, m)
        if v == 0.0:
            return m
        if (v > 0) == positive_at_a:
            a = m
        else:
            b = m
    raise _Unresolved("bisection depth exceeded")


def count_exp_sum_zeros(u: Sequence[float], x: Sequence[float], lo: float, hi: float) -> ZeroCount:
    """Zeros of ``psi(alpha) = sum u_i exp(alpha x_i)`` on ``[lo, hi]``.

    Critical points of the normalised sum are located recursively (its
    derivative is a sum with one term fewer), so ``psi`` is monotone between
    consecutive ones and each sign change is isolated by bisection to width
    1e-9. A stationary value within 1e-12 of zero (relative to the terms) is a
    possible tangential zero and makes the result ``resolved=False``.
    """
    u = np.asarray(u, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if u.size == 0 or u.size != x.size:
        raise ValueError("u and x must be nonempty and of equal length")
    if np.any(u == 0):
        raise ValueError("coefficients must be nonzero")
    if np.any(np.diff(x) <= 0):
        raise ValueError("exponents must be strictly increasing")
    if not lo < hi:
        raise ValueError("need lo < hi")
    bound = u.size - 1
    try:
        roots = _zeros(u, x, float(lo), float(hi))
    except _Unresolved as exc:
        return ZeroCount(-1, (), False, bound, str(exc))
    if len(roots) > bound:
        raise AssertionError(f"{len(roots)} zeros found for a {u.size}-term exponential sum")
    return ZeroCount(len(roots), tuple(roots), True, bound)


def count_zeros(spec: PhaseSpec, lo: float, hi: float) -> ZeroCount:
    """Zeros of ``sum u_i exp(alpha a_{t_i})`` on ``[lo, hi]``."""
    if not spec.repulsion:
        raise ValueError("zero counting needs nonzero coefficients (repulsion mode)")
    return count_exp_sum_zeros(spec.u, spec.nodes(), lo, hi)


def scan_sign_changes(u, x, lo: float, hi: float, points: int = 1_000_000) -> int:
    """Independent check: sign changes of the sum on a uniform grid (exact zeros count once)."""
    u = np.asarray(u, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    grid = np.linspace(lo, hi, points)
    e = np.outer(grid, x)
    e -= e.max(axis=1, keepdims=True)
    s = np.sign(np.exp(e) @ u)
    nz = s[s != 0]
    return int(np.count_nonzero(nz[1:] != nz[:-1]) + np.count_nonzero(s == 0))


# ---------------------------------------------------------------------------
# oscillatory integrals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OscillatoryIntegral:
    value: complex
    error: float
    panels: int
    frequency: float

    def __abs__(self):
        return abs(self.value)


def _panel_edges(au: np.ndarray, x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Edges of panels no wider than a quarter of the local period of ``e(phi)``.

    The local frequency (cycles per unit alpha) is ``|phi'|``, bounded on
    ``[c, d]`` by ``sum |u_i| x_i exp(d x_i)``. Coarse cells of width
    ``<= 1/max x`` are split uniformly according to the bound at their right end.
    """
    xmax = max(float(x.max()), 1.0)
    ncoarse = max(1, int(math.ceil((hi - lo) * xmax)))
    coarse = np.linspace(lo, hi, ncoarse + 1)
    right = coarse[1:]
    bound = np.exp(np.outer(right, x)) @ (au * x)
    width = np.diff(coarse)
    nsub = np.maximum(1, np.ceil(width * 4.0 * bound)).astype(np.int64)
    owner = np.repeat(np.arange(ncoarse), nsub)
    offs = np.arange(nsub.sum()) - np.repeat(np.cumsum(nsub) - nsub, nsub)
    left = coarse[:-1][owner] + width[owner] * offs / nsub[owner]
    return np.append(left, hi)


def _gauss_sum(u, x, edges, nodes, weights) -> complex:
    total = 0.0 + 0.0j
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    per_block = max(1, _NODE_BLOCK // nodes.size)
    for s in range(0, a.size, per_block):
        alpha = (mid[s : s + per_block, None] + half[s : s + per_block, None] * nodes).ravel()
        phi = np.exp(np.outer(alpha, x)) @ u
        frac = phi - np.floor(phi)
        vals = np.exp(2j * np.pi * frac).reshape(-1, nodes.size)
        total += np.sum((vals @ weights) * half[s : s + per_block])
    return complex(total)


def oscillatory_integral(spec: PhaseSpec, J: IntervalJ, order: int = _GAUSS_ORDER) -> OscillatoryIntegral:
    """``int_J e(phi(u, t, alpha)) d alpha`` with ``e(z) = exp(2 pi i z)``.

    Gauss-Legendre panels of at most a quarter local period; the returned value
    uses every panel halved and ``error`` is its difference from the unhalved
    rule.

    Raises
    ------
    FrequencyCeilingError
        If ``F = sum |u_i| a_{t_i} exp((A+1) a_{t_i})``, an upper bound on
        ``max_J |phi'|``, exceeds ``1e7``.
    """
    lo, hi = J.bounds
    u = np.asarray(spec.u, dtype=np.float64)
    x = spec.nodes()
    au = np.abs(u)
    with np.errstate(over="ignore"):
        F = float(np.sum(au * x * np.exp(hi * x)))
    if not F <= FREQUENCY_CEILING:
        raise FrequencyCeilingError(F)
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = _panel_edges(au, x, lo, hi)
    coarse = _gauss_sum(u, x, edges, nodes, weights)
    fine_edges = np.empty(2 * edges.size - 1)
    fine_edges[0::2] = edges
    fine_edges[1::2] = 0.5 * (edges[:-1] + edges[1:])
    fine = _gauss_sum(u, x, fine_edges, nodes, weights)
    return OscillatoryIntegral(fine, abs(fine - coarse), fine_edges.size - 1, F)


# ---------------------------------------------------------------------------
# partial summation identity
# ---------------------------------------------------------------------------


def delta_identity_residual(x: Sequence[int], n: Sequence[int], alpha, a: ASequence | None = None) -> float:
    """Relative gap between ``<Delta(x, alpha), n>`` and ``phi(h(n), x, alpha)``.

    ``Delta`` uses the unreduced terms ``exp(alpha a_{x_i})``. The two sides
    are evaluated separately in high precision; the result is
    ``|lhs - rhs| / max(1, |lhs|)``.
    """
    a = Linear() if a is None else a
    x = [int(v) for v in x]
    n = [int(v) for v in n]
    if len(n) != len(x) - 1 or len(x) < 2:
        raise ValueError("need len(n) == len(x) - 1 >= 1")
    if len(set(x)) != len(x) or min(x) < 1:
        raise ValueError("indices must be distinct positive integers")
    al = float(parse_alpha(alpha))
    mag = abs(al) * max(a.value_float(v) for v in x) * math.log2(math.e)
    mag += math.log2(2 * max(1, max(abs(v) for v in n)) * len(x))
    prec = int(math.ceil(max(mag, 0.0))) + 53 + 64
    h = h_map(n).tolist()
    with gmpy2.context(gmpy2.get_context(), precision=prec):
        alpha_mp = alpha_to_mpfr(parse_alpha(alpha))
        theta = [gmpy2.exp(alpha_mp * a.value(v)) for v in x]
        lhs = gmpy2.fsum([ni * (theta[i] - theta[i + 1]) for i, ni in enumerate(n)])
        # rhs recomputes the terms independently
        rhs = gmpy2.fsum([hi * gmpy2.exp(alpha_mp * a.value(v)) for hi, v in zip(h, x)])
        return float(abs(lhs - rhs) / max(mpfr(1), abs(lhs)))

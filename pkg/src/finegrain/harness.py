"""Seeded experiments over the dilation parameter.

Almost-everywhere statements are probed by drawing parameters uniformly from
``J = [A, A+1]`` with a counter-based generator (numpy's Philox) and voting
over the draws. The variance of the correlation sum over ``J`` is estimated by
Monte Carlo with centring ``C_k(N) * integral(f)``.
"""

from __future__ import annotations

import functools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .correlation import (
    BoxRegion,
    ck_factor,
    correlate_box,
    correlate_triangle,
    gap_distribution,
)
from .generator import PrecisionCeilingError, generate
from .sequences import ASequence, ExpLinear, GeometricBase, SequenceSpec, Sqrt, _a_from_dict
from .spectral import IntervalJ

__all__ = [
    "GENERATOR_ID",
    "TriangleF",
    "SpecTemplate",
    "StatEntry",
    "TrialConfig",
    "TrialReport",
    "VarianceCurve",
    "ExperimentResult",
    "make_rng",
    "sample_alphas",
    "convergence_trial",
    "majority_experiment",
    "variance_estimate",
    "variance_curve",
    "decay_slope",
    "triangle_transform",
    "fourier_side_r2",
]

GENERATOR_ID = "numpy.random.Philox"


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def sample_alphas(J: IntervalJ, M: int, seed: int) -> np.ndarray:
    """``M`` i.i.d. uniform draws from ``[A, A+1]`` (Philox, reproducible from ``seed``)."""
    if M < 1:
        raise ValueError("M must be >= 1")
    lo, hi = J.bounds
    return lo + make_rng(seed).random(int(M)) * (hi - lo)


# ---------------------------------------------------------------------------
# test functions and templates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TriangleF:
    """``f(x) = prod_i (1 - |x_i| / s_i)_+`` on R^(k-1)."""

    s: tuple
    k: int = 2

    def __post_init__(self):
        s = tuple(float(v) for v in np.broadcast_to(np.asarray(self.s, dtype=float), (self.k - 1,)))
        object.__setattr__(self, "s", s)

    @property
    def integral(self) -> float:
        return math.prod(self.s)

    def __str__(self):
        return "triangle(" + ",".join(f"{v:.17g}" for v in self.s) + ")"


def _integral(f) -> float:
    return f.volume if isinstance(f, BoxRegion) else f.integral


def _evaluate(f, points) -> float:
    if isinstance(f, BoxRegion):
        return correlate_box(points, f).value
    return correlate_triangle(points, f.s, f.k)


def _describe(f) -> dict:
    if isinstance(f, BoxRegion):
        return {"type": "box", "intervals": [list(iv) for iv in f.intervals]}
    return {"type": "triangle", "s": list(f.s), "k": f.k}


@dataclass(frozen=True)
class SpecTemplate:
    """A sequence family indexed by the sampled parameter.

    ``mode="geom"`` gives ``GeometricBase(beta=alpha)``; ``mode="exp"`` gives
    ``ExpLinear(alpha, a)``.
    """

    mode: str = "exp"
    a: ASequence = field(default_factory=Sqrt)
    bits: int = 53

    def __post_init__(self):
        if self.mode not in ("exp", "geom"):
            raise ValueError(f"unknown template mode {self.mode!r}")

    def instantiate(self, alpha) -> SequenceSpec:
        if self.mode == "geom":
            return GeometricBase(alpha, bits=self.bits)
        return ExpLinear(alpha, self.a, self.bits)

    def to_dict(self) -> dict:
        if self.mode == "geom":
            return {"mode": "geom", "bits": self.bits}
        return {"mode": "exp", "a": self.a.to_dict(), "bits": self.bits}

    @classmethod
    def from_dict(cls, d: dict) -> "SpecTemplate":
        if d["mode"] == "geom":
            return cls("geom", bits=int(d.get("bits", 53)))
        return cls("exp", _a_from_dict(d["a"]), int(d.get("bits", 53)))


# ---------------------------------------------------------------------------
# convergence trials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StatEntry:
    name: str
    value: float
    reference: float
    deviation: float
    threshold: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "reference": self.reference,
            "deviation": self.deviation,
            "threshold": self.threshold,
            "pass": self.passed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StatEntry":
        return cls(d["name"], d["value"], d["reference"], d["deviation"], d["threshold"], bool(d["pass"]))


@dataclass(frozen=True)
class TrialConfig:
    """Boxes with their thresholds on ``|R_k - vol|`` and a gap test on ``s_grid``."""

    boxes: tuple = (BoxRegion(((-1.0, 1.0),)),)
    box_thresholds: tuple = (0.1,)
    s_grid: tuple = tuple(np.round(np.linspace(0.0, 5.0, 101), 10))
    gap_threshold: float | None = 0.03

    def __post_init__(self):
        if len(self.boxes) != len(self.box_thresholds):
            raise ValueError("one threshold per box")

    def to_dict(self) -> dict:
        return {
            "boxes": [str(b) for b in self.boxes],
            "box_thresholds": list(self.box_thresholds),
            "s_grid": [float(s) for s in self.s_grid],
            "gap_threshold": self.gap_threshold,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrialConfig":
        return cls(
            tuple(BoxRegion.parse(b) for b in d["boxes"]),
            tuple(d["box_thresholds"]),
            tuple(d["s_grid"]),
            d["gap_threshold"],
        )


@dataclass(frozen=True)
class TrialReport:
    """One experiment; ``deviation = |value - reference|`` for every statistic."""

    seed: int | None
    alpha: float | None
    spec: dict
    N: int
    stats: tuple
    generator: str = GENERATOR_ID
    runtime_ms: float = 0.0
    reason: str | None = None

    @property
    def passed(self) -> bool:
        return self.reason is None and all(s.passed for s in self.stats)

    def to_dict(self) -> dict:
        d = {
            "generator": self.generator,
            "seed": self.seed,
            "alpha": self.alpha,
            "spec": self.spec,
            "N": self.N,
            "stats": [s.to_dict() for s in self.stats],
            "runtime_ms": self.runtime_ms,
        }
        if self.reason is not None:
            d["reason"] = self.reason
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrialReport":
        return cls(
            d["seed"],
            d["alpha"],
            d["spec"],
            d["N"],
            tuple(StatEntry.from_dict(s) for s in d["stats"]),
            d["generator"],
            d["runtime_ms"],
            d.get("reason"),
        )


def _entry(name, value, reference, threshold) -> StatEntry:
    dev = abs(value - reference)
    return StatEntry(name, float(value), float(reference), float(dev), float(threshold), bool(dev <= threshold))


def convergence_trial(
    template: SpecTemplate,
    alpha: float | None,
    N: int,
    config: TrialConfig = TrialConfig(),
    *,
    seed: int | None = None,
    points=None,
    timed: bool = False,
) -> TrialReport:
    """Compare ``R_k`` on each box with ``vol`` and the gap CDF with ``1 - exp(-s)``.

    ``N + 1`` terms are generated: ``R_k`` uses the first ``N``, the gap
    statistic all ``N + 1``. Passing ``points`` (length ``N`` or ``N + 1``)
    bypasses the generator; the gap statistic then uses all of them. Generation failures produce a report with ``reason`` set.
    ``runtime_ms`` is recorded only with ``timed=True`` so reports stay
    byte-reproducible by default.
    """
    start = time.perf_counter()
    spec_dict = template.instantiate(alpha).to_dict() if points is None else {"mode": "injected"}
    if points is None:
        try:
            seq = generate(template.instantiate(alpha), N + 1)
        except PrecisionCeilingError as exc:
            return TrialReport(seed, alpha, spec_dict, N, (), reason=str(exc))
        values = seq.values
    else:
        values = np.asarray(getattr(points, "values", points), dtype=np.float64)
        if values.size not in (N, N + 1):
            raise ValueError(f"injected points must have N or N + 1 entries, got {values.size}")

    stats = []
    for box, thr in zip(config.boxes, config.box_thresholds):
        res = correlate_box(values[:N], box)
        stats.append(_entry(f"R{box.k}[{box}]", res.value, res.poisson_reference, thr))
    if config.gap_threshold is not None:
        hist = gap_distribution(values, config.s_grid)
        stats.append(_entry("gap_sup", hist.sup_deviation(), 0.0, config.gap_threshold))
    runtime = round((time.perf_counter() - start) * 1000.0, 3) if timed else 0.0
    return TrialReport(seed, None if alpha is None else float(alpha), spec_dict, N, tuple(stats), runtime_ms=runtime)


@dataclass(frozen=True)
class ExperimentResult:
    reports: tuple
    required: int

    @property
    def passes(self) -> int:
        return sum(r.passed for r in self.reports)

    @property
    def passed(self) -> bool:
        return self.passes >= self.required


def majority_experiment(
    template: SpecTemplate,
    J: IntervalJ,
    N: int,
    config: TrialConfig = TrialConfig(),
    *,
    trials: int = 10,
    required: int = 8,
    seed: int = 0,
    workers: int = 1,
) -> ExperimentResult:
    """Run ``trials`` seeded parameters; pass when at least ``required`` pass.

    With ``workers > 1`` trials run in separate processes; results are
    collected in sampling order, so the outcome does not depend on scheduling.
    """
    alphas = [float(a) for a in sample_alphas(J, trials, seed)]
    run = functools.partial(_trial_for, template, N, config, seed)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = tuple(pool.map(run, alphas))
    else:
        reports = tuple(map(run, alphas))
    return ExperimentResult(reports, required)


def _trial_for(template, N, config, seed, alpha):
    return convergence_trial(template, alpha, N, config, seed=seed)


# ---------------------------------------------------------------------------
# variance over J
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VarianceCurve:
    k: int
    f: object
    A: float
    M: int
    points: tuple  # (N, variance, stderr)

    def __post_init__(self):
        Ns = [p[0] for p in self.points]
        if any(b <= a for a, b in zip(Ns, Ns[1:])):
            raise ValueError("N values must increase")

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "f": _describe(self.f),
            "A": self.A,
            "M": self.M,
            "points": [{"N": n, "variance": v, "stderr": e} for n, v, e in self.points],
        }


def _moments(devs: np.ndarray) -> tuple:
    sq = devs**2
    var = float(np.mean(sq))
    err = float(np.std(sq, ddof=1) / math.sqrt(sq.size)) if sq.size > 1 else float("nan")
    return var, err


def variance_estimate(
    k: int,
    f,
    N: int,
    J: IntervalJ,
    M: int,
    seed: int,
    a: ASequence | None = None,
    *,
    statistic: Callable[[float, int], float] | None = None,
) -> tuple:
    """Monte Carlo estimate of ``int_J (R_k(f, alpha, N) - C_k(N) int f)**2 d alpha``.

    Returns ``(variance, standard_error)``; the error is the standard error of
    the mean of the squared deviations. ``statistic(alpha, N)`` replaces the
    generated correlation sum (test hook).
    """
    if M < 2:
        raise ValueError("M must be >= 2")
    curve = variance_curve(k, f, [N], J, M, seed, a, statistic=statistic)
    _, var, err = curve.points[0]
    return var, err


def variance_curve(
    k: int,
    f,
    Ns: Sequence[int],
    J: IntervalJ,
    M: int,
    seed: int,
    a: ASequence | None = None,
    *,
    statistic: Callable[[float, int], float] | None = None,
) -> VarianceCurve:
    """Variance estimates for several ``N`` from one set of sampled parameters.

    Each parameter's sequence is generated once at ``max(Ns)`` (enough
    precision for every prefix) and the prefixes are evaluated.
    """
    if M < 2:
        raise ValueError("M must be >= 2")
    Ns = [int(n) for n in Ns]
    if isinstance(f, BoxRegion) and f.k != k or isinstance(f, TriangleF) and f.k != k:
        raise ValueError("test function dimension does not match k")
    a = Sqrt() if a is None else a
    alphas = sample_alphas(J, M, seed)
    devs = np.empty((len(Ns), M))
    centre = [ck_factor(k, n) * _integral(f) for n in Ns]
    for j, alpha in enumerate(alphas):
        if statistic is None:
            values = generate(ExpLinear(float(alpha), a), max(Ns)).values
        for i, n in enumerate(Ns):
            r = statistic(float(alpha), n) if statistic is not None else _evaluate(f, values[:n])
            devs[i, j] = r - centre[i]
    pts = tuple((n, *_moments(devs[i])) for i, n in enumerate(Ns))
    return VarianceCurve(k, f, J.A, M, pts)


def decay_slope(curve, min_points: int = 3) -> float:
    """Least-squares slope of ``log variance`` against ``log N``.

    ``curve`` is a :class:`VarianceCurve` or a sequence of ``(N, variance)``
    pairs. Nonpositive variances are dropped.
    """
    pts = curve.points if isinstance(curve, VarianceCurve) else curve
    data = [(p[0], p[1]) for p in pts if p[1] > 0]
    if len(data) < min_points:
        raise ValueError(f"need at least {min_points} positive variance entries, have {len(data)}")
    x = np.log([d[0] for d in data])
    y = np.log([d[1] for d in data])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


# ---------------------------------------------------------------------------
# Fourier side of the pair correlation
# ---------------------------------------------------------------------------

_DYADIC = 53
_MASK = (1 << _DYADIC) - 1


def triangle_transform(xi, s: float = 1.0):
    """Fourier transform of ``(1 - |x|/s)_+``: ``s * sinc(s xi)**2``."""
    return s * np.sinc(s * np.asarray(xi, dtype=np.float64)) ** 2


def _dyadic(points) -> np.ndarray:
    """Points as integers ``m`` with ``theta = m / 2**53`` (rounded to that grid)."""
    th = np.asarray(getattr(points, "values", points), dtype=np.float64)
    m = np.rint(th * float(1 << _DYADIC)).astype(np.int64)
    return m & _MASK


def _frac_mul(n: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Exact fractional part of ``n * m / 2**53`` for ``n < 2**37``, ``0 <= m < 2**53``."""
    n = n.astype(np.uint64)
    m = m.astype(np.uint64)
    hi = m >> np.uint64(26)
    lo = m & np.uint64((1 << 26) - 1)
    r = ((n * hi) & np.uint64((1 << 27) - 1)) << np.uint64(26)
    r = (r + n * lo) & np.uint64(_MASK)
    return r.astype(np.float64) / float(1 << _DYADIC)


def fourier_side_r2(
    points,
    s: float = 1.0,
    eps: float = 0.5,
    *,
    transform: Callable | None = None,
    method: str = "frequency",
) -> float:
    """Truncated Poisson-summation form of the pair correlation for a triangle.

    ``C_2(N) s + N**-2 sum_{x != y} sum_{1 <= |n| <= N**(1+eps)} fhat(n/N) e(n (theta_x - theta_y))``

    ``method="frequency"`` uses ``sum_{x != y} e(n d_xy) = |S(n)|**2 - N`` with
    ``S(n) = sum_x e(n theta_x)``; ``method="tuple"`` sums over pairs directly.
    Phases are reduced exactly after rounding the points to multiples of
    ``2**-53``. ``transform(xi)`` overrides the triangle transform.
    """
    m = _dyadic(points)
    N = m.size
    if N < 2:
        raise ValueError("need at least two points")
    if eps < 0:
        raise ValueError("eps must be >= 0")
    L = int(math.floor(N ** (1.0 + eps) + 1e-9))
    if L >= 1 << 37:
        raise ValueError("frequency range too large")
    fhat = (lambda xi: triangle_transform(xi, s)) if transform is None else transform
    ns = np.arange(1, L + 1, dtype=np.int64)
    coef = np.asarray(fhat(ns / N), dtype=np.float64) * np.ones(L)
    base = ck_factor(2, N) * s

    if method == "frequency":
        block = max(1, (1 << 21) // N)
        acc = []
        for i in range(0, L, block):
            nb = ns[i : i + block]
            ph = _frac_mul(nb[:, None], m[None, :])
            S = np.exp(2j * np.pi * ph).sum(axis=1)
            acc.append(coef[i : i + block] * (np.abs(S) ** 2 - N))
        # +n and -n contribute equally
        return base + 2.0 * math.fsum(np.concatenate(acc)) / N**2
    if method == "tuple":
        xi, yi = np.nonzero(~np.eye(N, dtype=bool))
        diff = (m[xi] - m[yi]) & _MASK
        block = max(1, (1 << 22) // L)
        acc = []
        for i in range(0, diff.size, block):
            ph = _frac_mul(ns[None, :], diff[i : i + block, None])
            acc.append(np.cos(2.0 * np.pi * ph) @ coef)
        return base + 2.0 * math.fsum(np.concatenate(acc)) / N**2
    raise ValueError(f"unknown method {method!r}")

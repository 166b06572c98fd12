"""Acceptance checks bundled as suites.

Each ``criterion_*`` function runs one check at its fixed tolerance and returns
a :class:`Check` carrying the measured quantities. Statistical thresholds were
calibrated by pilot runs at ``PILOT_SEED`` (raw pilot output lives in
``tests/fixtures``) and are frozen here.
"""

from __future__ import annotations

import functools
import inspect
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .correlation import (
    BoxRegion,
    correlate_box,
    correlate_box_bruteforce,
    correlate_triangle,
    gap_distribution,
)
from .generator import generate, verify_stability
from .harness import (
    SpecTemplate,
    TrialConfig,
    decay_slope,
    fourier_side_r2,
    majority_experiment,
    make_rng,
    sample_alphas,
    variance_curve,
)
from .sequences import (
    DilatedInteger,
    DirectSequence,
    ExpLinear,
    GeometricBase,
    Linear,
    LogSquared,
    Sqrt,
)
from .spectral import (
    FrequencyCeilingError,
    IntervalJ,
    PhaseSpec,
    count_exp_sum_zeros,
    delta_identity_residual,
    h_map,
    min_van_over_J,
    oscillatory_integral,
    repulsion_lower_bounds,
    scan_sign_changes,
    vandermonde_bound_ratio,
    vandermonde_inverse,
)

__all__ = ["Check", "PILOT_SEED", "SUITES", "run_suite"]

PILOT_SEED = 2024

# frozen thresholds
BOX_R2_TOL = 0.1
BOX_R3_TOL = 0.15
GAP_SUP_TOL = 0.03
CONTROL_R2_TOL = 0.1
CONTROL_GAP_MIN = 0.03
SLOPE_MAX = -0.6
# pilot max |fourier - direct| at N=500 was 6.2e-5 over ten parameters
FOURIER_DIRECT_TOL = 1e-4
REORG_TOL = 1e-9
VANDERMONDE_TOL = 1e-10
IDENTITY_TOL = 1e-12
STABILITY_TOL = 2.0**-40


@dataclass
class Check:
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {"name": self.name, "pass": bool(self.passed), "metrics": self.metrics}


def _timed(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        check = fn(*args, **kwargs)
        check.seconds = time.perf_counter() - start
        return check

    return wrapper


# ---------------------------------------------------------------------------
# correlation
# ---------------------------------------------------------------------------

# the k=4 brute force is O(N**4), so its instances stay smaller
_ORACLE_N = {2: (2, 300), 3: (3, 300), 4: (4, 200)}


def _random_points(rng, N: int) -> np.ndarray:
    kind = rng.integers(3)
    if kind == 0:
        return rng.random(N)
    if kind == 1:
        # coarse grid: many exact boundary hits and ties
        return rng.integers(0, 4 * N, N) / (4.0 * N)
    return (np.arange(N) / N + rng.random() / N) % 1.0


def _random_box(rng, k: int, N: int) -> BoxRegion:
    r = min(N / 4.0, 4.0)
    ivs = []
    for _ in range(k - 1):
        if rng.random() < 0.5:
            # half-integer endpoints land exactly on lattice differences
            a, b = sorted(rng.choice(np.arange(-int(r * 2), int(r * 2) + 1), 2, replace=False) / 2.0)
        else:
            a, b = sorted(rng.uniform(-r, r, 2))
        ivs.append((float(a), float(b)))
    return BoxRegion(tuple(ivs))


@_timed
def criterion_oracle(seed: int = PILOT_SEED, instances: int = 50) -> Check:
    """Fast correlation count equals brute force exactly (k = 2, 3, 4)."""
    rng = make_rng(seed)
    mismatches = []
    for k in (2, 3, 4):
        lo, hi = _ORACLE_N[k]
        for i in range(instances):
            N = int(rng.integers(lo, hi + 1))
            pts = _random_points(rng, N)
            box = _random_box(rng, k, N)
            fast = correlate_box(pts, box).raw_count
            slow = correlate_box_bruteforce(pts, box).raw_count
            if fast != slow:
                mismatches.append({"k": k, "instance": i, "N": N, "box": str(box), "fast": fast, "brute": slow})
    return Check("oracle_equivalence", not mismatches, {"instances_per_k": instances, "mismatches": mismatches})


@_timed
def criterion_closed_forms() -> Check:
    """Lattice closed forms with zero tolerance."""
    failures = []
    for N in (10, 1_000_000):
        pts = np.arange(N) / N
        for s in (0.5, 1.0, 2.5):
            got = correlate_box(pts, BoxRegion.symmetric(s)).value
            if got != 2 * math.floor(s):
                failures.append({"N": N, "s": s, "value": got})
    pts = np.arange(10) / 10
    r3 = correlate_box(pts, BoxRegion.parse("0.5:1.5,0.5:1.5")).value
    if r3 != 1.0:
        failures.append({"k3_box": r3})
    # N + 1 = 10 lattice points: every normalised gap is 0.9
    grid = np.array([0.0, 0.5, 0.89, 0.899999, 0.900001, 0.95, 1.0, 2.0, 5.0])
    G = gap_distribution(np.arange(10) / 10, grid).G_values
    step = (grid >= 0.9).astype(float)
    if not np.array_equal(G, step):
        failures.append({"gap_cdf": G.tolist()})
    return Check("closed_forms", not failures, {"failures": failures})


# ---------------------------------------------------------------------------
# experiments over the parameter
# ---------------------------------------------------------------------------

_EXPERIMENT_CONFIG = TrialConfig(
    boxes=(BoxRegion.parse("-1:1"), BoxRegion.parse("0:1,0:1")),
    box_thresholds=(BOX_R2_TOL, BOX_R3_TOL),
    gap_threshold=GAP_SUP_TOL,
)


def _experiment(name: str, template: SpecTemplate, N: int, seed: int) -> Check:
    res = majority_experiment(template, IntervalJ(2.0), N, _EXPERIMENT_CONFIG, trials=10, required=8, seed=seed)
    rows = [{"alpha": r.alpha, "pass": r.passed, **{s.name: s.value for s in r.stats}} for r in res.reports]
    return Check(name, res.passed, {"N": N, "passes": res.passes, "required": 8, "trials": rows})


@_timed
def criterion_geometric(seed: int = PILOT_SEED) -> Check:
    """Powers ``alpha**n`` for alpha uniform in [2, 3], N = 5e4."""
    return _experiment("geometric_poisson", SpecTemplate("geom"), 50_000, seed)


@_timed
def criterion_sublacunary(seed: int = PILOT_SEED) -> Check:
    """``exp(alpha sqrt(n))`` for alpha uniform in [2, 3], N = 1e5."""
    return _experiment("sublacunary_poisson", SpecTemplate("exp", Sqrt()), 100_000, seed)


@_timed
def criterion_negative_control() -> Check:
    """``sqrt(n)`` over non-squares: Poissonian pairs, non-exponential gaps."""
    N = 100_000
    vals = generate(DirectSequence(Sqrt()), N + 1).values
    r2 = correlate_box(vals[:N], BoxRegion.parse("-1:1")).value
    gap = gap_distribution(vals, _EXPERIMENT_CONFIG.s_grid).sup_deviation()
    ok = abs(r2 - 2.0) <= CONTROL_R2_TOL and gap > CONTROL_GAP_MIN
    return Check("negative_control", ok, {"R2": r2, "gap_sup": gap})


@_timed
def criterion_variance(seed: int = PILOT_SEED, M: int = 100) -> Check:
    """Log-log decay of the variance over J = [2, 3]."""
    curve = variance_curve(2, BoxRegion.parse("-1:1"), [1000, 2000, 4000, 8000, 16000], IntervalJ(2.0), M, seed)
    slope = decay_slope(curve)
    return Check("variance_decay", slope <= SLOPE_MAX, {"slope": slope, "curve": curve.to_dict()})


# ---------------------------------------------------------------------------
# identities and Fourier side
# ---------------------------------------------------------------------------


@_timed
def criterion_identity(seed: int = PILOT_SEED, instances: int = 1000, h_samples: int = 100_000) -> Check:
    """Partial summation identity and the h-map relations."""
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(instances):
        k = int(rng.integers(2, 6))
        x = rng.choice(np.arange(1, 61), size=k, replace=False)
        n = rng.integers(-100, 101, k - 1)
        alpha = float(rng.uniform(0.05, 3.0))
        a = (Linear(), Sqrt(), LogSquared())[int(rng.integers(3))]
        worst = max(worst, delta_identity_residual(x, n, alpha, a))
    widths = rng.integers(1, 8, h_samples)
    ok_h = True
    for w in np.unique(widths):
        n = rng.integers(-10**6, 10**6 + 1, ((widths == w).sum(), int(w)))
        h = h_map(n)
        ok_h &= bool(np.all(h.sum(axis=1) == 0))
        ok_h &= bool(np.all(np.abs(h).max(axis=1) <= 2 * np.abs(n).max(axis=1)))
    return Check(
        "summation_identity",
        worst < IDENTITY_TOL and ok_h,
        {"max_residual": worst, "instances": instances, "h_samples": h_samples, "h_relations": ok_h},
    )


@_timed
def criterion_fourier(seed: int = PILOT_SEED) -> Check:
    """Truncated Fourier side against direct space, and the two summation orders."""
    diffs = []
    for alpha in sample_alphas(IntervalJ(2.0), 10, seed):
        v = generate(ExpLinear(float(alpha), Sqrt()), 500).values
        diffs.append(abs(fourier_side_r2(v, 1.0, 0.5) - correlate_triangle(v, 1.0)))
    rng = make_rng(seed + 1)
    reorg = []
    for N in (50, 120, 200):
        pts = rng.random(N)
        a = fourier_side_r2(pts, 1.0, 0.5, method="frequency")
        b = fourier_side_r2(pts, 1.0, 0.5, method="tuple")
        reorg.append(abs(a - b))
    ok = max(diffs) <= FOURIER_DIRECT_TOL and max(reorg) <= REORG_TOL
    return Check("fourier_side", ok, {"max_direct_diff": max(diffs), "max_reorg_diff": max(reorg)})


# ---------------------------------------------------------------------------
# spectral
# ---------------------------------------------------------------------------


def _spaced_nodes(rng, ell: int, gamma: float) -> list:
    """Increasing positive nodes with minimum spacing exactly ``gamma``."""
    gaps = gamma + rng.exponential(0.5, ell - 1)
    if ell > 1:
        gaps[rng.integers(ell - 1)] = gamma
    x0 = float(rng.uniform(0.05, 2.0))
    return [x0] + list(x0 + np.cumsum(gaps))


@_timed
def criterion_vandermonde(seed: int = PILOT_SEED, instances: int = 1000) -> Check:
    """Closed-form inverse accuracy and its a-priori norm bound, l <= 6."""
    rng = make_rng(seed)
    worst_res, worst_ratio, violations = 0.0, 0.0, 0
    for ell in range(1, 7):
        for i in range(instances):
            gamma = 1e-3 if i % 4 == 0 else float(rng.uniform(1e-3, 1.0))
            x = _spaced_nodes(rng, ell, gamma)
            vi = vandermonde_inverse(x)
            worst_res = max(worst_res, vi.residual)
            ratio = vandermonde_bound_ratio(x, vi)
            worst_ratio = max(worst_ratio, ratio / 2 ** (ell - 1))
            violations += ratio > 2 ** (ell - 1) * (1 + 1e-12)
    ok = worst_res <= VANDERMONDE_TOL and violations == 0
    return Check(
        "vandermonde_inverse",
        ok,
        {"max_residual": worst_res, "max_norm_over_bound": worst_ratio, "bound_violations": violations},
    )


def _zero_instance(rng, i: int):
    """Alternate between four-term integer sums on x = (1, 2, 3, 4) and random real sums."""
    if i % 2 == 0:
        u = rng.choice([-5, -4, -3, -2, -1, 1, 2, 3, 4, 5], 4).astype(float)
        return u, np.arange(1.0, 5.0), -3.0, 3.0
    ell = int(rng.integers(1, 7))
    x = np.sort(rng.choice(np.arange(0, 61), ell, replace=False)) / 20.0
    u = rng.uniform(-1.0, 1.0, ell)
    u[u == 0] = 1.0
    return u, x, -4.0, 4.0


@_timed
def criterion_zero_counts(seed: int = PILOT_SEED, instances: int = 200) -> Check:
    """At most l-1 zeros, cross-checked by a sign-change scan on 1e6 points."""
    rng = make_rng(seed)
    bad, unresolved, disagree = [], 0, 0
    for i in range(instances):
        u, x, lo, hi = _zero_instance(rng, i)
        ell = u.size
        zc = count_exp_sum_zeros(u, x, lo, hi)
        scan = scan_sign_changes(u, x, lo, hi)
        if not zc.resolved:
            unresolved += 1
            if scan > ell - 1:
                bad.append({"instance": i, "scan": scan, "ell": ell})
            continue
        disagree += zc.count != scan
        if zc.count > ell - 1 or scan > zc.count:
            bad.append({"instance": i, "count": zc.count, "scan": scan, "ell": ell})
    return Check(
        "zero_counts",
        not bad,
        {"instances": instances, "violations": bad, "unresolved": unresolved, "scan_disagreements": disagree},
    )


DECAY_T = (5, 10, 20, 40)


def vdc_constant(ell: int) -> float:
    """Classical van der Corput constant ``5 * 2**(l-1) - 2`` used as the trend cap."""
    return 5.0 * 2 ** (ell - 1) - 2.0


DECAY_J = IntervalJ(0.1)


@_timed
def criterion_oscillatory(seed: int = PILOT_SEED, instances: int = 30) -> Check:
    """``|I| <= 1`` on random phases and strict decay along ``t_l``."""
    rng = make_rng(seed)
    worst, vdc = 0.0, 0.0
    done = 0
    for _ in range(instances):
        ell = int(rng.integers(1, 4))
        t = np.sort(rng.choice(np.arange(1, 31), ell, replace=False))
        u = rng.choice([-3, -2, -1, 1, 2, 3], ell)
        spec = PhaseSpec(tuple(u), tuple(t))
        J = IntervalJ(float(rng.uniform(0.1, 1.0)))
        try:
            res = oscillatory_integral(spec, J)
        except FrequencyCeilingError:
            continue
        done += 1
        worst = max(worst, abs(res.value) - res.error)
        # van der Corput trend: |I| * lambda**(1/l) stays bounded
        lam = min_van_over_J(spec, J, 1000).value
        vdc = max(vdc, abs(res.value) * lam ** (1.0 / ell) / vdc_constant(ell))
    decay = [abs(oscillatory_integral(PhaseSpec((1, -1), (1, tl)), DECAY_J).value) for tl in DECAY_T]
    strictly = all(b < a for a, b in zip(decay, decay[1:]))
    return Check(
        "oscillatory_integral",
        worst <= 1.0 and strictly and vdc <= 1.0,
        {"evaluated": done, "max_abs_I": worst, "max_vdc_ratio": vdc, "t_ell": list(DECAY_T), "abs_I": decay},
    )


@_timed
def criterion_repulsion(seed: int = PILOT_SEED, instances: int = 20, grid_points: int = 2000) -> Check:
    """Grid minimum of ``Van_l`` exceeds the explicit Vandermonde lower bound."""
    rng = make_rng(seed)
    rows = []
    for _ in range(instances):
        ell = int(rng.integers(1, 5))
        t = np.sort(rng.choice(np.arange(1, 31), ell, replace=False))
        u = rng.choice([-3, -2, -1, 1, 2, 3], ell)
        spec = PhaseSpec(tuple(u), tuple(t))
        J = IntervalJ(float(rng.choice([0.1, 0.5, 1.0, 2.0])))
        env = min_van_over_J(spec, J, grid_points)
        lb = repulsion_lower_bounds(spec, J)
        rows.append({"u": spec.u, "t": spec.t, "A": J.A, "min_van": env.value, **lb})
    # for l = 1 the bound is attained at alpha = A, a grid point; allow rounding
    slack = 1.0 - 1e-12
    ok = all(r["min_van"] >= slack * r["inverse_norm"] and r["inverse_norm"] >= slack * r["spacing"] for r in rows)
    return Check("van_lower_bound", ok, {"instances": rows})


# ---------------------------------------------------------------------------
# generator
# ---------------------------------------------------------------------------

COVERED_SPECS = (
    (ExpLinear(2.7, Linear()), 400),
    (ExpLinear("ln:2", Linear()), 400),
    (ExpLinear(2.5, Sqrt()), 5000),
    (ExpLinear(1.3, LogSquared()), 5000),
    (GeometricBase(Fraction(3, 2)), 3000),
    (GeometricBase(2.5137), 3000),
    (GeometricBase("exp:1.1"), 1000),
    (DilatedInteger(math.sqrt(2), "square"), 5000),
    (DilatedInteger(math.pi, "power2"), 500),
    (DilatedInteger(Fraction(1, 3), "linear"), 5000),
    (DirectSequence(Sqrt()), 5000),
)


@_timed
def criterion_generator() -> Check:
    """Precision stability on every spec family plus exact geometric cases."""
    stab = {str(spec.to_dict()): verify_stability(spec, N) for spec, N in COVERED_SPECS}
    zeros = bool(np.all(generate(GeometricBase(2), 200).values == 0.0))
    vals = generate(GeometricBase(Fraction(3, 2)), 30).values
    exact = all(vals[n - 1] == float(Fraction(3**n % 2**n, 2**n)) for n in range(1, 31))
    ok = max(stab.values()) < STABILITY_TOL and zeros and exact
    return Check(
        "generator_certification",
        ok,
        {"max_stability_deviation": max(stab.values()), "stability": stab, "base2_zero": zeros, "base3_2_exact": exact},
    )


SUITES = {
    "generator": (criterion_generator,),
    "correlation": (criterion_oracle, criterion_closed_forms),
    "spectral": (
        criterion_identity,
        criterion_vandermonde,
        criterion_zero_counts,
        criterion_oscillatory,
        criterion_repulsion,
    ),
    "fourier": (criterion_fourier,),
    "experiments": (criterion_geometric, criterion_sublacunary, criterion_negative_control),
    "variance": (criterion_variance,),
}


def run_suite(name: str, seed: int = PILOT_SEED) -> list:
    """Run one suite (or ``"all"``) and return its checks."""
    names = list(SUITES) if name == "all" else [name]
    checks = []
    for suite in names:
        if suite not in SUITES:
            raise ValueError(f"unknown suite {suite!r}; choose from {sorted(SUITES)} or 'all'")
        for fn in SUITES[suite]:
            takes_seed = "seed" in inspect.signature(fn).parameters
            checks.append(fn(seed=seed) if takes_seed else fn())
    return checks

import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from finegrain.correlation import BoxRegion, ck_factor
from finegrain.harness import (
    GENERATOR_ID,
    SpecTemplate,
    TrialConfig,
    TrialReport,
    TriangleF,
    VarianceCurve,
    convergence_trial,
    decay_slope,
    fourier_side_r2,
    majority_experiment,
    sample_alphas,
    triangle_transform,
    variance_curve,
    variance_estimate,
)
from finegrain.sequences import Linear, Sqrt
from finegrain.spectral import IntervalJ

J23 = IntervalJ(2.0)
FIXTURES = Path(__file__).parent / "fixtures"


def test_sample_alphas_deterministic():
    a = sample_alphas(J23, 3, 42)
    assert np.array_equal(a, sample_alphas(J23, 3, 42))
    assert not np.array_equal(a, sample_alphas(J23, 3, 43))
    assert np.all((a >= 2) & (a <= 3))


def test_sample_alphas_mean():
    a = sample_alphas(J23, 10_000, 1)
    assert abs(a.mean() - 2.5) <= 0.02
    one = sample_alphas(J23, 1, 5)
    assert one.shape == (1,) and 2 <= one[0] <= 3
    with pytest.raises(ValueError):
        sample_alphas(J23, 0, 1)


def test_trial_with_injected_lattice():
    N = 100
    cfg = TrialConfig(boxes=(BoxRegion.parse("-1:1"),), box_thresholds=(0.0,), gap_threshold=None)
    rep = convergence_trial(SpecTemplate(), None, N, cfg, points=np.arange(N) / N)
    (stat,) = rep.stats
    assert stat.value == 2.0 and stat.reference == 2.0 and stat.deviation == 0.0 and stat.passed
    assert rep.generator == GENERATOR_ID


def test_trial_records_deviation():
    cfg = TrialConfig(
        boxes=(BoxRegion.parse("-1:1"), BoxRegion.parse("0:1,0:1")), box_thresholds=(0.1, 0.15), gap_threshold=0.03
    )
    rep = convergence_trial(SpecTemplate("exp", Linear()), 2.5, 3000, cfg, seed=1)
    assert [s.name for s in rep.stats] == ["R2[-1:1]", "R3[0:1,0:1]", "gap_sup"]
    for s in rep.stats:
        assert s.deviation == abs(s.value - s.reference)
        assert s.passed == (s.deviation <= s.threshold)


def test_trial_generator_failure_becomes_report(monkeypatch):
    monkeypatch.setenv("FINEGRAIN_PRECISION_CEILING", "100")
    rep = convergence_trial(SpecTemplate("exp", Linear()), 2.5, 1000, TrialConfig())
    assert not rep.passed and "precision" in rep.reason and rep.stats == ()


@pytest.mark.slow
def test_exp_linear_trials_match_pilot():
    # the ten-seed pilot (all passed) is in fixtures; rerun two of its parameters
    pilot = json.loads((FIXTURES / "pilot_explinear.json").read_text())
    cfg = TrialConfig(boxes=(BoxRegion.parse("-1:1"),), box_thresholds=(0.1,), gap_threshold=None)
    assert sum(TrialReport.from_dict(r).passed for r in pilot) == 10
    for rec in pilot[:2]:
        rep = convergence_trial(SpecTemplate("exp", Linear()), rec["alpha"], 50_000, cfg, seed=2024)
        assert rep.to_dict() == rec


def test_majority_parallel_matches_serial():
    cfg = TrialConfig(gap_threshold=0.05)
    a = majority_experiment(SpecTemplate(), J23, 2000, cfg, trials=4, required=3, seed=9)
    b = majority_experiment(SpecTemplate(), J23, 2000, cfg, trials=4, required=3, seed=9, workers=2)
    assert a.reports == b.reports


def test_variance_constant_hook_is_zero():
    box = BoxRegion.parse("-1:1")
    var, err = variance_estimate(2, box, 1000, J23, 10, 3, statistic=lambda a, n: ck_factor(2, n) * box.volume)
    assert var == 0.0 and err == 0.0
    with pytest.raises(ValueError):
        variance_estimate(2, box, 1000, J23, 1, 3)


def test_variance_reproducible_and_decreasing():
    box = BoxRegion.parse("-1:1")
    v1 = variance_estimate(2, box, 1000, J23, 100, 7, Sqrt())
    assert v1 == variance_estimate(2, box, 1000, J23, 100, 7, Sqrt())
    assert v1[0] > 0
    curve = variance_curve(2, box, [1000, 4000], J23, 100, 7, Sqrt())
    assert curve.points[0][1] == v1[0]
    assert curve.points[1][1] < curve.points[0][1]


def test_variance_triangle_centering():
    f = TriangleF(0.5)
    var, _ = variance_estimate(2, f, 500, J23, 4, 2, statistic=lambda a, n: ck_factor(2, n) * 0.5 + 0.1)
    assert var == pytest.approx(0.01, abs=1e-15)


def test_decay_slope_examples():
    assert decay_slope([(1000, 1e-3), (2000, 5e-4), (4000, 2.5e-4)]) == pytest.approx(-1.0, abs=1e-12)
    assert decay_slope([(1000, 0.3), (2000, 0.3)], min_points=2) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        decay_slope([(1000, 0.3), (2000, 0.3)])
    with pytest.raises(ValueError):
        decay_slope([(1000, 1e-3), (2000, 0.0), (4000, 2.5e-4)])


def test_variance_curve_needs_increasing_N():
    with pytest.raises(ValueError):
        VarianceCurve(2, BoxRegion.parse("-1:1"), 2.0, 10, ((2000, 1.0, 0.1), (1000, 1.0, 0.1)))


def test_triangle_transform():
    assert triangle_transform(0.0, 2.0) == 2.0
    assert triangle_transform(1.0, 1.0) == pytest.approx(0.0, abs=1e-17)
    assert triangle_transform(0.25, 1.0) == pytest.approx((math.sin(math.pi / 4) / (math.pi / 4)) ** 2)


def test_fourier_zero_hook_gives_constant_term(rng):
    pts = rng.random(50)
    value = fourier_side_r2(pts, 1.5, 0.0, transform=lambda xi: np.zeros_like(xi))
    assert value == ck_factor(2, 50) * 1.5


def test_fourier_lattice_closed_form():
    # S(n) = N for N | n and 0 otherwise; fhat(m) = 0 at nonzero integers when s = 1
    for N in (20, 64, 101):
        L = math.floor(N**1.5 + 1e-9)
        n = np.arange(1, L + 1)
        closed = ck_factor(2, N) - 2.0 / N * np.sum(triangle_transform(n[n % N != 0] / N, 1.0))
        assert fourier_side_r2(np.arange(N) / N, 1.0, 0.5) == pytest.approx(closed, abs=1e-12)


@given(st.integers(2, 80), st.integers(0, 2**32 - 1), st.floats(0.2, 2.0), st.sampled_from([0.0, 0.25, 0.5]))
def test_fourier_reorganisations_agree(N, seed, s, eps):
    pts = np.random.default_rng(seed).random(N)
    a = fourier_side_r2(pts, s, eps, method="frequency")
    b = fourier_side_r2(pts, s, eps, method="tuple")
    assert abs(a - b) <= 1e-9


def test_fourier_bad_method():
    with pytest.raises(ValueError):
        fourier_side_r2(np.arange(5) / 5, 1.0, method="other")

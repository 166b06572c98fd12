"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``ACCEPTANCE <n> PASS|FAIL`` line (outside pytest's
capture) before asserting, so the summary survives in the test log.
"""

import time

import pytest

from finegrain import verify


def _report(capsys, number: int, title: str, checks, seconds: float, limit: float | None = None):
    ok = all(c.passed for c in checks) and (limit is None or seconds < limit)
    detail = ", ".join(f"{c.name}={'pass' if c.passed else 'fail'}" for c in checks)
    budget = f" (limit {limit:.0f}s)" if limit is not None else ""
    with capsys.disabled():
        print(f"\nACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'} {title}: {detail}; {seconds:.1f}s{budget}")
    return ok


def _run(*criteria):
    start = time.perf_counter()
    checks = [c() for c in criteria]
    return checks, time.perf_counter() - start


def test_1_oracle_equivalence(capsys):
    checks, secs = _run(verify.criterion_oracle)
    assert checks[0].metrics["instances_per_k"] == 50
    assert _report(capsys, 1, "fast count equals brute force, k=2,3,4", checks, secs, limit=60.0), checks[0].metrics


def test_2_closed_forms(capsys):
    checks, secs = _run(verify.criterion_closed_forms)
    assert _report(capsys, 2, "lattice closed forms", checks, secs), checks[0].metrics


@pytest.mark.slow
def test_3_geometric_powers(capsys):
    checks, secs = _run(verify.criterion_geometric)
    m = checks[0].metrics
    assert m["N"] == 50_000 and len(m["trials"]) == 10
    assert _report(capsys, 3, f"alpha**n, {m['passes']}/10 trials pass", checks, secs), m


@pytest.mark.slow
def test_4_sublacunary(capsys):
    checks, secs = _run(verify.criterion_sublacunary)
    m = checks[0].metrics
    assert m["N"] == 100_000 and len(m["trials"]) == 10
    assert _report(capsys, 4, f"exp(alpha sqrt n), {m['passes']}/10 trials pass", checks, secs, limit=60.0), m


@pytest.mark.slow
def test_5_negative_control(capsys):
    checks, secs = _run(verify.criterion_negative_control)
    m = checks[0].metrics
    title = f"sqrt n, R2={m['R2']:.4f}, gap sup={m['gap_sup']:.4f}"
    assert _report(capsys, 5, title, checks, secs), m


@pytest.mark.slow
def test_6_variance_decay(capsys):
    checks, secs = _run(verify.criterion_variance)
    m = checks[0].metrics
    assert m["curve"]["M"] == 100
    assert [p["N"] for p in m["curve"]["points"]] == [1000, 2000, 4000, 8000, 16000]
    assert _report(capsys, 6, f"slope {m['slope']:.4f} <= -0.6", checks, secs, limit=1800.0), m


def test_7_summation_identity(capsys):
    checks, secs = _run(verify.criterion_identity)
    m = checks[0].metrics
    assert m["instances"] == 1000 and m["h_samples"] == 100_000
    assert _report(capsys, 7, f"max residual {m['max_residual']:.3g}", checks, secs), m


def test_8_fourier_side(capsys):
    checks, secs = _run(verify.criterion_fourier)
    m = checks[0].metrics
    title = f"direct diff {m['max_direct_diff']:.3g}, reorganisation diff {m['max_reorg_diff']:.3g}"
    assert _report(capsys, 8, title, checks, secs), m


def test_9_spectral_suite(capsys):
    checks, secs = _run(
        verify.criterion_vandermonde,
        verify.criterion_zero_counts,
        verify.criterion_oscillatory,
        verify.criterion_repulsion,
    )
    assert _report(capsys, 9, "spectral suite", checks, secs), [c.metrics for c in checks if not c.passed]


def test_10_generator_certification(capsys):
    checks, secs = _run(verify.criterion_generator)
    assert _report(capsys, 10, "generator certification", checks, secs), checks[0].metrics

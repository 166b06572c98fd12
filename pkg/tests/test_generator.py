import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from finegrain.generator import (
    PrecisionCeilingError,
    circular_distance,
    generate,
    read_cache,
    required_precision,
    verify_stability,
    write_cache,
    write_csv,
)
from finegrain.sequences import (
    DilatedInteger,
    DirectSequence,
    ExpLinear,
    GeometricBase,
    InvalidSpecError,
    Linear,
    LogSquared,
    Sqrt,
    Table,
)


def test_required_precision_examples():
    assert required_precision(ExpLinear(1.1, Linear()), 10_000, 53) == 15987
    assert required_precision(GeometricBase(2), 100, 53) == 217
    # independent recomputation of ceil(1.1 sqrt(1e5) log2 e)
    assert math.ceil(1.1 * math.sqrt(1e5) * math.log2(math.e)) == 502
    assert required_precision(ExpLinear(1.1, Sqrt()), 100_000, 53) == 619


def test_required_precision_rejects_bad_input():
    with pytest.raises(InvalidSpecError):
        required_precision(ExpLinear(1.0), 0)
    with pytest.raises(InvalidSpecError):
        required_precision(ExpLinear(1.0), 5, p=0)


def test_geometric_examples():
    assert generate(GeometricBase(Fraction(3, 2)), 3).values.tolist() == [0.5, 0.25, 0.375]
    assert generate(GeometricBase(2), 5).values.tolist() == [0.0] * 5


def test_geometric_rational_exact_up_to_30():
    vals = generate(GeometricBase("3/2"), 30).values
    for n in range(1, 31):
        assert vals[n - 1] == float(Fraction(3**n % 2**n, 2**n))


def test_exp_ln2_lands_on_integers():
    seq = generate(ExpLinear("ln:2", Linear()), 20)
    assert np.max(circular_distance(seq.values, 0.0)) < 2.0**-40


# values from mpmath at 4000 bits, inputs read exactly from their doubles
ORACLE = [
    (ExpLinear(1.1, Sqrt()), {1: 0.0041660239464333789, 2: 0.73809387432607335, 1000: 0.46262387261928707}),
    (ExpLinear(0.7, Linear()), {1: 0.013752707470476432, 10: 0.63315842845811226, 500: 0.84475426757427699}),
    (ExpLinear(1.3, LogSquared()), {1: 0.86747811315678999, 50: 0.46860763992643622, 400: 0.72137377170544944}),
    (GeometricBase(2.5137), {1: 0.5137, 7: 0.1530944205103839, 100: 0.7233484269512377}),
    (GeometricBase("exp:1.1"), {1: 0.0041660239464331121, 20: 0.13159156168115995, 300: 0.54963574370967297}),
    (DilatedInteger(math.sqrt(2), "square"), {3: 0.7279220613578563, 1000: 0.5623730951454746}),
]


@pytest.mark.parametrize("spec,expected", ORACLE)
def test_values_match_frozen_oracle(spec, expected):
    vals = generate(spec, max(expected)).values
    for n, v in expected.items():
        assert circular_distance(vals[n - 1], v) <= 2.0**-52


def test_direct_sqrt_values():
    vals = generate(DirectSequence(Sqrt()), 3).values
    assert vals == pytest.approx([math.sqrt(2) - 1, math.sqrt(3) - 1, math.sqrt(5) - 2], abs=1e-15)


def test_geometric_and_exponential_paths_agree():
    seq_g = generate(GeometricBase("exp:0.9"), 400)
    seq_e = generate(ExpLinear("0.9", Linear()), 400)
    assert np.max(circular_distance(seq_g.values, seq_e.values)) <= 2 * seq_g.err_bound


@pytest.mark.parametrize(
    "spec,N",
    [(GeometricBase("3/2"), 50), (ExpLinear(0.7, Sqrt()), 1000), (ExpLinear(1.0, Linear()), 1000)],
)
def test_stability_examples(spec, N):
    dev = verify_stability(spec, N, 64)
    assert dev < 2.0**-40
    if isinstance(spec, GeometricBase):
        assert dev == 0.0


def test_fracseq_is_immutable():
    seq = generate(ExpLinear(1.0), 10)
    with pytest.raises(ValueError):
        seq.values[0] = 0.5
    with pytest.raises(AttributeError):
        seq.N = 3


def test_precision_ceiling(monkeypatch):
    with pytest.raises(PrecisionCeilingError, match="needs 15987 bits"):
        generate(ExpLinear(1.1), 10_000, ceiling=10_000)
    monkeypatch.setenv("FINEGRAIN_PRECISION_CEILING", "300")
    with pytest.raises(PrecisionCeilingError):
        generate(GeometricBase(3), 200)
    monkeypatch.setenv("FINEGRAIN_PRECISION_CEILING", "many")
    with pytest.raises(InvalidSpecError):
        generate(GeometricBase(3), 2)


def test_table_flags():
    assert generate(ExpLinear(1.0, Table([1.0, 2.0, 3.0])), 3).flags == ("unchecked",)
    assert generate(ExpLinear(1.0, Table([1.0, 0.5, 3.0])), 3).flags == ("unchecked", "non-monotone")


def test_cache_roundtrip(tmp_path):
    seq = generate(ExpLinear("ln:3", Sqrt()), 100)
    path = tmp_path / "seq.fsq"
    write_cache(seq, path)
    assert path.read_bytes()[:4] == b"FSQ1"
    assert read_cache(path) == seq
    data = path.read_bytes()
    path.write_bytes(data[:-3])
    with pytest.raises(ValueError):
        read_cache(path)


def test_csv_export(tmp_path):
    path = tmp_path / "seq.csv"
    write_csv(generate(GeometricBase("3/2"), 3), path)
    assert path.read_text() == "n,value\n1,0.5\n2,0.25\n3,0.375\n"


@given(
    alpha=st.floats(0.05, 5.0),
    kind=st.sampled_from(["linear", "sqrt", "logsq"]),
    N=st.integers(1, 60),
)
def test_values_in_unit_interval_and_stable(alpha, kind, N):
    a = {"linear": Linear(), "sqrt": Sqrt(), "logsq": LogSquared()}[kind]
    spec = ExpLinear(alpha, a)
    seq = generate(spec, N)
    assert seq.values.shape == (N,)
    assert np.all((seq.values >= 0) & (seq.values < 1))
    assert verify_stability(spec, N, 64) <= 2.0 ** -(53 - 13)


@given(p=st.integers(2, 40), q=st.integers(1, 40), N=st.integers(1, 40))
def test_rational_base_is_exact(p, q, N):
    beta = Fraction(p, q)
    if beta <= 1:
        return
    vals = generate(GeometricBase(beta), N).values
    for n in (1, N):
        b = beta**n
        assert vals[n - 1] == float(b - math.floor(b)) or (vals[n - 1] == 0.0 and float(b - math.floor(b)) == 1.0)


def test_integer_base_zero_property():
    for b in (2, 3, 10):
        assert not generate(GeometricBase(b), 64).values.any()


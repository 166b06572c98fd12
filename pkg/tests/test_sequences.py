import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from finegrain.sequences import (
    DilatedInteger,
    DirectSequence,
    ExpLinear,
    ExpOf,
    GeometricBase,
    InvalidSpecError,
    Linear,
    LogOf,
    LogSquared,
    Sqrt,
    Table,
    a_sequence_from_name,
    parse_alpha,
    parse_rational,
    spec_from_dict,
)


def test_parse_rational_is_exact():
    assert parse_rational("3/2") == Fraction(3, 2)
    assert parse_rational("1.1") == Fraction(11, 10)
    with pytest.raises(InvalidSpecError):
        parse_rational("abc")


def test_parse_alpha_forms():
    assert parse_alpha("ln:2") == LogOf(Fraction(2))
    assert parse_alpha("exp:0.5") == ExpOf(Fraction(1, 2))
    assert parse_alpha(0.5) == Fraction(1, 2)
    with pytest.raises(InvalidSpecError):
        parse_alpha(float("nan"))
    with pytest.raises(InvalidSpecError):
        parse_alpha(True)


@pytest.mark.parametrize("a", [Linear(), Sqrt(), LogSquared()])
def test_a_sequences_increase(a):
    vals = [a.value_float(n) for n in range(1, 200)]
    assert all(v > 0 for v in vals)
    assert all(b > c for c, b in zip(vals, vals[1:]))


def test_a_sequence_values():
    assert Sqrt().value_float(16) == 4.0
    assert LogSquared().value_float(1) == pytest.approx(math.log(2) ** 2)
    assert a_sequence_from_name("SQRT") == Sqrt()
    with pytest.raises(InvalidSpecError):
        a_sequence_from_name("cube")


def test_table_flags_monotonicity():
    assert Table([1.0, 2.0, 3.0]).monotone
    assert not Table([1.0, 0.5, 3.0]).monotone


@pytest.mark.parametrize(
    "make",
    [
        lambda: ExpLinear(0),
        lambda: ExpLinear(-1.0),
        lambda: GeometricBase(1),
        lambda: GeometricBase(Fraction(1, 2)),
        lambda: GeometricBase("exp:-1"),
        lambda: DilatedInteger(1.0, "cube"),
        lambda: ExpLinear(1.0, bits=0),
    ],
)
def test_invalid_specs(make):
    with pytest.raises(InvalidSpecError):
        make()


def test_direct_index_map_skips_squares():
    assert DirectSequence(Sqrt()).index_map(6) == [2, 3, 5, 6, 7, 8]
    assert DirectSequence(Sqrt(), skip_integers=False).index_map(3) == [1, 2, 3]


@given(
    st.sampled_from(
        [
            ExpLinear("ln:2"),
            ExpLinear(2.5, Sqrt()),
            ExpLinear(Fraction(7, 3), LogSquared(), bits=40),
            GeometricBase("3/2"),
            GeometricBase("exp:1.1"),
            DilatedInteger(math.sqrt(2), "power2"),
            DirectSequence(Sqrt()),
            ExpLinear(1.0, Table([0.5, 1.0, 2.0])),
        ]
    )
)
def test_spec_dict_roundtrip(spec):
    assert spec_from_dict(spec.to_dict()) == spec

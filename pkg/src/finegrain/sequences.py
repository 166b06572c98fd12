"""Declarative descriptions of the sequences reduced modulo one.

A sequence is described by a :class:`SequenceSpec` subclass:

* :class:`ExpLinear` -- ``exp(alpha * a_n)`` for a positive increasing ``a_n``
* :class:`GeometricBase` -- ``beta ** n`` by iterative powering
* :class:`DilatedInteger` -- ``alpha * a_n`` for an integer sequence ``a_n``
* :class:`DirectSequence` -- ``a_n`` itself (e.g. ``sqrt(n)`` with squares removed)

Real parameters that must survive exactly are kept as :class:`fractions.Fraction`
(a Python float is converted exactly). ``LogOf(x)`` stands for ``ln x`` and
``ExpOf(alpha)`` for ``e**alpha``; both are evaluated at the working precision
of whoever consumes them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

import gmpy2
from gmpy2 import mpfr

__all__ = [
    "InvalidSpecError",
    "ASequence",
    "Linear",
    "Sqrt",
    "LogSquared",
    "Table",
    "LogOf",
    "ExpOf",
    "SequenceSpec",
    "ExpLinear",
    "GeometricBase",
    "DilatedInteger",
    "DirectSequence",
    "parse_alpha",
    "parse_rational",
    "alpha_to_mpfr",
    "a_sequence_from_name",
    "spec_from_dict",
]


class InvalidSpecError(ValueError):
    """Raised for sequence descriptions violating their invariants."""


# ---------------------------------------------------------------------------
# real parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LogOf:
    """The real number ``ln(x)`` for an exact positive rational ``x``."""

    x: Fraction

    def __post_init__(self):
        object.__setattr__(self, "x", Fraction(self.x))
        if self.x <= 0:
            raise InvalidSpecError(f"ln:{self.x} is undefined")

    def __float__(self):
        return math.log(self.x.numerator) - math.log(self.x.denominator)

    def __str__(self):
        return f"ln:{_fmt_fraction(self.x)}"


@dataclass(frozen=True)
class ExpOf:
    """The real number ``e**alpha``."""

    alpha: "Real"

    def __float__(self):
        return math.exp(float(self.alpha))

    def __str__(self):
        return f"exp:{_fmt_real(self.alpha)}"


Real = Union[Fraction, LogOf, ExpOf]


def _fmt_fraction(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _fmt_real(x) -> str:
    if isinstance(x, (LogOf, ExpOf)):
        return str(x)
    return _fmt_fraction(Fraction(x))


def parse_rational(text: str) -> Fraction:
    """Parse ``p/q``, an integer or a decimal literal exactly."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidSpecError(f"not an exact rational: {text!r}") from exc


def parse_alpha(value) -> Real:
    """Coerce ``value`` to an exact real parameter.

    Accepts floats (converted exactly), ints, Fractions, ``LogOf``/``ExpOf``
    instances and strings of the form ``"1.1"``, ``"3/2"``, ``"ln:2"`` or
    ``"exp:0.5"``.
    """
    if isinstance(value, (LogOf, ExpOf, Fraction)):
        return value
    if isinstance(value, bool):
        raise InvalidSpecError("boolean is not a real parameter")
    if isinstance(value, (int, float)):
        if not math.isfinite(value):
            raise InvalidSpecError(f"non-finite parameter {value!r}")
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if text.startswith("ln:"):
            return LogOf(parse_rational(text[3:]))
        if text.startswith("exp:"):
            return ExpOf(parse_alpha(text[4:]))
        return parse_rational(text)
    raise InvalidSpecError(f"cannot interpret {value!r} as a real parameter")


def alpha_to_mpfr(value: Real):
    """Evaluate a real parameter in the current gmpy2 context."""
    if isinstance(value, LogOf):
        return gmpy2.log(mpfr(value.x.numerator)) - gmpy2.log(mpfr(value.x.denominator))
    if isinstance(value, ExpOf):
        return gmpy2.exp(alpha_to_mpfr(value.alpha))
    q = Fraction(value)
    if q.denominator == 1:
        return mpfr(q.numerator)
    return mpfr(q.numerator) / mpfr(q.denominator)


def _sign(value: Real) -> int:
    if isinstance(value, LogOf):
        return (value.x > 1) - (value.x < 1)
    if isinstance(value, ExpOf):
        return 1
    return (value > 0) - (value < 0)


# ---------------------------------------------------------------------------
# a_n sequences
# ---------------------------------------------------------------------------


class ASequence:
    """A strictly increasing positive sequence ``a_1, a_2, ...``.

    ``value(n)`` is evaluated in the current gmpy2 context, ``value_float(n)``
    in double precision. ``log2_bound(n)`` is an upper bound for
    ``log2(a_n)``, used for precision sizing.
    """

    name: str = ""
    #: whether the growth conditions of the sub-lacunary theorem are known to hold
    checked: bool = True

    def value(self, n: int):
        raise NotImplementedError

    def value_float(self, n: int) -> float:
        raise NotImplementedError

    def values_float(self, n) -> "list[float]":
        return [self.value_float(int(i)) for i in n]

    def log2_bound(self, n: int) -> float:
        return math.log2(self.value_float(n)) + 1e-9

    def to_dict(self) -> dict:
        return {"kind": self.name}

    def __eq__(self, other):
        return type(self) is type(other) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(repr(self.to_dict()))

    def __repr__(self):
        return f"{type(self).__name__}()"


class Linear(ASequence):
    """``a_n = n``."""

    name = "linear"

    def value(self, n):
        return mpfr(n)

    def value_float(self, n):
        return float(n)


class Sqrt(ASequence):
    """``a_n = sqrt(n)``."""

    name = "sqrt"

    def value(self, n):
        return gmpy2.sqrt(mpfr(n))

    def value_float(self, n):
        return math.sqrt(n)


class LogSquared(ASequence):
    """``a_n = (log(n + 1))**2``."""

    name = "logsq"

    def value(self, n):
        return gmpy2.log(mpfr(n + 1)) ** 2

    def value_float(self, n):
        return math.log(n + 1) ** 2


class Table(ASequence):
    """Explicit positive reals ``a_1, ..., a_L``; growth conditions unchecked.

    Values that fail to increase are accepted; ``monotone`` records whether
    the table is strictly increasing.
    """

    name = "table"
    checked = False

    def __init__(self, values: Sequence[float]):
        vals = tuple(float(v) for v in values)
        if not vals:
            raise InvalidSpecError("empty table")
        if any(not math.isfinite(v) or v <= 0 for v in vals):
            raise InvalidSpecError("table entries must be finite and positive")
        self.values = vals
        self.monotone = all(b > a for a, b in zip(vals, vals[1:]))

    def _get(self, n):
        if not 1 <= n <= len(self.values):
            raise InvalidSpecError(f"table has {len(self.values)} entries, requested a_{n}")
        return self.values[n - 1]

    def value(self, n):
        return mpfr(self._get(n))

    def value_float(self, n):
        return self._get(n)

    def log2_bound(self, n):
        return math.log2(max(self.values[: max(1, min(n, len(self.values)))])) + 1e-9

    def to_dict(self):
        return {"kind": self.name, "values": list(self.values)}

    def __repr__(self):
        return f"Table(<{len(self.values)} values>)"


_A_KINDS = {cls.name: cls for cls in (Linear, Sqrt, LogSquared)}


def a_sequence_from_name(name: str) -> ASequence:
    try:
        return _A_KINDS[name.lower()]()
    except KeyError:
        raise InvalidSpecError(f"unknown a-sequence {name!r}; choose from {sorted(_A_KINDS)}") from None


def _a_from_dict(d: dict) -> ASequence:
    if d["kind"] == "table":
        return Table(d["values"])
    return a_sequence_from_name(d["kind"])


# ---------------------------------------------------------------------------
# integer sequences for DilatedInteger
# ---------------------------------------------------------------------------

_INT_KINDS = {
    "square": lambda n: n * n,
    "power2": lambda n: 1 << n,
    "linear": lambda n: n,
}


# ---------------------------------------------------------------------------
# sequence specs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SequenceSpec:
    """Base class; ``bits`` is the target absolute error ``2**-bits``."""

    def __post_init__(self):
        if int(self.bits) < 1:
            raise InvalidSpecError("target error bits must be >= 1")

    def term(self, n: int):
        """Return the n-th unreduced term in the current gmpy2 context."""
        raise NotImplementedError

    def log2_magnitude(self, n: int) -> float:
        """Upper bound for ``log2 |term(n)|`` (at least 0)."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ExpLinear(SequenceSpec):
    alpha: Real
    a: ASequence = field(default_factory=Linear)
    bits: int = 53

    def __post_init__(self):
        object.__setattr__(self, "alpha", parse_alpha(self.alpha))
        super().__post_init__()
        if _sign(self.alpha) <= 0:
            raise InvalidSpecError(f"alpha must be positive, got {_fmt_real(self.alpha)}")

    def term(self, n):
        return gmpy2.exp(alpha_to_mpfr(self.alpha) * self.a.value(n))

    def exponent_bound(self, n: int) -> float:
        return float(self.alpha) * self.a.value_float(n) * math.log2(math.e)

    def log2_magnitude(self, n):
        return max(0.0, self.exponent_bound(n))

    def to_dict(self):
        return {"mode": "exp", "alpha": _fmt_real(self.alpha), "a": self.a.to_dict(), "bits": self.bits}


@dataclass(frozen=True)
class GeometricBase(SequenceSpec):
    beta: Real
    bits: int = 53

    def __post_init__(self):
        object.__setattr__(self, "beta", parse_alpha(self.beta))
        super().__post_init__()
        if isinstance(self.beta, ExpOf):
            if _sign(self.beta.alpha) <= 0:
                raise InvalidSpecError("beta = exp(alpha) needs alpha > 0")
        elif isinstance(self.beta, LogOf) or self.beta <= 1:
            raise InvalidSpecError(f"beta must exceed 1, got {_fmt_real(self.beta)}")

    @property
    def exact(self) -> bool:
        return isinstance(self.beta, Fraction)

    def term(self, n):
        return alpha_to_mpfr(self.beta) ** n

    def log2_magnitude(self, n):
        return n * math.log2(float(self.beta))

    def to_dict(self):
        return {"mode": "geom", "beta": _fmt_real(self.beta), "bits": self.bits}


@dataclass(frozen=True)
class DilatedInteger(SequenceSpec):
    alpha: Real
    kind: str = "square"
    bits: int = 53

    def __post_init__(self):
        object.__setattr__(self, "alpha", parse_alpha(self.alpha))
        super().__post_init__()
        if self.kind not in _INT_KINDS:
            raise InvalidSpecError(f"unknown integer sequence {self.kind!r}; choose from {sorted(_INT_KINDS)}")

    def integer(self, n: int) -> int:
        return _INT_KINDS[self.kind](n)

    def term(self, n):
        return alpha_to_mpfr(self.alpha) * self.integer(n)

    def log2_magnitude(self, n):
        return max(0.0, math.log2(abs(float(self.alpha)) + 1e-300) + self.integer(n).bit_length())

    def to_dict(self):
        return {"mode": "dilated", "alpha": _fmt_real(self.alpha), "kind": self.kind, "bits": self.bits}


@dataclass(frozen=True)
class DirectSequence(SequenceSpec):
    """``a_n`` reduced mod 1 as is; ``skip_integers`` drops integer-valued terms."""

    a: ASequence = field(default_factory=Sqrt)
    skip_integers: bool = True
    bits: int = 53

    def index_map(self, N: int) -> list[int]:
        """Indices of the first ``N`` retained terms."""
        if not self.skip_integers:
            return list(range(1, N + 1))
        if not isinstance(self.a, Sqrt):
            raise InvalidSpecError("skip_integers is only supported for the sqrt sequence")
        out, n = [], 1
        while len(out) < N:
            r = math.isqrt(n)
            if r * r != n:
                out.append(n)
            n += 1
        return out

    def term(self, n):
        return self.a.value(n)

    def log2_magnitude(self, n):
        return max(0.0, self.a.log2_bound(n))

    def to_dict(self):
        return {"mode": "direct", "a": self.a.to_dict(), "skip_integers": self.skip_integers, "bits": self.bits}


def spec_from_dict(d: dict) -> SequenceSpec:
    mode = d.get("mode")
    bits = int(d.get("bits", 53))
    if mode == "exp":
        return ExpLinear(parse_alpha(d["alpha"]), _a_from_dict(d["a"]), bits)
    if mode == "geom":
        return GeometricBase(parse_alpha(d["beta"]), bits)
    if mode == "dilated":
        return DilatedInteger(parse_alpha(d["alpha"]), d["kind"], bits)
    if mode == "direct":
        return DirectSequence(_a_from_dict(d["a"]), bool(d["skip_integers"]), bits)
    raise InvalidSpecError(f"unknown sequence mode {mode!r}")

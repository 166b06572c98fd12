"""Fractional parts of rapidly growing sequences with a certified error.

Every term is computed in MPFR arithmetic whose mantissa covers the binary
magnitude of the largest term plus the target bits plus 64 guard bits, so the
integer part cancels exactly when the fractional part is extracted. Results
are stored as doubles.
"""

from __future__ import annotations

import json
import math
import os
import struct
from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
import numpy as np
from gmpy2 import mpfr

from .sequences import (
    DilatedInteger,
    DirectSequence,
    ExpLinear,
    GeometricBase,
    InvalidSpecError,
    Linear,
    SequenceSpec,
    Table,
    alpha_to_mpfr,
    spec_from_dict,
)

__all__ = [
    "GUARD_BITS",
    "DEFAULT_CEILING",
    "PrecisionCeilingError",
    "FracSeq",
    "precision_ceiling",
    "required_precision",
    "generate",
    "verify_stability",
    "circular_distance",
    "write_cache",
    "read_cache",
    "write_csv",
]

GUARD_BITS = 64
DEFAULT_CEILING = 1 << 22
CEILING_ENV = "FINEGRAIN_PRECISION_CEILING"
CACHE_MAGIC = b"FSQ1"

# exact rational powering is used while p**N and q**N stay this many times
# smaller (in bits) than the floating working precision
_EXACT_BUDGET = 4


class PrecisionCeilingError(RuntimeError):
    """The requested sequence needs more precision than the configured ceiling."""

    def __init__(self, needed: int, ceiling: int):
        super().__init__(f"generation needs {needed} bits of precision, ceiling is {ceiling} bits")
        self.needed = needed
        self.ceiling = ceiling


def precision_ceiling() -> int:
    raw = os.environ.get(CEILING_ENV)
    if raw is None or not raw.strip():
        return DEFAULT_CEILING
    try:
        value = int(raw)
    except ValueError:
        raise InvalidSpecError(f"{CEILING_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise InvalidSpecError(f"{CEILING_ENV} must be positive")
    return value


@dataclass(frozen=True)
class FracSeq:
    """Fractional parts ``values[n-1] = {x_n}`` for ``n = 1..N``.

    ``values`` is a read-only float64 array in ``[0, 1)``. ``err_bound`` bounds
    the absolute error of every stored value (before the circle wrap).
    """

    values: np.ndarray
    spec: SequenceSpec
    N: int
    precision_bits: int
    err_bound: float
    flags: tuple = field(default=())

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64, copy=True)
        if vals.shape != (self.N,):
            raise ValueError(f"expected {self.N} values, got shape {vals.shape}")
        if vals.size and (vals.min() < 0.0 or vals.max() >= 1.0):
            raise ValueError("fractional parts must lie in [0, 1)")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.N

    def __eq__(self, other):
        if not isinstance(other, FracSeq):
            return NotImplemented
        return (
            self.spec == other.spec
            and self.N == other.N
            and self.precision_bits == other.precision_bits
            and self.err_bound == other.err_bound
            and self.flags == other.flags
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


def required_precision(spec: SequenceSpec, N: int, p: int | None = None) -> int:
    """Working mantissa length (bits) certifying ``2**-p`` absolute error.

    ``ceil(log2 of the largest term) + p + 64``; for ``exp(alpha a_n)`` the
    magnitude is ``alpha * a_N * log2(e)`` and for ``beta**n`` it is
    ``N * log2(beta)``.
    """
    if N < 1:
        raise InvalidSpecError("N must be >= 1")
    p = spec.bits if p is None else int(p)
    if p < 1:
        raise InvalidSpecError("p must be >= 1")
    if isinstance(spec, DirectSequence):
        last = spec.index_map(N)[-1]
    else:
        last = N
    if isinstance(spec, GeometricBase) and isinstance(spec.beta, Fraction):
        # exact: N*log2(p/q) from integer logs avoids float trouble at powers of two
        q = spec.beta
        if q.denominator == 1 and q.numerator & (q.numerator - 1) == 0:
            magnitude = N * (q.numerator.bit_length() - 1)
        else:
            magnitude = math.ceil(N * (math.log2(q.numerator) - math.log2(q.denominator)))
    else:
        magnitude = math.ceil(spec.log2_magnitude(last))
    return max(0, magnitude) + p + GUARD_BITS


def _frac_to_double(x) -> float:
    f = float(x - gmpy2.floor(x))
    # rounding to double can land on 1.0
    return 0.0 if f >= 1.0 else f


def _iterated_powers(base, N: int) -> list[float]:
    """``{base**n}`` for ``n = 1..N`` by repeated multiplication in the current context.

    The relative error after ``n`` steps is at most about ``2n`` units in the
    last place, far inside the 64 guard bits for any feasible ``N``.
    """
    x = mpfr(1)
    out = []
    for _ in range(N):
        x = x * base
        out.append(_frac_to_double(x))
    return out


def _geometric_values(spec: GeometricBase, N: int, prec: int) -> list[float]:
    beta = spec.beta
    if isinstance(beta, Fraction):
        num, den = beta.numerator, beta.denominator
        if den == 1:
            return [0.0] * N
        if (num.bit_length() + den.bit_length()) * N <= _EXACT_BUDGET * prec:
            out = []
            pn, qn = 1, 1
            for _ in range(N):
                pn *= num
                qn *= den
                f = (pn % qn) / qn  # int true division rounds correctly
                out.append(0.0 if f >= 1.0 else f)
            return out
    with gmpy2.context(gmpy2.get_context(), precision=prec):
        return _iterated_powers(alpha_to_mpfr(beta), N)


def _per_term_values(spec: SequenceSpec, indices, prec: int) -> list[float]:
    with gmpy2.context(gmpy2.get_context(), precision=prec):
        if isinstance(spec, ExpLinear):
            alpha = alpha_to_mpfr(spec.alpha)
            return [_frac_to_double(gmpy2.exp(alpha * spec.a.value(n))) for n in indices]
        if isinstance(spec, DilatedInteger):
            alpha = alpha_to_mpfr(spec.alpha)
            return [_frac_to_double(alpha * spec.integer(n)) for n in indices]
        return [_frac_to_double(spec.term(n)) for n in indices]


def _flags(spec: SequenceSpec) -> tuple:
    a = getattr(spec, "a", None)
    if isinstance(a, Table):
        return ("unchecked",) if a.monotone else ("unchecked", "non-monotone")
    return ()


def generate(
    spec: SequenceSpec,
    N: int,
    *,
    extra_bits: int = 0,
    ceiling: int | None = None,
    method: str = "auto",
) -> FracSeq:
    """Fractional parts of the first ``N`` terms of ``spec``.

    Geometric progressions use iterative multiplication at full precision
    (exact rational arithmetic when the base is a rational of small height).
    ``exp(alpha n)`` is also a geometric progression and is powered
    iteratively unless ``method="per-term"``; everything else evaluates each
    term independently.

    Raises
    ------
    PrecisionCeilingError
        If the required precision exceeds ``ceiling`` (default from
        ``FINEGRAIN_PRECISION_CEILING`` or ``2**22``).
    """
    N = int(N)
    if method not in ("auto", "per-term"):
        raise ValueError(f"unknown method {method!r}")
    prec = required_precision(spec, N) + int(extra_bits)
    limit = precision_ceiling() if ceiling is None else int(ceiling)
    if prec > limit:
        raise PrecisionCeilingError(prec, limit)

    if isinstance(spec, GeometricBase):
        values = _geometric_values(spec, N, prec)
    elif method == "auto" and isinstance(spec, ExpLinear) and isinstance(spec.a, Linear):
        with gmpy2.context(gmpy2.get_context(), precision=prec):
            values = _iterated_powers(gmpy2.exp(alpha_to_mpfr(spec.alpha)), N)
    elif isinstance(spec, DirectSequence):
        values = _per_term_values(spec, spec.index_map(N), prec)
    else:
        values = _per_term_values(spec, range(1, N + 1), prec)

    err = 2.0 ** -min(spec.bits, 53)
    return FracSeq(np.asarray(values, dtype=np.float64), spec, N, prec, err, _flags(spec))


def circular_distance(x, y):
    """Distance on R/Z, elementwise."""
    d = np.abs(np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)) % 1.0
    return np.minimum(d, 1.0 - d)


def verify_stability(spec: SequenceSpec, N: int, extra_bits: int = 64) -> float:
    """Largest circular deviation between the normal and a higher-precision run."""
    base = generate(spec, N)
    finer = generate(spec, N, extra_bits=extra_bits)
    if N == 0:
        return 0.0
    return float(np.max(circular_distance(base.values, finer.values)))


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------


def write_cache(seq: FracSeq, path) -> None:
    """Binary cache: ``FSQ1`` | u32 spec length | spec JSON | u64 N | u64 precision | f64 err | N x f64 (LE)."""
    spec_bytes = json.dumps(seq.spec.to_dict(), sort_keys=True).encode("utf-8")
    header = CACHE_MAGIC + struct.pack("<I", len(spec_bytes)) + spec_bytes
    header += struct.pack("<QQd", seq.N, seq.precision_bits, seq.err_bound)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(seq.values.astype("<f8").tobytes())


def read_cache(path) -> FracSeq:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != CACHE_MAGIC:
        raise ValueError(f"{path}: not an FSQ1 cache file")
    (spec_len,) = struct.unpack_from("<I", data, 4)
    offset = 8
    spec = spec_from_dict(json.loads(data[offset : offset + spec_len].decode("utf-8")))
    offset += spec_len
    N, prec, err = struct.unpack_from("<QQd", data, offset)
    offset += struct.calcsize("<QQd")
    values = np.frombuffer(data, dtype="<f8", count=N, offset=offset)
    if offset + 8 * N != len(data):
        raise ValueError(f"{path}: truncated or oversized payload")
    return FracSeq(values.astype(np.float64), spec, int(N), int(prec), float(err), _flags(spec))


def write_csv(seq: FracSeq, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("n,value\n")
        for n, v in enumerate(seq.values, start=1):
            fh.write(f"{n},{float(v):.17g}\n")

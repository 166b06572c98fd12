"""Fine-scale statistics of sequences modulo one.

Certified fractional parts of rapidly growing sequences, k-point correlation
sums and gap distributions, spectral tools for exponential sums, and a seeded
Monte Carlo harness over the dilation parameter.
"""

__version__ = "0.1.0"

from .sequences import (  # noqa: E402
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
from .generator import FracSeq, PrecisionCeilingError, generate, verify_stability  # noqa: E402
from .correlation import (  # noqa: E402
    BoxRegion,
    ck_factor,
    correlate_box,
    correlate_box_bruteforce,
    correlate_triangle,
    gap_distribution,
    poisson_gap_cdf,
)

__all__ = [
    "__version__",
    "DilatedInteger",
    "DirectSequence",
    "ExpLinear",
    "GeometricBase",
    "InvalidSpecError",
    "Linear",
    "LogSquared",
    "Sqrt",
    "Table",
    "FracSeq",
    "PrecisionCeilingError",
    "generate",
    "verify_stability",
    "BoxRegion",
    "ck_factor",
    "correlate_box",
    "correlate_box_bruteforce",
    "correlate_triangle",
    "gap_distribution",
    "poisson_gap_cdf",
]

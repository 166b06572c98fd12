"""scikit-learn style transformers over the generator and the statistics.

These are thin wrappers: each row of ``X`` is one parameter value (for
:class:`FractionalParts`) or one point set (for the statistics), so the
pieces chain in a ``Pipeline``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .correlation import BoxRegion, correlate_box, correlate_triangle, gap_distribution
from .generator import generate
from .sequences import ExpLinear, GeometricBase, a_sequence_from_name

__all__ = ["FractionalParts", "CorrelationStatistic", "GapDistribution"]


class FractionalParts(TransformerMixin, BaseEstimator):
    """Map parameter values to rows of fractional parts.

    Parameters
    ----------
    mode : {"exp", "geom"}
        ``"exp"``: ``exp(alpha a_n)``; ``"geom"``: ``alpha**n``.
    a : str
        Name of the sequence ``a_n`` for ``mode="exp"``.
    n_terms : int
        Number of terms per row.
    bits : int
        Certified bits per value.
    """

    def __init__(self, mode: str = "exp", a: str = "sqrt", n_terms: int = 1000, bits: int = 53):
        self.mode = mode
        self.a = a
        self.n_terms = n_terms
        self.bits = bits

    def fit(self, X, y=None):
        X = check_array(X, ensure_2d=True)
        if X.shape[1] != 1:
            raise ValueError("X must have a single column of parameter values")
        if self.mode not in ("exp", "geom"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if int(self.n_terms) < 1:
            raise ValueError("n_terms must be >= 1")
        self.a_ = a_sequence_from_name(self.a)
        self.n_features_in_ = 1
        return self

    def _spec(self, alpha: float):
        if self.mode == "geom":
            return GeometricBase(alpha, bits=self.bits)
        return ExpLinear(alpha, self.a_, self.bits)

    def transform(self, X):
        check_is_fitted(self, "a_")
        X = check_array(X, ensure_2d=True)
        if X.shape[1] != 1:
            raise ValueError("X must have a single column of parameter values")
        rows = [generate(self._spec(float(alpha)), int(self.n_terms)).values for alpha in X[:, 0]]
        return np.vstack(rows)


class _RowStatistic(TransformerMixin, BaseEstimator):
    def fit(self, X, y=None):
        X = check_array(X, ensure_2d=True)
        if X.min() < 0.0 or X.max() >= 1.0:
            raise ValueError("points must lie in [0, 1)")
        self._validate_params_local()
        self.n_features_in_ = X.shape[1]
        return self

    def _validate_params_local(self):
        pass

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X, ensure_2d=True)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} points per row, got {X.shape[1]}")
        return np.vstack([self._row(r) for r in X])


class CorrelationStatistic(_RowStatistic):
    """``R_k`` of each row for a box (``"a:b[,a:b...]"``) or a triangle of width ``s``."""

    def __init__(self, box: str | None = "-1:1", triangle: float | None = None, k: int = 2):
        self.box = box
        self.triangle = triangle
        self.k = k

    def _validate_params_local(self):
        if (self.box is None) == (self.triangle is None):
            raise ValueError("give exactly one of box and triangle")
        if self.box is not None:
            self.box_ = BoxRegion.parse(self.box)

    def _row(self, r):
        if self.triangle is not None:
            return np.array([correlate_triangle(r, self.triangle, self.k)])
        return np.array([correlate_box(r, self.box_).value])


class GapDistribution(_RowStatistic):
    """Gap CDF of each row (``N + 1`` points) on ``s_grid``."""

    def __init__(self, s_grid=(0.5, 1.0, 2.0)):
        self.s_grid = s_grid

    def _row(self, r):
        return gap_distribution(r, self.s_grid).G_values

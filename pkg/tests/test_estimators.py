import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline

from finegrain.correlation import BoxRegion, correlate_box, gap_distribution
from finegrain.estimators import CorrelationStatistic, FractionalParts, GapDistribution
from finegrain.generator import generate
from finegrain.sequences import GeometricBase


def test_params_and_clone():
    est = FractionalParts(mode="geom", n_terms=5)
    assert est.get_params() == {"mode": "geom", "a": "sqrt", "n_terms": 5, "bits": 53}
    other = clone(est).set_params(n_terms=7)
    assert other.n_terms == 7 and est.n_terms == 5


def test_fractional_parts_rows_match_generator():
    X = np.array([[1.5], [2.5]])
    out = FractionalParts(mode="geom", n_terms=4).fit_transform(X)
    assert out.shape == (2, 4)
    np.testing.assert_array_equal(out[0], [0.5, 0.25, 0.375, 0.0625])
    np.testing.assert_array_equal(out[1], generate(GeometricBase(2.5), 4).values)


def test_pipeline_matches_direct_computation():
    X = np.array([[2.25], [2.75]])
    pipe = make_pipeline(FractionalParts(mode="exp", a="sqrt", n_terms=300), CorrelationStatistic("-1:1"))
    out = pipe.fit_transform(X)
    pts = FractionalParts(mode="exp", a="sqrt", n_terms=300).fit_transform(X)
    box = BoxRegion.parse("-1:1")
    assert out.shape == (2, 1)
    assert out[:, 0].tolist() == [correlate_box(p, box).value for p in pts]


def test_gap_distribution_rows():
    pts = np.arange(10)[None, :] / 10
    out = GapDistribution(s_grid=(0.5, 1.0)).fit_transform(pts)
    np.testing.assert_array_equal(out[0], gap_distribution(pts[0], (0.5, 1.0)).G_values)


def test_triangle_statistic_on_lattice():
    pts = np.arange(50)[None, :] / 50
    out = CorrelationStatistic(box=None, triangle=1.0).fit_transform(pts)
    assert out[0, 0] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize(
    "est, X",
    [
        (FractionalParts(), np.ones((2, 2))),
        (FractionalParts(mode="bogus"), np.ones((2, 1))),
        (FractionalParts(n_terms=0), np.ones((2, 1))),
        (CorrelationStatistic(box=None, triangle=None), np.zeros((1, 3))),
        (CorrelationStatistic(box="-1:1", triangle=1.0), np.zeros((1, 3))),
        (CorrelationStatistic(), np.full((1, 3), 1.5)),
    ],
)
def test_invalid_inputs_rejected(est, X):
    with pytest.raises(ValueError):
        est.fit(X)


def test_transform_checks_width():
    est = GapDistribution().fit(np.zeros((1, 4)))
    with pytest.raises(ValueError):
        est.transform(np.zeros((1, 5)))

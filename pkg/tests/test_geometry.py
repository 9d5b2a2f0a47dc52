import numpy as np
import pytest

from reglab.geometry import Ball, GraphPoint, as_vector, graph_dist, vec_dist, vec_norm
from reglab.rng import SplitMix64


def test_as_vector_rejects_nan_and_empty():
    with pytest.raises(ValueError):
        as_vector([np.nan])
    with pytest.raises(ValueError):
        as_vector([])
    with pytest.raises(ValueError):
        as_vector([1.0, np.inf])


def test_norms():
    v = np.array([3.0, -4.0])
    assert vec_norm(v) == 5.0
    assert vec_norm(v, "max") == 4.0
    assert vec_dist([1, 1], [0, 0], "max") == 1.0


@pytest.mark.parametrize("norm", ["euclidean", "max"])
def test_triangle_inequality_seeded_triples(norm):
    rng = SplitMix64(42)
    for _ in range(1000):
        a, b, c = (rng.uniform_vector(3, -5, 5) for _ in range(3))
        assert vec_dist(a, c, norm) <= vec_dist(a, b, norm) + vec_dist(b, c, norm) + 1e-12


def test_ball_membership():
    ball = Ball([0.0, 0.0], 1.0)
    assert ball.contains([1.0, 0.0])
    assert not ball.contains([1.0, 1.0])
    assert Ball([0.0], 1.0, closed=False).contains([0.5])
    assert not Ball([0.0], 1.0, closed=False).contains([1.0])
    with pytest.raises(ValueError):
        Ball([0.0], -1.0)


def test_product_metric_is_componentwise_max():
    p = GraphPoint([0.0], [0.0])
    q = GraphPoint([0.5], [2.0])
    assert graph_dist(p, q) == 2.0
    assert graph_dist(p, q, "max") == 2.0

import numpy as np
import pytest
from math import factorial, gamma, pi

from caralab.gauges import (
    BlockMaxGauge,
    HermitianNorm,
    PowerGauge,
    PullbackGauge,
    TableHullNorm,
    WeightedMaxNorm,
    _numeric_dual,
)
from caralab.rng import haar_unitary

CONVEX = [
    WeightedMaxNorm([1, 2]),
    PowerGauge([1, 1], [1, 0.5]),
    PowerGauge([1.5, 1.5, 1.5], [1, 2, 1]),
    PowerGauge([2, 3], [1, 1]),
    HermitianNorm(np.array([[2, 0.5j], [-0.5j, 1]])),
    BlockMaxGauge([WeightedMaxNorm([1]), HermitianNorm(np.eye(2))]),
    PullbackGauge(PowerGauge([1, 1], [1, 1]), haar_unitary(np.random.default_rng(3), 2) * 2),
    TableHullNorm(np.array([[1, 0], [0.8, 0.6], [0.6, 0.8], [0, 1]])),
]


@pytest.mark.parametrize("g", [g for g in CONVEX if not (isinstance(g, PowerGauge) and not g.uniform)])
def test_dual_is_the_support_function(g):
    rng = np.random.default_rng(0)
    for _ in range(3):
        c = rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n)
        assert g.dual(c) == pytest.approx(_numeric_dual(g, c), rel=1e-5)


@pytest.mark.parametrize("g", CONVEX)
def test_supporting_covectors_have_unit_dual_norm(g):
    rng = np.random.default_rng(2)
    for _ in range(3):
        V = rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n)
        c = g.covector(V) * 2.5
        assert g.dual(c) == pytest.approx(2.5, rel=1e-6)


@pytest.mark.parametrize("g", CONVEX)
def test_covector_supports(g):
    rng = np.random.default_rng(1)
    X = rng.standard_normal((5000, g.n)) + 1j * rng.standard_normal((5000, g.n))
    for V in X[:4]:
        c = g.covector(V)
        assert (c @ V).real == pytest.approx(float(g(V)), rel=1e-9)
        assert abs((c @ V).imag) < 1e-9 * float(g(V))
        assert np.all(np.abs(X @ c) <= g(X) * (1 + 1e-9))


def test_mixed_power_gauge_level():
    g = PowerGauge([0.6, 3.0], [1, 2])
    X = np.array([0.2 + 0.1j, 1.0j])
    h = float(g(X))
    t = np.abs(X) / h / np.array([1, 2])
    assert np.sum(t ** np.array([0.6, 3.0])) == pytest.approx(1, rel=1e-12)


def test_closed_volumes():
    assert WeightedMaxNorm([1, 2]).unit_ball_volume() == pytest.approx(pi**2 / 4)
    assert PowerGauge([1, 1], [1, 1]).unit_ball_volume() == pytest.approx(pi**2 / 6)
    assert PowerGauge([2, 2, 2], [1, 1, 1]).unit_ball_volume() == pytest.approx(pi**3 / 6)
    p = 3.0
    want = (2 * pi / p) ** 2 * gamma(2 / p) ** 2 / gamma(4 / p + 1) * 4
    assert PowerGauge([p, p], [1, 2]).unit_ball_volume() == pytest.approx(want, rel=1e-12)
    M = np.array([[2, 0.5], [0.5, 1]])
    assert HermitianNorm(M).unit_ball_volume() == pytest.approx(pi**2 / (factorial(2) * np.linalg.det(M)))
    A = 2 * np.eye(2)
    assert PullbackGauge(PowerGauge([1, 1], [1, 1]), A).unit_ball_volume() == pytest.approx(pi**2 / 6 / 16)


def test_dimension_check():
    with pytest.raises(ValueError):
        WeightedMaxNorm([1, 2])(np.ones(3))

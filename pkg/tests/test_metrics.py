import numpy as np
import pytest
from hypothesis import given, strategies as st

from caralab import domains as dz
from caralab.metrics import (
    Backend,
    MetricKind,
    NoBackendError,
    extremal_covector,
    green_at_center,
    indicatrix_member,
    metric,
    metric_gauge,
    reinhardt_support,
    support_table_hull,
)

KINDS = list(MetricKind)


def supported_rows():
    return [
        (dz.disc(1), [0.5]),
        (dz.polydisc(1, 2), [0.3, 1.0j]),
        (dz.ball(1, 2), [0.5, 0.1j]),
        (dz.ball(1, 3), [0, 0, 0]),
        (dz.diamond(1, 2), [0, 0]),
        (dz.pball(3, [1, 2]), [0, 0]),
        (dz.complex_ellipsoid([0.3, 0.3]), [0, 0]),
        (dz.complex_ellipsoid([0.3, 1.5]), [0, 0]),
        (dz.product([dz.disc(1), dz.ball(1, 2)]), [0.4, 0.2, 0.3j]),
        (dz.transform(dz.polydisc(1, 2), np.array([[1, -1], [1, 1]]) / np.sqrt(2), 0.5 + 0.5j, [1, -1j]),
         [1.1, -1j]),
    ]


def test_metric_examples():
    v = metric(dz.disc(1), [0.5], [1], "caratheodory")
    assert v.value == pytest.approx(4 / 3, rel=1e-12) and v.backend is Backend.CLOSED_FORM
    v = metric(dz.diamond(1, 1), [0, 0], [1, 1], "caratheodory")
    assert v.value == pytest.approx(2, rel=1e-12) and v.backend is Backend.MINKOWSKI_REDUCTION
    ce = dz.complex_ellipsoid([0.3, 0.3])
    assert metric(ce, [0, 0], [1, 0], "azukawa").value == pytest.approx(1, rel=1e-12)
    X = [1, 1]
    assert metric(ce, [0, 0], X, "caratheodory").value < metric(ce, [0, 0], X, "azukawa").value


def test_convex_hull_of_nonconvex_ellipsoid():
    # all exponents below 1/2: the hull is the diamond sum_j |z_j| / rho_j < 1
    ce = dz.complex_ellipsoid([0.3, 0.3], [1, 2])
    X = np.array([0.3 + 0.1j, -0.7])
    assert metric(ce, [0, 0], X, "caratheodory").value == pytest.approx(abs(X[0]) + abs(X[1]) / 2, rel=1e-12)
    # mixed exponents: the support-table hull is an outer approximation that is tight on the axes
    mixed = dz.complex_ellipsoid([0.3, 1.5])
    g, _ = metric_gauge(mixed, [0, 0], "caratheodory")
    assert g(np.array([1, 0])) == pytest.approx(1, rel=1e-6)
    assert g(np.array([0, 1])) == pytest.approx(1, rel=1e-6)


def test_support_table_hull_gap():
    # q = 2 is already convex, so the table hull should reproduce the weighted euclidean norm from below
    X = np.random.default_rng(0).standard_normal((20_000, 2)) * (1 + 0.5j)
    exact = np.sqrt(np.abs(X[:, 0]) ** 2 + np.abs(X[:, 1]) ** 2 / 4)
    r = support_table_hull([2, 2], [1, 2])(X) / exact
    assert r.max() <= 1 + 1e-9 and r.min() >= 1 - 1e-5
    X = np.random.default_rng(1).standard_normal((20_000, 3)) * (1 + 0.5j)
    r = support_table_hull([2, 2, 2], [1, 1, 1])(X) / np.linalg.norm(X, axis=1)
    assert r.max() <= 1 + 1e-9 and r.min() >= 1 - 2e-3


def test_reinhardt_support_oracle():
    # support of {t1^0.6 + t2^0.6 <= 1} in direction (1, 1) is attained at a vertex
    assert reinhardt_support([0.6, 0.6], [1, 1], [1, 1]) == pytest.approx(1.0, rel=1e-8)
    # the disc-like body q = 2: support is the euclidean norm of c
    assert reinhardt_support([2, 2], [1, 1], [0.6, 0.8]) == pytest.approx(1.0, rel=1e-6)


def test_indicatrix_examples():
    assert indicatrix_member(dz.polydisc(1, 1), [0, 0], "reciprocal_distance", [0.9, 0.9])
    assert not indicatrix_member(dz.ball(1, 2), [0, 0], "caratheodory", [0.8, 0.7])
    assert indicatrix_member(dz.disc(1), [0.5], "caratheodory", [0.7])


def test_covector_examples():
    c = extremal_covector(dz.ball(1, 2), [0, 0], [3, 4])
    np.testing.assert_allclose(c.c, [0.6, 0.8], atol=1e-15)
    assert c.value == pytest.approx(5)
    c = extremal_covector(dz.diamond(1, 1), [0, 0], [1, -1])
    np.testing.assert_allclose(c.c, [1, -1], atol=1e-15)
    assert c.value == pytest.approx(2)
    c = extremal_covector(dz.polydisc(1, 2), [0, 0], [0, 1])
    np.testing.assert_allclose(c.c, [0, 0.5], atol=1e-15)
    with pytest.raises(ValueError):
        extremal_covector(dz.ball(1, 2), [0, 0], [0, 0])


def test_polydisc_covector_tie_breaks_to_smallest_index():
    c = extremal_covector(dz.polydisc(1, 1), [0, 0], [1, 1])
    np.testing.assert_allclose(c.c, [1, 0])


def test_no_backend_errors():
    ce = dz.complex_ellipsoid([0.3, 0.3])
    with pytest.raises(NoBackendError):
        metric(ce, [0.1, 0], [1, 0], "caratheodory")
    with pytest.raises(NoBackendError):
        metric(ce, [0.1, 0], [1, 0], "azukawa")
    with pytest.raises(NoBackendError):
        metric(dz.diamond(1, 1), [0.1, 0], [1, 0], "caratheodory")
    with pytest.raises(dz.DomainError):
        metric(dz.disc(1), [1.0], [1], "caratheodory")


def test_backend_tags():
    assert metric(dz.diamond(1, 1), [0.1, 0], [1, 0], "reciprocal_distance").backend is Backend.PHASE_SEARCH
    assert metric(dz.ball(1, 2), [0.1, 0], [1, 0], "reciprocal_distance").backend is Backend.CLOSED_FORM


def test_green_at_center():
    g = green_at_center(dz.ball(1, 2), [0.3, 0.4])
    assert g.value == pytest.approx(np.log(0.5))
    assert green_at_center(dz.diamond(1, 1), [0.499, 0.5]).value < 0
    with pytest.raises(dz.DomainError):
        green_at_center(dz.ball(1, 2), [0.6, 0.8])
    with pytest.raises(NoBackendError):
        green_at_center(dz.transform(dz.ball(1, 2), translation=[0.1, 0]), [0, 0])


@pytest.mark.parametrize("row", range(10))
def test_metric_chain_and_polar_condition(row):
    spec, a = supported_rows()[row]
    rng = np.random.default_rng(row)
    X = rng.standard_normal((10_000, spec.dim)) + 1j * rng.standard_normal((10_000, spec.dim))
    vals = {}
    for kind in KINDS:
        g, _ = metric_gauge(spec, a, kind)
        if g.vectorized:
            vals[kind] = g(X)
        else:
            vals[kind] = np.array([g(x) for x in X[:20]])
    m = min(len(v) for v in vals.values())
    C, A, K, D = (vals[k][:m] for k in KINDS)
    assert np.all(C <= A * (1 + 1e-9))
    assert np.all(A <= K * (1 + 1e-9))
    assert np.all(K <= D * (1 + 1e-9))
    g, _ = metric_gauge(spec, a, "caratheodory")
    for V in X[:5]:
        cov = extremal_covector(spec, a, V)
        assert cov.value == pytest.approx(float(g(V)), rel=1e-9)
        assert np.all(np.abs(X @ cov.c) <= g(X) * (1 + 1e-9))


@pytest.mark.parametrize("spec", [dz.ball(1, 2), dz.diamond(1, 2), dz.pball(1.5, [1, 2]), dz.polydisc(1, 2),
                                  dz.intersection([dz.ball(1, 2), dz.polydisc(0.8, 0.8)])])
def test_balanced_center_collapse(spec, rng):
    X = rng.standard_normal((200, 2)) + 1j * rng.standard_normal((200, 2))
    h = dz.minkowski(spec, X)
    for kind in ("caratheodory", "azukawa", "kobayashi", "reciprocal_distance"):
        g, _ = metric_gauge(spec, [0, 0], kind)
        np.testing.assert_allclose(g(X), h, rtol=1e-12)


@given(st.integers(0, 9), st.floats(0.01, 100), st.floats(0, 2 * np.pi), st.integers(0, 2**31))
def test_homogeneity(row, mag, phase, seed):
    spec, a = supported_rows()[row]
    rng = np.random.default_rng(seed)
    X = rng.standard_normal(spec.dim) + 1j * rng.standard_normal(spec.dim)
    mu = mag * np.exp(1j * phase)
    for kind in ("caratheodory", "azukawa"):
        v1 = metric(spec, a, X, kind).value
        v2 = metric(spec, a, mu * X, kind).value
        assert v2 == pytest.approx(mag * v1, rel=1e-9)


@pytest.mark.parametrize("row", range(10))
def test_caratheodory_indicatrix_is_convex(row):
    spec, a = supported_rows()[row]
    rng = np.random.default_rng(100 + row)
    g, _ = metric_gauge(spec, a, "caratheodory")
    X = rng.standard_normal((4000, spec.dim)) + 1j * rng.standard_normal((4000, spec.dim))
    X = X / g(X)[:, None] * rng.random((4000, 1))
    P, Q = X[:2000], X[2000:]
    assert np.all(g((P + Q) / 2) < 1)

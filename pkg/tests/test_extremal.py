import numpy as np
import pytest
from math import factorial, pi

from caralab import domains as dz
from caralab.extremal import (
    DegenerateCofactorError,
    Frame,
    build_extremal_map,
    ce_bounds,
    empirical_k,
    diamond_ratios,
    min_pi_over_frames,
    npz_basis,
    polydisc_hull_volumes,
)
from caralab.metrics import metric_gauge
from caralab.rng import haar_unitary

BUDGET = 8000


def frame(spec, a=None):
    a = np.zeros(spec.dim) if a is None else a
    return npz_basis(spec, a, budget=BUDGET)


def test_npz_examples():
    f = frame(dz.polydisc(1, 2))
    np.testing.assert_allclose(np.abs(f.basis), np.eye(2), atol=1e-12)
    np.testing.assert_allclose(f.radii, [1, 0.5], rtol=1e-12)
    assert f.pi == pytest.approx(0.5, rel=1e-12)
    f = frame(dz.ball(1, 2))
    np.testing.assert_allclose(f.radii, [1, 1], rtol=1e-12)
    f = frame(dz.diamond(1, 1))
    np.testing.assert_allclose(f.radii, [np.sqrt(2)] * 2, rtol=1e-9)
    assert f.pi == pytest.approx(2, rel=1e-9)
    np.testing.assert_allclose(np.abs(f.basis[:, 0]), [2**-0.5] * 2, atol=1e-6)
    assert f.basis[0, 0].imag == 0 and f.basis[0, 0].real > 0


@pytest.mark.parametrize("spec, a", [
    (dz.polydisc(1, 2), [0.3, 1j]), (dz.ball(1, 3), [0.3, 0.2j, 0.1]), (dz.pball(3, [1, 2]), [0, 0]),
    (dz.product([dz.disc(1), dz.ball(1, 2)]), [0.4, 0.2, 0.3j]),
])
def test_frame_invariants(spec, a):
    f = frame(spec, np.asarray(a, dtype=complex))
    np.testing.assert_allclose(f.basis.conj().T @ f.basis, np.eye(spec.dim), atol=1e-10)
    assert f.pi == pytest.approx(np.prod(f.radii), rel=1e-12)
    assert 0 < f.k_hat <= 1
    assert np.all(np.diff(f.radii) <= 1e-9)
    lo, hi = diamond_ratios(spec, np.asarray(a, dtype=complex), f, 20_000, seed=1)
    assert hi <= 1 + 1e-9
    assert f.k_hat <= lo * (1 + 1e-6)


def test_npz_greedy_radius_is_max():
    spec, a = dz.pball(3, [1, 2]), np.zeros(2)
    f = frame(spec)
    g, _ = metric_gauge(spec, a, "caratheodory")
    X = np.random.default_rng(0).standard_normal((50_000, 2)) * (1 + 1j)
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    assert np.max(g(X)) <= f.radii[0] * (1 + 1e-9)


def test_empirical_k_examples():
    for n in (1, 2, 3):
        spec = dz.polydisc(*([1.0] * n))
        f = frame(spec)
        assert f.k_hat == pytest.approx(1 / n, rel=1e-3)
    f = frame(dz.ball(1, 2))
    assert f.k_hat == pytest.approx(2**-0.5, rel=1e-6)
    assert frame(dz.disc(1)).k_hat == pytest.approx(1.0, rel=1e-12)
    k, X, _ = empirical_k(dz.ball(1, 2), np.zeros(2), f, budget=BUDGET)
    assert k == pytest.approx(2**-0.5, rel=1e-6) and np.linalg.norm(X) == pytest.approx(1)


def test_build_examples():
    f = frame(dz.polydisc(1, 2))
    jac = build_extremal_map(dz.polydisc(1, 2), np.zeros(2), f)
    np.testing.assert_allclose(np.abs(jac.rows), [[1, 0], [0, 0.5]], atol=1e-12)
    assert abs(jac.det) == pytest.approx(0.5)
    np.testing.assert_allclose(np.abs(jac.cofactors[0]), [0, 1], atol=1e-12)
    f = frame(dz.diamond(1, 1))
    jac = build_extremal_map(dz.diamond(1, 1), np.zeros(2), f)
    assert abs(jac.det) == pytest.approx(2, rel=1e-9)
    np.testing.assert_allclose(np.abs(jac.rows), np.sqrt(2) * np.eye(2), atol=1e-6)
    f = frame(dz.ball(1, 2))
    jac = build_extremal_map(dz.ball(1, 2), np.zeros(2), f)
    np.testing.assert_allclose(np.abs(jac.rows), np.eye(2), atol=1e-12)


@pytest.mark.parametrize("spec, a", [
    (dz.ball(1, 3), [0.3, 0.2j, 0.1]), (dz.pball(1, [1, 1, 1]), [0, 0, 0]), (dz.pball(1.5, [1, 2]), [0, 0]),
    (dz.transform(dz.polydisc(1, 2), haar_unitary(np.random.default_rng(4), 2), 0.7), [0.1, 0.2]),
])
def test_lemma_and_upper_bound(spec, a):
    a = np.asarray(a, dtype=complex)
    f = frame(spec, a)
    jac = build_extremal_map(spec, a, f)
    n = spec.dim
    d = abs(jac.det)
    assert d >= (f.k_safe ** n) * f.pi * (1 - 1e-9)
    assert d <= factorial(n) * f.pi * (1 + 1e-9)
    assert max(jac.expansion_residuals) <= 1e-9
    g, _ = metric_gauge(spec, a, "caratheodory")
    X = np.random.default_rng(0).standard_normal((5000, n)) * (1 - 1j)
    for row in jac.ambient:
        assert np.all(np.abs(X @ row) <= g(X) * (1 + 1e-9))
    b = ce_bounds(jac, f)
    assert b.lower == pytest.approx(d**2) and b.upper == pytest.approx((factorial(n) * f.pi) ** 2)
    assert b.lower <= b.upper


def test_degenerate_cofactor():
    f = frame(dz.ball(1, 2))
    bad = Frame(np.array([[1, 1], [0, 0]], dtype=complex), f.radii, f.pi, f.k_hat, f.k_argmin)
    with pytest.raises(DegenerateCofactorError):
        build_extremal_map(dz.ball(1, 2), np.zeros(2), bad)


def test_ce_bounds_examples():
    for spec, lo, hi in ((dz.polydisc(1, 1), 1, 4), (dz.disc(1), 1, 1), (dz.diamond(1, 1), 4, 16)):
        f = frame(spec)
        b = ce_bounds(build_extremal_map(spec, np.zeros(spec.dim), f), f)
        assert (b.lower, b.upper) == (pytest.approx(lo, rel=1e-9), pytest.approx(hi, rel=1e-9))


def test_min_pi_examples():
    assert min_pi_over_frames(dz.ball(1, 2), np.zeros(2), budget=BUDGET).P == pytest.approx(1, rel=1e-9)
    # P = 1 / min Pi; for a single direction Pi = C = 4/3
    assert min_pi_over_frames(dz.disc(1), [0.5]).P == pytest.approx(0.75, rel=1e-12)


def test_min_pi_polydisc_beats_coordinate_frame():
    # for max(|X1|, |X2|/2) the frame spanned by (1, 2)/sqrt5 has Pi = 2/5 < 1/2
    spec = dz.polydisc(1, 2)
    g, _ = metric_gauge(spec, np.zeros(2), "caratheodory")
    U = np.array([[1, -2], [2, 1]]) / np.sqrt(5)
    assert np.prod(g(U.T)) == pytest.approx(0.4)
    res = min_pi_over_frames(spec, np.zeros(2), budget=BUDGET, frame=frame(spec))
    assert res.pi_min <= 0.4 * (1 + 1e-6)
    assert res.P == pytest.approx(2.5, rel=1e-5)


def test_hull_volume_examples():
    h = polydisc_hull_volumes(dz.polydisc(1, 2), np.zeros(2), budget=BUDGET)
    assert h.inscribed.volume == pytest.approx(4 * pi**2, rel=1e-6)
    assert h.circumscribed.volume == pytest.approx(4 * pi**2, rel=1e-6)
    h = polydisc_hull_volumes(dz.diamond(1, 1), np.zeros(2), budget=BUDGET)
    assert h.inscribed_coordinate.volume == pytest.approx(pi**2 / 16, rel=1e-6)
    np.testing.assert_allclose(h.inscribed_coordinate.radii, [0.5, 0.5], rtol=1e-6)
    assert h.circumscribed_coordinate.volume == pytest.approx(pi**2, rel=1e-9)
    assert h.inscribed.volume >= h.inscribed_coordinate.volume * (1 - 1e-9)
    assert h.circumscribed.volume <= h.circumscribed_coordinate.volume * (1 + 1e-9)
    h = polydisc_hull_volumes(dz.ball(1, 2), np.zeros(2), budget=BUDGET)
    assert h.inscribed.volume == pytest.approx(pi**2 / 4, rel=1e-6)
    np.testing.assert_allclose(h.inscribed.radii, [2**-0.5] * 2, rtol=1e-6)
    assert h.circumscribed.volume == pytest.approx(pi**2, rel=1e-9)


def test_unitary_invariance():
    spec, a = dz.pball(1.5, [1, 2]), np.array([0, 0], dtype=complex)
    U = haar_unitary(np.random.default_rng(9), 2)
    rot = dz.transform(spec, U)
    f0, f1 = frame(spec, a), frame(rot, U @ a)
    assert f1.pi == pytest.approx(f0.pi, rel=1e-6)
    assert f1.k_hat == pytest.approx(f0.k_hat, rel=1e-6)
    b0 = ce_bounds(build_extremal_map(spec, a, f0), f0)
    b1 = ce_bounds(build_extremal_map(rot, U @ a, f1), f1)
    assert b1.lower == pytest.approx(b0.lower, rel=1e-6) and b1.upper == pytest.approx(b0.upper, rel=1e-6)


def test_scaling():
    spec, a = dz.ball(1, 3), np.array([0.2, 0.1j, 0])
    lam = 1.5 - 0.5j
    f0 = frame(spec, a)
    scaled = dz.transform(spec, None, lam)
    f1 = frame(scaled, lam * a)
    assert f1.pi == pytest.approx(f0.pi * abs(lam) ** -3, rel=1e-6)
    b0 = ce_bounds(build_extremal_map(spec, a, f0), f0)
    b1 = ce_bounds(build_extremal_map(scaled, lam * a, f1), f1)
    assert b1.lower == pytest.approx(b0.lower * abs(lam) ** -6, rel=1e-6)

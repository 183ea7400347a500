import numpy as np
import pytest
from hypothesis import given, strategies as st

from caralab.optimize import givens_pairs, givens_unitary, multistart_minimize, sphere_params, sphere_point
from caralab.rng import haar_unitary, stream, unit_vectors


def test_streams_are_keyed():
    a = stream(1, "x", 2).random(5)
    assert np.array_equal(a, stream(1, "x", 2).random(5))
    assert not np.array_equal(a, stream(1, "x", 3).random(5))
    assert not np.array_equal(a, stream(2, "x", 2).random(5))
    assert not np.array_equal(a, stream(1, "y", 2).random(5))


def test_unit_vectors_and_haar():
    Y = unit_vectors(stream(0), 1000, 3)
    np.testing.assert_allclose(np.linalg.norm(Y, axis=1), 1, rtol=1e-12)
    U = haar_unitary(stream(0), 4)
    np.testing.assert_allclose(U.conj().T @ U, np.eye(4), atol=1e-12)


@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_sphere_round_trip(k, seed):
    y = unit_vectors(np.random.default_rng(seed), 1, k)[0]
    y = y * np.exp(-1j * np.angle(y[0]))
    np.testing.assert_allclose(sphere_point(sphere_params(y), k), y, atol=1e-10)


@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_givens_unitary(n, seed):
    p = np.random.default_rng(seed).uniform(-3, 3, 2 * len(givens_pairs(n)) + n)
    U = givens_unitary(p, n)
    np.testing.assert_allclose(U.conj().T @ U, np.eye(n), atol=1e-12)


def test_multistart_finds_minimum():
    fun = lambda x: (x[0] - 1) ** 2 + 10 * (x[1] + 0.5) ** 2 + 2
    res = multistart_minimize(fun, [np.zeros(2), np.array([5.0, 5.0])], 2000)
    assert res.fun == pytest.approx(2, abs=1e-10)
    np.testing.assert_allclose(res.x, [1, -0.5], atol=1e-5)

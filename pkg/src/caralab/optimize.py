"""Derivative-free search on complex spheres and on the unitary group.

Parametrizations
----------------
* unit sphere of C^k modulo a global phase: ``k-1`` hyperspherical angles
  for the moduli followed by ``k-1`` phases (the first coordinate is kept
  real and nonnegative);
* U(n) modulo right multiplication by diagonal phases: a product of
  ``n(n-1)/2`` complex Givens rotations, two parameters each.

Local refinement is scipy's Powell method (line searches along coordinate
directions) followed by a Nelder-Mead polish; starts are run in index order
and ties keep the lowest start index.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.optimize import minimize


def sphere_point(params, k: int) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    if k == 1:
        return np.ones(1, dtype=complex)
    angles, phases = params[: k - 1], params[k - 1 :]
    mags = np.empty(k)
    s = 1.0
    for i in range(k - 1):
        mags[i] = s * np.cos(angles[i])
        s *= np.sin(angles[i])
    mags[k - 1] = s
    y = mags.astype(complex)
    y[1:] *= np.exp(1j * phases)
    return y


def sphere_params(y) -> np.ndarray:
    y = np.asarray(y, dtype=complex)
    k = y.shape[0]
    if k == 1:
        return np.zeros(0)
    y = y / np.linalg.norm(y)
    if abs(y[0]) > 0:
        y = y * (abs(y[0]) / y[0])
    mags = np.abs(y)
    angles = np.empty(k - 1)
    for i in range(k - 1):
        angles[i] = np.arctan2(np.linalg.norm(mags[i + 1 :]), mags[i])
    return np.concatenate([angles, np.angle(y[1:])])


def givens_pairs(n: int):
    return list(combinations(range(n), 2))


def givens_unitary(params, n: int) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    u = np.eye(n, dtype=complex)
    for idx, (i, j) in enumerate(givens_pairs(n)):
        theta, phi = params[2 * idx], params[2 * idx + 1]
        c, s = np.cos(theta), np.sin(theta)
        g = np.eye(n, dtype=complex)
        g[i, i] = c
        g[j, j] = c
        g[i, j] = -s * np.exp(-1j * phi)
        g[j, i] = s * np.exp(1j * phi)
        u = u @ g
    return u


@dataclass
class SearchResult:
    x: np.ndarray
    fun: float
    start_index: int
    nfev: int


def multistart_minimize(fun, starts, budget: int, *, xatol: float = 1e-10, fatol: float = 1e-14) -> SearchResult:
    """Minimize ``fun`` from each start; the total evaluation budget is shared evenly."""
    starts = [np.asarray(s, dtype=float) for s in starts]
    if not starts:
        raise ValueError("no starting points")
    per_start = max(int(budget) // len(starts), 40)
    best = None
    total = 0
    for idx, x0 in enumerate(starts):
        f0 = float(fun(x0))
        x_best, f_best = x0, f0
        if x0.size:
            res = minimize(fun, x0, method="Powell",
                           options={"maxfev": max(per_start * 2 // 3, 20), "xtol": xatol, "ftol": fatol})
            total += res.nfev
            if res.fun < f_best:
                x_best, f_best = np.atleast_1d(res.x), float(res.fun)
            polish = minimize(fun, x_best, method="Nelder-Mead",
                              options={"maxfev": max(per_start // 3, 20), "xatol": xatol, "fatol": fatol})
            total += polish.nfev
            if polish.fun < f_best:
                x_best, f_best = polish.x, float(polish.fun)
        total += 1
        if best is None or f_best < best.fun:
            best = SearchResult(np.asarray(x_best, dtype=float), f_best, idx, 0)
    best.nfev = total
    return best

"""Frames, the cofactor recursion for extremal maps, and determinant bounds.

At a base point ``a`` the Carathéodory metric ``C = C_D(a; .)`` is a norm on
C^n.  This module builds

* the greedy orthonormal frame ``e_1..e_n`` (each ``e_j`` maximizes ``C`` on
  the unit sphere of the orthogonal complement of the previous vectors),
  with radii ``r_j = C(e_j)``, their product ``pi`` and the empirical
  constant ``k_hat = min C(X) / sum_j |X_j| r_j`` (frame coordinates);
* the Jacobian of a map into the polydisc assembled row by row from
  extremal covectors, the ``(m+1)``-th row being extremal in the direction of
  the signed cofactors of the first ``m`` rows;
* the remaining frame-dependent quantities: min of ``pi`` over all unitary
  frames and the largest inscribed / smallest circumscribed polydiscs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial, pi as PI

import numpy as np
from scipy.linalg import null_space

from .gauges import Gauge
from .metrics import MetricKind, metric_gauge
from .optimize import givens_unitary, multistart_minimize, sphere_params, sphere_point
from .rng import haar_unitary, stream, unit_vectors

DEFAULT_BUDGET = 20_000
K_SAFETY = 1e-6


class DegenerateCofactorError(ArithmeticError):
    """All signed cofactors vanished: an earlier row was not extremal."""


@dataclass
class Frame:
    basis: np.ndarray
    radii: np.ndarray
    pi: float
    k_hat: float
    k_argmin: np.ndarray
    evaluations: int = 0

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def k_safe(self) -> float:
        """k_hat shrunk by the one-sided optimization allowance."""
        return self.k_hat * (1 - K_SAFETY)


@dataclass
class ExtremalMapJacobian:
    rows: np.ndarray
    det: complex
    cofactors: list = field(default_factory=list)
    minors: list = field(default_factory=list)
    expansion_residuals: list = field(default_factory=list)
    basis: np.ndarray | None = None

    @property
    def ambient(self) -> np.ndarray:
        """F'(a) in the standard coordinates; |det| is unchanged."""
        return self.rows @ self.basis.conj().T


@dataclass(frozen=True)
class CEBounds:
    lower: float
    upper: float


def _cnorm(spec, a) -> Gauge:
    g, _ = metric_gauge(spec, a, MetricKind.CARATHEODORY)
    if not g.convex:
        raise ValueError("Carathéodory gauge is not convex")
    return g


def _normalize_phase(e):
    e = e / np.linalg.norm(e)
    for x in e:
        if abs(x) > 1e-12:
            return e * (abs(x) / x)
    return e


def npz_basis(spec, a, *, budget: int = DEFAULT_BUDGET, seed: int = 0, key=()) -> Frame:
    """Greedy frame of directions of largest Carathéodory length."""
    a = np.asarray(a, dtype=complex)
    norm = _cnorm(spec, a)
    n = spec.dim
    B = np.eye(n, dtype=complex)
    vecs = []
    evals = 0
    for stage in range(n):
        k = B.shape[1]
        if k == 1:
            y = np.ones(1, dtype=complex)
        else:
            rng = stream(seed, *key, "npz", stage)
            probes = unit_vectors(rng, min(4096, max(budget // 4, 64)), k)
            vals = norm(probes @ B.T)
            evals += len(probes)
            order = np.argsort(-vals, kind="stable")[:32]

            def neg(params, B=B, k=k):
                return -float(norm(B @ sphere_point(params, k)))

            res = multistart_minimize(neg, [sphere_params(probes[i]) for i in order], budget * 3 // 4)
            evals += res.nfev
            y, best = sphere_point(res.x, k), -res.fun
            if vals[order[0]] > best:
                y, best = probes[order[0]], float(vals[order[0]])
            cols = norm(B.T)
            j = int(np.argmax(cols))
            if cols[j] >= best * (1 - 1e-12):
                y = np.eye(k, dtype=complex)[j]
        e = _normalize_phase(B @ y)
        vecs.append(e)
        if k > 1:
            B = B @ null_space((B.conj().T @ e)[None, :].conj())
    E = np.stack(vecs, axis=1)
    radii = np.asarray(norm(E.T), dtype=float)
    frame = Frame(E, radii, float(np.prod(radii)), 1.0, E[:, 0].copy(), evals)
    k_hat, argmin, k_evals = empirical_k(spec, a, frame, budget=budget, seed=seed, key=key)
    frame.k_hat, frame.k_argmin = k_hat, argmin
    frame.evaluations += k_evals
    return frame


def _weighted(y, r):
    """Frame coordinates with sum_j r_j |Y_j| = |y|^2."""
    mag = np.abs(y)
    ph = np.where(mag > 0, y / np.where(mag > 0, mag, 1), 1)
    return mag**2 * ph / r


def empirical_k(spec, a, frame: Frame, *, budget: int = DEFAULT_BUDGET, seed: int = 0, key=()):
    """Smallest found value of C(X) / sum_j |X_j| r_j; returns (k_hat, minimizing unit X, evaluations)."""
    norm = _cnorm(spec, a)
    E, r = frame.basis, frame.radii
    n = E.shape[0]
    rng = stream(seed, *key, "khat")
    probes = unit_vectors(rng, 10_000, n)
    vals = norm(_weighted(probes, r) @ E.T)
    order = np.argsort(vals, kind="stable")[:32]
    y, best = probes[order[0]], float(vals[order[0]])
    evals = len(probes)
    if n > 1:
        def ratio(params):
            return float(norm(E @ _weighted(sphere_point(params, n), r)))

        res = multistart_minimize(ratio, [sphere_params(probes[i]) for i in order], budget)
        evals += res.nfev
        if res.fun < best:
            y, best = sphere_point(res.x, n), res.fun
    X = E @ _weighted(y, r)
    return min(best, 1.0), X / np.linalg.norm(X), evals


def diamond_ratios(spec, a, frame: Frame, samples: int = 100_000, *, seed: int = 0, key=()):
    """Min and max of C(X) / sum_j |X_j| r_j over fresh random directions."""
    norm = _cnorm(spec, a)
    Y = unit_vectors(stream(seed, *key, "ratios"), samples, frame.n)
    ratio = norm(Y @ frame.basis.T) / (np.abs(Y) @ frame.radii)
    return float(ratio.min()), float(ratio.max())


def build_extremal_map(spec, a, frame: Frame) -> ExtremalMapJacobian:
    """Rows f_i'(a) in frame coordinates via the signed-cofactor recursion."""
    norm = _cnorm(spec, a)
    E = frame.basis
    n = E.shape[0]
    rows = np.zeros((n, n), dtype=complex)
    rows[0] = norm.covector(E[:, 0]) @ E
    jac = ExtremalMapJacobian(rows, rows[0, 0], basis=E)
    jac.minors.append(rows[0, 0])
    for m in range(1, n):
        block = rows[:m, : m + 1]
        V = np.array([(-1) ** (m + 1 + j) * np.linalg.det(np.delete(block, j - 1, axis=1))
                      for j in range(1, m + 2)])
        Vpad = np.zeros(n, dtype=complex)
        Vpad[: m + 1] = V
        lifted = E @ Vpad
        if not np.any(np.abs(V) > 0) or np.linalg.norm(lifted) <= 1e-12 * np.linalg.norm(V):
            raise DegenerateCofactorError(f"cofactor vector vanished at depth {m}")
        rows[m] = norm.covector(E @ Vpad) @ E
        minor = np.linalg.det(rows[: m + 1, : m + 1])
        expansion = rows[m, : m + 1] @ V
        jac.cofactors.append(V)
        jac.minors.append(minor)
        jac.expansion_residuals.append(float(abs(minor - expansion) / max(abs(minor), 1e-300)))
    jac.det = jac.minors[-1]
    return jac


def ce_bounds(jac: ExtremalMapJacobian, frame: Frame) -> CEBounds:
    n = frame.n
    return CEBounds(float(abs(jac.det)) ** 2, (factorial(n) * frame.pi) ** 2)


# frame optimizations ---------------------------------------------------------
@dataclass
class PValue:
    P: float
    pi_min: float
    basis: np.ndarray


def _start_frames(n, frame, seed, key, count):
    starts = []
    if frame is not None:
        starts.append(np.asarray(frame.basis, dtype=complex))
    starts.append(np.eye(n, dtype=complex))
    rng = stream(seed, *key, "frames")
    while len(starts) < count:
        starts.append(haar_unitary(rng, n))
    return starts


def min_pi_over_frames(spec, a, *, budget: int = DEFAULT_BUDGET, seed: int = 0, key=(), frame=None,
                       starts: int = 16) -> PValue:
    """P = 1 / (smallest found product of C over orthonormal frames)."""
    norm = _cnorm(spec, a)
    n = spec.dim
    if n == 1:
        p = float(norm(np.ones(1)))
        return PValue(1.0 / p, p, np.eye(1, dtype=complex))
    npar = n * (n - 1)
    best_val, best_U = np.inf, None
    for U0 in _start_frames(n, frame, seed, key, starts):
        def logpi(params, U0=U0):
            U = U0 @ givens_unitary(params, n)
            return float(np.sum(np.log(norm(U.T))))

        res = multistart_minimize(logpi, [np.zeros(npar)], budget // starts)
        if res.fun < best_val:
            best_val, best_U = res.fun, U0 @ givens_unitary(res.x, n)
    pi_min = float(np.exp(best_val))
    return PValue(1.0 / pi_min, pi_min, best_U)


@dataclass
class PolydiscFit:
    volume: float
    radii: np.ndarray
    basis: np.ndarray


@dataclass
class HullVolumes:
    inscribed: PolydiscFit
    circumscribed: PolydiscFit
    inscribed_coordinate: PolydiscFit
    circumscribed_coordinate: PolydiscFit


def _torus(n, grid=32):
    if n == 1:
        return np.ones((1, 1), dtype=complex)
    th = 2 * PI * np.arange(grid) / grid
    mesh = np.meshgrid(*([th] * (n - 1)), indexing="ij")
    T = np.stack([np.zeros_like(mesh[0]), *mesh], axis=-1).reshape(-1, n)
    return np.exp(1j * T)


def _sigma(params, n):
    return np.abs(sphere_point(np.concatenate([params, np.zeros(n - 1)]), n).real) if n > 1 else np.ones(1)


def _sigma_params(s):
    s = np.asarray(s, dtype=float)
    return sphere_params(s.astype(complex))[: s.size - 1]


def _torus_sup(norm, U, s, T, refine=False):
    vals = norm((T * s) @ U.T)
    best = float(np.max(vals))
    n = U.shape[0]
    if refine and n > 1:
        from scipy.optimize import minimize

        for i in np.argsort(-vals)[:4]:
            th0 = np.angle(T[i, 1:])

            def neg(th):
                z = s * np.exp(1j * np.concatenate([[0.0], th]))
                return -float(norm(U @ z))

            res = minimize(neg, th0, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15, "maxfev": 2000})
            best = max(best, -res.fun)
    return best


def _inscribed(norm, U0, s0, T, budget, optimize_frame=True):
    n = U0.shape[0]
    ng = n * (n - 1) if optimize_frame else 0

    def unpack(x):
        U = U0 @ givens_unitary(x[:ng], n) if ng else U0
        return U, _sigma(x[ng:], n)

    def objective(x):
        U, s = unpack(x)
        m = _torus_sup(norm, U, s, T)
        return -float(np.sum(np.log(np.maximum(s, 1e-300))) - n * np.log(m))

    x0 = np.concatenate([np.zeros(ng), _sigma_params(s0)])
    if x0.size == 0:
        U, s = unpack(x0)
    else:
        res = multistart_minimize(objective, [x0], budget)
        U, s = unpack(res.x)
    m = _torus_sup(norm, U, s, T, refine=True)
    radii = s / m
    return PolydiscFit(float(PI**n * np.prod(radii**2)), radii, U)


def _circumscribed(norm, U0, budget, optimize_frame=True):
    n = U0.shape[0]

    def radii_of(U):
        return np.array([norm.dual(U[:, j].conj()) for j in range(n)])

    U = U0
    if optimize_frame and n > 1:
        def objective(x):
            return float(np.sum(np.log(radii_of(U0 @ givens_unitary(x, n)))))

        res = multistart_minimize(objective, [np.zeros(n * (n - 1))], budget)
        U = U0 @ givens_unitary(res.x, n)
    radii = radii_of(U)
    return PolydiscFit(float(PI**n * np.prod(radii**2)), radii, U)


def polydisc_hull_volumes(spec, a, *, budget: int = DEFAULT_BUDGET, seed: int = 0, key=(), frame=None,
                          starts: int = 8, grid: int = 32) -> HullVolumes:
    """Largest inscribed and smallest circumscribed polydiscs of the Carathéodory indicatrix.

    Optimized over unitary orientations (best found) and, separately,
    restricted to the coordinate axes.
    """
    norm = _cnorm(spec, a)
    n = spec.dim
    T = _torus(n, grid)
    eye = np.eye(n, dtype=complex)
    frames = _start_frames(n, frame, seed, key, starts)
    per = max(budget // (2 * len(frames)), 100)
    ins_best = circ_best = None
    for i, U0 in enumerate(frames):
        s0 = 1.0 / frame.radii if (frame is not None and i == 0) else np.ones(n)
        ins = _inscribed(norm, U0, s0 / np.linalg.norm(s0), T, per)
        if ins_best is None or ins.volume > ins_best.volume:
            ins_best = ins
        circ = _circumscribed(norm, U0, per)
        if circ_best is None or circ.volume < circ_best.volume:
            circ_best = circ
    ins_coord = _inscribed(norm, eye, np.ones(n) / np.sqrt(n), T, budget // 4, optimize_frame=False)
    circ_coord = _circumscribed(norm, eye, 0, optimize_frame=False)
    return HullVolumes(ins_best, circ_best, ins_coord, circ_coord)

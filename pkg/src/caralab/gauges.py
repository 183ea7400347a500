"""Absolutely 1-homogeneous functions on C^n.

A :class:`Gauge` maps complex arrays of shape ``(..., n)`` to nonnegative
reals with ``g(mu X) = |mu| g(X)``.  Minkowski functionals of balanced
domains, reciprocal boundary distances and infinitesimal metrics at a fixed
base point are all gauges.  Convex gauges (norms) additionally provide

* ``covector(V)``: a row ``c`` with ``c @ V == g(V)`` and ``|c @ X| <= g(X)``
  for every ``X`` (a supporting functional of the unit ball at ``V``);
* ``dual(c)``: ``sup {|c @ X| : g(X) < 1}``;
* ``unit_ball_volume()``: Lebesgue measure of ``{g < 1}`` in R^{2n}, when a
  closed form is known (``None`` otherwise).
"""

from __future__ import annotations

from math import factorial, gamma, pi

import numpy as np

from .optimize import multistart_minimize, sphere_params, sphere_point
from .rng import stream, unit_vectors


class Gauge:
    convex = False
    vectorized = True

    def __init__(self, n: int):
        self.n = int(n)

    def __call__(self, X):
        X = np.asarray(X, dtype=complex)
        if X.shape[-1] != self.n:
            raise ValueError(f"expected vectors of dimension {self.n}, got shape {X.shape}")
        return self._eval(X)

    def _eval(self, X):
        raise NotImplementedError

    def covector(self, V) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no supporting covector")

    def dual(self, c) -> float:
        if not self.convex:
            raise NotImplementedError(f"{type(self).__name__} is not a norm")
        return _numeric_dual(self, np.asarray(c, dtype=complex))

    def unit_ball_volume(self):
        return None


def _numeric_dual(g: Gauge, c: np.ndarray, probes: int = 4096, starts: int = 8) -> float:
    """sup |c X| / g(X) over the unit sphere (best found, so a lower bound)."""
    n = g.n
    rng = stream(0, "dual", n)
    Y = unit_vectors(rng, probes, n)
    vals = np.abs(Y @ c) / g(Y)
    order = np.argsort(-vals)[:starts]

    def neg(params):
        y = sphere_point(params, n)
        return -abs(c @ y) / g(y)

    res = multistart_minimize(neg, [sphere_params(Y[i]) for i in order], budget=400 * starts)
    return float(max(-res.fun, vals[order[0]]))


def _phase(z):
    """Unimodular factor of z, with 1 for z == 0."""
    z = np.asarray(z, dtype=complex)
    mag = np.abs(z)
    out = np.ones_like(z)
    nz = mag > 0
    out[nz] = z[nz] / mag[nz]
    return out


class WeightedMaxNorm(Gauge):
    """g(X) = max_j w_j |X_j|; the Minkowski functional of a polydisc."""

    convex = True

    def __init__(self, weights):
        w = np.asarray(weights, dtype=float)
        super().__init__(w.size)
        self.w = w

    def _eval(self, X):
        return np.max(self.w * np.abs(X), axis=-1)

    def covector(self, V):
        V = np.asarray(V, dtype=complex)
        vals = self.w * np.abs(V)
        j = int(np.argmax(vals))  # argmax returns the smallest index on ties
        c = np.zeros(self.n, dtype=complex)
        c[j] = self.w[j] * np.conj(_phase(V[j]))
        return c

    def dual(self, c):
        return float(np.sum(np.abs(np.asarray(c)) / self.w))

    def unit_ball_volume(self):
        return float(np.prod(pi / self.w**2))


class PowerGauge(Gauge):
    """Minkowski functional of {sum_j (|z_j|/rho_j)^{q_j} < 1}.

    Convex iff every q_j >= 1.  q = 1 gives the weighted l1 (diamond) norm,
    q = 2 the ball.
    """

    def __init__(self, q, rho):
        q = np.asarray(q, dtype=float)
        rho = np.asarray(rho, dtype=float)
        if q.shape != rho.shape:
            raise ValueError("q and rho must have equal length")
        super().__init__(q.size)
        self.q = q
        self.rho = rho
        self.convex = bool(np.all(q >= 1.0))
        self.uniform = bool(np.all(q == q[0]))

    def _eval(self, X):
        t = np.abs(X) / self.rho
        if self.uniform:
            p = self.q[0]
            if p == 1.0:
                return np.sum(t, axis=-1)
            m = np.max(t, axis=-1)
            safe = np.where(m > 0, m, 1.0)
            return m * np.sum((t / safe[..., None]) ** p, axis=-1) ** (1.0 / p)
        m = np.max(t, axis=-1)
        out = np.zeros_like(m)
        nz = m > 0
        if not np.any(nz):
            return out
        tt = t[nz] / m[nz][..., None]
        # sum_j (tt_j / s)^{q_j} = 1 has its root in [1, n^{1/q_min}]
        lo = np.zeros(tt.shape[0])
        hi = np.full(tt.shape[0], np.log(self.n) / np.min(self.q) + 1e-12)
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            f = np.sum(tt ** self.q * np.exp(-self.q * mid[:, None]), axis=-1)
            big = f > 1.0
            lo = np.where(big, mid, lo)
            hi = np.where(big, hi, mid)
        out[nz] = m[nz] * np.exp(0.5 * (lo + hi))
        return out

    def covector(self, V):
        if not self.convex:
            raise NotImplementedError("nonconvex power gauge has no supporting covector")
        V = np.asarray(V, dtype=complex)
        h = float(self(V))
        if h == 0:
            raise ValueError("zero direction")
        a = np.abs(V)
        u = (a / (h * self.rho)) ** self.q
        denom = float(np.sum(self.q * u))
        c = np.zeros(self.n, dtype=complex)
        for j in range(self.n):
            if a[j] > 0:
                c[j] = self.q[j] * u[j] * h / (V[j] * denom)
        return c

    def dual(self, c):
        if not self.convex:
            raise NotImplementedError("not a norm")
        if not self.uniform:
            return super().dual(c)
        b = self.rho * np.abs(np.asarray(c))
        p = self.q[0]
        if p == 1.0:
            return float(np.max(b))
        ps = p / (p - 1.0)
        return float(np.sum(b**ps) ** (1.0 / ps))

    def unit_ball_volume(self):
        e = 2.0 / self.q
        return float(pi**self.n * np.prod(self.rho**2) * np.prod([gamma(1 + x) for x in e]) / gamma(1 + e.sum()))


class HermitianNorm(Gauge):
    """g(X) = sqrt(X^H M X) for a Hermitian positive definite M."""

    convex = True

    def __init__(self, M):
        M = np.asarray(M, dtype=complex)
        super().__init__(M.shape[0])
        self.M = 0.5 * (M + M.conj().T)
        self.Minv = np.linalg.inv(self.M)

    def _eval(self, X):
        q = np.einsum("...i,ij,...j->...", X.conj(), self.M, X).real
        return np.sqrt(np.maximum(q, 0.0))

    def covector(self, V):
        V = np.asarray(V, dtype=complex)
        h = float(self(V))
        if h == 0:
            raise ValueError("zero direction")
        return (V.conj() @ self.M) / h

    def dual(self, c):
        c = np.asarray(c, dtype=complex)
        return float(np.sqrt(max((c @ self.Minv @ c.conj()).real, 0.0)))

    def unit_ball_volume(self):
        return float(pi**self.n / (factorial(self.n) * np.linalg.det(self.M).real))


class BallDistanceGauge(Gauge):
    """Reciprocal distance to the boundary of the ball |z| < rho along X, seen from a."""

    def __init__(self, a, rho):
        a = np.asarray(a, dtype=complex)
        super().__init__(a.size)
        self.a = a
        self.rho = float(rho)
        self.gap = self.rho**2 - float(np.vdot(a, a).real)
        if self.gap <= 0:
            raise ValueError("base point outside the ball")

    def _eval(self, X):
        s = np.abs(X @ self.a.conj())
        nx2 = np.sum(np.abs(X) ** 2, axis=-1)
        return (np.sqrt(nx2 * self.gap + s**2) + s) / self.gap


class BlockMaxGauge(Gauge):
    """max over consecutive coordinate blocks; the gauge of a product domain."""

    def __init__(self, parts):
        self.parts = list(parts)
        self.sizes = [g.n for g in self.parts]
        super().__init__(sum(self.sizes))
        self.offsets = np.cumsum([0] + self.sizes)
        self.convex = all(g.convex for g in self.parts)
        self.vectorized = all(g.vectorized for g in self.parts)

    def _blocks(self, X):
        for g, lo, hi in zip(self.parts, self.offsets[:-1], self.offsets[1:]):
            yield g, X[..., lo:hi], lo, hi

    def _eval(self, X):
        return np.max(np.stack([g(Xb) for g, Xb, _, _ in self._blocks(X)], axis=-1), axis=-1)

    def covector(self, V):
        V = np.asarray(V, dtype=complex)
        vals = [float(g(Vb)) for g, Vb, _, _ in self._blocks(V)]
        k = int(np.argmax(vals))
        g, Vb, lo, hi = list(self._blocks(V))[k]
        c = np.zeros(self.n, dtype=complex)
        c[lo:hi] = g.covector(Vb)
        return c

    def dual(self, c):
        c = np.asarray(c, dtype=complex)
        return float(sum(g.dual(c[lo:hi]) for g, _, lo, hi in self._blocks(c)))

    def unit_ball_volume(self):
        vols = [g.unit_ball_volume() for g in self.parts]
        if any(v is None for v in vols):
            return None
        return float(np.prod(vols))


class MaxGauge(Gauge):
    """Pointwise max of gauges on the same space; the gauge of an intersection."""

    def __init__(self, parts):
        self.parts = list(parts)
        super().__init__(self.parts[0].n)
        self.convex = all(g.convex for g in self.parts)
        self.vectorized = all(g.vectorized for g in self.parts)

    def _eval(self, X):
        return np.max(np.stack([g(X) for g in self.parts], axis=-1), axis=-1)

    def covector(self, V):
        vals = [float(g(V)) for g in self.parts]
        return self.parts[int(np.argmax(vals))].covector(V)


class PullbackGauge(Gauge):
    """X -> g(A X) for an invertible complex matrix A."""

    def __init__(self, base: Gauge, A):
        A = np.asarray(A, dtype=complex)
        super().__init__(A.shape[1])
        self.base = base
        self.A = A
        self.Ainv = np.linalg.inv(A)
        self.convex = base.convex
        self.vectorized = base.vectorized

    def _eval(self, X):
        return self.base(X @ self.A.T)

    def covector(self, V):
        V = np.asarray(V, dtype=complex)
        return self.base.covector(self.A @ V) @ self.A

    def dual(self, c):
        return self.base.dual(np.asarray(c, dtype=complex) @ self.Ainv)

    def unit_ball_volume(self):
        v = self.base.unit_ball_volume()
        if v is None:
            return None
        return float(v / abs(np.linalg.det(self.A)) ** 2)


class TableHullNorm(Gauge):
    """Reinhardt norm max_k W_k . |X| built from a table of support directions.

    Row ``W_k = c_k / H(c_k)`` where ``H`` is the support function of the
    modulus image of a Reinhardt body, so the unit ball contains the body's
    convex hull and converges to it as the table is refined.
    """

    convex = True

    def __init__(self, W):
        W = np.asarray(W, dtype=float)
        super().__init__(W.shape[1])
        self.W = W

    def _eval(self, X):
        a = np.abs(X)
        flat = a.reshape(-1, self.n)
        out = np.empty(flat.shape[0])
        step = max(1, 2_000_000 // max(self.W.shape[0], 1))
        for lo in range(0, flat.shape[0], step):
            out[lo : lo + step] = np.max(flat[lo : lo + step] @ self.W.T, axis=-1)
        return out.reshape(a.shape[:-1])

    def covector(self, V):
        V = np.asarray(V, dtype=complex)
        k = int(np.argmax(self.W @ np.abs(V)))
        c = self.W[k] * np.conj(_phase(V))
        c[np.abs(V) == 0] = 0
        return c

    def dual(self, c):
        from scipy.optimize import linprog

        b = np.abs(np.asarray(c))
        res = linprog(-b, A_ub=self.W, b_ub=np.ones(self.W.shape[0]), bounds=[(0, None)] * self.n, method="highs")
        if res.status != 0:
            raise RuntimeError(f"support LP failed: {res.message}")
        return float(-res.fun)


class FunctionGauge(Gauge):
    """Gauge given by a scalar callable; evaluated point by point."""

    vectorized = False

    def __init__(self, n, fn, convex=False):
        super().__init__(n)
        self.fn = fn
        self.convex = convex

    def _eval(self, X):
        flat = X.reshape(-1, self.n)
        return np.array([self.fn(x) for x in flat]).reshape(X.shape[:-1])

"""Carathéodory, Azukawa and Kobayashi metrics and reciprocal boundary distance.

Every metric is returned as a gauge in the direction variable at a fixed base
point.  Backends:

* automorphism closed forms for discs, polydiscs and balls at any point,
  propagated through products (metrics of a product are the max of the
  factors) and affine transforms;
* the balanced-center reduction: at the center of a balanced pseudoconvex
  domain the Azukawa and Kobayashi metrics equal the Minkowski functional,
  and the Carathéodory metric is the Minkowski functional of the convex hull;
* on convex domains Carathéodory and Kobayashi coincide (Lempert), which
  pins the Azukawa metric in between.

Anything else raises :class:`NoBackendError`.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from . import domains as dz
from .gauges import BlockMaxGauge, Gauge, HermitianNorm, PowerGauge, PullbackGauge, TableHullNorm, WeightedMaxNorm


class MetricKind(str, Enum):
    CARATHEODORY = "caratheodory"
    AZUKAWA = "azukawa"
    KOBAYASHI = "kobayashi"
    RECIPROCAL_DISTANCE = "reciprocal_distance"


class Backend(str, Enum):
    CLOSED_FORM = "closed_form"
    MINKOWSKI_REDUCTION = "minkowski_reduction"
    PHASE_SEARCH = "phase_search"
    UNSUPPORTED = "unsupported"


class NoBackendError(LookupError):
    """No trustworthy way to evaluate this metric at this point."""


@dataclass(frozen=True)
class MetricValue:
    value: float
    kind: MetricKind
    backend: Backend


@dataclass(frozen=True)
class GreenValueAtCenter:
    value: float
    w: tuple


@dataclass(frozen=True)
class ExtremalCovector:
    c: np.ndarray
    direction: np.ndarray
    value: float


def _worst(*tags):
    order = [Backend.CLOSED_FORM, Backend.MINKOWSKI_REDUCTION, Backend.PHASE_SEARCH]
    return max(tags, key=order.index)


def _center(spec, a) -> bool:
    return spec.balanced and bool(np.all(np.asarray(a) == 0))


# convex hulls of nonconvex Reinhardt members ----------------------------------
def _project_simplex(V):
    """Euclidean projection of each row of V onto the probability simplex."""
    V = np.atleast_2d(V)
    m, n = V.shape
    U = -np.sort(-V, axis=1)
    css = np.cumsum(U, axis=1) - 1.0
    ind = np.arange(1, n + 1)
    k = np.sum(U * ind > css, axis=1)
    tau = css[np.arange(m), k - 1] / k
    return np.maximum(V - tau[:, None], 0.0)


def _support_batch(q, rho, C, *, starts: int = 32, tol: float = 1e-8, seed: int = 0, maxiter: int = 4000):
    """Row-wise reinhardt_support for a (D, n) array of nonnegative directions."""
    q, rho = np.asarray(q, dtype=float), np.asarray(rho, dtype=float)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    D, n = C.shape
    b = C * rho  # (D, n)
    rng = np.random.default_rng(seed)
    inits = np.vstack([np.full((1, n), 1.0 / n), rng.dirichlet(np.ones(n), size=starts - 1)])
    S = np.broadcast_to(inits, (D, starts, n)).reshape(-1, n).copy()
    B = np.repeat(b, starts, axis=0)

    def phi(S):
        return np.sum(B * S ** (1.0 / q), axis=1)

    f = phi(S)
    step = np.full(len(S), 0.1)
    for _ in range(maxiter):
        active = step >= tol
        if not np.any(active):
            break
        grad = B / q * np.maximum(S, 1e-300) ** (1.0 / q - 1.0)
        grad = np.minimum(grad, 1e6)
        gn = np.maximum(np.linalg.norm(grad, axis=1), 1e-300)
        S_new = _project_simplex(S + (step / gn)[:, None] * grad)
        f_new = phi(S_new)
        better = active & (f_new > f + tol * 1e-3)
        S[better], f[better] = S_new[better], f_new[better]
        step = np.where(better, step * 1.2, step * 0.5)
    best = f.reshape(D, starts).max(axis=1)
    return np.maximum(best, b.max(axis=1))  # vertices


def reinhardt_support(q, rho, c, *, starts: int = 32, tol: float = 1e-8, seed: int = 0) -> float:
    """sup {sum_j c_j t_j : t >= 0, sum_j (t_j / rho_j)^{q_j} <= 1} for c >= 0.

    The boundary is parametrized by the simplex, t_j = rho_j s_j^{1/q_j};
    multi-start projected gradient ascent plus all vertices.
    """
    return float(_support_batch(q, rho, c, starts=starts, tol=tol, seed=seed)[0])


def _octant_directions(n, m):
    if n == 1:
        return np.ones((1, 1))
    if n == 2:
        phi = np.linspace(0.0, np.pi / 2, m)
        return np.stack([np.cos(phi), np.sin(phi)], axis=1)
    k = int(np.ceil(np.sqrt(m)))
    out = []
    for th in np.linspace(0.0, np.pi / 2, k):
        for ph in np.linspace(0.0, np.pi / 2, k):
            out.append([np.cos(th), np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph)])
    return np.unique(np.round(np.array(out), 15), axis=0)


def support_table_hull(q, rho, *, directions: int = 513) -> TableHullNorm:
    """Outer polyhedral approximation of the convex hull of a Reinhardt power body."""
    return _support_table_hull(tuple(float(x) for x in q), tuple(float(x) for x in rho), directions)


@lru_cache(maxsize=32)
def _support_table_hull(q, rho, directions):
    C = _octant_directions(len(q), directions)
    H = _support_batch(q, rho, C)
    return TableHullNorm(C / H[:, None])


def convex_hull_gauge(spec) -> Gauge:
    """Minkowski functional of the convex hull of a balanced complex ellipsoid."""
    q = 2.0 * np.asarray(spec.exponents)
    rho = np.asarray(spec.radii)
    if np.all(q >= 1.0):
        return PowerGauge(q, rho)
    if np.all(q <= 1.0):
        # the hull of the modulus image is the simplex spanned by rho_j e_j
        return PowerGauge(np.ones_like(q), rho)
    return support_table_hull(q, rho)


# gauges per metric kind -------------------------------------------------------
def caratheodory_gauge(spec, a):
    """(norm, backend) with norm(X) = C_D(a; X)."""
    a = np.asarray(a, dtype=complex)
    if spec.kind == "polydisc":
        rho = np.asarray(spec.radii)
        return WeightedMaxNorm(rho / (rho**2 - np.abs(a) ** 2)), Backend.CLOSED_FORM
    if spec.kind == "ball":
        rho2 = spec.radii[0] ** 2
        gap = rho2 - float(np.vdot(a, a).real)
        M = np.eye(spec.dim) / gap + np.outer(a, a.conj()) / gap**2
        return HermitianNorm(M), Backend.CLOSED_FORM
    if spec.kind == "product":
        return _product_gauge(spec, a, caratheodory_gauge)
    if spec.kind == "transformed":
        return _pullback(spec, a, caratheodory_gauge)
    if _center(spec, a):
        if spec.convex:
            return dz.minkowski_gauge(spec), Backend.MINKOWSKI_REDUCTION
        if spec.kind == "complex_ellipsoid":
            return convex_hull_gauge(spec), Backend.MINKOWSKI_REDUCTION
    raise NoBackendError(f"no Carathéodory backend for {spec.kind} at this point")


def _product_gauge(spec, a, fn):
    parts, tags, lo = [], [], 0
    for m in spec.members:
        g, tag = fn(m, a[lo : lo + m.dim])
        parts.append(g)
        tags.append(tag)
        lo += m.dim
    return BlockMaxGauge(parts), _worst(*tags)


def _pullback(spec, a, fn):
    A = dz.pullback_matrix(spec)
    g, tag = fn(spec.members[0], A @ (a - spec.translation))
    return PullbackGauge(g, A), tag


def _sandwich(spec, a):
    """Azukawa/Kobayashi share these backends."""
    if spec.kind == "product":
        return _product_gauge(spec, a, _sandwich)
    if spec.kind == "transformed":
        return _pullback(spec, a, _sandwich)
    if _center(spec, a) and spec.pseudoconvex:
        return dz.minkowski_gauge(spec), Backend.MINKOWSKI_REDUCTION
    if spec.convex:
        return caratheodory_gauge(spec, a)
    raise NoBackendError(f"no Azukawa/Kobayashi backend for {spec.kind} at this point")


def reciprocal_distance_gauge(spec, a):
    g = dz.distance_gauge(spec, a)
    if not g.vectorized:
        return g, Backend.PHASE_SEARCH
    if _center(spec, a):
        return g, Backend.MINKOWSKI_REDUCTION
    return g, Backend.CLOSED_FORM


def metric_gauge(spec, a, kind):
    kind = MetricKind(kind)
    a = np.asarray(a, dtype=complex)
    if not dz.contains(spec, a):
        raise dz.DomainError("base point is not in the domain")
    if kind is MetricKind.CARATHEODORY:
        return caratheodory_gauge(spec, a)
    if kind is MetricKind.RECIPROCAL_DISTANCE:
        return reciprocal_distance_gauge(spec, a)
    return _sandwich(spec, a)


def metric(spec, a, X, kind) -> MetricValue:
    g, tag = metric_gauge(spec, a, kind)
    return MetricValue(float(g(np.asarray(X, dtype=complex))), MetricKind(kind), tag)


def indicatrix_member(spec, a, kind, X):
    """X lies in the indicatrix {metric(a; .) < 1}; vectorized over X."""
    g, _ = metric_gauge(spec, a, kind)
    out = g(np.asarray(X, dtype=complex)) < 1.0
    return bool(out) if np.ndim(out) == 0 else out


def green_at_center(spec, w) -> GreenValueAtCenter:
    """Pluricomplex Green function with pole at the center of a balanced pseudoconvex domain."""
    if not (spec.balanced and spec.pseudoconvex):
        raise NoBackendError("Green function only at centers of balanced pseudoconvex domains")
    w = np.asarray(w, dtype=complex)
    h = dz.minkowski(spec, w)
    if h >= 1:
        raise dz.DomainError("w is not in the domain")
    return GreenValueAtCenter(float(np.log(h)) if h > 0 else -np.inf, tuple(w))


def extremal_covector(spec, a, V) -> ExtremalCovector:
    """Derivative at a of a Carathéodory extremal function in direction V."""
    V = np.asarray(V, dtype=complex)
    if not np.any(V):
        raise ValueError("direction must be nonzero")
    g, _ = metric_gauge(spec, a, MetricKind.CARATHEODORY)
    c = g.covector(V)
    return ExtremalCovector(c, V, float((c @ V).real))

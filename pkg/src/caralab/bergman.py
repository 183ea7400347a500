"""Bergman kernel on the diagonal.

Three routes, from exact to one-sided:

* at the center of a balanced domain the kernel is 1/volume;
* closed forms for discs, polydiscs and balls, propagated through products
  and affine transforms;
* Gram lower bounds: restricting the extremal problem
  ``K(z) = sup |f(z)|^2`` over the unit ball of L^2_h to polynomials of
  bounded degree gives ``v^H G^{-1} v`` with ``G`` the Gram matrix of the
  monomials and ``v`` their values at ``z``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from itertools import product as iproduct
from math import factorial, lgamma, pi

import numpy as np

from . import domains as dz
from .rng import stream
from .volumes import CHUNK, MIN_SAMPLES, VolumeEstimate, _uniform_polydisc, domain_volume

MAX_DEGREE = 8
COND_LIMIT = 1e12
BATCHES = 8


@dataclass(frozen=True)
class KernelEstimate:
    lower: float
    exact: float | None
    basis_size: int
    method: str
    stderr: float = 0.0
    degree: int | None = None

    @property
    def value(self) -> float:
        return self.exact if self.exact is not None else self.lower

    def to_dict(self) -> dict:
        return asdict(self)


def kernel_balanced_center(spec, vol: VolumeEstimate) -> KernelEstimate:
    """K(0) = 1 / Vol for balanced domains."""
    if not spec.balanced:
        raise dz.DomainError("kernel at the center needs a balanced domain")
    if vol.which != "domain_volume":
        raise ValueError("expected a domain volume")
    k = 1.0 / vol.value
    return KernelEstimate(k, k, 1, "balanced_identity", k * vol.stderr / vol.value)


def _closed(spec, z):
    if spec.kind == "polydisc":
        rho2 = np.square(spec.radii)
        return float(np.prod(rho2 / (pi * (rho2 - np.abs(z) ** 2) ** 2)))
    if spec.kind == "ball":
        n, rho2 = spec.dim, spec.radii[0] ** 2
        return factorial(n) * rho2 / (pi**n * (rho2 - float(np.vdot(z, z).real)) ** (n + 1))
    if spec.kind == "product":
        out, lo = 1.0, 0
        for m in spec.members:
            k = _closed(m, z[lo : lo + m.dim])
            if k is None:
                return None
            out *= k
            lo += m.dim
        return out
    if spec.kind == "transformed":
        A = dz.pullback_matrix(spec)
        k = _closed(spec.members[0], A @ (z - spec.translation))
        return None if k is None else k / abs(spec.scale) ** (2 * spec.dim)
    return None


def kernel_closed(spec, z) -> KernelEstimate:
    z = np.asarray(z, dtype=complex)
    if not dz.contains(spec, z):
        raise dz.DomainError("z is not in the domain")
    k = _closed(spec, z)
    if k is None:
        raise dz.DomainError(f"no closed-form kernel for {spec.kind}")
    return KernelEstimate(k, k, 0, "closed_form")


# monomial moments -----------------------------------------------------------
def monomials(n: int, degree: int) -> np.ndarray:
    """Exponent vectors of total degree <= degree, graded then lexicographic."""
    out = [a for a in iproduct(range(degree + 1), repeat=n) if sum(a) <= degree]
    out.sort(key=lambda a: (sum(a), tuple(-x for x in a)))
    return np.array(out, dtype=int).reshape(-1, n)


def _power_moment(q, rho, alpha):
    """Integral of prod |z_j|^{2 alpha_j} over {sum (|z_j|/rho_j)^{q_j} < 1}."""
    q, rho, alpha = (np.asarray(x, dtype=float) for x in (q, rho, alpha))
    a = (2 * alpha + 2) / q
    logv = np.sum(np.log(2 * pi * rho ** (2 * alpha + 2) / q)) + sum(lgamma(x) for x in a) - lgamma(1 + a.sum())
    return float(np.exp(logv))


def closed_moment(spec, alpha):
    """Exact integral of |z^alpha|^2 over the domain, or None."""
    alpha = np.asarray(alpha, dtype=int)
    if spec.kind == "polydisc":
        rho = np.asarray(spec.radii)
        return float(np.prod(pi * rho ** (2 * alpha + 2) / (alpha + 1)))
    if spec.kind == "ball":
        return _power_moment([2.0] * spec.dim, [spec.radii[0]] * spec.dim, alpha)
    if spec.kind in ("pball", "diamond", "complex_ellipsoid"):
        g = dz.base_gauge(spec)
        return _power_moment(g.q, g.rho, alpha)
    if spec.kind == "product":
        out, lo = 1.0, 0
        for m in spec.members:
            v = closed_moment(m, alpha[lo : lo + m.dim])
            if v is None:
                return None
            out *= v
            lo += m.dim
        return out
    if spec.kind == "transformed" and spec.reinhardt:
        # z_i = scale * U[i, s(i)] w_{s(i)} for a monomial unitary
        s = np.argmax(np.abs(spec.unitary) > 1e-12, axis=1)
        beta = np.zeros_like(alpha)
        beta[s] = alpha
        v = closed_moment(spec.members[0], beta)
        if v is None:
            return None
        return v * abs(spec.scale) ** (2 * int(alpha.sum()) + 2 * spec.dim)
    return None


def _monomial_values(w, alphas):
    """(m, M) array of w^alpha."""
    out = np.ones((w.shape[0], len(alphas)), dtype=complex)
    for j in range(w.shape[1]):
        powers = w[:, j : j + 1] ** np.arange(alphas[:, j].max() + 1)
        out *= powers[:, alphas[:, j]]
    return out


def _mc_gram(spec, alphas, R, N, seed, key, diagonal):
    """Per-batch sums of m(w) m(w)^H over sampled domain points (w = z / R)."""
    M = len(alphas)
    sums = np.zeros((BATCHES, M) if diagonal else (BATCHES, M, M), dtype=float if diagonal else complex)
    sizes = [CHUNK] * (N // CHUNK) + ([N % CHUNK] if N % CHUNK else [])
    for k, size in enumerate(sizes):
        z = _uniform_polydisc(stream(seed, *key, "gram", k), R, size)
        inside = dz.contains(spec, z)
        batch = np.arange(size)[inside] % BATCHES
        V = _monomial_values(z[inside] / R, alphas)
        for b in range(BATCHES):
            Vb = V[batch == b]
            if diagonal:
                sums[b] += np.sum(np.abs(Vb) ** 2, axis=0)
            else:
                sums[b] += Vb.T @ Vb.conj()
    return sums


def _solve(G, v):
    """v^H G^{-1} v for Hermitian positive definite G."""
    if G.ndim == 1:
        return float(np.sum(np.abs(v) ** 2 / G))
    L = np.linalg.cholesky(G)
    y = np.linalg.solve(L, v)
    return float(np.vdot(y, y).real)


def _cond(G):
    if G.ndim == 1:
        return float(G.max() / G.min()) if G.min() > 0 else np.inf
    return float(np.linalg.cond(G))


def kernel_gram_lower(spec, z, degree: int, N: int = 10**6, seed: int = 0, *, key=(),
                      moments: str = "auto") -> KernelEstimate:
    """Lower bound on K(z) from monomials of total degree <= degree.

    Reinhardt domains have a diagonal Gram matrix (moments exact when a
    closed form exists, else Monte Carlo); other domains use a full Monte
    Carlo Gram matrix.  If the Gram matrix is too ill-conditioned the degree
    is lowered until it is not.
    """
    z = np.asarray(z, dtype=complex)
    if not 0 <= degree <= MAX_DEGREE:
        raise ValueError(f"degree must be in [0, {MAX_DEGREE}]")
    if not dz.contains(spec, z):
        raise dz.DomainError("z is not in the domain")
    if moments not in ("auto", "mc"):
        raise ValueError(f"unknown moments mode {moments!r}")
    n = spec.dim
    R = np.asarray(dz.bounding_radii(spec), dtype=float)
    alphas_all = monomials(n, degree)
    w0 = z / R
    diagonal = spec.reinhardt
    exact = None
    if diagonal and moments == "auto":
        m = [closed_moment(spec, a) for a in alphas_all]
        if all(x is not None for x in m):
            # moments of w^alpha = z^alpha / R^alpha
            scale = np.prod(R[None, :] ** (2 * alphas_all), axis=1)
            exact = np.asarray(m) / scale
    batches = None
    if exact is None:
        if N < MIN_SAMPLES:
            raise ValueError(f"N must be at least {MIN_SAMPLES}")
        box = float(np.prod(pi * R**2))
        sums = _mc_gram(spec, alphas_all, R, N, seed, tuple(key), diagonal)
        full = sums.sum(axis=0) * box / N
        batches = sums * box * BATCHES / N
    else:
        full = exact
    for d in range(degree, -1, -1):
        idx = np.nonzero(alphas_all.sum(axis=1) <= d)[0]
        G = full[idx] if diagonal else full[np.ix_(idx, idx)]
        if _cond(G) <= COND_LIMIT:
            break
    else:
        raise ArithmeticError("Gram matrix is singular at every degree")
    v = _monomial_values(w0[None, :], alphas_all[idx])[0]
    est = _solve(G, v)
    stderr = 0.0
    if batches is not None:
        vals = []
        for b in range(BATCHES):
            Gb = batches[b][idx] if diagonal else batches[b][np.ix_(idx, idx)]
            try:
                vals.append(_solve(Gb, v))
            except np.linalg.LinAlgError:
                pass
        if len(vals) > 1:
            stderr = float(np.std(vals, ddof=1) / np.sqrt(len(vals)))
    return KernelEstimate(est, None, len(idx), "gram_lower", stderr, d)


def best_kernel(spec, z, *, vol: VolumeEstimate | None = None, degree: int = 4, N: int = 10**6,
                seed: int = 0, key=()) -> KernelEstimate:
    """Most accurate available estimate: balanced identity, closed form, else Gram lower bound."""
    z = np.asarray(z, dtype=complex)
    if spec.balanced and not np.any(z):
        return kernel_balanced_center(spec, vol if vol is not None else domain_volume(spec, N, seed, key=key))
    try:
        return kernel_closed(spec, z)
    except dz.DomainError:
        if not dz.contains(spec, z):
            raise
    return kernel_gram_lower(spec, z, degree, N, seed, key=key)

"""Euclidean volumes in R^{2n}: hit-or-miss Monte Carlo and closed forms.

Monte Carlo draws are independent and uniform per complex coordinate on a
bounding polydisc (or, on request, uniform in a bounding complex ellipsoid),
in fixed-size chunks.  Chunk ``k`` is drawn from the
stream keyed by ``(seed, *key, k)``, so an estimate depends only on the
seed, the key and N, never on how chunks are scheduled.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from math import factorial, gamma, pi

import numpy as np

from . import domains as dz
from .gauges import Gauge
from .metrics import MetricKind, NoBackendError, metric_gauge
from .rng import stream

CHUNK = 1 << 16
MIN_SAMPLES = 1000
PROBES = 1000
WHICH = ("V", "VA", "VC", "VE", "V_inscribed", "V_circumscribed", "domain_volume")
KIND_TO_WHICH = {
    MetricKind.RECIPROCAL_DISTANCE: "V",
    MetricKind.AZUKAWA: "VA",
    MetricKind.KOBAYASHI: "VA",
    MetricKind.CARATHEODORY: "VC",
}


class BoundingBoxError(ValueError):
    """A probe outside the bounding polydisc was reported inside the set."""


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    stderr: float
    samples: int
    method: str
    which: str

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def relative_error(self) -> float:
        return self.stderr / self.value


def _uniform_polydisc(rng, radii, m):
    n = len(radii)
    r = np.sqrt(rng.random((m, n))) * radii
    th = 2 * pi * rng.random((m, n))
    return r * np.exp(1j * th)


def _uniform_ellipsoid(rng, radii, m):
    """Uniform in {sum |z_j / R_j|^2 < 1}, a linear image of the unit ball of R^{2n}."""
    n = len(radii)
    g = rng.standard_normal((m, 2 * n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    g *= rng.random((m, 1)) ** (1.0 / (2 * n))
    return (g[:, :n] + 1j * g[:, n:]) * radii


def _probe_outside(rng, radii, m):
    """Points with at least one coordinate of modulus in (R_j, 1.5 R_j]."""
    n = len(radii)
    z = _uniform_polydisc(rng, radii, m)
    j = rng.integers(0, n, size=m)
    mag = radii[j] * (1.0 + 0.5 * (1.0 - rng.random(m)))
    z[np.arange(m), j] = mag * np.exp(2j * pi * rng.random(m))
    return z


def _probe_outside_ellipsoid(rng, radii, m):
    """Points with ellipsoid level in (1, 1.5]."""
    z = _uniform_ellipsoid(rng, radii, m)
    lev = np.sqrt(np.sum(np.abs(z / radii) ** 2, axis=1))
    t = 1.0 + 0.5 * (1.0 - rng.random(m))
    return z * (t / np.maximum(lev, 1e-300))[:, None]


def _threads(threads):
    if threads is not None:
        return max(1, int(threads))
    return max(1, int(os.environ.get("CARALAB_THREADS", "1")))


def mc_volume(membership, bounding_radii, N: int, seed: int, *, key=(), which: str = "domain_volume",
              threads: int | None = None, region: str = "polydisc") -> VolumeEstimate:
    """Hit-or-miss volume of {X : membership(X)} inside the polydisc with the given radii.

    ``membership`` takes an ``(m, n)`` complex array and returns booleans.
    With ``region="ellipsoid"`` the container is {sum |X_j / R_j|^2 < 1}
    instead; it is 6x smaller than the polydisc at n = 3, which matters for
    thin sets such as l^1-type bodies.
    """
    radii = np.asarray(bounding_radii, dtype=float)
    if N < MIN_SAMPLES:
        raise ValueError(f"N must be at least {MIN_SAMPLES}")
    if np.any(radii <= 0) or not np.all(np.isfinite(radii)):
        raise ValueError("bounding radii must be positive and finite")
    if which not in WHICH:
        raise ValueError(f"unknown volume label {which!r}")
    if region == "polydisc":
        draw, probe_out = _uniform_polydisc, _probe_outside
        box = float(np.prod(pi * radii**2))
    elif region == "ellipsoid":
        draw, probe_out = _uniform_ellipsoid, _probe_outside_ellipsoid
        box = float(np.prod(pi * radii**2)) / factorial(len(radii))
    else:
        raise ValueError(f"unknown region {region!r}")
    key = tuple(key)
    probe = probe_out(stream(seed, *key, "probe"), radii, PROBES)
    if np.any(membership(probe)):
        raise BoundingBoxError(f"membership is true outside the bounding {region}")

    sizes = [CHUNK] * (N // CHUNK) + ([N % CHUNK] if N % CHUNK else [])

    def count(k):
        z = draw(stream(seed, *key, k), radii, sizes[k])
        return int(np.count_nonzero(membership(z)))

    workers = _threads(threads)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            hits = sum(ex.map(count, range(len(sizes))))
    else:
        hits = sum(count(k) for k in range(len(sizes)))
    f = hits / N
    # smoothed fraction in the variance keeps the error bar honest when hits is 0 or N
    fs = (hits + 1) / (N + 2)
    return VolumeEstimate(f * box, box * np.sqrt(fs * (1 - fs) / N), N, "monte_carlo", which)


def diamond_volume_closed(r) -> VolumeEstimate:
    """Volume of {sum_j r_j |z_j| < 1}: (2 pi)^n / ((2n)! (prod r_j)^2)."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0) or not np.all(np.isfinite(r)):
        raise ValueError("diamond weights must be positive")
    n = r.size
    return VolumeEstimate((2 * pi) ** n / (factorial(2 * n) * float(np.prod(r)) ** 2), 0.0, 0, "closed_form", "VE")


def zoo_volume_closed(spec) -> VolumeEstimate:
    """Closed-form volume for power-type members, their products and transforms."""
    v = _closed(spec)
    if v is None:
        raise NoBackendError(f"no closed-form volume for {spec.kind}")
    return VolumeEstimate(v, 0.0, 0, "closed_form", "domain_volume")


def _closed(spec):
    if spec.kind == "polydisc":
        return pi**spec.dim * float(np.prod(np.square(spec.radii)))
    if spec.kind == "ball":
        return pi**spec.dim * spec.radii[0] ** (2 * spec.dim) / factorial(spec.dim)
    if spec.kind in ("pball", "diamond", "complex_ellipsoid"):
        return dz.base_gauge(spec).unit_ball_volume()
    if spec.kind == "product":
        parts = [_closed(m) for m in spec.members]
        return None if any(p is None for p in parts) else float(np.prod(parts))
    if spec.kind == "transformed":
        v = _closed(spec.members[0])
        return None if v is None else v * abs(spec.scale) ** (2 * spec.dim)
    return None


def domain_volume(spec, N: int = 10**6, seed: int = 0, *, key=()) -> VolumeEstimate:
    try:
        return zoo_volume_closed(spec)
    except NoBackendError:
        return mc_volume(lambda z: dz.contains(spec, z), dz.bounding_radii(spec), N, seed,
                         key=("domain",) + tuple(key))


def gauge_box(norm: Gauge, basis, fallback=None) -> np.ndarray:
    """Radii of the smallest polydisc, in the coordinates of ``basis``, containing {norm < 1}."""
    basis = np.asarray(basis, dtype=complex)
    try:
        return np.array([norm.dual(basis[:, j].conj()) for j in range(basis.shape[1])]) * (1 + 1e-9)
    except NotImplementedError:
        if fallback is None:
            raise
        return np.asarray(fallback, dtype=float)


def indicatrix_volume(spec, a, kind, N: int = 10**6, seed: int = 0, *, frame=None, key=(),
                      method: str = "mc", threads: int | None = None) -> VolumeEstimate:
    """Volume of {X : metric(a; X) < 1}.

    Sampling happens in the coordinates of ``frame`` (identity by default);
    the bounding polydisc comes from the dual of the Carathéodory norm, which
    dominates every other supported metric.  Keying all kinds at one point by
    the same ``key`` makes them share samples, so nested indicatrices get
    nested hit counts.  ``method='auto'`` returns a closed form when the
    indicatrix is a known body.
    """
    kind = MetricKind(kind)
    which = KIND_TO_WHICH[kind]
    g, _ = metric_gauge(spec, a, kind)
    if method not in ("mc", "auto", "closed"):
        raise ValueError(f"unknown method {method!r}")
    if method in ("auto", "closed"):
        v = g.unit_ball_volume()
        if v is not None:
            return VolumeEstimate(v, 0.0, 0, "closed_form", which)
        if method == "closed":
            raise NoBackendError("indicatrix has no closed-form volume")
    if not g.vectorized:
        raise NoBackendError(f"{kind.value} indicatrix at this point has no vectorized backend for sampling")
    n = spec.dim
    basis = np.eye(n, dtype=complex) if frame is None else np.asarray(frame.basis, dtype=complex)
    cnorm, _ = metric_gauge(spec, a, MetricKind.CARATHEODORY)
    fallback = None
    if frame is not None:
        fallback = 1.0 / (np.asarray(frame.radii) * frame.k_hat * (1 - 1e-3))
    radii = gauge_box(cnorm, basis, fallback)
    return mc_volume(lambda Y: g(Y @ basis.T) < 1.0, radii, N, seed, key=("indicatrix",) + tuple(key),
                     which=which, threads=threads)

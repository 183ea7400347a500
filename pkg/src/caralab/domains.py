"""The zoo of explicit bounded domains in C^n (n <= 3).

Each :class:`DomainSpec` is an open set described by a continuous level
function ``level(z)`` with ``D = {level < 1}``.  For balanced specs the level
function is the Minkowski functional.  Transformed specs are images
``t + scale * U D`` of another member.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import pi

import numpy as np

from .gauges import (
    BallDistanceGauge,
    BlockMaxGauge,
    FunctionGauge,
    Gauge,
    HermitianNorm,
    MaxGauge,
    PowerGauge,
    PullbackGauge,
    WeightedMaxNorm,
)

MAX_DIM = 3
ATOMIC_KINDS = ("polydisc", "ball", "complex_ellipsoid", "pball", "diamond")
KINDS = ATOMIC_KINDS + ("intersection", "product", "transformed")

PHASES = 64
BISECT_TOL = 1e-10
BISECT_MAXITER = 200


class DomainError(ValueError):
    """Invalid domain specification or a point outside its domain."""


@dataclass(frozen=True, eq=False)
class DomainSpec:
    kind: str
    dim: int
    radii: tuple = ()
    p: float | None = None
    exponents: tuple = ()
    weights: tuple = ()
    members: tuple = ()
    unitary: np.ndarray | None = field(default=None, repr=False)
    scale: complex = 1.0
    translation: np.ndarray | None = field(default=None, repr=False)
    name: str = ""

    # structural flags -------------------------------------------------
    @property
    def balanced(self) -> bool:
        if self.kind in ATOMIC_KINDS:
            return True
        if self.kind in ("intersection", "product"):
            return all(m.balanced for m in self.members)
        return self.members[0].balanced and not np.any(self.translation)

    @property
    def convex(self) -> bool:
        if self.kind == "complex_ellipsoid":
            return all(e >= 0.5 for e in self.exponents)
        if self.kind in ATOMIC_KINDS:
            return True
        return all(m.convex for m in self.members)

    @property
    def c_convex(self) -> bool:
        # only convexity is detected; it implies C-convexity
        if self.kind in ATOMIC_KINDS:
            return self.convex
        return all(m.c_convex for m in self.members)

    @property
    def reinhardt(self) -> bool:
        if self.kind in ATOMIC_KINDS:
            return True
        if self.kind in ("intersection", "product"):
            return all(m.reinhardt for m in self.members)
        if np.any(self.translation):
            return False
        U = self.unitary
        # monomial unitaries (permutation times phases) map Reinhardt sets to Reinhardt sets
        return self.members[0].reinhardt and bool(np.all(np.count_nonzero(np.abs(U) > 1e-12, axis=1) == 1))

    @property
    def pseudoconvex(self) -> bool:
        if self.kind in ATOMIC_KINDS:
            return True
        return all(m.pseudoconvex for m in self.members)

    def flags(self) -> dict:
        return {
            "balanced": self.balanced,
            "convex": self.convex,
            "c_convex": self.c_convex,
            "reinhardt": self.reinhardt,
            "pseudoconvex": self.pseudoconvex,
        }

    # configuration round trip -----------------------------------------
    def to_config(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.kind in ("polydisc", "pball", "complex_ellipsoid"):
            d["radii"] = list(self.radii)
        if self.kind == "ball":
            d["radius"] = self.radii[0]
            d["dim"] = self.dim
        if self.kind == "pball":
            d["p"] = self.p
        if self.kind == "complex_ellipsoid":
            d["exponents"] = list(self.exponents)
        if self.kind == "diamond":
            d["weights"] = list(self.weights)
        if self.kind in ("intersection", "product"):
            d["members"] = [m.to_config() for m in self.members]
        if self.kind == "transformed":
            d = self.members[0].to_config()
            d["transform"] = {
                "unitary": [[_pair(x) for x in row] for row in self.unitary],
                "scale": _pair(self.scale),
                "translation": [_pair(x) for x in self.translation],
            }
        if self.name:
            d["name"] = self.name
        return d


def _pair(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _positive(values, what):
    vals = tuple(float(v) for v in np.ravel(np.asarray(values, dtype=float)))
    if not vals:
        raise DomainError(f"{what} must be nonempty")
    for v in vals:
        if not np.isfinite(v) or v <= 0:
            raise DomainError(f"{what} must be strictly positive and finite, got {v}")
    return vals


def _check_dim(n):
    if not 1 <= n <= MAX_DIM:
        raise DomainError(f"unsupported dimension {n}; 1 <= n <= {MAX_DIM}")
    return n


# constructors --------------------------------------------------------------
def polydisc(*radii, name="") -> DomainSpec:
    r = _positive(radii, "polydisc radii")
    return DomainSpec("polydisc", _check_dim(len(r)), radii=r, name=name)


def disc(radius=1.0, name="") -> DomainSpec:
    return polydisc(radius, name=name)


def ball(radius=1.0, dim=2, name="") -> DomainSpec:
    (r,) = _positive([radius], "ball radius")
    return DomainSpec("ball", _check_dim(int(dim)), radii=(r,), name=name)


def pball(p, radii, name="") -> DomainSpec:
    if not np.isfinite(p) or p < 1:
        raise DomainError("p must be ≥ 1; use complex_ellipsoid for non-convex powers")
    r = _positive(radii, "pball radii")
    return DomainSpec("pball", _check_dim(len(r)), radii=r, p=float(p), name=name)


def complex_ellipsoid(exponents, radii=None, name="") -> DomainSpec:
    """{sum_j (|z_j| / rho_j)^{2 p_j} < 1}; convex iff every p_j >= 1/2."""
    e = _positive(exponents, "complex_ellipsoid exponents")
    r = _positive(radii if radii is not None else [1.0] * len(e), "complex_ellipsoid radii")
    if len(r) != len(e):
        raise DomainError("exponents and radii must have equal length")
    return DomainSpec("complex_ellipsoid", _check_dim(len(e)), radii=r, exponents=e, name=name)


def diamond(*weights, name="") -> DomainSpec:
    w = _positive(weights, "diamond weights")
    return DomainSpec("diamond", _check_dim(len(w)), weights=w, name=name)


def intersection(members, name="") -> DomainSpec:
    members = tuple(members)
    if not members:
        raise DomainError("intersection needs at least one member")
    if not all(m.balanced for m in members):
        raise DomainError("intersection members must be balanced")
    if len({m.dim for m in members}) != 1:
        raise DomainError("intersection members must have equal dimension")
    return DomainSpec("intersection", members[0].dim, members=members, name=name)


def product(members, name="") -> DomainSpec:
    members = tuple(members)
    if not members:
        raise DomainError("product needs at least one member")
    return DomainSpec("product", _check_dim(sum(m.dim for m in members)), members=members, name=name)


def transform(spec: DomainSpec, U=None, scale=1.0, translation=None, name="") -> DomainSpec:
    """The image ``translation + scale * U(spec)``."""
    n = spec.dim
    U = np.eye(n, dtype=complex) if U is None else np.asarray(U, dtype=complex)
    if U.shape != (n, n):
        raise DomainError(f"unitary must be {n}x{n}")
    if np.max(np.abs(U.conj().T @ U - np.eye(n))) > 1e-12:
        raise DomainError("matrix is not unitary within 1e-12")
    scale = complex(scale)
    if scale == 0 or not np.isfinite(abs(scale)):
        raise DomainError("scale must be a nonzero finite complex number")
    t = np.zeros(n, dtype=complex) if translation is None else np.asarray(translation, dtype=complex)
    if t.ndim == 0:
        t = np.full(n, t)
    if t.shape != (n,):
        raise DomainError(f"translation must have length {n}")
    return DomainSpec("transformed", n, members=(spec,), unitary=U, scale=scale, translation=t,
                      name=name or spec.name)


def pullback_matrix(spec: DomainSpec) -> np.ndarray:
    """A with z in spec iff A (z - t) lies in the untransformed member."""
    return spec.unitary.conj().T / spec.scale


# level function and membership --------------------------------------------
def base_gauge(spec: DomainSpec) -> Gauge:
    """Minkowski functional of an atomic member."""
    if spec.kind == "polydisc":
        return WeightedMaxNorm(1.0 / np.asarray(spec.radii))
    if spec.kind == "ball":
        return HermitianNorm(np.eye(spec.dim) / spec.radii[0] ** 2)
    if spec.kind == "pball":
        return PowerGauge([spec.p] * spec.dim, spec.radii)
    if spec.kind == "diamond":
        return PowerGauge([1.0] * spec.dim, 1.0 / np.asarray(spec.weights))
    if spec.kind == "complex_ellipsoid":
        return PowerGauge(2.0 * np.asarray(spec.exponents), spec.radii)
    raise DomainError(f"{spec.kind} is not atomic")


def _as_points(spec: DomainSpec, z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if z.shape[-1:] != (spec.dim,):
        raise DomainError(f"dimension mismatch: domain has n={spec.dim}, point has shape {z.shape}")
    return z


def level(spec: DomainSpec, z) -> np.ndarray:
    z = _as_points(spec, z)
    if spec.kind in ATOMIC_KINDS:
        return base_gauge(spec)(z)
    if spec.kind == "transformed":
        A = pullback_matrix(spec)
        return level(spec.members[0], (z - spec.translation) @ A.T)
    if spec.kind == "intersection":
        return np.max(np.stack([level(m, z) for m in spec.members], axis=-1), axis=-1)
    parts, lo = [], 0
    for m in spec.members:
        parts.append(level(m, z[..., lo : lo + m.dim]))
        lo += m.dim
    return np.max(np.stack(parts, axis=-1), axis=-1)


def contains(spec: DomainSpec, z):
    """Membership in the open domain (boundary points are outside)."""
    out = level(spec, z) < 1.0
    return bool(out) if np.ndim(out) == 0 else out


def minkowski_gauge(spec: DomainSpec) -> Gauge:
    if not spec.balanced:
        raise DomainError(f"{spec.kind} domain is not balanced")
    if spec.kind in ATOMIC_KINDS:
        return base_gauge(spec)
    if spec.kind == "intersection":
        return MaxGauge([minkowski_gauge(m) for m in spec.members])
    if spec.kind == "product":
        return BlockMaxGauge([minkowski_gauge(m) for m in spec.members])
    return PullbackGauge(minkowski_gauge(spec.members[0]), pullback_matrix(spec))


def minkowski(spec: DomainSpec, X):
    g = minkowski_gauge(spec)
    out = g(X)
    return float(out) if np.ndim(out) == 0 else out


def bounding_radii(spec: DomainSpec) -> np.ndarray:
    """R with D contained in the closed polydisc {|z_j| <= R_j}."""
    if spec.kind in ("polydisc", "pball", "complex_ellipsoid"):
        return np.asarray(spec.radii, dtype=float)
    if spec.kind == "ball":
        return np.full(spec.dim, spec.radii[0])
    if spec.kind == "diamond":
        return 1.0 / np.asarray(spec.weights)
    if spec.kind == "intersection":
        return np.min([bounding_radii(m) for m in spec.members], axis=0)
    if spec.kind == "product":
        return np.concatenate([bounding_radii(m) for m in spec.members])
    R = bounding_radii(spec.members[0])
    M = abs(spec.scale) * np.minimum(np.abs(spec.unitary) @ R, np.linalg.norm(R))
    return np.abs(spec.translation) + M


# boundary distance -----------------------------------------------------------
def _is_zero(a) -> bool:
    return bool(np.all(np.asarray(a) == 0))


def _require_inside(spec, a):
    a = _as_points(spec, a)
    if a.ndim != 1:
        raise DomainError("base point must be a single vector")
    if not contains(spec, a):
        raise DomainError("base point is not in the domain")
    return a


def distance_gauge(spec: DomainSpec, a) -> Gauge:
    """X -> 1/delta_D(a; X), the reciprocal distance to the boundary along X."""
    a = _require_inside(spec, a)
    return _distance_gauge(spec, a)


def _distance_gauge(spec, a) -> Gauge:
    if spec.balanced and _is_zero(a):
        return minkowski_gauge(spec)
    if spec.kind == "polydisc":
        return WeightedMaxNorm(1.0 / (np.asarray(spec.radii) - np.abs(a)))
    if spec.kind == "ball":
        return BallDistanceGauge(a, spec.radii[0])
    if spec.kind == "product":
        parts, lo = [], 0
        for m in spec.members:
            parts.append(_distance_gauge(m, a[lo : lo + m.dim]))
            lo += m.dim
        return BlockMaxGauge(parts)
    if spec.kind == "intersection":
        return MaxGauge([_distance_gauge(m, a) for m in spec.members])
    if spec.kind == "transformed":
        A = pullback_matrix(spec)
        return PullbackGauge(_distance_gauge(spec.members[0], A @ (a - spec.translation)), A)
    return FunctionGauge(spec.dim, lambda X: 1.0 / _phase_search_distance(spec, a, X))


def boundary_distance(spec: DomainSpec, a, X) -> float:
    """delta_D(a; X) = sup{r : a + lam X in D for |lam| < r}; +inf when X = 0."""
    X = np.asarray(X, dtype=complex)
    if X.shape != (spec.dim,):
        raise DomainError("direction has wrong dimension")
    g = float(distance_gauge(spec, a)(X))
    return np.inf if g == 0 else 1.0 / g


def _exit_radii(spec, a, D, R, convex):
    """First exit radius of a + r D_k for each row D_k, r in (0, R]."""
    m = D.shape[0]
    lo = np.zeros(m)
    hi = np.full(m, R)
    if not convex:
        steps = np.linspace(0.0, R, 513)[1:]
        pts = a + steps[None, :, None] * D[:, None, :]
        outside = level(spec, pts) >= 1.0
        first = np.argmax(outside, axis=1)
        hi = steps[first]
        lo = np.where(first > 0, steps[first - 1], 0.0)
    for _ in range(BISECT_MAXITER):
        if np.max(hi - lo) <= BISECT_TOL:
            break
        mid = 0.5 * (lo + hi)
        inside = level(spec, a + mid[:, None] * D) < 1.0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return 0.5 * (lo + hi)


def _phase_search_distance(spec, a, X) -> float:
    """Minimum over phases theta of the exit radius of a + r e^{i theta} X.

    64 equispaced phases, then golden-section refinement around the three
    best ones.
    """
    X = np.asarray(X, dtype=complex)
    if not np.any(X):
        return np.inf
    # search along a canonical unit representative; delta is 1-homogeneous
    scale = np.linalg.norm(X)
    first = X[np.nonzero(X)[0][0]]
    X = X * (abs(first) / first) / scale
    return _phase_search_unit(spec, a, X) / scale


def _phase_search_unit(spec, a, X) -> float:
    Rb = bounding_radii(spec)
    nz = np.abs(X) > 0
    R = float(np.min((Rb[nz] + np.abs(a[nz])) / np.abs(X[nz]))) * (1 + 1e-12)
    convex = spec.convex
    thetas = 2 * pi * np.arange(PHASES) / PHASES
    radii = _exit_radii(spec, a, np.exp(1j * thetas)[:, None] * X, R, convex)

    def f(theta):
        return float(_exit_radii(spec, a, np.exp(1j * theta) * X[None, :], R, convex)[0])

    best = float(np.min(radii))
    width = 2 * pi / PHASES
    invphi = (np.sqrt(5) - 1) / 2
    for k in np.argsort(radii)[:3]:
        lo, hi = thetas[k] - width, thetas[k] + width
        c, d = hi - invphi * (hi - lo), lo + invphi * (hi - lo)
        fc, fd = f(c), f(d)
        while hi - lo > 1e-9:
            if fc < fd:
                hi, d, fd = d, c, fc
                c = hi - invphi * (hi - lo)
                fc = f(c)
            else:
                lo, c, fc = c, d, fd
                d = lo + invphi * (hi - lo)
                fd = f(d)
        best = min(best, fc, fd)
    return best


# transforms ----------------------------------------------------------------
def map_point(spec: DomainSpec, a) -> np.ndarray:
    """Image of a point of the member under a transformed spec."""
    return spec.translation + spec.scale * (spec.unitary @ np.asarray(a, dtype=complex))


# configuration -------------------------------------------------------------
def _cnum(x, path):
    if isinstance(x, bool):
        raise DomainError(f"{path}: expected a number or [re, im]")
    if isinstance(x, (int, float)):
        return complex(float(x), 0.0)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in x
    ):
        return complex(float(x[0]), float(x[1]))
    raise DomainError(f"{path}: expected a number or [re, im], got {x!r}")


def _is_cnum(x):
    try:
        _cnum(x, "")
    except DomainError:
        return False
    return True


def _cvec(xs, n, path):
    if not isinstance(xs, (list, tuple)) or len(xs) != n:
        raise DomainError(f"{path}: expected {n} complex coordinates")
    return np.array([_cnum(x, f"{path}[{i}]") for i, x in enumerate(xs)])


def _numbers(obj, key, path):
    if key not in obj:
        raise DomainError(f"{path}.{key}: required field missing")
    vals = obj[key]
    if not isinstance(vals, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
        raise DomainError(f"{path}.{key}: expected an array of numbers")
    return vals


def _number(obj, key, path):
    if key not in obj:
        raise DomainError(f"{path}.{key}: required field missing")
    v = obj[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise DomainError(f"{path}.{key}: expected a number")
    return float(v)


def spec_from_config(obj, path="domain") -> DomainSpec:
    if not isinstance(obj, dict):
        raise DomainError(f"{path}: expected an object")
    kind = obj.get("kind")
    name = obj.get("name", "")
    if not isinstance(name, str):
        raise DomainError(f"{path}.name: expected a string")
    try:
        if kind in ("polydisc", "disc"):
            if kind == "disc" and "radius" in obj:
                spec = disc(_number(obj, "radius", path), name=name)
            else:
                spec = polydisc(*_numbers(obj, "radii", path), name=name)
        elif kind == "ball":
            dim = obj.get("dim", 2)
            if not isinstance(dim, int) or isinstance(dim, bool):
                raise DomainError(f"{path}.dim: expected an integer")
            spec = ball(_number(obj, "radius", path), dim, name=name)
        elif kind == "pball":
            spec = pball(_number(obj, "p", path), _numbers(obj, "radii", path), name=name)
        elif kind == "complex_ellipsoid":
            radii = _numbers(obj, "radii", path) if "radii" in obj else None
            spec = complex_ellipsoid(_numbers(obj, "exponents", path), radii, name=name)
        elif kind == "diamond":
            spec = diamond(*_numbers(obj, "weights", path), name=name)
        elif kind in ("intersection", "product"):
            mem = obj.get("members")
            if not isinstance(mem, list):
                raise DomainError(f"{path}.members: expected an array of domain objects")
            members = [spec_from_config(m, f"{path}.members[{i}]") for i, m in enumerate(mem)]
            spec = (intersection if kind == "intersection" else product)(members, name=name)
        else:
            raise DomainError(f"{path}.kind: unknown kind {kind!r}")
        if "transform" in obj:
            spec = _apply_transform_config(spec, obj["transform"], f"{path}.transform", name)
    except DomainError as exc:
        msg = str(exc)
        raise DomainError(msg if msg.startswith(path) else f"{path}: {msg}") from None
    return spec


def _apply_transform_config(spec, tr, path, name):
    if not isinstance(tr, dict):
        raise DomainError(f"{path}: expected an object")
    n = spec.dim
    U = np.eye(n, dtype=complex)
    if "unitary" in tr:
        raw = tr["unitary"]
        if isinstance(raw, list) and len(raw) == n * n and all(_is_cnum(x) for x in raw):
            U = np.array([_cnum(x, f"{path}.unitary[{i}]") for i, x in enumerate(raw)]).reshape(n, n)
        elif isinstance(raw, list) and len(raw) == n:
            U = np.array([_cvec(row, n, f"{path}.unitary[{i}]") for i, row in enumerate(raw)])
        else:
            raise DomainError(f"{path}.unitary: expected {n}x{n} complex entries")
    scale = _cnum(tr.get("scale", 1.0), f"{path}.scale")
    t = _cvec(tr["translation"], n, f"{path}.translation") if "translation" in tr else None
    return transform(spec, U, scale, t, name=name)


def parse_domain_spec(text):
    """Parse a zoo configuration (JSON text or already-decoded list).

    Returns a list of ``(DomainSpec, [points])``; every point is verified to
    lie in its domain.
    """
    doc = json.loads(text) if isinstance(text, (str, bytes)) else text
    if isinstance(doc, dict):
        doc = [doc]
    if not isinstance(doc, list):
        raise DomainError("configuration: expected an array of domain objects")
    out, seen = [], set()
    for i, obj in enumerate(doc):
        path = f"[{i}]"
        spec = spec_from_config(obj, path)
        name = spec.name or f"{spec.kind}#{i}"
        if name in seen:
            raise DomainError(f"{path}.name: duplicate name {name!r}")
        seen.add(name)
        if not spec.name:
            spec = _renamed(spec, name)
        raw_points = obj.get("points", [])
        if not isinstance(raw_points, list):
            raise DomainError(f"{path}.points: expected an array of points")
        points = []
        for j, raw in enumerate(raw_points):
            pt = _cvec(raw, spec.dim, f"{path}.points[{j}]")
            if not contains(spec, pt):
                raise DomainError(f"{path}.points[{j}]: point {raw!r} is not in the domain (level {float(level(spec, pt)):.6g})")
            points.append(pt)
        out.append((spec, points))
    return out


def _renamed(spec, name):
    from dataclasses import replace

    return replace(spec, name=name)

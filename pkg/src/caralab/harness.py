"""Verification pipeline: compute every quantity per (domain, point) and check the inequalities.

Tolerance protocol.  Every check is a list of legs ``lhs <= rhs`` or
``lhs == rhs``.  With ``sigma = sqrt(stderr_lhs^2 + stderr_rhs^2)`` a leg
passes when its slack ``(rhs - lhs) / sigma`` (``-|lhs - rhs| / sigma`` for
equalities) is at least -3.  Legs without Monte Carlo noise use an effective
sigma of ``rel * max(|lhs|, |rhs|) / 3``, so the same rule means a relative
tolerance ``rel`` (1e-9 unless stated).  A check passes when all of its legs
pass; the reported lhs/rhs/slack are those of the worst leg.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from math import factorial, pi

import numpy as np

from . import __version__
from . import domains as dz
from .bergman import best_kernel
from .extremal import (
    build_extremal_map,
    ce_bounds,
    diamond_ratios,
    min_pi_over_frames,
    npz_basis,
    polydisc_hull_volumes,
)
from .metrics import MetricKind, NoBackendError, metric_gauge
from .volumes import diamond_volume_closed, domain_volume, indicatrix_volume, mc_volume

CHECK_IDS = (
    "chain_comp",
    "upper_K_vs_V",
    "suita_thmS",
    "eq1_upper",
    "eq1_lower_khat",
    "lemma_lower",
    "det_upper",
    "eq23",
    "eq4_diamond",
    "ce_bracket_final",
    "corollary1",
    "corollary2",
    "remark_ratios",
)
SIGMAS = 3.0
REL = 1e-9
K_REL = 1e-6
RATIO_SAMPLES = 100_000
GRAM_DEGREE = {1: 8, 2: 4, 3: 2}
CSV_COLUMNS = ("domain", "point", "id", "lhs", "rhs", "stderr_lhs", "stderr_rhs", "verdict", "slack_sigma")


class ReportError(ValueError):
    """Malformed report file."""


# legs and checks -------------------------------------------------------------
@dataclass
class Leg:
    label: str
    relation: str
    lhs: float
    rhs: float
    stderr_lhs: float = 0.0
    stderr_rhs: float = 0.0
    rel: float = REL
    slack_sigma: float = 0.0
    passed: bool = True

    def __post_init__(self):
        self.lhs, self.rhs = float(self.lhs), float(self.rhs)
        self.stderr_lhs, self.stderr_rhs = float(self.stderr_lhs), float(self.stderr_rhs)
        sigma = np.hypot(self.stderr_lhs, self.stderr_rhs)
        if sigma == 0:
            sigma = max(self.rel * max(abs(self.lhs), abs(self.rhs)) / SIGMAS, 1e-300)
        if self.relation == "le":
            slack = (self.rhs - self.lhs) / sigma
        elif self.relation == "eq":
            slack = -abs(self.rhs - self.lhs) / sigma
        else:
            raise ValueError(f"unknown relation {self.relation!r}")
        if not np.isfinite(slack):
            slack = -np.inf if np.isnan(slack) else slack
        self.slack_sigma = float(np.clip(slack, -1e300, 1e300))
        self.passed = bool(self.slack_sigma >= -SIGMAS)


def le(label, lhs, rhs, s_lhs=0.0, s_rhs=0.0, rel=REL):
    return Leg(label, "le", lhs, rhs, s_lhs, s_rhs, rel)


def eq(label, lhs, rhs, s_lhs=0.0, s_rhs=0.0, rel=REL):
    return Leg(label, "eq", lhs, rhs, s_lhs, s_rhs, rel)


@dataclass
class InequalityCheck:
    id: str
    verdict: str
    lhs: float | None = None
    rhs: float | None = None
    stderr_lhs: float | None = None
    stderr_rhs: float | None = None
    slack_sigma: float | None = None
    reason: str = ""
    legs: list = field(default_factory=list)

    @classmethod
    def from_legs(cls, cid, legs, note=""):
        if not legs:
            return cls.skipped(cid, note or "no applicable legs")
        worst = min(legs, key=lambda g: g.slack_sigma)
        verdict = "pass" if all(g.passed for g in legs) else "fail"
        return cls(cid, verdict, worst.lhs, worst.rhs, worst.stderr_lhs, worst.stderr_rhs, worst.slack_sigma,
                   note, list(legs))

    @classmethod
    def skipped(cls, cid, reason):
        return cls(cid, "skipped", reason=reason)


@dataclass
class RowReport:
    domain: str
    point_index: int
    point: list
    dim: int
    flags: dict
    quantities: dict
    backends: dict
    checks: list

    def check(self, cid) -> InequalityCheck:
        for c in self.checks:
            if c.id == cid:
                return c
        raise KeyError(cid)


@dataclass
class InequalityReport:
    version: str
    seed: int
    samples: int
    budget: int
    rows: list
    wall_time: float = 0.0

    def to_dict(self, timing: bool = True) -> dict:
        d = asdict(self)
        if not timing:
            d.pop("wall_time")
        return d

    @classmethod
    def from_dict(cls, d) -> "InequalityReport":
        try:
            rows = []
            for r in d["rows"]:
                checks = [InequalityCheck(**{**c, "legs": [Leg(**g) for g in c["legs"]]}) for c in r["checks"]]
                rows.append(RowReport(**{**r, "checks": checks}))
            return cls(d["version"], d["seed"], d["samples"], d["budget"], rows, d.get("wall_time", 0.0))
        except (KeyError, TypeError) as exc:
            raise ReportError(f"malformed report: {exc}") from None


# serialization helpers ---------------------------------------------------------
def _c(z):
    z = complex(z)
    return [z.real, z.imag]


def _cmat(A):
    return [[_c(x) for x in row] for row in np.atleast_2d(A)]


def _vol(v):
    return None if v is None else v.to_dict()


# one row -------------------------------------------------------------------
def _try(fn, reasons, label):
    try:
        return fn()
    except (NoBackendError, NotImplementedError) as exc:
        reasons[label] = str(exc)
        return None


def run_row(spec, a, index: int, seed: int, N: int, budget: int) -> RowReport:
    """All quantities and checks for one (domain, point)."""
    a = np.asarray(a, dtype=complex)
    n = spec.dim
    key = (spec.name, index)
    center = spec.balanced and not np.any(a)
    q: dict = {}
    backends: dict = {}
    missing: dict = {}
    for kind in MetricKind:
        try:
            backends[kind.value] = metric_gauge(spec, a, kind)[1].value
        except NoBackendError as exc:
            backends[kind.value] = "unsupported"
            missing[kind.value] = str(exc)

    def row(checks):
        return RowReport(spec.name, index, [_c(x) for x in a], n, spec.flags(), q, backends, checks)

    if "caratheodory" in missing:
        reason = "no Carathéodory backend: " + missing["caratheodory"]
        return row([InequalityCheck.skipped(cid, reason) for cid in CHECK_IDS])

    # frame, k-hat and the extremal map
    frame = npz_basis(spec, a, budget=budget, seed=seed, key=key)
    jac = build_extremal_map(spec, a, frame)
    ce = ce_bounds(jac, frame)
    ratio_min, ratio_max = diamond_ratios(spec, a, frame, RATIO_SAMPLES, seed=seed, key=key)
    k = frame.k_safe
    q["frame"] = {"basis": _cmat(frame.basis), "radii": [float(r) for r in frame.radii], "pi": frame.pi,
                  "k_hat": frame.k_hat, "k_safe": k, "k_argmin": [_c(x) for x in frame.k_argmin],
                  "evaluations": frame.evaluations}
    q["jacobian"] = {"rows": _cmat(jac.rows), "ambient": _cmat(jac.ambient), "det": _c(jac.det),
                     "abs_det": float(abs(jac.det)), "minors": [_c(m) for m in jac.minors],
                     "expansion_residuals": jac.expansion_residuals}
    q["ce"] = {"lower": ce.lower, "upper": ce.upper}
    q["diamond_ratios"] = {"min_ratio": ratio_min, "max_ratio": ratio_max, "samples": RATIO_SAMPLES}

    # volumes; all indicatrices at this point share one sample stream
    vkey = key + ("indicatrix",)
    reasons: dict = {}
    V = _try(lambda: indicatrix_volume(spec, a, "reciprocal_distance", N, seed, key=vkey, method="auto", threads=1),
             reasons, "V")
    VA = _try(lambda: indicatrix_volume(spec, a, "azukawa", N, seed, key=vkey, method="auto", threads=1),
              reasons, "VA")
    VC = indicatrix_volume(spec, a, "caratheodory", N, seed, key=vkey, method="auto", threads=1)
    VC_mc = VC if VC.method == "monte_carlo" else indicatrix_volume(spec, a, "caratheodory", N, seed, key=vkey,
                                                                      threads=1)
    VE = diamond_volume_closed(frame.radii)
    E, r = frame.basis, frame.radii
    VE_mc = mc_volume(lambda Y: (np.abs(Y) @ r) < 1.0, (1.0 / r) * (1 + 1e-9), N, seed, key=key + ("VE",),
                      which="VE", threads=1)
    dom = domain_volume(spec, N, seed, key=key)
    q["volumes"] = {"V": _vol(V), "VA": _vol(VA), "VC": _vol(VC), "VC_mc": _vol(VC_mc), "VE": _vol(VE),
                    "VE_mc": _vol(VE_mc), "domain": _vol(dom), "unavailable": reasons}

    K = best_kernel(spec, a, vol=dom, degree=GRAM_DEGREE[n], N=N, seed=seed, key=key)
    q["kernel"] = K.to_dict()

    hull = polydisc_hull_volumes(spec, a, budget=budget, seed=seed, key=key, frame=frame)
    q["hull"] = {name: {"volume": fit.volume, "radii": [float(s) for s in fit.radii], "basis": _cmat(fit.basis)}
                 for name, fit in asdict_fits(hull).items()}
    P = min_pi_over_frames(spec, a, budget=budget, seed=seed, key=key, frame=frame)
    q["P"] = {"P": P.P, "pi_min": P.pi_min, "basis": _cmat(P.basis)}

    checks = _checks(spec, n, center, frame, jac, ce, ratio_min, ratio_max, V, VA, VC, VC_mc, VE, VE_mc, K,
                     hull, P, q, reasons)
    return row(checks)


def asdict_fits(hull):
    return {"inscribed": hull.inscribed, "circumscribed": hull.circumscribed,
            "inscribed_coordinate": hull.inscribed_coordinate,
            "circumscribed_coordinate": hull.circumscribed_coordinate}


def _inv(v):
    """1/v with its propagated stderr."""
    return 1.0 / v.value, v.stderr / v.value**2


def _checks(spec, n, center, frame, jac, ce, ratio_min, ratio_max, V, VA, VC, VC_mc, VE, VE_mc, K, hull, P, q,
            reasons):
    out = []
    k = frame.k_safe
    Pi = frame.pi
    A = (2 * pi) ** n / factorial(2 * n)
    nf2 = float(factorial(n)) ** 2
    det = float(abs(jac.det))

    # chain V <= VA <= VC
    legs = []
    if V is not None and VA is not None:
        legs.append(le("V <= VA", V.value, VA.value, V.stderr, VA.stderr))
    if VA is not None:
        legs.append(le("VA <= VC", VA.value, VC.value, VA.stderr, VC.stderr))
    if V is not None:
        legs.append(le("V <= VC", V.value, VC.value, V.stderr, VC.stderr))
        if center and spec.convex:
            legs.append(eq("V == VC (convex balanced center)", V.value, VC.value, V.stderr, VC.stderr))
    if VC_mc is not VC:
        legs.append(eq("VC Monte Carlo == VC closed form", VC_mc.value, VC.value, VC_mc.stderr, VC.stderr))
    note = "; ".join(f"{k_} unavailable: {v}" for k_, v in reasons.items())
    out.append(InequalityCheck.from_legs("chain_comp", legs, note))

    # K <= 1/V
    kval, kerr = K.value, K.stderr
    if V is None:
        out.append(InequalityCheck.skipped("upper_K_vs_V", "V unavailable: " + reasons.get("V", "")))
    else:
        iv, ierr = _inv(V)
        out.append(InequalityCheck.from_legs("upper_K_vs_V", [le("K <= 1/V", kval, iv, kerr, ierr)]))

    # Suita: K >= 1/VA
    if not spec.pseudoconvex:
        out.append(InequalityCheck.skipped("suita_thmS", "domain not known to be pseudoconvex"))
    elif VA is None:
        out.append(InequalityCheck.skipped("suita_thmS", "VA unavailable: " + reasons.get("VA", "")))
    else:
        iva, ierr = _inv(VA)
        legs = [le("1/VA <= K", iva, kval, ierr, kerr)]
        if center:
            legs.append(eq("K == 1/VA (balanced center)", kval, iva, kerr, ierr))
        note = "" if K.exact is not None else "K is a Gram lower bound"
        out.append(InequalityCheck.from_legs("suita_thmS", legs, note))

    # diamond comparison C(a;X) vs sum r_j|X_j| on fresh directions
    out.append(InequalityCheck.from_legs("eq1_upper", [le("max C/sum r|X| <= 1", ratio_max, 1.0)]))
    out.append(InequalityCheck.from_legs("eq1_lower_khat", [
        le("k_hat <= min C/sum r|X|", frame.k_hat, ratio_min, rel=K_REL),
        le("k_hat <= 1", frame.k_hat, 1.0),
    ]))

    # determinant lower and upper bounds
    legs = [le("k^n Pi <= |det|", k**n * Pi, det)]
    # relative residual of det = last row . cofactors, at each depth
    legs += [le(f"expansion identity depth {m + 2}", res, REL, rel=0.0)
             for m, res in enumerate(jac.expansion_residuals)]
    out.append(InequalityCheck.from_legs("lemma_lower", legs))
    out.append(InequalityCheck.from_legs("det_upper", [le("|det| <= n! Pi", det, factorial(n) * Pi)]))

    # CE / Pi^2 at both ends of the CE interval
    legs = []
    for end, val in (("lower", ce.lower), ("upper", ce.upper)):
        legs.append(le(f"k^2n <= CE_{end}/Pi^2", k ** (2 * n), val / Pi**2))
        legs.append(le(f"CE_{end}/Pi^2 <= (n!)^2", val / Pi**2, nf2))
    out.append(InequalityCheck.from_legs("eq23", legs))

    # volume of the diamond body in the frame
    out.append(InequalityCheck.from_legs("eq4_diamond", [
        eq("VE Monte Carlo == (2pi)^n/((2n)! Pi^2)", VE_mc.value, VE.value, VE_mc.stderr, 0.0),
        eq("VE closed form == A / Pi^2", VE.value, A / Pi**2),
    ]))

    # final CE bracket
    lo_b, hi_b = k ** (2 * n), nf2 / k ** (2 * n)
    legs = []
    vals = {}
    for end, val in (("lower", ce.lower), ("upper", ce.upper)):
        x = val * VC.value / A
        sx = val * VC.stderr / A
        vals[end] = x
        legs.append(le(f"k^2n <= (2n)!/(2pi)^n CE_{end} VC", lo_b, x, 0.0, sx))
        legs.append(le(f"(2n)!/(2pi)^n CE_{end} VC <= (n!)^2/k^2n", x, hi_b, sx, 0.0))
    q["bracket"] = {"value_at_ce_lower": vals["lower"], "value_at_ce_upper": vals["upper"], "lower": lo_b,
                    "upper": hi_b}
    out.append(InequalityCheck.from_legs("ce_bracket_final", legs))

    # corollaries
    if spec.convex:
        c, cls = 0.5, "convex"
    elif spec.c_convex:
        c, cls = 0.25, "C-convex"
    else:
        c, cls = None, ""
    C_n = (2 * pi) ** n * nf2 / (factorial(2 * n) * k ** (2 * n))
    c_n = (2 * pi) ** n * k ** (2 * n) / factorial(2 * n)
    q["constants"] = {"c": c, "C_n": C_n, "c_n": c_n, "A": A}
    if c is None:
        reason = "domain not detected as convex or C-convex"
        out.append(InequalityCheck.skipped("corollary1", reason))
        out.append(InequalityCheck.skipped("corollary2", reason))
    elif V is None or VA is None:
        reason = "V or VA unavailable"
        out.append(InequalityCheck.skipped("corollary1", reason))
        out.append(InequalityCheck.skipped("corollary2", reason))
    else:
        c2n = c ** (2 * n)
        iv, siv = _inv(V)
        iva, siva = _inv(VA)
        out.append(InequalityCheck.from_legs("corollary1", [
            le("1/V <= c^-2n / VA", iv, iva / c2n, siv, siva / c2n),
            le("K <= 1/V", kval, iv, kerr, siv),
            le("1/VA <= K", iva, kval, siva, kerr),
        ], cls))
        legs = [le("VC <= c^-2n V", VC.value, V.value / c2n, VC.stderr, V.stderr / c2n)]
        for end, val in (("lower", ce.lower), ("upper", ce.upper)):
            legs.append(le(f"CE_{end} <= C_n K", val, C_n * kval, 0.0, C_n * kerr))
            legs.append(le(f"c^2n c_n K <= CE_{end}", c2n * c_n * kval, val, c2n * c_n * kerr, 0.0))
        out.append(InequalityCheck.from_legs("corollary2", legs, cls))

    out.append(_remark(n, k, Pi, A, nf2, ce, VE, hull, P, q))
    return out


def _remark(n, k, Pi, A, nf2, ce, VE, hull, P, q):
    """Each extremal-volume quantity times Pi^2 lies in an interval depending on n and k only."""
    k2n = k ** (2 * n)
    P2 = P.P**2
    scaled = {
        "V_inscribed": (hull.inscribed.volume * Pi**2, pi**n / n ** (2 * n), A / k2n),
        "V_circumscribed": (hull.circumscribed.volume * Pi**2, A, pi**n / k2n),
        "VE": (VE.value * Pi**2, A, A),
        "P^2": (P2 * Pi**2, 1.0, nf2 / k2n),
        "1/CE_lower": (Pi**2 / ce.lower, 1.0 / nf2, 1.0 / k2n),
        "1/CE_upper": (Pi**2 / ce.upper, 1.0 / nf2, 1.0 / k2n),
    }
    legs = []
    for name, (x, lo, hi) in scaled.items():
        legs.append(le(f"{lo:.6g} <= {name} Pi^2", lo, x))
        legs.append(le(f"{name} Pi^2 <= {hi:.6g}", x, hi))
    raw = {"V_inscribed": hull.inscribed.volume, "V_circumscribed": hull.circumscribed.volume,
           "VE": VE.value, "P^2": P2, "1/CE_lower": 1.0 / ce.lower, "1/CE_upper": 1.0 / ce.upper}
    names = list(raw)
    beta = k2n * A / nf2
    ratios = {}
    for i, x in enumerate(names):
        for y in names[i + 1:]:
            ratios[f"{x} / {y}"] = raw[x] / raw[y]
    finite = all(np.isfinite(v) and v > 0 for v in ratios.values())
    legs.append(le("all pairwise ratios finite and positive", 0.0 if finite else 1.0, 0.0))
    q["remark"] = {
        "scaled": {name: {"value": x, "lower": lo, "upper": hi} for name, (x, lo, hi) in scaled.items()},
        "pairwise": ratios,
        "beta": beta,
        "beta_bracket_nonempty": bool(beta <= 1.0 / beta),
        "pairwise_within_beta": {name: bool(beta <= v <= 1.0 / beta) for name, v in ratios.items()},
    }
    return InequalityCheck.from_legs("remark_ratios", legs)


# the suite -------------------------------------------------------------------
def _threads():
    return max(1, int(os.environ.get("CARALAB_THREADS", "1")))


def _row_job(args):
    cfg, a, index, seed, N, budget = args
    spec = dz.spec_from_config(cfg)
    return run_row(spec, np.asarray(a, dtype=complex), index, seed, N, budget)


def run_suite(config, seed: int = 0, N: int = 10**6, budget: int = 20_000, *, threads: int | None = None
              ) -> InequalityReport:
    """Run every (domain, point) of a parsed or raw configuration."""
    start = time.perf_counter()
    entries = config if isinstance(config, list) and config and isinstance(config[0], tuple) else \
        dz.parse_domain_spec(config)
    jobs = [(spec.to_config(), a, i, seed, N, budget) for spec, pts in entries for i, a in enumerate(pts)]
    workers = min(threads or _threads(), max(len(jobs), 1))
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            rows = list(ex.map(_row_job, jobs))
    else:
        rows = [_row_job(j) for j in jobs]
    return InequalityReport(__version__, seed, N, budget, rows, time.perf_counter() - start)


# reporting -------------------------------------------------------------------
def check_report(report) -> tuple[int, str]:
    """Exit status (0 iff no check failed) and a human-readable summary."""
    if isinstance(report, dict):
        report = InequalityReport.from_dict(report)
    lines, failed, skipped = [], 0, 0
    total = len(CHECK_IDS)
    for r in report.rows:
        ids = [c.id for c in r.checks]
        if sorted(ids) != sorted(CHECK_IDS):
            raise ReportError(f"row {r.domain}[{r.point_index}] does not list every check exactly once")
        npass = sum(c.verdict == "pass" for c in r.checks)
        lines.append(f"{r.domain} @ point {r.point_index}: {npass}/{total} pass")
        for c in r.checks:
            if c.verdict == "fail":
                failed += 1
                lines.append(f"  FAIL {c.id}: lhs={c.lhs:.10g} rhs={c.rhs:.10g} slack={c.slack_sigma:.3g} sigma")
            elif c.verdict == "skipped":
                skipped += 1
                lines.append(f"  skipped {c.id}: {c.reason}")
    all_pass = all(c.verdict == "pass" for r in report.rows for c in r.checks)
    if all_pass:
        head = f"{total}/{total} checks pass per row"
    else:
        head = f"{failed} failed, {skipped} skipped across {len(report.rows)} rows"
    lines.insert(0, head)
    return (1 if failed else 0), "\n".join(lines)


def _json_clean(obj):
    if isinstance(obj, float) and not np.isfinite(obj):
        return None if np.isnan(obj) else (1e308 if obj > 0 else -1e308)
    if isinstance(obj, dict):
        return {k: _json_clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_clean(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return _json_clean(obj.item())
    return obj


def emit(report: InequalityReport, fmt: str = "json", path=None, *, timing: bool = True) -> str:
    """Serialize to JSON (full report) or CSV (one line per check); write to ``path`` if given."""
    if fmt == "json":
        text = json.dumps(_json_clean(report.to_dict(timing)), indent=1, allow_nan=False) + "\n"
    elif fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in report.rows:
            for c in r.checks:
                w.writerow([r.domain, r.point_index, c.id] + [
                    "" if v is None else repr(float(v))
                    for v in (c.lhs, c.rhs, c.stderr_lhs, c.stderr_rhs)
                ] + [c.verdict, "" if c.slack_sigma is None else repr(float(c.slack_sigma))])
        text = buf.getvalue()
    else:
        raise ValueError(f"unsupported format {fmt!r}")
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def load_report(path_or_text) -> InequalityReport:
    text = path_or_text
    if not str(path_or_text).lstrip().startswith("{"):
        with open(path_or_text, encoding="utf-8") as fh:
            text = fh.read()
    try:
        return InequalityReport.from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ReportError(f"report is not valid JSON: {exc}") from None

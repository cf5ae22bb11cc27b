"""Euclidean-limit experiments and linear-programming bound certificates.

Fourier convention: f^(xi) = int f(x) exp(-2 pi i <x, xi>) dx, so for a
radial f on R^n

    f^(s) = 2 pi s^(1 - n/2) int_0^R f(r) J_{n/2-1}(2 pi r s) r^(n/2) dr,
    f^(0) = |S^(n-1)| int_0^R f(r) r^(n-1) dr.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import special
from scipy.interpolate import make_interp_spline

from . import bounds as bound_registry
from .config import BOUND_TOL, DEFAULT_CAPS, Caps
from .errors import InfeasibleCertificate, PackboundError, QuadratureFailure, SizeCapExceeded, SolverFailure
from .geometry import PointConfiguration, cube_mesh


def ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n."""
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


# ---------------------------------------------------------------- profiles

@dataclass(frozen=True)
class RadialProfile:
    """Radial function on [0, support], zero beyond.

    ``kind`` is ``"piecewise"`` (polynomial pieces, coefficients in
    increasing powers of r), ``"samples"`` (spline through tabulated
    values) or ``"analytic"`` (a vectorised callable).
    """

    dim: int
    support: float
    kind: str
    breakpoints: tuple = ()
    coefficients: tuple = ()
    order: int = 1
    func: Optional[Callable] = field(default=None, compare=False, repr=False)
    name: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        if not self.support > 0:
            raise ValueError("support radius must be positive")
        bp = tuple(float(b) for b in self.breakpoints)
        object.__setattr__(self, "breakpoints", bp)
        if self.kind == "piecewise":
            if len(bp) != len(self.coefficients) + 1 or bp[0] != 0.0 or np.any(np.diff(bp) <= 0):
                raise ValueError("piecewise profile needs breakpoints 0 = r_0 < ... < r_k and k pieces")
            if bp[-1] > self.support + 1e-12:
                raise ValueError("breakpoints exceed the support")
            coeffs = tuple(tuple(float(c) for c in piece) for piece in self.coefficients)
            object.__setattr__(self, "coefficients", coeffs)
            scale = max(1.0, max(abs(c) for piece in coeffs for c in piece))
            for k in range(1, len(coeffs)):
                left = np.polynomial.polynomial.polyval(bp[k], coeffs[k - 1])
                right = np.polynomial.polynomial.polyval(bp[k], coeffs[k])
                if abs(left - right) > 1e-9 * scale:
                    raise ValueError(f"profile is discontinuous at r = {bp[k]}")
        elif self.kind == "samples":
            r, f = (np.asarray(a, dtype=float) for a in self.coefficients)
            if r[0] != 0.0 or np.any(np.diff(r) <= 0) or r[-1] > self.support + 1e-12:
                raise ValueError("sample radii must increase from 0 within the support")
            spline = make_interp_spline(r, f, k=self.order)
            object.__setattr__(self, "func", lambda x, _s=spline, _e=r[-1]: np.where(x <= _e, _s(np.minimum(x, _e)), 0.0))
            object.__setattr__(self, "breakpoints", (0.0, float(r[-1])))
        elif self.kind == "analytic":
            if self.func is None:
                raise ValueError("analytic profile needs a callable")
            if not bp:
                object.__setattr__(self, "breakpoints", (0.0, float(self.support)))
        else:
            raise ValueError(f"unknown profile kind {self.kind!r}")

    # constructors
    @classmethod
    def piecewise(cls, dim, breakpoints, coefficients, name="") -> "RadialProfile":
        return cls(dim, float(breakpoints[-1]), "piecewise", tuple(breakpoints), tuple(coefficients), name=name)

    @classmethod
    def from_samples(cls, dim, r, f, order: int = 1, name="") -> "RadialProfile":
        return cls(dim, float(r[-1]), "samples", (), (tuple(r), tuple(f)), order=order, name=name)

    @classmethod
    def analytic(cls, dim, support, func, breakpoints=(), name="") -> "RadialProfile":
        return cls(dim, float(support), "analytic", tuple(breakpoints), (), func=func, name=name)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "piecewise":
            out = np.zeros_like(r)
            bp = self.breakpoints
            for k, piece in enumerate(self.coefficients):
                sel = (r >= bp[k]) & ((r < bp[k + 1]) | ((k == len(self.coefficients) - 1) & (r <= bp[k + 1])))
                out = np.where(sel, np.polynomial.polynomial.polyval(r, piece), out)
            return out
        val = np.asarray(self.func(np.clip(r, 0.0, self.support)), dtype=float)
        return np.where(r <= self.support, val, 0.0)

    # serialisation
    def to_json(self) -> dict:
        if self.kind == "piecewise":
            return {"kind": "piecewise", "dim": self.dim, "breakpoints": list(self.breakpoints),
                    "coefficients": [list(p) for p in self.coefficients], "name": self.name}
        if self.kind == "samples":
            r, f = self.coefficients
            return {"kind": "samples", "dim": self.dim, "r": list(r), "f": list(f), "order": self.order,
                    "name": self.name}
        raise ValueError("analytic profiles are not serialisable")

    @classmethod
    def from_json(cls, data: dict, dim: Optional[int] = None) -> "RadialProfile":
        n = int(dim if dim is not None else data["dim"])
        kind = data.get("kind", "piecewise")
        if kind == "piecewise":
            return cls.piecewise(n, data["breakpoints"], data["coefficients"], data.get("name", ""))
        if kind == "samples":
            return cls.from_samples(n, data["r"], data["f"], int(data.get("order", 1)), data.get("name", ""))
        raise ValueError(f"unsupported profile kind {kind!r}")


def triangle_profile(dim: int = 1) -> RadialProfile:
    """f(r) = 2 - r on [0, 2]."""
    return RadialProfile.piecewise(dim, [0.0, 2.0], [[2.0, -1.0]], name="triangle")


def _lens_2(r):
    a = np.clip(r / 2, 0, 1)
    return 2 * np.arccos(a) - (r / 2) * np.sqrt(np.maximum(4 - r * r, 0.0))


def _lens_4(r):
    a = np.clip(r / 2, 0, 1)
    inner = a * (5 - 2 * a * a) * np.sqrt(np.maximum(1 - a * a, 0.0)) / 8 + 3 * np.arcsin(a) / 8
    return (8 * math.pi / 3) * (3 * math.pi / 16 - inner)


def ball_autocorrelation(n: int) -> RadialProfile:
    """f = 1_B * 1_B for the unit ball B in R^n: the volume of a lens of two
    unit balls at centre distance r, supported on [0, 2]."""
    if n == 1:
        return RadialProfile.piecewise(1, [0.0, 2.0], [[2.0, -1.0]], name="ball-autocorr")
    if n == 2:
        return RadialProfile.analytic(2, 2.0, _lens_2, name="ball-autocorr")
    if n == 3:
        c = math.pi / 12
        return RadialProfile.piecewise(3, [0.0, 2.0], [[16 * c, -12 * c, 0.0, c]], name="ball-autocorr")
    if n == 4:
        return RadialProfile.analytic(4, 2.0, _lens_4, name="ball-autocorr")
    raise ValueError("ball autocorrelation is available for 1 <= n <= 4")


# ---------------------------------------------------------------- radial Fourier transform

_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


def _gl(fn, a, b):
    """Gauss-Legendre on each panel [a_k, b_k] at once."""
    half = (b - a) / 2
    mid = (a + b) / 2
    x = mid[:, None] + half[:, None] * _GL_X[None, :]
    v = fn(x)
    return half * (v @ _GL_W), half * (np.abs(v) @ _GL_W)


def _adaptive(fn, edges, rtol: float, max_rounds: int = 40) -> float:
    """Vectorised adaptive Gauss-Legendre: split panels until whole and
    halves agree to ``rtol`` relative to the integral of |fn|."""
    a = np.asarray(edges[:-1], dtype=float)
    b = np.asarray(edges[1:], dtype=float)
    length = float(edges[-1] - edges[0])
    _, absint = _gl(fn, a, b)
    scale = max(float(absint.sum()), 1e-300)
    total = 0.0
    for _ in range(max_rounds):
        whole, _ = _gl(fn, a, b)
        m = (a + b) / 2
        left, _ = _gl(fn, a, m)
        right, _ = _gl(fn, m, b)
        halves = left + right
        err = np.abs(whole - halves)
        ok = err <= rtol * scale * (b - a) / length
        total += float(halves[ok].sum())
        if np.all(ok):
            return total
        a, b, m = a[~ok], b[~ok], m[~ok]
        a, b = np.concatenate([a, m]), np.concatenate([m, b])
    raise QuadratureFailure(f"adaptive quadrature did not converge ({len(a)} panels left)")


def bessel_j(nu: float, x):
    """J_nu for the orders a radial transform needs.

    Half-integer orders use closed trigonometric forms, 0 and 1 the
    dedicated routines; anything else falls back to ``special.jv``.
    """
    x = np.asarray(x, dtype=float)
    if nu == 0:
        return special.j0(x)
    if nu == 1:
        return special.j1(x)
    if nu == -0.5:
        return np.sqrt(2 / (np.pi * x)) * np.cos(x)
    if nu == 0.5:
        return np.sqrt(2 / (np.pi * x)) * np.sin(x)
    if nu == 1.5:
        return np.sqrt(2 / (np.pi * x)) * (np.sin(x) / x - np.cos(x))
    return special.jv(nu, x)


def radial_fourier(f: RadialProfile, s, rtol: float = 1e-10):
    """n-dimensional Fourier transform of a radial profile at radius ``s``.

    Bessel values come from :func:`bessel_j`; panels are no longer than
    half an oscillation of the kernel and respect the profile breakpoints.
    """
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s_arr < 0):
        raise ValueError("frequency radius must be nonnegative")
    n = f.dim
    nu = n / 2 - 1
    out = np.empty_like(s_arr)
    for k, sk in enumerate(s_arr):
        width = 0.25 if sk == 0 else min(0.25, 0.5 / sk)
        edges = [0.0]
        for lo, hi in zip(f.breakpoints, f.breakpoints[1:]):
            pieces = max(1, int(math.ceil((hi - lo) / width)))
            edges.extend(np.linspace(lo, hi, pieces + 1)[1:])
        if sk == 0:
            val = _adaptive(lambda r: f(r) * r ** (n - 1), edges, rtol) * sphere_area(n)
        else:
            kern = lambda r, _s=sk: f(r) * bessel_j(nu, 2 * math.pi * r * _s) * r ** (n / 2)  # noqa: E731
            val = 2 * math.pi * sk ** (1 - n / 2) * _adaptive(kern, edges, rtol)
        out[k] = val
    return out if np.ndim(s) else float(out[0])


# ---------------------------------------------------------------- LP certificates

LANDAU_C = 0.7858  # sup_x x^(1/3) |J_nu(x)| <= 0.7858 for nu >= 0


@dataclass
class CertificateReport:
    variant: str
    n: int
    f0: float
    fhat0: float
    ratio: float
    density_bound: float
    min_fhat_margin: float
    sign_margin: float
    feasible: bool
    worst_fhat_at: float = 0.0
    worst_sign_at: float = 0.0
    violation: Optional[tuple] = None
    tail_bound: float = float("nan")

    def record(self) -> dict:
        return {"variant": self.variant, "n": self.n, "f0": self.f0, "fhat0": self.fhat0,
                "ratio": self.ratio, "density_bound": self.density_bound,
                "min_fhat_margin": self.min_fhat_margin, "sign_margin": self.sign_margin,
                "feasible": self.feasible}


_VARIANTS = {"theta'": "theta'", "lp": "theta'", "prime": "theta'", "theta": "theta",
             "theta+": "theta+", "plus": "theta+"}


def lp_certificate_check(f: RadialProfile, variant: str = "theta'", r_step: float = 1e-3,
                         fhat_tol: float = 1e-7, sign_tol: float = 1e-12, s_step: Optional[float] = None,
                         strict: bool = False) -> CertificateReport:
    """Check an auxiliary function for the linear-programming style bound.

    Sign conditions by variant: f <= 0 for r >= 2 (theta'), f = 0 for
    r >= 2 (theta), additionally f >= 0 for r <= 2 (theta+).  Positive
    definiteness is checked as f^ >= -fhat_tol on [0, 10 + 4R].  With
    ``strict`` a failed check raises :class:`InfeasibleCertificate`.
    """
    v = _VARIANTS.get(variant)
    if v is None:
        raise ValueError(f"unknown certificate variant {variant!r}")
    R = f.support
    r = np.unique(np.concatenate([np.arange(0.0, R, r_step), [2.0] if R > 2 else [], [R]]))
    fr = f(r)
    outside = r >= 2.0
    inside = r <= 2.0
    margins = []
    if np.any(outside):
        if v == "theta'":
            margins.append(("f <= 0 for r >= 2", -fr, outside))
        else:
            margins.append(("f = 0 for r >= 2", -np.abs(fr), outside))
    if v == "theta+":
        margins.append(("f >= 0 for r <= 2", fr, inside))
    sign_margin, sign_at, sign_cond = math.inf, 0.0, None
    for cond, m, sel in margins:
        k = int(np.argmin(np.where(sel, m, np.inf)))
        if m[k] < sign_margin:
            sign_margin, sign_at, sign_cond = float(m[k]) + 0.0, float(r[k]), cond
    if not margins:
        sign_margin = 0.0

    f0 = float(f(np.array([0.0]))[0])
    fhat0 = float(radial_fourier(f, 0.0))
    s_max = 10.0 + 4.0 * R
    step = s_step if s_step is not None else 1.0 / (40.0 * R)
    s = np.arange(0.0, s_max + step / 2, step)
    fh = radial_fourier(f, s)
    k = int(np.argmin(fh))
    min_fhat, fhat_at = float(fh[k]), float(s[k])
    # informational: |f^(s)| <= 2 pi s^(1-n/2) c (2 pi s)^(-1/3) int |f| r^(n/2 - 1/3) dr beyond the grid
    n = f.dim
    rr = np.linspace(0, R, 2001)
    moment = float(np.trapezoid(np.abs(f(rr)) * rr ** (n / 2 - 1 / 3), rr))
    tail = 2 * math.pi * s_max ** (1 - n / 2) * LANDAU_C * (2 * math.pi * s_max) ** (-1 / 3) * moment

    ratio = f0 / fhat0 if fhat0 != 0 else math.inf
    violation = None
    if fhat0 <= 0:
        violation = ("fhat(0) > 0", 0.0, fhat0)
    elif sign_margin < -sign_tol:
        violation = (sign_cond, sign_at, sign_margin)
    elif min_fhat < -fhat_tol:
        violation = ("fhat >= 0", fhat_at, min_fhat)
    report = CertificateReport(v, n, f0, fhat0, ratio, ratio * ball_volume(n), min_fhat, sign_margin,
                               violation is None, fhat_at, sign_at, violation, tail)
    if strict and violation is not None:
        raise InfeasibleCertificate(*violation)
    return report


# ---------------------------------------------------------------- sweeps

CSV_FIELDS = ("bound", "dim", "r", "h", "value", "value_over_rn", "wall_ms", "status")


@dataclass
class SweepRow:
    r: float
    h: float
    value: float
    value_over_rn: float
    wall_ms: float
    status: str


@dataclass
class SweepRecord:
    bound: str
    dim: int
    rows: list = field(default_factory=list)

    def values(self) -> dict:
        return {(row.r, row.h): row.value_over_rn for row in self.rows if row.status == "ok"}

    def refinement(self) -> dict:
        """Per r: values in order of decreasing h and whether they never decrease."""
        out = {}
        for r in sorted({row.r for row in self.rows}):
            seq = [(row.h, row.value) for row in sorted(self.rows, key=lambda x: -x.h)
                   if row.r == r and row.status == "ok"]
            vals = [v for _, v in seq]
            out[r] = (seq, all(a <= b + BOUND_TOL for a, b in zip(vals, vals[1:])))
        return out


def _key(bound, dim, r, h):
    return (str(bound), int(dim), float(r), float(h))


def _read_done(path) -> dict:
    done = {}
    if path and os.path.exists(path) and os.path.getsize(path) > 0:
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                k = _key(rec["bound"], rec["dim"], rec["r"], rec["h"])
                done[k] = SweepRow(float(rec["r"]), float(rec["h"]), float(rec["value"]),
                                   float(rec["value_over_rn"]), float(rec["wall_ms"]), rec["status"])
    return done


def sweep_point(bound: str, n: int, r: float, h: float, caps: Caps = DEFAULT_CAPS, opts=None) -> SweepRow:
    t0 = time.perf_counter()
    try:
        value = bound_registry.evaluate(bound, cube_mesh(n, r, h), caps, opts)
        status = "ok"
    except SizeCapExceeded:
        value, status = float("nan"), "cap_exceeded"
    except SolverFailure:
        value, status = float("nan"), "solver_failure"
    return SweepRow(float(r), float(h), value, value / r ** n, (time.perf_counter() - t0) * 1e3, status)


def delta_sweep(bound: str, n: int, r_list: Sequence[float], h_list: Sequence[float],
                csv_path=None, workers: int = 1, caps: Caps = DEFAULT_CAPS, opts=None) -> SweepRecord:
    """Evaluate ``bound`` on cube meshes for every (r, h) and record A / r^n.

    With ``csv_path`` the run resumes: parameter tuples already present are
    reused and only new rows are appended.
    """
    bound = bound_registry.canonical(bound)
    done = _read_done(csv_path)
    todo = [(float(r), float(h)) for r in r_list for h in h_list]
    pending = [(r, h) for r, h in todo if _key(bound, n, r, h) not in done]
    writer_fh = None
    if csv_path:
        fresh = not os.path.exists(csv_path) or os.path.getsize(csv_path) == 0
        writer_fh = open(csv_path, "a", newline="")
        writer = csv.writer(writer_fh)
        if fresh:
            writer.writerow(CSV_FIELDS)
    try:
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            results = pool.map(lambda rh: sweep_point(bound, n, rh[0], rh[1], caps, opts), pending)
            # single writer: rows are appended in input order as they complete
            for (r, h), row in zip(pending, results):
                done[_key(bound, n, r, h)] = row
                if writer_fh is not None:
                    writer.writerow([bound, n, repr(r), repr(h), repr(row.value), repr(row.value_over_rn),
                                     f"{row.wall_ms:.3f}", row.status])
                    writer_fh.flush()
    finally:
        if writer_fh is not None:
            writer_fh.close()
    return SweepRecord(bound, n, [done[_key(bound, n, r, h)] for r, h in todo])


# ---------------------------------------------------------------- sandwich report

SANDWICH_ORDER = ("pack", "las'1", "theta'", "theta", "theta+", "chi", "cov")


@dataclass
class SandwichReport:
    rows: list  # (bound, value or None, status)
    holds: bool

    def table(self) -> str:
        return "\n".join(f"{b:8s} {'-' if v is None else f'{v:.8f}'} {s}" for b, v, s in self.rows)


def sandwich_consistency_report(n: int = 1, r: float = 6.0, h: float = 1.0, config: Optional[PointConfiguration] = None,
                                caps: Caps = DEFAULT_CAPS, opts=None, order=SANDWICH_ORDER,
                                tol: float = BOUND_TOL) -> SandwichReport:
    """Every computable bound on one configuration, checked for the chain
    pack <= las'_1 <= theta' <= theta <= theta+ <= chi-cover <= cov."""
    c = config if config is not None else cube_mesh(n, r, h)
    rows = []
    for b in order:
        try:
            rows.append((b, bound_registry.evaluate(b, c, caps, opts), "ok"))
        except PackboundError as exc:
            rows.append((b, None, type(exc).__name__))
    vals = [v for _, v, _ in rows if v is not None]
    return SandwichReport(rows, all(a <= b + tol for a, b in zip(vals, vals[1:])))


def load_profile(path, dim: Optional[int] = None) -> RadialProfile:
    with open(path) as fh:
        return RadialProfile.from_json(json.load(fh), dim)

"""Registry of packing bound functions on point configurations and the
axiom-checking harness that runs them against generated cases."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Optional

from . import lasserre, theta
from .config import BOUND_TOL, DEFAULT_CAPS, Caps
from .geometry import AXIOMS, AxiomCase, PointConfiguration, conflict_graph, cov, pack
from .graphs import chromatic_number, complement

# sandwich order, smallest first
BOUND_IDS = ("pack", "las'3", "las'2", "las'1", "theta'", "theta", "theta+", "chi", "cov")
EXACT_BOUNDS = ("pack", "chi", "cov")


def chi_cover(c: PointConfiguration, caps: Caps = DEFAULT_CAPS) -> int:
    """Fewest groups of pairwise-conflicting points covering c (chi of the far-pair graph)."""
    return chromatic_number(complement(conflict_graph(c)), caps)


def _las(t, positive=True):
    def fn(c, caps=DEFAULT_CAPS, opts=None):
        g = conflict_graph(c)
        return lasserre.las_result(g, t, positive, caps, opts).value
    return fn


def _theta(v):
    def fn(c, caps=DEFAULT_CAPS, opts=None):
        return theta.theta_bound_on_points(c, v, caps, opts)
    return fn


_REGISTRY: Dict[str, Callable] = {
    "pack": lambda c, caps=DEFAULT_CAPS, opts=None: float(pack(c, caps)),
    "cov": lambda c, caps=DEFAULT_CAPS, opts=None: float(cov(c, caps)),
    "chi": lambda c, caps=DEFAULT_CAPS, opts=None: float(chi_cover(c, caps)),
    "theta'": _theta("theta'"),
    "theta": _theta("theta"),
    "theta+": _theta("theta+"),
    "las'1": _las(1),
    "las'2": _las(2),
    "las'3": _las(3),
    "las1": _las(1, False),
    "las2": _las(2, False),
}

_ALIASES = {"theta_prime": "theta'", "prime": "theta'", "theta_plus": "theta+", "plus": "theta+",
            "las_prime": "las'1", "las1'": "las'1", "chi-cover": "chi"}


def canonical(bound: str) -> str:
    b = _ALIASES.get(bound, bound)
    if b not in _REGISTRY:
        raise ValueError(f"unknown bound {bound!r}; choose from {sorted(_REGISTRY)}")
    return b


def evaluate(bound: str, c: PointConfiguration, caps: Caps = DEFAULT_CAPS, opts=None) -> float:
    if len(c) == 0:
        return 0.0
    return float(_REGISTRY[canonical(bound)](c, caps, opts))


def available() -> tuple:
    return tuple(sorted(_REGISTRY))


# ---------------------------------------------------------------- axiom harness

@dataclass
class AxiomReport:
    bound: str
    passed: Counter = field(default_factory=Counter)
    failed: Counter = field(default_factory=Counter)
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return sum(self.failed.values()) == 0

    def record(self) -> dict:
        return {"bound": self.bound,
                "axioms": {a: {"passed": self.passed[a], "failed": self.failed[a]}
                           for a in AXIOMS if self.passed[a] or self.failed[a]},
                "ok": self.ok}


def case_holds(case: AxiomCase, values, tol: float) -> bool:
    v = values
    if case.relation == "eq1":
        return abs(v[0] - 1.0) <= tol
    if case.relation == "le":
        return v[0] <= v[1] + tol
    if case.relation == "eq":
        return abs(v[0] - v[1]) <= tol
    if case.relation == "sum":
        return abs(v[0] - v[1] - v[2]) <= tol
    raise ValueError(f"unknown relation {case.relation!r}")


def check_axioms(bound, cases: Iterable[AxiomCase], caps: Caps = DEFAULT_CAPS, opts=None,
                 tol: Optional[float] = None, name: Optional[str] = None,
                 keep_failures: int = 20) -> AxiomReport:
    """Run ``bound`` (an id or a callable on configurations) over ``cases``."""
    if callable(bound):
        fn, label = bound, name or getattr(bound, "__name__", "custom")
        exact = False
    else:
        label = canonical(bound)
        fn = lambda c: evaluate(label, c, caps, opts)  # noqa: E731
        exact = label in EXACT_BOUNDS
    if tol is None:
        tol = 0.0 if exact else BOUND_TOL
    report = AxiomReport(label)
    for case in cases:
        values = [fn(c) for c in case.configs]
        if case_holds(case, values, tol):
            report.passed[case.axiom] += 1
        else:
            report.failed[case.axiom] += 1
            if len(report.failures) < keep_failures:
                report.failures.append((case.axiom, case.relation, case.note, values))
    return report

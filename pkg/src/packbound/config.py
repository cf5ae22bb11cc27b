"""Central tolerances and exact-search caps.

Caps are plain configuration values: every exact routine accepts a
``caps`` argument and raises :class:`~packbound.errors.SizeCapExceeded`
rather than silently approximating.
"""

from dataclasses import dataclass, replace

# conflict iff distance < 2 - GEOM_TOL
GEOM_TOL = 1e-9
# cluster is coverable by an open unit ball iff MEB radius < 1 - COVER_TOL
COVER_TOL = 1e-9
# comparisons between bound values
BOUND_TOL = 1e-5
PSD_TOL = 1e-8


@dataclass(frozen=True)
class Caps:
    alpha: int = 40
    chi: int = 24
    homomorphism: int = 10
    cov: int = 20
    theta: int = 200
    theta_prime: int = 120
    independent_sets: int = 50000
    lasserre_level: int = 3
    lasserre_moments: int = 2000
    sdp_order: int = 2000
    sdp_constraints: int = 20000

    def with_(self, **kw):
        return replace(self, **kw)


DEFAULT_CAPS = Caps()

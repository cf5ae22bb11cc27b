"""Sphere-packing bound functions on graphs and finite point sets."""

from .config import BOUND_TOL, DEFAULT_CAPS, GEOM_TOL, PSD_TOL, Caps
from .errors import (InfeasibleCertificate, InfeasibleInput, InvalidLattice, NotPSD, OutsideComplex,
                     PackboundError, ParseError, QuadratureFailure, SizeCapExceeded, SolverFailure)
from .geometry import PointConfiguration, conflict_graph, cov, cube_mesh, pack
from .graphs import Graph, chromatic_number, clique_number, complement, independence_number
from .lasserre import las_plain, las_prime, las_prime_dual, las_prime_schur
from .theta import ThetaVariant, theta_dual, theta_primal

__version__ = "0.1.0"

"""Exception types shared by all modules."""


class PackboundError(Exception):
    """Base class for library errors."""


class SizeCapExceeded(PackboundError):
    """An exact search was asked to run past its configured size cap."""

    def __init__(self, what, size, cap):
        super().__init__(f"{what}: size {size} exceeds cap {cap}")
        self.what = what
        self.size = size
        self.cap = cap


class SolverFailure(PackboundError):
    """The SDP solver ended with a status other than Optimal."""

    def __init__(self, status, detail=""):
        super().__init__(f"solver status {status}" + (f": {detail}" if detail else ""))
        self.status = status


class InfeasibleInput(PackboundError):
    pass


class NotPSD(PackboundError):
    pass


class OutsideComplex(PackboundError):
    pass


class InfeasibleCertificate(PackboundError):
    """An LP-bound auxiliary function violates one of its conditions."""

    def __init__(self, condition, location, margin):
        super().__init__(f"{condition} violated at {location:.6g} (margin {margin:.3e})")
        self.condition = condition
        self.location = location
        self.margin = margin


class QuadratureFailure(PackboundError):
    pass


class InvalidLattice(PackboundError):
    pass


class ParseError(PackboundError):
    pass

class XdmtError(Exception):
    pass


class DomainError(XdmtError, ValueError):
    """An argument lies outside the domain of the requested quantity."""


class NearSingularChannel(XdmtError):
    """Channel inversion was requested on an ill-conditioned matrix.

    Happens with probability zero for continuous fading; Monte Carlo callers
    skip the draw and count it.
    """


class InfeasibleProblem(XdmtError):
    pass


class InsufficientData(XdmtError):
    pass

from xdmt.errors import (
    XdmtError,
    DomainError,
    NearSingularChannel,
    InfeasibleProblem,
    InsufficientData,
)

__version__ = '0.1.0'

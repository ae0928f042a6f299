"""Exception types shared across the library."""


class PolaritonChainError(Exception):
    """Base class for all library errors."""


class PoleAtResonance(PolaritonChainError):
    """Momentum hit the dispersion pole at +-k0d (cotangent divergence)."""


class PoleInACoeff(PolaritonChainError):
    """cos(qd) == cos(pd): the interaction coefficient a(q, p) diverges."""


class DegenerateQuadratic(PolaritonChainError):
    """Both roots of the degeneracy quadratic coincide; the partner momentum
    cannot be separated from the input momentum."""


class DegenerateDenominator(PolaritonChainError):
    """Denominator of the K=0 transmission amplitude vanished."""


class RequiresNonChiral(PolaritonChainError):
    """Operation is only defined for gamma_r == gamma_l."""


class ModeOutOfRange(PolaritonChainError):
    """Standing-wave mode index places kd outside the safe window."""


class SizeLimit(PolaritonChainError):
    """Requested finite chain exceeds the supported size for its sector."""


class EigenFailure(PolaritonChainError):
    """Dense eigendecomposition did not converge."""


class BoundaryContamination(PolaritonChainError):
    """Wavepacket norm reached the chain ends before measurement."""


class ConsistencyError(PolaritonChainError):
    """An internal identity was violated beyond its clamping window,
    signalling formula misuse (for example probabilities far outside [0, 1])."""

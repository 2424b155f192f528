"""Semantic exception hierarchy.

Every public operation raises one of these instead of bare ValueError so the
CLI can map a failure to a stable machine-readable error code (the class
name).
"""


class WcsError(Exception):
    """Base class for all toolkit errors."""


class EmptyInput(WcsError, ValueError):
    """A scenario, demand sample or dataset with zero atoms."""


class LengthMismatch(WcsError, ValueError):
    """Cost and probability vectors of different lengths."""


class NonPositiveProbability(WcsError, ValueError):
    """Some p_i <= 0 (or non-finite); atoms with zero mass are rejected, not dropped."""


class ProbSumMismatch(WcsError, ValueError):
    """Probabilities do not sum to one within 1e-12; renormalization is refused."""


class NonFiniteCost(WcsError, ValueError):
    """NaN or infinite entries in a cost vector."""


class KappaOutOfRange(WcsError, ValueError):
    """n*(1-alpha) outside (0, n) in the CVaR/standard-deviation constant."""


class EpsOutOfRange(WcsError, ValueError):
    """Set size outside the family's admissible range."""


class NoBracket(WcsError, RuntimeError):
    """Outer dual root-finding could not bracket a sign change."""


class UnboundedRatio(WcsError, ValueError):
    """A transport ratio oracle reported +inf (cost not Lipschitz)."""


class ResolutionTooCoarse(WcsError, ValueError):
    """Simplex grid step too large relative to min(p)."""


class NonMonotoneEstimates(WcsError, RuntimeError):
    """Finite-difference sensitivity quotients increased; upstream concavity bug."""


class NonConvergence(WcsError, RuntimeError):
    """Iterative solver hit its iteration cap before meeting tolerance."""

"""Error taxonomy shared across the package."""


class ExlabError(Exception):
    pass


class UnknownModel(ExlabError):
    """Catalog lookup with a name that is not in the catalog."""


class InvalidRates(ExlabError):
    """Model parameters outside their stochastic/validity range."""


class InvalidLabels(ExlabError):
    """Boundary family labels violate their ordering constraints."""


class PoleAtPoint(ExlabError):
    """Evaluation of a rational function at a zero of its denominator."""


class PoleAtSample(ExlabError):
    """An integrability check hit a pole at one of its sample points."""


class DegenerateKernel(ExlabError):
    """Kernel dimension of a generator is not 1 (reducible dynamics)."""


class NoConvergence(ExlabError):
    """Iterative eigenvalue solver failed to reach the target residual."""


class ModelLacksBoundary(ExlabError):
    """Open-geometry assembly requested for a model without boundary data."""


class NotHecke(ExlabError):
    """Baxterisation input does not satisfy the quadratic relation."""


class NonTerminatingRewrite(ExlabError):
    """Word rewriting exceeded its step budget without reaching normal form."""


class EmptySector(ExlabError):
    """Requested particle-number sector contains no configuration."""


class DeterminantSingular(ExlabError):
    """Bialternant determinant vanished at a degenerate spectral point."""


class NonPolynomialResult(ExlabError):
    """A Hecke operator application left a nonzero remainder."""


class ConvergenceDomainViolation(ExlabError):
    """Requested parameters lie outside the convergence domain of the sums."""


class TruncationInsufficient(ExlabError):
    """Oscillator truncation too small for the requested tail bound."""


class NotW0Invariant(ExlabError):
    """Polynomial is not invariant under the signed permutation group."""


class ShootingFailure(ExlabError):
    """Boundary-value shooting for the auxiliary profile did not bracket."""


class BoundaryOfPhase(ExlabError):
    """Requested point sits on (or too close to) a phase transition line."""

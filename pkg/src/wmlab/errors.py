"""Exception types shared across the lab."""


class LabError(Exception):
    """Base class for all wmlab errors."""


# -- space forms ---------------------------------------------------------

class DomainError(LabError):
    """Input outside the geometric domain of validity."""


class AntipodalPoint(DomainError):
    """Log map requested at or beyond the cut locus of a round sphere."""


# -- densities / curvature params ----------------------------------------

class InvalidParams(LabError):
    """Bakry-Emery parameters inconsistent with the density."""


# -- meshes ---------------------------------------------------------------

class DegenerateInput(LabError):
    """Generator sizes below the supported minimum."""


class DegenerateCell(LabError):
    """A simplex too distorted for stable operator assembly."""


class ParseError(LabError):
    """Mesh file could not be parsed; carries a line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InvalidTopology(LabError):
    """Mesh connectivity violates the simplicial-complex invariants."""


# -- operators / solvers ---------------------------------------------------

class NonTangent(LabError):
    """Vector field handed to the divergence is not tangent to the mesh."""


class SolverStall(LabError):
    """Eigensolver failed to converge; carries the best residual seen."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ZeroFunction(LabError):
    """Function vanishes after projection against constants."""


class SingularSystem(LabError):
    """Linear solve failed; signals a broken mesh."""


class MissingLabels(LabError):
    """Mixed boundary-value solve requires labeled boundary parts."""


# -- inequality checks ------------------------------------------------------

class HypothesisFailed(LabError):
    """A theorem hypothesis fails on the given scenario.

    Not a bug: the inequality is simply not asserted.  Carries the
    offending vertex index when the failure is pointwise.
    """

    def __init__(self, message, vertex=None, flag=None):
        super().__init__(message)
        self.vertex = vertex
        self.flag = flag


class NotCMC(LabError):
    """Weighted mean curvature is not constant on the hypersurface."""


class NonConvexCone(LabError):
    """Cone opening angle exceeds pi; the cone comparison needs convexity."""


class NoConvergence(LabError):
    """Fixed-point iteration did not converge; carries the last residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class OutOfBall(LabError):
    """Submanifold not contained in the required geodesic ball."""


class WrongCurvatureSign(LabError):
    """Check invoked with a curvature bound of the wrong sign."""


class NotNearEquality(LabError):
    """Equality diagnostic invoked on a run that is not near equality."""


class NoRoot(LabError):
    """Bisection bracket failed to contain a root."""


class ConfigError(LabError):
    """Scenario configuration is invalid."""

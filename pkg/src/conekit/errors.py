"""Exception hierarchy shared across the toolkit.

Analysis failures that a caller is expected to handle (empty samples,
bounded sets, non-convergence) derive from :class:`AnalysisError` so the
CLI can map them onto exit code 1 with a machine-readable error field.
Programming/contract errors (dimension mismatches and friends) derive
from :class:`ContractError` and are ordinary bugs when they escape.
"""

from __future__ import annotations


class ConekitError(Exception):
    """Base class for all toolkit errors."""

    @property
    def kind(self) -> str:
        return type(self).__name__


class ContractError(ConekitError):
    """A precondition on inputs was violated."""


class AmbientMismatch(ContractError):
    """Vectors or subspaces live in different ambient dimensions."""


class DimensionMismatch(ContractError):
    """Subspaces of unequal dimension where equal dimension is required."""


class ZeroDimensional(ContractError):
    """An operation needs a subspace of dimension at least one."""


class Degenerate(ContractError):
    """A moment matrix had lower numerical rank than the requested fit."""


class UnsupportedQuery(ContractError):
    """The set representation cannot answer this query as posed."""


class GuardBoundary(ContractError):
    """Evaluation point sits on a piecewise guard boundary; one-sided
    derivatives must not be trusted there."""


class NotOnSet(ContractError):
    """The supplied point does not satisfy the membership test."""


class SingularPoint(ContractError):
    """Tangent-space request at a point failing the regularity test."""


class AnalysisError(ConekitError):
    """Recoverable analysis failure (exit code 1 at the CLI boundary)."""


class NoConvergence(AnalysisError):
    """Gauss-Newton projection failed to reach the membership tolerance."""


class InequalityViolated(AnalysisError):
    """A projected point converged outside the inequality region."""


class EmptySample(AnalysisError):
    """Sampling produced too few on-set points at the requested scale."""


class NoRegularPoints(AnalysisError):
    """No sampled point passed the regular-point test at any scale."""


class BoundedSet(AnalysisError):
    """Far-field sampling found nothing; the set looks bounded."""


class DisconnectedGraph(AnalysisError):
    """The neighbor graph split into components even after widening k."""


class UsageError(ConekitError):
    """Bad command-line invocation (exit code 2)."""

"""Exception hierarchy for the pastel package.

Every error raised by the library derives from :class:`PastelError` so that
callers (and the CLI) can map failures onto the two broad classes they care
about: bad input versus numerical breakdown.
"""

from __future__ import annotations


class PastelError(Exception):
    """Base class for all library errors."""


class InvalidInputError(PastelError):
    """Base class for errors caused by malformed or inconsistent input."""


class NumericalError(PastelError):
    """Base class for errors caused by numerical breakdown at run time."""


# ---------------------------------------------------------------- numerics

class SingularMatrix(NumericalError):
    """A pivot underflowed the singularity threshold during elimination."""


class InfeasibleTransport(InvalidInputError):
    """Total source and sink mass of a transport problem do not match."""


class NonFiniteGradient(NumericalError):
    """A gradient passed to the optimizer contains NaN or Inf entries."""


# ------------------------------------------------------------------- graph

class InvalidParams(InvalidInputError):
    """Generator or configuration parameters violate their constraints."""


class EmptyGraph(InvalidInputError):
    """The operation requires at least one edge."""


class ParseError(InvalidInputError):
    """A graph file could not be parsed.

    Carries the offending file and 1-based line number.
    """

    def __init__(self, path: str, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


class InconsistentNodeCount(InvalidInputError):
    """Edge, feature and label files disagree on the number of nodes."""


class InsufficientClassMembers(InvalidInputError):
    """A class has fewer members than the requested labels per class."""


# ----------------------------------------------------------------- metrics

class NotAnEdge(InvalidInputError):
    """Curvature was requested for a node pair that is not an edge."""


class DegenerateDiameter(InvalidInputError):
    """The reaching coefficient needs a graph diameter of at least 2."""


class NoReachablePairs(InvalidInputError):
    """No unlabeled node can reach any same-class anchor."""


# --------------------------------------------------------------------- gpr

class EmptyAnchorSet(InvalidInputError):
    """Every class must have at least one labeled anchor node."""


class ZeroRow(NumericalError):
    """A label-influence row sums to (numerically) zero."""


# --------------------------------------------------------------------- gnn

class ShapeMismatch(InvalidInputError):
    """Operand shapes are inconsistent."""


class NoLabeledNodes(InvalidInputError):
    """The classification loss needs at least one labeled node."""


class EmptyMask(InvalidInputError):
    """An evaluation mask selects no nodes."""


class ConsumedTape(PastelError):
    """A forward tape was reused after its backward pass."""


# ----------------------------------------------------------------- trainer

class DivergedLoss(NumericalError):
    """The training loss became NaN or Inf."""

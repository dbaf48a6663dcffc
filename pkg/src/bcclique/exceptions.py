class BCCliqueError(Exception):
    """Base class for all errors raised by the package.
    """
    pass


# simulator

class PayloadTooLarge(BCCliqueError, ValueError):
    pass


class DuplicateBroadcast(BCCliqueError, ValueError):
    """A vertex tried to fill its single payload slot twice in one round.
    """
    pass


# graphs and linear algebra

class NegativeWeight(BCCliqueError, ValueError):
    pass


class DimensionMismatch(BCCliqueError, ValueError):
    pass


class NullSpaceMismatch(BCCliqueError, ValueError):
    """The sparsifier lost connectivity that the original graph had.
    """
    pass


class NotInRange(BCCliqueError, ValueError):
    pass


class BadDemand(NotInRange):
    """Demand vector does not sum to zero on some connected component.
    """
    pass


class NotSDD(BCCliqueError, ValueError):
    pass


class NoConvergence(BCCliqueError, RuntimeError):
    pass


class BadPreconditioner(BCCliqueError, ValueError):
    """The sparsifier handed to the solver is not a (1 +- 1/2) approximation.
    """
    pass


# interior point method

class OutOfDomain(BCCliqueError, ValueError):
    def __init__(self, message, coordinate=None):
        super().__init__(message)
        # first offending coordinate
        self.coordinate = coordinate


class InsufficientBits(BCCliqueError, ValueError):
    pass


class RankDeficient(BCCliqueError, ValueError):
    pass


class BadInitialWeight(BCCliqueError, ValueError):
    pass


class ZeroObjective(BCCliqueError, ValueError):
    pass


class LeftDomain(BCCliqueError, RuntimeError):
    pass


class Infeasible(BCCliqueError, ValueError):
    pass


# flows

class DisconnectedGraph(BCCliqueError, ValueError):
    pass


class RoundingInfeasible(BCCliqueError, RuntimeError):
    pass


class RetriesExhausted(BCCliqueError, RuntimeError):
    pass


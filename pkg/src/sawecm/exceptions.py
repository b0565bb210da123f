"""Exception hierarchy for cubature construction."""


class CubatureError(Exception):
    """Base class for all errors raised by :mod:`sawecm`."""


class ZeroMatrix(CubatureError, ValueError):
    pass


class NonpositiveWeight(CubatureError, ValueError):
    pass


class AlreadyContained(CubatureError):
    """The constant vector already lies in the span of the basis."""


class ZeroRow(CubatureError, ValueError):
    pass


class SingularGram(CubatureError):
    """Adding or removing rows left a (numerically) singular Gram matrix."""


class NoConvergence(CubatureError):
    """The greedy selection ran out of candidates before completing the rule.

    ``subspace`` is set when the failure happened inside a multi-subspace run.
    """

    def __init__(self, message, subspace=None):
        if subspace is not None:
            message = f"subspace {subspace}: {message}"
        super().__init__(message)
        self.subspace = subspace


class NotOptimal(CubatureError):
    pass


class IllPosedBlock(CubatureError, ValueError):
    """A subspace block has (near) zero integrals; augment its basis first."""


class DegenerateWindow(CubatureError, ValueError):
    pass


class ParseError(CubatureError, ValueError):
    pass

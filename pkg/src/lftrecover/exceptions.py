"""Exception hierarchy shared by every module of the package."""


class LftRecoverError(Exception):
    """Base class for all errors raised by :mod:`lftrecover`."""


class NumericalError(LftRecoverError):
    """A dense factorization (SVD, solve) failed or produced non-finite values."""


class SizeError(LftRecoverError):
    """A requested matrix would be too large to allocate."""


class DimensionMismatch(LftRecoverError, ValueError):
    """Matrix blocks have incompatible shapes.

    The message names the offending block whenever one is known.
    """

    def __init__(self, message, block=None):
        super().__init__(message)
        self.block = block


class SharedEigenvalue(LftRecoverError):
    """``A`` and ``Xi`` share an eigenvalue, so the Sylvester equation is singular."""


class IllPosed(LftRecoverError):
    """``I - P(theta) D_zv`` is singular at the requested parameter value."""


class SingularResolvent(LftRecoverError):
    """``s I - A`` is singular at the requested evaluation point."""


class DimensionOrder(LftRecoverError):
    """The state dimension is smaller than the interpolation order (``m_x < m_xi``).

    Handling that case requires splitting ``Xi`` into smaller diagonal blocks,
    which this package does not implement.
    """


class InapplicableCase(LftRecoverError):
    """The structural hypothesis of a special-case rank test does not hold."""


class NonFinite(LftRecoverError):
    """An iterate became NaN or infinite; ``state`` holds the last finite iterate."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class ParseError(LftRecoverError, ValueError):
    """A configuration document is not valid JSON or lacks a required field.

    ``field`` names the offending entry when one is known.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field

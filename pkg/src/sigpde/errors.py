"""Exception hierarchy shared across the package.

Every error raised by this package derives from :class:`SigPdeError` so
callers can catch one type.  The two concrete classes map onto the CLI
exit codes: bad input is exit code 2, numerical failure is exit code 3.
"""


class SigPdeError(Exception):
    """Base class for all errors raised by this package."""


class InputError(SigPdeError):
    """Malformed or out-of-contract input (CLI exit code 2)."""


class NumericalError(SigPdeError):
    """A computation failed numerically (CLI exit code 3)."""

"""Exception hierarchy shared by all modules."""


class DNSGDError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(DNSGDError, ValueError):
    pass


class NotPositiveDefinite(DNSGDError, ArithmeticError):
    """A Cholesky pivot fell at or below the pivot tolerance."""

    def __init__(self, message, pivot_index=None, pivot=None):
        super().__init__(message)
        self.pivot_index = pivot_index
        self.pivot = pivot


class EmptyMatrix(DNSGDError, ValueError):
    pass


class EmptyBatch(DNSGDError, ValueError):
    pass


class WrongActivation(DNSGDError, ValueError):
    pass


class NonFiniteLoss(DNSGDError, ArithmeticError):
    """Loss evaluation overflowed or hit log(0).

    ``log`` and ``params`` are attached by the trainer when a run is aborted,
    so the caller still gets the metrics recorded up to that point.
    """

    def __init__(self, message, log=None, params=None):
        super().__init__(message)
        self.log = log
        self.params = params


class ParseError(DNSGDError, ValueError):
    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class MissingColumn(DNSGDError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "missing column"


class EmptyFile(DNSGDError, ValueError):
    pass


class BatchTooLarge(DNSGDError, ValueError):
    pass


class BadSplitSize(DNSGDError, ValueError):
    pass


class ConfigError(DNSGDError, ValueError):
    pass

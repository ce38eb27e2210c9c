"""Exception hierarchy shared by all modules."""


class QWTransferError(Exception):
    """Base class for errors raised by this package."""


class InvalidArgumentError(QWTransferError, ValueError):
    """An argument is outside the accepted domain."""


class KindMismatchError(InvalidArgumentError):
    """State vectors and density matrices were mixed in one operation."""


class ZeroProbabilityBranchError(QWTransferError):
    """A projection selected a branch with (numerically) zero weight."""


class UnsupportedEncodingError(InvalidArgumentError):
    """The cycle size cannot be encoded on a qubit register."""


class UndefinedBranchError(InvalidArgumentError):
    """A measurement branch has no correction assigned to it."""


class ContractViolationError(QWTransferError):
    """A numerical invariant (unitarity, trace preservation, ...) failed."""


class UnderdeterminedError(QWTransferError):
    """Tomographic data do not determine the estimate uniquely."""


class ConfigError(QWTransferError):
    """A configuration file or run setting is malformed or incomplete."""
